//! Coefficient tables behind the kernels: Wallis integrals `B_j`, the Taylor
//! coefficients `A_n` of `Ω`, the positive-series form of `Ω` used for
//! evaluation, and the Laguerre-series coefficients `C_l`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::special::{ln_factorial, ln_gamma};
use crate::numeric::{DoubleDouble, NeumaierSum, Quadrature};

const PI_DD: DoubleDouble = DoubleDouble::new_const(PI, 1.224_646_799_147_353_2e-16);

/// Largest `l` for which `C_l` comes from the alternating sum.
pub const C_SERIES_MAX_L: usize = 30;
/// Window on which both `C_l` representations are compared.
pub const C_OVERLAP: std::ops::RangeInclusive<usize> = 25..=35;
const C_OVERLAP_TOL: f64 = 1e-8;

/// `Ω` is tabulated by its positive series up to this `ρ²`; beyond it the
/// leading asymptote is used.
pub const OMEGA_TAU_MAX: f64 = 60.0;

fn wallis_dd(j: usize) -> DoubleDouble {
    // B_j = (j−1)/j · B_{j−2}
    let even = j.is_multiple_of(2);
    let mut b = if even { PI_DD } else { DoubleDouble::from(2.0) };
    let mut i = if even { 2 } else { 3 };
    while i <= j {
        b = b * (i as f64 - 1.0) / i as f64;
        i += 2;
    }
    b
}

/// `B_j = ∫₀^π sin^j φ dφ = √π Γ((j+1)/2) / Γ((j+2)/2)`.
pub fn wallis(j: usize) -> f64 {
    if j <= 4096 {
        wallis_dd(j).to_f64()
    } else {
        (0.5 * PI.ln() + ln_gamma((j as f64 + 1.0) / 2.0) - ln_gamma(j as f64 / 2.0 + 1.0)).exp()
    }
}

fn a_coefficients_dd(k: usize, n_max: usize) -> Vec<DoubleDouble> {
    let mut a: Vec<DoubleDouble> = (0..=n_max).map(|n| wallis_dd(2 * n) * 2.0).collect();
    for kk in 3..=k {
        let prev = a;
        a = (0..=n_max)
            .map(|n| {
                let mut binom = DoubleDouble::ONE;
                let mut acc = DoubleDouble::ZERO;
                for (l, al) in prev.iter().enumerate().take(n + 1) {
                    acc += binom * *al;
                    binom = binom * (n - l) as f64 / (l + 1) as f64;
                }
                wallis_dd(2 * n + kk - 2) * acc
            })
            .collect();
    }
    a
}

/// Taylor coefficients `A_0 … A_{n_max}` of `e^{ρ²} Ω^{(k)}(ρ²) = Σ (−1)^n A_n ρ^{2n}/n!`.
pub fn a_coefficients(k: usize, n_max: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "A_n recurrence needs k >= 2, got {k}"
        )));
    }
    Ok(a_coefficients_dd(k, n_max).into_iter().map(DoubleDouble::to_f64).collect())
}

/// Alternating Taylor sum for `Ω^{(k)}(ρ²)`, compensated.
///
/// Terms reach `~e^{(k−1)ρ²}` before cancelling, so this is only usable for
/// moderate `(k−1)ρ²`; an error is returned once more than eight digits
/// would be lost.
pub fn omega_taylor(k: usize, rho_sq: f64) -> Result<f64> {
    if k == 1 {
        return Ok(2.0 * (-rho_sq).exp());
    }
    let y = (k as f64 - 1.0) * rho_sq;
    let n_max = (3.0 * y + 40.0).ceil() as usize;
    let a = a_coefficients(k, n_max)?;
    let mut acc = NeumaierSum::new();
    let mut biggest: f64 = 0.0;
    let mut pow = 1.0;
    let mut last = f64::INFINITY;
    for (n, an) in a.iter().enumerate() {
        if n > 0 {
            pow *= rho_sq / n as f64;
        }
        let t = if n % 2 == 0 { an * pow } else { -an * pow };
        acc.add(t);
        biggest = biggest.max(t.abs());
        last = t.abs();
        if n > 2 && last < 1e-18 * acc.value().abs() {
            break;
        }
    }
    let sum = acc.value();
    if last > 1e-14 * sum.abs() || biggest > 1e8 * sum.abs() {
        return Err(Error::SeriesNotConverged {
            what: "alternating Taylor series for omega",
            terms: a.len(),
            last,
        });
    }
    Ok((-rho_sq).exp() * sum)
}

/// Positive series for the hyperspherical angular integral:
///
/// `e^{ρ²} Ω^{(k)}(ρ²) = e^{−x} Σ_n c_n x^n`, `x = (k−1)ρ²`,
/// `c_n = 2π^{k/2} e_n / Γ(n + k/2)`, where `e_n` are the power-series
/// coefficients of `Π_j (1 − λ v_j)^{−1/2}`, `v_j = (k−j)/(k−1)`.
/// Every term is positive, so the sum is accurate for all `ρ²`.
#[derive(Clone, Debug)]
pub struct OmegaSeries {
    k: usize,
    ln_c: Vec<f64>,
    ratio: Vec<f64>,
    x_max: f64,
}

impl OmegaSeries {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "moment order must be positive");
        if k == 1 {
            return Self {
                k,
                ln_c: vec![2f64.ln()],
                ratio: Vec::new(),
                x_max: f64::INFINITY,
            };
        }
        let kf = k as f64;
        let x_max = (kf - 1.0) * OMEGA_TAU_MAX;
        let len = (x_max + 10.0 * x_max.sqrt() + 60.0).ceil() as usize;
        let v: Vec<f64> = (1..k).map(|j| (k - j) as f64 / (kf - 1.0)).collect();
        // log-derivative: (n+1) e_{n+1} = Σ_m p_m e_{n−m}, p_m = ½ Σ_j v_j^{m+1}
        let mut powers = v.clone();
        let mut p = Vec::with_capacity(len);
        for _ in 0..len {
            p.push(0.5 * powers.iter().sum::<f64>());
            for (pw, vj) in powers.iter_mut().zip(&v) {
                *pw *= vj;
            }
        }
        let mut e = Vec::with_capacity(len);
        e.push(1.0);
        for n in 0..len - 1 {
            let s: f64 = (0..=n).map(|m| p[m] * e[n - m]).sum();
            e.push(s / (n + 1) as f64);
        }
        let ln_front = 2f64.ln() + 0.5 * kf * PI.ln();
        let ln_c: Vec<f64> = e
            .iter()
            .enumerate()
            .map(|(n, en)| ln_front + en.ln() - ln_gamma(n as f64 + 0.5 * kf))
            .collect();
        let ratio = (0..len - 1)
            .map(|n| e[n + 1] / e[n] / (n as f64 + 0.5 * kf))
            .collect();
        Self { k, ln_c, ratio, x_max }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `ln(e^{ρ²} Ω^{(k)}(ρ²))`.
    pub fn ln_scaled(&self, rho_sq: f64) -> f64 {
        if self.k == 1 {
            return self.ln_c[0];
        }
        let kf = self.k as f64;
        let x = (kf - 1.0) * rho_sq;
        if x == 0.0 {
            return self.ln_c[0];
        }
        if x > self.x_max {
            return asymptotic_constant_exact(self.k).ln() + 0.5 * (1.0 - kf) * rho_sq.ln();
        }
        let last = self.ratio.len();
        let n0 = ((x - 0.5 * kf).round().max(0.0) as usize).min(last);
        let mut acc = 1.0;
        let mut t = 1.0;
        let mut n = n0;
        while n < last {
            let step = self.ratio[n] * x;
            t *= step;
            n += 1;
            acc += t;
            if step < 1.0 && t < 1e-17 * acc {
                break;
            }
        }
        t = 1.0;
        n = n0;
        while n > 0 {
            let step = self.ratio[n - 1] * x;
            t /= step;
            n -= 1;
            acc += t;
            if step > 1.0 && t < 1e-17 * acc {
                break;
            }
        }
        -x + self.ln_c[n0] + n0 as f64 * x.ln() + acc.ln()
    }

    /// `Ω^{(k)}(ρ²)`.
    pub fn value(&self, rho_sq: f64) -> f64 {
        (self.ln_scaled(rho_sq) - rho_sq).exp()
    }

    /// `ln G(ρ²)` with `G = ρ^{k−1} e^{ρ²} Ω^{(k)}(ρ²)`, bounded and tending to `C_k`.
    pub fn ln_g(&self, rho_sq: f64) -> f64 {
        if self.k == 1 {
            return self.ln_c[0];
        }
        if rho_sq == 0.0 {
            return f64::NEG_INFINITY;
        }
        0.5 * (self.k as f64 - 1.0) * rho_sq.ln() + self.ln_scaled(rho_sq)
    }
}

/// Exact large-`ρ` constant: `Ω^{(k)}(ρ²) ~ C_k ρ^{1−k} e^{−ρ²}` with
/// `C_k = 2 π^{(k−1)/2} / √((k−1)!)`.
pub fn asymptotic_constant_exact(k: usize) -> f64 {
    (2f64.ln() + 0.5 * (k as f64 - 1.0) * PI.ln() - 0.5 * ln_factorial(k - 1)).exp()
}

/// Least-squares fit of `ρ^{k−1} e^{ρ²} Ω ≈ Ĉ_k + b/ρ²` on a window of `ρ²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticFit {
    pub k: usize,
    pub fitted: f64,
    pub slope: f64,
    pub exact: f64,
    pub window: (f64, f64),
}

pub fn fit_asymptotic_constant(series: &OmegaSeries, window: (f64, f64)) -> AsymptoticFit {
    let n = 41;
    let (mut s1, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let tau = window.0 + (window.1 - window.0) * i as f64 / (n - 1) as f64;
        let g = series.ln_g(tau).exp();
        let u = 1.0 / tau;
        s1 += 1.0;
        sx += u;
        sxx += u * u;
        sy += g;
        sxy += u * g;
    }
    let det = s1 * sxx - sx * sx;
    let fitted = (sxx * sy - sx * sxy) / det;
    let slope = (s1 * sxy - sx * sy) / det;
    AsymptoticFit {
        k: series.k(),
        fitted,
        slope,
        exact: asymptotic_constant_exact(series.k()),
        window,
    }
}

/// `C_l` by the alternating binomial sum `Σ_n (−1)^n C(l,n) / √((n+1)…(n+k))`
/// in double-double arithmetic.
pub fn c_alternating(k: usize, l: usize) -> f64 {
    let mut acc = DoubleDouble::ZERO;
    let mut binom = DoubleDouble::ONE;
    for n in 0..=l {
        let mut prod = DoubleDouble::ONE;
        for i in 1..=k {
            prod = prod * (n + i) as f64;
        }
        let w = binom / prod.sqrt();
        acc = if n % 2 == 0 { acc + w } else { acc - w };
        binom = binom * (l - n) as f64 / (n + 1) as f64;
    }
    acc.to_f64()
}

/// `C_l = π^{−k/2} ∫₀^∞ ρ^{k−1} Ω^{(k)}(ρ²) (1 − e^{−ρ²})^l dρ`.
pub fn c_integral(series: &OmegaSeries, l: usize) -> Result<f64> {
    let k = series.k() as f64;
    let ln_front = -0.5 * k * PI.ln();
    let lf = l as f64;
    let f = |rho: f64| {
        let t = rho * rho;
        if t == 0.0 {
            return if l == 0 && series.k() == 1 { (ln_front + series.ln_g(0.0)).exp() } else { 0.0 };
        }
        let ln_z = if l == 0 { 0.0 } else { lf * (-(-t).exp_m1()).ln() };
        (ln_front + series.ln_g(t) - t + ln_z).exp()
    };
    Quadrature::with_rel_tol(1e-13)
        .abs_tol(1e-300)
        .integrate_to_infinity(f, 0.0, 1.0)
        .map(|i| i.value)
        .map_err(Error::quad("C_l integral"))
}

/// `C_0 … C_{l_max}`: alternating sum up to `l = 30`, integral beyond; the two
/// are cross-checked on `l ∈ [25, 35]`.
pub fn c_coefficients(k: usize, l_max: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidArgument("moment order must be positive".into()));
    }
    let series = OmegaSeries::new(k);
    c_coefficients_with(&series, l_max)
}

pub(crate) fn c_coefficients_with(series: &OmegaSeries, l_max: usize) -> Result<Vec<f64>> {
    let k = series.k();
    let mut out: Vec<f64> = (0..=l_max.min(C_SERIES_MAX_L)).map(|l| c_alternating(k, l)).collect();
    if l_max > C_SERIES_MAX_L {
        check_overlap(series)?;
        let tail: Result<Vec<f64>> = (C_SERIES_MAX_L + 1..=l_max)
            .into_par_iter()
            .map(|l| c_integral(series, l))
            .collect();
        out.extend(tail?);
    }
    Ok(out)
}

pub(crate) fn check_overlap(series: &OmegaSeries) -> Result<()> {
    let k = series.k();
    C_OVERLAP
        .into_par_iter()
        .map(|l| {
            let s = c_alternating(k, l);
            let i = c_integral(series, l)?;
            if (s - i).abs() > C_OVERLAP_TOL * i.abs() {
                Err(Error::CoefficientMismatch { l, series: s, integral: i })
            } else {
                Ok(())
            }
        })
        .collect()
}

/// Immutable coefficient tables for one moment order.
#[derive(Clone, Debug)]
pub struct CoefficientCache {
    pub k: usize,
    pub a_coeffs: Vec<f64>,
    pub c_coeffs: Vec<f64>,
    pub b_values: Vec<f64>,
}

impl CoefficientCache {
    pub fn build(k: usize, n_max: usize, l_max: usize) -> Result<Self> {
        let a_coeffs = if k == 1 {
            let mut a = vec![0.0; n_max + 1];
            a[0] = 2.0;
            a
        } else {
            a_coefficients(k, n_max)?
        };
        Ok(Self {
            k,
            a_coeffs,
            c_coeffs: c_coefficients(k, l_max)?,
            b_values: (0..=2 * n_max + k).map(wallis).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wallis_values() {
        assert_eq!(wallis(0), PI);
        assert_eq!(wallis(1), 2.0);
        assert!((wallis(2) - PI / 2.0).abs() < 1e-16);
        assert!((wallis(3) - 4.0 / 3.0).abs() < 1e-16);
        let lg = (0.5 * PI.ln() + ln_gamma(51.0 / 2.0) - ln_gamma(26.0)).exp();
        assert!((wallis(50) - lg).abs() < 1e-13 * lg);
    }

    #[test]
    fn first_a_coefficients() {
        let a2 = a_coefficients(2, 3).unwrap();
        assert!((a2[0] - 2.0 * PI).abs() < 1e-15);
        assert!((a2[1] - PI).abs() < 1e-15);
        let a3 = a_coefficients(3, 2).unwrap();
        assert!((a3[0] - 4.0 * PI).abs() < 1e-14);
        assert!(a_coefficients(1, 3).is_err());
    }

    #[test]
    fn small_c_coefficients() {
        assert!((c_alternating(1, 0) - 1.0).abs() < 1e-16);
        assert!((c_alternating(1, 1) - (1.0 - 1.0 / 2f64.sqrt())).abs() < 1e-16);
        assert!((c_alternating(3, 0) - 1.0 / 6f64.sqrt()).abs() < 1e-16);
    }

    #[test]
    fn omega_at_origin_is_sphere_area() {
        for k in 1..6 {
            let s = OmegaSeries::new(k);
            let area = 2.0 * PI.powf(k as f64 / 2.0) / ln_gamma(k as f64 / 2.0).exp();
            assert!((s.value(0.0) - area).abs() < 1e-13 * area, "k={k}");
        }
    }

    #[test]
    fn taylor_and_positive_series_agree() {
        for k in 2..6 {
            let s = OmegaSeries::new(k);
            for t in [0.1, 0.7, 1.5, 2.5] {
                let a = omega_taylor(k, t).unwrap();
                let b = s.value(t);
                assert!((a - b).abs() < 1e-11 * b, "k={k} t={t} {a} {b}");
            }
        }
    }

    #[test]
    fn table_edge_switches_to_asymptote_smoothly() {
        let s = OmegaSeries::new(3);
        let inside = s.ln_g(OMEGA_TAU_MAX * 0.999);
        let outside = s.ln_g(OMEGA_TAU_MAX * 1.001);
        assert!((inside - outside).abs() < 1e-2);
    }
}
