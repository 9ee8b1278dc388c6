//! Evaluators for the sampling kernel `K_k(r; s)`.
//!
//! * `s > −1`: Laguerre series `r^k Σ_l q^l C_l L_l^k(x)` (`q = (1−s)/2`,
//!   `x = 2r²/(1−s)`) where it is well conditioned, otherwise the radial
//!   integral
//!   `K = r^k 2^{k+1} π^{−k/2} ∫₀^∞ dρ ρ^{k−1} Ω(ρ²) D^{−k−1} exp(−2(1−e^{−ρ²}) r²/D)`
//!   with `D = 1 + s + (1−s) e^{−ρ²}`.
//! * `s = −1`: `K = (2π^{k/2} r^k)^{−1} ∫₀^∞ G(τ) τ^{−1/2} (t + r²)^{k−1} e^{−t} dt`
//!   with `τ = ln(1 + t/r²)` and `G(τ) = τ^{(k−1)/2} e^τ Ω(τ)`; the substitution
//!   `t = u²` removes the endpoint singularity.
//! * `0 < s < 1`: the alternating Laguerre series in `4r²/(1−s²)`, summed in
//!   multiprecision arithmetic because it cancels heavily at large `r`.

use std::f64::consts::{LN_2, PI};
use std::sync::{Arc, RwLock};

use astro_float::{BigFloat, RoundingMode, Sign};

use super::coefficients::{c_alternating, c_integral, check_overlap, OmegaSeries, C_SERIES_MAX_L};
use crate::error::{Error, Result};
use crate::numeric::special::{laguerre_sequence_dd, ln_binomial, ln_factorial};
use crate::numeric::{DoubleDouble, Quadrature};

/// Where the hybrid evaluator switches from the Laguerre series to quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwitchThresholds {
    /// Largest Laguerre argument `2r²/(1−s)` handled by the series.
    pub max_x: f64,
    /// Largest series ratio `(1−s)/2`.
    pub max_ratio: f64,
    /// Largest admissible ratio between the summed term magnitudes and the
    /// leading small-`r` term; bounds the digits lost to cancellation.
    pub max_loss: f64,
    /// Series truncation limit.
    pub l_max: usize,
}

impl Default for SwitchThresholds {
    fn default() -> Self {
        Self {
            max_x: 30.0,
            max_ratio: 0.9,
            max_loss: 1e4,
            l_max: 500,
        }
    }
}

/// Which representation produced a kernel value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelMethod {
    Series,
    Quadrature,
    LogQuadrature,
}

/// Kernel evaluator for one moment order `k`.
///
/// The `Ω` table is built on construction; `C_l` beyond the alternating-sum
/// range are computed on first use and kept.
#[derive(Debug)]
pub struct KernelEvaluator {
    k: usize,
    omega: OmegaSeries,
    c: RwLock<Arc<Vec<f64>>>,
    pub thresholds: SwitchThresholds,
}

fn check_radius(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("radius {r} must be finite and nonnegative")))
    }
}

impl KernelEvaluator {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("moment order must be positive".into()));
        }
        let c = (0..=C_SERIES_MAX_L).map(|l| c_alternating(k, l)).collect();
        Ok(Self {
            k,
            omega: OmegaSeries::new(k),
            c: RwLock::new(Arc::new(c)),
            thresholds: SwitchThresholds::default(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn omega_series(&self) -> &OmegaSeries {
        &self.omega
    }

    /// `Ω^{(k)}(ρ²)`.
    pub fn omega(&self, rho_sq: f64) -> Result<f64> {
        if !(rho_sq >= 0.0) || !rho_sq.is_finite() {
            return Err(Error::InvalidArgument(format!("rho^2 = {rho_sq} must be nonnegative")));
        }
        Ok(self.omega.value(rho_sq))
    }

    /// `C_0 … C_{len−1}`, extending the cached table if needed.
    pub fn c_coefficients(&self, len: usize) -> Result<Arc<Vec<f64>>> {
        let current = self.c.read().expect("coefficient lock").clone();
        if current.len() >= len {
            return Ok(current);
        }
        // computed outside the lock: rayon workers may re-enter this method
        use rayon::prelude::*;
        if current.len() == C_SERIES_MAX_L + 1 {
            check_overlap(&self.omega)?;
        }
        let target = len.max(2 * current.len()).min(self.thresholds.l_max + 1).max(len);
        let extra: Result<Vec<f64>> = (current.len()..target)
            .into_par_iter()
            .map(|l| c_integral(&self.omega, l))
            .collect();
        let mut table = (*current).clone();
        table.extend(extra?);
        let table = Arc::new(table);
        let mut guard = self.c.write().expect("coefficient lock");
        if guard.len() < table.len() {
            *guard = table.clone();
        }
        Ok(guard.clone())
    }

    /// Number of series terms needed at `(r, s)` and the worst-case loss
    /// factor, or `None` if the series is not admissible there.
    fn series_plan(&self, r: f64, s: f64) -> Option<usize> {
        let th = &self.thresholds;
        let q = 0.5 * (1.0 - s);
        let x = 2.0 * r * r / (1.0 - s);
        if q > th.max_ratio || x > th.max_x {
            return None;
        }
        let kf = self.k as f64;
        // Σ_l q^l C_l |L_l^k(x)| ≤ C_0 e^{x/2} (1−q)^{−k−1}
        let ln_loss = kf * r.max(1.0).ln() + 0.5 * x - (kf + 1.0) * (1.0 - q).ln() - 0.5 * ln_factorial(self.k);
        if ln_loss > th.max_loss.ln() {
            return None;
        }
        let ln_target = (1e-17f64).ln() - 0.5 * x;
        for l in 0..=th.l_max {
            let lf = l as f64;
            let ratio = q * (lf + kf + 1.0) / (lf + 1.0);
            let ln_term = lf * q.ln() + ln_binomial(l + self.k, l);
            if ratio < 1.0 && ln_term + (ratio / (1.0 - ratio)).ln() < ln_target {
                return Some(l);
            }
        }
        None
    }

    /// Which representation [`KernelEvaluator::kernel`] uses at `(r, s)`.
    pub fn method(&self, r: f64, s: f64) -> KernelMethod {
        if s == -1.0 {
            KernelMethod::LogQuadrature
        } else if self.series_plan(r, s).is_some() {
            KernelMethod::Series
        } else {
            KernelMethod::Quadrature
        }
    }

    /// Hybrid evaluation of `K_k(r; s)` for `−1 ≤ s < 1` (`s = −1` requires `r > 0`).
    pub fn kernel(&self, r: f64, s: f64) -> Result<f64> {
        check_radius(r)?;
        check_order_parameter(s)?;
        if s == -1.0 {
            return self.kernel_q(r);
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        match self.series_plan(r, s) {
            Some(terms) => self.series_sum(r, s, terms),
            None => self.kernel_quadrature(r, s),
        }
    }

    /// Laguerre-series evaluation; fails where the series is not admissible.
    pub fn kernel_series(&self, r: f64, s: f64) -> Result<f64> {
        check_radius(r)?;
        if !(s > -1.0 && s < 1.0) {
            return Err(Error::InvalidArgument(format!("series needs -1 < s < 1, got {s}")));
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        let terms = self.series_plan(r, s).ok_or(Error::SeriesNotConverged {
            what: "Laguerre kernel series",
            terms: self.thresholds.l_max,
            last: f64::NAN,
        })?;
        self.series_sum(r, s, terms)
    }

    fn series_sum(&self, r: f64, s: f64, terms: usize) -> Result<f64> {
        let c = self.c_coefficients(terms + 1)?;
        let q = 0.5 * (1.0 - s);
        let x = 2.0 * r * r / (1.0 - s);
        let lag = laguerre_sequence_dd(self.k, DoubleDouble::from(x), terms);
        let mut acc = DoubleDouble::ZERO;
        let mut qpow = DoubleDouble::ONE;
        for (l, ll) in lag.iter().enumerate() {
            acc += qpow * *ll * c[l];
            qpow = qpow * q;
        }
        Ok(r.powi(self.k as i32) * acc.to_f64())
    }

    /// Radial-integral evaluation for `−1 < s < 1`.
    pub fn kernel_quadrature(&self, r: f64, s: f64) -> Result<f64> {
        check_radius(r)?;
        if !(s > -1.0 && s < 1.0) {
            return Err(Error::InvalidArgument(format!("integral needs -1 < s < 1, got {s}")));
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        let kf = self.k as f64;
        let ln_front = kf * r.ln() + (kf + 1.0) * LN_2 - 0.5 * kf * PI.ln();
        let r2 = r * r;
        let f = |rho: f64| {
            let t = rho * rho;
            let ln_g = self.omega.ln_g(t);
            if ln_g == f64::NEG_INFINITY {
                return 0.0;
            }
            let one_minus_w = -(-t).exp_m1();
            let d = 1.0 + s + (1.0 - s) * (-t).exp();
            (ln_front + ln_g - t - (kf + 1.0) * d.ln() - 2.0 * one_minus_w * r2 / d).exp()
        };
        Quadrature::with_rel_tol(1e-10)
            .abs_tol(1e-15)
            .integrate_to_infinity(f, 0.0, 1.0)
            .map(|i| i.value)
            .map_err(Error::quad("kernel radial integral"))
    }

    /// `K_k(r; −1)`, the kernel applied to Husimi-distributed data.
    pub fn kernel_q(&self, r: f64) -> Result<f64> {
        self.kernel_q_tol(r, 1e-8)
    }

    pub(crate) fn kernel_q_tol(&self, r: f64, rel_tol: f64) -> Result<f64> {
        check_radius(r)?;
        if r == 0.0 {
            return Err(Error::KernelDivergent);
        }
        let kf = self.k as f64;
        let ln_front = -LN_2 - 0.5 * kf * PI.ln() - kf * r.ln();
        let r2 = r * r;
        let k1 = self.k == 1;
        let f = |u: f64| {
            if u == 0.0 {
                // 2u τ^{−1/2} → 2r while G(0) vanishes for k ≥ 2
                return if k1 { (ln_front + (2.0 * r).ln() + self.omega.ln_g(0.0)).exp() } else { 0.0 };
            }
            let u2 = u * u;
            let tau = (u2 / r2).ln_1p();
            let ln_g = self.omega.ln_g(tau);
            (ln_front + (2.0 * u).ln() + ln_g - 0.5 * tau.ln() + (kf - 1.0) * (u2 + r2).ln() - u2).exp()
        };
        let quad = Quadrature::with_rel_tol(rel_tol).abs_tol(0.0);
        let head = quad.integrate(f, 0.0, r).map_err(Error::quad("s=-1 kernel integral"))?;
        let quad = quad.abs_tol(rel_tol * 1e-3 * head.value.abs());
        let tail = quad
            .integrate_to_infinity(f, r, 1.0)
            .map_err(Error::quad("s=-1 kernel integral"))?;
        Ok(head.value + tail.value)
    }

    /// Alternating series in `L_n^k(4r²/(1−s²))` for `0 < s < 1`.
    pub fn kernel_s_positive(&self, r: f64, s: f64) -> Result<f64> {
        check_radius(r)?;
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidArgument(format!("series needs 0 < s < 1, got {s}")));
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        let ratio = (1.0 - s) / (1.0 + s);
        let y = 4.0 * r * r / (1.0 - s * s);
        let kf = self.k as f64;
        let ln_bound = 0.5 * y - (kf + 1.0) * (1.0 - ratio).ln();
        let mut bits = 128 + (ln_bound / LN_2).ceil().max(0.0) as usize;
        loop {
            let sum = alternating_laguerre_sum(self.k, r, s, bits)?;
            if sum.lost_bits + 64 <= bits as i64 {
                let ln_front = kf * r.ln() + (kf + 1.0) * (2.0 / (1.0 + s)).ln() - 2.0 * r * r / (1.0 + s);
                return Ok(sum.mantissa * (sum.exponent as f64 * LN_2 + ln_front).exp());
            }
            if bits > 1 << 15 {
                return Err(Error::SeriesNotConverged {
                    what: "positive-s Laguerre series",
                    terms: sum.terms,
                    last: f64::NAN,
                });
            }
            bits += sum.lost_bits.max(64) as usize;
        }
    }
}

pub(crate) fn check_order_parameter(s: f64) -> Result<()> {
    if (-1.0..1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("order parameter s={s} must lie in [-1, 1)")))
    }
}

struct BigSum {
    mantissa: f64,
    exponent: i64,
    lost_bits: i64,
    terms: usize,
}

fn big_exponent(x: &BigFloat) -> Option<i64> {
    if x.is_zero() {
        None
    } else {
        x.exponent().map(i64::from)
    }
}

/// `Σ_n (−ρ)^n L_n^k(y) / √((n+1)…(n+k))`, `ρ = (1−s)/(1+s)`, `y = 4r²/(1−s²)`,
/// returned as `mantissa · 2^exponent` with the number of cancelled bits.
fn alternating_laguerre_sum(k: usize, r: f64, s: f64, p: usize) -> Result<BigSum> {
    let rm = RoundingMode::ToEven;
    let one = BigFloat::from_u64(1, p);
    let rb = BigFloat::from_f64(r, p);
    let sb = BigFloat::from_f64(s, p);
    let one_minus = one.sub(&sb, p, rm);
    let one_plus = one.add(&sb, p, rm);
    let y = BigFloat::from_u64(4, p)
        .mul(&rb.mul(&rb, p, rm), p, rm)
        .div(&one_minus.mul(&one_plus, p, rm), p, rm);
    let neg_ratio = one_minus.div(&one_plus, p, rm).neg();
    let ratio_f = (1.0 - s) / (1.0 + s);
    let y_f = 4.0 * r * r / (1.0 - s * s);
    let kb = BigFloat::from_u64(k as u64, p);

    let mut prod = BigFloat::from_u64(1, p);
    for i in 1..=k as u64 {
        prod = prod.mul(&BigFloat::from_u64(i, p), p, rm);
    }
    let mut l_prev = BigFloat::from_u64(0, p);
    let mut l_cur = one.clone();
    let mut rpow = one.clone();
    let mut sum = BigFloat::from_u64(0, p);
    let mut max_exp = i64::MIN;
    let mut n = 0usize;
    loop {
        let term = rpow.mul(&l_cur, p, rm).div(&prod.sqrt(p, rm), p, rm);
        if let Some(e) = big_exponent(&term) {
            max_exp = max_exp.max(e);
        }
        sum = sum.add(&term, p, rm);
        // |L_n^k(y)| ≤ C(n+k, n) e^{y/2}; the bounds shrink geometrically once
        // ρ √((n+k+1)/(n+1)) < 1
        let m = n + 1;
        let mf = m as f64;
        let ln_next = mf * ratio_f.ln() + ln_binomial(m + k, m) + 0.5 * y_f
            - 0.5 * (ln_factorial(m + k) - ln_factorial(m));
        let shrink = ratio_f * ((mf + k as f64) / mf).sqrt();
        if max_exp > i64::MIN
            && shrink < 1.0
            && ln_next - (1.0 - shrink).ln() < (max_exp - p as i64) as f64 * LN_2
        {
            break;
        }
        if n > 200_000 {
            return Err(Error::SeriesNotConverged {
                what: "positive-s Laguerre series",
                terms: n,
                last: f64::NAN,
            });
        }
        // (n+1) L_{n+1} = (2n+1+k−y) L_n − (n+k) L_{n−1}
        let nb = BigFloat::from_u64(n as u64, p);
        let a = BigFloat::from_u64(2 * n as u64 + 1, p).add(&kb, p, rm).sub(&y, p, rm);
        let next = a
            .mul(&l_cur, p, rm)
            .sub(&nb.add(&kb, p, rm).mul(&l_prev, p, rm), p, rm)
            .div(&BigFloat::from_u64(n as u64 + 1, p), p, rm);
        l_prev = l_cur;
        l_cur = next;
        rpow = rpow.mul(&neg_ratio, p, rm);
        prod = prod
            .mul(&BigFloat::from_u64((n + k + 1) as u64, p), p, rm)
            .div(&BigFloat::from_u64(n as u64 + 1, p), p, rm);
        n += 1;
    }
    let Some((words, _, sign, exp, _)) = sum.as_raw_parts() else {
        return Err(Error::InvalidArgument("multiprecision sum is not finite".into()));
    };
    if sum.is_zero() {
        return Ok(BigSum { mantissa: 0.0, exponent: 0, lost_bits: 0, terms: n + 1 });
    }
    let top = words[words.len() - 1] as f64;
    let next = if words.len() > 1 { words[words.len() - 2] as f64 } else { 0.0 };
    let two64 = 18_446_744_073_709_551_616.0;
    let mut mantissa = (top + next / two64) / two64;
    if sign == Sign::Neg {
        mantissa = -mantissa;
    }
    let exponent = i64::from(exp);
    Ok(BigSum {
        mantissa,
        exponent,
        lost_bits: (max_exp - exponent).max(0),
        terms: n + 1,
    })
}
