//! Fock-basis states, their phase-space functions, and exact canonical-phase oracles.
//!
//! Phase space is parametrized by `β = q + ip = r e^{iφ}` with the Husimi
//! function `Q(β) = ⟨β|ρ̂|β⟩/π` normalized under the measure `r dr dφ`.
//! Angular Fourier components follow the convention
//! `F_k(r) = ∫ dφ e^{ikφ} F(r, φ)`, so that `Q_k(r)` picks out the
//! off-diagonal `ρ_{n+k,n}`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::special::{ln_binomial, ln_factorial, ln_sqrt_factorials};
use crate::numeric::{NeumaierSum, Quadrature};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Clone, Debug, PartialEq)]
pub enum StateKind {
    Coherent(Complex64),
    Fock(usize),
    /// Pure superposition `Σ c_n |n⟩`; amplitudes are normalized on construction.
    Superposition(Vec<(usize, Complex64)>),
}

/// A textual or programmatic description of a state, e.g. `coherent:1`,
/// `fock:3`, `super:0:1,2:1` or `coherent:0.5+0.5i@40` (`@D` overrides the
/// Fock truncation).
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpec {
    pub kind: StateKind,
    pub dim: Option<usize>,
}

impl StateSpec {
    pub fn coherent(alpha: impl Into<Complex64>) -> Self {
        Self {
            kind: StateKind::Coherent(alpha.into()),
            dim: None,
        }
    }

    pub fn fock(n: usize) -> Self {
        Self {
            kind: StateKind::Fock(n),
            dim: None,
        }
    }

    pub fn superposition(terms: Vec<(usize, Complex64)>) -> Self {
        Self {
            kind: StateKind::Superposition(terms),
            dim: None,
        }
    }

    /// `(|0⟩ + |k⟩)/√2`, the state that saturates half the systematic bound.
    pub fn vacuum_plus(k: usize) -> Self {
        Self::superposition(vec![(0, Complex64::new(1.0, 0.0)), (k, Complex64::new(1.0, 0.0))])
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = Some(dim);
        self
    }

    /// Truncation used when no override is given.
    pub fn default_dim(&self) -> usize {
        match &self.kind {
            StateKind::Coherent(alpha) => {
                let a = alpha.norm();
                (a * a + 8.0 * a + 20.0).ceil() as usize
            }
            StateKind::Fock(n) => n + 1,
            StateKind::Superposition(terms) => terms.iter().map(|(n, _)| n + 1).max().unwrap_or(1),
        }
    }

    pub fn effective_dim(&self) -> usize {
        self.dim.unwrap_or_else(|| self.default_dim())
    }
}

fn fmt_complex(c: Complex64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "{}", c.re)?;
    if c.im != 0.0 {
        if c.im.is_sign_negative() {
            write!(f, "{}i", c.im)
        } else {
            write!(f, "+{}i", c.im)
        }
    } else {
        Ok(())
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            StateKind::Coherent(alpha) => {
                write!(f, "coherent:")?;
                fmt_complex(*alpha, f)?;
            }
            StateKind::Fock(n) => write!(f, "fock:{n}")?,
            StateKind::Superposition(terms) => {
                write!(f, "super:")?;
                for (i, (n, c)) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{n}:")?;
                    fmt_complex(*c, f)?;
                }
            }
        }
        if let Some(d) = self.dim {
            write!(f, "@{d}")?;
        }
        Ok(())
    }
}

fn parse_err(token: &str, reason: impl Into<String>) -> Error {
    Error::StateParse {
        token: token.to_string(),
        reason: reason.into(),
    }
}

fn parse_real(tok: &str) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| parse_err(tok, "expected a real number"))?;
    if !v.is_finite() {
        return Err(parse_err(tok, "number must be finite"));
    }
    Ok(v)
}

/// Parses `RE`, `RE+IMi`, `RE-IMi` or `IMi`.
pub fn parse_complex(tok: &str) -> Result<Complex64> {
    let t = tok.trim();
    if t.is_empty() {
        return Err(parse_err(tok, "empty amplitude"));
    }
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(parse_real(t)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    match split {
        Some(i) => {
            let re = parse_real(&body[..i]).map_err(|_| parse_err(tok, "bad real part"))?;
            let im_txt = &body[i..];
            let im = if im_txt == "+" || im_txt == "-" {
                if im_txt == "-" {
                    -1.0
                } else {
                    1.0
                }
            } else {
                parse_real(im_txt).map_err(|_| parse_err(tok, "bad imaginary part"))?
            };
            Ok(Complex64::new(re, im))
        }
        None => {
            let im = parse_real(body).map_err(|_| parse_err(tok, "bad imaginary part"))?;
            Ok(Complex64::new(0.0, im))
        }
    }
}

fn parse_index(tok: &str) -> Result<usize> {
    tok.trim()
        .parse()
        .map_err(|_| parse_err(tok, "expected a nonnegative integer"))
}

impl FromStr for StateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (body, dim) = match s.rsplit_once('@') {
            Some((body, d)) => {
                let dim = parse_index(d)?;
                if dim == 0 {
                    return Err(parse_err(d, "truncation must be positive"));
                }
                (body, Some(dim))
            }
            None => (s, None),
        };
        let (head, rest) = body
            .split_once(':')
            .ok_or_else(|| parse_err(body, "expected `coherent:`, `fock:` or `super:`"))?;
        let kind = match head {
            "coherent" => StateKind::Coherent(parse_complex(rest)?),
            "fock" => StateKind::Fock(parse_index(rest)?),
            "super" => {
                let mut terms = Vec::new();
                for item in rest.split(',') {
                    let (n, c) = item
                        .split_once(':')
                        .ok_or_else(|| parse_err(item, "expected `N:AMPLITUDE`"))?;
                    let n = parse_index(n)?;
                    if terms.iter().any(|(m, _)| *m == n) {
                        return Err(parse_err(item, "duplicate Fock index"));
                    }
                    terms.push((n, parse_complex(c)?));
                }
                StateKind::Superposition(terms)
            }
            other => return Err(parse_err(other, "unknown state family")),
        };
        Ok(StateSpec { kind, dim })
    }
}

/// A point `β = r e^{iφ}` of phase space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    r: f64,
    phi: f64,
}

impl PhasePoint {
    /// Wraps `phi` into `[0, 2π)`; rejects negative or non-finite radii.
    pub fn new(r: f64, phi: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) || !phi.is_finite() {
            return Err(Error::InvalidArgument(format!("bad phase-space point r={r}, phi={phi}")));
        }
        let mut phi = phi.rem_euclid(TWO_PI);
        if phi >= TWO_PI {
            phi = 0.0;
        }
        Ok(Self { r, phi })
    }

    pub fn from_cartesian(q: f64, p: f64) -> Self {
        let phi = p.atan2(q).rem_euclid(TWO_PI);
        Self {
            r: q.hypot(p),
            phi: if phi >= TWO_PI { 0.0 } else { phi },
        }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// A truncated Fock-basis density matrix with `ρ_{mn} = ⟨m|ρ̂|n⟩`.
///
/// Construction guarantees exact Hermiticity, unit trace and positive
/// semidefiniteness (smallest eigenvalue ≥ −1e-10).
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    rho: DMatrix<Complex64>,
}

pub(crate) const PSD_TOLERANCE: f64 = 1e-10;
const WS_EDGE_TOLERANCE: f64 = 1e-6;

impl DensityMatrix {
    /// Pure state from amplitudes `c_n`, normalized to unit trace.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm_sq: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if amplitudes.is_empty() {
            return Err(Error::InvalidArgument("Fock dimension must be positive".into()));
        }
        if norm_sq == 0.0 || !norm_sq.is_finite() {
            return Err(Error::Unnormalizable);
        }
        let d = amplitudes.len();
        let mut rho = DMatrix::zeros(d, d);
        for m in 0..d {
            rho[(m, m)] = Complex64::new(amplitudes[m].norm_sqr() / norm_sq, 0.0);
            for n in 0..m {
                let v = amplitudes[m] * amplitudes[n].conj() / norm_sq;
                rho[(m, n)] = v;
                rho[(n, m)] = v.conj();
            }
        }
        Ok(Self { rho })
    }

    /// Validates and renormalizes an arbitrary matrix.
    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        let d = m.nrows();
        if d == 0 || m.ncols() != d {
            return Err(Error::NotPhysical("matrix must be square and nonempty".into()));
        }
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..d {
            for j in 0..=i {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > 1e-12 * scale.max(1.0) {
                    return Err(Error::NotPhysical(format!("not Hermitian at ({i},{j})")));
                }
            }
        }
        let trace: f64 = (0..d).map(|i| m[(i, i)].re).sum();
        if !(trace > 0.0) {
            return Err(Error::NotPhysical(format!("trace {trace} is not positive")));
        }
        let mut rho = DMatrix::zeros(d, d);
        for i in 0..d {
            rho[(i, i)] = Complex64::new(m[(i, i)].re / trace, 0.0);
            for j in 0..i {
                let v = 0.5 * (m[(i, j)] + m[(j, i)].conj()) / trace;
                rho[(i, j)] = v;
                rho[(j, i)] = v.conj();
            }
        }
        let out = Self { rho };
        let min = out.min_eigenvalue();
        if min < -PSD_TOLERANCE {
            return Err(Error::NotPhysical(format!("negative eigenvalue {min:e}")));
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn entry(&self, m: usize, n: usize) -> Complex64 {
        self.rho[(m, n)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.rho[(i, i)].re).sum()
    }

    /// Eigenvalues (ascending) and the matching normalized eigenvectors.
    pub fn eigen(&self) -> (Vec<f64>, Vec<Vec<Complex64>>) {
        let eig = self.rho.clone().symmetric_eigen();
        let mut idx: Vec<usize> = (0..self.dim()).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = idx
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect();
        (values, vectors)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.rho
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    fn check_order(&self, k: usize) -> Result<()> {
        if k >= self.dim() {
            Err(Error::OrderOutOfRange { k, dim: self.dim() })
        } else {
            Ok(())
        }
    }

    /// Exponential phase moment `Ψ_k = ⟨Ê^k⟩ = Σ_n ρ_{n+k,n}`; `Ψ_0 = 1`.
    pub fn exact_phase_moment(&self, k: usize) -> Result<Complex64> {
        if k == 0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        self.check_order(k)?;
        let mut re = NeumaierSum::new();
        let mut im = NeumaierSum::new();
        for n in 0..self.dim() - k {
            let v = self.rho[(n + k, n)];
            re.add(v.re);
            im.add(v.im);
        }
        Ok(Complex64::new(re.value(), im.value()))
    }

    /// Canonical phase density `P(φ) = (2π)⁻¹ Σ_{mn} ρ_{mn} e^{-i(m−n)φ}`.
    pub fn canonical_phase_distribution(&self, phi: f64) -> f64 {
        let mut acc = NeumaierSum::new();
        acc.add(self.trace());
        for k in 1..self.dim() {
            let psi = self.exact_phase_moment(k).expect("k < dim");
            acc.add(2.0 * (psi * Complex64::from_polar(1.0, -(k as f64) * phi)).re);
        }
        acc.value() / TWO_PI
    }

    /// `v_n = e^{-r²/2} β^n / √n!`, so that `Q = v†ρv / π`.
    fn coherent_overlaps(&self, point: PhasePoint) -> Vec<Complex64> {
        let r = point.r();
        (0..self.dim())
            .map(|n| {
                let mag = if r == 0.0 {
                    if n == 0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    (-0.5 * r * r + n as f64 * r.ln() - 0.5 * ln_factorial(n)).exp()
                };
                Complex64::from_polar(mag, n as f64 * point.phi())
            })
            .collect()
    }

    /// Husimi function `Q(β) = ⟨β|ρ̂|β⟩/π`.
    pub fn q_value(&self, point: PhasePoint) -> f64 {
        let v = self.coherent_overlaps(point);
        let mut acc = NeumaierSum::new();
        for m in 0..self.dim() {
            if v[m] == Complex64::new(0.0, 0.0) {
                continue;
            }
            let row: Complex64 = v.iter().enumerate().map(|(n, vn)| self.rho[(m, n)] * vn).sum();
            acc.add((v[m].conj() * row).re);
        }
        acc.value() / PI
    }

    /// Angular component `Q_k(r) = 2e^{-r²} Σ_n r^{2n+k} ρ_{n+k,n} / √(n!(n+k)!)`.
    pub fn q_radial_component(&self, k: usize, r: f64) -> Result<Complex64> {
        self.check_order(k)?;
        let mut re = NeumaierSum::new();
        let mut im = NeumaierSum::new();
        for n in 0..self.dim() - k {
            let p = 2 * n + k;
            let w = if r == 0.0 {
                if p == 0 {
                    2.0
                } else {
                    0.0
                }
            } else {
                2.0 * (-r * r + p as f64 * r.ln() - ln_sqrt_factorials(n, k)).exp()
            };
            let v = self.rho[(n + k, n)] * w;
            re.add(v.re);
            im.add(v.im);
        }
        Ok(Complex64::new(re.value(), im.value()))
    }

    /// Angular components `W_{s,k}(r) = ∫dφ e^{ikφ} W_s(r,φ)` for `k = 0..dim`.
    ///
    /// For `s > 0` the Fock series is checked for convergence. A state whose
    /// populations die out before the truncation edge stands for an infinite
    /// series, so the two outermost shells `m = D−1, D−2` must contribute
    /// below `1e-6` of the summed magnitudes and, unless they are below
    /// roundoff, be decreasing.
    pub fn ws_radial_components(&self, r: f64, s: f64) -> Result<Vec<Complex64>> {
        if !(s < 1.0) || !s.is_finite() {
            return Err(Error::InvalidArgument(format!("order parameter s={s} must be < 1")));
        }
        if !(r >= 0.0) {
            return Err(Error::InvalidArgument(format!("radius {r} must be nonnegative")));
        }
        let d = self.dim();
        let mut shells = vec![0.0f64; d];
        let mut out = Vec::with_capacity(d);
        for k in 0..d {
            let mut re = NeumaierSum::new();
            let mut im = NeumaierSum::new();
            for n in 0..d - k {
                let rho = self.rho[(n + k, n)];
                if rho == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let v = rho * (2.0 * ws_matrix_element(n, k, r, s));
                shells[n + k] += v.norm();
                re.add(v.re);
                im.add(v.im);
            }
            out.push(Complex64::new(re.value(), im.value()));
        }
        if s > 0.0 {
            let last_populated = (0..d).rev().find(|&n| self.rho[(n, n)].re > 1e-10).unwrap_or(0);
            if d >= 2 && last_populated < d - 1 {
                let edge = shells[d - 1] + shells[d - 2];
                let total: f64 = shells.iter().sum();
                let scale = total.max(1.0);
                let growing = shells[d - 1] > shells[d - 2] && edge > f64::EPSILON * scale;
                if edge > WS_EDGE_TOLERANCE * scale || growing {
                    return Err(Error::WsNotConverged { s, edge });
                }
            }
        }
        Ok(out)
    }

    /// `s`-parametrized phase-space function `W_s(r, φ)`; `s = −1` is `Q`.
    pub fn ws_value(&self, point: PhasePoint, s: f64) -> Result<f64> {
        let comps = self.ws_radial_components(point.r(), s)?;
        let mut acc = NeumaierSum::new();
        acc.add(comps[0].re);
        for (k, c) in comps.iter().enumerate().skip(1) {
            acc.add(2.0 * (c * Complex64::from_polar(1.0, -(k as f64) * point.phi())).re);
        }
        Ok(acc.value() / TWO_PI)
    }

    /// Normally ordered moment `⟨â†^l â^{l+k}⟩ = Σ_{n≥l} ρ_{n+k,n} √((n+k)! n!) / (n−l)!`.
    pub fn normal_moment(&self, l: usize, k: usize) -> Result<Complex64> {
        if l + k >= self.dim() && !(l == 0 && k < self.dim()) {
            return Err(Error::OrderOutOfRange { k: l + k, dim: self.dim() });
        }
        let mut re = NeumaierSum::new();
        let mut im = NeumaierSum::new();
        for n in l..self.dim() - k {
            let w = (ln_sqrt_factorials(n, k) - ln_factorial(n - l)).exp();
            let v = self.rho[(n + k, n)] * w;
            re.add(v.re);
            im.add(v.im);
        }
        Ok(Complex64::new(re.value(), im.value()))
    }

    /// Phase moment of the radially integrated `Q`, `∫₀^∞ Q_k(r) r dr`.
    pub fn q_phase_moment(&self, k: usize) -> Result<Complex64> {
        self.check_order(k)?;
        let quad = Quadrature::with_rel_tol(1e-12).abs_tol(1e-16);
        let part = |take_im: bool| {
            quad.integrate_to_infinity(
                |r| {
                    let q = self.q_radial_component(k, r).expect("order checked");
                    r * if take_im { q.im } else { q.re }
                },
                0.0,
                0.5,
            )
            .map_err(Error::quad("radial Q moment"))
        };
        let re = part(false)?.value;
        let im = part(true)?.value;
        Ok(Complex64::new(re, im))
    }
}

/// `B_{n+k,n}(r, −s)`: the `s`-ordered phase-space function of `|n+k⟩⟨n|`
/// times `π e^{ikφ}`, written as a finite sum that stays stable at `s = −1`:
///
/// `√(n!/(n+k)!) r^k (2/(1−s))^{n+k+1} e^{−x} Σ_j C(n+k, n−j) (−c)^{n−j} x^j/j!`
/// with `x = 2r²/(1−s)` and `c = (1+s)/2`.
pub(crate) fn ws_matrix_element(n: usize, k: usize, r: f64, s: f64) -> f64 {
    let m = n + k;
    let x = 2.0 * r * r / (1.0 - s);
    let c = 0.5 * (1.0 + s);
    let ln_two_over = (2.0 / (1.0 - s)).ln();
    if r == 0.0 {
        if k > 0 {
            return 0.0;
        }
        // only j = 0 survives: (2/(1-s))^{n+1} (-c)^n
        return ((n + 1) as f64 * ln_two_over).exp() * (-c).powi(n as i32);
    }
    let ln_pref = 0.5 * (ln_factorial(n) - ln_factorial(m)) + k as f64 * r.ln()
        + (m + 1) as f64 * ln_two_over
        - x;
    let ln_x = x.ln();
    let mut acc = NeumaierSum::new();
    let j_min = if c == 0.0 { n } else { 0 };
    for j in j_min..=n {
        let e = n - j;
        let mut ln_term = ln_pref + ln_binomial(m, e) + j as f64 * ln_x - ln_factorial(j);
        if e > 0 {
            ln_term += e as f64 * c.abs().ln();
        }
        // (−c)^e is negative only for odd e with c > 0
        let sign = if c > 0.0 && e % 2 == 1 { -1.0 } else { 1.0 };
        acc.add(sign * ln_term.exp());
    }
    acc.value()
}

/// Builds the density matrix described by `spec`.
pub fn make_state(spec: &StateSpec) -> Result<DensityMatrix> {
    let dim = spec.effective_dim();
    if dim == 0 {
        return Err(Error::InvalidArgument("Fock dimension must be positive".into()));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    match &spec.kind {
        StateKind::Coherent(alpha) => {
            let a = alpha.norm();
            let theta = alpha.arg();
            for (n, amp) in amps.iter_mut().enumerate() {
                let mag = if a == 0.0 {
                    if n == 0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    (-0.5 * a * a + n as f64 * a.ln() - 0.5 * ln_factorial(n)).exp()
                };
                *amp = Complex64::from_polar(mag, n as f64 * theta);
            }
        }
        StateKind::Fock(n) => {
            if *n >= dim {
                return Err(Error::InvalidArgument(format!("Fock index {n} must be < dim {dim}")));
            }
            amps[*n] = Complex64::new(1.0, 0.0);
        }
        StateKind::Superposition(terms) => {
            if terms.is_empty() {
                return Err(Error::Unnormalizable);
            }
            for (n, c) in terms {
                if *n >= dim {
                    return Err(Error::InvalidArgument(format!("Fock index {n} must be < dim {dim}")));
                }
                amps[*n] += *c;
            }
        }
    }
    DensityMatrix::pure(&amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn coherent_vacuum_entry_before_renormalization() {
        let st = make_state(&StateSpec::coherent(1.0).with_dim(30)).unwrap();
        // the truncated tail mass is far below the tolerance
        assert!((st.entry(0, 0).re - (-1.0f64).exp()).abs() < 1e-12);
        assert!((st.trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fock_state_is_diagonal() {
        let st = make_state(&StateSpec::fock(3)).unwrap();
        assert_eq!(st.entry(3, 3), c(1.0, 0.0));
        for m in 0..st.dim() {
            for n in 0..st.dim() {
                if (m, n) != (3, 3) {
                    assert_eq!(st.entry(m, n), c(0.0, 0.0));
                }
            }
        }
        for k in 1..st.dim() {
            assert_eq!(st.exact_phase_moment(k).unwrap(), c(0.0, 0.0));
        }
    }

    #[test]
    fn superposition_coherence() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let st = make_state(&StateSpec::superposition(vec![(0, c(h, 0.0)), (2, c(h, 0.0))])).unwrap();
        assert!((st.entry(2, 0).re - 0.5).abs() < 1e-15);
        assert!((st.exact_phase_moment(2).unwrap().re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn parse_errors_name_the_token() {
        let err = "coherent:1+xi".parse::<StateSpec>().unwrap_err();
        assert!(err.to_string().contains("1+xi"), "{err}");
        let err = "squeezed:1".parse::<StateSpec>().unwrap_err();
        assert!(err.to_string().contains("squeezed"), "{err}");
        let err = "super:0:1,zz:1".parse::<StateSpec>().unwrap_err();
        assert!(err.to_string().contains("zz"), "{err}");
        assert!(matches!(
            make_state(&"super:0:0,3:0".parse().unwrap()),
            Err(Error::Unnormalizable)
        ));
        assert!(make_state(&"fock:5@3".parse().unwrap()).is_err());
    }

    #[test]
    fn complex_amplitudes_parse() {
        assert_eq!(parse_complex("1").unwrap(), c(1.0, 0.0));
        assert_eq!(parse_complex("1+2i").unwrap(), c(1.0, 2.0));
        assert_eq!(parse_complex("1e-3-2.5i").unwrap(), c(1e-3, -2.5));
        assert_eq!(parse_complex("-0.5i").unwrap(), c(0.0, -0.5));
        assert_eq!(parse_complex("2e+1+1e-2i").unwrap(), c(20.0, 0.01));
    }

    #[test]
    fn coherent_moments_table_values() {
        let st = make_state(&StateSpec::coherent(1.0)).unwrap();
        let expected = [0.7732, 0.4805, 0.2559, 0.1209];
        for (k, e) in expected.iter().enumerate() {
            let psi = st.exact_phase_moment(k + 1).unwrap();
            assert!((psi.re - e).abs() < 5e-5, "k={} {}", k + 1, psi.re);
            assert!(psi.im.abs() < 1e-15);
        }
    }

    #[test]
    fn husimi_of_coherent_state_is_gaussian() {
        let alpha = c(0.7, -0.4);
        let st = make_state(&StateSpec::coherent(alpha)).unwrap();
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let p = PhasePoint::new(3.0 * next(), TWO_PI * next()).unwrap();
            let beta = Complex64::from_polar(p.r(), p.phi());
            let exact = (-(beta - alpha).norm_sqr()).exp() / PI;
            assert!((st.q_value(p) - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn vacuum_q_and_radial_component() {
        let st = make_state(&StateSpec::fock(0).with_dim(4)).unwrap();
        for r in [0.0, 0.3, 1.1, 2.5] {
            let p = PhasePoint::new(r, 0.4).unwrap();
            assert!((st.q_value(p) - (-r * r).exp() / PI).abs() < 1e-15);
            let q0 = st.q_radial_component(0, r).unwrap();
            assert!((q0.re - 2.0 * (-r * r).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn radial_component_of_vacuum_plus_k() {
        for k in 1..5 {
            let st = make_state(&StateSpec::vacuum_plus(k)).unwrap();
            for r in [0.05, 0.5, 1.3] {
                let qk = st.q_radial_component(k, r).unwrap();
                let expected = r.powi(k as i32) * (-r * r).exp() / ln_factorial(k).exp().sqrt();
                assert!((qk.re - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn radial_component_matches_angular_quadrature() {
        let st = make_state(&StateSpec::coherent(c(0.8, 0.3))).unwrap();
        let m = 512;
        for k in 0..4 {
            for r in [0.2, 1.0, 1.9] {
                let mut acc = c(0.0, 0.0);
                for j in 0..m {
                    let phi = TWO_PI * j as f64 / m as f64;
                    let q = st.q_value(PhasePoint::new(r, phi).unwrap());
                    acc += Complex64::from_polar(q, k as f64 * phi);
                }
                acc *= TWO_PI / m as f64;
                let direct = st.q_radial_component(k, r).unwrap();
                assert!((acc - direct).norm() < 1e-9, "k={k} r={r}");
            }
        }
    }

    #[test]
    fn ws_at_minus_one_is_q() {
        let st = make_state(&"super:0:1,1:0.5-0.5i,3:0.3i".parse().unwrap()).unwrap();
        for (r, phi) in [(0.0, 0.0), (0.4, 1.0), (1.5, 4.0), (2.7, 2.2)] {
            let p = PhasePoint::new(r, phi).unwrap();
            assert!((st.ws_value(p, -1.0).unwrap() - st.q_value(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuum_ws_is_gaussian() {
        let st = make_state(&StateSpec::fock(0).with_dim(3)).unwrap();
        for s in [-1.0, -0.5, 0.0, 0.5, 0.9] {
            for r in [0.0, 0.5, 1.0, 2.0] {
                let p = PhasePoint::new(r, 0.3).unwrap();
                let exact = 2.0 / (PI * (1.0 - s)) * (-2.0 * r * r / (1.0 - s)).exp();
                assert!((st.ws_value(p, s).unwrap() - exact).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn coherent_wigner_is_gaussian_with_quarter_variance() {
        let alpha = c(1.0, 0.5);
        let st = make_state(&StateSpec::coherent(alpha)).unwrap();
        for (q, p) in [(1.0, 0.5), (0.2, -0.3), (2.0, 1.4), (-0.5, 0.9)] {
            let pt = PhasePoint::from_cartesian(q, p);
            let d2 = (c(q, p) - alpha).norm_sqr();
            let exact = 2.0 / PI * (-2.0 * d2).exp();
            assert!((st.ws_value(pt, 0.0).unwrap() - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn canonical_distribution_properties() {
        let st = make_state(&StateSpec::fock(4)).unwrap();
        for phi in [0.0, 1.0, 3.0] {
            assert!((st.canonical_phase_distribution(phi) - 1.0 / TWO_PI).abs() < 1e-15);
        }
        let coh = make_state(&StateSpec::coherent(1.0)).unwrap();
        let p0 = coh.canonical_phase_distribution(0.0);
        for j in 1..64 {
            assert!(coh.canonical_phase_distribution(TWO_PI * j as f64 / 64.0) < p0);
        }
        let quad = Quadrature::with_rel_tol(1e-12);
        let total = quad
            .integrate(|phi| coh.canonical_phase_distribution(phi), 0.0, TWO_PI)
            .unwrap();
        assert!((total.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn complex_amplitude_moves_the_phase_peak() {
        let theta = 0.9;
        let st = make_state(&StateSpec::coherent(Complex64::from_polar(1.5, theta))).unwrap();
        let p_peak = st.canonical_phase_distribution(theta);
        assert!(p_peak > st.canonical_phase_distribution(theta + 0.05));
        assert!(p_peak > st.canonical_phase_distribution(theta - 0.05));
        assert!((st.exact_phase_moment(1).unwrap().arg() - theta).abs() < 1e-12);
    }

    #[test]
    fn normal_moments_of_coherent_state() {
        let alpha = c(0.6, 0.2);
        let st = make_state(&StateSpec::coherent(alpha)).unwrap();
        for (l, k) in [(0, 1), (1, 2), (2, 1), (0, 3)] {
            let exact = alpha.conj().powu(l as u32) * alpha.powu((l + k) as u32);
            assert!((st.normal_moment(l, k).unwrap() - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn q_moment_is_below_canonical_moment() {
        let st = make_state(&StateSpec::coherent(1.0)).unwrap();
        let q1 = st.q_phase_moment(1).unwrap();
        // closed form Σ ρ_{n+1,n} Γ(n + 3/2)/√(n!(n+1)!)
        let mut closed = 0.0;
        for n in 0..st.dim() - 1 {
            closed += st.entry(n + 1, n).re
                * (crate::numeric::special::ln_gamma(n as f64 + 1.5) - ln_sqrt_factorials(n, 1)).exp();
        }
        assert!((q1.re - closed).abs() < 1e-11, "{} vs {closed}", q1.re);
        assert!(q1.norm() < st.exact_phase_moment(1).unwrap().norm());
        let fock = make_state(&StateSpec::fock(2)).unwrap();
        assert!(fock.q_phase_moment(1).unwrap().norm() < 1e-15);
    }

    #[test]
    fn ws_divergence_is_reported() {
        let st = make_state(&StateSpec::coherent(3.0)).unwrap();
        let p = PhasePoint::new(1.0, 0.0).unwrap();
        assert!(matches!(st.ws_value(p, 0.9), Err(Error::WsNotConverged { .. })));
        let ok = make_state(&StateSpec::coherent(1.0)).unwrap();
        assert!(ok.ws_value(p, 0.5).is_ok());
        let fock = make_state(&StateSpec::fock(3)).unwrap();
        assert!(fock.ws_value(p, 0.9).is_ok());
    }

    #[test]
    fn order_errors() {
        let st = make_state(&StateSpec::fock(2)).unwrap();
        assert!(matches!(st.exact_phase_moment(3), Err(Error::OrderOutOfRange { .. })));
        assert!(st.q_radial_component(3, 1.0).is_err());
    }

    fn arb_state() -> impl Strategy<Value = StateSpec> {
        let amp = (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| c(a, b));
        prop_oneof![
            amp.clone().prop_map(StateSpec::coherent),
            (0usize..8).prop_map(StateSpec::fock),
            proptest::collection::btree_map(0usize..10, amp, 1..5).prop_map(|m| {
                StateSpec::superposition(m.into_iter().collect())
            }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn constructed_states_are_physical(spec in arb_state()) {
            let Ok(st) = make_state(&spec) else { return Ok(()); };
            prop_assert!((st.trace() - 1.0).abs() < 1e-10);
            prop_assert!(st.min_eigenvalue() >= -PSD_TOLERANCE);
            for m in 0..st.dim() {
                for n in 0..st.dim() {
                    prop_assert_eq!(st.entry(m, n), st.entry(n, m).conj());
                }
            }
            for k in 1..st.dim().min(8) {
                prop_assert!(st.exact_phase_moment(k).unwrap().norm() <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn spec_text_round_trips(spec in arb_state(), dim in proptest::option::of(12usize..40)) {
            let spec = StateSpec { dim, ..spec };
            let back: StateSpec = spec.to_string().parse().unwrap();
            prop_assert_eq!(back, spec);
        }

        #[test]
        fn husimi_is_bounded(spec in arb_state(), r in 0.0f64..4.0, phi in 0.0f64..std::f64::consts::TAU) {
            let Ok(st) = make_state(&spec) else { return Ok(()); };
            let q = st.q_value(PhasePoint::new(r, phi).unwrap());
            prop_assert!((-1e-12..=1.0 / PI + 1e-12).contains(&q));
        }
    }
}
