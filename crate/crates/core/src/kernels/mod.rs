//! Sampling kernels `K_k(r; s)` relating `s`-parametrized phase-space
//! functions to the exponential phase moments, and the special functions
//! they are built from.

mod coefficients;
mod kernel;
mod phase;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

pub use coefficients::{
    a_coefficients, asymptotic_constant_exact, c_alternating, c_coefficients, c_integral,
    fit_asymptotic_constant, omega_taylor, wallis, AsymptoticFit, CoefficientCache, OmegaSeries,
    C_OVERLAP, C_SERIES_MAX_L, OMEGA_TAU_MAX,
};
pub use kernel::{KernelEvaluator, KernelMethod, SwitchThresholds};
pub use phase::{
    kernel_harmonics, phase_kernel, phase_kernel_auto, phase_kernel_double_series,
    PhaseKernelValue, AUTO_K_MAX, DEFAULT_K_MAX, TAIL_TARGET,
};

use crate::error::{Error, Result};
use crate::numeric::special::{laguerre_sequence, ln_factorial};
use crate::numeric::Quadrature;
use crate::state::DensityMatrix;

/// Shared evaluator for order `k`, built on first request.
pub fn evaluator(k: usize) -> Result<Arc<KernelEvaluator>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<KernelEvaluator>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("evaluator cache");
    if let Some(ev) = map.get(&k) {
        return Ok(ev.clone());
    }
    let ev = Arc::new(KernelEvaluator::new(k)?);
    map.insert(k, ev.clone());
    Ok(ev)
}

/// `Ω^{(k)}(ρ²)`.
pub fn omega(k: usize, rho_sq: f64) -> Result<f64> {
    evaluator(k)?.omega(rho_sq)
}

/// `K_k(r; s)` for `−1 ≤ s < 1`.
pub fn kernel(k: usize, r: f64, s: f64) -> Result<f64> {
    evaluator(k)?.kernel(r, s)
}

/// `K_k(r; −1)` for `r > 0`.
pub fn kernel_q(k: usize, r: f64) -> Result<f64> {
    evaluator(k)?.kernel_q(r)
}

/// `K_k(r; s)` for `0 < s < 1` from the alternating Laguerre series.
pub fn kernel_s_positive(k: usize, r: f64, s: f64) -> Result<f64> {
    evaluator(k)?.kernel_s_positive(r, s)
}

/// Normally ordered moment `⟨â†^l â^{l+k}⟩` recovered from the state's
/// `W_s` as `(−1)^l l! q^l ∫ dφ e^{ikφ} ∫ r dr r^k L_l^k(2r²/(1−s)) W_s`,
/// `q = (1−s)/2`. The angular integral is done exactly through the Fourier
/// components of `W_s`, the radial one by adaptive quadrature.
pub fn normally_ordered_moment_check(
    state: &DensityMatrix,
    l: usize,
    k: usize,
    s: f64,
) -> Result<Complex64> {
    if !(-1.0..1.0).contains(&s) {
        return Err(Error::InvalidArgument(format!("order parameter s={s} must lie in [-1, 1)")));
    }
    if l + k >= state.dim() {
        return Err(Error::OrderOutOfRange { k: l + k, dim: state.dim() });
    }
    let q = 0.5 * (1.0 - s);
    // validate convergence once up front so the integrand can unwrap
    state.ws_radial_components(1.0, s)?;
    let radial = |take_im: bool| {
        let f = |r: f64| {
            let w = state.ws_radial_components(r, s).expect("checked above")[k];
            let lag = laguerre_sequence(k as f64, 2.0 * r * r / (1.0 - s), l)[l];
            let v = if take_im { w.im } else { w.re };
            r.powi(k as i32 + 1) * lag * v
        };
        Quadrature::with_rel_tol(1e-10)
            .abs_tol(1e-14)
            .integrate_to_infinity(f, 0.0, 0.5)
            .map(|i| i.value)
            .map_err(Error::quad("normally ordered moment"))
    };
    let sign = if l % 2 == 1 { -1.0 } else { 1.0 };
    let front = sign * (ln_factorial(l) + l as f64 * q.ln()).exp();
    Ok(Complex64::new(radial(false)?, radial(true)?) * front)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{make_state, StateSpec};

    #[test]
    fn moment_check_for_coherent_state() {
        let st = make_state(&StateSpec::coherent(1.0)).unwrap();
        let m = normally_ordered_moment_check(&st, 0, 1, -1.0).unwrap();
        assert!((m - Complex64::new(1.0, 0.0)).norm() < 1e-8);
        let m = normally_ordered_moment_check(&st, 1, 2, 0.0).unwrap();
        assert!((m - Complex64::new(1.0, 0.0)).norm() < 1e-6, "{m}");
    }

    #[test]
    fn moment_check_for_vacuum() {
        let st = make_state(&StateSpec::fock(0).with_dim(6)).unwrap();
        for (l, k) in [(0, 1), (1, 1), (2, 0)] {
            assert!(normally_ordered_moment_check(&st, l, k, -0.5).unwrap().norm() < 1e-10);
        }
    }
}
