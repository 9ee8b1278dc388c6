//! Systematic errors: the regularization bias and its state-independent
//! bound, and the bias from detection efficiency below one.

use num_complex::Complex64;

use super::table::KernelTable;
use crate::error::{Error, Result};
use crate::kernels::evaluator;
use crate::numeric::special::ln_factorial;
use crate::numeric::Quadrature;
use crate::state::DensityMatrix;

const QUAD_TOL: f64 = 1e-10;

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::InvalidArgument("moment order k must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `r^{k+1} e^{−r²} K_k(r; −1)`, the bound integrand without its prefactor.
pub(crate) fn bound_integrand(table: &KernelTable, k: usize, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let kernel = table.eval(r).expect("s=-1 kernel is finite for r > 0");
    (-r * r + (k + 1) as f64 * r.ln()).exp() * kernel
}

/// `2/√k!`, the largest value of `|Q_k(r)| e^{r²} r^{−k}` over all states.
pub(crate) fn bound_prefactor(k: usize) -> f64 {
    2.0 * (-0.5 * ln_factorial(k)).exp()
}

/// Bound on `|∫₀^{r0} r Q_k(r) K_k(r; −1) dr|` valid for every state:
/// `(2/√k!) ∫₀^{r0} r^{k+1} e^{−r²} K_k(r; −1) dr`, `0 ≤ r0 ≤ 1`.
pub fn systematic_bound(k: usize, r0: f64) -> Result<f64> {
    check_k(k)?;
    if !(0.0..=1.0).contains(&r0) {
        return Err(Error::InvalidArgument(format!(
            "systematic bound holds only for 0 <= r0 <= 1, got {r0}"
        )));
    }
    if r0 == 0.0 {
        return Ok(0.0);
    }
    let table = KernelTable::shared(k)?;
    let integral = Quadrature::with_rel_tol(QUAD_TOL)
        .abs_tol(0.0)
        .integrate(|r| bound_integrand(&table, k, r), 0.0, r0)
        .map_err(Error::quad("systematic bound"))?;
    Ok(bound_prefactor(k) * integral.value)
}

/// `∫₀^{r0} r Q_k(r) K_k(r; −1) dr`, the part of `Ψ_k` removed by regularization.
pub fn systematic_exact(state: &DensityMatrix, k: usize, r0: f64) -> Result<Complex64> {
    check_k(k)?;
    if !(r0 >= 0.0) || !r0.is_finite() {
        return Err(Error::InvalidArgument(format!("regularization radius r0={r0} must be finite and nonnegative")));
    }
    state.q_radial_component(k, 1.0)?;
    if r0 == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let table = KernelTable::shared(k)?;
    let part = |take_im: bool| {
        Quadrature::with_rel_tol(QUAD_TOL)
            .abs_tol(1e-300)
            .integrate(
                |r| {
                    if r == 0.0 {
                        return 0.0;
                    }
                    let q = state.q_radial_component(k, r).expect("order checked");
                    let kernel = table.eval(r).expect("s=-1 kernel is finite for r > 0");
                    r * kernel * if take_im { q.im } else { q.re }
                },
                0.0,
                r0,
            )
            .map(|i| i.value)
            .map_err(Error::quad("regularization bias"))
    };
    Ok(Complex64::new(part(false)?, part(true)?))
}

/// `Δ_η Ψ_k = ∫₀^∞ r Q_k(r) [K_k(r; −1) − K_k(r; −3 + 2/η)] dr`.
///
/// Applying the `s = −1` kernel to data recorded at efficiency `η` is the
/// same as applying `K_k(r; −3 + 2/η)` to Husimi data, so the expected
/// estimate is `Ψ_k − Δ_η Ψ_k`. Requires `η > 1/2`, where that kernel exists.
pub fn efficiency_bias(state: &DensityMatrix, k: usize, eta: f64) -> Result<Complex64> {
    check_k(k)?;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidArgument(format!("efficiency eta={eta} must lie in (0, 1]")));
    }
    state.q_radial_component(k, 1.0)?;
    if eta == 1.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if eta <= 0.5 {
        return Err(Error::InvalidArgument(format!(
            "efficiency eta={eta} <= 1/2: the equivalent kernel order -3+2/eta is not above -1"
        )));
    }
    let s = -3.0 + 2.0 / eta;
    let table = KernelTable::shared(k)?;
    let ev = evaluator(k)?;
    let cutoff = radial_cutoff(state, k)?;
    let weights = |r: f64| -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let kq = table.eval(r).expect("s=-1 kernel is finite for r > 0");
        let ks = ev.kernel(r, s).expect("kernel exists for s > -1");
        r * (kq - ks)
    };
    let part = |take_im: bool| {
        Quadrature::with_rel_tol(1e-8)
            .abs_tol(1e-14)
            .integrate_panels(
                &|r| {
                    let q = state.q_radial_component(k, r).expect("order checked");
                    weights(r) * if take_im { q.im } else { q.re }
                },
                0.0,
                cutoff,
                (cutoff / 0.5).ceil() as usize,
            )
            .map(|i| i.value)
            .map_err(Error::quad("efficiency bias"))
    };
    Ok(Complex64::new(part(false)?, part(true)?))
}

/// Radius beyond which `r |Q_k(r)|` stays below `1e-17` of its peak.
fn radial_cutoff(state: &DensityMatrix, k: usize) -> Result<f64> {
    const STEP: f64 = 0.125;
    let mut peak: f64 = 0.0;
    let mut r = 0.0;
    loop {
        r += STEP;
        let v = r * state.q_radial_component(k, r)?.norm();
        peak = peak.max(v);
        if (peak > 0.0 && v < 1e-17 * peak) || (peak == 0.0 && r > 64.0) {
            return Ok(r);
        }
        if r > 1e4 {
            return Err(Error::InvalidArgument("radial Q component does not decay".into()));
        }
    }
}
