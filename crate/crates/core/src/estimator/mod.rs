//! Phase-moment estimation from double-homodyne events.
//!
//! Each event contributes `e^{ikφ} K_k(r; −1)` when it lies outside the
//! regularization radius `r0` and zero otherwise. Excluding the neighborhood
//! of the origin tames the `r^{−k}` divergence of the kernel at the price of
//! a systematic error bounded state-independently by [`systematic_bound`].

mod optimize;
mod oracles;
mod report;
mod systematic;
mod table;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;
use crate::simulator::EventBatch;

pub use optimize::{optimize_r0, scaling_experiment, R0Optimum, ScalingFit, STORAGE_CAP, STORAGE_QUANTILE};
pub use oracles::{
    moments_via_normal_order, normal_order_coefficient, phase_distribution_from_ws, NormalOrderCoefficient,
    PhaseReconstruction,
};
pub use report::{MomentRecord, Report};
pub use systematic::{efficiency_bias, systematic_bound, systematic_exact};
pub use table::{KernelTable, TABLE_NODES, TABLE_R_MAX, TABLE_R_MIN};

/// One estimated moment `Ψ_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentEstimate {
    pub k: usize,
    pub value: Complex64,
    /// Standard errors of the real and imaginary parts.
    pub stat_err: (f64, f64),
    pub r0: f64,
    pub n_used: usize,
    pub n_excluded: usize,
}

/// Statistical error, systematic bound and their sum for one component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorBudget {
    pub stat: f64,
    pub sys_bound: f64,
    pub total: f64,
}

impl ErrorBudget {
    pub fn new(stat: f64, sys_bound: f64) -> Self {
        Self {
            stat,
            sys_bound,
            total: stat + sys_bound,
        }
    }
}

impl MomentEstimate {
    /// Budgets for the real and imaginary parts given the systematic bound at `r0`.
    pub fn budgets(&self, sys_bound: f64) -> (ErrorBudget, ErrorBudget) {
        (
            ErrorBudget::new(self.stat_err.0, sys_bound),
            ErrorBudget::new(self.stat_err.1, sys_bound),
        )
    }
}

/// Per-event `(r, e^{ikφ} K_k(r; −1))`, zero for `r ≤ r0`.
pub(crate) fn summands(batch: &EventBatch, k: usize, r0: f64) -> Result<Vec<(f64, Complex64)>> {
    let table = KernelTable::shared(k)?;
    batch
        .events
        .par_iter()
        .map(|&(q, p)| {
            let r = q.hypot(p);
            if r <= r0 {
                if r == 0.0 && r0 == 0.0 {
                    return Err(Error::EventAtOrigin);
                }
                return Ok((r, Complex64::new(0.0, 0.0)));
            }
            let phase = Complex64::new(q / r, p / r).powu(k as u32);
            Ok((r, phase * table.eval(r)?))
        })
        .collect()
}

/// Mean and standard error of the mean (population dispersion over `√N`).
pub(crate) fn mean_and_error(sum: f64, sum_sq: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sum_sq / nf - mean * mean).max(0.0);
    (mean, (var / nf).sqrt())
}

/// `Ψ_k ≈ N⁻¹ Σ_j e^{ikφ_j} K_k(r_j; −1) θ(r_j − r0)`.
pub fn estimate_moment(batch: &EventBatch, k: usize, r0: f64) -> Result<MomentEstimate> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if k == 0 {
        return Err(Error::InvalidArgument("moment order k must be at least 1".into()));
    }
    if !(r0 >= 0.0) || !r0.is_finite() {
        return Err(Error::InvalidArgument(format!("regularization radius r0={r0} must be finite and nonnegative")));
    }
    let terms = summands(batch, k, r0)?;
    let mut re = NeumaierSum::new();
    let mut re2 = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    let mut im2 = NeumaierSum::new();
    let mut excluded = 0;
    for &(r, z) in &terms {
        if r <= r0 {
            excluded += 1;
        }
        re.add(z.re);
        re2.add(z.re * z.re);
        im.add(z.im);
        im2.add(z.im * z.im);
    }
    let n = terms.len();
    let (mre, sre) = mean_and_error(re.value(), re2.value(), n);
    let (mim, sim) = mean_and_error(im.value(), im2.value(), n);
    Ok(MomentEstimate {
        k,
        value: Complex64::new(mre, mim),
        stat_err: (sre, sim),
        r0,
        n_used: n - excluded,
        n_excluded: excluded,
    })
}
