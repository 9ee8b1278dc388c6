//! Choice of the regularization radius and the scaling of the optimized error
//! with the number of events.

use super::systematic::{bound_integrand, bound_prefactor, systematic_bound};
use super::table::KernelTable;
use super::{estimate_moment, mean_and_error, summands, ErrorBudget, MomentEstimate};
use crate::error::{Error, Result};
use crate::numeric::{NeumaierSum, Quadrature};
use crate::simulator::{sample_batch, DetectorModel, EventBatch};
use crate::state::{make_state, StateSpec};

/// Fraction of events kept near the origin as regularization candidates.
pub const STORAGE_QUANTILE: f64 = 0.01;
/// Largest storage radius; the systematic bound is derived for `r0 ≤ 1`.
pub const STORAGE_CAP: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct R0Optimum {
    pub r0: f64,
    /// Budget of the real part, the optimized objective.
    pub budget: ErrorBudget,
    /// Budget of the imaginary part at the same radius.
    pub budget_im: ErrorBudget,
    pub estimate: MomentEstimate,
    /// Radius enclosing the candidate events finally scanned.
    pub storage_radius: f64,
    pub candidates: usize,
}

/// Scans `r0` over midpoints between consecutive near-origin event radii and
/// returns the one minimizing `stat(Re) + systematic_bound`, preferring the
/// smaller radius on ties. The scanned region starts at the
/// [`STORAGE_QUANTILE`] radius and doubles while the optimum sits on its edge.
pub fn optimize_r0(batch: &EventBatch, k: usize) -> Result<R0Optimum> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if k == 0 {
        return Err(Error::InvalidArgument("moment order k must be at least 1".into()));
    }
    let n = batch.n();
    // radius and real summand of every event, unregularized except at r = 0
    let mut events: Vec<(f64, f64)> = summands(batch, k, 0.0)
        .or_else(|e| match e {
            Error::EventAtOrigin => summands(batch, k, f64::MIN_POSITIVE),
            other => Err(other),
        })?
        .into_iter()
        .map(|(r, z)| (r, z.re))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let origin_hit = events[0].0 == 0.0;

    let quantile_index = ((STORAGE_QUANTILE * n as f64).ceil() as usize).clamp(1, n) - 1;
    let mut storage = events[quantile_index].0.min(STORAGE_CAP);
    let table = KernelTable::shared(k)?;
    let prefactor = bound_prefactor(k);
    loop {
        let stored = events.partition_point(|e| e.0 <= storage).min(n - 1);
        // kept-event sums for every exclusion count m = 0..=stored, built from the outside in
        let mut sum = NeumaierSum::new();
        let mut sum_sq = NeumaierSum::new();
        for &(_, x) in events[stored..].iter().rev() {
            sum.add(x);
            sum_sq.add(x * x);
        }
        let mut stat = vec![0.0; stored + 1];
        for m in (0..=stored).rev() {
            stat[m] = mean_and_error(sum.value(), sum_sq.value(), n).1;
            if m > 0 {
                let x = events[m - 1].1;
                sum.add(x);
                sum_sq.add(x * x);
            }
        }

        let mut best: Option<(f64, f64, f64)> = None; // (total, r0, bound)
        let mut candidates = 0;
        if !origin_hit {
            candidates += 1;
            best = Some((stat[0], 0.0, 0.0));
        }
        let mut bound = NeumaierSum::new();
        let mut last_r0 = 0.0;
        let mut best_m = 0;
        for m in 1..=stored {
            let (lo, hi) = (events[m - 1].0, events[m].0);
            if lo == hi {
                continue;
            }
            let r0 = 0.5 * (lo + hi);
            let piece = if last_r0 == 0.0 {
                systematic_bound(k, r0)?
            } else {
                prefactor
                    * Quadrature::with_rel_tol(1e-10)
                        .abs_tol(0.0)
                        .integrate(|r| bound_integrand(&table, k, r), last_r0, r0)
                        .map_err(Error::quad("systematic bound"))?
                        .value
            };
            bound.add(piece);
            last_r0 = r0;
            candidates += 1;
            let total = stat[m] + bound.value();
            if best.is_none_or(|(t, _, _)| total < t) {
                best = Some((total, r0, bound.value()));
                best_m = m;
            }
        }
        let Some((_, r0, sys)) = best else {
            return Err(Error::AllExcluded { n });
        };
        if best_m == stored && stored < n - 1 && storage < STORAGE_CAP {
            storage = (2.0 * storage).min(STORAGE_CAP);
            continue;
        }
        let estimate = estimate_moment(batch, k, r0)?;
        let (budget, budget_im) = estimate.budgets(sys);
        return Ok(R0Optimum {
            r0,
            budget,
            budget_im,
            estimate,
            storage_radius: storage,
            candidates,
        });
    }
}

/// Optimized total error as a function of the number of events.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    pub k: usize,
    pub n_values: Vec<usize>,
    /// Seed-averaged optimized total error (real part) per `N`.
    pub errors: Vec<f64>,
    /// Seed-averaged optimized radius per `N`.
    pub r0s: Vec<f64>,
    /// Slope of `ln error` against `ln N`.
    pub exponent: f64,
    pub exponent_stderr: f64,
    /// `error ≈ prefactor · N^exponent`.
    pub prefactor: f64,
    /// Slope of `ln r0` against `ln N`.
    pub r0_exponent: f64,
    pub r0_exponent_stderr: f64,
    pub r0_prefactor: f64,
}

/// Least-squares line `y = a + b x`; returns `(a, b, stderr of b)`.
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    let se = if x.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (a, b, se)
}

/// Averages the optimized error over `seeds` for each `N` in `n_values` and
/// fits power laws in `N` to the error and to the optimal radius.
pub fn scaling_experiment(spec: &StateSpec, k: usize, n_values: &[usize], seeds: &[u64]) -> Result<ScalingFit> {
    if k < 2 {
        return Err(Error::InvalidArgument(
            "scaling fits need k >= 2; k = 1 carries a logarithmic factor".into(),
        ));
    }
    if n_values.len() < 3 || n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InsufficientData(
            "need at least three strictly increasing event counts".into(),
        ));
    }
    if (n_values[n_values.len() - 1] as f64) < 100.0 * n_values[0] as f64 {
        return Err(Error::InsufficientData("event counts must span at least two decades".into()));
    }
    if seeds.len() < 10 {
        return Err(Error::InsufficientData(format!("need at least 10 seeds, got {}", seeds.len())));
    }
    let state = make_state(spec)?;
    let mut errors = Vec::with_capacity(n_values.len());
    let mut r0s = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let mut err = NeumaierSum::new();
        let mut rad = NeumaierSum::new();
        for &seed in seeds {
            let batch = sample_batch(&state, spec, n, DetectorModel::ideal(), seed)?;
            let opt = optimize_r0(&batch, k)?;
            err.add(opt.budget.total);
            rad.add(opt.r0);
        }
        errors.push(err.value() / seeds.len() as f64);
        r0s.push(rad.value() / seeds.len() as f64);
    }
    let ln_n: Vec<f64> = n_values.iter().map(|&n| (n as f64).ln()).collect();
    let ln_err: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (a, b, se) = fit_line(&ln_n, &ln_err);
    let ln_r0: Vec<f64> = r0s.iter().map(|r| r.max(f64::MIN_POSITIVE).ln()).collect();
    let (ra, rb, rse) = fit_line(&ln_n, &ln_r0);
    Ok(ScalingFit {
        k,
        n_values: n_values.to_vec(),
        errors,
        r0s,
        exponent: b,
        exponent_stderr: se,
        prefactor: a.exp(),
        r0_exponent: rb,
        r0_exponent_stderr: rse,
        r0_prefactor: ra.exp(),
    })
}
