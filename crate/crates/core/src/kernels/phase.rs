//! Phase kernel `F(r, φ; s) = (2π)⁻¹ [1 + 2 Σ_k K_k(r; s) cos kφ]` for `0 < s < 1`.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::evaluator;
use crate::error::{Error, Result};
use crate::numeric::special::{laguerre_sequence, ln_factorial};
use crate::numeric::NeumaierSum;

pub const DEFAULT_K_MAX: usize = 32;
pub const AUTO_K_MAX: usize = 64;
pub const TAIL_TARGET: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseKernelValue {
    pub value: f64,
    pub k_max: usize,
    /// `|K_{k_max}(r; s)|`, the size of the last retained harmonic.
    pub tail: f64,
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "the phase kernel exists only for 0 < s < 1, got s={s}"
        )))
    }
}

/// `K_1(r; s) … K_{k_max}(r; s)`.
pub fn kernel_harmonics(r: f64, s: f64, k_max: usize) -> Result<Vec<f64>> {
    (1..=k_max)
        .into_par_iter()
        .map(|k| evaluator(k)?.kernel(r, s))
        .collect()
}

fn fourier_sum(harmonics: &[f64], phi: f64) -> f64 {
    let mut acc = NeumaierSum::new();
    acc.add(1.0);
    for (i, kk) in harmonics.iter().enumerate() {
        acc.add(2.0 * kk * ((i + 1) as f64 * phi).cos());
    }
    acc.value() / (2.0 * PI)
}

/// `F(r, φ; s)` truncated after `k_max` harmonics.
pub fn phase_kernel(r: f64, phi: f64, s: f64, k_max: usize) -> Result<PhaseKernelValue> {
    check_s(s)?;
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let h = kernel_harmonics(r, s, k_max)?;
    Ok(PhaseKernelValue {
        value: fourier_sum(&h, phi),
        k_max,
        tail: h[k_max - 1].abs(),
    })
}

/// Smallest `k_max ≤ 64` whose last harmonic is below `target`.
pub fn phase_kernel_auto(r: f64, phi: f64, s: f64, target: f64) -> Result<PhaseKernelValue> {
    check_s(s)?;
    let h = kernel_harmonics(r, s, AUTO_K_MAX)?;
    match h.iter().position(|kk| kk.abs() < target) {
        Some(i) => Ok(PhaseKernelValue {
            value: fourier_sum(&h[..=i], phi),
            k_max: i + 1,
            tail: h[i].abs(),
        }),
        None => Err(Error::TailUnmet {
            r,
            k_max: AUTO_K_MAX,
            achieved: h[AUTO_K_MAX - 1].abs(),
            target,
        }),
    }
}

/// `F` from the Fock double series `(2π)⁻¹ Σ_{m,n} B_{mn}(r, s) e^{i(m−n)φ}`,
/// truncated at `m, n ≤ n_max`. Independent of the `K_k` evaluators.
pub fn phase_kernel_double_series(r: f64, phi: f64, s: f64, n_max: usize) -> Result<f64> {
    check_s(s)?;
    let y = 4.0 * r * r / (1.0 - s * s);
    let mut acc = NeumaierSum::new();
    for k in 0..=n_max {
        let lag = laguerre_sequence(k as f64, y, n_max - k);
        let mut comp = NeumaierSum::new();
        for (n, ln) in lag.iter().enumerate() {
            let m = n + k;
            // √(n!/m!) r^{m−n} ((s−1)/2)^n (2/(1+s))^{m+1} e^{−2r²/(1+s)}
            let ln_mag = 0.5 * (ln_factorial(n) - ln_factorial(m))
                + if k > 0 { k as f64 * r.ln() } else { 0.0 }
                + n as f64 * (0.5 * (1.0 - s)).ln()
                + (m + 1) as f64 * (2.0 / (1.0 + s)).ln()
                - 2.0 * r * r / (1.0 + s);
            let sign = if n % 2 == 1 { -1.0 } else { 1.0 };
            comp.add(sign * ln_mag.exp() * ln);
        }
        let weight = if k == 0 { 1.0 } else { 2.0 * (k as f64 * phi).cos() };
        acc.add(weight * comp.value());
    }
    Ok(acc.value() / (2.0 * PI))
}
