//! Independent routes to the phase moments and the phase distribution that
//! do not go through event data.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{evaluator, AUTO_K_MAX};
use crate::numeric::special::{ln_factorial, ln_sqrt_factorials};
use crate::numeric::NeumaierSum;
use crate::state::DensityMatrix;

/// Coefficient of `⟨â†^l â^{l+k}⟩` in the normally ordered expansion of `Ê^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NormalOrderCoefficient {
    /// `Σ_n (−1)^{l−n} / ((l−n)! √(n!(n+k)!))`, from expanding `|n⟩⟨n+k|`.
    #[default]
    Corrected,
    /// `Σ_n (−1)^{l−n} / ((l−n)! √(n!(l+n)!))`; kept for comparison only,
    /// it gives `1` instead of `1/√k!` at leading order in the amplitude.
    Printed,
}

pub fn normal_order_coefficient(l: usize, k: usize, variant: NormalOrderCoefficient) -> f64 {
    let mut acc = NeumaierSum::new();
    for n in 0..=l {
        let denom = match variant {
            NormalOrderCoefficient::Corrected => ln_sqrt_factorials(n, k),
            NormalOrderCoefficient::Printed => 0.5 * (ln_factorial(n) + ln_factorial(l + n)),
        };
        let sign = if (l - n) % 2 == 1 { -1.0 } else { 1.0 };
        acc.add(sign * (-ln_factorial(l - n) - denom).exp());
    }
    acc.value()
}

/// `Ψ_k = Σ_l c_{lk} ⟨â†^l â^{l+k}⟩` summed to `l_max`. Terms with
/// `l + k ≥ dim` vanish identically in the truncated space and end the sum.
pub fn moments_via_normal_order(
    state: &DensityMatrix,
    k: usize,
    l_max: usize,
    variant: NormalOrderCoefficient,
) -> Result<Complex64> {
    if k == 0 {
        return Err(Error::InvalidArgument("moment order k must be at least 1".into()));
    }
    if k >= state.dim() {
        return Err(Error::OrderOutOfRange { k, dim: state.dim() });
    }
    let last_l = l_max.min(state.dim() - 1 - k);
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    let mut last = Complex64::new(0.0, 0.0);
    for l in 0..=last_l {
        let term = state.normal_moment(l, k)? * normal_order_coefficient(l, k, variant);
        re.add(term.re);
        im.add(term.im);
        last = term;
    }
    let value = Complex64::new(re.value(), im.value());
    let complete = last_l + k + 1 == state.dim();
    if !complete && last.norm() > 1e-6 * value.norm().max(1.0) {
        return Err(Error::SeriesNotConverged {
            what: "normally ordered moment expansion",
            terms: last_l + 1,
            last: last.norm(),
        });
    }
    Ok(value)
}

/// Canonical phase distribution reconstructed from `W_s`, `0 < s < 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseReconstruction {
    pub phi: Vec<f64>,
    pub values: Vec<f64>,
    /// `∫₀^{r_max} r W_{s,0}(r) dr`, one for an untruncated integral.
    pub normalization: f64,
    /// Bound on the error in `∫P dφ` from the radial cutoff and quadrature.
    pub truncation_bound: f64,
    /// Highest harmonic retained.
    pub k_max: usize,
}

const PANEL_WIDTH: f64 = 0.25;
/// Products `|r K_k W_{s,k}|·w` below this are skipped.
const PRUNE: f64 = 1e-18;
const TRUNCATION_TOLERANCE: f64 = 1e-6;

/// 21-point Gauss–Kronrod nodes and weights mapped to `[a, b]`.
#[allow(clippy::excessive_precision)]
fn gk_nodes(a: f64, b: f64) -> Vec<(f64, f64)> {
    const X: [f64; 11] = [
        0.995_657_163_025_808_080_735_527_280_689_003,
        0.973_906_528_517_171_720_077_964_012_084_452,
        0.930_157_491_355_708_226_001_207_180_059_508,
        0.865_063_366_688_984_510_732_096_688_423_493,
        0.780_817_726_586_416_897_063_717_578_345_042,
        0.679_409_568_299_024_406_234_327_365_114_874,
        0.562_757_134_668_604_683_339_000_099_272_694,
        0.433_395_394_129_247_190_799_265_943_165_784,
        0.294_392_862_701_460_198_131_126_603_103_866,
        0.148_874_338_981_631_210_884_826_001_129_720,
        0.0,
    ];
    const W: [f64; 11] = [
        0.011_694_638_867_371_874_278_064_396_062_192,
        0.032_558_162_307_964_727_478_818_972_459_390,
        0.054_755_896_574_351_996_031_381_300_244_580,
        0.075_039_674_810_919_952_767_043_140_916_190,
        0.093_125_454_583_697_605_535_065_465_083_366,
        0.109_387_158_802_297_641_899_210_590_325_805,
        0.123_491_976_262_065_851_077_958_109_831_074,
        0.134_709_217_311_473_325_928_054_001_771_707,
        0.142_775_938_577_060_080_797_094_273_138_717,
        0.147_739_104_901_338_491_374_841_515_972_068,
        0.149_445_554_002_916_905_664_936_468_389_821,
    ];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = Vec::with_capacity(21);
    for j in 0..10 {
        out.push((c - h * X[j], h * W[j]));
        out.push((c + h * X[j], h * W[j]));
    }
    out.push((c, h * W[10]));
    out
}

/// `P(φ) = ∫ r dr ∫ dψ W_s(r, ψ) F(r, φ − ψ; s)` on `[0, r_max]`.
///
/// The angular integral is done exactly through the Fourier components of
/// `W_s`, leaving `P(φ) = (2π)⁻¹ [Ψ̃_0 + 2 Σ_k Re(Ψ̃_k e^{−ikφ})]` with
/// `Ψ̃_k = ∫ r K_k(r; s) W_{s,k}(r) dr` for `k ≤ 64`.
pub fn phase_distribution_from_ws(
    state: &DensityMatrix,
    s: f64,
    phi_grid: &[f64],
    r_max: f64,
) -> Result<PhaseReconstruction> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "phase distribution from W_s needs 0 < s < 1, got s={s}"
        )));
    }
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(Error::InvalidArgument(format!("r_max={r_max} must be positive")));
    }
    let k_max = AUTO_K_MAX.min(state.dim() - 1);
    let panels = (r_max / PANEL_WIDTH).ceil() as usize;
    let width = r_max / panels as f64;
    let nodes: Vec<(f64, f64)> = (0..panels)
        .flat_map(|i| gk_nodes(i as f64 * width, (i + 1) as f64 * width))
        .collect();
    // W_{s,k}(r) for all k at every node
    let comps: Vec<Vec<Complex64>> = nodes
        .par_iter()
        .map(|&(r, _)| state.ws_radial_components(r, s))
        .collect::<Result<_>>()?;

    let mut norm = NeumaierSum::new();
    for ((r, w), c) in nodes.iter().zip(&comps) {
        norm.add(w * r * c[0].re);
    }
    let normalization = norm.value();
    // the density of r W_{s,0} at the cutoff, over one panel, bounds the neglected tail
    let edge = state.ws_radial_components(r_max, s)?[0].re.abs() * r_max * width;
    let truncation_bound = (1.0 - normalization).abs() + edge;
    if truncation_bound > TRUNCATION_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "radial cutoff r_max={r_max} leaves {truncation_bound:e} of the normalization"
        )));
    }

    let harmonics: Vec<Complex64> = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let ev = evaluator(k)?;
            let mut re = NeumaierSum::new();
            let mut im = NeumaierSum::new();
            for ((r, w), c) in nodes.iter().zip(&comps) {
                let weight = w * r * c[k].norm();
                if weight < PRUNE {
                    continue;
                }
                let v = c[k] * (w * r * ev.kernel(*r, s)?);
                re.add(v.re);
                im.add(v.im);
            }
            Ok(Complex64::new(re.value(), im.value()))
        })
        .collect::<Result<_>>()?;

    let values = phi_grid
        .iter()
        .map(|&phi| {
            let mut acc = NeumaierSum::new();
            acc.add(normalization);
            for (i, h) in harmonics.iter().enumerate() {
                acc.add(2.0 * (h * Complex64::from_polar(1.0, -((i + 1) as f64) * phi)).re);
            }
            acc.value() / (2.0 * PI)
        })
        .collect();
    Ok(PhaseReconstruction {
        phi: phi_grid.to_vec(),
        values,
        normalization,
        truncation_bound,
        k_max,
    })
}
