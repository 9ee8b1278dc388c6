//! Globally adaptive 21-point Gauss–Kronrod quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate meets `max(abs_tol, rel_tol * |I|)`. Semi-infinite integrals are
//! truncated where the integrand has fallen below `TAIL_FRACTION` of its peak;
//! the truncation point and a bound on the discarded tail are reported.

use std::fmt;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
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

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
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

/// Integrand values below this fraction of the observed peak are treated as
/// negligible when truncating a semi-infinite range.
pub const TAIL_FRACTION: f64 = 1e-16;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadFailure {
    pub value: f64,
    pub abs_error: f64,
    pub subdivisions: usize,
}

impl fmt::Display for QuadFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "adaptive quadrature did not converge after {} subdivisions (value {:e}, error estimate {:e})",
            self.subdivisions, self.value, self.abs_error
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    /// Upper end actually used for a semi-infinite range, `None` otherwise.
    pub cutoff: Option<f64>,
    /// Bound on the magnitude of the discarded tail (zero for finite ranges).
    pub tail_bound: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-15,
            max_subdivisions: 2000,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    res_abs: f64,
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut lo = [0.0; 10];
    let mut hi = [0.0; 10];
    let mut gauss = 0.0;
    let mut kronrod = fc * WGK[10];
    let mut res_abs = kronrod.abs();
    for j in 0..10 {
        let dx = half * XGK[j];
        let (f1, f2) = (f(center - dx), f(center + dx));
        lo[j] = f1;
        hi[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((lo[j] - mean).abs() + (hi[j] - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err, res_abs)
}

impl Quadrature {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    /// Integrate over `[a, b]`.
    pub fn integrate<F>(&self, f: F, a: f64, b: f64) -> Result<Integral, QuadFailure>
    where
        F: Fn(f64) -> f64,
    {
        self.integrate_panels(&f, a, b, 1)
    }

    /// Same as [`Quadrature::integrate`], starting from `initial_panels` equal pieces.
    pub fn integrate_panels<F>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        initial_panels: usize,
    ) -> Result<Integral, QuadFailure>
    where
        F: Fn(f64) -> f64,
    {
        if a == b {
            return Ok(Integral {
                value: 0.0,
                abs_error: 0.0,
                evaluations: 0,
                cutoff: None,
                tail_bound: 0.0,
            });
        }
        let n0 = initial_panels.max(1);
        let width = (b - a) / n0 as f64;
        let mut panels: Vec<Panel> = (0..n0)
            .map(|i| {
                let lo = a + width * i as f64;
                let hi = if i + 1 == n0 { b } else { lo + width };
                let (value, error, res_abs) = gk21(f, lo, hi);
                Panel { a: lo, b: hi, value, error, res_abs }
            })
            .collect();
        let mut evaluations = 21 * n0;
        let mut subdivisions = 0;
        loop {
            let total: f64 = panels.iter().map(|p| p.value).sum();
            let err: f64 = panels.iter().map(|p| p.error).sum();
            let magnitude: f64 = panels.iter().map(|p| p.res_abs).sum();
            // below 100 eps of the absolute mass the estimate is roundoff-limited
            let target = self
                .abs_tol
                .max(self.rel_tol * total.abs())
                .max(100.0 * f64::EPSILON * magnitude);
            if err <= target {
                return Ok(Integral {
                    value: total,
                    abs_error: err,
                    evaluations,
                    cutoff: None,
                    tail_bound: 0.0,
                });
            }
            let (worst, _) = panels
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
                .expect("at least one panel");
            let p = panels.swap_remove(worst);
            let mid = 0.5 * (p.a + p.b);
            if subdivisions >= self.max_subdivisions || !(mid > p.a && mid < p.b) {
                return Err(QuadFailure {
                    value: total,
                    abs_error: err,
                    subdivisions,
                });
            }
            let (v1, e1, m1) = gk21(f, p.a, mid);
            let (v2, e2, m2) = gk21(f, mid, p.b);
            evaluations += 42;
            subdivisions += 1;
            panels.push(Panel { a: p.a, b: mid, value: v1, error: e1, res_abs: m1 });
            panels.push(Panel { a: mid, b: p.b, value: v2, error: e2, res_abs: m2 });
        }
    }

    /// Integrate over `[a, ∞)` for an integrand that eventually decays.
    ///
    /// The range is scanned in steps of `scale` to find the peak and the first
    /// point after which the integrand stays below `TAIL_FRACTION` of it.
    pub fn integrate_to_infinity<F>(&self, f: F, a: f64, scale: f64) -> Result<Integral, QuadFailure>
    where
        F: Fn(f64) -> f64,
    {
        const MAX_STEPS: usize = 20_000;
        let step = scale / 4.0;
        let mut peak = f(a).abs();
        let mut quiet = 0;
        let mut x = a;
        let mut steps = 0;
        let mut last = peak;
        while steps < MAX_STEPS {
            x += step;
            steps += 1;
            let v = f(x).abs();
            peak = peak.max(v);
            last = v;
            if peak > 0.0 && v <= TAIL_FRACTION * peak {
                quiet += 1;
                if quiet >= 4 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        if peak == 0.0 {
            return Ok(Integral {
                value: 0.0,
                abs_error: 0.0,
                evaluations: steps + 1,
                cutoff: Some(x),
                tail_bound: 0.0,
            });
        }
        let panels = steps.div_ceil(4).clamp(1, 256);
        let mut out = self.integrate_panels(&f, a, x, panels)?;
        out.evaluations += steps + 1;
        out.cutoff = Some(x);
        // the tail decays at least as fast as the last observed samples
        out.tail_bound = last * scale;
        Ok(out)
    }
}
