//! Seeded Monte Carlo generation of double-homodyne events.
//!
//! At unit efficiency the events `(q, p)` are drawn from the signal's Husimi
//! function. The state is split into its eigencomponents; a pure component
//! `Σ c_n |n⟩` is sampled by rejection from the mixture of Fock-state `Q`
//! functions with weights `|c_n| / Σ|c|`, which envelopes `Q_ψ` by the
//! Cauchy–Schwarz inequality with constant `(Σ|c|)² ≤ N_c`, the support
//! size. Efficiencies `η < 1` add independent Gaussian noise of per-axis
//! variance `(1−η)/(2η)`.
//!
//! Events are generated in chunks of [`CHUNK_SIZE`], each with its own
//! ChaCha8 stream, so results do not depend on the number of threads.

mod io;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::special::ln_factorial;
use crate::state::{DensityMatrix, StateSpec};

pub use io::{load_events, render_events, save_events, FILE_VERSION};

/// Events per independent random stream.
pub const CHUNK_SIZE: usize = 8192;
/// Identifies the generation scheme in event files.
pub const GENERATOR: &str = "chacha8-stream-per-8192-chunk";
/// Eigencomponents with weight at or below this are dropped.
const EIGEN_CUTOFF: f64 = 1e-13;
const ENVELOPE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorModel {
    eta: f64,
}

impl DetectorModel {
    pub fn new(eta: f64) -> Result<Self> {
        if eta > 0.0 && eta <= 1.0 {
            Ok(Self { eta })
        } else {
            Err(Error::InvalidArgument(format!("efficiency eta={eta} must lie in (0, 1]")))
        }
    }

    pub fn ideal() -> Self {
        Self { eta: 1.0 }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Per-axis variance of the added noise.
    pub fn noise_variance(&self) -> f64 {
        (1.0 - self.eta) / (2.0 * self.eta)
    }

    /// Order parameter of the phase-space function the detector records.
    pub fn recorded_order(&self) -> f64 {
        1.0 - 2.0 / self.eta
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventBatch {
    /// Measured `(q, p)` pairs with `β = q + ip`.
    pub events: Vec<(f64, f64)>,
    pub state_spec: StateSpec,
    pub eta: f64,
    pub seed: u64,
    pub generator: String,
}

impl EventBatch {
    pub fn n(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Polar coordinates `(r, φ)` of each event, `φ ∈ (−π, π]`.
    pub fn polar(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.events.iter().map(|&(q, p)| (q.hypot(p), p.atan2(q)))
    }

    /// The batch followed by `other`'s events; metadata is taken from `self`.
    pub fn concatenated(&self, other: &EventBatch) -> EventBatch {
        let mut out = self.clone();
        out.events.extend_from_slice(&other.events);
        out
    }
}

/// Rejection-sampler bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerStats {
    pub proposals: u64,
    pub accepted: u64,
    /// Smallest component acceptance probability `1 / (Σ|c|)²`, at least
    /// `1 / N_c`; the expected rate cannot fall below it.
    pub guaranteed_rate: f64,
}

impl SamplerStats {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.proposals as f64
    }
}

struct Component {
    /// Indices and amplitudes with nonzero weight.
    support: Vec<(usize, Complex64)>,
    /// `1/√n` for `n` up to the largest support index.
    inv_sqrt: Vec<f64>,
    /// Mixture weights `|c_n| / Σ|c|`, cumulative.
    cumulative: Vec<f64>,
    gammas: Vec<Gamma<f64>>,
    l1: f64,
}

impl Component {
    fn new(vector: &[Complex64]) -> Result<Self> {
        let support: Vec<(usize, Complex64)> = vector
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(n, &c)| (n, c))
            .collect();
        let l1: f64 = support.iter().map(|(_, c)| c.norm()).sum();
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = support
            .iter()
            .map(|(_, c)| {
                acc += c.norm() / l1;
                acc
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        let gammas = support
            .iter()
            .map(|&(n, _)| Gamma::new(n as f64 + 1.0, 1.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidArgument(format!("gamma proposal: {e}")))?;
        let top = support.last().map_or(0, |&(n, _)| n);
        let inv_sqrt = (0..=top).map(|n| if n == 0 { 0.0 } else { 1.0 / (n as f64).sqrt() }).collect();
        Ok(Self {
            support,
            inv_sqrt,
            cumulative,
            gammas,
            l1,
        })
    }

    /// `Σ c_n u_n e^{−inφ}` and `Σ |c_n| u_n²` with `u_n = e^{−r²/2} r^n / √n!`.
    fn overlaps_by_recurrence(&self, r: f64, phi: f64) -> (Complex64, f64) {
        let step = Complex64::from_polar(1.0, -phi);
        let mut u = (-0.5 * r * r).exp();
        let mut rot = Complex64::new(1.0, 0.0);
        let mut next = 0;
        let mut amp = Complex64::new(0.0, 0.0);
        let mut env = 0.0;
        for &(n, c) in &self.support {
            while next < n {
                next += 1;
                u *= r * self.inv_sqrt[next];
                rot *= step;
            }
            amp += c * rot * u;
            env += c.norm() * u * u;
        }
        (amp, env)
    }

    /// Same as [`Component::overlaps_by_recurrence`], safe where `e^{−r²/2}` underflows.
    fn overlaps_by_logs(&self, r: f64, phi: f64) -> (Complex64, f64) {
        let ln_r = r.ln();
        let mut amp = Complex64::new(0.0, 0.0);
        let mut env = 0.0;
        for &(n, c) in &self.support {
            let un = (-0.5 * r * r + n as f64 * ln_r - 0.5 * ln_factorial(n)).exp();
            amp += c * Complex64::from_polar(un, -(n as f64) * phi);
            env += c.norm() * un * un;
        }
        (amp, env)
    }

    /// One proposal; returns the point and whether it was accepted.
    fn propose<R: Rng>(&self, rng: &mut R) -> Result<(f64, f64, bool)> {
        let u: f64 = rng.random();
        let j = self.cumulative.partition_point(|&c| c < u).min(self.support.len() - 1);
        let r2 = self.gammas[j].sample(rng);
        let phi = 2.0 * PI * rng.random::<f64>();
        let r = r2.sqrt();
        let (amp, env) = if r2 < 600.0 { self.overlaps_by_recurrence(r, phi) } else { self.overlaps_by_logs(r, phi) };
        let ratio = if env > 0.0 { amp.norm_sqr() / (self.l1 * env) } else { 0.0 };
        if ratio > 1.0 + ENVELOPE_SLACK {
            return Err(Error::EnvelopeViolation { ratio });
        }
        let accept = rng.random::<f64>() < ratio;
        Ok((r * phi.cos(), r * phi.sin(), accept))
    }
}

struct Sampler {
    components: Vec<Component>,
    cumulative: Vec<f64>,
    noise: Option<Normal<f64>>,
}

impl Sampler {
    fn new(state: &DensityMatrix, detector: DetectorModel) -> Result<Self> {
        let (values, vectors) = state.eigen();
        let kept: Vec<(f64, &Vec<Complex64>)> = values
            .iter()
            .zip(&vectors)
            .filter(|(v, _)| **v > EIGEN_CUTOFF)
            .map(|(v, w)| (*v, w))
            .collect();
        if kept.is_empty() {
            return Err(Error::NotPhysical("no positive eigenvalue to sample from".into()));
        }
        let total: f64 = kept.iter().map(|(v, _)| v).sum();
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = kept
            .iter()
            .map(|(v, _)| {
                acc += v / total;
                acc
            })
            .collect();
        *cumulative.last_mut().expect("nonempty") = 1.0;
        let components = kept.iter().map(|(_, w)| Component::new(w)).collect::<Result<_>>()?;
        let noise = if detector.eta() < 1.0 {
            Some(
                Normal::new(0.0, detector.noise_variance().sqrt())
                    .map_err(|e| Error::InvalidArgument(format!("noise model: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self {
            components,
            cumulative,
            noise,
        })
    }

    fn guaranteed_rate(&self) -> f64 {
        self.components.iter().map(|c| 1.0 / (c.l1 * c.l1)).fold(f64::INFINITY, f64::min)
    }

    fn chunk(&self, seed: u64, index: usize, len: usize) -> Result<(Vec<(f64, f64)>, u64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let mut out = Vec::with_capacity(len);
        let mut proposals = 0u64;
        while out.len() < len {
            let u: f64 = rng.random();
            let c = self.cumulative.partition_point(|&x| x < u).min(self.components.len() - 1);
            let comp = &self.components[c];
            loop {
                proposals += 1;
                let (q, p, accept) = comp.propose(&mut rng)?;
                if accept {
                    let event = match &self.noise {
                        Some(nd) => (q + nd.sample(&mut rng), p + nd.sample(&mut rng)),
                        None => (q, p),
                    };
                    out.push(event);
                    break;
                }
            }
        }
        Ok((out, proposals))
    }
}

/// Draws `n` events from `state` as recorded by `detector`.
pub fn sample_batch(
    state: &DensityMatrix,
    spec: &StateSpec,
    n: usize,
    detector: DetectorModel,
    seed: u64,
) -> Result<EventBatch> {
    sample_batch_with_stats(state, spec, n, detector, seed).map(|(b, _)| b)
}

/// [`sample_batch`] together with the rejection-sampler statistics.
pub fn sample_batch_with_stats(
    state: &DensityMatrix,
    spec: &StateSpec,
    n: usize,
    detector: DetectorModel,
    seed: u64,
) -> Result<(EventBatch, SamplerStats)> {
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    let sampler = Sampler::new(state, detector)?;
    let chunks = n.div_ceil(CHUNK_SIZE);
    let parts: Vec<(Vec<(f64, f64)>, u64)> = (0..chunks)
        .into_par_iter()
        .map(|i| sampler.chunk(seed, i, CHUNK_SIZE.min(n - i * CHUNK_SIZE)))
        .collect::<Result<_>>()?;
    let mut events = Vec::with_capacity(n);
    let mut proposals = 0;
    for (part, p) in parts {
        events.extend(part);
        proposals += p;
    }
    let stats = SamplerStats {
        proposals,
        accepted: n as u64,
        guaranteed_rate: sampler.guaranteed_rate(),
    };
    let batch = EventBatch {
        events,
        state_spec: spec.clone(),
        eta: detector.eta(),
        seed,
        generator: GENERATOR.to_string(),
    };
    Ok((batch, stats))
}

/// Sizes the global worker pool from `PHASEKIT_THREADS`, if set.
///
/// Returns the thread count applied, or `None` when the variable is absent.
/// Must run before any parallel work; later calls are ignored by rayon.
pub fn configure_threads_from_env() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var("PHASEKIT_THREADS") else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("PHASEKIT_THREADS={raw} is not a positive integer")))?;
    // an already initialized pool keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}
