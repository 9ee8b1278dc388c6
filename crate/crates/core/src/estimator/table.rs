//! Memoized `K_k(r; −1)` on a log-spaced grid with cubic interpolation in
//! `(ln r, ln K)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::error::Result;
use crate::kernels::evaluator;

pub const TABLE_NODES: usize = 4096;
pub const TABLE_R_MIN: f64 = 1e-6;
pub const TABLE_R_MAX: f64 = 10.0;
/// Relative accuracy of each tabulated node.
const NODE_TOL: f64 = 1e-11;

#[derive(Debug)]
pub struct KernelTable {
    k: usize,
    ln_r0: f64,
    step: f64,
    ln_kernel: Vec<f64>,
}

impl KernelTable {
    pub fn build(k: usize) -> Result<Self> {
        let ev = evaluator(k)?;
        let ln_r0 = TABLE_R_MIN.ln();
        let step = (TABLE_R_MAX.ln() - ln_r0) / (TABLE_NODES - 1) as f64;
        let ln_kernel = (0..TABLE_NODES)
            .into_par_iter()
            .map(|i| ev.kernel_q_tol((ln_r0 + step * i as f64).exp(), NODE_TOL).map(f64::ln))
            .collect::<Result<_>>()?;
        Ok(Self {
            k,
            ln_r0,
            step,
            ln_kernel,
        })
    }

    /// Shared table for order `k`, built on first request.
    pub fn shared(k: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<KernelTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(t) = cache.lock().expect("kernel table cache").get(&k) {
            return Ok(t.clone());
        }
        // built outside the lock so parallel construction cannot deadlock
        let table = Arc::new(Self::build(k)?);
        Ok(cache
            .lock()
            .expect("kernel table cache")
            .entry(k)
            .or_insert(table)
            .clone())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `K_k(r; −1)`; radii outside the grid are evaluated directly.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(TABLE_R_MIN..=TABLE_R_MAX).contains(&r) {
            return evaluator(self.k)?.kernel_q(r);
        }
        let x = (r.ln() - self.ln_r0) / self.step;
        let i = (x.floor() as usize).clamp(1, TABLE_NODES - 3);
        let t = x - i as f64;
        let y = &self.ln_kernel[i - 1..i + 3];
        // four-point Lagrange on nodes −1, 0, 1, 2
        let w = [
            -t * (t - 1.0) * (t - 2.0) / 6.0,
            (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0,
            (t + 1.0) * t * (t - 1.0) / 6.0,
        ];
        Ok((w[0] * y[0] + w[1] * y[1] + w[2] * y[2] + w[3] * y[3]).exp())
    }
}
