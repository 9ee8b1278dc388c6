//! Log-gamma helpers and generalized Laguerre recurrences.

use super::dd::DoubleDouble;

pub use statrs::function::gamma::ln_gamma;

/// `ln n!`, tabulated exactly up to 170 and via log-gamma beyond.
pub fn ln_factorial(n: usize) -> f64 {
    statrs::function::factorial::ln_factorial(n as u64)
}

/// `ln √(n! (n+k)!)`.
pub fn ln_sqrt_factorials(n: usize, k: usize) -> f64 {
    0.5 * (ln_factorial(n) + ln_factorial(n + k))
}

/// `ln binom(n, j)`.
pub fn ln_binomial(n: usize, j: usize) -> f64 {
    ln_factorial(n) - ln_factorial(j) - ln_factorial(n - j)
}

/// `L_0^a(x), …, L_{n_max}^a(x)` by the upward three-term recurrence
/// `(l+1) L_{l+1} = (2l + 1 + a − x) L_l − (l + a) L_{l−1}`.
pub fn laguerre_sequence(a: f64, x: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max == 0 {
        return out;
    }
    out.push(1.0 + a - x);
    for l in 1..n_max {
        let lf = l as f64;
        let next = ((2.0 * lf + 1.0 + a - x) * out[l] - (lf + a) * out[l - 1]) / (lf + 1.0);
        out.push(next);
    }
    out
}

/// Double-double counterpart of [`laguerre_sequence`] for an integer order.
pub fn laguerre_sequence_dd(a: usize, x: DoubleDouble, n_max: usize) -> Vec<DoubleDouble> {
    let af = a as f64;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(DoubleDouble::ONE);
    if n_max == 0 {
        return out;
    }
    out.push(DoubleDouble::from(1.0 + af) - x);
    for l in 1..n_max {
        let lf = l as f64;
        let c = DoubleDouble::from(2.0 * lf + 1.0 + af) - x;
        let next = (c * out[l] - out[l - 1] * (lf + af)) / (lf + 1.0);
        out.push(next);
    }
    out
}
