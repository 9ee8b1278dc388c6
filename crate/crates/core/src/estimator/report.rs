//! Report JSON v1 with every number written at 17 significant digits.

use serde::Serialize;
use serde_json::value::RawValue;

use super::optimize::R0Optimum;
use crate::error::Result;
use crate::simulator::EventBatch;

/// One row of the `moments` array.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentRecord {
    pub k: usize,
    pub re: f64,
    pub im: f64,
    pub stat_re: f64,
    pub stat_im: f64,
    pub sys_bound: f64,
    pub r0: f64,
    pub total_re: f64,
    pub total_im: f64,
    pub n_excluded: usize,
    /// Fock-basis value of the moment, when the state is known.
    pub exact: Option<(f64, f64)>,
}

impl MomentRecord {
    pub fn from_optimum(opt: &R0Optimum) -> Self {
        Self {
            k: opt.estimate.k,
            re: opt.estimate.value.re,
            im: opt.estimate.value.im,
            stat_re: opt.budget.stat,
            stat_im: opt.budget_im.stat,
            sys_bound: opt.budget.sys_bound,
            r0: opt.r0,
            total_re: opt.budget.total,
            total_im: opt.budget_im.total,
            n_excluded: opt.estimate.n_excluded,
            exact: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub state: String,
    pub n: usize,
    pub eta: f64,
    pub seed: u64,
    pub generator: String,
    pub moments: Vec<MomentRecord>,
}

fn num(x: f64) -> Box<RawValue> {
    let text = if x.is_finite() { format!("{x:.16e}") } else { "null".to_string() };
    RawValue::from_string(text).expect("formatted float is valid JSON")
}

#[derive(Serialize)]
struct RawMoment {
    k: usize,
    re: Box<RawValue>,
    im: Box<RawValue>,
    stat_re: Box<RawValue>,
    stat_im: Box<RawValue>,
    sys_bound: Box<RawValue>,
    r0: Box<RawValue>,
    total_re: Box<RawValue>,
    total_im: Box<RawValue>,
    n_excluded: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_re: Option<Box<RawValue>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_im: Option<Box<RawValue>>,
}

#[derive(Serialize)]
struct RawReport<'a> {
    state: &'a str,
    n: usize,
    eta: Box<RawValue>,
    seed: u64,
    generator: &'a str,
    moments: Vec<RawMoment>,
}

impl Report {
    pub fn new(batch: &EventBatch, moments: Vec<MomentRecord>) -> Self {
        Self {
            state: batch.state_spec.to_string(),
            n: batch.n(),
            eta: batch.eta,
            seed: batch.seed,
            generator: batch.generator.clone(),
            moments,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let raw = RawReport {
            state: &self.state,
            n: self.n,
            eta: num(self.eta),
            seed: self.seed,
            generator: &self.generator,
            moments: self
                .moments
                .iter()
                .map(|m| RawMoment {
                    k: m.k,
                    re: num(m.re),
                    im: num(m.im),
                    stat_re: num(m.stat_re),
                    stat_im: num(m.stat_im),
                    sys_bound: num(m.sys_bound),
                    r0: num(m.r0),
                    total_re: num(m.total_re),
                    total_im: num(m.total_im),
                    n_excluded: m.n_excluded,
                    exact_re: m.exact.map(|e| num(e.0)),
                    exact_im: m.exact.map(|e| num(e.1)),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&raw)?)
    }
}
