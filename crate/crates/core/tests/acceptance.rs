//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Exits 0 even when a criterion fails so that the workspace test run stays
//! usable; set `PHASEKIT_ACCEPTANCE_STRICT=1` to turn failures into a nonzero exit.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use phasekit::estimator::{
    efficiency_bias, estimate_moment, moments_via_normal_order, optimize_r0, phase_distribution_from_ws,
    scaling_experiment, systematic_bound, systematic_exact, NormalOrderCoefficient,
};
use phasekit::kernels::{c_coefficients, evaluator, kernel_q, kernel_s_positive, omega, KernelMethod};
use phasekit::numeric::Quadrature;
use phasekit::simulator::{sample_batch, DetectorModel};
use phasekit::{make_state, PhasePoint, StateSpec};

const S_GRID: [f64; 5] = [-0.75, -0.5, 0.0, 0.5, 0.75];
const R_GRID: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn run(id: usize, title: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    if let Some(limit) = limit {
        if elapsed > limit {
            out.pass = false;
            out.detail.push_str(&format!("; runtime over {:.0} s", limit.as_secs_f64()));
        }
    }
    println!(
        "criterion {id:>2}: {}  {title}  [{}] ({:.2} s)",
        if out.pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64()
    );
    out.pass
}

fn exact_moments() -> Outcome {
    let st = make_state(&StateSpec::coherent(1.0).with_dim(30)).unwrap();
    let want = [0.7732, 0.4805, 0.2559, 0.1209];
    let mut worst: f64 = 0.0;
    let mut vals = vec![];
    for (i, w) in want.iter().enumerate() {
        let psi = st.exact_phase_moment(i + 1).unwrap();
        worst = worst.max((psi.re - w).abs()).max(psi.im.abs());
        vals.push(format!("{:.5}", psi.re));
    }
    outcome(worst <= 5e-5, format!("psi={} max dev {worst:.1e}", vals.join(",")))
}

fn table_reproduction() -> Outcome {
    let spec = StateSpec::coherent(1.0);
    let st = make_state(&spec).unwrap();
    let batch = sample_batch(&st, &spec, 1_000_000, DetectorModel::ideal(), 7).unwrap();
    let quoted_stat = [0.0006, 0.003, 0.01, 0.02];
    let mut pass = true;
    let mut parts = vec![];
    for k in 1..=4 {
        let opt = optimize_r0(&batch, k).unwrap();
        let psi = st.exact_phase_moment(k).unwrap().re;
        let est = opt.estimate.value;
        let total = opt.budget.total;
        let stat = opt.budget.stat;
        let ok_re = (est.re - psi).abs() <= 4.0 * total;
        let ratio = stat / quoted_stat[k - 1];
        let ok_stat = (1.0 / 3.0..=3.0).contains(&ratio);
        let ok_im = est.im.abs() <= 4.0 * opt.budget_im.stat;
        pass &= ok_re && ok_stat && ok_im;
        parts.push(format!(
            "k={k} re={:.4} im={:+.4} stat={stat:.1e} sys={:.1e} r0={:.3}",
            est.re, est.im, opt.budget.sys_bound, opt.r0
        ));
    }
    outcome(pass, parts.join("; "))
}

fn kernel_representations() -> Outcome {
    let mut worst_hybrid: f64 = 0.0;
    let mut worst_series: f64 = 0.0;
    let mut series_points = 0;
    for k in 1..=4 {
        let ev = evaluator(k).unwrap();
        for s in S_GRID {
            for r in R_GRID {
                let integral = ev.kernel_quadrature(r, s).unwrap();
                worst_hybrid = worst_hybrid.max((ev.kernel(r, s).unwrap() - integral).abs());
                if ev.method(r, s) == KernelMethod::Series {
                    series_points += 1;
                    worst_series = worst_series.max((ev.kernel_series(r, s).unwrap() - integral).abs());
                }
            }
        }
    }
    let mut worst_positive: f64 = 0.0;
    for k in 1..=4 {
        let ev = evaluator(k).unwrap();
        for s in [0.25, 0.5, 0.75] {
            for r in R_GRID {
                let a = kernel_s_positive(k, r, s).unwrap();
                worst_positive = worst_positive.max((a - ev.kernel_quadrature(r, s).unwrap()).abs());
            }
        }
    }
    let pass = worst_hybrid < 1e-6 && worst_series < 1e-6 && worst_positive < 1e-6;
    outcome(
        pass,
        format!(
            "hybrid-integral {worst_hybrid:.1e} over 100 points, series-integral {worst_series:.1e} \
             over {series_points} series points, positive-s series {worst_positive:.1e}"
        ),
    )
}

fn omega_closed_form() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..=900 {
        let t = 0.01 * i as f64;
        let x = t / 4.0;
        let (mut term, mut bessel) = (1.0f64, 1.0f64);
        for m in 1..100 {
            term *= x * x / (m * m) as f64;
            bessel += term;
        }
        let want = 2.0 * PI * (-1.5 * t).exp() * bessel;
        worst = worst.max((omega(2, t).unwrap() / want - 1.0).abs());
    }
    let mut worst_one: f64 = 0.0;
    for i in 0..=200 {
        let t = 0.5 * i as f64;
        worst_one = worst_one.max((omega(1, t).unwrap() / (2.0 * (-t).exp()) - 1.0).abs());
    }
    outcome(
        worst < 1e-6 && worst_one < 1e-14,
        format!("omega2 rel {worst:.1e}, omega1 rel {worst_one:.1e}"),
    )
}

fn divergence_law() -> Outcome {
    let mut pass = true;
    let mut parts = vec![];
    for k in 1..=4 {
        let xs: Vec<f64> = (0..=10).map(|i| (1e-3f64).ln() + i as f64 * (10f64).ln() / 10.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| kernel_q(k, x.exp()).unwrap().ln()).collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        pass &= (slope + k as f64).abs() <= 0.1;
        parts.push(format!("k={k} slope={slope:.3}"));
    }
    outcome(pass, parts.join(", "))
}

fn quadratic_law() -> Outcome {
    let mut pass_quadratic = true;
    let mut parts = vec![];
    for k in 1..=4 {
        let ratios: Vec<f64> = (0..=10)
            .map(|i| {
                let r0 = 1e-3 * 10f64.powf(i as f64 / 10.0);
                systematic_bound(k, r0).unwrap() / (r0 * r0)
            })
            .collect();
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let dev = ratios.iter().map(|r| (r / mean - 1.0).abs()).fold(0.0, f64::max);
        pass_quadratic &= dev <= 0.1;
        parts.push(format!("k={k} bound/r0^2 spread {:.1}%", 100.0 * dev));
    }
    let mut worst_half: f64 = 0.0;
    for k in 1..=4 {
        let st = make_state(&StateSpec::vacuum_plus(k)).unwrap();
        for r0 in [1e-3, 1e-2, 0.1, 0.5] {
            let ratio = systematic_exact(&st, k, r0).unwrap().norm() / systematic_bound(k, r0).unwrap();
            worst_half = worst_half.max((ratio / 0.5 - 1.0).abs());
        }
    }
    parts.push(format!("half-bound rel dev {worst_half:.1e}"));
    outcome(pass_quadratic && worst_half < 0.01, parts.join(", "))
}

fn scaling() -> Outcome {
    let seeds: Vec<u64> = (100..110).collect();
    let fit = scaling_experiment(&StateSpec::coherent(1.0), 2, &[10_000, 100_000, 1_000_000], &seeds).unwrap();
    let pass = (fit.exponent + 1.0 / 3.0).abs() <= 0.15;
    outcome(
        pass,
        format!(
            "exponent {:.3} +- {:.3}, r0 exponent {:.3} +- {:.3}, errors {:?}",
            fit.exponent,
            fit.exponent_stderr,
            fit.r0_exponent,
            fit.r0_exponent_stderr,
            fit.errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>()
        ),
    )
}

fn efficiency() -> Outcome {
    let spec = StateSpec::coherent(0.5);
    let st = make_state(&spec).unwrap();
    let zero = (1..=4).all(|k| efficiency_bias(&st, k, 1.0).unwrap().norm() == 0.0);
    let delta = efficiency_bias(&st, 1, 0.9).unwrap();
    let psi = st.exact_phase_moment(1).unwrap();
    let batch = sample_batch(&st, &spec, 1_000_000, DetectorModel::new(0.9).unwrap(), 2024).unwrap();
    let opt = optimize_r0(&batch, 1).unwrap();
    let shift = psi.re - opt.estimate.value.re;
    let ok = (shift - delta.re).abs() <= 4.0 * opt.budget.total;
    outcome(
        zero && delta.re > 0.0 && ok,
        format!(
            "bias(eta=1)=0: {zero}, predicted {:.5}, observed {shift:.5} +- {:.1e}",
            delta.re, opt.budget.total
        ),
    )
}

fn reconstruction() -> Outcome {
    // 65 Fock levels so the reconstruction retains all 64 kernel harmonics
    let st = make_state(&StateSpec::coherent(1.0).with_dim(65)).unwrap();
    let grid: Vec<f64> = (0..181).map(|i| -PI + 2.0 * PI * i as f64 / 180.0).collect();
    let rec = phase_distribution_from_ws(&st, 0.5, &grid, 8.0).unwrap();
    let worst = grid
        .iter()
        .zip(&rec.values)
        .map(|(phi, v)| (v - st.canonical_phase_distribution(*phi)).abs())
        .fold(0.0, f64::max);
    outcome(
        worst < 1e-2 && rec.k_max == 64,
        format!("max error {worst:.1e} with {} harmonics", rec.k_max),
    )
}

fn property_suites() -> Outcome {
    let mut failures = vec![];
    for k in 1..=4 {
        let c = c_coefficients(k, 60).unwrap();
        if !c.windows(2).all(|w| w[0] > 0.0 && w[1] <= w[0]) || c.iter().any(|v| *v > c[0]) {
            failures.push(format!("C_l k={k}"));
        }
    }
    let specs = [
        StateSpec::coherent(1.0),
        StateSpec::vacuum_plus(2),
        "super:0:1,1:0.5i,3:-0.7".parse().unwrap(),
    ];
    for spec in &specs {
        let st = make_state(spec).unwrap();
        let quad = Quadrature::with_rel_tol(1e-10);
        let total = quad
            .integrate(
                |r| {
                    r * quad
                        .integrate(|phi| st.q_value(PhasePoint::new(r, phi).unwrap()), 0.0, 2.0 * PI)
                        .unwrap()
                        .value
                },
                0.0,
                9.0,
            )
            .unwrap()
            .value;
        if !(1.0 - 1e-6..=1.0 + 1e-9).contains(&total) {
            failures.push(format!("Q normalization {spec}"));
        }
        for k in 1..st.dim().min(5) {
            let exact = st.exact_phase_moment(k).unwrap();
            let via = moments_via_normal_order(&st, k, 30, NormalOrderCoefficient::Corrected).unwrap();
            if (exact - via).norm() >= 1e-6 {
                failures.push(format!("normal order {spec} k={k}"));
            }
        }
        let batch = sample_batch(&st, spec, 20_000, DetectorModel::ideal(), 5).unwrap();
        let again = sample_batch(&st, spec, 20_000, DetectorModel::ideal(), 5).unwrap();
        if batch != again
            || estimate_moment(&batch, 1, 0.05).unwrap() != estimate_moment(&again, 1, 0.05).unwrap()
            || optimize_r0(&batch, 1).unwrap() != optimize_r0(&again, 1).unwrap()
        {
            failures.push(format!("determinism {spec}"));
        }
    }
    if failures.is_empty() {
        outcome(true, "C_l, Q normalization, determinism, normal-order equivalence")
    } else {
        outcome(false, failures.join(", "))
    }
}

fn main() {
    let _ = phasekit::simulator::configure_threads_from_env();
    let secs = |s| Some(Duration::from_secs(s));
    let results = [
        run(1, "exact moments of coherent state", secs(1), exact_moments),
        run(2, "Monte Carlo moments at 1e6 events", secs(300), table_reproduction),
        run(3, "kernel series vs integral", None, kernel_representations),
        run(4, "angular integral closed forms", None, omega_closed_form),
        run(5, "Husimi kernel divergence law", None, divergence_law),
        run(6, "systematic bound quadratic law and saturation", None, quadratic_law),
        run(7, "optimized error scaling exponent", secs(1800), scaling),
        run(8, "efficiency bias", None, efficiency),
        run(9, "phase distribution reconstruction", None, reconstruction),
        run(10, "property suites", secs(120), property_suites),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    let strict = std::env::var("PHASEKIT_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
