use std::f64::consts::PI;

use num_complex::Complex64;
use phasekit::estimator::{
    efficiency_bias, estimate_moment, moments_via_normal_order, optimize_r0, phase_distribution_from_ws,
    scaling_experiment, systematic_bound, systematic_exact, NormalOrderCoefficient, KernelTable, MomentRecord,
    Report, TABLE_R_MAX, TABLE_R_MIN,
};
use phasekit::kernels::kernel_q;
use phasekit::simulator::{sample_batch, DetectorModel, EventBatch};
use phasekit::{make_state, Error, StateSpec};
use proptest::prelude::*;

fn draw(spec: &StateSpec, n: usize, seed: u64) -> EventBatch {
    let st = make_state(spec).unwrap();
    sample_batch(&st, spec, n, DetectorModel::ideal(), seed).unwrap()
}

#[test]
fn regularized_estimate_is_unbiased() {
    let spec = StateSpec::coherent(1.0);
    let st = make_state(&spec).unwrap();
    let r0 = 0.05;
    let seeds = 50;
    let batches: Vec<EventBatch> = (0..seeds).map(|s| draw(&spec, 100_000, 1000 + s)).collect();
    for k in [1, 2] {
        let mut mean = Complex64::new(0.0, 0.0);
        let (mut var_re, mut var_im) = (0.0, 0.0);
        for b in &batches {
            let e = estimate_moment(b, k, r0).unwrap();
            mean += e.value;
            var_re += e.stat_err.0.powi(2);
            var_im += e.stat_err.1.powi(2);
        }
        let m = seeds as f64;
        mean /= m;
        let (se_re, se_im) = (var_re.sqrt() / m, var_im.sqrt() / m);
        // excluded events remove the inner part of the radial integral
        let expected = st.exact_phase_moment(k).unwrap() - systematic_exact(&st, k, r0).unwrap();
        assert!((mean.re - expected.re).abs() < 3.0 * se_re, "k={k}: {mean} vs {expected}, se {se_re}");
        assert!((mean.im - expected.im).abs() < 3.0 * se_im, "k={k}: {mean} vs {expected}, se {se_im}");
    }
}

#[test]
fn exact_bias_never_exceeds_bound() {
    let specs = [
        StateSpec::coherent(1.0),
        StateSpec::coherent(Complex64::new(0.2, 0.4)),
        StateSpec::vacuum_plus(1),
        StateSpec::vacuum_plus(3),
        "super:0:1,1:-1,2:0.5i".parse().unwrap(),
    ];
    for spec in specs {
        let st = make_state(&spec).unwrap();
        for k in 1..st.dim().min(5) {
            for r0 in [0.01, 0.1, 0.4, 1.0] {
                let exact = systematic_exact(&st, k, r0).unwrap().norm();
                let bound = systematic_bound(k, r0).unwrap();
                assert!(exact <= bound + 1e-10, "{spec} k={k} r0={r0}: {exact} > {bound}");
            }
        }
    }
}

#[test]
fn bound_is_saturated_to_one_half() {
    for k in 1..=4 {
        let st = make_state(&StateSpec::vacuum_plus(k)).unwrap();
        for r0 in [1e-3, 0.05, 0.5] {
            let ratio = systematic_exact(&st, k, r0).unwrap().norm() / systematic_bound(k, r0).unwrap();
            assert!((ratio - 0.5).abs() < 5e-3, "k={k} r0={r0}: {ratio}");
        }
    }
}

#[test]
fn bound_shrinks_with_order() {
    let b: Vec<f64> = (1..=4).map(|k| systematic_bound(k, 0.2).unwrap()).collect();
    assert!(b.windows(2).all(|w| w[1] < w[0]), "{b:?}");
}

#[test]
fn bound_grows_as_radius_squared_up_to_a_log() {
    // near the origin the integrand is r/√(−2 ln r) times a constant
    for k in 1..=4 {
        for r0 in [1e-3, 3e-3, 1e-2] {
            let b = systematic_bound(k, r0).unwrap();
            let lead = r0 * r0 / (2.0 * (-2.0 * r0.ln()).sqrt());
            let r = 1e-3f64;
            let constant = kernel_q(k, r).unwrap() * r.powi(k as i32) * (-2.0 * r.ln()).sqrt();
            let prefactor = 2.0 / (1..=k).map(|i| i as f64).product::<f64>().sqrt();
            let ratio = b / (prefactor * constant * lead);
            assert!((ratio - 1.0).abs() < 0.1, "k={k} r0={r0}: {ratio}");
        }
    }
}

#[test]
fn exact_bias_follows_power_counting() {
    // |1⟩+|2⟩ gives Q_1 ∝ r³, so the bias integrand goes like r³ and the bias like r0⁴
    let st = make_state(&"super:1:1,2:1".parse().unwrap()).unwrap();
    let a = systematic_exact(&st, 1, 0.01).unwrap().norm();
    let b = systematic_exact(&st, 1, 0.02).unwrap().norm();
    let slope = (b / a).log2();
    assert!((slope - 4.0).abs() < 0.15, "{slope}");
    assert_eq!(systematic_exact(&st, 1, 0.0).unwrap(), Complex64::new(0.0, 0.0));
}

#[test]
fn fock_moment_vanishes_within_errors() {
    let b = draw(&StateSpec::fock(3), 200_000, 6);
    for k in 1..=3 {
        let e = estimate_moment(&b, k, 0.0).unwrap();
        assert!(e.value.re.abs() < 5.0 * e.stat_err.0 && e.value.im.abs() < 5.0 * e.stat_err.1, "k={k}: {e:?}");
        assert_eq!(e.n_excluded, 0);
    }
}

#[test]
fn dispersion_is_bounded_without_vacuum() {
    let spec = StateSpec::fock(2);
    for k in 1..=2 {
        let small = estimate_moment(&draw(&spec, 50_000, 31), k, 0.0).unwrap();
        let large = estimate_moment(&draw(&spec, 100_000, 32), k, 0.0).unwrap();
        let s_small = small.stat_err.0 * (50_000f64).sqrt();
        let s_large = large.stat_err.0 * (100_000f64).sqrt();
        let ratio = s_large / s_small;
        assert!((1.0 / 1.5..1.5).contains(&ratio), "k={k}: {ratio}");
    }
}

#[test]
fn duplicated_batch_keeps_value_and_shrinks_error() {
    let b = draw(&StateSpec::coherent(1.0), 20_000, 2);
    let d = b.concatenated(&b);
    for k in 1..=3 {
        let a = estimate_moment(&b, k, 0.1).unwrap();
        let c = estimate_moment(&d, k, 0.1).unwrap();
        assert!((a.value - c.value).norm() < 1e-12);
        assert!((a.stat_err.0 / c.stat_err.0 - 2f64.sqrt()).abs() < 1e-12);
        assert!((a.stat_err.1 / c.stat_err.1 - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(c.n_used + c.n_excluded, d.n());
    }
}

#[test]
fn optimized_radius_grows_with_order() {
    let b = draw(&StateSpec::coherent(1.0), 200_000, 17);
    let radii: Vec<f64> = (1..=4).map(|k| optimize_r0(&b, k).unwrap().r0).collect();
    assert!(radii.windows(2).all(|w| w[1] >= w[0]), "{radii:?}");
    assert_eq!(optimize_r0(&b, 2).unwrap(), optimize_r0(&b, 2).unwrap());
}

#[test]
fn estimator_errors() {
    let mut b = draw(&StateSpec::coherent(1.0), 10, 1);
    assert!(estimate_moment(&b, 0, 0.1).is_err());
    assert!(estimate_moment(&b, 1, -0.1).is_err());
    b.events[3] = (0.0, 0.0);
    assert!(matches!(estimate_moment(&b, 1, 0.0), Err(Error::EventAtOrigin)));
    assert!(estimate_moment(&b, 1, 1e-9).is_ok());
    b.events.clear();
    assert!(matches!(estimate_moment(&b, 1, 0.1), Err(Error::EmptyBatch)));
    assert!(matches!(optimize_r0(&b, 1), Err(Error::EmptyBatch)));
}

#[test]
fn efficiency_bias_properties() {
    let st = make_state(&StateSpec::coherent(0.5)).unwrap();
    for k in 1..=3 {
        assert_eq!(efficiency_bias(&st, k, 1.0).unwrap(), Complex64::new(0.0, 0.0));
    }
    let b = efficiency_bias(&st, 1, 0.9).unwrap();
    assert!(b.re > 0.0 && b.re < st.exact_phase_moment(1).unwrap().re, "{b}");
    let near_vacuum = efficiency_bias(&make_state(&StateSpec::coherent(0.3)).unwrap(), 1, 0.9).unwrap();
    let bright = efficiency_bias(&make_state(&StateSpec::coherent(2.0)).unwrap(), 1, 0.9).unwrap();
    assert!(near_vacuum.norm() > bright.norm());
    // lower efficiency, larger bias
    assert!(efficiency_bias(&st, 1, 0.7).unwrap().re > b.re);
}

#[test]
fn normal_order_expansion_matches_exact_moments() {
    let specs = [
        StateSpec::coherent(1.0),
        StateSpec::coherent(Complex64::new(0.5, -0.5)),
        StateSpec::vacuum_plus(2),
        "super:0:1,1:0.5i,3:-0.7".parse().unwrap(),
        StateSpec::fock(0).with_dim(8),
    ];
    for spec in specs {
        let st = make_state(&spec).unwrap();
        for k in 1..st.dim().min(5) {
            let exact = st.exact_phase_moment(k).unwrap();
            let via = moments_via_normal_order(&st, k, 30, NormalOrderCoefficient::Corrected).unwrap();
            assert!((exact - via).norm() < 1e-6, "{spec} k={k}: {exact} vs {via}");
        }
    }
    let st = make_state(&StateSpec::coherent(1.0)).unwrap();
    let v = moments_via_normal_order(&st, 1, 30, NormalOrderCoefficient::Corrected).unwrap();
    assert!((v.re - 0.7732).abs() < 1e-4);
}

#[test]
fn small_amplitude_leading_order() {
    let alpha: f64 = 0.1;
    let st = make_state(&StateSpec::coherent(alpha)).unwrap();
    let lead = alpha * alpha / 2f64.sqrt();
    let corrected = moments_via_normal_order(&st, 2, 30, NormalOrderCoefficient::Corrected).unwrap();
    assert!((corrected.re / lead - 1.0).abs() < 0.02, "{corrected}");
    let printed = moments_via_normal_order(&st, 2, 30, NormalOrderCoefficient::Printed).unwrap();
    assert!((printed.re / lead - 1.0).abs() > 0.2, "{printed}");
}

#[test]
fn reconstructed_phase_distribution_is_normalized() {
    let st = make_state(&StateSpec::coherent(0.7).with_dim(30)).unwrap();
    let m = 64;
    let grid: Vec<f64> = (0..m).map(|i| -PI + 2.0 * PI * i as f64 / m as f64).collect();
    let rec = phase_distribution_from_ws(&st, 0.5, &grid, 8.0).unwrap();
    let total: f64 = rec.values.iter().sum::<f64>() * 2.0 * PI / m as f64;
    assert!((total - 1.0).abs() <= rec.truncation_bound + 1e-12, "{total} {}", rec.truncation_bound);
    for (phi, v) in grid.iter().zip(&rec.values) {
        assert!((v - st.canonical_phase_distribution(*phi)).abs() < 1e-2);
    }
    assert!(phase_distribution_from_ws(&st, 0.5, &grid, 1.0).is_err());
    assert!(phase_distribution_from_ws(&st, -0.5, &grid, 8.0).is_err());
}

#[test]
fn kernel_table_interpolates_husimi_kernel() {
    let table = KernelTable::shared(2).unwrap();
    for i in 0..200 {
        let r = TABLE_R_MIN * (TABLE_R_MAX / TABLE_R_MIN).powf((i as f64 + 0.37) / 200.0);
        let exact = kernel_q(2, r).unwrap();
        assert!((table.eval(r).unwrap() / exact - 1.0).abs() < 1e-7, "r={r}");
    }
}

#[test]
fn small_scaling_experiment_decreases() {
    let seeds: Vec<u64> = (0..10).collect();
    let fit = scaling_experiment(&StateSpec::coherent(1.0), 2, &[1_000, 10_000, 100_000], &seeds).unwrap();
    assert!(fit.exponent < 0.0 && fit.r0_exponent < 0.0, "{fit:?}");
    assert!(fit.errors.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn report_json_has_required_fields() {
    let b = draw(&StateSpec::coherent(1.0), 5_000, 3);
    let opt = optimize_r0(&b, 1).unwrap();
    let json = Report::new(&b, vec![MomentRecord::from_optimum(&opt)]).to_json().unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    for key in ["state", "n", "eta", "seed", "moments"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let m = &v["moments"][0];
    for key in ["k", "re", "im", "stat_re", "stat_im", "sys_bound", "r0", "total_re", "total_im", "n_excluded"] {
        assert!(m.get(key).is_some(), "{key}");
    }
    assert_eq!(m["re"].as_f64().unwrap(), opt.estimate.value.re);
    assert_eq!(v["state"], "coherent:1");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn estimate_is_deterministic_and_counts_add_up(seed in 0u64..1000, r0 in 0.0f64..0.8, k in 1usize..4) {
        let b = draw(&StateSpec::coherent(0.8), 2_000, seed);
        let a = estimate_moment(&b, k, r0.max(1e-12)).unwrap();
        let c = estimate_moment(&b, k, r0.max(1e-12)).unwrap();
        prop_assert_eq!(a, c);
        prop_assert_eq!(a.n_used + a.n_excluded, b.n());
        prop_assert!(a.stat_err.0 >= 0.0 && a.stat_err.1 >= 0.0);
    }

    #[test]
    fn bound_is_monotone(k in 1usize..5, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(systematic_bound(k, lo).unwrap() <= systematic_bound(k, hi).unwrap());
    }
}
