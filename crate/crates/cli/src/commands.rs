//! One function per subcommand; each returns the text to write.

use std::f64::consts::PI;

use phasekit::estimator::{
    estimate_moment, optimize_r0, phase_distribution_from_ws, scaling_experiment, systematic_bound,
    systematic_exact, MomentRecord, Report,
};
use phasekit::kernels::{kernel, kernel_harmonics, kernel_q, omega};
use phasekit::simulator::{load_events, render_events, sample_batch, DetectorModel, EventBatch};
use phasekit::{make_state, DensityMatrix, StateSpec};

use crate::args::{
    parse_grid, EstimateArgs, ExactArgs, FigureArgs, FigureKind, KernelArgs, OmegaArgs, PhasedistArgs, ScalingArgs,
    SimulateArgs, SysboundArgs,
};
use crate::output::{tag_json_object, Cell, Format, Table};
use crate::CliError;

const DEFAULT_R_GRID: &str = "0:6:0.05";
const DEFAULT_R0_GRID: &str = "0:0.5:0.005";
const DEFAULT_RHO_SQ_GRID: &str = "0:9:0.05";
const FIG5_R_GRID: &str = "0:6:0.1";
const FIG5_PHASES: usize = 73;
const FIG5_HARMONICS: usize = 64;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn state(text: &str) -> Result<(StateSpec, DensityMatrix), CliError> {
    let spec: StateSpec = text.parse()?;
    let st = make_state(&spec)?;
    Ok((spec, st))
}

fn grid(text: Option<&str>, default: &str) -> Result<Vec<f64>, CliError> {
    parse_grid(text.unwrap_or(default)).map_err(usage)
}

fn orders(k: &[usize]) -> Result<Vec<usize>, CliError> {
    if k.is_empty() || k.contains(&0) {
        return Err(usage("moment orders --k must be at least 1"));
    }
    let mut k = k.to_vec();
    k.sort_unstable();
    k.dedup();
    Ok(k)
}

fn increasing(values: &[f64], flag: &str) -> Result<Vec<f64>, CliError> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.windows(2).any(|w| w[0] == w[1]) {
        return Err(usage(format!("{flag} lists a value twice")));
    }
    Ok(v)
}

fn simulate_batch(text: &str, n: usize, eta: f64, seed: u64) -> Result<EventBatch, CliError> {
    let (spec, st) = state(text)?;
    Ok(sample_batch(&st, &spec, n, DetectorModel::new(eta)?, seed)?)
}

pub fn simulate(a: &SimulateArgs, header: &str) -> Result<String, CliError> {
    let batch = simulate_batch(&a.state, a.n, a.eta, a.seed)?;
    Ok(render_events(&batch, Some(header)))
}

fn exact_of(batch: &EventBatch, k: usize) -> Option<(f64, f64)> {
    let st = make_state(&batch.state_spec).ok()?;
    st.exact_phase_moment(k).ok().map(|z| (z.re, z.im))
}

pub fn estimate(a: &EstimateArgs, header: &str) -> Result<String, CliError> {
    let batch = match (&a.events, &a.state) {
        (Some(path), _) => load_events(path).map_err(|e| match CliError::from(e) {
            CliError::Io(m) => CliError::Io(format!("{}: {m}", path.display())),
            other => other,
        })?,
        (None, Some(text)) => simulate_batch(text, a.n.expect("required with --state"), a.eta, a.seed)?,
        (None, None) => return Err(usage("either --state or --events is required")),
    };
    let mut records = vec![];
    for k in orders(&a.k)? {
        let mut rec = match a.r0 {
            Some(r0) => {
                let sys = systematic_bound(k, r0)?;
                let e = estimate_moment(&batch, k, r0)?;
                let (re, im) = e.budgets(sys);
                MomentRecord {
                    k,
                    re: e.value.re,
                    im: e.value.im,
                    stat_re: re.stat,
                    stat_im: im.stat,
                    sys_bound: sys,
                    r0,
                    total_re: re.total,
                    total_im: im.total,
                    n_excluded: e.n_excluded,
                    exact: None,
                }
            }
            None => MomentRecord::from_optimum(&optimize_r0(&batch, k)?),
        };
        rec.exact = exact_of(&batch, k);
        records.push(rec);
    }
    let report = Report::new(&batch, records);
    match a.output.format {
        Format::Json => Ok(tag_json_object(&report.to_json()?, header)),
        Format::Csv => {
            let mut t = Table::new(&[
                "k", "re", "im", "stat_re", "stat_im", "sys_bound", "r0", "total_re", "total_im", "n_excluded",
                "exact_re", "exact_im",
            ]);
            t.note("state", &report.state);
            t.note("n", report.n);
            t.note("eta", report.eta);
            t.note("seed", report.seed);
            t.note("generator", &report.generator);
            for m in &report.moments {
                let (ere, eim) = m.exact.unwrap_or((f64::NAN, f64::NAN));
                t.push(vec![
                    m.k.into(),
                    m.re.into(),
                    m.im.into(),
                    m.stat_re.into(),
                    m.stat_im.into(),
                    m.sys_bound.into(),
                    m.r0.into(),
                    m.total_re.into(),
                    m.total_im.into(),
                    m.n_excluded.into(),
                    ere.into(),
                    eim.into(),
                ]);
            }
            Ok(t.render(Format::Csv, header))
        }
    }
}

pub fn exact(a: &ExactArgs, header: &str) -> Result<String, CliError> {
    let (spec, st) = state(&a.state)?;
    let mut t = Table::new(&["k", "re", "im"]);
    t.note("state", &spec);
    for k in orders(&a.k)? {
        let z = st.exact_phase_moment(k)?;
        t.push(vec![k.into(), z.re.into(), z.im.into()]);
    }
    Ok(t.render(a.output.format, header))
}

/// `K_k(r; s)` with `s = −1` routed to the Husimi kernel.
fn kernel_value(k: usize, r: f64, s: f64) -> Result<f64, CliError> {
    if s == -1.0 {
        Ok(kernel_q(k, r)?)
    } else {
        Ok(kernel(k, r, s)?)
    }
}

/// Rows `k,s,r,K` in lexicographic order. On the default grid the origin is
/// skipped for `s = −1`, where the kernel diverges.
fn kernel_table(ks: &[usize], ss: &[f64], r: Option<&str>) -> Result<Table, CliError> {
    let radii = grid(r, DEFAULT_R_GRID)?;
    let mut t = Table::new(&["k", "s", "r", "K"]);
    for &k in ks {
        for &s in ss {
            for &rr in &radii {
                if r.is_none() && s == -1.0 && rr == 0.0 {
                    continue;
                }
                t.push(vec![k.into(), s.into(), rr.into(), kernel_value(k, rr, s)?.into()]);
            }
        }
    }
    Ok(t)
}

pub fn kernel_cmd(a: &KernelArgs, header: &str) -> Result<String, CliError> {
    let t = kernel_table(&orders(&a.k)?, &increasing(&a.s, "--s")?, a.r.as_deref())?;
    Ok(t.render(a.output.format, header))
}

pub fn omega_cmd(a: &OmegaArgs, header: &str) -> Result<String, CliError> {
    let mut t = Table::new(&["rho_sq", "omega"]);
    t.note("k", a.k);
    for x in grid(a.rho_sq.as_deref(), DEFAULT_RHO_SQ_GRID)? {
        t.push(vec![x.into(), omega(a.k, x)?.into()]);
    }
    Ok(t.render(a.output.format, header))
}

fn sysbound_table(ks: &[usize], r0: Option<&str>, st: Option<&DensityMatrix>) -> Result<Table, CliError> {
    let radii = grid(r0, DEFAULT_R0_GRID)?;
    let mut t = if st.is_some() {
        Table::new(&["k", "r0", "bound", "exact_re", "exact_im"])
    } else {
        Table::new(&["k", "r0", "bound"])
    };
    for &k in ks {
        for &r in &radii {
            let mut row: Vec<Cell> = vec![k.into(), r.into(), systematic_bound(k, r)?.into()];
            if let Some(st) = st {
                let z = systematic_exact(st, k, r)?;
                row.extend([Cell::from(z.re), Cell::from(z.im)]);
            }
            t.push(row);
        }
    }
    Ok(t)
}

pub fn sysbound(a: &SysboundArgs, header: &str) -> Result<String, CliError> {
    let st = a.state.as_deref().map(state).transpose()?;
    let mut t = sysbound_table(&orders(&a.k)?, a.r0.as_deref(), st.as_ref().map(|s| &s.1))?;
    if let Some((spec, _)) = &st {
        t.note("state", spec);
    }
    Ok(t.render(a.output.format, header))
}

pub fn scaling(a: &ScalingArgs, header: &str) -> Result<String, CliError> {
    let spec: StateSpec = a.state.parse()?;
    let seeds: Vec<u64> = (a.seed..a.seed.saturating_add(a.seeds)).collect();
    let fit = scaling_experiment(&spec, a.k, &a.n, &seeds)?;
    let mut t = Table::new(&["n", "error", "r0"]);
    t.note("state", &spec);
    t.note("k", fit.k);
    t.note("seeds", seeds.len());
    t.note("exponent", fit.exponent);
    t.note("exponent_stderr", fit.exponent_stderr);
    t.note("prefactor", fit.prefactor);
    t.note("r0_exponent", fit.r0_exponent);
    t.note("r0_exponent_stderr", fit.r0_exponent_stderr);
    t.note("r0_prefactor", fit.r0_prefactor);
    for i in 0..fit.n_values.len() {
        t.push(vec![fit.n_values[i].into(), fit.errors[i].into(), fit.r0s[i].into()]);
    }
    Ok(t.render(a.output.format, header))
}

fn phase_grid(points: usize) -> Result<Vec<f64>, CliError> {
    if points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    Ok((0..points).map(|i| -PI + 2.0 * PI * i as f64 / (points - 1) as f64).collect())
}

pub fn phasedist(a: &PhasedistArgs, header: &str) -> Result<String, CliError> {
    let (spec, st) = state(&a.state)?;
    let phis = phase_grid(a.points)?;
    let rec = phase_distribution_from_ws(&st, a.s, &phis, a.r_max)?;
    let mut t = Table::new(&["phi", "p", "p_exact"]);
    t.note("state", &spec);
    t.note("s", a.s);
    t.note("r_max", a.r_max);
    t.note("harmonics", rec.k_max);
    t.note("normalization", rec.normalization);
    t.note("truncation_bound", rec.truncation_bound);
    for (phi, p) in phis.iter().zip(&rec.values) {
        t.push(vec![(*phi).into(), (*p).into(), st.canonical_phase_distribution(*phi).into()]);
    }
    Ok(t.render(a.output.format, header))
}

pub fn figure(a: &FigureArgs, header: &str) -> Result<String, CliError> {
    let ks = |default: &[usize]| orders(a.k.as_deref().unwrap_or(default));
    let t = match a.which {
        FigureKind::Fig1 => {
            let ss = increasing(a.s.as_deref().unwrap_or(&[0.75, 0.0, -0.75, -1.0]), "--s")?;
            kernel_table(&ks(&[1])?, &ss, a.r.as_deref())?
        }
        FigureKind::Fig3 => sysbound_table(&ks(&[1, 2, 3, 4])?, a.r0.as_deref(), None)?,
        FigureKind::Fig4 => {
            let batch = simulate_batch(&a.state, a.n, a.eta, a.seed)?;
            let st = make_state(&batch.state_spec)?;
            let mut t = Table::new(&[
                "k", "re", "im", "stat_re", "stat_im", "sys_bound", "r0", "exact_re", "exact_im", "q_re", "q_im",
            ]);
            t.note("state", &batch.state_spec);
            t.note("n", batch.n());
            t.note("eta", batch.eta);
            t.note("seed", batch.seed);
            for k in ks(&[1, 2, 3, 4])? {
                let opt = optimize_r0(&batch, k)?;
                let exact = st.exact_phase_moment(k)?;
                let q = st.q_phase_moment(k)?;
                t.push(vec![
                    k.into(),
                    opt.estimate.value.re.into(),
                    opt.estimate.value.im.into(),
                    opt.budget.stat.into(),
                    opt.budget_im.stat.into(),
                    opt.budget.sys_bound.into(),
                    opt.r0.into(),
                    exact.re.into(),
                    exact.im.into(),
                    q.re.into(),
                    q.im.into(),
                ]);
            }
            t
        }
        FigureKind::Fig5 => {
            let s = match a.s.as_deref() {
                None => 0.5,
                Some([s]) => *s,
                Some(_) => return Err(usage("fig5 takes a single --s")),
            };
            if !(s > 0.0 && s < 1.0) {
                return Err(usage(format!("the phase kernel exists only for 0 < s < 1, got s={s}")));
            }
            let mut t = Table::new(&["r", "phi", "F"]);
            t.note("s", s);
            t.note("harmonics", FIG5_HARMONICS);
            let phis = phase_grid(FIG5_PHASES)?;
            for r in grid(a.r.as_deref(), FIG5_R_GRID)? {
                let h = kernel_harmonics(r, s, FIG5_HARMONICS)?;
                for &phi in &phis {
                    let sum: f64 =
                        h.iter().enumerate().map(|(i, kk)| 2.0 * kk * ((i + 1) as f64 * phi).cos()).sum();
                    t.push(vec![r.into(), phi.into(), ((1.0 + sum) / (2.0 * PI)).into()]);
                }
            }
            t
        }
    };
    Ok(t.render(a.output.format, header))
}
