//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "phasekit",
    version,
    about = "Canonical phase moments from simulated double-homodyne detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw detection events and write them as an event file.
    Simulate(SimulateArgs),
    /// Estimate phase moments from simulated or saved events.
    Estimate(EstimateArgs),
    /// Exact phase moments of a state.
    Exact(ExactArgs),
    /// Tabulate the sampling kernel K_k(r; s).
    Kernel(KernelArgs),
    /// Tabulate the angular integral Omega_k(rho^2).
    Omega(OmegaArgs),
    /// Tabulate the state-independent systematic bound over r0.
    Sysbound(SysboundArgs),
    /// Fit the decay of the optimized error with the number of events.
    Scaling(ScalingArgs),
    /// Reconstruct the canonical phase distribution from W_s.
    Phasedist(PhasedistArgs),
    /// Emit plot-ready data for one of the standard figures.
    Figure(FigureArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// State, e.g. `coherent:1`, `fock:2`, `super:0:1,2:0.5i`, optional `@D` truncation.
    #[arg(long)]
    pub state: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Event file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Simulate events from this state.
    #[arg(long, required_unless_present = "events", conflicts_with = "events")]
    pub state: Option<String>,
    /// Read events from this file instead of simulating.
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long, required_unless_present = "events")]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    pub k: Vec<usize>,
    /// Fixed regularization radius; optimized per moment when omitted.
    #[arg(long)]
    pub r0: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub state: String,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    pub k: Vec<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub k: Vec<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
    pub s: Vec<f64>,
    /// Radii as `a,b,c` or `start:stop:step`; default 0:6:0.05.
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OmegaArgs {
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Values of rho^2 as `a,b,c` or `start:stop:step`; default 0:9:0.05.
    #[arg(long = "rho-sq")]
    pub rho_sq: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SysboundArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    pub k: Vec<usize>,
    /// Radii as `a,b,c` or `start:stop:step`; default 0:0.5:0.005.
    #[arg(long)]
    pub r0: Option<String>,
    /// Also evaluate the exact regularization bias of this state.
    #[arg(long)]
    pub state: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long, default_value = "coherent:1")]
    pub state: String,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, value_delimiter = ',', default_value = "10000,100000,1000000")]
    pub n: Vec<usize>,
    /// Number of seeds per event count.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    /// First seed; seeds run consecutively from here.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PhasedistArgs {
    #[arg(long)]
    pub state: String,
    #[arg(long, default_value_t = 0.5)]
    pub s: f64,
    #[arg(long = "r-max", default_value_t = 8.0)]
    pub r_max: f64,
    /// Number of equally spaced angles on [-pi, pi].
    #[arg(long, default_value_t = 181)]
    pub points: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FigureKind {
    /// Kernel curves K_k(r; s) for several s.
    Fig1,
    /// Systematic bound against r0 for k = 1..4.
    Fig3,
    /// Estimated, exact and Husimi phase moments.
    Fig4,
    /// Phase kernel surface F(r, phi; s).
    Fig5,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(value_enum)]
    pub which: FigureKind,
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub s: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<String>,
    #[arg(long)]
    pub r0: Option<String>,
    #[arg(long, default_value = "coherent:1")]
    pub state: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parses `a,b,c` or `start:stop:step` into a strictly increasing grid.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let number = |t: &str| -> Result<f64, String> {
        let v: f64 = t.trim().parse().map_err(|_| format!("`{t}` is not a number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("`{t}` is not finite"))
        }
    };
    let grid = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(format!("range `{text}` must be start:stop:step"));
        };
        let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(format!("range `{text}` needs step > 0 and stop >= start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        if count > 10_000_000 {
            return Err(format!("range `{text}` has too many points"));
        }
        (0..=count).map(|i| start + i as f64 * step).collect()
    } else {
        text.split(',').map(number).collect::<Result<Vec<_>, _>>()?
    };
    if grid.is_empty() {
        return Err("grid is empty".into());
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(format!("grid `{text}` must be strictly increasing"));
    }
    Ok(grid)
}
