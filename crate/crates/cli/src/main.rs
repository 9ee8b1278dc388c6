mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Failure classes and their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Reading or writing a file failed; exit 1.
    Io(String),
    /// Bad arguments, state text or a value outside a function's domain; exit 2.
    Usage(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(m) | CliError::Usage(m) => f.write_str(m),
        }
    }
}

impl From<phasekit::Error> for CliError {
    fn from(e: phasekit::Error) -> Self {
        use phasekit::Error as E;
        match e {
            E::Io(_) | E::Format { .. } | E::Version(_) | E::Checksum { .. } => CliError::Io(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

/// `phasekit <version>: <arguments>` with the output destination left out,
/// so that identical runs give identical files wherever they are written.
fn header(argv: &[String]) -> String {
    let mut kept = vec![];
    let mut skip = false;
    for a in argv.iter().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out" {
            skip = true;
            continue;
        }
        if a.starts_with("--out=") {
            continue;
        }
        kept.push(a.as_str());
    }
    format!("phasekit {}: {}", env!("CARGO_PKG_VERSION"), kept.join(" "))
}

fn run(cli: &Cli, header: &str) -> Result<(), CliError> {
    phasekit::simulator::configure_threads_from_env()?;
    let (text, out) = match &cli.command {
        Command::Simulate(a) => (commands::simulate(a, header)?, &a.out),
        Command::Estimate(a) => (commands::estimate(a, header)?, &a.output.out),
        Command::Exact(a) => (commands::exact(a, header)?, &a.output.out),
        Command::Kernel(a) => (commands::kernel_cmd(a, header)?, &a.output.out),
        Command::Omega(a) => (commands::omega_cmd(a, header)?, &a.output.out),
        Command::Sysbound(a) => (commands::sysbound(a, header)?, &a.output.out),
        Command::Scaling(a) => (commands::scaling(a, header)?, &a.output.out),
        Command::Phasedist(a) => (commands::phasedist(a, header)?, &a.output.out),
        Command::Figure(a) => (commands::figure(a, header)?, &a.output.out),
    };
    output::emit(&text, out.as_deref())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(&cli, &header(&argv)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("phasekit: {e}");
            ExitCode::from(e.code())
        }
    }
}
