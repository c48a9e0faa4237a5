use std::io::{ErrorKind, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cloudq::cli::execute;
use cloudq::config::{Command, Format, RunConfig, Series, SimMode};
use cloudq::state_space::KernelSpec;
use cloudq::{Error, Result};

/// Solvers, emulators and resource estimates for quantum collision-coalescence.
///
/// Run one subcommand, or give only `--config` to run the command named in
/// the file. Flags override file values. CLOUDQ_THREADS caps the worker count.
#[derive(Parser, Debug)]
#[command(name = "cloudq", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Sub>,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Sub {
    /// Explicit-Euler master equation; writes expected counts or state probabilities.
    Solve,
    /// Probability-division simulation in merged or tree mode.
    Simulate,
    /// Bit-exact fixed-point sweep of the transition-angle pipeline.
    Emulate,
    /// Minimum piece count of the piecewise arcsine for a degree and error.
    ArcsineFit,
    /// Fault-tolerant resource estimate for one case.
    Estimate,
    /// Compare every preset and arcsine row against the embedded published values.
    ReproduceTables,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Command {
        match s {
            Sub::Solve => Command::Solve,
            Sub::Simulate => Command::Simulate,
            Sub::Emulate => Command::Emulate,
            Sub::ArcsineFit => Command::ArcsineFit,
            Sub::Estimate => Command::Estimate,
            Sub::ReproduceTables => Command::ReproduceTables,
        }
    }
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in case, paper-case-1 .. paper-case-5.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Number of mass bins (total mass).
    #[arg(long = "N", global = true)]
    bins: Option<u32>,
    /// Number of time steps.
    #[arg(long = "M", global = true)]
    steps: Option<u64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// constant:K0, sum:K0 or product:K0.
    #[arg(long, global = true)]
    kernel: Option<KernelSpec>,
    /// Initial counts, comma separated; all mass in bin 1 by default.
    #[arg(long, global = true, value_delimiter = ',')]
    initial: Option<Vec<u32>>,
    #[arg(long, global = true)]
    state_cap: Option<u32>,
    /// merged or tree.
    #[arg(long, global = true)]
    mode: Option<SimMode>,
    /// Compare the simulation with the master equation at every step.
    #[arg(long, global = true)]
    check_master: bool,
    #[arg(long, global = true)]
    branch_cap: Option<u128>,
    /// Add a Gillespie cross-check with this many runs to `solve`.
    #[arg(long, global = true)]
    ssa_runs: Option<u32>,
    /// CSV series written by `solve`: counts or states.
    #[arg(long, global = true)]
    series: Option<Series>,
    #[arg(long, global = true)]
    n_eps: Option<u32>,
    #[arg(long, global = true)]
    d_eps: Option<u32>,
    #[arg(long, global = true)]
    m_eps: Option<u32>,
    #[arg(long, global = true)]
    eps_rotation: Option<f64>,
    #[arg(long, global = true)]
    eps_estimation: Option<f64>,
    #[arg(long, global = true)]
    eps_c: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    eps_arcsin: Option<f64>,
    #[arg(long, global = true)]
    eps_calculation: Option<f64>,
    #[arg(long, global = true)]
    readout_bin: Option<u32>,
    /// Arcsine polynomial degree.
    #[arg(long = "d", global = true)]
    degree: Option<u32>,
    /// Arcsine target error.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Grid points per piece for arcsine fits.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Pipeline sweep size.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Register widths to sweep, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    widths: Option<Vec<u32>>,
    /// Quantized coefficient file (written by arcsine-fit, read by emulate).
    #[arg(long, global = true)]
    coefficients: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// json or csv.
    #[arg(long, global = true)]
    format: Option<Format>,
}

impl Flags {
    fn into_config(self, command: Command) -> RunConfig {
        let mut c = RunConfig::new(command);
        c.preset = self.preset;
        c.bins = self.bins;
        c.steps = self.steps;
        c.dt = self.dt;
        c.kernel = self.kernel;
        c.initial = self.initial;
        c.state_cap = self.state_cap;
        c.mode = self.mode;
        c.check_master = self.check_master.then_some(true);
        c.branch_cap = self.branch_cap;
        c.ssa_runs = self.ssa_runs;
        c.series = self.series;
        c.n_eps = self.n_eps;
        c.d_eps = self.d_eps;
        c.m_eps = self.m_eps;
        c.eps_rotation = self.eps_rotation;
        c.eps_estimation = self.eps_estimation;
        c.eps_c = self.eps_c;
        c.delta = self.delta;
        c.eps_arcsin = self.eps_arcsin;
        c.eps_calculation = self.eps_calculation;
        c.readout_bin = self.readout_bin;
        c.degree = self.degree;
        c.eps = self.eps;
        c.grid = self.grid;
        c.samples = self.samples;
        c.widths = self.widths;
        c.coefficients = self.coefficients;
        c.seed = self.seed;
        c.out = self.out;
        c.format = self.format;
        c
    }
}

fn parse_config(cli: Cli) -> Result<RunConfig> {
    let file = cli
        .flags
        .config
        .as_deref()
        .map(RunConfig::from_file)
        .transpose()?;
    let command = match (cli.command.map(Command::from), &file) {
        (Some(c), Some(f)) if c != f.command => {
            return Err(Error::Config(format!(
                "subcommand `{}` disagrees with `{}` in the configuration file",
                c.name(),
                f.command.name()
            )))
        }
        (Some(c), _) => c,
        (None, Some(f)) => f.command,
        (None, None) => return Err(Error::Config("give a subcommand or --config".into())),
    };
    let flags = cli.flags.into_config(command);
    Ok(match file {
        Some(mut f) => {
            f.overlay(flags);
            f
        }
        None => flags,
    })
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("CLOUDQ_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Error::Config(format!(
                "CLOUDQ_THREADS must be a positive integer, got `{v}`"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    let cfg = parse_config(cli)?;
    let job = cfg.resolve()?;
    let outcome = execute(&job)?;
    for (path, text) in &outcome.files {
        std::fs::write(path, text)?;
    }
    let text = outcome.render(cfg.format())?;
    match &cfg.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            // A closed pipe (e.g. `| head`) is not an error.
            let mut stdout = std::io::stdout().lock();
            match stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
            {
                Err(e) if e.kind() == ErrorKind::BrokenPipe => {}
                r => r?,
            }
        }
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("cloudq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
