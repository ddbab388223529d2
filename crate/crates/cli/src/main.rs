use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polar_tls::rates::DEBYE;
use polar_tls::{Branch, Displacement, DressedState, ModelParams};
use polar_tls_cli::config::{Axis, AxisOrValue, Format, Quantity, SweepConfig};
use polar_tls_cli::run::{self, CascadeRun, OverlapMethod};
use polar_tls_cli::sweep::run_sweep;
use polar_tls_cli::CliError;
use serde::Serialize;

/// Spontaneous emission and absorption rates of a longitudinally driven
/// polar two-level system. Frequencies are in units of ω₀, rates in Γ₀.
#[derive(Parser)]
#[command(name = "polar-tls", version)]
struct Cli {
    /// Write the result here instead of standard output
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Output format; queries print annotated text unless json is asked for
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads (all cores by default)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a quantity over a parameter grid
    Sweep(SweepArgs),
    /// Total decay rate of a dressed state and its channels
    Rate(RateArgs),
    /// One displaced Fock overlap
    Overlap(OverlapArgs),
    /// Large-n̄ totals gamma_e and gamma_g
    Semiclassical(SemiclassicalArgs),
    /// Monte Carlo jump trajectories
    Cascade(CascadeArgs),
    /// Free-space emission rate Γ₀ in SI units
    Gamma0(Gamma0Args),
}

#[derive(Args)]
struct Drive {
    /// Ω_a/ω₀
    #[arg(long)]
    omega_a: f64,
    /// ω_L/ω₀
    #[arg(long)]
    omega_l: f64,
    /// Phase of Ω_a in radians
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    phi: f64,
}

impl Drive {
    fn params(&self) -> Result<ModelParams, CliError> {
        ModelParams::new(1.0, self.omega_l, self.omega_a, self.phi).map_err(|e| CliError::usage(e.to_string()))
    }
}

#[derive(Args)]
struct SweepArgs {
    /// TOML file with quantity, grid, fixed, output, format and threads; flags win
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    quantity: Option<Quantity>,
    /// Ω_a/ω₀: a value, or an axis start:stop:steps[:lin|log]
    #[arg(long)]
    omega_a: Option<AxisOrValue>,
    /// ω_L/ω₀: a value, or an axis start:stop:steps[:lin|log]
    #[arg(long)]
    omega_l: Option<AxisOrValue>,
    #[arg(long)]
    sqrt_n: Option<Axis>,
    #[arg(long)]
    n_bar: Option<Axis>,
    /// Photon-number axis for log_vs_direct
    #[arg(long)]
    n: Option<Axis>,
    #[arg(long, allow_negative_numbers = true)]
    phi: Option<f64>,
    /// Final ground-ladder index for partial_e0n
    #[arg(long)]
    n_prime: Option<u64>,
    /// Channel orders, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    p: Option<Vec<i64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    E,
    G,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::E => Branch::Excited,
            BranchArg::G => Branch::Ground,
        }
    }
}

#[derive(Args)]
struct RateArgs {
    #[arg(long, value_enum)]
    branch: BranchArg,
    #[arg(long)]
    n: u64,
    /// Report only the channel into this index of the other ladder
    #[arg(long)]
    n_prime: Option<u64>,
    #[command(flatten)]
    drive: Drive,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Plus,
    Minus,
}

#[derive(Args)]
struct OverlapArgs {
    #[arg(long)]
    ell: u64,
    #[arg(long)]
    n: u64,
    /// Displacement of the bra
    #[arg(long, value_enum, default_value = "plus")]
    bra: SignArg,
    /// Ket on the other ladder; without it both states share one ladder
    #[arg(long)]
    opposite: bool,
    #[arg(long, value_enum, default_value = "exact")]
    method: OverlapMethod,
    #[command(flatten)]
    drive: Drive,
}

#[derive(Args)]
struct SemiclassicalArgs {
    #[arg(long)]
    n_bar: f64,
    #[command(flatten)]
    drive: Drive,
}

#[derive(Args)]
struct CascadeArgs {
    #[arg(long, value_enum)]
    branch: BranchArg,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    trajectories: u64,
    #[arg(long, default_value_t = 10_000)]
    max_jumps: usize,
    /// Spectrum bin width in units of ω₀
    #[arg(long, default_value_t = 0.01)]
    bin_width: f64,
    /// Trajectory log (CSV)
    #[arg(long)]
    log: PathBuf,
    #[command(flatten)]
    drive: Drive,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("dipole_unit").required(true))]
struct Gamma0Args {
    /// Transition angular frequency in rad/s
    #[arg(long)]
    omega0: f64,
    /// Transition dipole in C·m
    #[arg(long, group = "dipole_unit")]
    dipole: Option<f64>,
    /// Transition dipole in debye
    #[arg(long, group = "dipole_unit")]
    dipole_debye: Option<f64>,
}

fn emit<T: Serialize + std::fmt::Display>(report: &T, format: Option<Format>, output: Option<&Path>) -> Result<(), CliError> {
    let text = match format {
        Some(Format::Json) => serde_json::to_string_pretty(report).map_err(CliError::compute)? + "\n",
        _ => report.to_string(),
    };
    match output {
        Some(path) => File::create(path).and_then(|mut f| f.write_all(text.as_bytes())).map_err(|e| CliError::io(path, e)),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn sweep(cli: &Cli, args: &SweepArgs) -> Result<(), CliError> {
    let mut config = match (&args.config, args.quantity) {
        (Some(path), _) => SweepConfig::load(path)?,
        (None, Some(q)) => SweepConfig::new(q),
        (None, None) => return Err(CliError::usage("sweep needs --quantity or --config")),
    };
    if let Some(q) = args.quantity {
        config.quantity = q;
    }
    if let Some(v) = args.omega_a {
        config.set_omega_a(v);
    }
    if let Some(v) = args.omega_l {
        config.set_omega_l(v);
    }
    config.grid.sqrt_n = args.sqrt_n.or(config.grid.sqrt_n);
    config.grid.n_bar = args.n_bar.or(config.grid.n_bar);
    config.grid.n = args.n.or(config.grid.n);
    config.fixed.phi = args.phi.or(config.fixed.phi);
    config.fixed.n_prime = args.n_prime.or(config.fixed.n_prime);
    if let Some(p) = &args.p {
        config.fixed.p = Some(p.clone());
    }
    if let Some(path) = &cli.output {
        config.output = Some(path.clone());
    }
    if let Some(f) = cli.format {
        config.format = f;
    }
    config.threads = cli.threads.or(config.threads);
    run_sweep(&config).map(|_| ())
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let out = cli.output.as_deref();
    match &cli.command {
        Command::Sweep(args) => sweep(cli, args),
        Command::Rate(a) => {
            let params = a.drive.params()?;
            let state = DressedState::new(a.branch.into(), a.n);
            match a.n_prime {
                Some(m) => emit(&run::partial_query(state, m, &params)?, cli.format, out),
                None => emit(&run::rate_query(state, &params), cli.format, out),
            }
        }
        Command::Overlap(a) => {
            let bra = match a.bra {
                SignArg::Plus => Displacement::Plus,
                SignArg::Minus => Displacement::Minus,
            };
            let ket = if a.opposite { bra.opposite() } else { bra };
            let report = run::overlap_query(a.ell, a.n, &a.drive.params()?, bra, ket, a.method)?;
            emit(&report, cli.format, out)
        }
        Command::Semiclassical(a) => {
            let report = run::semiclassical_query(a.n_bar, &a.drive.params()?)?;
            emit(&report, cli.format, out)
        }
        Command::Cascade(a) => {
            let summary = run::run_cascade(&CascadeRun {
                start: DressedState::new(a.branch.into(), a.n),
                params: a.drive.params()?,
                seed: a.seed,
                trajectories: a.trajectories,
                max_jumps: a.max_jumps,
                bin_width: a.bin_width,
                log: &a.log,
                threads: cli.threads,
            })?;
            emit(&summary, cli.format, out)
        }
        Command::Gamma0(a) => {
            let dipole = a.dipole.or(a.dipole_debye.map(|d| d * DEBYE)).expect("clap requires one dipole flag");
            emit(&run::gamma0_query(a.omega0, dipole)?, cli.format, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
