use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mdiqkd_core::sweep::{
    self, evaluate_point, optimize_mu_at, parse_grid, qber_curve, run_sweep, verify, write_csv, write_qber_csv,
    Setup, VerifyOptions,
};
use mdiqkd_core::{Error, MuChoice, QuadratureSpec, Reconciliation, Scheme, SweepSpec};

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_VERIFY_FAILED: u8 = 3;

const ALLOWED_PARTITIONS: [usize; 5] = [1, 2, 4, 8, 16];

/// Key rates, gains and QBERs for phase-encoded MDI-QKD.
#[derive(Debug, Parser)]
#[command(name = "mdiqkd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Key rate versus channel loss.
    Keyrate(SweepArgs),
    /// Optimal intensity versus channel loss.
    Optmu(SweepArgs),
    /// Overall and postselected QBER versus arriving intensity (no dark counts or misalignment).
    Qber(QberArgs),
    /// All rate terms at a single operating point.
    Point(PointArgs),
    /// Cross-check closed forms against the Fock-space and Monte Carlo oracles.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Params file with `key = value` lines.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the sift factor.
    #[arg(long)]
    sift_factor: Option<f64>,
    /// Overrides the reconciliation direction (forward or reverse).
    #[arg(long)]
    reconciliation: Option<Reconciliation>,
}

#[derive(Debug, Args)]
struct IntensityArgs {
    /// Fixed intensity (geometric mean of mu_a and mu_b, balanced at the relay).
    #[arg(long, conflicts_with = "optimize_mu")]
    mu: Option<f64>,
    /// Maximize the key rate over the intensity.
    #[arg(long)]
    optimize_mu: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated schemes.
    #[arg(long, default_value = "xy-postselect,xz-original")]
    scheme: String,
    /// Total loss in dB: `start:stop:step` or a comma-separated list.
    #[arg(long, default_value = "0:40:5")]
    loss_db: String,
    /// Phase partitions for xy-postselect.
    #[arg(long, default_value_t = 8)]
    partitions: usize,
    #[command(flatten)]
    intensity: IntensityArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct QberArgs {
    /// Arriving intensity per side: `start:stop:step` or a comma-separated list.
    #[arg(long, default_value = "0.0001,0.0003,0.001,0.003,0.01,0.03,0.1,0.3,1")]
    intensity: String,
    /// Comma-separated partition counts.
    #[arg(long, default_value = "1,4,8")]
    partitions: String,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PointArgs {
    #[arg(long, default_value = "xy-postselect")]
    scheme: Scheme,
    /// Total loss in dB (ignored when the params file fixes eta_a/eta_b).
    #[arg(long)]
    loss_db: Option<f64>,
    #[arg(long, default_value_t = 8)]
    partitions: usize,
    #[command(flatten)]
    intensity: IntensityArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Monte Carlo samples per check.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    /// Multiplies every tolerance (test hook).
    #[arg(long, default_value_t = 1.0, hide = true)]
    tolerance_scale: f64,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
    Io(String),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn load_setup(common: &Common) -> Result<Setup, Failure> {
    let mut setup = match &common.params {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            Setup::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => Setup::default(),
    };
    if let Some(s) = common.sift_factor {
        setup.sift_factor = s;
    }
    if let Some(r) = common.reconciliation {
        setup.reconciliation = r;
    }
    setup.validate().map_err(|e| usage(e.to_string()))?;
    Ok(setup)
}

fn check_partitions(n: usize) -> Result<usize, Failure> {
    if ALLOWED_PARTITIONS.contains(&n) {
        Ok(n)
    } else {
        Err(usage(format!("--partitions must be one of {ALLOWED_PARTITIONS:?}, got {n}")))
    }
}

fn parse_schemes(text: &str) -> Result<Vec<Scheme>, Failure> {
    text.split(',')
        .map(|s| s.trim().parse::<Scheme>().map_err(|e| usage(e.to_string())))
        .collect()
}

fn emit(out: &Option<PathBuf>, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    let result = match out {
        Some(path) => fs::File::create(path).and_then(|f| {
            let mut w = io::BufWriter::new(f);
            write(&mut w)?;
            w.flush()
        }),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).and_then(|_| lock.flush())
        }
    };
    result.map_err(|e| Failure::Io(e.to_string()))
}

fn mu_choice(intensity: &IntensityArgs, default: MuChoice) -> MuChoice {
    match (intensity.mu, intensity.optimize_mu) {
        (Some(mu), _) => MuChoice::Fixed(mu),
        (None, true) => MuChoice::Optimize,
        (None, false) => default,
    }
}

fn sweep_rows(args: &SweepArgs, force_optimize: bool) -> Result<Vec<mdiqkd_core::SweepRow>, Failure> {
    let setup = load_setup(&args.common)?;
    let schemes = parse_schemes(&args.scheme)?;
    let loss_grid = parse_grid(&args.loss_db).map_err(|e| usage(e.to_string()))?;
    let partitions = check_partitions(args.partitions)?;
    if force_optimize && args.intensity.mu.is_some() {
        return Err(usage("optmu always optimizes; --mu is not accepted"));
    }
    let mu = if force_optimize { MuChoice::Optimize } else { mu_choice(&args.intensity, MuChoice::Optimize) };
    let mut rows = Vec::new();
    for scheme in schemes {
        if force_optimize && !scheme.uses_intensity() {
            return Err(usage(format!("{scheme} has no intensity to optimize")));
        }
        let spec = SweepSpec { scheme, loss_grid: loss_grid.clone(), n_partitions: partitions, mu, quadrature: QuadratureSpec::default() };
        spec.validate().map_err(|e| usage(e.to_string()))?;
        rows.extend(run_sweep(&spec, &setup)?);
    }
    Ok(rows)
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Keyrate(args) => {
            let rows = sweep_rows(&args, false)?;
            emit(&args.common.out, |w| write_csv(&rows, w))
        }
        Command::Optmu(args) => {
            let rows = sweep_rows(&args, true)?;
            emit(&args.common.out, |w| {
                writeln!(w, "scheme,loss_db,eta_a,eta_b,mu_opt,rate_raw")?;
                for r in &rows {
                    writeln!(
                        w,
                        "{},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
                        r.scheme,
                        r.loss_db.unwrap_or(f64::NAN),
                        r.eta_a,
                        r.eta_b,
                        r.mu.unwrap_or(f64::NAN),
                        r.rate_raw
                    )?;
                }
                Ok(())
            })
        }
        Command::Qber(args) => {
            let intensities = parse_grid(&args.intensity).map_err(|e| usage(e.to_string()))?;
            let partitions = args
                .partitions
                .split(',')
                .map(|s| {
                    let n = s.trim().parse::<usize>().map_err(|_| usage(format!("bad partition count `{s}`")))?;
                    check_partitions(n)
                })
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(bad) = intensities.iter().find(|s| s.is_nan() || **s < 0.0) {
                return Err(usage(format!("--intensity values must be nonnegative, got {bad}")));
            }
            let rows = qber_curve(&intensities, &partitions, &QuadratureSpec::default())?;
            emit(&args.out, |w| write_qber_csv(&rows, &partitions, w))
        }
        Command::Point(args) => {
            let setup = load_setup(&args.common)?;
            let partitions = check_partitions(args.partitions)?;
            if setup.has_fixed_channel() && args.loss_db.is_some() {
                return Err(usage("--loss-db conflicts with eta_a/eta_b in the params file"));
            }
            let loss = if setup.has_fixed_channel() { None } else { Some(args.loss_db.or(setup.loss_db).unwrap_or(0.0)) };
            let params = setup.params_at_loss(loss.unwrap_or(0.0)).map_err(|e| usage(e.to_string()))?;
            let quad = QuadratureSpec::default();
            let explicit = args.intensity.mu.is_some() || args.intensity.optimize_mu;
            let src = match (setup.intensities, explicit) {
                (Some(_), true) => return Err(usage("--mu/--optimize-mu conflict with mu_a/mu_b in the params file")),
                (Some(src), false) => src,
                (None, _) => {
                    let t = match mu_choice(&args.intensity, MuChoice::Optimize) {
                        MuChoice::Fixed(mu) => mu,
                        MuChoice::Optimize if args.scheme.uses_intensity() => {
                            optimize_mu_at(&params, args.scheme, partitions, &quad)?.0
                        }
                        MuChoice::Optimize => 0.0,
                    };
                    mdiqkd_core::SourceIntensities::new(t, t).map_err(|e| usage(e.to_string()))?;
                    sweep::balanced_intensities(&params, t)
                }
            };
            let row = evaluate_point(args.scheme, &params, &src, loss, partitions, &quad)?;
            emit(&args.common.out, |w| write_csv(std::slice::from_ref(&row), w))
        }
        Command::Verify(args) => {
            let common = Common { params: args.params.clone(), out: None, sift_factor: None, reconciliation: None };
            let setup = load_setup(&common)?;
            if args.samples < 2 {
                return Err(usage("--samples must be at least 2"));
            }
            let options = VerifyOptions {
                seed: args.seed,
                samples: args.samples,
                tolerance_scale: args.tolerance_scale,
                quadrature: QuadratureSpec::default(),
            };
            let report = verify(&setup, &options)?;
            emit(&args.out, |w| write!(w, "{report}"))?;
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) | Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_USAGE })
        }
        Err(Failure::Verification) => {
            eprintln!("verification failed");
            ExitCode::from(EXIT_VERIFY_FAILED)
        }
    }
}
