//! Command-line front end for the radial Hartree laboratory.
//!
//! Exit contract: 0 on success, 1 on validation errors (bad flags, bad
//! configs, refused fits) with a single kebab-tagged line on stderr, 2 on
//! runtime failures. Human-readable text goes to stderr; stdout carries
//! only data (CSV, report documents, output paths) so pipelines stay
//! clean.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hartree_core::diagnostics::{rate_fit, RateSample, CSV_HEADER};
use hartree_core::experiments::{self, RunConfig};
use hartree_core::potential::Potential;
use hartree_core::{Error, Result, CONFIG_SCHEMA_VERSION};

mod verify;

fn build_version() -> &'static str {
    static V: std::sync::OnceLock<String> = std::sync::OnceLock::new();
    V.get_or_init(|| {
        format!(
            "{} (config schema v{})",
            env!("CARGO_PKG_VERSION"),
            CONFIG_SCHEMA_VERSION
        )
    })
}

#[derive(Parser)]
#[command(
    name = "hartree-lab",
    version = build_version(),
    about = "Numerical laboratory for the radial focusing Hartree equation and its cubic-NLS limit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one configured run and persist CSV, snapshots and summary.
    Run(RunArgs),
    /// Run every config document in a directory on a small worker pool.
    Sweep(SweepArgs),
    /// Print the admissibility report for an interaction kernel.
    CheckPotential(CheckPotentialArgs),
    /// Re-extract the blow-up rate curve of a finished run as CSV.
    RateFit(RateFitArgs),
    /// Compare the pair-interaction flow against its local limit as the
    /// kernel narrows.
    Stability(StabilityArgs),
    /// Run a built-in self-check suite and print a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration document.
    config: PathBuf,
    /// Output root; a run-<hash> directory is created beneath it. The
    /// config's own `output` path, when set, wins over this.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite an output directory holding results for a different config.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Directory of run configuration documents (*.toml).
    config_dir: PathBuf,
    /// Worker threads (capped at 4).
    #[arg(long, default_value_t = 4)]
    parallelism: usize,
    /// Output root for the run-<hash> directories.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite output directories holding results for different configs.
    #[arg(long)]
    force: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelKind {
    /// Singular log-damped core, compact support.
    Log,
    /// Smooth Gaussian bump.
    Gaussian,
    /// Regularized inverse cube with exponential taper.
    InverseCube,
    /// Point mass (the cubic-NLS limit); has no pointwise report.
    Delta,
}

#[derive(Args)]
struct CheckPotentialArgs {
    #[arg(long, value_enum)]
    kind: KernelKind,
    /// Log-damping exponent of the singular core (kind = log).
    #[arg(long, default_value_t = 2.0)]
    alpha_log: f64,
    /// Core radius of the log kernel (kind = log).
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Width of the Gaussian kernel (kind = gaussian).
    #[arg(long)]
    width: Option<f64>,
    /// Core radius of the regularized inverse cube (kind = inverse-cube).
    #[arg(long)]
    core_radius: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    /// Concentration scale: the kernel is replaced by its eps-approximant.
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    /// Connection exponent alpha to test r V' <= -alpha V against.
    #[arg(long, default_value_t = 2.5)]
    alpha: f64,
    /// Geometric sample count across the support.
    #[arg(long, default_value_t = 4096)]
    samples: usize,
}

#[derive(Args)]
struct RateFitArgs {
    /// Run output directory, or its summary.toml.
    record: PathBuf,
}

#[derive(Args)]
struct StabilityArgs {
    /// Run configuration naming the grid, initial data, base kernel (in
    /// [mode.hartree]), horizon t_end and a fixed integrator step.
    config: PathBuf,
    /// Concentration scales to test, widest first.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.4, 0.2, 0.1, 0.05])]
    eps: Vec<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name; `all` runs everything.
    suite: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                use std::io::Write;
                let _ = std::io::stdout().lock().write_fmt(format_args!("{e}"));
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Run(args) => cmd_run(args).map(|()| 0),
        Command::Sweep(args) => cmd_sweep(args).map(|()| 0),
        Command::CheckPotential(args) => cmd_check_potential(args).map(|()| 0),
        Command::RateFit(args) => cmd_rate_fit(args).map(|()| 0),
        Command::Stability(args) => cmd_stability(args).map(|()| 0),
        Command::Verify(args) => verify::run_suite(&args.suite),
    }
}

/// Output root: flag beats the environment beats ./runs.
fn out_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("HARTREE_LAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Data line to stdout. A downstream pipe closing early (head, grep -m)
/// ends the program quietly instead of panicking.
fn data_line(line: std::fmt::Arguments<'_>) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if out
        .write_fmt(line)
        .and_then(|()| out.write_all(b"\n"))
        .is_err()
    {
        std::process::exit(0);
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let config = RunConfig::from_path(&args.config)?;
    let hash = config.hash()?;
    let dir = match &config.output {
        Some(d) => d.clone(),
        None => out_root(args.out).join(format!("run-{}", &hash[..12])),
    };
    let record = experiments::run_scenario(&config, &dir, args.force)?;
    let s = &record.summary;
    eprintln!(
        "run {}: {} at t = {:.6} after {} steps",
        &hash[..12],
        s.status,
        s.t_final,
        s.steps
    );
    eprintln!(
        "  mass drift {:.3e}, energy drift {:.3e}",
        s.mass_drift, s.energy_drift
    );
    if let Some(t) = s.t_est {
        eprintln!("  estimated blow-up time {t:.6}");
    }
    if let Some(g) = s.gamma_hat {
        eprintln!("  fitted log-rate exponent {g:.4}");
    }
    data_line(format_args!("{}", dir.display()));
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let entries = std::fs::read_dir(&args.config_dir).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::ConfigNotFound(args.config_dir.display().to_string()),
        _ => Error::Io(e),
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|xt| xt == "toml"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no config documents (*.toml) in {}",
            args.config_dir.display()
        )));
    }
    let configs: Vec<RunConfig> = paths
        .iter()
        .map(|p| RunConfig::from_path(p))
        .collect::<Result<_>>()?;
    let root = out_root(args.out);
    let records = experiments::sweep(&configs, &root, args.parallelism, args.force)?;
    for (path, record) in paths.iter().zip(&records) {
        eprintln!(
            "{}: {} (config {})",
            path.file_name().unwrap_or_default().to_string_lossy(),
            record.status,
            &record.config_hash[..12]
        );
        if let Some(dir) = record.summary_path.parent() {
            data_line(format_args!("{}", dir.display()));
        }
    }
    Ok(())
}

fn cmd_check_potential(args: CheckPotentialArgs) -> Result<()> {
    let base = match args.kind {
        KernelKind::Log => Potential::log_core(args.alpha_log, args.delta)?,
        KernelKind::Gaussian => {
            let width = args
                .width
                .ok_or_else(|| Error::InvalidConfig("gaussian kernel needs --width".into()))?;
            Potential::gaussian(width)?
        }
        KernelKind::InverseCube => {
            let a = args.core_radius.ok_or_else(|| {
                Error::InvalidConfig("inverse-cube kernel needs --core-radius".into())
            })?;
            Potential::inverse_cube_reg(a)?
        }
        KernelKind::Delta => Potential::delta(),
    };
    let pot = base.with_amplitude(args.amplitude)?.scaled(args.eps)?;
    let report = pot.check_conditions(args.alpha, args.samples)?;
    eprintln!(
        "connection {} (alpha_meas {:.4} vs alpha {}), integrable {}, pointwise {}, focusing {}",
        if report.connection_ok { "ok" } else { "FAILED" },
        report.alpha_meas,
        report.alpha,
        if report.integrable_ok { "ok" } else { "FAILED" },
        if report.pointwise_ok { "ok" } else { "FAILED" },
        report.focusing,
    );
    let text =
        toml::to_string_pretty(&report).map_err(|e| Error::Parse(format!("report: {e}")))?;
    data_line(format_args!("{}", text.trim_end()));
    Ok(())
}

/// Column layout of the persisted diagnostics CSV.
const COL_T: usize = 0;
const COL_H1: usize = 4;
const COL_L3: usize = 5;
const COL_STATUS: usize = 12;

fn cmd_rate_fit(args: RateFitArgs) -> Result<()> {
    let dir = if args.record.is_dir() {
        args.record.clone()
    } else {
        args.record
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."))
    };
    if !dir.join("summary.toml").exists() {
        return Err(Error::ConfigNotFound(format!(
            "no run record (summary.toml) under {}",
            dir.display()
        )));
    }
    let record = experiments::load_record(&dir)?;
    let t_est = record.summary.t_est.ok_or_else(|| {
        Error::FitRefused("run record holds no blow-up time estimate".into())
    })?;

    let text = std::fs::read_to_string(&record.csv_path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != CSV_HEADER {
        return Err(Error::Parse(format!(
            "unexpected diagnostics header: {header}"
        )));
    }
    let mut samples = Vec::new();
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != CSV_HEADER.split(',').count() {
            return Err(Error::Parse(format!("short diagnostics row: {line}")));
        }
        let t: f64 = cols[COL_T]
            .parse()
            .map_err(|_| Error::Parse(format!("bad t in row: {line}")))?;
        let h1: f64 = cols[COL_H1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad H1 in row: {line}")))?;
        let l3: f64 = cols[COL_L3]
            .parse()
            .map_err(|_| Error::Parse(format!("bad L3 in row: {line}")))?;
        // Terminal rows carry the contaminated final state; the fit wants
        // the clean approach window only.
        if cols[COL_STATUS] == "running" && t < t_est && h1.is_finite() && l3.is_finite() {
            samples.push(RateSample { t, l3, h1dot: h1 });
        }
    }
    let fit = rate_fit(&samples, t_est)?;

    data_line(format_args!("t,gap,l3,h1dot,loglog_inv_gap,c_quarter"));
    for s in &samples {
        let gap = t_est - s.t;
        let loglog = if gap < 1.0 {
            (1.0 / gap).ln().ln()
        } else {
            f64::NAN
        };
        data_line(format_args!(
            "{},{},{},{},{},{}",
            s.t,
            gap,
            s.l3,
            s.h1dot,
            loglog,
            s.h1dot * gap.powf(0.25)
        ));
    }
    eprintln!(
        "t_est {:.6}; gamma_hat {:.4} (residual {:.2e}); c_quarter median {:.4e}, min {:.4e} over {} samples",
        fit.t_est, fit.gamma_hat, fit.gamma_residual, fit.c_quarter, fit.c_quarter_min, fit.n_samples
    );
    Ok(())
}

fn cmd_stability(args: StabilityArgs) -> Result<()> {
    let config = RunConfig::from_path(&args.config)?;
    let base = match &config.mode {
        hartree_core::convolution::NonlinearMode::Hartree(p) => p.clone(),
        hartree_core::convolution::NonlinearMode::CubicNls => {
            return Err(Error::InvalidConfig(
                "stability study needs a pair kernel in [mode.hartree]".into(),
            ))
        }
    };
    let dt = config.integrator.fixed_dt.ok_or_else(|| {
        Error::InvalidConfig(
            "stability study needs integrator.fixed_dt so sample times align".into(),
        )
    })?;
    let u0 = config.initial_field()?;
    let rows = experiments::stability_experiment(&u0, &base, &args.eps, config.t_end, dt)?;
    data_line(format_args!("eps,sup_h1_err"));
    for row in &rows {
        data_line(format_args!("{},{}", row.eps, row.sup_h1_err));
    }
    let monotone = rows
        .windows(2)
        .all(|p| p[1].sup_h1_err <= p[0].sup_h1_err * 1.05);
    eprintln!(
        "narrowing kernel {} the local limit (last error {:.3e})",
        if monotone { "approaches" } else { "DOES NOT approach" },
        rows.last().map(|r| r.sup_h1_err).unwrap_or(f64::NAN)
    );
    Ok(())
}
