use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use cocycle_core::config::{CocycleConfig, Count, ExperimentConfig, GridConfig, Num};
use cocycle_core::report;
use cocycle_core::selftest::selftest;
use cocycle_core::CocycleError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cocycle-lab", version, about = "Lyapunov exponents of rotated 2D cocycles")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sampling seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Exponents over the theta grid: sweep.csv, plotdata.csv.
    Sweep(Common),
    /// First and second derivative at theta = 0: derivatives.json.
    Derivatives(Common),
    /// Domination certificate and verdicts over the grid: certificate.json, dset.csv.
    Dominate(Common),
    /// Heisenberg example report: heisenberg.csv, heisenberg_summary.txt.
    Heisenberg(Common),
    /// Sweep, derivatives and certificate in one go.
    Run(Common),
    /// Closed-form checks.
    Selftest {
        /// Multiplies every tolerance.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
}

fn load(common: &Common, heisenberg_default: bool) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None if heisenberg_default => ExperimentConfig::from_json(r#"{"cocycle": {"kind": "heisenberg"}}"#).map(|mut c| {
            c.theta_grid = GridConfig {
                min: Num(-0.2),
                max: Num(0.2),
                step: Num(0.02),
            };
            c
        })?,
        None => anyhow::bail!("--config <path> is required"),
    };
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = Count(seed);
    }
    if heisenberg_default && !matches!(cfg.cocycle, CocycleConfig::Heisenberg) {
        log::warn!("heisenberg subcommand ignores the configured cocycle");
    }
    Ok(cfg)
}

fn list(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn execute(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Sweep(c) => list(&report::run_sweep(&load(&c, false)?)?.files),
        Command::Derivatives(c) => {
            let out = report::run_derivatives(&load(&c, false)?)?;
            if let Some(d) = &out.derivatives {
                println!("dlambda0 = {:.12}", d.dlambda0);
                println!("ddlambda0 = {:.12}", d.ddlambda0);
                println!("truncation K = {} (bound {:e})", d.k, d.udot_bound);
            }
            list(&out.files);
        }
        Command::Dominate(c) => {
            let (out, rows) = report::run_dominate(&load(&c, false)?)?;
            if let Some(cert) = &out.certificate {
                println!("theta = 0: {} (l = {:?}, margin = {:.6})", cert.verdict, cert.l, cert.margin);
            }
            for (v, lo, hi) in cocycle_core::domination::verdict_runs(&rows) {
                println!("  [{lo:.6}, {hi:.6}] {v}");
            }
            list(&out.files);
        }
        Command::Heisenberg(c) => {
            let (_, summary, files) = report::run_heisenberg(&load(&c, true)?)?;
            print!("{summary}");
            list(&files);
        }
        Command::Run(c) => list(&report::run(&load(&c, false)?)?.files),
        Command::Selftest { tolerance_scale } => {
            let r = selftest(tolerance_scale);
            print!("{}", r.render());
            if !r.passed() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COCYCLE_LAB_LOG", "warn")).init();
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .context("thread pool")
        {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    }
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            let kind = match e.downcast_ref::<CocycleError>() {
                Some(CocycleError::Config { .. }) => "config",
                Some(CocycleError::Anomaly(_)) => "anomaly",
                Some(CocycleError::Io(_)) => "io",
                Some(_) => "numerical",
                None => "usage",
            };
            eprintln!("error[{kind}]: {e:#}");
            ExitCode::from(if kind == "anomaly" { 3 } else { 2 })
        }
    }
}
