//! Command-line front end for single runs, sweeps and scaling fits.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use bogolab::harness::{fit_powerlaw, parse_config, run_stage, run_sweep, ExperimentConfig, Stage};
use bogolab::{Error, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bogolab", version, about = "Bogoliubov norm-approximation experiments on a 1D torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Suppress progress output on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `time.dt`.
    #[arg(long)]
    dt: Option<f64>,
    /// Overrides `time.t_final`.
    #[arg(long)]
    tfinal: Option<f64>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Hartree trajectory only.
    Hartree(RunArgs),
    /// Hartree and pair-dynamics trajectories.
    Pair(RunArgs),
    /// Hartree and truncated Fock-space Bogoliubov trajectories.
    Fock(RunArgs),
    /// Exact N-body evolution of the embedded initial state.
    Exact(RunArgs),
    /// Full pipeline with the per-sample comparison.
    Compare(RunArgs),
    /// Every (N, beta) member of the configured lists.
    Sweep(RunArgs),
    /// Power-law fit of norm_error_sq against N from a sweep's summary.csv.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Time to fit at; defaults to the largest time per beta.
        #[arg(long)]
        time: Option<f64>,
    },
}

fn load(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = parse_config(&args.config)?;
    if let Some(dt) = args.dt {
        cfg.time.dt = dt;
    }
    if let Some(t) = args.tfinal {
        cfg.time.t_final = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn single(args: &RunArgs, stage: Stage, quiet: bool) -> Result<()> {
    let cfg = load(args)?;
    if !quiet {
        eprintln!("running {stage:?} for config {} into {}", cfg.hash(), args.out.display());
    }
    run_stage(&cfg, stage, &args.out)?;
    if !quiet {
        eprintln!("done");
    }
    Ok(())
}

fn fit(input: &PathBuf, time: Option<f64>) -> Result<()> {
    let mut reader = csv::Reader::from_path(input)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::InvalidArgument(format!("{} has no `{name}` column", input.display())))
    };
    let (cn, cb, ct, cv, cs) = (col("N")?, col("beta")?, col("t")?, col("norm_error_sq")?, col("status")?);
    let mut by_beta: BTreeMap<String, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec?;
        if &rec[cs] != "ok" {
            continue;
        }
        let parse = |i: usize| rec[i].parse::<f64>().map_err(|e| Error::InvalidArgument(format!("bad number `{}`: {e}", &rec[i])));
        by_beta.entry(rec[cb].to_string()).or_default().push((parse(cn)?, parse(ct)?, parse(cv)?));
    }
    if by_beta.is_empty() {
        return Err(Error::InvalidArgument(format!("{} has no successful rows", input.display())));
    }
    println!("beta,t,slope,intercept,residual,points");
    for (beta, rows) in by_beta {
        let t = time.unwrap_or_else(|| rows.iter().map(|r| r.1).fold(f64::MIN, f64::max));
        let pts: Vec<(f64, f64)> = rows.iter().filter(|r| (r.1 - t).abs() <= 1e-9 * t.abs().max(1.0)).map(|r| (r.0, r.2)).collect();
        let f = fit_powerlaw(&pts)?;
        println!("{beta},{t},{},{},{},{}", f.slope, f.intercept, f.residual, f.points);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = cli.quiet;
    let outcome = match &cli.command {
        Command::Hartree(a) => single(a, Stage::Hartree, quiet),
        Command::Pair(a) => single(a, Stage::Pair, quiet),
        Command::Fock(a) => single(a, Stage::Fock, quiet),
        Command::Exact(a) => single(a, Stage::Exact, quiet),
        Command::Compare(a) => single(a, Stage::Compare, quiet),
        Command::Sweep(a) => load(a).and_then(|cfg| {
            let res = run_sweep(&cfg, Some(&a.out))?;
            if !quiet {
                for f in &res.fits {
                    match (&f.fit, &f.error) {
                        (Some(fit), _) => eprintln!("beta = {}: slope {:.4}, residual {:.3e}", f.beta, fit.slope, fit.residual),
                        (None, Some(e)) => eprintln!("beta = {}: no fit ({e})", f.beta),
                        _ => {}
                    }
                }
            }
            Ok(())
        }),
        Command::Fit { input, time } => fit(input, *time),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
