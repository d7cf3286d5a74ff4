//! Runs over a grid of `(N, beta)` values with per-member failure isolation.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::fit::{fit_powerlaw, PowerLawFit};
use super::pipeline::{run_pipeline, run_pipeline_in, RunRecord};
use crate::error::Result;

/// One line of `summary.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "N")]
    pub particles: usize,
    pub beta: f64,
    pub t: f64,
    pub norm_error_sq: f64,
    pub excitation_number: f64,
    pub leakage: f64,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BetaFit {
    pub beta: f64,
    /// Fit of `||Psi_exact - Psi_approx||^2` at the final time against `N`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<PowerLawFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug)]
pub struct SweepResult {
    pub config_hash: String,
    pub rows: Vec<SweepRow>,
    pub fits: Vec<BetaFit>,
    /// Records of the members that finished, in member order.
    pub records: Vec<RunRecord>,
}

fn member_dir(n: usize, beta: f64) -> String {
    format!("N{n:04}_beta{beta:.4}")
}

/// Runs every member of the sweep. A failing member yields a row with its
/// error as status; the others proceed. With `out` set, each member writes
/// into its own subdirectory and the sweep writes `summary.csv` and `sweep.json`.
pub fn run_sweep(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<SweepResult> {
    cfg.validate()?;
    let members = cfg.sweep_members()?;
    if let Some(d) = out {
        fs::create_dir_all(d)?;
        fs::write(d.join("config.toml"), cfg.to_toml()?)?;
    }
    let outcomes: Vec<(usize, f64, Result<RunRecord>)> = members
        .par_iter()
        .map(|&(n, beta)| {
            let member = cfg.member(n, beta);
            let rec = match out {
                Some(d) => run_pipeline_in(&member, &d.join(member_dir(n, beta))),
                None => run_pipeline(&member),
            };
            (n, beta, rec)
        })
        .collect();

    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (n, beta, rec) in outcomes {
        match rec {
            Ok(r) => {
                for row in &r.rows {
                    rows.push(SweepRow {
                        particles: n,
                        beta,
                        t: row.report.time,
                        norm_error_sq: row.report.norm_error.powi(2),
                        excitation_number: row.report.excitation_number,
                        leakage: row.leakage,
                        status: "ok".into(),
                    });
                }
                records.push(r);
            }
            Err(e) => rows.push(SweepRow {
                particles: n,
                beta,
                t: f64::NAN,
                norm_error_sq: f64::NAN,
                excitation_number: f64::NAN,
                leakage: f64::NAN,
                status: format!("failed: {e}"),
            }),
        }
    }

    let mut betas: Vec<f64> = members.iter().map(|m| m.1).collect();
    betas.dedup();
    let fits = betas
        .iter()
        .map(|&beta| {
            let pts: Vec<(f64, f64)> = records
                .iter()
                .filter(|r| r.config.interaction.beta == beta)
                .map(|r| (r.particles as f64, r.final_row().report.norm_error.powi(2)))
                .collect();
            match fit_powerlaw(&pts) {
                Ok(fit) => BetaFit { beta, fit: Some(fit), error: None },
                Err(e) => BetaFit { beta, fit: None, error: Some(e.to_string()) },
            }
        })
        .collect();

    let result = SweepResult { config_hash: cfg.hash(), rows, fits, records };
    if let Some(d) = out {
        write_sweep(&result, d)?;
    }
    Ok(result)
}

fn write_sweep(result: &SweepResult, dir: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("summary.csv"))?));
    w.write_record(["config_hash", "N", "beta", "t", "norm_error_sq", "excitation_number", "leakage", "status"])?;
    for r in &result.rows {
        w.write_record([
            result.config_hash.clone(),
            r.particles.to_string(),
            format!("{}", r.beta),
            format!("{:.10e}", r.t),
            format!("{:.15e}", r.norm_error_sq),
            format!("{:.15e}", r.excitation_number),
            format!("{:.15e}", r.leakage),
            r.status.clone(),
        ])?;
    }
    w.flush()?;

    #[derive(Serialize)]
    struct SweepSummary<'a> {
        config_hash: &'a str,
        members: usize,
        failed: usize,
        fits: &'a [BetaFit],
    }
    let failed = result.rows.iter().filter(|r| r.status != "ok").count();
    let s = SweepSummary { config_hash: &result.config_hash, members: result.records.len() + failed, failed, fits: &result.fits };
    let mut f = BufWriter::new(File::create(dir.join("sweep.json"))?);
    serde_json::to_writer_pretty(&mut f, &s)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}
