//! Single-run orchestration: Hartree, pair and Fock-space Bogoliubov flows,
//! exact `N`-body evolution, and the per-sample comparison.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{ExcitationSpec, ExperimentConfig};
use crate::embedding::{condensation_metrics, CondensationMetrics, Embedder};
use crate::error::{Error, Result};
use crate::fock::{
    build_hn_exact_with_limit, covariance_of, evolve_exact_with, evolve_fock_with, one_body_reduced, squeezed_vacuum,
    wick_defect_with, write_snapshot, Cap, ExactOptions, ExactSample, ExactTrajectory, FockBasis, FockOptions,
    FockTrajectory, FockVector, WickOptions,
};
use crate::hartree::{evolve_hartree_with, step_count, HartreeOptions, HartreeTrajectory};
use crate::lattice::{max_abs, scaled_potential, GridFunction, GridSpec, InteractionProfile};
use crate::pairdyn::{evolve_pair_with, PairOptions, PairState, PairTrajectory};

/// Comparison of the exact state with the Bogoliubov approximation at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ApproximationReport {
    pub time: f64,
    /// `||Psi_exact - Psi_approx||`
    pub norm_error: f64,
    pub depletion: f64,
    pub kinetic_excitation: f64,
    pub trace_distance: f64,
    pub weighted_trace_distance: f64,
    /// `<Phi_N, N Phi_N>` with `Phi_N` the decomposition of the exact state.
    pub excitation_number: f64,
}

impl ApproximationReport {
    fn new(time: f64, norm_error: f64, m: CondensationMetrics, excitation_number: f64) -> Self {
        Self {
            time,
            norm_error,
            depletion: m.depletion,
            kinetic_excitation: m.kinetic_excitation,
            trace_distance: m.trace_distance,
            weighted_trace_distance: m.weighted_trace_distance,
            excitation_number,
        }
    }
}

/// One row of `compare.csv`: the report plus the oracle diagnostics at that time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    #[serde(flatten)]
    pub report: ApproximationReport,
    /// Cumulative truncation bound of the Fock-space run.
    pub leakage: f64,
    /// Weight of the excitation vector above `min(n_max, N)`, dropped before embedding.
    pub truncation_tail: f64,
    /// Weight removed when projecting the excitation vector off `u(t)`.
    pub projection_loss: f64,
    pub wick_defect: f64,
    /// `<(1 + N)^2> / <1 + N>^2` of the excitation vector.
    pub moment_ratio: f64,
    /// `max(|gamma_pair - gamma_Fock|, |alpha_pair - alpha_Fock|)` entrywise.
    pub pair_fock_mismatch: f64,
    pub exact_energy: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub hartree_norm_drift: f64,
    pub hartree_energy_drift: f64,
    pub pair_max_defect: f64,
    pub pair_max_step_defect: f64,
    pub fock_max_leakage: f64,
    pub fock_norm_drift: f64,
    pub exact_norm_drift: f64,
    pub exact_energy_drift: f64,
    pub krylov_fallbacks: usize,
    pub max_truncation_tail: f64,
    pub max_projection_loss: f64,
    pub max_wick_defect: f64,
    pub max_pair_fock_mismatch: f64,
    /// Squared norm lost when truncating squeezed initial data at `n_max`.
    pub initial_truncation_loss: f64,
    pub warnings: Vec<String>,
}

/// Wall-clock seconds per stage; kept out of the deterministic outputs.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Timing {
    pub hartree: f64,
    pub pair: f64,
    pub fock: f64,
    pub exact: f64,
    pub compare: f64,
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub particles: usize,
    pub rows: Vec<ComparisonRow>,
    pub hartree: HartreeTrajectory,
    pub pair: PairTrajectory,
    pub fock: FockTrajectory,
    pub exact: ExactTrajectory,
    pub diagnostics: Diagnostics,
    pub timing: Timing,
}

impl RunRecord {
    pub fn reports(&self) -> impl Iterator<Item = &ApproximationReport> {
        self.rows.iter().map(|r| &r.report)
    }

    pub fn final_row(&self) -> &ComparisonRow {
        self.rows.last().expect("a run has at least the initial row")
    }

    pub fn max_norm_error(&self) -> f64 {
        self.rows.iter().map(|r| r.report.norm_error).fold(0.0, f64::max)
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    config_hash: &'a str,
    status: &'a str,
    particles: usize,
    config: &'a ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_row: Option<&'a ComparisonRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_norm_error: Option<f64>,
    diagnostics: &'a Diagnostics,
}

/// Which part of the pipeline to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Hartree,
    Pair,
    Fock,
    Exact,
    Compare,
}

/// Shared setup of a single run.
pub struct Pipeline {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub particles: usize,
    pub grid: GridSpec,
    pub profile: InteractionProfile,
    pub u0: GridFunction,
    warnings: Vec<String>,
}

impl Pipeline {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let particles = config.particle_number()?;
        let grid = config.grid_spec()?;
        let profile = config.profile(particles);
        let u0 = config.initial_condensate(&grid)?;
        let sp = scaled_potential(&profile, &grid)?;
        Ok(Self {
            config: config.clone(),
            config_hash: config.hash(),
            particles,
            grid,
            profile,
            u0,
            warnings: sp.warnings,
        })
    }

    /// Times at which pair, Fock and exact states are stored and compared.
    pub fn sample_times(&self) -> Vec<f64> {
        let t = &self.config.time;
        let steps = step_count(t.t_final, t.dt);
        let mut out = vec![0.0];
        for n in 1..=steps {
            if n % t.stride == 0 || n == steps {
                out.push(if n == steps { t.t_final } else { n as f64 * t.dt });
            }
        }
        out
    }

    /// Hartree run at half the Bogoliubov step, so every RK4 stage time is a stored sample.
    pub fn hartree(&self) -> Result<HartreeTrajectory> {
        let wn = scaled_potential(&self.profile, &self.grid)?;
        let opts = HartreeOptions::new(self.config.time.t_final, 0.5 * self.config.time.dt);
        let mut traj = evolve_hartree_with(&self.u0, &wn.values, &opts)?;
        traj.profile = Some(self.profile.clone());
        traj.warnings = wn.warnings;
        Ok(traj)
    }

    pub fn initial_pair(&self) -> Result<PairState> {
        let modes = self.config.squeezed_modes(&self.u0)?;
        PairState::squeezed_modes(self.grid, &modes)
    }

    pub fn pair(&self, hartree: &HartreeTrajectory) -> Result<PairTrajectory> {
        let mut opts = PairOptions::new(self.config.time.dt);
        opts.stride = self.config.time.stride;
        opts.t_final = Some(self.config.time.t_final);
        opts.defect_limit = self.config.tolerances.pair_defect;
        evolve_pair_with(&self.initial_pair()?, hartree, &opts)
    }

    /// Normalized initial excitation vector and the weight lost to the cap.
    pub fn initial_excitations(&self) -> Result<(FockVector, f64)> {
        let t = &self.config.truncation;
        let basis = FockBasis::with_limit(self.grid.points(), Cap::MaxTotal(t.n_max), t.memory_cap)?;
        match &self.config.excitations {
            ExcitationSpec::Vacuum => Ok((FockVector::vacuum(basis)?, 0.0)),
            ExcitationSpec::Squeezed { .. } => squeezed_vacuum(&basis, &self.config.squeezed_modes(&self.u0)?),
        }
    }

    pub fn fock(&self, hartree: &HartreeTrajectory) -> Result<FockTrajectory> {
        let (phi0, _) = self.initial_excitations()?;
        let mut opts = FockOptions::new(self.config.time.dt);
        opts.stride = self.config.time.stride;
        opts.t_final = Some(self.config.time.t_final);
        opts.leakage_limit = self.config.tolerances.leakage;
        evolve_fock_with(&phi0, hartree, &opts)
    }

    pub fn embedder(&self) -> Result<Embedder> {
        Embedder::with_limit(self.grid.points(), self.particles, self.config.truncation.memory_cap)
    }

    /// `Psi_N(0) = embed(u0, Phi(0))`, normalized.
    pub fn initial_state(&self, embedder: &Embedder) -> Result<FockVector> {
        let (phi0, _) = self.initial_excitations()?;
        let cap = self.config.truncation.n_max.min(self.particles);
        let small = FockBasis::with_limit(self.grid.points(), Cap::MaxTotal(cap), self.config.truncation.memory_cap)?;
        let (phi0, _) = phi0.recap(&small)?;
        embedder.embed(&self.u0, &phi0)?.state.normalized()
    }

    /// Exact evolution stored at [`Self::sample_times`].
    pub fn exact(&self, embedder: &Embedder) -> Result<ExactTrajectory> {
        let t = &self.config.time;
        let h = build_hn_exact_with_limit(self.particles, &self.profile, &self.grid, self.config.truncation.memory_cap)?;
        let psi0 = self.initial_state(embedder)?;
        let times = self.sample_times();
        let mut out = ExactTrajectory {
            samples: vec![ExactSample { time: 0.0, norm: psi0.norm(), energy: h.expectation(&psi0)?, state: psi0.clone() }],
            fallbacks: 0,
        };
        let mut state = psi0;
        for w in times.windows(2) {
            let span = w[1] - w[0];
            let mut opts = ExactOptions::new(span, t.exact_dt.min(span));
            opts.stride = usize::MAX;
            let seg = evolve_exact_with(&state, &h, &opts).map_err(|e| match e {
                Error::Integrator { time, message } => Error::Integrator { time: w[0] + time, message },
                other => other,
            })?;
            out.fallbacks += seg.fallbacks;
            let last = seg.final_sample();
            state = last.state.clone();
            out.samples.push(ExactSample { time: w[1], state: state.clone(), norm: last.norm, energy: last.energy });
        }
        Ok(out)
    }

    pub fn compare(
        &self,
        embedder: &Embedder,
        hartree: &HartreeTrajectory,
        pair: &PairTrajectory,
        fock: &FockTrajectory,
        exact: &ExactTrajectory,
    ) -> Result<Vec<ComparisonRow>> {
        let n = self.particles;
        if fock.samples.len() != exact.samples.len() || pair.samples.len() != fock.samples.len() {
            return Err(Error::Internal("pair, Fock and exact runs have different sample counts".into()));
        }
        let cap = self.config.truncation.n_max.min(n);
        let small = FockBasis::with_limit(self.grid.points(), Cap::MaxTotal(cap), self.config.truncation.memory_cap)?;
        let wick_opts = WickOptions { seed: self.config.seed, ..WickOptions::default() };
        let mut rows = Vec::with_capacity(fock.samples.len());
        for ((fs, es), ps) in fock.samples.iter().zip(&exact.samples).zip(&pair.samples) {
            let t = fs.time;
            if (es.time - t).abs() > 1e-12 || (ps.time - t).abs() > 1e-12 {
                return Err(Error::Internal(format!("sample times disagree at t = {t}")));
            }
            let u = hartree.state_at(t);
            let (phi, tail) = fs.state.recap(&small)?;
            let emb = embedder.embed(u, &phi)?;
            let norm_error = (&es.state.coeffs - &emb.state.coeffs).norm();
            let gamma1 = one_body_reduced(&es.state, &self.grid)?;
            let metrics = condensation_metrics(&gamma1, u, n)?;
            let excitation_number = embedder.decompose(&es.state, u)?.number_expectation();
            let wick = wick_defect_with(&fs.state, &wick_opts)?;
            let (g, a) = covariance_of(&fs.state)?;
            let mismatch = max_abs(&(&ps.state.gamma - g)).max(max_abs(&(&ps.state.alpha - a)));
            rows.push(ComparisonRow {
                report: ApproximationReport::new(t, norm_error, metrics, excitation_number),
                leakage: fs.leakage,
                truncation_tail: tail,
                projection_loss: emb.projection_loss,
                wick_defect: wick.defect,
                moment_ratio: wick.moment_ratio,
                pair_fock_mismatch: mismatch,
                exact_energy: es.energy,
            });
        }
        Ok(rows)
    }

    fn diagnostics(
        &self,
        hartree: &HartreeTrajectory,
        pair: &PairTrajectory,
        fock: &FockTrajectory,
        exact: &ExactTrajectory,
        rows: &[ComparisonRow],
    ) -> Result<Diagnostics> {
        let energies = hartree.energies()?;
        let e0 = energies[0];
        let mut d = Diagnostics {
            hartree_norm_drift: hartree.states.iter().map(|u| (u.norm() - 1.0).abs()).fold(0.0, f64::max),
            hartree_energy_drift: energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.abs().max(1e-300),
            pair_max_defect: pair.samples.iter().map(|s| s.defect_x + s.defect_y).fold(0.0, f64::max),
            pair_max_step_defect: pair.max_step_defect,
            fock_max_leakage: fock.max_leakage(),
            fock_norm_drift: fock.samples.iter().map(|s| (s.norm - 1.0).abs()).fold(0.0, f64::max),
            exact_norm_drift: exact.max_norm_drift(),
            exact_energy_drift: exact.relative_energy_drift(),
            krylov_fallbacks: exact.fallbacks,
            max_truncation_tail: rows.iter().map(|r| r.truncation_tail).fold(0.0, f64::max),
            max_projection_loss: rows.iter().map(|r| r.projection_loss).fold(0.0, f64::max),
            max_wick_defect: rows.iter().map(|r| r.wick_defect).fold(0.0, f64::max),
            max_pair_fock_mismatch: rows.iter().map(|r| r.pair_fock_mismatch).fold(0.0, f64::max),
            initial_truncation_loss: self.initial_excitations()?.1,
            warnings: self.warnings.clone(),
        };
        if d.max_projection_loss > self.config.tolerances.condensate_leak {
            d.warnings.push(format!(
                "excitation vector left the orthogonal complement of u(t): projection loss up to {:.3e}",
                d.max_projection_loss
            ));
        }
        if self.config.truncation.n_max > self.particles {
            d.warnings.push(format!(
                "n_max = {} exceeds N = {}; sectors above N are dropped before embedding",
                self.config.truncation.n_max, self.particles
            ));
        }
        d.warnings.push(format!(
            "finite n_max = {} with leakage threshold {:.1e} stands in for the untruncated excitation space",
            self.config.truncation.n_max, self.config.tolerances.leakage
        ));
        Ok(d)
    }
}

struct Sink<'a> {
    dir: Option<&'a Path>,
    hash: String,
}

impl Sink<'_> {
    fn file(&self, name: &str) -> Result<Option<BufWriter<File>>> {
        match self.dir {
            Some(d) => Ok(Some(BufWriter::new(File::create(d.join(name))?))),
            None => Ok(None),
        }
    }

    fn failed(&self, pipe: &Pipeline, stage: &str, err: &Error) -> Result<()> {
        if let Some(mut f) = self.file("summary.json")? {
            let status = format!("failed during {stage}: {err}");
            let diag = Diagnostics { warnings: pipe.warnings.clone(), ..Diagnostics::default() };
            let s = Summary {
                config_hash: &self.hash,
                status: &status,
                particles: pipe.particles,
                config: &pipe.config,
                final_row: None,
                max_norm_error: None,
                diagnostics: &diag,
            };
            serde_json::to_writer_pretty(&mut f, &s)?;
            writeln!(f)?;
        }
        Ok(())
    }
}

fn stage<T>(sink: &Sink, pipe: &Pipeline, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().inspect_err(|e| {
        let _ = sink.failed(pipe, name, e);
    })
}

/// Runs every stage and returns the record without touching the file system.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<RunRecord> {
    run(cfg, None)
}

/// Runs every stage, writing each artifact into `dir` as soon as it exists.
pub fn run_pipeline_in(cfg: &ExperimentConfig, dir: &Path) -> Result<RunRecord> {
    run(cfg, Some(dir))
}

fn run(cfg: &ExperimentConfig, dir: Option<&Path>) -> Result<RunRecord> {
    let pipe = Pipeline::new(cfg)?;
    if let Some(d) = dir {
        fs::create_dir_all(d)?;
        fs::write(d.join("config.toml"), cfg.to_toml()?)?;
    }
    let sink = Sink { dir, hash: pipe.config_hash.clone() };
    let hash = pipe.config_hash.clone();
    let mut timing = Timing::default();

    let clock = Instant::now();
    let hartree = stage(&sink, &pipe, "hartree", || pipe.hartree())?;
    timing.hartree = clock.elapsed().as_secs_f64();
    if let Some(f) = sink.file("hartree.csv")? {
        hartree.write_csv(f, &hash)?;
    }

    let clock = Instant::now();
    let pair = stage(&sink, &pipe, "pair", || pipe.pair(&hartree))?;
    timing.pair = clock.elapsed().as_secs_f64();
    if let Some(f) = sink.file("pair.csv")? {
        pair.write_csv(f, &hash)?;
    }

    let clock = Instant::now();
    let fock = stage(&sink, &pipe, "fock", || pipe.fock(&hartree))?;
    timing.fock = clock.elapsed().as_secs_f64();
    if let Some(f) = sink.file("fock.csv")? {
        fock.write_csv(f, &hash)?;
    }
    if let (Some(d), true) = (dir, cfg.output.snapshots) {
        write_snapshots(&d.join("snapshots"), &fock)?;
    }

    let clock = Instant::now();
    let embedder = stage(&sink, &pipe, "exact", || pipe.embedder())?;
    let exact = stage(&sink, &pipe, "exact", || pipe.exact(&embedder))?;
    timing.exact = clock.elapsed().as_secs_f64();
    if let Some(f) = sink.file("exact.csv")? {
        exact.write_csv(f, &hash)?;
    }

    let clock = Instant::now();
    let rows = stage(&sink, &pipe, "compare", || pipe.compare(&embedder, &hartree, &pair, &fock, &exact))?;
    timing.compare = clock.elapsed().as_secs_f64();
    let diagnostics = pipe.diagnostics(&hartree, &pair, &fock, &exact, &rows)?;
    let record = RunRecord {
        config: cfg.clone(),
        config_hash: hash,
        particles: pipe.particles,
        rows,
        hartree,
        pair,
        fock,
        exact,
        diagnostics,
        timing,
    };
    if let Some(d) = dir {
        write_record(&record, d)?;
    }
    Ok(record)
}

/// Runs only the stages needed for `stage`, writing their artifacts into `dir`.
pub fn run_stage(cfg: &ExperimentConfig, which: Stage, dir: &Path) -> Result<()> {
    if which == Stage::Compare {
        return run_pipeline_in(cfg, dir).map(|_| ());
    }
    let pipe = Pipeline::new(cfg)?;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    let hash = &pipe.config_hash;
    let open = |name: &str| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(dir.join(name))?)) };
    if which == Stage::Exact {
        let emb = pipe.embedder()?;
        return pipe.exact(&emb)?.write_csv(open("exact.csv")?, hash);
    }
    let hartree = pipe.hartree()?;
    hartree.write_csv(open("hartree.csv")?, hash)?;
    match which {
        Stage::Pair => pipe.pair(&hartree)?.write_csv(open("pair.csv")?, hash),
        Stage::Fock => {
            let fock = pipe.fock(&hartree)?;
            if cfg.output.snapshots {
                write_snapshots(&dir.join("snapshots"), &fock)?;
            }
            fock.write_csv(open("fock.csv")?, hash)
        }
        _ => Ok(()),
    }
}

fn write_snapshots(dir: &PathBuf, fock: &FockTrajectory) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (i, s) in fock.samples.iter().enumerate() {
        write_snapshot(BufWriter::new(File::create(dir.join(format!("phi_{i:05}.bin")))?), &s.state)?;
    }
    Ok(())
}

/// Writes `compare.csv`, `norm_error.dat`, `summary.json` and `timing.json`.
pub fn write_record(record: &RunRecord, dir: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("compare.csv"))?));
    w.write_record([
        "config_hash",
        "time",
        "norm_error",
        "depletion",
        "kinetic_excitation",
        "trace_distance",
        "weighted_trace_distance",
        "excitation_number",
        "leakage",
        "truncation_tail",
        "projection_loss",
        "wick_defect",
        "moment_ratio",
        "pair_fock_mismatch",
        "exact_energy",
    ])?;
    for r in &record.rows {
        let p = &r.report;
        let mut row = vec![record.config_hash.clone(), format!("{:.10e}", p.time)];
        row.extend(
            [
                p.norm_error,
                p.depletion,
                p.kinetic_excitation,
                p.trace_distance,
                p.weighted_trace_distance,
                p.excitation_number,
                r.leakage,
                r.truncation_tail,
                r.projection_loss,
                r.wick_defect,
                r.moment_ratio,
                r.pair_fock_mismatch,
                r.exact_energy,
            ]
            .iter()
            .map(|v| format!("{v:.15e}")),
        );
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut dat = BufWriter::new(File::create(dir.join("norm_error.dat"))?);
    writeln!(dat, "# config_hash {}", record.config_hash)?;
    writeln!(dat, "# time norm_error")?;
    for p in record.reports() {
        writeln!(dat, "{:.10e} {:.15e}", p.time, p.norm_error)?;
    }
    dat.flush()?;

    let summary = Summary {
        config_hash: &record.config_hash,
        status: "ok",
        particles: record.particles,
        config: &record.config,
        final_row: Some(record.final_row()),
        max_norm_error: Some(record.max_norm_error()),
        diagnostics: &record.diagnostics,
    };
    let mut f = BufWriter::new(File::create(dir.join("summary.json"))?);
    serde_json::to_writer_pretty(&mut f, &summary)?;
    writeln!(f)?;
    f.flush()?;

    let mut f = BufWriter::new(File::create(dir.join("timing.json"))?);
    serde_json::to_writer_pretty(&mut f, &record.timing)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}
