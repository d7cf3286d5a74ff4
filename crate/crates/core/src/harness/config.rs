//! Experiment configuration: a TOML document with a fixed key schema.
//!
//! ```toml
//! seed = 0                       # optional, default 0
//! particles = 4                  # N for single runs
//! particles_list = [3, 4, 5, 6]  # optional, for sweeps
//! beta_list = [0.0, 0.2]         # optional, for sweeps
//!
//! [grid]
//! length = 6.283185
//! points = 32
//!
//! [interaction]
//! beta = 0.0
//! renormalize = false            # optional
//! exponents = [0.0, 0.0]         # optional (a, b) in N^a w(N^b x)
//! [interaction.profile]
//! kind = "gaussian"              # zero | gaussian | box | cosine | tabulated
//! strength = 1.0
//! sigma = 0.5
//!
//! [condensate]                   # optional, default plane wave with index 0
//! kind = "plane_wave"            # plane_wave {index} | gaussian {center, width, momentum} | file {path}
//! index = 1
//!
//! [excitations]                  # optional, default vacuum
//! kind = "squeezed"              # vacuum | squeezed
//! modes = [{ index = 2, strength = 0.1 }]
//!
//! [time]
//! t_final = 0.5
//! dt = 1e-3
//! stride = 10                    # optional: steps between stored samples
//! exact_dt = 1e-2                # optional: Krylov step of the exact propagator
//!
//! [truncation]                   # optional
//! n_max = 4
//! memory_cap = 200000
//!
//! [tolerances]                   # optional
//! leakage = 1e-3
//! pair_defect = 1e-6
//! condensate_leak = 1e-6
//!
//! [output]                       # optional
//! snapshots = false
//! ```

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{build_grid, GridFunction, GridSpec, InteractionProfile, ProfileShape};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub length: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionConfig {
    pub profile: ProfileShape,
    pub beta: f64,
    #[serde(default)]
    pub renormalize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CondensateSpec {
    PlaneWave { index: i64 },
    Gaussian { center: f64, width: f64, #[serde(default)] momentum: f64 },
    /// CSV with one `re,im` row per grid point (header optional); normalized on load.
    File { path: PathBuf },
}

impl Default for CondensateSpec {
    fn default() -> Self {
        CondensateSpec::PlaneWave { index: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqueezedMode {
    /// Plane-wave index of the mode before projection off the condensate.
    pub index: i64,
    pub strength: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExcitationSpec {
    #[default]
    Vacuum,
    Squeezed { modes: Vec<SqueezedMode> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_exact_dt")]
    pub exact_dt: f64,
}

fn default_stride() -> usize {
    10
}

fn default_exact_dt() -> f64 {
    1e-2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_memory_cap")]
    pub memory_cap: usize,
}

fn default_n_max() -> usize {
    4
}

fn default_memory_cap() -> usize {
    crate::fock::DEFAULT_DIMENSION_CAP
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self { n_max: default_n_max(), memory_cap: default_memory_cap() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_leakage")]
    pub leakage: f64,
    #[serde(default = "default_pair_defect")]
    pub pair_defect: f64,
    #[serde(default = "default_condensate_leak")]
    pub condensate_leak: f64,
}

fn default_leakage() -> f64 {
    1e-3
}

fn default_pair_defect() -> f64 {
    1e-6
}

fn default_condensate_leak() -> f64 {
    1e-6
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { leakage: default_leakage(), pair_defect: default_pair_defect(), condensate_leak: default_condensate_leak() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Write every stored excitation vector as a binary snapshot.
    #[serde(default)]
    pub snapshots: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles_list: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_list: Option<Vec<f64>>,
    pub grid: GridConfig,
    pub interaction: InteractionConfig,
    #[serde(default)]
    pub condensate: CondensateSpec,
    #[serde(default)]
    pub excitations: ExcitationSpec,
    pub time: TimeConfig,
    #[serde(default)]
    pub truncation: TruncationConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

fn config_error<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

fn check_beta(key: &str, beta: f64) -> Result<()> {
    if !(beta.is_finite() && (0.0..0.5).contains(&beta)) {
        return config_error(format!("{key} = {beta} is outside the admissible range 0 ≤ β < 1/2"));
    }
    Ok(())
}

fn check_particles(key: &str, n: usize) -> Result<()> {
    if n < 2 {
        return config_error(format!("{key} = {n}: exact-comparison runs need N ≥ 2"));
    }
    Ok(())
}

fn check_positive(key: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return config_error(format!("{key} must be positive, got {v}"));
    }
    Ok(())
}

/// Reads and validates a config file. Relative condensate file paths are
/// resolved against the config's directory.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse_config_str(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    if let CondensateSpec::File { path: p } = &mut cfg.condensate {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                *p = dir.join(&*p);
            }
        }
    }
    Ok(cfg)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("grid.length", self.grid.length)?;
        if self.grid.points < 2 {
            return config_error(format!("grid.points must be at least 2, got {}", self.grid.points));
        }
        self.interaction.profile.validate().map_err(|e| Error::Config(format!("interaction.profile: {e}")))?;
        check_beta("interaction.beta", self.interaction.beta)?;
        if let Some(list) = &self.beta_list {
            if list.is_empty() {
                return config_error("beta_list is empty");
            }
            for b in list {
                check_beta("beta_list entry", *b)?;
            }
        }
        if let Some((a, b)) = self.interaction.exponents {
            if !(a.is_finite() && b.is_finite()) {
                return config_error("interaction.exponents must be finite");
            }
        }
        match (&self.particles, &self.particles_list) {
            (None, None) => return config_error("missing key `particles` (or `particles_list`)"),
            (_, Some(list)) if list.is_empty() => return config_error("particles_list is empty"),
            _ => {}
        }
        if let Some(n) = self.particles {
            check_particles("particles", n)?;
        }
        for n in self.particles_list.iter().flatten() {
            check_particles("particles_list entry", *n)?;
        }
        check_positive("time.dt", self.time.dt)?;
        check_positive("time.exact_dt", self.time.exact_dt)?;
        if !(self.time.t_final.is_finite() && self.time.t_final >= 0.0) {
            return config_error(format!("time.t_final must be nonnegative, got {}", self.time.t_final));
        }
        if self.time.stride == 0 {
            return config_error("time.stride must be at least 1");
        }
        if self.truncation.memory_cap == 0 {
            return config_error("truncation.memory_cap must be positive");
        }
        check_positive("tolerances.leakage", self.tolerances.leakage)?;
        check_positive("tolerances.pair_defect", self.tolerances.pair_defect)?;
        check_positive("tolerances.condensate_leak", self.tolerances.condensate_leak)?;
        match &self.condensate {
            CondensateSpec::Gaussian { width, center, momentum } => {
                check_positive("condensate.width", *width)?;
                if !(center.is_finite() && momentum.is_finite()) {
                    return config_error("condensate.center and condensate.momentum must be finite");
                }
            }
            CondensateSpec::PlaneWave { .. } | CondensateSpec::File { .. } => {}
        }
        if let ExcitationSpec::Squeezed { modes } = &self.excitations {
            if modes.is_empty() {
                return config_error("excitations.modes is empty");
            }
            for m in modes {
                if !m.strength.is_finite() {
                    return config_error("excitations.modes strength must be finite");
                }
            }
        }
        Ok(())
    }

    /// `N` of a single run.
    pub fn particle_number(&self) -> Result<usize> {
        match (self.particles, &self.particles_list) {
            (Some(n), _) => Ok(n),
            (None, Some(list)) if list.len() == 1 => Ok(list[0]),
            _ => config_error("a single run needs `particles` (or a one-element `particles_list`)"),
        }
    }

    /// The `(N, beta)` members of a sweep, in order.
    pub fn sweep_members(&self) -> Result<Vec<(usize, f64)>> {
        let ns: Vec<usize> = match (&self.particles_list, self.particles) {
            (Some(list), _) => list.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => return config_error("empty particle list"),
        };
        if ns.is_empty() {
            return config_error("empty particle list");
        }
        let betas = self.beta_list.clone().unwrap_or_else(|| vec![self.interaction.beta]);
        Ok(betas.iter().flat_map(|&b| ns.iter().map(move |&n| (n, b))).collect())
    }

    /// Single-run config for one sweep member.
    pub fn member(&self, n: usize, beta: f64) -> ExperimentConfig {
        let mut c = self.clone();
        c.particles = Some(n);
        c.particles_list = None;
        c.beta_list = None;
        c.interaction.beta = beta;
        c
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        build_grid(self.grid.length, self.grid.points)
    }

    pub fn profile(&self, n: usize) -> InteractionProfile {
        InteractionProfile {
            shape: self.interaction.profile.clone(),
            beta: self.interaction.beta,
            particles: n,
            exponents: self.interaction.exponents,
            renormalize: self.interaction.renormalize,
        }
    }

    pub fn initial_condensate(&self, grid: &GridSpec) -> Result<GridFunction> {
        match &self.condensate {
            CondensateSpec::PlaneWave { index } => Ok(GridFunction::plane_wave(*grid, *index)),
            CondensateSpec::Gaussian { center, width, momentum } => {
                Ok(GridFunction::gaussian(*grid, *center, *width, *momentum))
            }
            CondensateSpec::File { path } => load_condensate(path, grid),
        }
    }

    /// Orthonormal mode vectors and strengths of the squeezed initial data:
    /// plane waves projected off `u0` and Gram-Schmidt orthonormalized.
    pub fn squeezed_modes(&self, u0: &GridFunction) -> Result<Vec<(DVector<C64>, f64)>> {
        let ExcitationSpec::Squeezed { modes } = &self.excitations else {
            return Ok(Vec::new());
        };
        let c = u0.modes();
        let mut basis: Vec<DVector<C64>> = vec![c.clone()];
        let mut out = Vec::new();
        for m in modes {
            let mut v = GridFunction::plane_wave(*u0.grid(), m.index).modes();
            for _ in 0..2 {
                for b in &basis {
                    let proj = b.dotc(&v);
                    v.axpy(-proj, b, C64::new(1.0, 0.0));
                }
            }
            let n = v.norm();
            if n < 1e-8 {
                return config_error(format!(
                    "excitations mode with index {} is (nearly) dependent on the condensate or earlier modes",
                    m.index
                ));
            }
            let v = v.unscale(n);
            basis.push(v.clone());
            out.push((v, m.strength));
        }
        Ok(out)
    }

    /// Stable hash of everything that affects the numbers.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

fn load_condensate(path: &Path, grid: &GridSpec) -> Result<GridFunction> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |i: usize| rec.get(i).and_then(|s| s.parse::<f64>().ok());
        match (parse(0), parse(1)) {
            (Some(re), im) => values.push(C64::new(re, im.unwrap_or(0.0))),
            (None, _) if values.is_empty() => continue,
            _ => return config_error(format!("{}: unparsable row {:?}", path.display(), rec)),
        }
    }
    if values.len() != grid.points() {
        return config_error(format!(
            "{}: {} samples for a {}-point grid",
            path.display(),
            values.len(),
            grid.points()
        ));
    }
    GridFunction::new(*grid, DVector::from_vec(values))?.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
particles = 4
[grid]
length = 6.283185
points = 32
[interaction]
beta = 0.0
[interaction.profile]
kind = "gaussian"
strength = 1.0
sigma = 0.5
[time]
t_final = 0.5
dt = 1e-3
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg.truncation.n_max, 4);
        assert_eq!(cfg.excitations, ExcitationSpec::Vacuum);
        assert_eq!(cfg.particle_number().unwrap(), 4);
        assert_eq!(cfg.tolerances.leakage, 1e-3);
    }

    #[test]
    fn beta_out_of_range_is_rejected() {
        let text = MINIMAL.replace("beta = 0.0", "beta = 0.7");
        let msg = parse_config_str(&text).unwrap_err().to_string();
        assert!(msg.contains("0 ≤ β < 1/2"), "{msg}");
        assert!(msg.contains("interaction.beta"), "{msg}");
    }

    #[test]
    fn unknown_key_is_named() {
        let text = MINIMAL.replace("beta = 0.0", "beta = 0.0\nbetta = 0.1");
        let msg = parse_config_str(&text).unwrap_err().to_string();
        assert!(msg.contains("betta"), "{msg}");
    }

    #[test]
    fn small_n_and_missing_keys() {
        let msg = parse_config_str(&MINIMAL.replace("particles = 4", "particles = 1")).unwrap_err().to_string();
        assert!(msg.contains("N ≥ 2"), "{msg}");
        let msg = parse_config_str(&MINIMAL.replace("dt = 1e-3", "")).unwrap_err().to_string();
        assert!(msg.contains("dt"), "{msg}");
        let msg = parse_config_str(&MINIMAL.replace("particles = 4", "particles_list = []")).unwrap_err().to_string();
        assert!(msg.contains("empty"), "{msg}");
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = parse_config_str(MINIMAL).unwrap();
        let b = parse_config_str(MINIMAL).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse_config_str(&MINIMAL.replace("t_final = 0.5", "t_final = 0.6")).unwrap();
        assert_ne!(a.hash(), c.hash());
        let echoed = parse_config_str(&a.to_toml().unwrap()).unwrap();
        assert_eq!(echoed, a);
    }

    #[test]
    fn sweep_members_cover_lists() {
        let text = MINIMAL.replace("particles = 4", "particles_list = [3, 4]\nbeta_list = [0.0, 0.2]");
        let cfg = parse_config_str(&text).unwrap();
        let m = cfg.sweep_members().unwrap();
        assert_eq!(m, vec![(3, 0.0), (4, 0.0), (3, 0.2), (4, 0.2)]);
        assert_eq!(cfg.member(4, 0.2).interaction.beta, 0.2);
    }

    #[test]
    fn squeezed_modes_are_orthonormal_and_off_condensate() {
        let text = format!("{MINIMAL}\n[excitations]\nkind = \"squeezed\"\nmodes = [{{ index = 1, strength = 0.1 }}, {{ index = -1, strength = 0.2 }}]\n");
        let cfg = parse_config_str(&text).unwrap();
        let grid = cfg.grid_spec().unwrap();
        let u0 = GridFunction::gaussian(grid, 1.0, 0.8, 0.0);
        let modes = cfg.squeezed_modes(&u0).unwrap();
        assert_eq!(modes.len(), 2);
        let c = u0.modes();
        for (v, _) in &modes {
            assert!(c.dotc(v).norm() < 1e-12);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        assert!(modes[0].0.dotc(&modes[1].0).norm() < 1e-12);
    }
}
