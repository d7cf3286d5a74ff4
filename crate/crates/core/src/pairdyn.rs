//! Bogoliubov one-body ingredients `h(t)`, `K_2(t)` and the flow of the
//! density-matrix pair `(gamma, alpha)` of the excitation vector.
//!
//! In mode coordinates the pair obeys
//!
//! ```text
//! i d(gamma)/dt = h gamma - gamma h + K2 conj(alpha) - alpha conj(K2)
//! i d(alpha)/dt = h alpha + alpha h^T + K2 + K2 gamma^T + gamma K2
//! ```
//!
//! and quasi-free data stays quasi-free: `X = gamma + gamma^2 - alpha alpha^dagger`
//! and `Y = gamma alpha - alpha gamma^T` both vanish along the flow.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::hartree::{mean_field, mu_phase, step_count, HartreeTrajectory};
use crate::lattice::{
    hermitian_defect, hermitian_function, hermitian_part, laplacian_operator, min_eigenvalue, symmetric_part,
    symmetry_defect, GridFunction, GridSpec, OneBodyOperator, Role,
};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Pair of one-body density matrices `gamma(x,y) = <a*_y a_x>`, `alpha(x,y) = <a_x a_y>`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairState {
    pub grid: GridSpec,
    pub gamma: DMatrix<C64>,
    pub alpha: DMatrix<C64>,
}

impl PairState {
    pub fn vacuum(grid: GridSpec) -> Self {
        let m = grid.points();
        Self { grid, gamma: DMatrix::zeros(m, m), alpha: DMatrix::zeros(m, m) }
    }

    /// `gamma = sinh(S)^2`, `alpha = sinh(S) cosh(S)` for a real symmetric `S`.
    pub fn squeezed(grid: GridSpec, s: &DMatrix<f64>) -> Result<Self> {
        let m = grid.points();
        if s.nrows() != m || s.ncols() != m {
            return invalid("squeezing matrix has the wrong dimension");
        }
        if (s - s.transpose()).amax() > 1e-12 {
            return invalid("squeezing matrix must be symmetric");
        }
        let sc = s.map(|v| C64::new(v, 0.0));
        let gamma = hermitian_function(&sc, |l| l.sinh().powi(2));
        let alpha = hermitian_function(&sc, |l| l.sinh() * l.cosh());
        Ok(Self { grid, gamma, alpha })
    }

    /// Independent single-mode squeezing in orthonormal modes `v_m` (mode
    /// coefficients) with strengths `s_m`: `gamma = sum sinh^2 v v^dagger`,
    /// `alpha = sum sinh cosh v v^T`.
    pub fn squeezed_modes(grid: GridSpec, modes: &[(DVector<C64>, f64)]) -> Result<Self> {
        let mut st = Self::vacuum(grid);
        for (v, s) in modes {
            if v.len() != grid.points() {
                return invalid("squeezed mode has the wrong dimension");
            }
            st.gamma += v * v.adjoint() * C64::new(s.sinh().powi(2), 0.0);
            st.alpha += v * v.transpose() * C64::new(s.sinh() * s.cosh(), 0.0);
        }
        Ok(st)
    }

    pub fn gamma_operator(&self) -> OneBodyOperator {
        OneBodyOperator::new_unchecked(self.grid, self.gamma.clone(), Role::Psd)
    }

    /// Checks the stored invariants (Hermitian PSD `gamma`, symmetric `alpha`).
    pub fn validate(&self) -> Result<()> {
        let m = self.grid.points();
        if self.gamma.shape() != (m, m) || self.alpha.shape() != (m, m) {
            return invalid("pair state dimension does not match the grid");
        }
        let hd = hermitian_defect(&self.gamma);
        if hd > 1e-10 {
            return invalid(format!("gamma hermiticity defect {hd:.3e}"));
        }
        let sd = symmetry_defect(&self.alpha);
        if sd > 1e-10 {
            return invalid(format!("alpha symmetry defect {sd:.3e}"));
        }
        let min = min_eigenvalue(&self.gamma);
        if min < -1e-8 {
            return invalid(format!("gamma has negative eigenvalue {min:.3e}"));
        }
        Ok(())
    }
}

/// Time derivative of a [`PairState`].
#[derive(Clone, Debug)]
pub struct PairDerivative {
    pub gamma: DMatrix<C64>,
    pub alpha: DMatrix<C64>,
}

/// One-body data of the quadratic Hamiltonian at a fixed time.
#[derive(Clone, Debug)]
pub struct BogoliubovIngredients {
    pub h: DMatrix<C64>,
    pub k2: DMatrix<C64>,
    pub q: DMatrix<C64>,
    pub mu: f64,
}

/// Caches the `u`-independent parts (Laplacian, interaction matrix).
#[derive(Clone, Debug)]
pub struct IngredientBuilder {
    grid: GridSpec,
    potential: GridFunction,
    laplacian: DMatrix<C64>,
    /// `W[j, k] = w_N(x_j - x_k)`
    interaction: DMatrix<f64>,
}

impl IngredientBuilder {
    pub fn new(potential: &GridFunction) -> Self {
        let grid = *potential.grid();
        let m = grid.points();
        let interaction = DMatrix::from_fn(m, m, |j, k| potential.values()[(j + m - k) % m].re);
        Self { grid, potential: potential.clone(), laplacian: laplacian_operator(&grid).into_matrix(), interaction }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn laplacian(&self) -> &DMatrix<C64> {
        &self.laplacian
    }

    pub fn build(&self, u: &GridFunction) -> Result<BogoliubovIngredients> {
        self.grid.check_same(u.grid())?;
        let mu = mu_phase(u, &self.potential)?;
        let v = mean_field(u, &self.potential)?;
        let c = u.modes();
        let m = self.grid.points();
        let q = DMatrix::<C64>::identity(m, m) - &c * c.adjoint();
        let k1 = DMatrix::from_fn(m, m, |j, k| c[j] * self.interaction[(j, k)] * c[k].conj());
        let k2_raw = DMatrix::from_fn(m, m, |j, k| c[j] * self.interaction[(j, k)] * c[k]);
        let mut h = self.laplacian.clone() + &q * k1 * &q;
        for (j, vj) in v.iter().enumerate() {
            h[(j, j)] += C64::new(vj - mu, 0.0);
        }
        let k2 = &q * k2_raw * q.transpose();
        Ok(BogoliubovIngredients { h: hermitian_part(&h), k2: symmetric_part(&k2), q, mu })
    }
}

/// `h = -Delta + w_N * |u|^2 - mu_N + Q K1 Q`, `K2 = Q K2~ Q^T`.
pub fn build_ingredients(u: &GridFunction, wn: &GridFunction) -> Result<BogoliubovIngredients> {
    u.grid().check_same(wn.grid())?;
    u.require_normalized("condensate")?;
    IngredientBuilder::new(wn).build(u)
}

/// Which form of the pairing term drives `gamma`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PairingConvention {
    /// `K2 conj(alpha) - alpha conj(K2)`, matching the Fock-space oracle.
    #[default]
    Derived,
    /// `K2 alpha - conj(alpha) conj(K2)`.
    Literal,
}

pub fn pair_rhs(state: &PairState, ing: &BogoliubovIngredients) -> Result<PairDerivative> {
    pair_rhs_with(state, ing, PairingConvention::Derived)
}

pub fn pair_rhs_with(
    state: &PairState,
    ing: &BogoliubovIngredients,
    convention: PairingConvention,
) -> Result<PairDerivative> {
    let m = state.gamma.nrows();
    if ing.h.shape() != (m, m) || ing.k2.shape() != (m, m) || state.alpha.shape() != (m, m) {
        return invalid("pair state and ingredients have mismatched dimensions");
    }
    let (h, k, g, a) = (&ing.h, &ing.k2, &state.gamma, &state.alpha);
    let kbar = k.conjugate();
    let abar = a.conjugate();
    let pairing = match convention {
        PairingConvention::Derived => k * &abar - a * &kbar,
        PairingConvention::Literal => k * a - &abar * &kbar,
    };
    let dg = (h * g - g * h + pairing) * (-I);
    let da = (h * a + a * h.transpose() + k + k * g.transpose() + g * k) * (-I);
    Ok(PairDerivative { gamma: dg, alpha: da })
}

/// `(||X||_HS, ||Y||_HS)` with `X = gamma + gamma^2 - alpha alpha^dagger`, `Y = gamma alpha - alpha gamma^T`.
pub fn quasifree_defect(state: &PairState) -> (f64, f64) {
    let (g, a) = (&state.gamma, &state.alpha);
    let x = g + g * g - a * a.adjoint();
    let y = g * a - a * g.transpose();
    (x.norm(), y.norm())
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairObservables {
    /// `Tr gamma = <Phi, N Phi>`
    pub number: f64,
    /// `Tr((1 - Delta) gamma)`
    pub kinetic: f64,
    pub hs_alpha: f64,
    /// `||gamma u|| + ||alpha conj(u)||`
    pub condensate_leak: f64,
}

pub fn pair_observables(state: &PairState, u: &GridFunction) -> Result<PairObservables> {
    let lap = laplacian_operator(&state.grid);
    pair_observables_with(state, u, lap.matrix())
}

pub(crate) fn pair_observables_with(
    state: &PairState,
    u: &GridFunction,
    laplacian: &DMatrix<C64>,
) -> Result<PairObservables> {
    state.grid.check_same(u.grid())?;
    let c = u.modes();
    let number = state.gamma.trace().re;
    let kinetic = number + (laplacian * &state.gamma).trace().re;
    let leak = (&state.gamma * &c).norm() + (&state.alpha * c.conjugate()).norm();
    Ok(PairObservables { number, kinetic, hs_alpha: state.alpha.norm(), condensate_leak: leak })
}

#[derive(Clone, Copy, Debug)]
pub struct PairOptions {
    pub dt: f64,
    /// Final time; defaults to the end of the Hartree trajectory.
    pub t_final: Option<f64>,
    pub stride: usize,
    pub convention: PairingConvention,
    /// Abort threshold on the pre-correction structure defects.
    pub defect_limit: f64,
}

impl PairOptions {
    pub fn new(dt: f64) -> Self {
        Self { dt, t_final: None, stride: 1, convention: PairingConvention::Derived, defect_limit: 1e-6 }
    }
}

/// One stored sample of a pair run.
#[derive(Clone, Debug)]
pub struct PairSample {
    pub time: f64,
    pub state: PairState,
    pub observables: PairObservables,
    pub defect_x: f64,
    pub defect_y: f64,
    /// Largest pre-correction Hermiticity/symmetry defect over the steps since the previous sample.
    pub step_defect: f64,
    /// `<N(0)>^2 + log(2 + t)^2`, the shape of the number bound (monitored only).
    pub number_bound_shape: f64,
}

#[derive(Clone, Debug)]
pub struct PairTrajectory {
    pub samples: Vec<PairSample>,
    /// Largest pre-correction defect over the whole run.
    pub max_step_defect: f64,
    /// Set when some RK4 stage time had no exact Hartree sample.
    pub used_nearest_sample: bool,
}

impl PairTrajectory {
    pub fn final_state(&self) -> &PairState {
        &self.samples.last().expect("trajectory holds the initial state").state
    }

    /// CSV with columns `config_hash,time,number,kinetic,hs_alpha,defect_X,defect_Y,condensate_leak`.
    pub fn write_csv<W: Write>(&self, out: W, config_hash: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "config_hash",
            "time",
            "number",
            "kinetic",
            "hs_alpha",
            "defect_X",
            "defect_Y",
            "condensate_leak",
        ])?;
        for s in &self.samples {
            w.write_record([
                config_hash.to_string(),
                format!("{:.10e}", s.time),
                format!("{:.15e}", s.observables.number),
                format!("{:.15e}", s.observables.kinetic),
                format!("{:.15e}", s.observables.hs_alpha),
                format!("{:.15e}", s.defect_x),
                format!("{:.15e}", s.defect_y),
                format!("{:.15e}", s.observables.condensate_leak),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Looks up ingredients at a stage time, reusing the last lookup when the
/// Hartree sample is the same.
pub(crate) struct StageIngredients<'a> {
    builder: IngredientBuilder,
    traj: &'a HartreeTrajectory,
    cache: Option<(usize, BogoliubovIngredients)>,
    pub used_nearest: bool,
}

impl<'a> StageIngredients<'a> {
    pub fn new(traj: &'a HartreeTrajectory) -> Self {
        Self { builder: IngredientBuilder::new(&traj.potential), traj, cache: None, used_nearest: false }
    }

    pub fn laplacian(&self) -> &DMatrix<C64> {
        self.builder.laplacian()
    }

    pub fn at(&mut self, t: f64) -> Result<BogoliubovIngredients> {
        if !self.traj.has_sample(t) {
            self.used_nearest = true;
        }
        let idx = self.traj.index_at(t);
        if let Some((i, ing)) = &self.cache {
            if *i == idx {
                return Ok(ing.clone());
            }
        }
        let ing = self.builder.build(&self.traj.states[idx])?;
        self.cache = Some((idx, ing.clone()));
        Ok(ing)
    }
}

fn axpy(s: &PairState, d: &PairDerivative, tau: f64) -> PairState {
    let c = C64::new(tau, 0.0);
    PairState { grid: s.grid, gamma: &s.gamma + &d.gamma * c, alpha: &s.alpha + &d.alpha * c }
}

/// RK4 propagation of the pair, rebuilding `h`, `K2` from `u(t)` at every stage.
pub fn evolve_pair(init: &PairState, traj: &HartreeTrajectory, dt: f64) -> Result<PairTrajectory> {
    evolve_pair_with(init, traj, &PairOptions::new(dt))
}

pub fn evolve_pair_with(init: &PairState, traj: &HartreeTrajectory, opts: &PairOptions) -> Result<PairTrajectory> {
    init.validate()?;
    traj.grid().check_same(&init.grid)?;
    if !(opts.dt.is_finite() && opts.dt > 0.0) {
        return invalid(format!("dt must be positive, got {}", opts.dt));
    }
    if opts.stride == 0 {
        return invalid("stride must be at least 1");
    }
    let t_end = *traj.times.last().expect("non-empty trajectory");
    let t_final = opts.t_final.unwrap_or(t_end);
    if t_final > t_end + 1e-9 * opts.dt {
        return invalid(format!("pair run to t = {t_final} exceeds the Hartree trajectory ({t_end})"));
    }
    let steps = step_count(t_final, opts.dt);
    let mut stages = StageIngredients::new(traj);
    let n0 = init.gamma.trace().re;
    let sample = |time: f64, state: &PairState, step_defect: f64, stages: &StageIngredients| -> Result<PairSample> {
        let u = traj.state_at(time);
        let observables = pair_observables_with(state, u, stages.laplacian())?;
        let (defect_x, defect_y) = quasifree_defect(state);
        Ok(PairSample {
            time,
            state: state.clone(),
            observables,
            defect_x,
            defect_y,
            step_defect,
            number_bound_shape: n0 * n0 + (2.0 + time).ln().powi(2),
        })
    };

    let mut out = PairTrajectory { samples: vec![sample(0.0, init, 0.0, &stages)?], max_step_defect: 0.0, used_nearest_sample: false };
    let mut state = init.clone();
    let mut window_defect: f64 = 0.0;
    for n in 1..=steps {
        let t0 = (n - 1) as f64 * opts.dt;
        let t1 = if n == steps { t_final } else { n as f64 * opts.dt };
        let tau = t1 - t0;
        let ing0 = stages.at(t0)?;
        let ing_mid = stages.at(t0 + 0.5 * tau)?;
        let ing1 = stages.at(t1)?;
        let k1 = pair_rhs_with(&state, &ing0, opts.convention)?;
        let k2 = pair_rhs_with(&axpy(&state, &k1, 0.5 * tau), &ing_mid, opts.convention)?;
        let k3 = pair_rhs_with(&axpy(&state, &k2, 0.5 * tau), &ing_mid, opts.convention)?;
        let k4 = pair_rhs_with(&axpy(&state, &k3, tau), &ing1, opts.convention)?;
        let w = C64::new(tau / 6.0, 0.0);
        let two = C64::new(2.0, 0.0);
        let gamma = &state.gamma + (&k1.gamma + &k2.gamma * two + &k3.gamma * two + &k4.gamma) * w;
        let alpha = &state.alpha + (&k1.alpha + &k2.alpha * two + &k3.alpha * two + &k4.alpha) * w;

        let defect = hermitian_defect(&gamma).max(symmetry_defect(&alpha));
        window_defect = window_defect.max(defect);
        out.max_step_defect = out.max_step_defect.max(defect);
        if defect > opts.defect_limit {
            return Err(Error::Integrator {
                time: t1,
                message: format!("pre-correction structure defect {defect:.3e} exceeds {:.1e}", opts.defect_limit),
            });
        }
        state = PairState { grid: state.grid, gamma: hermitian_part(&gamma), alpha: symmetric_part(&alpha) };
        let min = min_eigenvalue(&state.gamma);
        if min < -1e-8 {
            return Err(Error::Integrator { time: t1, message: format!("gamma lost positivity: eigenvalue {min:.3e}") });
        }
        if n % opts.stride == 0 || n == steps {
            out.samples.push(sample(t1, &state, window_defect, &stages)?);
            window_defect = 0.0;
        }
    }
    out.used_nearest_sample = stages.used_nearest;
    Ok(out)
}
