//! Condensate dynamics: the Hartree equation
//! `i du/dt = (-Delta + w_N * |u|^2 - mu_N(t)) u` on the periodic grid, solved by
//! Strang splitting with the kinetic flow applied exactly in Fourier space.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::lattice::{
    laplacian_operator, periodic_convolve, scaled_potential, GridFunction, GridSpec,
    InteractionProfile, OneBodyOperator, Role,
};

/// `mu_N = 1/2 * dx^2 * sum_{j,k} |u_j|^2 w_N(j - k) |u_k|^2`
pub fn mu_phase(u: &GridFunction, wn: &GridFunction) -> Result<f64> {
    u.require_normalized("condensate")?;
    mu_unchecked(u, wn)
}

fn mu_unchecked(u: &GridFunction, wn: &GridFunction) -> Result<f64> {
    let density = u.abs_squared();
    let v = periodic_convolve(u.grid(), wn, &density)?;
    let dx = u.grid().dx();
    Ok(0.5 * dx * density.values().iter().zip(v.values().iter()).map(|(d, p)| d.re * p.re).sum::<f64>())
}

/// Mean-field potential `w_N * |u|^2`, real part only.
pub fn mean_field(u: &GridFunction, wn: &GridFunction) -> Result<Vec<f64>> {
    let v = periodic_convolve(u.grid(), wn, &u.abs_squared())?;
    Ok(v.values().iter().map(|z| z.re).collect())
}

/// The Hartree operator `-Delta + w_N * |u|^2 - mu_N`.
pub fn hartree_generator(u: &GridFunction, wn: &GridFunction) -> Result<OneBodyOperator> {
    let mu = mu_phase(u, wn)?;
    let v = mean_field(u, wn)?;
    let grid = *u.grid();
    let mut m: DMatrix<C64> = laplacian_operator(&grid).into_matrix();
    for (j, vj) in v.iter().enumerate() {
        m[(j, j)] += C64::new(vj - mu, 0.0);
    }
    OneBodyOperator::new(grid, m, Role::Hermitian)
}

/// `<u, -Delta u> + 1/2 * iint |u|^2 w_N |u|^2`
pub fn hartree_energy(u: &GridFunction, wn: &GridFunction) -> Result<f64> {
    let mu = mu_phase(u, wn)?;
    Ok(kinetic_energy(u) + mu)
}

/// `<u, -Delta u>` evaluated spectrally.
pub fn kinetic_energy(u: &GridFunction) -> f64 {
    let grid = u.grid();
    let fft = FftPlanner::new().plan_fft_forward(grid.points());
    let mut buf: Vec<C64> = u.values().iter().copied().collect();
    fft.process(&mut buf);
    let ks = grid.wavenumbers();
    let m = grid.points() as f64;
    grid.dx() / m * buf.iter().zip(&ks).map(|(c, k)| k * k * c.norm_sqr()).sum::<f64>()
}

#[derive(Clone, Copy, Debug)]
pub struct HartreeOptions {
    pub dt: f64,
    pub t_final: f64,
    /// Keep every `stride`-th step.
    pub stride: usize,
    /// Include the `-mu_N` gauge term. Off only for gauge-equivalence checks.
    pub include_mu: bool,
}

impl HartreeOptions {
    pub fn new(t_final: f64, dt: f64) -> Self {
        Self { dt, t_final, stride: 1, include_mu: true }
    }
}

/// Sampled solution of the Hartree equation.
#[derive(Clone, Debug)]
pub struct HartreeTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<GridFunction>,
    pub mu_values: Vec<f64>,
    pub profile: Option<InteractionProfile>,
    pub potential: GridFunction,
    pub dt: f64,
    pub stride: usize,
    pub warnings: Vec<String>,
}

impl HartreeTrajectory {
    pub fn grid(&self) -> &GridSpec {
        self.potential.grid()
    }

    /// Index of the stored sample at `t`, or the last one before it.
    pub fn index_at(&self, t: f64) -> usize {
        let tol = 1e-9 * self.dt.max(1e-300);
        let i = self.times.partition_point(|&s| s <= t + tol);
        i.saturating_sub(1)
    }

    pub fn state_at(&self, t: f64) -> &GridFunction {
        &self.states[self.index_at(t)]
    }

    /// Whether `t` coincides with a stored sample.
    pub fn has_sample(&self, t: f64) -> bool {
        let i = self.index_at(t);
        (self.times[i] - t).abs() <= 1e-9 * self.dt
    }

    pub fn final_state(&self) -> &GridFunction {
        self.states.last().expect("trajectory always holds the initial state")
    }

    pub fn energies(&self) -> Result<Vec<f64>> {
        self.states.iter().map(|u| hartree_energy(u, &self.potential)).collect()
    }

    /// CSV with columns `config_hash,time,norm,energy,mu,max_abs_u`.
    pub fn write_csv<W: Write>(&self, out: W, config_hash: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["config_hash", "time", "norm", "energy", "mu", "max_abs_u"])?;
        for (i, u) in self.states.iter().enumerate() {
            let energy = hartree_energy(u, &self.potential)?;
            w.write_record([
                config_hash.to_string(),
                format!("{:.10e}", self.times[i]),
                format!("{:.15e}", u.norm()),
                format!("{:.15e}", energy),
                format!("{:.15e}", self.mu_values[i]),
                format!("{:.15e}", u.sup_norm()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Strang-split propagator: half kinetic, full frozen-density phase, half kinetic.
pub struct StrangStepper {
    grid: GridSpec,
    potential: GridFunction,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    ksq: Vec<f64>,
    include_mu: bool,
    buf: Vec<C64>,
}

impl StrangStepper {
    pub fn new(potential: GridFunction, include_mu: bool) -> Self {
        let grid = *potential.grid();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.points());
        let inverse = planner.plan_fft_inverse(grid.points());
        let ksq = grid.wavenumbers().iter().map(|k| k * k).collect();
        Self { grid, potential, forward, inverse, ksq, include_mu, buf: vec![C64::new(0.0, 0.0); grid.points()] }
    }

    fn kinetic(&mut self, u: &mut GridFunction, tau: f64) {
        let m = self.grid.points() as f64;
        self.buf.iter_mut().zip(u.values().iter()).for_each(|(b, v)| *b = *v);
        self.forward.process(&mut self.buf);
        for (b, k2) in self.buf.iter_mut().zip(&self.ksq) {
            *b *= C64::from_polar(1.0 / m, -k2 * tau);
        }
        self.inverse.process(&mut self.buf);
        u.values_mut().iter_mut().zip(&self.buf).for_each(|(v, b)| *v = *b);
    }

    /// Advances `u` by `tau` and returns the `mu_N` used in the phase step.
    pub fn step(&mut self, u: &mut GridFunction, tau: f64) -> Result<f64> {
        self.kinetic(u, 0.5 * tau);
        let v = mean_field(u, &self.potential)?;
        let mu = if self.include_mu { mu_unchecked(u, &self.potential)? } else { 0.0 };
        for (z, vj) in u.values_mut().iter_mut().zip(&v) {
            *z *= C64::from_polar(1.0, -(vj - mu) * tau);
        }
        self.kinetic(u, 0.5 * tau);
        Ok(mu)
    }
}

/// Evolves `u0` under the Hartree equation with `w_N` sampled from `profile`.
pub fn evolve_hartree(
    u0: &GridFunction,
    profile: &InteractionProfile,
    t_final: f64,
    dt: f64,
) -> Result<HartreeTrajectory> {
    let sp = scaled_potential(profile, u0.grid())?;
    let mut traj = evolve_hartree_with(u0, &sp.values, &HartreeOptions::new(t_final, dt))?;
    traj.profile = Some(profile.clone());
    traj.warnings = sp.warnings;
    Ok(traj)
}

/// Evolves `u0` under a pre-sampled potential `w_N`.
pub fn evolve_hartree_with(u0: &GridFunction, wn: &GridFunction, opts: &HartreeOptions) -> Result<HartreeTrajectory> {
    u0.require_normalized("initial condensate")?;
    u0.grid().check_same(wn.grid())?;
    if !(opts.dt.is_finite() && opts.dt > 0.0) {
        return invalid(format!("dt must be positive, got {}", opts.dt));
    }
    if !(opts.t_final.is_finite() && opts.t_final >= 0.0) {
        return invalid(format!("t_final must be nonnegative, got {}", opts.t_final));
    }
    if opts.stride == 0 {
        return invalid("stride must be at least 1");
    }
    let steps = step_count(opts.t_final, opts.dt);
    let mu0 = if opts.include_mu { mu_unchecked(u0, wn)? } else { 0.0 };
    let mut traj = HartreeTrajectory {
        times: vec![0.0],
        states: vec![u0.clone()],
        mu_values: vec![mu0],
        profile: None,
        potential: wn.clone(),
        dt: opts.dt,
        stride: opts.stride,
        warnings: Vec::new(),
    };
    let mut stepper = StrangStepper::new(wn.clone(), opts.include_mu);
    let mut u = u0.clone();
    for n in 1..=steps {
        let t_prev = (n - 1) as f64 * opts.dt;
        let t = if n == steps { opts.t_final } else { n as f64 * opts.dt };
        stepper.step(&mut u, t - t_prev)?;
        let drift = (u.norm() - 1.0).abs();
        if drift > 1e-6 {
            return Err(Error::Integrator { time: t, message: format!("Hartree norm drift {drift:.3e}") });
        }
        if n % opts.stride == 0 || n == steps {
            let mu = if opts.include_mu { mu_unchecked(&u, wn)? } else { 0.0 };
            traj.times.push(t);
            traj.states.push(u.clone());
            traj.mu_values.push(mu);
        }
    }
    Ok(traj)
}

/// Number of steps of size `dt` (last one possibly shorter) covering `[0, t_final]`.
pub(crate) fn step_count(t_final: f64, dt: f64) -> usize {
    let raw = t_final / dt;
    let rounded = raw.round();
    if (raw - rounded).abs() < 1e-9 * raw.max(1.0) {
        rounded as usize
    } else {
        raw.ceil() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_grid, hermitian_defect, ProfileShape};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn gaussian_w(grid: &GridSpec, strength: f64, sigma: f64) -> GridFunction {
        let p = InteractionProfile::new(ProfileShape::Gaussian { strength, sigma }, 0.0, 2);
        scaled_potential(&p, grid).unwrap().values
    }

    #[test]
    fn mu_constant_condensate() {
        let g = build_grid(2.0 * PI, 32).unwrap();
        let w = gaussian_w(&g, 1.7, 0.4);
        let s: f64 = w.values().iter().map(|v| v.re).sum::<f64>() * g.dx();
        let u = GridFunction::constant(g);
        assert_abs_diff_eq!(mu_phase(&u, &w).unwrap(), s / (2.0 * g.length()), epsilon = 1e-13);
        assert_eq!(mu_phase(&u, &GridFunction::zeros(g)).unwrap(), 0.0);
    }

    #[test]
    fn mu_matches_double_sum() {
        let g = build_grid(2.0 * PI, 64).unwrap();
        let w = gaussian_w(&g, 1.0, 0.5);
        let u = GridFunction::gaussian(g, 2.0, 0.6, 1.0);
        let m = g.points();
        let dx = g.dx();
        let mut acc = 0.0;
        for j in 0..m {
            for k in 0..m {
                acc += u.values()[j].norm_sqr() * w.values()[(j + m - k) % m].re * u.values()[k].norm_sqr();
            }
        }
        assert_abs_diff_eq!(mu_phase(&u, &w).unwrap(), 0.5 * dx * dx * acc, epsilon = 1e-12);
    }

    #[test]
    fn generator_examples() {
        let g = build_grid(2.0 * PI, 16).unwrap();
        let u = GridFunction::gaussian(g, 1.0, 0.7, 2.0);
        let h = hartree_generator(&u, &GridFunction::zeros(g)).unwrap();
        assert_eq!(h.matrix(), laplacian_operator(&g).matrix());

        let w = gaussian_w(&g, 2.0, 0.3);
        let s: f64 = w.values().iter().map(|v| v.re).sum::<f64>() * g.dx();
        let h = hartree_generator(&GridFunction::constant(g), &w).unwrap();
        let diff = h.matrix() - laplacian_operator(&g).matrix();
        for j in 0..16 {
            assert_abs_diff_eq!(diff[(j, j)].re, s / (2.0 * g.length()), epsilon = 1e-12);
        }
        let h = hartree_generator(&u, &w).unwrap();
        assert!(hermitian_defect(h.matrix()) <= 1e-12);
    }

    #[test]
    fn energy_examples() {
        let g = build_grid(2.0 * PI, 32).unwrap();
        let pw = GridFunction::plane_wave(g, 3);
        assert_abs_diff_eq!(hartree_energy(&pw, &GridFunction::zeros(g)).unwrap(), 9.0, epsilon = 1e-10);
        let w = gaussian_w(&g, 1.0, 0.5);
        let s: f64 = w.values().iter().map(|v| v.re).sum::<f64>() * g.dx();
        assert_abs_diff_eq!(
            hartree_energy(&GridFunction::constant(g), &w).unwrap(),
            s / (2.0 * g.length()),
            epsilon = 1e-12
        );
        let u = GridFunction::gaussian(g, 1.0, 0.5, 1.0);
        let lap = laplacian_operator(&g);
        assert_abs_diff_eq!(kinetic_energy(&u), lap.expectation(&u).unwrap(), epsilon = 1e-10);
    }

    #[test]
    fn free_plane_wave_evolution() {
        let g = build_grid(2.0 * PI, 64).unwrap();
        let u0 = GridFunction::plane_wave(g, 2);
        let p = InteractionProfile::new(ProfileShape::Zero, 0.0, 4);
        let traj = evolve_hartree(&u0, &p, 1.0, 1e-3).unwrap();
        assert_abs_diff_eq!(*traj.times.last().unwrap(), 1.0, epsilon = 1e-15);
        let want = u0.values().scale(1.0) * C64::from_polar(1.0, -4.0);
        let err = (traj.final_state().values() - want).norm() * g.dx().sqrt();
        assert!(err < 1e-8, "err = {err}");
    }

    #[test]
    fn constant_condensate_phase() {
        let g = build_grid(2.0 * PI, 32).unwrap();
        let w = gaussian_w(&g, 1.3, 0.5);
        let s: f64 = w.values().iter().map(|v| v.re).sum::<f64>() * g.dx();
        let u0 = GridFunction::constant(g);
        let traj = evolve_hartree_with(&u0, &w, &HartreeOptions::new(1.0, 1e-3)).unwrap();
        let phase = C64::from_polar(1.0, -s / (2.0 * g.length()));
        let err = (traj.final_state().values() - u0.values() * phase).norm() * g.dx().sqrt();
        assert!(err < 1e-8, "err = {err}");
    }

    #[test]
    fn rejects_bad_steps() {
        let g = build_grid(2.0 * PI, 8).unwrap();
        let u0 = GridFunction::constant(g);
        let w = GridFunction::zeros(g);
        assert!(evolve_hartree_with(&u0, &w, &HartreeOptions::new(1.0, 0.0)).is_err());
        assert!(evolve_hartree_with(&u0, &w, &HartreeOptions::new(1.0, -1e-3)).is_err());
        let bad = GridFunction::from_fn(g, |_| C64::new(2.0, 0.0));
        assert!(evolve_hartree_with(&bad, &w, &HartreeOptions::new(1.0, 1e-3)).is_err());
    }

    #[test]
    fn trajectory_lookup_and_stride() {
        let g = build_grid(2.0 * PI, 8).unwrap();
        let u0 = GridFunction::gaussian(g, 1.0, 0.8, 0.0);
        let w = gaussian_w(&g, 1.0, 0.5);
        let mut opts = HartreeOptions::new(0.1, 0.01);
        opts.stride = 3;
        let traj = evolve_hartree_with(&u0, &w, &opts).unwrap();
        assert_eq!(traj.times.len(), 5);
        assert_abs_diff_eq!(traj.times[1], 0.03, epsilon = 1e-15);
        assert_abs_diff_eq!(traj.times[4], 0.1, epsilon = 1e-15);
        assert_eq!(traj.index_at(0.05), 1);
        assert_eq!(traj.index_at(0.06), 2);
        assert!(traj.has_sample(0.06));
        assert!(!traj.has_sample(0.05));
        assert_eq!(step_count(0.5, 1e-3), 500);
        assert_eq!(step_count(0.105, 0.01), 11);
    }
}
