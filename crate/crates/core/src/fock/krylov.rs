//! Lanczos propagation `Psi(t) = exp(-i t H) Psi(0)` for a real symmetric sparse `H`.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::basis::FockVector;
use super::exact::SparseHamiltonian;
use crate::error::{invalid, Error, Result};
use crate::hartree::step_count;

#[derive(Clone, Copy, Debug)]
pub struct ExactOptions {
    pub dt: f64,
    pub t_final: f64,
    pub stride: usize,
    pub krylov_dim: usize,
    /// Accepted a-posteriori error per step, relative to the state norm.
    pub tolerance: f64,
    /// Maximum number of interval halvings before giving up on a step.
    pub max_halvings: u32,
}

impl ExactOptions {
    pub fn new(t_final: f64, dt: f64) -> Self {
        Self { dt, t_final, stride: 1, krylov_dim: 20, tolerance: 1e-12, max_halvings: 12 }
    }
}

#[derive(Clone, Debug)]
pub struct ExactSample {
    pub time: f64,
    pub state: FockVector,
    pub norm: f64,
    pub energy: f64,
}

#[derive(Clone, Debug)]
pub struct ExactTrajectory {
    pub samples: Vec<ExactSample>,
    /// Number of steps that had to be split because the Krylov estimate was too large.
    pub fallbacks: usize,
}

impl ExactTrajectory {
    pub fn final_sample(&self) -> &ExactSample {
        self.samples.last().expect("trajectory holds the initial state")
    }

    /// `max_t |E(t) - E(0)| / max(|E(0)|, 1)`
    pub fn relative_energy_drift(&self) -> f64 {
        let e0 = self.samples[0].energy;
        self.samples.iter().map(|s| (s.energy - e0).abs()).fold(0.0, f64::max) / e0.abs().max(1.0)
    }

    pub fn max_norm_drift(&self) -> f64 {
        let n0 = self.samples[0].norm;
        self.samples.iter().map(|s| (s.norm - n0).abs()).fold(0.0, f64::max)
    }

    /// Sample whose time is closest to `t`.
    pub fn sample_near(&self, t: f64) -> &ExactSample {
        self.samples
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
            .expect("trajectory holds the initial state")
    }

    /// CSV with columns `config_hash,time,norm,energy`.
    pub fn write_csv<W: Write>(&self, out: W, config_hash: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["config_hash", "time", "norm", "energy"])?;
        for s in &self.samples {
            w.write_record([
                config_hash.to_string(),
                format!("{:.10e}", s.time),
                format!("{:.15e}", s.norm),
                format!("{:.15e}", s.energy),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn evolve_exact(psi0: &FockVector, h: &SparseHamiltonian, t_final: f64, dt: f64) -> Result<ExactTrajectory> {
    evolve_exact_with(psi0, h, &ExactOptions::new(t_final, dt))
}

pub fn evolve_exact_with(psi0: &FockVector, h: &SparseHamiltonian, opts: &ExactOptions) -> Result<ExactTrajectory> {
    let n0 = psi0.norm();
    if (n0 - 1.0).abs() > 1e-8 {
        return invalid(format!("initial N-body state must be normalized, norm is {n0:.12}"));
    }
    if !(opts.dt.is_finite() && opts.dt > 0.0 && opts.t_final.is_finite() && opts.t_final >= 0.0) {
        return invalid(format!("need dt > 0 and t_final >= 0, got dt = {}, t_final = {}", opts.dt, opts.t_final));
    }
    if opts.stride == 0 || opts.krylov_dim < 2 {
        return invalid("stride must be >= 1 and the Krylov dimension >= 2");
    }
    let energy0 = h.expectation(psi0)?;
    let mut out = ExactTrajectory {
        samples: vec![ExactSample { time: 0.0, state: psi0.clone(), norm: n0, energy: energy0 }],
        fallbacks: 0,
    };
    let steps = step_count(opts.t_final, opts.dt);
    let mut x = psi0.coeffs.clone();
    for n in 1..=steps {
        let t0 = (n - 1) as f64 * opts.dt;
        let t1 = if n == steps { opts.t_final } else { n as f64 * opts.dt };
        let (next, split) = propagate(h, &x, t1 - t0, opts, 0).map_err(|e| match e {
            Error::Integrator { message, .. } => Error::Integrator { time: t0, message },
            other => other,
        })?;
        x = next;
        if split {
            out.fallbacks += 1;
        }
        if n % opts.stride == 0 || n == steps {
            let state = FockVector::new(h.basis().clone(), x.clone())?;
            let energy = h.expectation(&state)?;
            out.samples.push(ExactSample { time: t1, norm: state.norm(), state, energy });
        }
    }
    Ok(out)
}

fn propagate(h: &SparseHamiltonian, x: &DVector<C64>, tau: f64, opts: &ExactOptions, depth: u32) -> Result<(DVector<C64>, bool)> {
    let (y, err) = krylov_step_to(h, x, tau, opts.krylov_dim, opts.tolerance);
    if err <= opts.tolerance * x.norm().max(f64::MIN_POSITIVE) {
        return Ok((y, depth > 0));
    }
    if depth >= opts.max_halvings {
        return Err(Error::Integrator {
            time: 0.0,
            message: format!("Krylov step did not converge (estimate {err:.3e}) after {depth} halvings; reduce dt"),
        });
    }
    let (mid, _) = propagate(h, x, 0.5 * tau, opts, depth + 1)?;
    let (end, _) = propagate(h, &mid, 0.5 * tau, opts, depth + 1)?;
    Ok((end, true))
}

/// One Lanczos step with full reorthogonalization. Returns the propagated
/// vector and the error estimate `||x|| beta_m |[exp(-i tau T)]_{m-1,0}|`.
pub fn krylov_step(h: &SparseHamiltonian, x: &DVector<C64>, tau: f64, kdim: usize) -> (DVector<C64>, f64) {
    krylov_step_to(h, x, tau, kdim, 0.0)
}

/// As [`krylov_step`], stopping the Lanczos recursion as soon as the error
/// estimate drops below `tolerance * ||x||`.
pub fn krylov_step_to(h: &SparseHamiltonian, x: &DVector<C64>, tau: f64, kdim: usize, tolerance: f64) -> (DVector<C64>, f64) {
    let norm = x.norm();
    if norm == 0.0 {
        return (x.clone(), 0.0);
    }
    let kdim = kdim.min(h.dim());
    let mut q: Vec<DVector<C64>> = vec![x.unscale(norm)];
    let mut alpha: Vec<f64> = Vec::with_capacity(kdim);
    let mut beta: Vec<f64> = Vec::with_capacity(kdim);
    let mut w = DVector::zeros(h.dim());
    let mut scale = 1.0f64;
    let mut coeffs = Vec::new();
    let mut err = 0.0;
    for j in 0..kdim {
        h.apply_into(&q[j], &mut w);
        let a = q[j].dotc(&w).re;
        alpha.push(a);
        scale = scale.max(a.abs());
        for _ in 0..2 {
            for qi in &q {
                let c = qi.dotc(&w);
                w.axpy(-c, qi, C64::new(1.0, 0.0));
            }
        }
        let b = w.norm();
        beta.push(b);
        coeffs = tridiagonal_exp(&alpha, &beta, tau);
        if b <= 1e-13 * scale {
            err = 0.0;
            break;
        }
        err = norm * b * coeffs[j].norm();
        if err <= tolerance * norm || j + 1 == kdim {
            break;
        }
        q.push(w.unscale(b));
    }
    let mut y = DVector::zeros(h.dim());
    for (k, c) in coeffs.iter().enumerate() {
        y.axpy(*c * norm, &q[k], C64::new(1.0, 0.0));
    }
    (y, err)
}

/// First column of `exp(-i tau T)` for the symmetric tridiagonal `T` with
/// diagonal `alpha` and off-diagonal `beta[..alpha.len() - 1]`.
fn tridiagonal_exp(alpha: &[f64], beta: &[f64], tau: f64) -> Vec<C64> {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |r, c| {
        if r == c {
            alpha[r]
        } else if r + 1 == c {
            beta[r]
        } else if c + 1 == r {
            beta[c]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    (0..m)
        .map(|r| {
            (0..m)
                .map(|k| {
                    let v = eig.eigenvectors[(r, k)] * eig.eigenvectors[(0, k)];
                    C64::from_polar(v, -tau * eig.eigenvalues[k])
                })
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::basis::{Cap, FockBasis};
    use crate::fock::exact::{build_from_matrices, build_hn_exact};
    use crate::lattice::{build_grid, InteractionProfile, ProfileShape};

    fn dense_expm(h: &DMatrix<f64>, tau: f64, x: &DVector<C64>) -> DVector<C64> {
        let eig = SymmetricEigen::new(h.clone());
        let v = eig.eigenvectors.map(|z| C64::new(z, 0.0));
        let phases = DVector::from_fn(h.nrows(), |k, _| C64::from_polar(1.0, -tau * eig.eigenvalues[k]));
        let c = v.adjoint() * x;
        &v * c.component_mul(&phases)
    }

    #[test]
    fn two_mode_toy_matches_dense_exponential() {
        let t = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let w = DMatrix::from_element(2, 2, 1.5);
        let h = build_from_matrices(2, &t, &w, 10).unwrap();
        let psi0 = FockVector::number_state(h.basis().clone(), &[2, 0]).unwrap();
        let run = evolve_exact(&psi0, &h, 2.0, 0.05).unwrap();
        let dense = h.to_dense();
        for s in &run.samples {
            let want = dense_expm(&dense, s.time, &psi0.coeffs);
            assert!((&s.state.coeffs - want).norm() < 1e-10, "t = {}", s.time);
        }
    }

    #[test]
    fn free_condensate_is_stationary() {
        let grid = build_grid(6.0, 8).unwrap();
        let profile = InteractionProfile::new(ProfileShape::Zero, 0.0, 3);
        let h = build_hn_exact(3, &profile, &grid).unwrap();
        let u = crate::lattice::GridFunction::constant(grid);
        let vac = FockVector::vacuum(FockBasis::new(8, Cap::MaxTotal(0)).unwrap()).unwrap();
        let psi0 = crate::embedding::embed(&u, &vac, 3).unwrap().state;
        let run = evolve_exact(&psi0, &h, 1.0, 0.1).unwrap();
        let fid = psi0.inner(&run.final_sample().state).unwrap().norm();
        assert!((fid - 1.0).abs() < 1e-10);
    }

    #[test]
    fn energy_and_norm_conserved() {
        let grid = build_grid(2.0 * std::f64::consts::PI, 8).unwrap();
        let profile = InteractionProfile::new(ProfileShape::Gaussian { strength: 2.0, sigma: 0.5 }, 0.0, 3);
        let h = build_hn_exact(3, &profile, &grid).unwrap();
        let u = crate::lattice::GridFunction::gaussian(grid, 3.0, 0.8, 1.0);
        let vac = FockVector::vacuum(FockBasis::new(8, Cap::MaxTotal(0)).unwrap()).unwrap();
        let psi0 = crate::embedding::embed(&u, &vac, 3).unwrap().state;
        let run = evolve_exact(&psi0, &h, 1.0, 1e-2).unwrap();
        assert!(run.relative_energy_drift() <= 1e-8, "{}", run.relative_energy_drift());
        assert!(run.max_norm_drift() <= 1e-10);
    }
}
