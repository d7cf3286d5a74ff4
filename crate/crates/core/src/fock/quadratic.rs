//! Matrix-free action of ladder operators and of the quadratic Hamiltonian
//! `dGamma(h) + 1/2 sum (K_jk a*_j a*_k + conj(K_jk) a_j a_k)` on a truncated
//! Fock space, plus the Bogoliubov equation propagated directly in Fock space.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::basis::{FockBasis, FockVector, NONE};
use crate::error::{invalid, Error, Result};
use crate::hartree::{step_count, HartreeTrajectory};
use crate::lattice::hermitian_part;
use crate::pairdyn::{PairState, StageIngredients};

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn check_dims(basis: &FockBasis, m: &DMatrix<C64>) -> Result<()> {
    basis.require_ladder()?;
    let k = basis.modes();
    if m.shape() != (k, k) {
        return invalid(format!("{}x{} one-body matrix for {k} modes", m.nrows(), m.ncols()));
    }
    Ok(())
}

/// `a*(f) = sum_j f_j a*_j`; components pushed above the cap are dropped.
pub fn create(f: &DVector<C64>, x: &FockVector) -> Result<FockVector> {
    let b = &*x.basis;
    b.require_ladder()?;
    if f.len() != b.modes() {
        return invalid("mode function has the wrong length");
    }
    let mut y = FockVector::zeros(x.basis.clone());
    for s in 0..b.dim() {
        let xs = x.coeffs[s];
        if xs == C64::new(0.0, 0.0) {
            continue;
        }
        for (j, fj) in f.iter().enumerate() {
            let d = b.raise_index(s, j);
            if d == NONE || *fj == C64::new(0.0, 0.0) {
                continue;
            }
            let d = d as usize;
            y.coeffs[d] += fj * (b.occupation(d)[j] as f64).sqrt() * xs;
        }
    }
    Ok(y)
}

/// `a(f) = sum_j conj(f_j) a_j`
pub fn annihilate(f: &DVector<C64>, x: &FockVector) -> Result<FockVector> {
    let b = &*x.basis;
    b.require_ladder()?;
    if f.len() != b.modes() {
        return invalid("mode function has the wrong length");
    }
    let mut y = FockVector::zeros(x.basis.clone());
    for s in 0..b.dim() {
        let xs = x.coeffs[s];
        if xs == C64::new(0.0, 0.0) {
            continue;
        }
        let occ = b.occupation(s);
        for (j, fj) in f.iter().enumerate() {
            if occ[j] == 0 {
                continue;
            }
            let d = b.lower_index(s, j) as usize;
            y.coeffs[d] += fj.conj() * (occ[j] as f64).sqrt() * xs;
        }
    }
    Ok(y)
}

/// Accumulates `dGamma(h) x` into `y`.
fn add_dgamma(b: &FockBasis, h: &DMatrix<C64>, x: &DVector<C64>, y: &mut DVector<C64>) {
    let m = b.modes();
    let diag: Vec<C64> = (0..m).map(|j| h[(j, j)]).collect();
    for s in 0..b.dim() {
        let xs = x[s];
        if xs == C64::new(0.0, 0.0) {
            continue;
        }
        let occ = b.occupation(s);
        let mut d_sum = C64::new(0.0, 0.0);
        for k in 0..m {
            let nk = occ[k];
            if nk == 0 {
                continue;
            }
            d_sum += diag[k] * nk as f64;
            let mid = b.lower_index(s, k) as usize;
            for j in 0..m {
                if j == k {
                    continue;
                }
                let d = b.raise_index(mid, j) as usize;
                let f = (nk as f64 * b.occupation(d)[j] as f64).sqrt();
                y[d] += h[(j, k)] * f * xs;
            }
        }
        y[s] += d_sum * xs;
    }
}

/// Accumulates `1/2 sum K_jk a*_j a*_k x` into `y`, dropping what leaves the basis.
fn add_pair_create(b: &FockBasis, k2: &DMatrix<C64>, x: &DVector<C64>, y: &mut DVector<C64>) {
    let m = b.modes();
    for s in 0..b.dim() {
        let xs = x[s];
        if xs == C64::new(0.0, 0.0) {
            continue;
        }
        for k in 0..m {
            let mid = b.raise_index(s, k);
            if mid == NONE {
                break;
            }
            let mid = mid as usize;
            let ok = b.occupation(mid)[k] as f64;
            for j in 0..=k {
                let d = b.raise_index(mid, j);
                if d == NONE {
                    break;
                }
                let d = d as usize;
                let coef = if j == k { 0.5 * k2[(j, k)] } else { k2[(j, k)] };
                y[d] += coef * (ok * b.occupation(d)[j] as f64).sqrt() * xs;
            }
        }
    }
}

/// Accumulates `1/2 sum conj(K_jk) a_j a_k x` into `y`.
fn add_pair_annihilate(b: &FockBasis, k2: &DMatrix<C64>, x: &DVector<C64>, y: &mut DVector<C64>) {
    let m = b.modes();
    for s in 0..b.dim() {
        let xs = x[s];
        if xs == C64::new(0.0, 0.0) {
            continue;
        }
        let occ = b.occupation(s);
        for k in 0..m {
            if occ[k] == 0 {
                continue;
            }
            let mid = b.lower_index(s, k) as usize;
            let mocc = b.occupation(mid);
            for j in 0..=k {
                if mocc[j] == 0 {
                    continue;
                }
                let d = b.lower_index(mid, j) as usize;
                let coef = if j == k { 0.5 * k2[(j, k)].conj() } else { k2[(j, k)].conj() };
                y[d] += coef * (occ[k] as f64 * mocc[j] as f64).sqrt() * xs;
            }
        }
    }
}

/// `dGamma(A) x = sum_jk A_jk a*_j a_k x`
pub fn apply_dgamma(a: &DMatrix<C64>, x: &FockVector) -> Result<FockVector> {
    check_dims(&x.basis, a)?;
    let mut y = DVector::zeros(x.basis.dim());
    add_dgamma(&x.basis, a, &x.coeffs, &mut y);
    FockVector::new(x.basis.clone(), y)
}

/// Result of applying the quadratic Hamiltonian on a truncated space.
#[derive(Clone, Debug)]
pub struct QuadraticAction {
    pub result: FockVector,
    /// Squared norm of the pair-created components that fall above the cap.
    pub leakage: f64,
}

pub fn apply_quadratic(h: &DMatrix<C64>, k2: &DMatrix<C64>, phi: &FockVector) -> Result<QuadraticAction> {
    check_dims(&phi.basis, h)?;
    check_dims(&phi.basis, k2)?;
    let y = quadratic_coeffs(&phi.basis, h, k2, &phi.coeffs);
    let leakage = truncation_rate_sq(&phi.basis, k2, &phi.coeffs);
    Ok(QuadraticAction { result: FockVector::new(phi.basis.clone(), y)?, leakage })
}

fn quadratic_coeffs(b: &FockBasis, h: &DMatrix<C64>, k2: &DMatrix<C64>, x: &DVector<C64>) -> DVector<C64> {
    let mut y = DVector::zeros(b.dim());
    add_dgamma(b, h, x, &mut y);
    add_pair_create(b, k2, x, &mut y);
    add_pair_annihilate(b, k2, x, &mut y);
    y
}

/// `||P_{>cap} B* psi||^2` where `B* = 1/2 sum K a*a*` and `psi` is the part of `x`
/// in the two top sectors. Uses `B B* = B* B + 1/2 ||K||_HS^2 + dGamma(K conj(K))`
/// so nothing outside the basis has to be represented.
fn truncation_rate_sq(b: &FockBasis, k2: &DMatrix<C64>, x: &DVector<C64>) -> f64 {
    let cap = b.cap().value();
    let mut psi = DVector::zeros(b.dim());
    for n in cap.saturating_sub(1)..=cap {
        let r = b.sector_range(n);
        psi.rows_mut(r.start, r.len()).copy_from(&x.rows(r.start, r.len()));
    }
    let psi_sq = psi.norm_squared();
    if psi_sq == 0.0 {
        return 0.0;
    }
    let mut bpsi = DVector::zeros(b.dim());
    add_pair_annihilate(b, k2, &psi, &mut bpsi);
    let kk = k2 * k2.conjugate();
    let mut dg = DVector::zeros(b.dim());
    add_dgamma(b, &kk, &psi, &mut dg);
    let val = bpsi.norm_squared() + 0.5 * k2.norm_squared() * psi_sq + psi.dotc(&dg).re;
    val.max(0.0)
}

/// `(gamma, alpha)` with `gamma_jk = <a*_k a_j>`, `alpha_jk = <a_j a_k>`.
pub fn covariance_of(phi: &FockVector) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let b = &*phi.basis;
    b.require_ladder()?;
    let m = b.modes();
    let x = &phi.coeffs;
    let mut gamma = DMatrix::<C64>::zeros(m, m);
    let mut alpha = DMatrix::<C64>::zeros(m, m);
    for s in 0..b.dim() {
        let xs = x[s];
        if xs == C64::new(0.0, 0.0) {
            continue;
        }
        let occ = b.occupation(s);
        for j in 0..m {
            if occ[j] == 0 {
                continue;
            }
            gamma[(j, j)] += occ[j] as f64 * xs.norm_sqr();
            let mid = b.lower_index(s, j) as usize;
            // <a*_k a_j>: d = a*_k a_j s
            for k in 0..m {
                if k == j {
                    continue;
                }
                let d = b.raise_index(mid, k) as usize;
                let f = (occ[j] as f64 * b.occupation(d)[k] as f64).sqrt();
                gamma[(j, k)] += x[d].conj() * f * xs;
            }
            // <a_k a_j>: d = a_k a_j s
            let mocc = b.occupation(mid);
            for k in 0..m {
                if mocc[k] == 0 {
                    continue;
                }
                let d = b.lower_index(mid, k) as usize;
                let f = (occ[j] as f64 * mocc[k] as f64).sqrt();
                alpha[(k, j)] += x[d].conj() * f * xs;
            }
        }
    }
    Ok((hermitian_part(&gamma), alpha))
}

/// [`covariance_of`] with the pair tagged by the caller's grid.
pub fn covariance_on(phi: &FockVector, grid: crate::lattice::GridSpec) -> Result<PairState> {
    if grid.points() != phi.basis.modes() {
        return invalid("grid and Fock basis disagree on the number of modes");
    }
    let (gamma, alpha) = covariance_of(phi)?;
    Ok(PairState { grid, gamma, alpha })
}

#[derive(Clone, Copy, Debug)]
pub struct FockOptions {
    pub dt: f64,
    pub t_final: Option<f64>,
    pub stride: usize,
    /// Abort once the cumulative truncation bound exceeds this.
    pub leakage_limit: f64,
}

impl FockOptions {
    pub fn new(dt: f64) -> Self {
        Self { dt, t_final: None, stride: 1, leakage_limit: 1e-3 }
    }
}

#[derive(Clone, Debug)]
pub struct FockSample {
    pub time: f64,
    pub state: FockVector,
    pub norm: f64,
    /// `(int_0^t ||P_> H Phi|| ds)^2`, a bound on the squared distance between
    /// the truncated and the untruncated evolution.
    pub leakage: f64,
}

#[derive(Clone, Debug)]
pub struct FockTrajectory {
    pub samples: Vec<FockSample>,
    pub used_nearest_sample: bool,
}

impl FockTrajectory {
    pub fn final_sample(&self) -> &FockSample {
        self.samples.last().expect("trajectory holds the initial state")
    }

    pub fn max_leakage(&self) -> f64 {
        self.samples.iter().map(|s| s.leakage).fold(0.0, f64::max)
    }

    /// CSV with columns `config_hash,time,norm,leakage,number,sector_0,...`.
    pub fn write_csv<W: Write>(&self, out: W, config_hash: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let sectors = self.samples[0].state.basis.sectors();
        let mut header = vec!["config_hash".to_string(), "time".into(), "norm".into(), "leakage".into(), "number".into()];
        header.extend(sectors.clone().map(|n| format!("sector_{n}")));
        w.write_record(&header)?;
        for s in &self.samples {
            let mut row = vec![
                config_hash.to_string(),
                format!("{:.10e}", s.time),
                format!("{:.15e}", s.norm),
                format!("{:.15e}", s.leakage),
                format!("{:.15e}", s.state.number_expectation()),
            ];
            row.extend(s.state.sector_weights().iter().map(|(_, v)| format!("{v:.15e}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// RK4 propagation of `i dPhi/dt = H(t) Phi` with `h(t)`, `K2(t)` rebuilt from
/// the Hartree trajectory at every stage.
pub fn evolve_fock(phi0: &FockVector, traj: &HartreeTrajectory, dt: f64) -> Result<FockTrajectory> {
    evolve_fock_with(phi0, traj, &FockOptions::new(dt))
}

pub fn evolve_fock_with(phi0: &FockVector, traj: &HartreeTrajectory, opts: &FockOptions) -> Result<FockTrajectory> {
    let b = phi0.basis.clone();
    b.require_ladder()?;
    if b.modes() != traj.grid().points() {
        return invalid("Fock basis and Hartree grid disagree on the number of modes");
    }
    let n0 = phi0.norm();
    if (n0 - 1.0).abs() > 1e-8 {
        return invalid(format!("initial Fock vector must be normalized, norm is {n0:.12}"));
    }
    if !(opts.dt.is_finite() && opts.dt > 0.0) {
        return invalid(format!("dt must be positive, got {}", opts.dt));
    }
    if opts.stride == 0 {
        return invalid("stride must be at least 1");
    }
    let t_end = *traj.times.last().expect("non-empty trajectory");
    let t_final = opts.t_final.unwrap_or(t_end);
    if t_final > t_end + 1e-9 * opts.dt {
        return invalid(format!("Fock run to t = {t_final} exceeds the Hartree trajectory ({t_end})"));
    }
    let steps = step_count(t_final, opts.dt);
    let mut stages = StageIngredients::new(traj);
    let mut x = phi0.coeffs.clone();
    let mut out = FockTrajectory {
        samples: vec![FockSample { time: 0.0, state: phi0.clone(), norm: n0, leakage: 0.0 }],
        used_nearest_sample: false,
    };
    let mut leak_amplitude = 0.0;
    let rhs = |ing: &crate::pairdyn::BogoliubovIngredients, v: &DVector<C64>| quadratic_coeffs(&b, &ing.h, &ing.k2, v) * (-I);
    for n in 1..=steps {
        let t0 = (n - 1) as f64 * opts.dt;
        let t1 = if n == steps { t_final } else { n as f64 * opts.dt };
        let tau = t1 - t0;
        let ing0 = stages.at(t0)?;
        let ing_mid = stages.at(t0 + 0.5 * tau)?;
        let ing1 = stages.at(t1)?;
        leak_amplitude += tau * truncation_rate_sq(&b, &ing0.k2, &x).sqrt();
        let half = C64::new(0.5 * tau, 0.0);
        let k1 = rhs(&ing0, &x);
        let k2 = rhs(&ing_mid, &(&x + &k1 * half));
        let k3 = rhs(&ing_mid, &(&x + &k2 * half));
        let k4 = rhs(&ing1, &(&x + &k3 * C64::new(tau, 0.0)));
        x += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(tau / 6.0, 0.0);
        let leakage = leak_amplitude * leak_amplitude;
        if leakage > opts.leakage_limit {
            return Err(Error::Leakage { time: t1, leakage, limit: opts.leakage_limit });
        }
        if n % opts.stride == 0 || n == steps {
            let state = FockVector::new(b.clone(), x.clone())?;
            out.samples.push(FockSample { time: t1, norm: state.norm(), state, leakage });
        }
    }
    out.used_nearest_sample = stages.used_nearest;
    Ok(out)
}

/// Truncated squeezed vacuum `prod_m (1 - t_m^2)^{1/4} exp(t_m a*(v_m)^2 / 2) |0>`
/// with `t_m = tanh(s_m)`. Its covariances are `gamma = sum sinh^2 v v^dagger`,
/// `alpha = sum sinh cosh v v^T` up to truncation. Returns the normalized
/// vector and the squared norm lost to the cap.
pub fn squeezed_vacuum(basis: &std::sync::Arc<FockBasis>, modes: &[(DVector<C64>, f64)]) -> Result<(FockVector, f64)> {
    basis.require_ladder()?;
    let mut pair = DMatrix::<C64>::zeros(basis.modes(), basis.modes());
    let mut scale = 1.0;
    for (v, s) in modes {
        if v.len() != basis.modes() {
            return invalid("squeezed mode has the wrong length");
        }
        let t = s.tanh();
        scale *= (1.0 - t * t).powf(0.25);
        pair += v * v.transpose() * C64::new(t, 0.0);
    }
    // exp(B*)|0> with B* = 1/2 sum pair_jk a*_j a*_k, summed until the cap.
    let mut term = FockVector::vacuum(basis.clone())?;
    let mut acc = term.coeffs.clone();
    for order in 1..=basis.cap().value() / 2 {
        let mut next = DVector::zeros(basis.dim());
        add_pair_create(basis, &pair, &term.coeffs, &mut next);
        term = FockVector::new(basis.clone(), next.unscale(order as f64))?;
        acc += &term.coeffs;
    }
    let raw = FockVector::new(basis.clone(), acc * C64::new(scale, 0.0))?;
    let kept = raw.coeffs.norm_squared();
    Ok((raw.normalized()?, (1.0 - kept).max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::basis::Cap;
    use crate::lattice::{hermitian_part, max_abs, symmetric_part};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<C64> {
        DMatrix::from_fn(m, m, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn random_vector(rng: &mut ChaCha8Rng, b: &std::sync::Arc<FockBasis>) -> FockVector {
        let v = DVector::from_fn(b.dim(), |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        FockVector::new(b.clone(), v).unwrap().normalized().unwrap()
    }

    #[test]
    fn number_state_eigenvalue() {
        let b = FockBasis::new(3, Cap::MaxTotal(3)).unwrap();
        let phi = FockVector::number_state(b, &[0, 1, 0]).unwrap();
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(0.5, 0.0), C64::new(2.0, 0.0), C64::new(-1.0, 0.0)]));
        let act = apply_quadratic(&h, &DMatrix::zeros(3, 3), &phi).unwrap();
        assert!((act.result.coeffs - phi.coeffs.scale(2.0)).norm() < 1e-15);
        assert_eq!(act.leakage, 0.0);
    }

    #[test]
    fn vacuum_pair_creation() {
        let b = FockBasis::new(3, Cap::MaxTotal(3)).unwrap();
        let vac = FockVector::vacuum(b.clone()).unwrap();
        let mut k = DMatrix::<C64>::zeros(3, 3);
        k[(0, 1)] = C64::new(0.3, -0.2);
        k[(1, 0)] = k[(0, 1)];
        k[(0, 0)] = C64::new(0.7, 0.0);
        let out = apply_quadratic(&DMatrix::zeros(3, 3), &k, &vac).unwrap().result;
        let pair = b.index_of(&[1, 1, 0]).unwrap();
        let double = b.index_of(&[2, 0, 0]).unwrap();
        assert!((out.coeffs[pair] - k[(0, 1)]).norm() < 1e-15);
        assert!((out.coeffs[double] - k[(0, 0)] * (0.5f64 * 2.0f64.sqrt())).norm() < 1e-15);
        let rest: f64 = out.coeffs.norm_squared() - out.coeffs[pair].norm_sqr() - out.coeffs[double].norm_sqr();
        assert!(rest.abs() < 1e-15);
    }

    #[test]
    fn quadratic_form_is_real_and_symmetric_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = FockBasis::new(3, Cap::MaxTotal(3)).unwrap();
        let h = hermitian_part(&random_matrix(&mut rng, 3));
        let k = symmetric_part(&random_matrix(&mut rng, 3));
        for _ in 0..5 {
            let phi = random_vector(&mut rng, &b);
            let hp = apply_quadratic(&h, &k, &phi).unwrap().result;
            assert!(phi.inner(&hp).unwrap().im.abs() < 1e-12);
        }
        // Self-adjointness below the truncation shell.
        let low = FockBasis::new(3, Cap::MaxTotal(1)).unwrap();
        for _ in 0..5 {
            let (f, _) = random_vector(&mut rng, &low).recap(&b).unwrap();
            let (g, _) = random_vector(&mut rng, &low).recap(&b).unwrap();
            let hf = apply_quadratic(&h, &k, &f).unwrap().result;
            let hg = apply_quadratic(&h, &k, &g).unwrap().result;
            let lhs = g.inner(&hf).unwrap();
            let rhs = f.inner(&hg).unwrap().conj();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn leakage_matches_explicit_overflow() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let small = FockBasis::new(3, Cap::MaxTotal(3)).unwrap();
        let big = FockBasis::new(3, Cap::MaxTotal(5)).unwrap();
        let h = hermitian_part(&random_matrix(&mut rng, 3));
        let k = symmetric_part(&random_matrix(&mut rng, 3));
        let phi = random_vector(&mut rng, &small);
        let act = apply_quadratic(&h, &k, &phi).unwrap();
        let (wide, _) = phi.recap(&big).unwrap();
        let full = apply_quadratic(&h, &k, &wide).unwrap().result;
        let mut over = 0.0;
        for n in 4..=5 {
            let r = big.sector_range(n);
            over += full.coeffs.rows(r.start, r.len()).norm_squared();
        }
        assert!((act.leakage - over).abs() < 1e-12 * over.max(1.0), "{} vs {over}", act.leakage);
        let (trunc, _) = full.recap(&small).unwrap();
        assert!((trunc.coeffs - act.result.coeffs).norm() < 1e-13);
    }

    fn cov(phi: &FockVector) -> Result<PairState> {
        let grid = crate::lattice::build_grid(1.0, phi.basis.modes())?;
        covariance_on(phi, grid)
    }

    #[test]
    fn covariance_examples() {
        let b = FockBasis::new(4, Cap::MaxTotal(4)).unwrap();
        let vac = FockVector::vacuum(b.clone()).unwrap();
        let p = cov(&vac).unwrap();
        assert_eq!(max_abs(&p.gamma), 0.0);
        assert_eq!(max_abs(&p.alpha), 0.0);
        let one = FockVector::number_state(b.clone(), &[0, 1, 0, 0]).unwrap();
        let p = cov(&one).unwrap();
        let mut want = DMatrix::<C64>::zeros(4, 4);
        want[(1, 1)] = C64::new(1.0, 0.0);
        assert!(max_abs(&(&p.gamma - want)) < 1e-15);
        assert_eq!(max_abs(&p.alpha), 0.0);

        // (|0> + c |2,0,..>) / sqrt(1 + |c|^2): alpha_00 = sqrt(2) c / (1 + |c|^2)
        let c = C64::new(0.05, 0.02);
        let mut v = FockVector::vacuum(b.clone()).unwrap();
        v.coeffs[b.index_of(&[2, 0, 0, 0]).unwrap()] = c;
        let v = v.normalized().unwrap();
        let p = cov(&v).unwrap();
        let want = c * 2f64.sqrt() / (1.0 + c.norm_sqr());
        assert!((p.alpha[(0, 0)] - want).norm() < 1e-15);
        assert!((p.gamma[(0, 0)].re - 2.0 * c.norm_sqr() / (1.0 + c.norm_sqr())).abs() < 1e-15);
    }

    #[test]
    fn covariance_matches_ladder_expectations() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let b = FockBasis::new(3, Cap::MaxTotal(4)).unwrap();
        let phi = random_vector(&mut rng, &b);
        let p = cov(&phi).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                let mut ej = DVector::zeros(3);
                ej[j] = C64::new(1.0, 0.0);
                let mut ek = DVector::zeros(3);
                ek[k] = C64::new(1.0, 0.0);
                let aj = annihilate(&ej, &phi).unwrap();
                let ak = annihilate(&ek, &phi).unwrap();
                assert!((p.gamma[(j, k)] - ak.inner(&aj).unwrap()).norm() < 1e-12);
                let akaj = annihilate(&ek, &aj).unwrap();
                assert!((p.alpha[(j, k)] - phi.inner(&akaj).unwrap()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn create_and_annihilate_are_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = FockBasis::new(4, Cap::MaxTotal(3)).unwrap();
        let f = DVector::from_fn(4, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let low = FockBasis::new(4, Cap::MaxTotal(2)).unwrap();
        let (x, _) = random_vector(&mut rng, &low).recap(&b).unwrap();
        let y = random_vector(&mut rng, &b);
        let lhs = y.inner(&create(&f, &x).unwrap()).unwrap();
        let rhs = annihilate(&f, &y).unwrap().inner(&x).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn squeezed_vacuum_covariances() {
        let b = FockBasis::new(3, Cap::MaxTotal(8)).unwrap();
        let v = DVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)]);
        let s = 0.05;
        let (phi, lost) = squeezed_vacuum(&b, &[(v.clone(), s)]).unwrap();
        assert!(lost < 1e-10);
        let p = cov(&phi).unwrap();
        let g = &v * v.adjoint() * C64::new(s.sinh().powi(2), 0.0);
        let a = &v * v.transpose() * C64::new(s.sinh() * s.cosh(), 0.0);
        assert!(max_abs(&(p.gamma - g)) < 1e-9);
        assert!(max_abs(&(p.alpha - a)) < 1e-9);
    }
}
