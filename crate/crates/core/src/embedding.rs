//! The excitation map between `N`-body states and condensate-stripped Fock
//! vectors, and the condensation metrics built from one-body densities.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::fock::quadratic::{annihilate, create};
use crate::fock::{Cap, FockBasis, FockVector, DEFAULT_DIMENSION_CAP};
use crate::lattice::{hermitian_part, laplacian_operator, sqrt_one_minus_laplacian, trace_norm_matrix, GridFunction, OneBodyOperator};

/// Output of [`Embedder::embed`].
#[derive(Clone, Debug)]
pub struct Embedded {
    /// State on the fixed-`N` basis.
    pub state: FockVector,
    /// `||Phi||^2 - ||P_0 Phi||^2`: weight removed by projecting each `phi_n` off `u`.
    pub projection_loss: f64,
}

/// Cached bases for moving between an excitation vector and the `N`-particle sector.
#[derive(Clone, Debug)]
pub struct Embedder {
    particles: usize,
    work: Arc<FockBasis>,
    sector: Arc<FockBasis>,
}

impl Embedder {
    pub fn new(modes: usize, particles: usize) -> Result<Self> {
        Self::with_limit(modes, particles, DEFAULT_DIMENSION_CAP)
    }

    /// As [`Self::new`], refusing bases larger than `limit`.
    pub fn with_limit(modes: usize, particles: usize, limit: usize) -> Result<Self> {
        let work = FockBasis::with_limit(modes, Cap::MaxTotal(particles), limit)?;
        let sector = FockBasis::with_limit(modes, Cap::FixedTotal(particles), limit)?;
        Ok(Self { particles, work, sector })
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    /// The fixed-`N` basis of embedded states.
    pub fn sector_basis(&self) -> &Arc<FockBasis> {
        &self.sector
    }

    /// The `MaxTotal(N)` basis of decomposed excitation vectors.
    pub fn excitation_basis(&self) -> &Arc<FockBasis> {
        &self.work
    }

    fn condensate(&self, u: &GridFunction) -> Result<DVector<C64>> {
        if u.grid().points() != self.work.modes() {
            return invalid("condensate grid and Fock basis disagree on the number of modes");
        }
        let c = u.modes();
        let n = c.norm();
        if (n - 1.0).abs() > 1e-8 {
            return invalid(format!("condensate must be normalized, norm is {n:.12}"));
        }
        Ok(c)
    }

    /// `sum_n a*(u)^{N-n} / sqrt((N-n)!) phi_n`, after projecting every `phi_n` onto `u`-free states.
    pub fn embed(&self, u: &GridFunction, phi: &FockVector) -> Result<Embedded> {
        let c = self.condensate(u)?;
        if !matches!(phi.basis.cap(), Cap::MaxTotal(_)) {
            return invalid("excitation vector must live on a max_total basis");
        }
        let n_max = phi.basis.cap().value();
        if n_max > self.particles {
            return invalid(format!("excitation cap n_max = {n_max} exceeds N = {}", self.particles));
        }
        if phi.basis.modes() != self.work.modes() {
            return invalid("excitation vector has the wrong number of modes");
        }
        let (lifted, _) = phi.recap(&self.work)?;
        let projected = strip_condensate(&c, &lifted)?;
        let projection_loss = (lifted.coeffs.norm_squared() - projected.coeffs.norm_squared()).max(0.0);
        let n = self.particles;
        let mut r = sector_part(&projected, 0);
        for k in 1..=n {
            let raised = create(&c, &r)?;
            r = sector_part(&projected, k);
            r.coeffs.axpy(C64::new(1.0 / ((n - k + 1) as f64).sqrt(), 0.0), &raised.coeffs, C64::new(1.0, 0.0));
        }
        let top = self.work.sector_range(n);
        let coeffs = r.coeffs.rows(top.start, top.len()).into_owned();
        Ok(Embedded { state: FockVector::new(self.sector.clone(), coeffs)?, projection_loss })
    }

    /// `phi_n = P_0 a(u)^{N-n} Psi / sqrt((N-n)!)` on the `MaxTotal(N)` basis.
    pub fn decompose(&self, psi: &FockVector, u: &GridFunction) -> Result<FockVector> {
        let c = self.condensate(u)?;
        if psi.basis.modes() != self.sector.modes() || psi.basis.cap() != self.sector.cap() {
            return invalid("state is not on the N-particle basis of this embedder");
        }
        let n = self.particles;
        let mut y = FockVector::zeros(self.work.clone());
        let top = self.work.sector_range(n);
        y.coeffs.rows_mut(top.start, top.len()).copy_from(&psi.coeffs);
        let mut out = FockVector::zeros(self.work.clone());
        let mut fact = 1.0f64;
        for t in 0..=n {
            if t > 0 {
                y = annihilate(&c, &y)?;
                fact *= t as f64;
            }
            let phi = strip_condensate(&c, &y)?;
            out.coeffs.axpy(C64::new(1.0 / fact.sqrt(), 0.0), &phi.coeffs, C64::new(1.0, 0.0));
        }
        Ok(out)
    }
}

/// `P_0 = sum_k (-1)^k a*(c)^k a(c)^k / k!`, the projector onto states with no particle in `c`.
fn strip_condensate(c: &DVector<C64>, x: &FockVector) -> Result<FockVector> {
    let top = x.basis.cap().value();
    let mut out = x.clone();
    let mut lowered = x.clone();
    let mut fact = 1.0f64;
    for k in 1..=top {
        lowered = annihilate(c, &lowered)?;
        if lowered.coeffs.norm_squared() == 0.0 {
            break;
        }
        fact *= k as f64;
        let mut term = lowered.clone();
        for _ in 0..k {
            term = create(c, &term)?;
        }
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        out.coeffs.axpy(C64::new(sign / fact, 0.0), &term.coeffs, C64::new(1.0, 0.0));
    }
    Ok(out)
}

fn sector_part(x: &FockVector, n: usize) -> FockVector {
    let mut out = FockVector::zeros(x.basis.clone());
    if n <= x.basis.cap().value() {
        let r = x.basis.sector_range(n);
        out.coeffs.rows_mut(r.start, r.len()).copy_from(&x.coeffs.rows(r.start, r.len()));
    }
    out
}

pub fn embed(u: &GridFunction, phi: &FockVector, n: usize) -> Result<Embedded> {
    Embedder::new(u.grid().points(), n)?.embed(u, phi)
}

pub fn decompose(psi: &FockVector, u: &GridFunction) -> Result<FockVector> {
    let n = match psi.basis.cap() {
        Cap::FixedTotal(n) => n,
        Cap::MaxTotal(_) => return invalid("decompose expects a fixed-N state"),
    };
    Embedder::new(u.grid().points(), n)?.decompose(psi, u)
}

/// `||Psi_exact - embed(u, Phi, N)||`
pub fn approximation_error(psi_exact: &FockVector, u: &GridFunction, phi: &FockVector, n: usize) -> Result<f64> {
    let approx = embed(u, phi, n)?.state;
    psi_exact.require_same_basis(&approx)?;
    Ok((&psi_exact.coeffs - &approx.coeffs).norm())
}

/// `||a(u)-weight||` of an excitation vector: `<Phi, a*(u) a(u) Phi>`, which
/// vanishes when every `phi_n` is orthogonal to `u`.
pub fn condensate_occupation(phi: &FockVector, u: &GridFunction) -> Result<f64> {
    let a = annihilate(&u.modes(), phi)?;
    Ok(a.coeffs.norm_squared())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CondensationMetrics {
    /// `1 - <u, gamma u> / N`
    pub depletion: f64,
    /// `Tr |gamma / N - |u><u||`
    pub trace_distance: f64,
    /// `Tr |S (gamma / N - |u><u|) S|` with `S = (1 - Delta)^{1/2}`
    pub weighted_trace_distance: f64,
    /// `Tr[S Q gamma Q S]`
    pub kinetic_excitation: f64,
}

/// The three terms bounding the weighted trace distance:
/// `Tr(S Q gamma Q S) / N`, `Tr(Q gamma Q) ||u||_{H^1}^2 / N`, `2 Tr|S Q gamma P S| / N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TriangleBound {
    pub kinetic_term: f64,
    pub depletion_term: f64,
    pub cross_term: f64,
}

impl TriangleBound {
    pub fn total(&self) -> f64 {
        self.kinetic_term + self.depletion_term + self.cross_term
    }
}

struct Pieces {
    n: f64,
    p: DMatrix<C64>,
    q: DMatrix<C64>,
    s: DMatrix<C64>,
    gamma: DMatrix<C64>,
}

fn pieces(gamma1: &OneBodyOperator, u: &GridFunction, n: usize) -> Result<Pieces> {
    gamma1.grid().check_same(u.grid())?;
    if n == 0 {
        return invalid("N must be positive");
    }
    let tr = gamma1.matrix().trace().re;
    if (tr - n as f64).abs() > 1e-6 {
        return invalid(format!("Tr gamma = {tr:.9} differs from N = {n}"));
    }
    let c = u.modes();
    if (c.norm() - 1.0).abs() > 1e-8 {
        return invalid("condensate must be normalized");
    }
    let m = c.len();
    let p = &c * c.adjoint();
    let q = DMatrix::<C64>::identity(m, m) - &p;
    Ok(Pieces { n: n as f64, p, q, s: sqrt_one_minus_laplacian(u.grid()), gamma: gamma1.matrix().clone() })
}

pub fn condensation_metrics(gamma1: &OneBodyOperator, u: &GridFunction, n: usize) -> Result<CondensationMetrics> {
    let pc = pieces(gamma1, u, n)?;
    let c = u.modes();
    let occupation = c.dotc(&(&pc.gamma * &c)).re;
    let diff = hermitian_part(&(&pc.gamma / C64::new(pc.n, 0.0) - &pc.p));
    let weighted = hermitian_part(&(&pc.s * &diff * &pc.s));
    let qgq = &pc.q * &pc.gamma * &pc.q;
    let one_minus_lap = laplacian_operator(u.grid()).into_matrix() + DMatrix::<C64>::identity(c.len(), c.len());
    Ok(CondensationMetrics {
        depletion: (1.0 - occupation / pc.n).max(0.0),
        trace_distance: trace_norm_matrix(&diff)?,
        weighted_trace_distance: trace_norm_matrix(&weighted)?,
        kinetic_excitation: (one_minus_lap * qgq).trace().re.max(0.0),
    })
}

pub fn triangle_bound(gamma1: &OneBodyOperator, u: &GridFunction, n: usize) -> Result<TriangleBound> {
    let pc = pieces(gamma1, u, n)?;
    let c = u.modes();
    let qgq = &pc.q * &pc.gamma * &pc.q;
    let one_minus_lap = laplacian_operator(u.grid()).into_matrix() + DMatrix::<C64>::identity(c.len(), c.len());
    let h1 = c.dotc(&(&one_minus_lap * &c)).re;
    let cross = &pc.s * &pc.q * &pc.gamma * &pc.p * &pc.s;
    Ok(TriangleBound {
        kinetic_term: (&one_minus_lap * &qgq).trace().re / pc.n,
        depletion_term: qgq.trace().re * h1 / pc.n,
        cross_term: 2.0 * trace_norm_matrix(&cross)? / pc.n,
    })
}
