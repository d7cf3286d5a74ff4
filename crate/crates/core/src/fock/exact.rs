//! Number-conserving `N`-boson Hamiltonian on the fixed-`N` occupation basis,
//! stored as a real CSR matrix, and the one-body reduced density matrix.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::basis::{Cap, FockBasis, FockVector, DEFAULT_DIMENSION_CAP};
use crate::error::{invalid, Result};
use crate::lattice::{laplacian_operator, scaled_potential, GridSpec, InteractionProfile, OneBodyOperator, Role};

/// Real symmetric sparse operator on a fixed-`N` basis.
#[derive(Clone, Debug)]
pub struct SparseHamiltonian {
    basis: Arc<FockBasis>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseHamiltonian {
    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn apply_into(&self, x: &DVector<C64>, y: &mut DVector<C64>) {
        for r in 0..self.dim() {
            let mut acc = C64::new(0.0, 0.0);
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += x[self.cols[p] as usize] * self.vals[p];
            }
            y[r] = acc;
        }
    }

    pub fn apply(&self, x: &DVector<C64>) -> DVector<C64> {
        let mut y = DVector::zeros(self.dim());
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_vector(&self, psi: &FockVector) -> Result<FockVector> {
        self.check(psi)?;
        FockVector::new(self.basis.clone(), self.apply(&psi.coeffs))
    }

    /// `<psi, H psi>` (real part; the imaginary part vanishes by symmetry).
    pub fn expectation(&self, psi: &FockVector) -> Result<f64> {
        self.check(psi)?;
        Ok(psi.coeffs.dotc(&self.apply(&psi.coeffs)).re)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.dim(), self.dim());
        for r in 0..self.dim() {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                d[(r, self.cols[p] as usize)] += self.vals[p];
            }
        }
        d
    }

    /// `max |H_rc - H_cr|` over stored entries.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim() {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[p] as usize;
                worst = worst.max((self.vals[p] - self.entry(c, r)).abs());
            }
        }
        worst
    }

    fn entry(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        let cols = &self.cols[range.clone()];
        match cols.binary_search(&(c as u32)) {
            Ok(i) => self.vals[range.start + i],
            Err(_) => 0.0,
        }
    }

    fn check(&self, psi: &FockVector) -> Result<()> {
        if psi.basis.modes() != self.basis.modes() || psi.basis.cap() != self.basis.cap() {
            return invalid("state is not on the Hamiltonian's N-particle basis");
        }
        Ok(())
    }
}

/// `H_N = dGamma(-Delta) + 1/(2(N-1)) sum_jk W_jk a*_j a*_k a_k a_j` with
/// `W_jk = w_N(x_j - x_k)`.
pub fn build_hn_exact(n: usize, profile: &InteractionProfile, grid: &GridSpec) -> Result<SparseHamiltonian> {
    build_hn_exact_with_limit(n, profile, grid, DEFAULT_DIMENSION_CAP)
}

pub fn build_hn_exact_with_limit(
    n: usize,
    profile: &InteractionProfile,
    grid: &GridSpec,
    limit: usize,
) -> Result<SparseHamiltonian> {
    let m = grid.points();
    let kinetic = laplacian_operator(grid).matrix().map(|z| z.re);
    let w = scaled_potential(profile, grid)?.values;
    let wv = w.values();
    let pair = DMatrix::from_fn(m, m, |j, k| wv[(j + m - k) % m].re);
    build_from_matrices(n, &kinetic, &pair, limit)
}

/// `dGamma(T) + 1/(2(N-1)) sum_jk W_jk a*_j a*_k a_k a_j` for real symmetric `T`, `W`.
pub fn build_from_matrices(n: usize, kinetic: &DMatrix<f64>, pair: &DMatrix<f64>, limit: usize) -> Result<SparseHamiltonian> {
    let m = kinetic.nrows();
    if kinetic.shape() != (m, m) || pair.shape() != (m, m) {
        return invalid("kinetic and pair matrices must be square and of equal size");
    }
    if n < 2 {
        return invalid(format!("the N-body Hamiltonian needs N >= 2, got {n}"));
    }
    let basis = FockBasis::with_limit(m, Cap::FixedTotal(n), limit)?;
    let coupling = 1.0 / (2.0 * (n as f64 - 1.0));
    let dim = basis.dim();
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    let mut occ = vec![0u8; m];
    let mut row: Vec<(u32, f64)> = Vec::new();
    for s in 0..dim {
        row.clear();
        let src = basis.occupation(s);
        // Diagonal: kinetic diagonal plus the interaction, which is diagonal
        // in position occupations.
        let mut diag = 0.0;
        for j in 0..m {
            let nj = src[j] as f64;
            if nj == 0.0 {
                continue;
            }
            diag += kinetic[(j, j)] * nj;
            diag += coupling * pair[(j, j)] * nj * (nj - 1.0);
            for k in 0..m {
                if k != j {
                    diag += coupling * pair[(j, k)] * nj * src[k] as f64;
                }
            }
        }
        if diag != 0.0 {
            row.push((s as u32, diag));
        }
        // Hops a*_j a_k, j != k: row s gets <s| a*_j a_k |c> with c = a*_k a_j s.
        for j in 0..m {
            if src[j] == 0 {
                continue;
            }
            for k in 0..m {
                if k == j || kinetic[(j, k)] == 0.0 {
                    continue;
                }
                occ.copy_from_slice(src);
                occ[j] -= 1;
                occ[k] += 1;
                let c = basis.index_of(&occ).expect("hop stays in the sector");
                let amp = (src[j] as f64 * occ[k] as f64).sqrt();
                row.push((c as u32, kinetic[(j, k)] * amp));
            }
        }
        row.sort_unstable_by_key(|e| e.0);
        for &(c, v) in row.iter() {
            match cols.last() {
                Some(&last) if last == c && cols.len() > row_ptr[s] => *vals.last_mut().unwrap() += v,
                _ => {
                    cols.push(c);
                    vals.push(v);
                }
            }
        }
        row_ptr.push(cols.len());
    }
    Ok(SparseHamiltonian { basis, row_ptr, cols, vals })
}

/// `gamma_jk = <Psi, a*_k a_j Psi>` on a fixed-`N` basis; trace `N`.
pub fn one_body_reduced(psi: &FockVector, grid: &GridSpec) -> Result<OneBodyOperator> {
    let b = &*psi.basis;
    let m = b.modes();
    if grid.points() != m {
        return invalid("grid and basis disagree on the number of modes");
    }
    let n = match b.cap() {
        Cap::FixedTotal(n) if n > 0 => n,
        _ => return invalid("one-body reduction expects a fixed-N state with N >= 1"),
    };
    // Column j holds a_j Psi on the (N-1)-particle basis.
    let lower = FockBasis::with_limit(m, Cap::FixedTotal(n - 1), usize::MAX)?;
    let mut lowered = DMatrix::<C64>::zeros(lower.dim(), m);
    let mut occ = vec![0u8; m];
    for s in 0..b.dim() {
        let xs = psi.coeffs[s];
        if xs == C64::new(0.0, 0.0) {
            continue;
        }
        occ.copy_from_slice(b.occupation(s));
        for j in 0..m {
            let nj = occ[j];
            if nj == 0 {
                continue;
            }
            occ[j] -= 1;
            let d = lower.index_of(&occ).expect("lowered state is in the sector below");
            occ[j] += 1;
            lowered[(d, j)] += xs * (nj as f64).sqrt();
        }
    }
    // gamma_jk = <a_k Psi, a_j Psi> = (L^T conj(L))_jk
    let gamma = lowered.transpose() * lowered.conjugate();
    OneBodyOperator::new(*grid, crate::lattice::hermitian_part(&gamma), Role::Psd)
}
