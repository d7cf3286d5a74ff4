//! Occupation-number bases and vectors.
//!
//! States are grouped by total particle number and, within a sector, ordered
//! lexicographically with the first mode varying slowest and largest
//! occupations first, so `(n, 0, ..., 0)` leads each sector. Because the
//! ordering of a sector never depends on the cap, a `MaxTotal(n)` basis is a
//! prefix of every `MaxTotal(n')` basis with `n' > n`, and a `FixedTotal(n)`
//! basis is exactly the top sector of `MaxTotal(n)`.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_DIMENSION_CAP: usize = 200_000;
pub(crate) const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cap {
    /// Truncated Fock space: all states with at most this many particles.
    MaxTotal(usize),
    /// The `N`-particle sector.
    FixedTotal(usize),
}

impl Cap {
    pub fn value(&self) -> usize {
        match self {
            Cap::MaxTotal(n) | Cap::FixedTotal(n) => *n,
        }
    }
}

#[derive(Debug)]
pub struct FockBasis {
    modes: usize,
    cap: Cap,
    /// Row-major occupations, `modes` entries per state.
    occ: Vec<u8>,
    /// Start of each sector for `n = n_lo ..= n_hi`, plus the end.
    offsets: Vec<usize>,
    n_lo: usize,
    /// `counts[m][s]`: number of ways to put `s` bosons in `m` modes.
    counts: Vec<Vec<usize>>,
    /// `raise[s * modes + j]` = index of `a*_j s` (MaxTotal only).
    raise: Vec<u32>,
    lower: Vec<u32>,
}

fn count_table(modes: usize, max_n: usize) -> Vec<Vec<usize>> {
    let mut t = vec![vec![0usize; max_n + 1]; modes + 1];
    t[0][0] = 1;
    for m in 1..=modes {
        let mut acc = 0usize;
        for s in 0..=max_n {
            acc = acc.saturating_add(t[m - 1][s]);
            t[m][s] = acc;
        }
    }
    t
}

/// Dimension of a basis without building it.
pub fn basis_dimension(modes: usize, cap: Cap) -> usize {
    let n = cap.value();
    let t = count_table(modes, n);
    match cap {
        Cap::MaxTotal(_) => t[modes].iter().fold(0usize, |a, &b| a.saturating_add(b)),
        Cap::FixedTotal(_) => t[modes][n],
    }
}

impl FockBasis {
    pub fn new(modes: usize, cap: Cap) -> Result<Arc<Self>> {
        Self::with_limit(modes, cap, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_limit(modes: usize, cap: Cap, limit: usize) -> Result<Arc<Self>> {
        if modes == 0 {
            return invalid("a Fock basis needs at least one mode");
        }
        let n_hi = cap.value();
        if n_hi > u8::MAX as usize - 2 {
            return invalid(format!("particle cap {n_hi} is too large"));
        }
        let dimension = basis_dimension(modes, cap);
        if dimension > limit {
            return Err(Error::DimensionCap { dimension, cap: limit });
        }
        let n_lo = match cap {
            Cap::MaxTotal(_) => 0,
            Cap::FixedTotal(n) => n,
        };
        let counts = count_table(modes, n_hi + 2);
        let mut occ = Vec::with_capacity(dimension * modes);
        let mut offsets = Vec::with_capacity(n_hi - n_lo + 2);
        let mut buf = vec![0u8; modes];
        for n in n_lo..=n_hi {
            offsets.push(occ.len() / modes);
            enumerate(&mut buf, 0, n, &mut occ);
        }
        offsets.push(occ.len() / modes);
        debug_assert_eq!(occ.len(), dimension * modes);

        let mut basis = FockBasis { modes, cap, occ, offsets, n_lo, counts, raise: Vec::new(), lower: Vec::new() };
        if matches!(cap, Cap::MaxTotal(_)) {
            basis.build_ladder_tables();
        }
        Ok(Arc::new(basis))
    }

    fn build_ladder_tables(&mut self) {
        let (dim, m) = (self.dim(), self.modes);
        let mut raise = vec![NONE; dim * m];
        let mut lower = vec![NONE; dim * m];
        let mut buf = vec![0u8; m];
        for s in 0..dim {
            buf.copy_from_slice(self.occupation(s));
            let total: usize = buf.iter().map(|&v| v as usize).sum();
            for j in 0..m {
                if total < self.cap.value() {
                    buf[j] += 1;
                    raise[s * m + j] = self.index_of(&buf).expect("raised state is inside the cap") as u32;
                    buf[j] -= 1;
                }
                if buf[j] > 0 {
                    buf[j] -= 1;
                    lower[s * m + j] = self.index_of(&buf).expect("lowered state is inside the basis") as u32;
                    buf[j] += 1;
                }
            }
        }
        self.raise = raise;
        self.lower = lower;
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cap(&self) -> Cap {
        self.cap
    }

    pub fn dim(&self) -> usize {
        self.occ.len() / self.modes
    }

    pub fn occupation(&self, s: usize) -> &[u8] {
        &self.occ[s * self.modes..(s + 1) * self.modes]
    }

    pub fn total(&self, s: usize) -> usize {
        self.occupation(s).iter().map(|&v| v as usize).sum()
    }

    /// Index range of the `n`-particle sector (empty when absent).
    pub fn sector_range(&self, n: usize) -> Range<usize> {
        if n < self.n_lo || n > self.cap.value() {
            return 0..0;
        }
        let i = n - self.n_lo;
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Particle numbers present in the basis.
    pub fn sectors(&self) -> Range<usize> {
        self.n_lo..self.cap.value() + 1
    }

    /// Index of an occupation tuple, or `None` when it lies outside the basis.
    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        if occ.len() != self.modes {
            return None;
        }
        let n: usize = occ.iter().map(|&v| v as usize).sum();
        if n < self.n_lo || n > self.cap.value() {
            return None;
        }
        let mut rank = 0usize;
        let mut rem = n;
        for i in 0..self.modes - 1 {
            let t = occ[i] as usize;
            let free = self.modes - i - 1;
            for v in (t + 1)..=rem {
                rank += self.counts[free][rem - v];
            }
            rem -= t;
        }
        Some(self.offsets[n - self.n_lo] + rank)
    }

    #[inline]
    pub(crate) fn raise_index(&self, s: usize, j: usize) -> u32 {
        self.raise[s * self.modes + j]
    }

    #[inline]
    pub(crate) fn lower_index(&self, s: usize, j: usize) -> u32 {
        self.lower[s * self.modes + j]
    }

    pub(crate) fn has_ladder_tables(&self) -> bool {
        !self.raise.is_empty()
    }

    pub(crate) fn require_ladder(&self) -> Result<()> {
        if !self.has_ladder_tables() {
            return invalid("operation needs a MaxTotal basis");
        }
        Ok(())
    }
}

fn enumerate(buf: &mut [u8], pos: usize, rem: usize, out: &mut Vec<u8>) {
    let m = buf.len();
    if pos == m - 1 {
        buf[pos] = rem as u8;
        out.extend_from_slice(buf);
        return;
    }
    for v in (0..=rem).rev() {
        buf[pos] = v as u8;
        enumerate(buf, pos + 1, rem - v, out);
    }
    buf[pos] = 0;
}

/// Complex coefficients over a [`FockBasis`].
#[derive(Clone, Debug)]
pub struct FockVector {
    pub basis: Arc<FockBasis>,
    pub coeffs: DVector<C64>,
}

impl FockVector {
    pub fn new(basis: Arc<FockBasis>, coeffs: DVector<C64>) -> Result<Self> {
        if coeffs.len() != basis.dim() {
            return invalid(format!("{} coefficients for a {}-state basis", coeffs.len(), basis.dim()));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn zeros(basis: Arc<FockBasis>) -> Self {
        let d = basis.dim();
        Self { basis, coeffs: DVector::zeros(d) }
    }

    /// `|0>`; requires a basis that contains the empty state.
    pub fn vacuum(basis: Arc<FockBasis>) -> Result<Self> {
        let idx = basis
            .index_of(&vec![0u8; basis.modes()])
            .ok_or_else(|| Error::InvalidArgument("basis has no vacuum".into()))?;
        let mut v = Self::zeros(basis);
        v.coeffs[idx] = C64::new(1.0, 0.0);
        Ok(v)
    }

    /// Normalized occupation-number state.
    pub fn number_state(basis: Arc<FockBasis>, occ: &[u8]) -> Result<Self> {
        let idx = basis
            .index_of(occ)
            .ok_or_else(|| Error::InvalidArgument(format!("occupation {occ:?} is not in the basis")))?;
        let mut v = Self::zeros(basis);
        v.coeffs[idx] = C64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return invalid("cannot normalize a zero Fock vector");
        }
        Ok(Self { basis: self.basis.clone(), coeffs: self.coeffs.unscale(n) })
    }

    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        self.require_same_basis(other)?;
        Ok(self.coeffs.dotc(&other.coeffs))
    }

    pub(crate) fn require_same_basis(&self, other: &FockVector) -> Result<()> {
        if !Arc::ptr_eq(&self.basis, &other.basis)
            && (self.basis.modes() != other.basis.modes() || self.basis.cap() != other.basis.cap())
        {
            return invalid("Fock vectors live on different bases");
        }
        Ok(())
    }

    /// `||phi_n||^2` for every sector present.
    pub fn sector_weights(&self) -> Vec<(usize, f64)> {
        self.basis
            .sectors()
            .map(|n| {
                let r = self.basis.sector_range(n);
                (n, self.coeffs.rows(r.start, r.len()).norm_squared())
            })
            .collect()
    }

    /// `<N>`
    pub fn number_expectation(&self) -> f64 {
        (0..self.basis.dim()).map(|s| self.basis.total(s) as f64 * self.coeffs[s].norm_sqr()).sum()
    }

    /// `<N^2>`
    pub fn number_second_moment(&self) -> f64 {
        (0..self.basis.dim()).map(|s| (self.basis.total(s) as f64).powi(2) * self.coeffs[s].norm_sqr()).sum()
    }

    /// Re-expresses the vector on a `MaxTotal` basis with a larger cap
    /// (zero padding) or a smaller cap (dropping the upper sectors, whose
    /// weight is returned).
    pub fn recap(&self, target: &Arc<FockBasis>) -> Result<(FockVector, f64)> {
        if target.modes() != self.basis.modes() {
            return invalid("cannot recap across different mode counts");
        }
        let mut out = FockVector::zeros(target.clone());
        let mut dropped = 0.0;
        for n in self.basis.sectors() {
            let src = self.basis.sector_range(n);
            let dst = target.sector_range(n);
            let block = self.coeffs.rows(src.start, src.len());
            if dst.len() == src.len() && !src.is_empty() {
                out.coeffs.rows_mut(dst.start, dst.len()).copy_from(&block);
            } else {
                dropped += block.norm_squared();
            }
        }
        Ok((out, dropped))
    }
}
