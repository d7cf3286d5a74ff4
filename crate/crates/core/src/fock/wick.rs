//! Wick factorization for centred quasi-free states and its measured violation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::basis::{FockBasis, FockVector};
use super::quadratic::covariance_of;
use crate::error::{invalid, Result};

/// A single ladder operator acting on mode `.0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

/// Two-point function of an ordered pair in the state with covariances `(gamma, alpha)`.
fn contraction(p: Ladder, q: Ladder, gamma: &DMatrix<C64>, alpha: &DMatrix<C64>) -> C64 {
    match (p, q) {
        (Ladder::Create(x), Ladder::Create(y)) => alpha[(x, y)].conj(),
        (Ladder::Annihilate(x), Ladder::Annihilate(y)) => alpha[(x, y)],
        (Ladder::Create(x), Ladder::Annihilate(y)) => gamma[(y, x)],
        (Ladder::Annihilate(x), Ladder::Create(y)) => {
            gamma[(x, y)] + if x == y { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
        }
    }
}

/// `<ops[0] ops[1] ... >` in the quasi-free state with covariances `(gamma, alpha)`,
/// summing over every perfect matching of the string (bosons: no signs).
pub fn wick_expectation(ops: &[Ladder], gamma: &DMatrix<C64>, alpha: &DMatrix<C64>) -> C64 {
    if ops.len() % 2 == 1 {
        return C64::new(0.0, 0.0);
    }
    fn rec(rest: &mut Vec<Ladder>, gamma: &DMatrix<C64>, alpha: &DMatrix<C64>) -> C64 {
        if rest.is_empty() {
            return C64::new(1.0, 0.0);
        }
        let first = rest.remove(0);
        let mut total = C64::new(0.0, 0.0);
        for i in 0..rest.len() {
            let partner = rest.remove(i);
            let c = contraction(first, partner, gamma, alpha);
            if c != C64::new(0.0, 0.0) {
                total += c * rec(rest, gamma, alpha);
            }
            rest.insert(i, partner);
        }
        rest.insert(0, first);
        total
    }
    rec(&mut ops.to_vec(), gamma, alpha)
}

/// `<N^2>` of a quasi-free state by summing Wick expansions of every
/// `a*_x a_x a*_y a_y`.
pub fn quasifree_number_second_moment_enumerated(gamma: &DMatrix<C64>, alpha: &DMatrix<C64>) -> f64 {
    let m = gamma.nrows();
    let mut total = C64::new(0.0, 0.0);
    for x in 0..m {
        for y in 0..m {
            let ops = [Ladder::Create(x), Ladder::Annihilate(x), Ladder::Create(y), Ladder::Annihilate(y)];
            total += wick_expectation(&ops, gamma, alpha);
        }
    }
    total.re
}

/// Closed form of the enumeration above:
/// `<N^2> = (Tr gamma)^2 + Tr gamma + Tr gamma^2 + ||alpha||_HS^2`.
pub fn quasifree_number_second_moment(gamma: &DMatrix<C64>, alpha: &DMatrix<C64>) -> f64 {
    let tr = gamma.trace().re;
    tr * tr + tr + (gamma * gamma).trace().re + alpha.norm_squared()
}

#[derive(Clone, Copy, Debug)]
pub struct WickOptions {
    /// Upper bound on the number of `(k, l)` mode pairs used; beyond it a seeded sample is drawn.
    pub max_pairs: usize,
    pub seed: u64,
}

impl Default for WickOptions {
    fn default() -> Self {
        Self { max_pairs: 64, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WickReport {
    /// `max |<a*_i a*_j a_k a_l> - Wick(gamma, alpha)|` over the sampled quadruples.
    pub defect: f64,
    /// `<(1 + N)^2> / <1 + N>^2`
    pub moment_ratio: f64,
    /// Number of `(i, j, k, l)` quadruples checked.
    pub quadruples: usize,
}

pub fn wick_defect(phi: &FockVector) -> Result<WickReport> {
    wick_defect_with(phi, &WickOptions::default())
}

pub fn wick_defect_with(phi: &FockVector, opts: &WickOptions) -> Result<WickReport> {
    let b: &FockBasis = &phi.basis;
    let m = b.modes();
    if opts.max_pairs == 0 {
        return invalid("max_pairs must be positive");
    }
    let (gamma, alpha) = covariance_of(phi)?;
    let mut pairs: Vec<(usize, usize)> = (0..m).flat_map(|k| (k..m).map(move |l| (k, l))).collect();
    if pairs.len() > opts.max_pairs {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        pairs.shuffle(&mut rng);
        pairs.truncate(opts.max_pairs);
        pairs.sort_unstable();
    }
    // lowered[p] = a_k a_l Phi for pairs[p] = (k, l)
    let lowered: Vec<DVector<C64>> = pairs
        .iter()
        .map(|&(k, l)| lower_twice(phi, k, l))
        .collect::<Result<_>>()?;
    let mut defect = 0.0f64;
    for (p, &(i, j)) in pairs.iter().enumerate() {
        for (q, &(k, l)) in pairs.iter().enumerate() {
            // <a*_j a*_i a_k a_l> = <a_i a_j Phi, a_k a_l Phi>
            let direct = lowered[p].dotc(&lowered[q]);
            let ops = [Ladder::Create(j), Ladder::Create(i), Ladder::Annihilate(k), Ladder::Annihilate(l)];
            let wick = wick_expectation(&ops, &gamma, &alpha);
            defect = defect.max((direct - wick).norm());
        }
    }
    let n1 = 1.0 + phi.number_expectation();
    let n2 = 1.0 + 2.0 * phi.number_expectation() + phi.number_second_moment();
    Ok(WickReport { defect, moment_ratio: n2 / (n1 * n1), quadruples: pairs.len() * pairs.len() })
}

fn lower_twice(phi: &FockVector, k: usize, l: usize) -> Result<DVector<C64>> {
    let m = phi.basis.modes();
    let e = |j: usize| DVector::from_fn(m, |r, _| if r == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    let al = super::quadratic::annihilate(&e(l), phi)?;
    Ok(super::quadratic::annihilate(&e(k), &al)?.coeffs)
}
