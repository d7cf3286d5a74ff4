//! Discretization substrate: a 1D periodic grid, complex grid functions and
//! dense one-body operators.
//!
//! Operators with an integral kernel `f(x, y)` are stored as matrices
//! `F[j, k] = dx * f(x_j, x_k)`, which is the matrix of the operator in the
//! orthonormal indicator modes `e_j / sqrt(dx)`. A grid function `u` has mode
//! coefficients `sqrt(dx) * u_j`; all Fock-space code works with those.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Uniform periodic grid on `[0, L)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    length: f64,
    points: usize,
}

pub fn build_grid(length: f64, points: usize) -> Result<GridSpec> {
    if !(length.is_finite() && length > 0.0) {
        return invalid(format!("grid length must be positive, got {length}"));
    }
    if points < 2 {
        return invalid(format!("grid needs at least 2 points, got {points}"));
    }
    Ok(GridSpec { length, points })
}

impl GridSpec {
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> f64 {
        self.length / self.points as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.node(j)).collect()
    }

    /// Signed distance of node `j` from the origin under the minimal-image
    /// convention, in `(-L/2, L/2]`.
    pub fn minimal_image(&self, j: usize) -> f64 {
        let x = self.node(j);
        if x > 0.5 * self.length {
            x - self.length
        } else {
            x
        }
    }

    /// Wavenumbers in FFT ordering: entry `n` is the frequency of the `n`-th
    /// output of a forward DFT, covering `(2pi/L) * {-floor(M/2), .., ceil(M/2)-1}`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let m = self.points as i64;
        let top = (m + 1) / 2 - 1;
        let scale = 2.0 * PI / self.length;
        (0..m)
            .map(|n| {
                let freq = if n <= top { n } else { n - m };
                scale * freq as f64
            })
            .collect()
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return invalid(format!(
                "grid mismatch: (L = {}, M = {}) vs (L = {}, M = {})",
                self.length, self.points, other.length, other.points
            ));
        }
        Ok(())
    }
}

/// Complex function sampled on the nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: GridSpec,
    values: DVector<C64>,
}

impl GridFunction {
    pub fn new(grid: GridSpec, values: DVector<C64>) -> Result<Self> {
        if values.len() != grid.points() {
            return invalid(format!(
                "grid function has {} values for a {}-point grid",
                values.len(),
                grid.points()
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> C64) -> Self {
        let values = DVector::from_iterator(grid.points(), grid.nodes().into_iter().map(f));
        Self { grid, values }
    }

    pub fn from_real(grid: GridSpec, values: &[f64]) -> Result<Self> {
        Self::new(grid, DVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v, 0.0))))
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: DVector::zeros(grid.points()) }
    }

    /// Normalized constant `1/sqrt(L)`.
    pub fn constant(grid: GridSpec) -> Self {
        let c = 1.0 / grid.length().sqrt();
        Self::from_fn(grid, |_| C64::new(c, 0.0))
    }

    /// Normalized plane wave `exp(i k x) / sqrt(L)` with `k = 2 pi n / L`.
    pub fn plane_wave(grid: GridSpec, n: i64) -> Self {
        let k = 2.0 * PI * n as f64 / grid.length();
        let c = 1.0 / grid.length().sqrt();
        Self::from_fn(grid, |x| C64::from_polar(c, k * x))
    }

    /// Normalized periodic gaussian wave packet.
    pub fn gaussian(grid: GridSpec, center: f64, width: f64, momentum: f64) -> Self {
        let l = grid.length();
        let f = Self::from_fn(grid, |x| {
            let mut d = (x - center).rem_euclid(l);
            if d > 0.5 * l {
                d -= l;
            }
            C64::from_polar((-d * d / (4.0 * width * width)).exp(), momentum * x)
        });
        f.normalized().expect("gaussian packet has positive norm")
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &DVector<C64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut DVector<C64> {
        &mut self.values
    }

    pub fn into_values(self) -> DVector<C64> {
        self.values
    }

    /// L2 norm `sqrt(dx * sum |v_j|^2)`.
    pub fn norm(&self) -> f64 {
        (self.grid.dx() * self.values.norm_squared()).sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return invalid("cannot normalize a zero or non-finite function");
        }
        Ok(Self { grid: self.grid, values: self.values.unscale(n) })
    }

    pub fn inner(&self, other: &GridFunction) -> C64 {
        self.values.dotc(&other.values) * self.grid.dx()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Coefficients in the orthonormal mode basis, `sqrt(dx) * u_j`.
    pub fn modes(&self) -> DVector<C64> {
        self.values.scale(self.grid.dx().sqrt())
    }

    pub fn from_modes(grid: GridSpec, modes: &DVector<C64>) -> Result<Self> {
        Self::new(grid, modes.unscale(grid.dx().sqrt()))
    }

    pub fn abs_squared(&self) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.map(|v| C64::new(v.norm_sqr(), 0.0)),
        }
    }

    pub(crate) fn require_normalized(&self, what: &str) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > 1e-8 {
            return invalid(format!("{what} must be L2-normalized, norm is {n:.12}"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Hermitian,
    Psd,
    Projector,
    Generic,
}

/// Dense one-body operator on the grid modes, tagged with the structure it
/// is guaranteed to have.
#[derive(Clone, Debug, PartialEq)]
pub struct OneBodyOperator {
    grid: GridSpec,
    matrix: DMatrix<C64>,
    role: Role,
}

impl OneBodyOperator {
    /// Validates the matrix against its role tag.
    pub fn new(grid: GridSpec, matrix: DMatrix<C64>, role: Role) -> Result<Self> {
        let m = grid.points();
        if matrix.nrows() != m || matrix.ncols() != m {
            return invalid(format!(
                "operator is {}x{} on a {m}-point grid",
                matrix.nrows(),
                matrix.ncols()
            ));
        }
        match role {
            Role::Generic => {}
            Role::Hermitian => {
                let d = hermitian_defect(&matrix);
                if d > 1e-12 {
                    return invalid(format!("hermitian operator has defect {d:.3e}"));
                }
            }
            Role::Psd => {
                let d = hermitian_defect(&matrix);
                if d > 1e-12 {
                    return invalid(format!("psd operator has hermiticity defect {d:.3e}"));
                }
                let min = min_eigenvalue(&matrix);
                if min < -1e-10 {
                    return invalid(format!("psd operator has eigenvalue {min:.3e}"));
                }
            }
            Role::Projector => {
                let d = (&matrix * &matrix - &matrix).norm();
                if d > 1e-10 {
                    return invalid(format!("projector has idempotency defect {d:.3e}"));
                }
            }
        }
        Ok(Self { grid, matrix, role })
    }

    pub(crate) fn new_unchecked(grid: GridSpec, matrix: DMatrix<C64>, role: Role) -> Self {
        Self { grid, matrix, role }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        self.grid.check_same(f.grid())?;
        GridFunction::new(self.grid, &self.matrix * f.values())
    }

    /// Real part of `<f, A f>` computed in the L2 inner product.
    pub fn expectation(&self, f: &GridFunction) -> Result<f64> {
        let af = self.apply(f)?;
        Ok(f.inner(&af).re)
    }
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermitian_defect(m: &DMatrix<C64>) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..m.nrows() {
        for k in 0..m.ncols() {
            worst = worst.max((m[(j, k)] - m[(k, j)].conj()).norm());
        }
    }
    worst
}

/// Largest entrywise deviation from symmetry (`A = A^T`).
pub fn symmetry_defect(m: &DMatrix<C64>) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..m.nrows() {
        for k in 0..m.ncols() {
            worst = worst.max((m[(j, k)] - m[(k, j)]).norm());
        }
    }
    worst
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `(A + A^dagger) / 2`
pub fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

/// `(A + A^T) / 2`
pub fn symmetric_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.transpose()).scale(0.5)
}

pub fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `f(A)` for Hermitian `A` via its eigendecomposition.
pub fn hermitian_function(m: &DMatrix<C64>, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
    let eig = hermitian_part(m).symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(f(l), 0.0)));
    v * d * v.adjoint()
}

/// Pseudo-spectral `-Delta` with periodic boundary conditions.
///
/// `D[j, l] = (1/M) * sum_k k^2 cos(k (x_j - x_l))`, which is real symmetric
/// and has the plane waves as exact eigenvectors.
pub fn laplacian_operator(grid: &GridSpec) -> OneBodyOperator {
    let m = grid.points();
    let ks = grid.wavenumbers();
    let dx = grid.dx();
    let mut d = DMatrix::<C64>::zeros(m, m);
    for j in 0..m {
        for l in j..m {
            let sep = (j as f64 - l as f64) * dx;
            let v: f64 = ks.iter().map(|&k| k * k * (k * sep).cos()).sum::<f64>() / m as f64;
            d[(j, l)] = C64::new(v, 0.0);
            d[(l, j)] = C64::new(v, 0.0);
        }
    }
    OneBodyOperator::new_unchecked(*grid, d, Role::Psd)
}

/// `(1 - Delta)^{1/2}` on the lattice.
pub fn sqrt_one_minus_laplacian(grid: &GridSpec) -> DMatrix<C64> {
    let lap = laplacian_operator(grid);
    let one_minus = lap.matrix() + DMatrix::<C64>::identity(grid.points(), grid.points());
    hermitian_function(&one_minus, |l| l.max(0.0).sqrt())
}

/// Base interaction profile `w`: nonnegative and even.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileShape {
    Zero,
    /// `strength * exp(-x^2 / (2 sigma^2))`
    Gaussian { strength: f64, sigma: f64 },
    /// `height` on `|x| <= width / 2`
    Box { height: f64, width: f64 },
    /// `height * (1 + cos(pi x / radius)) / 2` on `|x| < radius`
    Cosine { height: f64, radius: f64 },
    /// Piecewise-linear half profile on `x >= 0`, even extension, zero past
    /// the last abscissa.
    Tabulated { x: Vec<f64>, w: Vec<f64> },
}

impl ProfileShape {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| -> Result<()> {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("profile {name} must be positive, got {v}"));
            }
            Ok(())
        };
        let nonneg = |name: &str, v: f64| -> Result<()> {
            if !(v.is_finite() && v >= 0.0) {
                return invalid(format!("profile {name} must be nonnegative, got {v}"));
            }
            Ok(())
        };
        match self {
            ProfileShape::Zero => Ok(()),
            ProfileShape::Gaussian { strength, sigma } => {
                nonneg("strength", *strength)?;
                positive("sigma", *sigma)
            }
            ProfileShape::Box { height, width } => {
                nonneg("height", *height)?;
                positive("width", *width)
            }
            ProfileShape::Cosine { height, radius } => {
                nonneg("height", *height)?;
                positive("radius", *radius)
            }
            ProfileShape::Tabulated { x, w } => {
                if x.len() != w.len() || x.len() < 2 {
                    return invalid("tabulated profile needs matching x/w arrays with >= 2 entries");
                }
                if x[0] != 0.0 || x.windows(2).any(|p| p[1] <= p[0]) {
                    return invalid("tabulated abscissae must start at 0 and increase strictly");
                }
                if w.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
                    return invalid("tabulated profile values must be nonnegative");
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let a = x.abs();
        match self {
            ProfileShape::Zero => 0.0,
            ProfileShape::Gaussian { strength, sigma } => strength * (-a * a / (2.0 * sigma * sigma)).exp(),
            ProfileShape::Box { height, width } => {
                if a <= 0.5 * width {
                    *height
                } else {
                    0.0
                }
            }
            ProfileShape::Cosine { height, radius } => {
                if a < *radius {
                    height * 0.5 * (1.0 + (PI * a / radius).cos())
                } else {
                    0.0
                }
            }
            ProfileShape::Tabulated { x, w } => {
                let last = x.len() - 1;
                if a > x[last] {
                    return 0.0;
                }
                let i = x.partition_point(|&xi| xi <= a).clamp(1, last);
                let t = (a - x[i - 1]) / (x[i] - x[i - 1]);
                w[i - 1] + t * (w[i] - w[i - 1])
            }
        }
    }

    /// Exact `int w` over the real line.
    pub fn integral(&self) -> f64 {
        match self {
            ProfileShape::Zero => 0.0,
            ProfileShape::Gaussian { strength, sigma } => strength * sigma * (2.0 * PI).sqrt(),
            ProfileShape::Box { height, width } => height * width,
            ProfileShape::Cosine { height, radius } => height * radius,
            ProfileShape::Tabulated { x, w } => {
                2.0 * x
                    .windows(2)
                    .zip(w.windows(2))
                    .map(|(xs, ws)| 0.5 * (ws[0] + ws[1]) * (xs[1] - xs[0]))
                    .sum::<f64>()
            }
        }
    }

    /// Half-width of the region that carries the bulk of the profile.
    pub fn support_radius(&self) -> f64 {
        match self {
            ProfileShape::Zero => f64::INFINITY,
            ProfileShape::Gaussian { sigma, .. } => *sigma,
            ProfileShape::Box { width, .. } => 0.5 * width,
            ProfileShape::Cosine { radius, .. } => *radius,
            ProfileShape::Tabulated { x, .. } => x[x.len() - 1],
        }
    }
}

/// Base profile together with its `N`-dependent scaling `N^a w(N^b x)`.
///
/// The default exponents are `a = b = beta`, the mass-preserving 1D analogue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionProfile {
    pub shape: ProfileShape,
    pub beta: f64,
    pub particles: usize,
    /// Overrides `(a, b)`.
    pub exponents: Option<(f64, f64)>,
    pub renormalize: bool,
}

impl InteractionProfile {
    pub fn new(shape: ProfileShape, beta: f64, particles: usize) -> Self {
        Self { shape, beta, particles, exponents: None, renormalize: false }
    }

    pub fn exponents(&self) -> (f64, f64) {
        self.exponents.unwrap_or((self.beta, self.beta))
    }

    /// `(N^a, N^b)`
    pub fn scale_factors(&self) -> (f64, f64) {
        let (a, b) = self.exponents();
        let n = self.particles as f64;
        (n.powf(a), n.powf(b))
    }

    pub fn eval_scaled(&self, x: f64) -> f64 {
        let (amp, arg) = self.scale_factors();
        amp * self.shape.eval(arg * x)
    }

    pub fn is_zero(&self) -> bool {
        match &self.shape {
            ProfileShape::Zero => true,
            ProfileShape::Gaussian { strength, .. } => *strength == 0.0,
            ProfileShape::Box { height, .. } | ProfileShape::Cosine { height, .. } => *height == 0.0,
            ProfileShape::Tabulated { w, .. } => w.iter().all(|&v| v == 0.0),
        }
    }
}

/// Sampled `w_N` plus any resolution warnings raised while sampling.
#[derive(Clone, Debug)]
pub struct ScaledPotential {
    pub values: GridFunction,
    pub warnings: Vec<String>,
}

/// Samples `w_N(x) = N^a w(N^b x)` at the minimal-image node offsets.
pub fn scaled_potential(profile: &InteractionProfile, grid: &GridSpec) -> Result<ScaledPotential> {
    profile.shape.validate()?;
    let mut warnings = Vec::new();
    let (_, arg) = profile.scale_factors();
    if !profile.is_zero() {
        let covered = 2.0 * profile.shape.support_radius() / arg / grid.dx();
        if covered < 4.0 {
            warnings.push(format!(
                "w_N under-resolved: effective support covers {covered:.2} grid points (< 4)"
            ));
        }
    }
    let mut samples: Vec<f64> =
        (0..grid.points()).map(|j| profile.eval_scaled(grid.minimal_image(j))).collect();
    if let Some(bad) = samples.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Internal(format!("scaled potential produced sample {bad}")));
    }
    if profile.renormalize && !profile.is_zero() {
        let dx = grid.dx();
        let target: f64 = (0..grid.points()).map(|j| profile.shape.eval(grid.minimal_image(j))).sum::<f64>() * dx;
        let mass: f64 = samples.iter().sum::<f64>() * dx;
        if mass > 0.0 {
            let s = target / mass;
            samples.iter_mut().for_each(|v| *v *= s);
        }
    }
    Ok(ScaledPotential { values: GridFunction::from_real(*grid, &samples)?, warnings })
}

/// `h_j = dx * sum_k f((j - k) mod M) g_k`
pub fn periodic_convolve(grid: &GridSpec, f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    grid.check_same(f.grid())?;
    grid.check_same(g.grid())?;
    let m = grid.points();
    let dx = grid.dx();
    let (fv, gv) = (f.values(), g.values());
    let out = DVector::from_fn(m, |j, _| {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..m {
            acc += fv[(j + m - k) % m] * gv[k];
        }
        acc * dx
    });
    GridFunction::new(*grid, out)
}

/// `Q = 1 - |u><u|`
pub fn orthogonal_projector(u: &GridFunction) -> Result<OneBodyOperator> {
    u.require_normalized("condensate")?;
    let c = u.modes();
    let m = c.len();
    let q = DMatrix::<C64>::identity(m, m) - &c * c.adjoint();
    Ok(OneBodyOperator::new_unchecked(*u.grid(), q, Role::Projector))
}

fn check_finite(m: &DMatrix<C64>) -> Result<()> {
    if m.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return invalid("operator has non-finite entries");
    }
    Ok(())
}

/// Sum of singular values.
pub fn trace_norm_matrix(m: &DMatrix<C64>) -> Result<f64> {
    check_finite(m)?;
    if m.is_empty() {
        return Ok(0.0);
    }
    Ok(m.clone().singular_values().iter().sum())
}

pub fn hs_norm_matrix(m: &DMatrix<C64>) -> Result<f64> {
    check_finite(m)?;
    Ok(m.norm())
}

pub fn trace_norm(op: &OneBodyOperator) -> Result<f64> {
    trace_norm_matrix(op.matrix())
}

pub fn hs_norm(op: &OneBodyOperator) -> Result<f64> {
    hs_norm_matrix(op.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn grid_examples() {
        let g = build_grid(2.0 * PI, 4).unwrap();
        assert_abs_diff_eq!(g.dx(), PI / 2.0);
        let nodes = g.nodes();
        for (j, want) in [0.0, PI / 2.0, PI, 1.5 * PI].iter().enumerate() {
            assert_abs_diff_eq!(nodes[j], *want, epsilon = 1e-15);
        }
        let g = build_grid(1.0, 2).unwrap();
        assert_eq!(g.nodes(), vec![0.0, 0.5]);
        let g = build_grid(2.0 * PI, 64).unwrap();
        assert_abs_diff_eq!(g.dx() * 64.0, 2.0 * PI, epsilon = 1e-15);
        assert!(g.nodes().windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn grid_rejects_bad_arguments() {
        assert!(matches!(build_grid(0.0, 4), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_grid(-1.0, 4), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_grid(1.0, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn laplacian_plane_wave_eigenvalues() {
        let g = build_grid(2.0 * PI, 16).unwrap();
        let lap = laplacian_operator(&g);
        let cst = GridFunction::constant(g);
        assert!(lap.apply(&cst).unwrap().norm() < 1e-12);
        for (n, want) in [(1, 1.0), (3, 9.0), (-5, 25.0), (-8, 64.0)] {
            let pw = GridFunction::plane_wave(g, n);
            let rq = lap.expectation(&pw).unwrap();
            assert_abs_diff_eq!(rq, want, epsilon = 1e-10);
            let resid = lap.apply(&pw).unwrap().values() - pw.values().scale(want);
            assert!(resid.norm() < 1e-10);
        }
    }

    #[test]
    fn laplacian_commutes_with_translation() {
        let g = build_grid(3.0, 12).unwrap();
        let lap = laplacian_operator(&g);
        let m = g.points();
        let t = DMatrix::<C64>::from_fn(m, m, |j, k| if (k + 1) % m == j { c(1.0) } else { c(0.0) });
        let comm = lap.matrix() * &t - &t * lap.matrix();
        assert!(comm.norm() < 1e-10);
    }

    #[test]
    fn scaled_potential_examples() {
        let g = build_grid(2.0 * PI, 64).unwrap();
        let shape = ProfileShape::Gaussian { strength: 1.0, sigma: 0.5 };
        let p0 = InteractionProfile::new(shape.clone(), 0.0, 37);
        let w0 = scaled_potential(&p0, &g).unwrap();
        for j in 0..64 {
            assert_eq!(w0.values.values()[j].re, shape.eval(g.minimal_image(j)));
        }
        let p = InteractionProfile::new(shape.clone(), 0.3, 64);
        let w = scaled_potential(&p, &g).unwrap();
        assert_abs_diff_eq!(w.values.values()[0].re, 64f64.powf(0.3), epsilon = 1e-12);
        let mass: f64 = w.values.values().iter().map(|v| v.re).sum::<f64>() * g.dx();
        assert!((mass - shape.integral()).abs() / shape.integral() < 0.02);

        let boxed = ProfileShape::Box { height: 1.0, width: 0.5 };
        let p = InteractionProfile::new(boxed, 0.25, 16);
        assert_abs_diff_eq!(p.eval_scaled(0.0), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.eval_scaled(0.124), 2.0, epsilon = 1e-14);
        assert_eq!(p.eval_scaled(0.126), 0.0);
    }

    #[test]
    fn scaled_potential_warns_when_under_resolved() {
        let g = build_grid(2.0 * PI, 16).unwrap();
        let p = InteractionProfile::new(ProfileShape::Box { height: 1.0, width: 0.5 }, 0.45, 100);
        let w = scaled_potential(&p, &g).unwrap();
        assert_eq!(w.warnings.len(), 1);
    }

    #[test]
    fn renormalized_mass_matches_unscaled_quadrature() {
        let g = build_grid(2.0 * PI, 128).unwrap();
        let shape = ProfileShape::Cosine { height: 2.0, radius: 0.8 };
        let mut p = InteractionProfile::new(shape.clone(), 0.4, 50);
        p.renormalize = true;
        let w = scaled_potential(&p, &g).unwrap();
        let mass: f64 = w.values.values().iter().map(|v| v.re).sum::<f64>() * g.dx();
        let target: f64 = (0..128).map(|j| shape.eval(g.minimal_image(j))).sum::<f64>() * g.dx();
        assert_abs_diff_eq!(mass, target, epsilon = 1e-12);
    }

    #[test]
    fn tabulated_profile_interpolates() {
        let shape = ProfileShape::Tabulated { x: vec![0.0, 1.0, 2.0], w: vec![2.0, 1.0, 0.0] };
        shape.validate().unwrap();
        assert_abs_diff_eq!(shape.eval(0.5), 1.5);
        assert_abs_diff_eq!(shape.eval(-1.5), 0.5);
        assert_eq!(shape.eval(3.0), 0.0);
        assert_abs_diff_eq!(shape.integral(), 4.0);
    }

    #[test]
    fn convolution_examples() {
        let g = build_grid(2.0 * PI, 32).unwrap();
        let f = GridFunction::from_fn(g, |x| C64::new(x.sin() + 0.3, x.cos()));
        let mut delta = GridFunction::zeros(g);
        delta.values_mut()[5] = c(1.0 / g.dx());
        let h = periodic_convolve(&g, &f, &delta).unwrap();
        for j in 0..32 {
            assert!((h.values()[j] - f.values()[(j + 32 - 5) % 32]).norm() < 1e-12);
        }
        let w = scaled_potential(
            &InteractionProfile::new(ProfileShape::Gaussian { strength: 1.0, sigma: 0.4 }, 0.0, 2),
            &g,
        )
        .unwrap()
        .values;
        let s: C64 = w.values().sum() * g.dx();
        let cst = GridFunction::from_fn(g, |_| c(2.5));
        let h = periodic_convolve(&g, &w, &cst).unwrap();
        for v in h.values().iter() {
            assert!((v - s * 2.5).norm() < 1e-12);
        }
    }

    #[test]
    fn convolution_rejects_grid_mismatch() {
        let g1 = build_grid(1.0, 8).unwrap();
        let g2 = build_grid(1.0, 9).unwrap();
        let r = periodic_convolve(&g1, &GridFunction::zeros(g1), &GridFunction::zeros(g2));
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn projector_examples() {
        let g = build_grid(1.0, 6).unwrap();
        let mut e0 = GridFunction::zeros(g);
        e0.values_mut()[0] = c(1.0 / g.dx().sqrt());
        let q = orthogonal_projector(&e0).unwrap();
        let want = DMatrix::<C64>::from_fn(6, 6, |j, k| if j == k && j > 0 { c(1.0) } else { c(0.0) });
        assert!((q.matrix() - want).norm() < 1e-15);

        let u = GridFunction::gaussian(g, 0.3, 0.2, 4.0);
        let q = orthogonal_projector(&u).unwrap();
        assert!(q.apply(&u).unwrap().norm() < 1e-10);
        assert!(hermitian_defect(q.matrix()) < 1e-10);
        assert!(max_abs(&(q.matrix() * q.matrix() - q.matrix())) < 1e-10);
        let rank: f64 = q.matrix().trace().re;
        assert_abs_diff_eq!(rank, 5.0, epsilon = 1e-12);

        // Gram-Schmidt a second function against u.
        let raw = GridFunction::from_fn(g, |x| C64::new((3.0 * x).cos(), x));
        let proj = u.inner(&raw);
        let v = GridFunction::new(g, raw.values() - u.values() * proj).unwrap().normalized().unwrap();
        let qv = q.apply(&v).unwrap();
        assert!((qv.values() - v.values()).norm() * g.dx().sqrt() < 1e-10);

        let bad = GridFunction::from_fn(g, |_| c(3.0));
        assert!(orthogonal_projector(&bad).is_err());
    }

    #[test]
    fn norm_examples() {
        let g = build_grid(1.0, 2).unwrap();
        let z = OneBodyOperator::new(g, DMatrix::zeros(2, 2), Role::Generic).unwrap();
        assert_eq!(trace_norm(&z).unwrap(), 0.0);
        assert_eq!(hs_norm(&z).unwrap(), 0.0);
        let d = OneBodyOperator::new(g, DMatrix::from_diagonal(&DVector::from_vec(vec![c(3.0), c(-4.0)])), Role::Hermitian)
            .unwrap();
        assert_abs_diff_eq!(trace_norm(&d).unwrap(), 7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hs_norm(&d).unwrap(), 5.0, epsilon = 1e-12);
        let g6 = build_grid(1.0, 6).unwrap();
        let u = GridFunction::gaussian(g6, 0.5, 0.1, 0.0);
        let cm = u.modes();
        let p = &cm * cm.adjoint();
        assert_abs_diff_eq!(trace_norm_matrix(&p).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hs_norm_matrix(&p).unwrap(), 1.0, epsilon = 1e-12);
        let mut nan = p.clone();
        nan[(0, 0)] = C64::new(f64::NAN, 0.0);
        assert!(trace_norm_matrix(&nan).is_err());
    }

    #[test]
    fn role_validation() {
        let g = build_grid(1.0, 2).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0), C64::new(0.0, 1.0), c(0.0), c(1.0)]);
        assert!(OneBodyOperator::new(g, m, Role::Hermitian).is_err());
        let neg = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(-0.1)]));
        assert!(OneBodyOperator::new(g, neg.clone(), Role::Hermitian).is_ok());
        assert!(OneBodyOperator::new(g, neg, Role::Psd).is_err());
    }
}
