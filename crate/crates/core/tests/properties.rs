use std::f64::consts::PI;

use bogolab::embedding::Embedder;
use bogolab::fock::{apply_quadratic, evolve_fock_with, wick_defect, Cap, FockBasis, FockOptions, FockVector};
use bogolab::harness::fit_powerlaw;
use bogolab::hartree::{evolve_hartree_with, HartreeOptions};
use bogolab::lattice::{
    build_grid, periodic_convolve, scaled_potential, GridFunction, GridSpec, InteractionProfile, ProfileShape,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<C64> {
    DVector::from_fn(n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> DVector<C64> {
    let v = random_vector(rng, n);
    v.unscale(v.norm())
}

fn coupled_setup(points: usize, strength: f64) -> (GridSpec, GridFunction, GridFunction) {
    let grid = build_grid(2.0 * PI, points).unwrap();
    let profile = InteractionProfile::new(ProfileShape::Gaussian { strength, sigma: 0.8 }, 0.0, 4);
    let wn = scaled_potential(&profile, &grid).unwrap().values;
    (grid, GridFunction::gaussian(grid, PI, 1.0, 1.0), wn)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn convolution_matches_direct_sum_and_commutes(m in 3usize..24, seed in any::<u64>()) {
        let grid = build_grid(3.0, m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = GridFunction::new(grid, random_vector(&mut rng, m)).unwrap();
        let g = GridFunction::new(grid, random_vector(&mut rng, m)).unwrap();
        let fg = periodic_convolve(&grid, &f, &g).unwrap();
        let gf = periodic_convolve(&grid, &g, &f).unwrap();
        for j in 0..m {
            let direct: C64 = (0..m).map(|k| f.values()[(j + m - k) % m] * g.values()[k]).sum::<C64>() * grid.dx();
            prop_assert!((fg.values()[j] - direct).norm() <= 1e-12 * (1.0 + direct.norm()));
            prop_assert!((fg.values()[j] - gf.values()[j]).norm() <= 1e-12);
        }
    }

    #[test]
    fn decompose_then_embed_is_identity(m in 3usize..6, n in 2usize..5, seed in any::<u64>()) {
        let grid = build_grid(2.0 * PI, m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = GridFunction::from_modes(grid, &random_unit(&mut rng, m)).unwrap();
        let e = Embedder::new(m, n).unwrap();
        let psi = FockVector::new(e.sector_basis().clone(), random_unit(&mut rng, e.sector_basis().dim())).unwrap();
        let phi = e.decompose(&psi, &u).unwrap();
        prop_assert!((phi.norm() - 1.0).abs() <= 1e-10);
        let back = e.embed(&u, &phi).unwrap();
        prop_assert!(back.projection_loss.abs() <= 1e-10);
        prop_assert!((&back.state.coeffs - &psi.coeffs).norm() <= 1e-10);
    }

    #[test]
    fn quadratic_hamiltonian_is_symmetric_below_the_cap(m in 2usize..5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(m, m, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let h = &a + a.adjoint();
        let b = DMatrix::from_fn(m, m, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let k2 = &b + b.transpose();
        let basis = FockBasis::new(m, Cap::MaxTotal(6)).unwrap();
        // Supported in sectors <= 4, so pair creation never crosses the cap.
        let mask = |v: DVector<C64>| DVector::from_fn(v.len(), |s, _| if basis.total(s) <= 4 { v[s] } else { C64::new(0.0, 0.0) });
        let x = FockVector::new(basis.clone(), mask(random_vector(&mut rng, basis.dim()))).unwrap();
        let y = FockVector::new(basis.clone(), mask(random_vector(&mut rng, basis.dim()))).unwrap();
        let hx = apply_quadratic(&h, &k2, &x).unwrap();
        let hy = apply_quadratic(&h, &k2, &y).unwrap();
        prop_assert!(hx.leakage.abs() <= 1e-12 && hy.leakage.abs() <= 1e-12);
        let lhs = y.coeffs.dotc(&hx.result.coeffs);
        let rhs = hy.result.coeffs.dotc(&x.coeffs);
        prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + lhs.norm()));
    }

    #[test]
    fn powerlaw_fit_recovers_synthetic_exponent(p in -2.0f64..1.0, c in 0.1f64..10.0) {
        let pts: Vec<(f64, f64)> = [3.0f64, 4.0, 5.0, 6.0, 9.0].iter().map(|&n| (n, c * n.powf(p))).collect();
        let fit = fit_powerlaw(&pts).unwrap();
        prop_assert!((fit.slope - p).abs() <= 1e-10);
        prop_assert!(fit.residual <= 1e-10);
    }
}

#[test]
fn fit_examples() {
    let fit = fit_powerlaw(&[(2.0, 2f64.powf(-0.5)), (4.0, 0.5), (8.0, 8f64.powf(-0.5))]).unwrap();
    assert!((fit.slope + 0.5).abs() < 1e-12 && fit.residual < 1e-12);
    let flat = fit_powerlaw(&[(2.0, 3.0), (5.0, 3.0), (7.0, 3.0)]).unwrap();
    assert!(flat.slope.abs() < 1e-12);
}

#[test]
fn hartree_is_gauge_covariant() {
    let (_, u0, wn) = coupled_setup(32, 1.0);
    let phase = C64::from_polar(1.0, 0.7);
    let rotated = GridFunction::new(*u0.grid(), u0.values() * phase).unwrap();
    let opts = HartreeOptions::new(1.0, 1e-3);
    let a = evolve_hartree_with(&u0, &wn, &opts).unwrap();
    let b = evolve_hartree_with(&rotated, &wn, &opts).unwrap();
    let diff = (a.final_state().values() * phase - b.final_state().values()).norm();
    assert!(diff < 1e-12, "gauge defect {diff:e}");
}

#[test]
fn hartree_self_converges_at_second_order() {
    let grid = build_grid(4.0, 32).unwrap();
    let profile = InteractionProfile::new(ProfileShape::Cosine { height: 3.0, radius: 1.0 }, 0.0, 4);
    let wn = scaled_potential(&profile, &grid).unwrap().values;
    let u0 = GridFunction::gaussian(grid, 2.0, 0.6, -2.0);
    let run = |dt: f64| evolve_hartree_with(&u0, &wn, &HartreeOptions::new(1.0, dt)).unwrap().final_state().values().clone();
    let (a, b, c) = (run(0.01), run(0.005), run(0.0025));
    let ratio = (&a - &b).norm() / (&b - &c).norm();
    assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
}

#[test]
fn fock_integrator_is_fourth_order() {
    let (_, u0, wn) = coupled_setup(4, 2.0);
    let t = 0.4;
    let dt = 0.04;
    let traj = evolve_hartree_with(&u0, &wn, &HartreeOptions::new(t, dt / 8.0)).unwrap();
    let basis = FockBasis::new(4, Cap::MaxTotal(6)).unwrap();
    let phi0 = FockVector::vacuum(basis).unwrap();
    let run = |step: f64| {
        let mut o = FockOptions::new(step);
        o.leakage_limit = 1.0;
        evolve_fock_with(&phi0, &traj, &o).unwrap().final_sample().state.coeffs.clone()
    };
    let (a, b, c) = (run(dt), run(dt / 2.0), run(dt / 4.0));
    let ratio = (&a - &b).norm() / (&b - &c).norm();
    assert!((ratio - 16.0).abs() < 3.2, "ratio {ratio}");
}

#[test]
fn evolved_vacuum_stays_quasi_free() {
    let (_, u0, wn) = coupled_setup(5, 1.0);
    let dt = 1e-3;
    let traj = evolve_hartree_with(&u0, &wn, &HartreeOptions::new(0.5, dt / 2.0)).unwrap();
    let basis = FockBasis::new(5, Cap::MaxTotal(8)).unwrap();
    let mut o = FockOptions::new(dt);
    o.stride = 100;
    let fock = evolve_fock_with(&FockVector::vacuum(basis).unwrap(), &traj, &o).unwrap();
    for s in &fock.samples {
        let w = wick_defect(&s.state).unwrap();
        assert!(w.defect <= 1e-6 + s.leakage.sqrt(), "t = {}: Wick defect {:e}", s.time, w.defect);
    }
}
