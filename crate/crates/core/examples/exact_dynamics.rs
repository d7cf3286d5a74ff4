//! Exact `N`-body evolution in a fixed-particle-number basis with a Krylov
//! propagator, and the condensate fraction of the one-body density matrix.

use std::f64::consts::PI;

use bogolab::embedding::embed;
use bogolab::fock::{build_hn_exact, evolve_exact_with, one_body_reduced, Cap, ExactOptions, FockBasis, FockVector};
use bogolab::lattice::{build_grid, GridFunction, InteractionProfile, ProfileShape};

fn main() -> bogolab::Result<()> {
    let n = 3;
    let grid = build_grid(2.0 * PI, 12)?;
    let profile = InteractionProfile::new(ProfileShape::Gaussian { strength: 2.0, sigma: 0.5 }, 0.0, n);
    let h = build_hn_exact(n, &profile, &grid)?;
    println!("H_N: dimension {}, {} stored entries, hermitian defect {:.1e}", h.dim(), h.nnz(), h.hermitian_defect());

    // Start from the pure condensate u0^{(x) N}.
    let u0 = GridFunction::gaussian(grid, PI, 1.0, 1.0);
    let psi0 = embed(&u0, &FockVector::vacuum(FockBasis::new(12, Cap::MaxTotal(n))?)?, n)?.state.normalized()?;
    let mut opts = ExactOptions::new(1.0, 1e-2);
    opts.stride = 20;
    let traj = evolve_exact_with(&psi0, &h, &opts)?;
    println!("{:>6} {:>14} {:>12} {:>20}", "t", "energy", "norm - 1", "top eigenvalue / N");
    for s in &traj.samples {
        let gamma = one_body_reduced(&s.state, &grid)?;
        let top = gamma.matrix().clone().symmetric_eigen().eigenvalues.max();
        println!("{:>6.2} {:>14.10} {:>12.2e} {:>20.10}", s.time, s.energy, s.norm - 1.0, top / n as f64);
    }
    println!("relative energy drift {:.2e}, step splits {}", traj.relative_energy_drift(), traj.fallbacks);
    Ok(())
}
