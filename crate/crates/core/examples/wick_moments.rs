//! Wick's theorem on truncated Fock vectors: four-point defects and the
//! quasi-free closed form for the second moment of the number operator.

use std::f64::consts::PI;

use bogolab::fock::{
    covariance_of, evolve_fock, quasifree_number_second_moment, squeezed_vacuum, wick_defect, Cap, FockBasis, FockVector,
};
use bogolab::hartree::{evolve_hartree_with, HartreeOptions};
use bogolab::lattice::{build_grid, scaled_potential, GridFunction, InteractionProfile, ProfileShape};

fn main() -> bogolab::Result<()> {
    let grid = build_grid(2.0 * PI, 6)?;
    let profile = InteractionProfile::new(ProfileShape::Gaussian { strength: 1.0, sigma: 0.8 }, 0.0, 4);
    let wn = scaled_potential(&profile, &grid)?.values;
    let traj = evolve_hartree_with(&GridFunction::gaussian(grid, PI, 1.0, 1.0), &wn, &HartreeOptions::new(0.5, 5e-4))?;
    let basis = FockBasis::new(6, Cap::MaxTotal(10))?;
    let modes = vec![(GridFunction::plane_wave(grid, 2).modes(), 0.2)];
    let (sq, _) = squeezed_vacuum(&basis, &modes)?;

    for (label, phi0) in [("vacuum", FockVector::vacuum(basis.clone())?), ("squeezed", sq)] {
        let fock = evolve_fock(&phi0, &traj, 1e-3)?;
        for s in fock.samples.iter().step_by(25) {
            let (g, a) = covariance_of(&s.state)?;
            let w = wick_defect(&s.state)?;
            println!(
                "{label:>8} t = {:.3}: <N^2> direct {:.10}, quasi-free {:.10}, Wick defect {:.1e}, moment ratio {:.4}",
                s.time,
                s.state.number_second_moment(),
                quasifree_number_second_moment(&g, &a),
                w.defect,
                w.moment_ratio
            );
        }
    }

    // A number state is not quasi-free: the Wick check exposes it.
    let two = FockVector::number_state(basis.clone(), &[0, 2, 0, 0, 0, 0])?;
    println!("two-particle number state: Wick defect {:.3}", wick_defect(&two)?.defect);
    Ok(())
}
