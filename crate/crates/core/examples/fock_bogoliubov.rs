//! Bogoliubov evolution in a truncated Fock space, checked against the pair
//! dynamics, with the truncation leakage bound and a binary snapshot round trip.

use std::f64::consts::PI;

use bogolab::fock::{covariance_of, evolve_fock, read_snapshot, write_snapshot, Cap, FockBasis, FockVector};
use bogolab::hartree::{evolve_hartree_with, HartreeOptions};
use bogolab::lattice::{build_grid, max_abs, scaled_potential, GridFunction, InteractionProfile, ProfileShape};
use bogolab::pairdyn::{evolve_pair, PairState};

fn main() -> bogolab::Result<()> {
    let grid = build_grid(2.0 * PI, 6)?;
    let profile = InteractionProfile::new(ProfileShape::Gaussian { strength: 1.0, sigma: 0.8 }, 0.0, 4);
    let wn = scaled_potential(&profile, &grid)?.values;
    let u0 = GridFunction::gaussian(grid, PI, 1.0, 1.0);
    let dt = 1e-3;
    let traj = evolve_hartree_with(&u0, &wn, &HartreeOptions::new(0.5, dt / 2.0))?;
    let pair = evolve_pair(&PairState::vacuum(grid), &traj, dt)?;

    for n_max in [2, 4, 6] {
        let basis = FockBasis::new(6, Cap::MaxTotal(n_max))?;
        let fock = evolve_fock(&FockVector::vacuum(basis)?, &traj, dt)?;
        let last = fock.final_sample();
        let (g, a) = covariance_of(&last.state)?;
        let p = pair.final_state();
        let mismatch = max_abs(&(&p.gamma - g)).max(max_abs(&(&p.alpha - a)));
        println!(
            "n_max = {n_max}: dim {:>5}, leakage bound {:.2e}, pair/Fock mismatch {mismatch:.2e}, sector weights {:?}",
            last.state.basis.dim(),
            last.leakage,
            last.state.sector_weights().iter().map(|(n, w)| format!("{n}:{w:.1e}")).collect::<Vec<_>>()
        );
    }

    let basis = FockBasis::new(6, Cap::MaxTotal(4))?;
    let phi = evolve_fock(&FockVector::vacuum(basis)?, &traj, dt)?.final_sample().state.clone();
    let mut bytes = Vec::new();
    write_snapshot(&mut bytes, &phi)?;
    let back = read_snapshot(bytes.as_slice())?;
    println!("snapshot: {} bytes, round-trip difference {:.1e}", bytes.len(), (&back.coeffs - &phi.coeffs).norm());
    Ok(())
}
