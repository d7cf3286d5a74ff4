//! Split-step Hartree evolution of a moving gaussian condensate with
//! norm and energy bookkeeping.

use std::f64::consts::PI;

use bogolab::hartree::{evolve_hartree_with, HartreeOptions};
use bogolab::lattice::{build_grid, scaled_potential, GridFunction, InteractionProfile, ProfileShape};

fn main() -> bogolab::Result<()> {
    let grid = build_grid(2.0 * PI, 64)?;
    let profile = InteractionProfile::new(ProfileShape::Gaussian { strength: 1.0, sigma: 0.5 }, 0.0, 4);
    let wn = scaled_potential(&profile, &grid)?.values;
    let u0 = GridFunction::gaussian(grid, PI, 1.0, 1.0);
    let mut opts = HartreeOptions::new(2.0, 1e-3);
    opts.stride = 250;
    let traj = evolve_hartree_with(&u0, &wn, &opts)?;
    let energies = traj.energies()?;
    println!("{:>6} {:>14} {:>14} {:>10}", "t", "norm - 1", "energy", "mu");
    for ((t, u), (e, mu)) in traj.times.iter().zip(&traj.states).zip(energies.iter().zip(&traj.mu_values)) {
        println!("{t:>6.3} {:>14.3e} {e:>14.10} {mu:>10.5}", u.norm() - 1.0);
    }
    let out = std::env::temp_dir().join("bogolab_hartree.csv");
    traj.write_csv(std::fs::File::create(&out)?, "example")?;
    println!("trajectory written to {}", out.display());
    Ok(())
}
