//! Scaled interaction potentials `w_N(x) = N^{d beta} w(N^beta x)` on the torus
//! and the periodic convolution that builds the mean field.

use std::f64::consts::PI;

use bogolab::lattice::{build_grid, periodic_convolve, scaled_potential, GridFunction, InteractionProfile, ProfileShape};

fn main() -> bogolab::Result<()> {
    let grid = build_grid(2.0 * PI, 64)?;
    let shape = ProfileShape::Gaussian { strength: 1.0, sigma: 0.5 };
    println!("{:>6} {:>6} {:>12} {:>12}", "N", "beta", "w_N(0)", "sum w_N dx");
    for beta in [0.0, 0.2, 0.4] {
        for n in [4, 16, 64] {
            let wn = scaled_potential(&InteractionProfile::new(shape.clone(), beta, n), &grid)?;
            let total: f64 = wn.values.values().iter().map(|v| v.re).sum::<f64>() * grid.dx();
            println!("{n:>6} {beta:>6.1} {:>12.5} {:>12.5}", wn.values.values()[0].re, total);
            for w in &wn.warnings {
                println!("       warning: {w}");
            }
        }
    }

    let wn = scaled_potential(&InteractionProfile::new(shape, 0.0, 4), &grid)?.values;
    let u = GridFunction::gaussian(grid, PI, 0.7, 2.0);
    let field = periodic_convolve(&grid, &wn, &u.abs_squared())?;
    let peak = field.values().iter().map(|v| v.re).fold(f64::MIN, f64::max);
    println!("mean field w * |u|^2: peak {peak:.5}");
    Ok(())
}
