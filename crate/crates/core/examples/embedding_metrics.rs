//! Excitation map between an `N`-boson state and its excitation vector
//! relative to a condensate, and the condensation metrics of the one-body
//! density matrix.

use std::f64::consts::PI;

use bogolab::embedding::{condensation_metrics, triangle_bound, Embedder};
use bogolab::fock::{one_body_reduced, squeezed_vacuum, Cap, FockBasis};
use bogolab::lattice::{build_grid, GridFunction};

fn main() -> bogolab::Result<()> {
    let (m, n) = (8, 4);
    let grid = build_grid(2.0 * PI, m)?;
    let u = GridFunction::gaussian(grid, PI, 1.2, 1.0);
    let embedder = Embedder::new(m, n)?;

    // A squeezed excitation vector on two modes orthogonal to u.
    let mut modes = Vec::new();
    for k in [1i64, 2] {
        let mut v = GridFunction::plane_wave(grid, k).modes();
        let c = u.modes();
        v -= &c * c.dotc(&v);
        for (w, _) in &modes {
            let w: &nalgebra::DVector<num_complex::Complex64> = w;
            v -= w * w.dotc(&v);
        }
        modes.push((v.unscale(v.norm()), 0.4));
    }
    let basis = FockBasis::new(m, Cap::MaxTotal(n))?;
    let (phi, lost) = squeezed_vacuum(&basis, &modes)?;
    println!("excitation vector: <N> = {:.5}, weight lost to the cap {lost:.2e}", phi.number_expectation());

    let embedded = embedder.embed(&u, &phi)?;
    println!("embedded: norm {:.12}, projection loss {:.1e}", embedded.state.norm(), embedded.projection_loss);
    let back = embedder.decompose(&embedded.state, &u)?;
    let (back_small, _) = back.recap(&basis)?;
    println!("decompose(embed(phi)) - phi = {:.2e}", (&back_small.coeffs - &phi.coeffs).norm());

    let gamma = one_body_reduced(&embedded.state, &grid)?;
    let m1 = condensation_metrics(&gamma, &u, n)?;
    println!("depletion {:.6}, excitation number / N {:.6}", m1.depletion, back.number_expectation() / n as f64);
    println!(
        "trace distance {:.6}, weighted trace distance {:.6}, kinetic excitation {:.6}",
        m1.trace_distance, m1.weighted_trace_distance, m1.kinetic_excitation
    );
    let tb = triangle_bound(&gamma, &u, n)?;
    println!("weighted trace distance <= {:.6} (kinetic {:.6} + depletion {:.6} + cross {:.6})", tb.total(), tb.kinetic_term, tb.depletion_term, tb.cross_term);
    Ok(())
}
