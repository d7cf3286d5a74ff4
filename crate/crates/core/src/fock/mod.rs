//! Truncated Fock-space oracles: the quadratic Hamiltonian acting on excitation
//! vectors, exact `N`-body dynamics, and Wick checks.

pub mod basis;
pub mod dump;
pub mod exact;
pub mod krylov;
pub mod quadratic;
pub mod wick;

pub use basis::{basis_dimension, Cap, FockBasis, FockVector, DEFAULT_DIMENSION_CAP};
pub use dump::{read_snapshot, write_snapshot};
pub use exact::{build_from_matrices, build_hn_exact, build_hn_exact_with_limit, one_body_reduced, SparseHamiltonian};
pub use krylov::{evolve_exact, evolve_exact_with, krylov_step, krylov_step_to, ExactOptions, ExactSample, ExactTrajectory};
pub use quadratic::{
    annihilate, apply_dgamma, apply_quadratic, covariance_of, covariance_on, create, evolve_fock, evolve_fock_with,
    squeezed_vacuum, FockOptions, FockSample, FockTrajectory, QuadraticAction,
};
pub use wick::{
    quasifree_number_second_moment, quasifree_number_second_moment_enumerated, wick_defect, wick_defect_with,
    wick_expectation, Ladder, WickOptions, WickReport,
};
