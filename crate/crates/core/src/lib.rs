pub mod embedding;
pub mod error;
pub mod fock;
pub mod harness;
pub mod hartree;
pub mod lattice;
pub mod pairdyn;

pub use error::{Error, Result};
