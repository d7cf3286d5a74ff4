//! Binary snapshots of Fock vectors.
//!
//! Layout, all little-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 4     | `u32` number of modes `M` |
//! | 1     | `u8` cap kind: 0 = max_total, 1 = fixed_total |
//! | 4     | `u32` cap value |
//! | 8     | `u64` coefficient count |
//! | 16 each | coefficient as `f64` real part, `f64` imaginary part |
//!
//! Coefficients follow the basis ordering documented in [`super::basis`].

use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use super::basis::{Cap, FockBasis, FockVector};
use crate::error::{Error, Result};

pub fn write_snapshot<W: Write>(mut out: W, phi: &FockVector) -> Result<()> {
    let (kind, value) = match phi.basis.cap() {
        Cap::MaxTotal(n) => (0u8, n),
        Cap::FixedTotal(n) => (1u8, n),
    };
    out.write_all(&(phi.basis.modes() as u32).to_le_bytes())?;
    out.write_all(&[kind])?;
    out.write_all(&(value as u32).to_le_bytes())?;
    out.write_all(&(phi.coeffs.len() as u64).to_le_bytes())?;
    for z in phi.coeffs.iter() {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut input: R) -> Result<FockVector> {
    let mut u32b = [0u8; 4];
    let mut u64b = [0u8; 8];
    let mut kind = [0u8; 1];
    input.read_exact(&mut u32b)?;
    let modes = u32::from_le_bytes(u32b) as usize;
    input.read_exact(&mut kind)?;
    input.read_exact(&mut u32b)?;
    let value = u32::from_le_bytes(u32b) as usize;
    input.read_exact(&mut u64b)?;
    let count = u64::from_le_bytes(u64b) as usize;
    let cap = match kind[0] {
        0 => Cap::MaxTotal(value),
        1 => Cap::FixedTotal(value),
        k => return Err(Error::InvalidArgument(format!("unknown cap kind {k} in snapshot"))),
    };
    let basis: Arc<FockBasis> = FockBasis::new(modes, cap)?;
    if basis.dim() != count {
        return Err(Error::InvalidArgument(format!(
            "snapshot holds {count} coefficients but the basis has {}",
            basis.dim()
        )));
    }
    let mut coeffs = DVector::zeros(count);
    for z in coeffs.iter_mut() {
        input.read_exact(&mut u64b)?;
        let re = f64::from_le_bytes(u64b);
        input.read_exact(&mut u64b)?;
        *z = C64::new(re, f64::from_le_bytes(u64b));
    }
    FockVector::new(basis, coeffs)
}
