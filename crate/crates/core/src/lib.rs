//! Numerical core for minimal-mass blow-up of the mass-critical nonlinear
//! Schrödinger equation with a Riesz (Hartree) perturbation.
//!
//! Everything here works on radial grids and needs only `alloc`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::excessive_precision)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod banded;
pub mod error;
pub mod ground_state;
pub mod hartree;
pub mod law;
pub mod modulation;
pub mod profile;
pub mod quad;
pub mod radial;
pub mod special;

pub use error::{Error, Result};
