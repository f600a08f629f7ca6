//! Cartesian split-step evolution, experiments and file formats built on
//! `hartree-blowup-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod criteria;
pub mod convolution;
pub mod error;
pub mod experiments;
pub mod field;
pub mod io;
pub mod snapshot;
pub mod solver;

pub use error::{LabError, LabResult};
