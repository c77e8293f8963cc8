//! Mixed-dimensional DC resistivity forward modelling and sensitivity
//! computation for ground volumes containing a thin resistive liner and
//! embedded line electrodes.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic;
pub mod cli;
pub mod dense;
pub mod error;
pub mod fvm;
pub mod greens;
pub mod io;
pub mod mesh;
pub mod scenario;
pub mod sensitivity;
pub mod sparse;
pub mod survey;

pub use error::{Error, Result};
