//! Affine coherent state quantization of the half-plane `{(p, q) : q > 0}`
//! under arbitrary parametrizations of the affine group.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affine;
pub mod analysis;
pub mod cli;
pub mod error;
pub mod expr;
pub mod fiducial;
pub mod hilbert;
pub mod quantizer;
pub mod quadrature;

pub use error::{Error, Result};
