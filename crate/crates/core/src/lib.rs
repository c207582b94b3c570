//! Numerics for radial Schrödinger maximal estimates: Bessel asymptotics,
//! oscillatory integrals, phase functions, discretized operator pieces, and
//! maximal-function probes.

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod bessel;
pub mod cli;
pub mod error;
pub mod frozen;
pub mod maximal;
pub mod operators;
pub mod oscillatory;
pub mod phase;
pub mod quadrature;
pub mod report;
pub mod sweeps;

pub use error::{Error, Result};
pub use num_complex::Complex64;
