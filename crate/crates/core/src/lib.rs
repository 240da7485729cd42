//! Finite-difference laboratory for the translating-soliton Monge-Ampère
//! equation `det D²u = exp(-a·Du + b·x + c)` and the logarithmic
//! Monge-Ampère flow `∂u/∂t = ν ln det D²u`.
//!
//! - [`grid`]: box and torus grids, centered differences up to third order,
//!   eigenvalue fields, multilinear interpolation.
//! - [`soliton`]: equation parameters, exact quadratic solitons, residuals and
//!   rigidity diagnostics.
//! - [`flow`]: explicit time stepping of the flow, translating-frame
//!   verification, derivative-decay experiment.
//! - [`legendre`]: discrete Legendre transform and duality checks.
//! - [`ode1d`]: the one-dimensional soliton ODE.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod flow;
pub mod grid;
pub mod legendre;
pub mod linalg;
pub mod ode1d;
pub mod soliton;

pub use error::{Error, Result};
