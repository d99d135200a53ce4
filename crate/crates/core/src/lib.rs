//! Numerical toolkit for a two-phase compressible fluid model with capillarity.
//!
//! * [`closure`]: pressure-equilibrium closure and linearization constants.
//! * [`lp_besov`]: Littlewood-Paley blocks, Besov and Chemin-Lerner norms.
//! * [`linear_green`]: Green matrices, per-mode propagators and decay quadrature.
//! * [`solver`]: pseudo-spectral exponential integrator for the nonlinear system.
//! * [`decay`]: time-weighted functionals and decay-rate fits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closure;
pub mod decay;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod linear_green;
pub mod lp_besov;
pub mod ode;
pub mod quad;
pub mod solver;

pub use error::{Error, ErrorClass, Result};
