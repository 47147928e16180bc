//! Nonradial stellar pulsation in the Eisenfeld–Smeyers form, its Cowling
//! (residual) approximation, and the integro-differential reformulation that
//! couples them through a Green's kernel.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: coefficient profiles ρ, c, g, N² on `[a, b]` and the two presets.
//! - [`systems`]: the 4×4 full matrix, the 2×2 residual block, the LW form.
//! - [`propagate`]: log-scaled adaptive Runge–Kutta, quadrature grids, norms.
//! - [`asymptotics`]: closed-form leading-order fundamental matrices.
//! - [`bvp`]: multiple shooting, multi-point determinants, Prüfer eigenvalues.
//! - [`greens`]: Green's matrix, scalar kernel `F` and its symmetric part.
//! - [`cowling`]: coupled solves by two routes, moduli, rate fits, sharp oracles.
//! - [`cli`]: run configuration and the report writers behind the `cowling` binary.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod bvp;
pub mod cli;
pub mod cowling;
mod error;
pub mod greens;
pub mod model;
pub mod propagate;
pub mod systems;

pub use error::{Error, Result};
