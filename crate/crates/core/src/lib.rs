//! Viscous Cahn-Hilliard equation with inertia and a singular potential.
//!
//! The crate solves the Yosida-regularized system
//!
//! ```text
//! alpha u_tt + u_t + A w = 0
//! w = delta u_t + A u + beta_eps(u) - lambda u
//! ```
//!
//! with homogeneous Dirichlet conditions on the unit interval or square,
//! tracks its discrete energy ledger and a priori bounds, and drives the
//! `eps -> 0` limit through a ladder of runs.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod potential;
pub mod dynamics;
pub mod harness;
pub mod io;
pub mod spectral;
