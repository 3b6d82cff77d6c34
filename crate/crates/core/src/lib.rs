//! Solver and verification kernels for the chemotaxis-consumption system
//!
//! ```text
//! u_t = Δu − χ∇·(u∇v),   v_t = Δv − uv     in Ω = [0,Lx]×[0,Ly],
//! ∇u·ν = ∇v·ν = 0                          on ∂Ω,
//! u(·,0) = u₀ ∈ M⁺(Ω̄),   v(·,0) = v₀ ≥ 0.
//! ```
//!
//! The crate provides a finite-volume discretization that conserves the mass
//! of `u` exactly, keeps both densities nonnegative, and never increases
//! `‖v‖_∞`, together with evaluators for the quantities controlled by the
//! a priori estimates of the continuous problem: the energy `∫u^p φ(v)` with
//! `φ(s) = exp((βs)²)`, its dissipation terms, time-weighted norms,
//! the cumulative taxis integral, and continuity moduli at `t = 0`.
//! A standalone scalar verifier certifies the closed-form smallness and
//! pointwise inequalities that drive the energy argument.
//!
//! The crate is `no_std` (with `alloc`); all I/O lives in the companion
//! command-line crate.

#![cfg_attr(not(test), no_std)]
// Validation guards are written `!(x > 0.0)` on purpose: the negation is
// true for NaN as well as for x ≤ 0, so corrupt inputs fail closed. The
// `partial_cmp` rewrite clippy suggests loses that property.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod estimate_verifier;
pub mod functionals;
pub mod grid_domain;
pub mod operators;
pub mod regularize;
pub mod solver;
pub mod stepper;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
