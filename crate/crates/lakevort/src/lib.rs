//! Steady and rotating vortex pairs in lakes, computed by energy maximization
//! over rearrangement classes.
//!
//! A *lake* is a planar domain together with a depth field `b ≥ 0`; the flow
//! is governed by the lake equations, which reduce to the 2-D Euler equations
//! when `b ≡ 1`. This crate discretizes lakes on masked uniform grids,
//! assembles the weighted elliptic operator `-div(b⁻¹∇·)`, and constructs
//! vortex pairs as maximizers of the kinetic energy over classes of
//! `dμ`-rearrangements (`dμ = b dm`). Closed-form predictors locate the
//! asymptotic concentration points of the pair, and diagnostics measure how
//! well computed maximizers track them.
//!
//! Module map:
//! - [`geometry`]: masked grids, depth fields, example lakes, `μ`-quadrature
//! - [`elliptic`]: the weighted operator, harmonic basis, circulation matrix,
//!   and the solution operators for the stream function
//! - [`green`]: disk Green's function, the remainder field of the expansion
//!   `Kζ + Hζ = b∫gζ dμ + ∫Rζ dμ`, and its verification
//! - [`rearrange`]: rearrangement classes, bathtub best-response ascent
//! - [`asymptotics`]: concentration predictors, rotating-pair radii,
//!   Richardson drift, concentration diagnostics
//! - [`config`] and [`commands`]: the config-driven CLI harness

pub mod asymptotics;
pub mod commands;
pub mod config;
pub mod elliptic;
mod error;
pub mod geometry;
pub mod green;
pub mod rearrange;

pub use error::{Error, Result};
