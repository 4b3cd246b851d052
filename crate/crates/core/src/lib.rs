//! Jump-adapted Euler simulation of jump diffusions with Markovian switching.
//!
//! The crate simulates SDEs of the form
//!
//! ```text
//! dy(t) = b(y, r) dt + σ(y, r) dW(t) + ∫ g(y(t⁻), r, v) N(dt, dv)
//! ```
//!
//! where `r(t)` is a finite-state continuous-time Markov chain and `N` is a
//! compound Poisson random measure. Jump times are inserted into the
//! equidistant mesh so that no jump ever falls inside a step.
//!
//! Module map:
//! - [`ctmc`]: generator validation, transition matrices, regime sampling.
//! - [`grid`]: the jump-adapted time grid.
//! - [`drivers`]: reproducible random streams and per-trajectory noise.
//! - [`scheme`]: the Euler recursion over a [`drivers::DriverRealization`].
//! - [`models`]: geometric Lévy and insurance surplus models.
//! - [`analytic`]: closed-form expected ruin times for two regimes.
//! - [`mc`]: convergence and ruin studies, oracles, aggregation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod ctmc;
pub mod drivers;
mod error;
pub mod grid;
mod linalg;
pub mod mc;
pub mod models;
pub mod scheme;

pub use error::{Error, Result};
