//! Hitting-time discretization of stochastic integrals driven by pure-jump
//! processes.
//!
//! The crate is organised bottom-up:
//!
//! * [`stable`]: the strictly α-stable limit process and its exit functionals;
//! * [`market`]: exponential Lévy asset models and the integrands to discretize;
//! * [`path`]: jump-adapted path simulation with reproducible streams;
//! * [`discretizer`]: hitting-time rules and the error / cost estimators;
//! * [`optimizer`]: asymptotically optimal barriers;
//! * [`experiment`]: config-driven studies behind the `jumphedge` CLI.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discretizer;
pub mod error;
pub mod experiment;
pub mod fit;
pub mod market;
pub mod montecarlo;
pub mod optimizer;
pub mod path;
pub mod quadrature;
pub mod rng;
pub mod stable;

pub use error::{Error, Result};
