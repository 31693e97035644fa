//! Risk-aware routing of a sailboat towards a circular target under a
//! randomly drifting wind.
//!
//! The crate computes two feedback policies on an `(r, theta, tack)` grid:
//! the risk-neutral policy minimizing expected arrival time, and the
//! threshold-aware policy maximizing the probability of arriving before a
//! deadline. Both are evaluated by Monte Carlo simulation.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aware;
pub mod cli;
pub mod config;
pub mod error;
pub mod grid;
pub mod gridfile;
pub mod interp;
pub mod model;
pub mod neutral;
pub mod output;
pub mod quadrature;
mod scheme;
pub mod search;
pub mod simulate;
pub mod survival;

pub use aware::{solve_aware, solve_aware_into, AwareOptions, PolicyField, ValueField};
pub use error::{Error, Result};
pub use grid::{GridSpec, Rounding};
pub use model::{Action, ModelParams, PolarCurve, SimState, Tack, WindParams};
pub use neutral::{solve_neutral, NeutralField, NeutralOptions, Sweep};
