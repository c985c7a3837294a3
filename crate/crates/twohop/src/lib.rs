//! Distributed hypothesis testing over a two-hop relay network under
//! expected-rate constraints.
//!
//! The crate has three layers:
//!
//! - [`probability`]: finite-alphabet pmfs, conditionals, information
//!   measures, empirical types and strong typicality tests.
//! - [`regions`]: fixed-rate optimal type-II error exponents and the
//!   expected-rate exponent regions, computed by constrained optimization
//!   over auxiliary channels, with Pareto frontier tracing and a
//!   brute-force verification oracle.
//! - [`sim`]: finite-blocklength Monte Carlo simulation of the basic
//!   two-hop coding scheme and its variable-length wrappers, with exact
//!   bit-string framing and expected-length accounting.
//!
//! All computations use base-2 logarithms; rates and exponents are in
//! bits per source symbol.

pub mod probability;
pub mod regions;
pub mod sim;

pub use probability::{ConditionalPmf, JointPmf, Pmf, ProbError, TwoHopSource};
