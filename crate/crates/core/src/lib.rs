//! Outage analysis of two-user downlink NOMA with HARQ chase combining.
//!
//! Two independent routes to the same quantities:
//!
//! - [`analytic`]: Laplace-domain closed forms (Chebyshev quadrature,
//!   composition expansion, Gaver-Stehfest inversion) and Erlang CDFs.
//! - [`montecarlo`]: seeded, chunk-parallel simulation of the retransmission
//!   protocol itself.
//!
//! [`tradeoff`] holds the NOMA-vs-OMA decision rules and diversity-order
//! fits; [`experiments`] drives the figure sweeps behind the CLI.

// `!(x > 0.0)` is used on purpose throughout: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod experiments;
pub mod model;
pub mod montecarlo;
pub mod stream;
pub mod tradeoff;

pub use error::{Error, Result};
pub use model::{SystemConfig, SystemParams, User};
