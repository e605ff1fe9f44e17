//! Link-level simulator for MIMO interference broadcast channels.
//!
//! The crate models networks of multi-antenna transmitters, each serving its
//! own receivers over a shared band, and provides three iterative transceiver
//! designs: unconstrained weighted-MMSE sum-rate maximization, hard-QoS
//! enforcement via unbounded rate multipliers, and a penalized QoS-relaxation
//! scheme that jointly relaxes infeasible rate targets and deactivates links.
//!
//! Modules:
//! - [`model`] — domain types and closed-form signal math (SINR, rate, MMSE
//!   receivers, per-stream MSE).
//! - [`scenario`] — reproducible random drops: geometry, pathloss, Rayleigh
//!   fading, JSON fixtures.
//! - [`algorithms`] — the centralized reference solvers.
//! - [`runtime`] — decentralized message-passing execution of the same
//!   algorithm over forward/backward pilot phases and inter-TX signaling.
//! - [`metrics`] — QoS degradation statistics and empirical CDFs.
//! - [`mod@bench`] — Monte-Carlo campaign driver, CSV/JSON emission, CLI support.

// Validation guards use `!(x > 0.0)` so NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod bench;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod runtime;
pub mod scenario;

pub use error::{Error, Result};
