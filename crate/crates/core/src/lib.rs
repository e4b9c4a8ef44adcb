//! Multi-target tracking on sets of two-time-step trajectory measurements.
//!
//! This crate implements Gaussian Poisson multi-Bernoulli mixture (PMBM) and
//! Poisson multi-Bernoulli (PMB) filters that consume *trajectory measurements*:
//! sensor outputs that span a two-step time window and contain a detection at
//! the window start, at the window end, or at both ends. The trajectory
//! measurement filters (TM-PMBM, TM-PMB) propagate a PMBM density over the set
//! of target states by predicting onto two-step trajectories, updating with
//! the trajectory measurements, and marginalising back to target states at the
//! window end.
//!
//! Point-measurement PMBM/PMB baselines, a scenario simulator, Murty k-best
//! data association, the GOSPA metric, and a Monte-Carlo benchmark harness are
//! included so the filters can be compared end to end.
//!
//! Modules roughly follow the processing pipeline:
//!
//! - [`gaussian`]: linear-Gaussian primitives (density evaluation, Kalman
//!   update, two-step joint prediction, block marginalisation)
//! - [`trajectory`]: two-step trajectory and trajectory-measurement value types
//! - [`models`]: motion, birth, measurement-likelihood and clutter models
//! - [`pmbm`]: PMBM state representation, pruning, estimation, PMB reduction
//! - [`assoc`]: ellipsoidal gating and Murty k-best assignment
//! - [`filter`]: the TM-PMBM/TM-PMB recursion (predict, update, marginalise)
//! - [`baseline`]: point-measurement PMBM/PMB built on the same engine
//! - [`gospa`]: GOSPA metric with localisation/missed/false decomposition
//! - [`sim`]: ground-truth generation and measurement synthesis
//! - [`experiment`]: Monte-Carlo experiment execution
//! - [`config`]: experiment configuration files
//! - [`report`]: CSV emission with stable schemas
//! - [`validate`]: built-in oracle suites for the CLI

pub mod assoc;
pub mod baseline;
pub mod config;
pub mod error;
pub mod experiment;
pub mod filter;
pub mod gaussian;
pub mod gospa;
pub mod models;
pub mod pmbm;
pub mod report;
pub mod sim;
pub mod trajectory;
pub mod validate;

pub use error::{Error, Result};
