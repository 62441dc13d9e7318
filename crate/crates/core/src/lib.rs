//! Solver and Monte Carlo simulator for two-task Gaussian global games on
//! regular networks.
//!
//! Agents on a `K`-regular graph each observe noisy signals of two task
//! difficulties and pick one task; neighbors are paid for coordinating and
//! charged the difficulty of the task they took. The crate computes
//! neighbor-action beliefs under affine strategies, best-response switching
//! curves, the diffuse-prior equilibrium and data-driven affine equilibria,
//! and certifies candidate equilibria by simulating the game.
//!
//! * [`math`]: Gaussian CDF, posterior parameters, the shifted-CDF identity
//!   and its Monte Carlo oracle.
//! * [`policy`]: affine policies, beliefs, best-response margins and
//!   switching curves.
//! * [`equilibrium`]: the fixed-point iteration between switching curves and
//!   least-squares affine projections.
//! * [`graph`], [`simulation`]: circulant regular graphs, payoffs and Monte
//!   Carlo estimation of payoffs and deviation gains.
//! * [`verify`], [`cli`]: the checks and commands behind the `mtgg` binary.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod equilibrium;
pub mod error;
pub mod graph;
pub mod math;
pub mod oracle;
pub mod output;
pub mod policy;
pub mod rng;
pub mod simulation;
pub mod verify;

pub use error::{Error, Result};
pub use policy::{Action, AffinePolicy, GameParams, Observation};
