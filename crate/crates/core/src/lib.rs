//! Desk-scale simulator and verification toolkit for bridge-based
//! generative semantic communication.
//!
//! The crate provides:
//!
//! - [`bridge`]: noise schedules and the analytic zero-drift bridge
//!   posterior between paired endpoints;
//! - [`model`]: a small noise-prediction network with hand-rolled
//!   reverse-mode differentiation and an adaptive-moment optimizer;
//! - [`sampling`]: the consistency decoder, backward Euler-Maruyama
//!   integration with the telescoped path identity, and a
//!   conditional-diffusion baseline;
//! - [`jscc`]: a toy joint source-channel codec over AWGN/Rayleigh
//!   channels with perfect-CSI equalization;
//! - [`analysis`]: numerical checkers for the theoretical claims
//!   (kinetic energy, transport distances, step-count bounds,
//!   information-capacity and residual-entropy demos);
//! - [`harness`]: synthetic datasets, configuration, the staged training
//!   pipeline, the theory suite, and report emission.
//!
//! Everything is deterministic under a master seed: randomness flows
//! through explicit [`rng::RngState`] values derived per lane.

pub mod analysis;
pub mod bridge;
pub mod error;
pub mod harness;
pub mod jscc;
pub mod model;
pub mod rng;
pub mod sampling;
pub mod vecmath;

pub use error::{Error, Result};
