//! Linearised model of polarisation entanglement produced by interfering two
//! polarisation-squeezed beams on a beam splitter.
//!
//! All fluctuation variances are shot-noise normalised: a coherent beam has a
//! dark-plane Stokes variance of exactly 1, whatever its mean `S3`. dB and dBm
//! values only appear in [`metrology`].
//!
//! Module map:
//!
//! - [`stokes`]: angles, sources and dark-plane rotations.
//! - [`fock`]: exact truncated two-mode Stokes matrices, used as an oracle.
//! - [`gaussian`]: covariance propagation, combination variances and the
//!   seeded Monte Carlo cross-check.
//! - [`entangle`]: the entangling beam splitter, optimised measurement
//!   directions, detection imperfections and blocked-arm inference.
//! - [`criteria`]: non-separability and EPR witnesses, entanglement of
//!   formation, electronic gain optimisation.
//! - [`metrology`]: dB conversions and electronic-noise subtraction.

pub mod criteria;
pub mod entangle;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod metrology;
pub mod stokes;

pub use error::{Error, Result};
