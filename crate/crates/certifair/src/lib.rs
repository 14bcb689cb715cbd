//! Fair representation learning through an additive-noise channel, with
//! finite-sample demographic-parity certificates.
//!
//! The crate is organised bottom-up:
//!
//! - [`numkit`]: dense matrices, seeded RNG streams, and a small MLP with
//!   explicit forward tapes and reverse-mode gradients.
//! - [`data`]: dataset container, synthetic generators (swiss rolls, atom
//!   families, staircase maps), CSV ingestion, stratified splits.
//! - [`density`]: per-group Gaussian mixture models over representation
//!   space, evaluated in log space.
//! - [`audit`]: the plug-in group auditor, leave-one-out certificates,
//!   discrete mutual-information estimators, and closed-form bound
//!   calculators.
//! - [`fairtrain`]: the Monte-Carlo parity loss, noise-channel and
//!   adversarial training loops, downstream probes, sweeps.
//! - [`cli`]: the batch command-line front end.

pub mod audit;
pub mod cli;
pub mod data;
pub mod density;
pub mod error;
pub mod fairtrain;
pub mod numkit;

pub use error::{Error, Result};
