//! Kinetic consensus-based optimization (KBO) with symmetric α-stable jumps.
//!
//! Particles drift toward a Gibbs-weighted consensus point and are then
//! perturbed by Gaussian and heavy-tailed α-stable noise whose amplitude
//! scales with the distance to that point. The crate contains the particle
//! scheme itself, the benchmark objectives, analysis diagnostics, a 1D
//! validation against a closed-form fractional Fokker–Planck solution and
//! an experiment harness that aggregates success rates over seeded runs.

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod kbo;
pub mod objectives;
pub mod rng;
pub mod validation;

pub use error::{KboError, Result};
pub use kbo::{ConsensusState, DiffusionMode, KboConfig, ParticleEnsemble, RunRecord, StallMode};
pub use objectives::Objective;
pub use rng::{RngStream, StableLaw};
