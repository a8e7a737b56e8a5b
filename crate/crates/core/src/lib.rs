//! Secure transmit beamforming for a downlink two-user NOMA network aided by
//! a backscatter device, with a potential eavesdropper.
//!
//! The optimizer maximizes the epsilon-outage secrecy rate of the
//! backscatter link subject to secrecy-rate floors for both BS users, by a
//! convex-concave procedure over relaxed beam covariances.

pub mod cccp;
pub mod dc;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod oma;
pub mod subproblem;

pub use error::{Error, Result};
pub use model::{BeamPair, NetworkInstance, SecrecyTargets};
