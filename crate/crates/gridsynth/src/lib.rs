//! Modeling, structured H-infinity synthesis, decentralized stability
//! certification and nonlinear time-domain simulation for grid-connected
//! power converters.
//!
//! The crate is organized around the pipeline:
//!
//! 1. [`converter`] builds the linearized generalized plant of a converter
//!    from physical parameters and an operating point.
//! 2. [`weights`] holds the frequency-domain weighting families and the
//!    entrywise-weighted objective.
//! 3. [`synthesis`] searches for a structured static gain matrix minimizing
//!    the worst-case weighted norm over a family of grid inductances.
//! 4. [`network`] Kron-reduces the surrounding grid and evaluates the
//!    decentralized small-gain stability certificate.
//! 5. [`sim`] validates the design on the full nonlinear model.

pub mod converter;
pub mod error;
pub mod lti;
pub mod network;
pub mod sim;
pub mod synthesis;
pub mod weights;

pub use error::{Error, Result};
