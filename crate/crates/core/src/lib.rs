//! Monte Carlo estimation of bit-flip error thresholds for Z_d quantum
//! double codes through the equivalent disordered d-state Potts model,
//! together with closed-form threshold bounds.

pub mod bounds;
pub mod campaign;
pub mod disorder;
pub mod error;
pub mod fss;
pub mod lattice;
pub mod observables;
pub mod potts;
pub mod rng;
pub mod stats;
pub mod tempering;

pub use error::{Error, Result};
