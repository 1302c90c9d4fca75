//! Spiking neural networks with bioinspired dynamic energy-temporal thresholds (BDETT).
//!
//! The crate covers the LIF and SRM neuron models, the threshold schemes, Poisson
//! encoding, the weight and input degradation operators, homeostasis metrics, a small
//! surrogate-gradient trainer and a 2D obstacle-avoidance simulator to drive it all.

pub mod degradation;
pub mod encoding;
pub mod error;
pub mod experiment;
pub mod homeostasis;
pub mod matrix;
pub mod rng;
pub mod sim2d;
pub mod snn;
pub mod thresholds;
pub mod trainer;
pub mod verify;

pub use error::{Error, Result};
