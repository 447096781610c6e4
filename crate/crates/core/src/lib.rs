//! Surrogate-guided optimization of expensive black-box simulators.
//!
//! The loop implemented here samples a simulator on a Sobol design, fits a
//! small feedforward network to the records, descends candidate inputs
//! through the network's input gradients, and spends one real simulator
//! query per iteration on the best candidate. Each iteration retrains a
//! fresh network on the grown dataset.
//!
//! The crate is `no_std` (with `alloc`) unless the `std` feature is enabled.
//! Floating-point transcendental functions go through [`libm`], so results
//! do not depend on the platform's C library.
//!
//! Module map:
//!
//! * [`qmc`]: Sobol sequences and box bounds.
//! * [`surrogate`]: standardization, the MLP, Adam training, random-search tuning.
//! * [`objective`]: the weighted target-matching loss with soft bound penalties.
//! * [`inputopt`]: multi-start momentum descent over surrogate inputs.
//! * [`simbench`]: the simulator interface and reference simulators.
//! * [`driver`]: the outer sample/train/optimize/query loop and stopping rules.
//! * [`analysis`]: sensitivity, loss landscapes, training-size sweeps, baselines.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod analysis;
pub mod dataset;
pub mod driver;
mod error;
pub mod inputopt;
mod linalg;
pub mod objective;
mod par;
pub mod qmc;
pub mod rng;
pub mod simbench;
pub mod surrogate;

pub use dataset::{Dataset, Provenance};
pub use error::{Error, Result};
pub use objective::ObjectiveSpec;
pub use qmc::{BoundsSpec, SobolSequence};
pub use simbench::Simulator;
pub use surrogate::{Standardizer, SurrogateModel, TrainConfig};
