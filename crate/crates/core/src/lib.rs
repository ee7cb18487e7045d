//! Moment and tail bounds for sums of k-wise independent bounded random
//! variables: exact moments of the extremal laws, the sharp bound `M`,
//! classical baselines, a convolution oracle and a k-wise simulator.

pub mod baselines;
pub mod calibration;
pub mod cli;
pub mod combinatorics;
pub mod distributions;
pub mod error;
pub mod exact_moments;
pub mod kwise_sim;
pub mod oracle;
pub mod sharp_bounds;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
