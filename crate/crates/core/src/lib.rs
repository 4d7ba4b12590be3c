//! Cognitive planar MIMO radar simulation.
//!
//! A SARSA agent picks how many of the strongest angle bins to illuminate on each
//! pulse; transmit weights are the maximum-power design over those bins, and every
//! bin is tested with a robust Wald statistic whose threshold holds the false-alarm
//! rate fixed regardless of the clutter distribution. The clutter is a separable
//! quarter-plane 2D AR field driven by complex-t innovations.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix `f64`, which is what the CLI uses.

pub mod agent;
pub mod array;
pub mod beamform;
pub mod cli;
pub mod clutter;
pub mod detector;
pub mod error;
pub mod numerics;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type C64 = num_complex::Complex<f64>;
pub type C32 = num_complex::Complex<f32>;
pub type DisturbanceModelF64 = clutter::DisturbanceModel<f64>;
pub type DisturbanceModelF32 = clutter::DisturbanceModel<f32>;
pub type AngleGridF64 = array::AngleGrid<f64>;
pub type ScenarioF64 = sim::Scenario<f64>;
pub type ScenarioF32 = sim::Scenario<f32>;
pub type EpisodeContextF64 = sim::EpisodeContext<f64>;
