//! Special functions, the dominant-eigenpair solver, and deterministic random streams.

pub mod eigen;
pub mod rng;
pub mod special;

pub use eigen::{principal_eigenpair, HermitianMatrix};
pub use rng::{Domain, RngStream};
pub use special::{chi2_threshold, marcum_q1};
