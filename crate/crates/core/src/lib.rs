//! Interference alignment over correlated MIMO channels with imperfect CSI.
//!
//! The crate pairs a Monte-Carlo link-level simulator (alternating-minimization
//! IA precoders, zero-forcing receivers, beamforming and spatial-multiplexing
//! baselines) with closed-form and approximate laws for the post-processing
//! SINR, and the metrics used to compare the two.

pub mod analytic;
pub mod channel_model;
pub mod error;
pub mod experiments;
pub mod ia_solver;
pub mod linalg;
pub mod link_level;
pub mod metrics;
pub mod montecarlo;
pub mod rng;
pub mod scenario;
mod special;

pub use channel_model::{exp_correlation_matrix, ChannelSampler, ChannelSet, CorrelationMatrix, LinkArray};
pub use error::{Error, Result};
pub use ia_solver::{alternating_min, check_feasibility, FeasibilityReport, IaSolution, SolverConfig};
pub use linalg::ComplexMatrix;
pub use num_complex::Complex64;
pub use rng::SeedStream;
pub use scenario::Scenario;
