//! Exact cumulant calculus, low-degree bounds and recovery procedures for
//! Gaussian latent clustering models (plain, sparse and biclustering).
//!
//! Module map:
//! - [`model`]: parameterizations, prior sampling, partitions.
//! - [`metrics`]: separations, partnership matrices, clustering error.
//! - [`cumulant`]: exact joint cumulants by two independent routes, nullity
//!   predicates and counting bounds.
//! - [`ldbounds`]: ζ quantities, MMSE lower bounds, correlation sums and the
//!   empirical low-degree MMSE.
//! - [`estimators`]: exhaustive and polynomial-time clustering procedures.

// index loops mirror the matrix formulas they implement
#![allow(clippy::needless_range_loop)]

pub mod cumulant;
pub mod error;
pub mod estimators;
pub mod ldbounds;
pub mod metrics;
pub mod model;
pub mod rng;

pub use error::{LdError, Result};
pub use model::{LatentState, ModelKind, ModelSpec, ObservationPair, Partition, PartitionPair};
pub use nalgebra::DMatrix;
