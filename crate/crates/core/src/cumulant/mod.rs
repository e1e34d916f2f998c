//! Exact joint cumulants of (x, X_α) with x = 𝟙{k*₁ = k*₂}.
//!
//! Two routes are provided and cross-checked: Möbius inversion of mixed
//! moments over the partition lattice ([`CumulantEngine::bruteforce`]) and
//! the pairing decomposition conditioned on the latent variables
//! ([`CumulantEngine::conditioned`]). Rows are 0-based, so the rows carrying
//! x are rows 0 and 1.

mod engine;
mod exact;
pub mod finite;
mod moments;
mod multi_index;
mod nullity;
mod pairing;
mod partition;

pub use engine::{cumulant_bruteforce, cumulant_conditioned, standard_mobius, CumulantEngine, CumulantModel};
pub use exact::ExactScalar;
pub use moments::{moment_oracle, omega_event, omega_probability};
pub use multi_index::{AlphaGraph, MultiIndex};
pub use nullity::{count_admissible, explicit_bound_coeff, is_clustering_admissible, nullity_predicate, CountResult};
pub use pairing::{enumerate_pairings, pairings_with_multiplicity, PairingDecomposition};
pub use partition::{
    bell_number, enumerate_set_partitions, fubini_bound, fubini_number, mobius_coefficient, SetPartition,
};

/// A cell (row, column) of an n×p index matrix.
pub type Cell = (usize, usize);
