//! Default numeric tolerances and limits, in one place.

use serde::{Deserialize, Serialize};

/// Largest leaf count for exhaustive topology enumeration.
pub const DEFAULT_MAX_LEAVES: usize = 8;

/// Tolerances used across the library. Every field has a CLI override.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative cutoff on singular values for the invariant Jacobian rank.
    pub svd_cutoff: f64,
    /// Relative cutoff for the parameterization Jacobian (dimension check).
    pub dimension_svd_cutoff: f64,
    /// Step for central finite differences of the parameterization.
    pub fd_step: f64,
    /// Allowed deviation of `q_{A..A}` from 1 before scoring refuses input.
    pub normalization: f64,
    /// Denominator floor when normalizing a binomial residual.
    pub residual_floor: f64,
    /// Per-coordinate tolerance when deduplicating floating-point fibers.
    pub fiber_dedup: f64,
    /// Absolute gap below which the two best topology scores are a tie.
    pub tie: f64,
    /// Tolerance on the probability simplex membership tests.
    pub simplex: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            svd_cutoff: 1e-8,
            dimension_svd_cutoff: 1e-7,
            fd_step: 1e-5,
            normalization: 1e-9,
            residual_floor: 1e-300,
            fiber_dedup: 1e-12,
            tie: 1e-12,
            simplex: 1e-12,
        }
    }
}
