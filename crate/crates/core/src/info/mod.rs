//! Finite-alphabet information theory: entropy, mutual information,
//! channel capacity (Blahut–Arimoto) and I-projection onto marginal
//! constraints (iterative proportional fitting).
//!
//! Every quantity is in bits.

mod capacity;
mod entropy;
mod ipf;

pub use capacity::{blahut_arimoto_capacity, blahut_arimoto_from, CapacityReport};
pub use entropy::{
    kl_divergence, mutual_information, shannon_entropy, ConditionalChannel, Distribution,
    DISTRIBUTION_TOL,
};
pub use ipf::{ipf_project, IpfProjection, MarginalTargets, ScalingFactors};
pub(crate) use capacity::blahut_arimoto_partial;
pub(crate) use entropy::mutual_information_raw;
pub(crate) use ipf::ipf_refine;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfoError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error(
        "Blahut-Arimoto did not reach the requested gap after {iterations} iterations \
         (capacity in [{lower:.9}, {upper:.9}] bits)"
    )]
    CapacityNoConvergence {
        lower: f64,
        upper: f64,
        iterations: usize,
    },
    #[error("IPF did not converge after {sweeps} sweeps (worst residual {residual:e})")]
    IpfNoConvergence { residual: f64, sweeps: usize },
    #[error(
        "IPF target unreachable: row {row}, measurement {measurement}, outcome {outcome} \
         has positive target but no support"
    )]
    IpfUnreachable {
        row: usize,
        measurement: usize,
        outcome: usize,
    },
    #[error("IPF stagnated on row {row} at residual {residual:e} after {sweeps} sweeps")]
    IpfStagnated {
        row: usize,
        residual: f64,
        sweeps: usize,
    },
}

/// Rows × columns above which row loops go through rayon.
pub(crate) const PARALLEL_THRESHOLD: usize = 1 << 14;
