//! Dyadic maximal functions, sparse operators, Calderón–Zygmund kernel
//! operators, commutators and weighted norm estimation.
//!
//! Linear operators are materialised as dense matrices `A` acting by
//! `(Tf)(x) = Σ_y A[x, y] f(y)`; a kernel operator has `A = K diag(mu)`.

mod checks;
mod kernel;
mod maximal;
mod norm;
mod sparse_op;

pub use checks::{
    lerner_domination_check, maximal_localization_check, offsupport_bound_check, DominationReport,
    LocalizationReport, OffSupportReport,
};
pub use kernel::{
    certify_kernel, commutator_apply, commutator_matrix, conjugated_operator, graded_sign_kernel,
    kernel_apply, KernelCertificate, KernelFile, KernelOperator, KERNEL_SCHEMA,
};
pub use maximal::{ball_maximal, maximal, maximal_r, maximal_within};
pub use norm::{
    lp_norm, maximal_norm_lower_bound, two_weight_norm_lower_bound, weak_norm, weak_quotient,
    weighted_norm, EstimateKind, EstimateMethod, NormEstimate, NormOptions,
};
pub use sparse_op::SparseOperator;

pub(crate) use norm::trial_rng;

use thiserror::Error;

use crate::dyadic::GridError;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("exponent r must be at least 1, got {0}")]
    RInvalid(f64),
    #[error("exponent p must lie in (1, inf), got {0}")]
    PInvalid(f64),
    #[error("commutator order must be nonnegative, got {0}")]
    KNegative(i64),
    #[error("|z| * range(b) = {0} exceeds 700; exponentials would overflow")]
    Overflow(f64),
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("kernel matrix is {rows}x{cols}, space has {n} points")]
    KernelShape { rows: usize, cols: usize, n: usize },
    #[error("kernel has no certificate")]
    Uncertified,
    #[error("kernel decay constant is unbounded")]
    DecayUnbounded,
    #[error("atom does not have mean zero (integral {0})")]
    AtomNotMeanZero(f64),
    #[error("atom is not supported in the given cube")]
    AtomOutsideCube,
    #[error("weights must be strictly positive and finite")]
    NonPositiveWeight,
    #[error("kernel file: {0}")]
    Schema(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub(crate) fn check_len(values: &[f64], n: usize) -> Result<(), OperatorError> {
    if values.len() != n {
        return Err(OperatorError::LengthMismatch {
            expected: n,
            found: values.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_weight(w: &[f64], n: usize) -> Result<(), OperatorError> {
    check_len(w, n)?;
    if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(OperatorError::NonPositiveWeight);
    }
    Ok(())
}
