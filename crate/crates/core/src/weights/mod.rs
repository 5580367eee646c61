//! Weights on a finite space and their Muckenhoupt-type characteristics.
//!
//! Every constant is taken over the dyadic cubes of a grid.

mod checks;
mod constants;
mod file;
mod generate;
mod iterate;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::dyadic::GridError;
use crate::operators::OperatorError;
use crate::space::FiniteSht;

pub use checks::{
    factor_check, levelset_inequality_check, verify_reverse_holder, verify_rhi_maximal, FactorReport,
    LevelSetReport, ReverseHolderReport,
};
pub use constants::{
    a1_constant, a1_of_values, ainf_fujii_wilson, ainf_hruscev, ap_constant, characteristics, dual_exponent,
    rh_exponent, WeightCharacteristics,
};
pub use file::{WeightFile, WEIGHT_SCHEMA};
pub use generate::{lognormal_weight, power_weight};
pub use iterate::{
    coifman_rochberg_check, conjugated_weight_check, extrapolation_constant, rubio_de_francia, CoifmanRochbergReport,
    ConjugatedWeightReport, ExtrapolationReport, RubioReport,
};

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("exponent p must lie in (1, inf), got {0}")]
    PInvalid(f64),
    #[error("weight values must be strictly positive and finite")]
    NonPositive,
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("exponents p = {p}, p0 = {p0} fit neither factorization case")]
    ExponentOrder { p: f64, p0: f64 },
    #[error("extrapolation needs p != p0")]
    CaseMismatch,
    #[error("function vanishes identically")]
    ZeroFunction,
    #[error("maximal operator norm could not be estimated: {0}")]
    NormEstimateFailed(String),
    #[error("weight file: {0}")]
    Schema(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum ConstantKind {
    Ap,
    A1,
    FujiiWilson,
    Hruscev,
}

type CacheKey = (ConstantKind, u64, u64);

/// A strictly positive function on the points of a space.
#[derive(Debug)]
pub struct Weight {
    space: Arc<FiniteSht>,
    values: Vec<f64>,
    cache: Mutex<HashMap<CacheKey, f64>>,
}

impl Clone for Weight {
    fn clone(&self) -> Self {
        Self {
            space: self.space.clone(),
            values: self.values.clone(),
            cache: Mutex::new(self.cache.lock().expect("cache lock").clone()),
        }
    }
}

impl Weight {
    pub fn new(space: Arc<FiniteSht>, values: Vec<f64>) -> Result<Self, WeightError> {
        if values.len() != space.len() {
            return Err(WeightError::LengthMismatch {
                expected: space.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(WeightError::NonPositive);
        }
        Ok(Self {
            space,
            values,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn constant(space: Arc<FiniteSht>, c: f64) -> Result<Self, WeightError> {
        let n = space.len();
        Self::new(space, vec![c; n])
    }

    pub fn space(&self) -> &FiniteSht {
        &self.space
    }

    pub fn space_arc(&self) -> &Arc<FiniteSht> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `w(E) = Σ_{x ∈ E} w(x) mu(x)`.
    pub fn mass_of(&self, points: &[usize]) -> f64 {
        self.space.integrate_over(&self.values, points)
    }

    /// Pointwise power `w^t`.
    pub fn pow(&self, t: f64) -> Result<Self, WeightError> {
        Self::new(self.space.clone(), self.values.iter().map(|v| v.powf(t)).collect())
    }

    pub fn scaled(&self, c: f64) -> Result<Self, WeightError> {
        Self::new(self.space.clone(), self.values.iter().map(|v| v * c).collect())
    }

    /// Pointwise product `w · v`.
    pub fn times(&self, v: &[f64]) -> Result<Self, WeightError> {
        Self::new(self.space.clone(), self.values.iter().zip(v).map(|(a, b)| a * b).collect())
    }

    /// The dual weight `σ = w^{1-p'}`.
    pub fn sigma(&self, p: f64) -> Result<Self, WeightError> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(WeightError::PInvalid(p));
        }
        self.pow(1.0 - dual_exponent(p))
    }

    /// Computes once per key; concurrent first calls may both compute, with
    /// identical results.
    pub(crate) fn cached(&self, key: CacheKey, compute: impl FnOnce() -> f64) -> f64 {
        if let Some(&v) = self.cache.lock().expect("cache lock").get(&key) {
            return v;
        }
        let v = compute();
        *self.cache.lock().expect("cache lock").entry(key).or_insert(v)
    }
}
