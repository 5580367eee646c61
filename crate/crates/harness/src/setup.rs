//! Materialises the space, grid, kernel and weight sweep a config describes.

use std::sync::{Arc, OnceLock};

use sht_core::dyadic::{build_grid, DyadicGrid};
use sht_core::operators::{graded_sign_kernel, KernelFile, KernelOperator};
use sht_core::space::{
    build_cantor_space, build_interval_space, build_random_graph_space, build_snowflake_space, FiniteSht, SpaceFile,
};
use sht_core::weights::{lognormal_weight, power_weight, Weight};

use crate::config::{ExperimentConfig, KernelSpec, SpaceSpec, WeightFamily};
use crate::HarnessError;

pub struct Setup {
    pub space: Arc<FiniteSht>,
    pub grid: DyadicGrid,
    /// `(parameter, weight)` in sweep order.
    pub weights: Vec<(f64, Weight)>,
    kernel_spec: KernelSpec,
    kernel: OnceLock<Result<KernelOperator, String>>,
}

impl Setup {
    pub fn build(config: &ExperimentConfig) -> Result<Self, HarnessError> {
        let space = Arc::new(build_space(&config.space)?);
        let delta = config.grid.delta.unwrap_or_else(|| default_delta(&space));
        let grid = build_grid(space.clone(), delta)?;
        let weights = config
            .weights
            .params
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let w = match config.weights.family {
                    WeightFamily::Power => power_weight(space.clone(), a),
                    WeightFamily::Lognormal => lognormal_weight(space.clone(), a, config.seed.wrapping_add(i as u64)),
                    WeightFamily::Constant => Weight::constant(space.clone(), a)?,
                };
                Ok((a, w))
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        Ok(Self {
            space,
            grid,
            weights,
            kernel_spec: config.kernel.clone(),
            kernel: OnceLock::new(),
        })
    }

    /// The certified kernel operator, built on first use.
    pub fn kernel(&self) -> Result<&KernelOperator, HarnessError> {
        self.kernel
            .get_or_init(|| {
                let matrix = match &self.kernel_spec {
                    KernelSpec::GradedSign => graded_sign_kernel(&self.space),
                    KernelSpec::File { path } => {
                        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                        KernelFile::parse(&text, self.space.len()).map_err(|e| e.to_string())?
                    }
                };
                KernelOperator::certified(self.space.clone(), matrix).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| HarnessError::Kernel(e.clone()))
    }
}

/// `1 / (8 kappa^3)`.
pub fn default_delta(space: &FiniteSht) -> f64 {
    1.0 / (8.0 * space.kappa().powi(3))
}

pub fn build_space(spec: &SpaceSpec) -> Result<FiniteSht, HarnessError> {
    Ok(match spec {
        SpaceSpec::Interval { n } => build_interval_space(*n)?,
        SpaceSpec::Cantor { level } => build_cantor_space(*level)?,
        SpaceSpec::Snowflake { n, s } => build_snowflake_space(&build_interval_space(*n)?, *s)?,
        SpaceSpec::Graph { n, edge_prob, seed } => build_random_graph_space(*n, *edge_prob, *seed)?,
        SpaceSpec::File { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
            SpaceFile::parse(&text)?
        }
    })
}
