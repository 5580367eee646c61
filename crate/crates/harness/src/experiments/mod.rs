//! Named experiments behind a common trait, looked up by kind at runtime.

mod buckley;
mod commutator;
mod extrapolation;
mod linear;
mod mixed;
mod weak;

use std::collections::BTreeMap;

use rayon::prelude::*;
use sht_core::operators::NormOptions;
use sht_core::weights::{ainf_fujii_wilson, ap_constant, Weight};

use crate::config::ExperimentConfig;
use crate::report::{ExperimentReport, Fit, Record, Verdict};
use crate::setup::Setup;
use crate::HarnessError;

pub use buckley::{BuckleyScaling, SLOPE_WINDOW as BUCKLEY_SLOPE_WINDOW};
pub use commutator::{finite_difference_gap, Commutator, FD_STEP, FD_TOL};
pub use extrapolation::{buckley_n, Extrapolation};
pub use linear::{A1Mixed, CoifmanFefferman, DualMaximal, LinearGrowth};
pub use mixed::{testing_constants, MixedA2Ainf, SPREAD_LIMIT};
pub use weak::{claim_factor, WeakEndpoint};

pub trait Experiment: Send + Sync {
    fn kind(&self) -> &'static str;

    /// One line shown by `sht experiment list`.
    fn summary(&self) -> &'static str;

    /// Fills records, fits, verdicts and the measured constant.
    fn run(&self, setup: &Setup, config: &ExperimentConfig, report: &mut ExperimentReport) -> Result<(), HarnessError>;
}

pub struct Registry {
    entries: BTreeMap<&'static str, Box<dyn Experiment>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    /// Replaces any experiment of the same kind.
    pub fn register(&mut self, experiment: Box<dyn Experiment>) {
        self.entries.insert(experiment.kind(), experiment);
    }

    pub fn get(&self, kind: &str) -> Option<&dyn Experiment> {
        self.entries.get(kind).map(|b| b.as_ref())
    }

    pub fn kinds(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Experiment> {
        self.entries.values().map(|b| b.as_ref())
    }

    pub fn run(&self, config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
        config.validate()?;
        let experiment = self
            .get(&config.kind)
            .ok_or_else(|| HarnessError::UnknownKind(config.kind.clone()))?;
        let setup = Setup::build(config)?;
        let mut report = ExperimentReport::new(config);
        experiment.run(&setup, config, &mut report)?;
        Ok(report)
    }
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(CoifmanFefferman));
        r.register(Box::new(LinearGrowth));
        r.register(Box::new(A1Mixed));
        r.register(Box::new(WeakEndpoint));
        r.register(Box::new(MixedA2Ainf));
        r.register(Box::new(Commutator));
        r.register(Box::new(Extrapolation));
        r.register(Box::new(DualMaximal));
        r.register(Box::new(BuckleyScaling));
        r
    }
}

/// Runs the default registry.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    Registry::default().run(config)
}

pub(crate) fn norm_options(config: &ExperimentConfig) -> NormOptions {
    NormOptions {
        trials: config.trials,
        seed: config.seed,
        ..NormOptions::default()
    }
}

/// `([w]_{A_p}, [w]_{A_∞}, [σ]_{A_∞})` with `σ = w^{1-p'}`.
pub(crate) fn weight_stats(w: &Weight, setup: &Setup, p: f64) -> Result<(f64, f64, f64), HarnessError> {
    let g = &setup.grid;
    Ok((
        ap_constant(w, g, p)?,
        ainf_fujii_wilson(w, g)?,
        ainf_fujii_wilson(&w.sigma(p)?, g)?,
    ))
}

/// Evaluates every `(weight, extra)` point concurrently; results keep sweep
/// order and a failing point becomes a record carrying the error text.
pub(crate) fn sweep<T: Sync>(
    setup: &Setup,
    extras: &[T],
    eval: impl Fn(f64, &Weight, &T) -> Result<Record, HarnessError> + Sync,
) -> Vec<Record> {
    let points: Vec<(usize, usize)> = (0..setup.weights.len())
        .flat_map(|i| (0..extras.len()).map(move |j| (i, j)))
        .collect();
    points
        .par_iter()
        .enumerate()
        .map(|(index, &(i, j))| {
            let (param, w) = &setup.weights[i];
            match eval(*param, w, &extras[j]) {
                Ok(mut r) => {
                    r.index = index;
                    r.param = *param;
                    r
                }
                Err(e) => Record::failed(index, *param, e.to_string()),
            }
        })
        .collect()
}

pub(crate) fn evaluated(records: &[Record]) -> impl Iterator<Item = &Record> {
    records.iter().filter(|r| r.failure.is_none() && r.extra.get("skipped").is_none_or(|&s| s == 0.0))
}

/// Largest ratio over evaluated records selected by `keep`.
pub(crate) fn max_ratio(records: &[Record], keep: impl Fn(&Record) -> bool) -> f64 {
    evaluated(records).filter(|r| keep(r)).map(|r| r.ratio).fold(0.0, f64::max)
}

/// `max / min` of the ratios over evaluated records selected by `keep`.
pub(crate) fn spread(records: &[Record], keep: impl Fn(&Record) -> bool) -> f64 {
    let vals: Vec<f64> = evaluated(records).filter(|r| keep(r)).map(|r| r.ratio).collect();
    let hi = vals.iter().copied().fold(0.0, f64::max);
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if vals.is_empty() {
        1.0
    } else {
        hi / lo
    }
}

pub(crate) fn failure_verdict(records: &[Record]) -> Verdict {
    let failed = records.iter().filter(|r| r.failure.is_some()).count();
    Verdict::at_most("failed sweep points", failed as f64, 0.0, 0.0)
}

/// Least-squares line through `(ln x, ln y)`.
pub fn loglog_fit(name: &str, xs: &[f64], ys: &[f64], target: f64, lo: f64, hi: f64) -> Fit {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = pts.iter().map(|(_, y)| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
    let intercept = my - slope * mx;
    let r_squared = if sxx > 0.0 && syy > 0.0 { sxy * sxy / (sxx * syy) } else { 0.0 };
    let issued = pts.len() >= 6 && r_squared >= 0.9;
    Fit {
        name: name.into(),
        slope,
        intercept,
        r_squared,
        points: pts.len(),
        target,
        lo,
        hi,
        issued,
        passed: issued && slope >= lo && slope <= hi,
    }
}
