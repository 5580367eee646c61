use nalgebra::DVector;
use sht_core::bmo::bmo_norm;
use sht_core::operators::{commutator_matrix, conjugated_operator, weighted_norm, EstimateKind};

use super::{failure_verdict, max_ratio, norm_options, sweep, weight_stats, Experiment};
use crate::candidates::signed_candidates;
use crate::config::ExperimentConfig;
use crate::report::{ExperimentReport, Record, Verdict};
use crate::setup::Setup;
use crate::HarnessError;

/// Step of the central difference in `z`.
pub const FD_STEP: f64 = 1e-5;
/// Allowed relative sup-norm gap between the difference quotient and `T_b^1 f`.
pub const FD_TOL: f64 = 1e-6;

/// Relative sup-norm gap between `(T_h f - T_{-h} f) / 2h` and `[b, T] f`,
/// worst over `fs`.
pub fn finite_difference_gap(setup: &Setup, b: &[f64], fs: &[Vec<f64>]) -> Result<f64, HarnessError> {
    let op = setup.kernel()?;
    let c = commutator_matrix(op, b, 1)?;
    let mut worst = 0.0f64;
    for f in fs {
        let exact = &c * DVector::from_column_slice(f);
        let plus = conjugated_operator(op, b, FD_STEP, f)?;
        let minus = conjugated_operator(op, b, -FD_STEP, f)?;
        let scale = exact.amax();
        if scale == 0.0 {
            continue;
        }
        let gap = (0..f.len())
            .map(|x| ((plus[x] - minus[x]) / (2.0 * FD_STEP) - exact[x]).abs())
            .fold(0.0, f64::max);
        worst = worst.max(gap / scale);
    }
    Ok(worst)
}

/// `‖T_b^k‖_{L^2(w)}` for `b = log w` scaled to unit BMO norm, against
/// `[w]_{A_2}^{1/2} ([w]_{A_∞} + [σ]_{A_∞})^{k+1/2}`.
pub struct Commutator;

impl Experiment for Commutator {
    fn kind(&self) -> &'static str {
        "commutator"
    }

    fn summary(&self) -> &'static str {
        "||T_b^k||_{L^2(w)} for b = log w, ||b||_BMO = 1, against [w]_A2^(1/2) ([w]_Ainf + [sigma]_Ainf)^(k+1/2)"
    }

    fn run(&self, setup: &Setup, config: &ExperimentConfig, report: &mut ExperimentReport) -> Result<(), HarnessError> {
        let op = setup.kernel()?;
        let opts = norm_options(config);
        let fs = signed_candidates(&setup.grid, config.trials.min(16), config.seed);
        report.records = sweep(setup, &config.k, |_, w, &k| {
            let (ap, ainf, sigma_ainf) = weight_stats(w, setup, 2.0)?;
            let log_w: Vec<f64> = w.values().iter().map(|v| v.ln()).collect();
            let raw = bmo_norm(&setup.grid, &log_w);
            let base = Record {
                ap,
                ainf,
                sigma_ainf,
                ..Record::default()
            }
            .with("k", k as f64)
            .with("raw_bmo", raw);
            if raw == 0.0 {
                return Ok(base.with("skipped", 1.0));
            }
            let b: Vec<f64> = log_w.iter().map(|v| v / raw).collect();
            let est = weighted_norm(&commutator_matrix(op, &b, k as i64)?, &setup.space, 2.0, w.values(), &opts)?;
            let rhs = ap.sqrt() * (ainf + sigma_ainf).powf(k as f64 + 0.5);
            let mut rec = Record {
                lhs: est.value,
                rhs,
                ratio: est.value / rhs,
                ..base
            }
            .with("exact", if est.kind == EstimateKind::Exact { 1.0 } else { 0.0 })
            // the unnormalised log w under either power of its BMO norm
            .with("raw_ratio_bmo_linear", est.value * raw.powi(k as i32) / (rhs * raw))
            .with("raw_ratio_bmo_power_k", est.value / rhs);
            if k == 1 {
                rec = rec.with("fd_gap", finite_difference_gap(setup, &b, &fs)?);
            }
            Ok(rec)
        });
        let recs = &report.records;
        report.measured_c = max_ratio(recs, |_| true);
        let fd = super::evaluated(recs).filter_map(|r| r.extra.get("fd_gap").copied()).fold(0.0, f64::max);
        report.verdicts.push(failure_verdict(recs));
        report.verdicts.push(Verdict::finite("sweep-wide C", report.measured_c));
        if config.k.contains(&1) {
            report.verdicts.push(Verdict::at_most("finite-difference gap for T_b^1", fd, FD_TOL, 0.0));
        }
        report.notes.push("b = log w / ||log w||_BMO, so both readings of the BMO factor coincide".into());
        report.notes.push(
            "raw_ratio_bmo_linear and raw_ratio_bmo_power_k give ||T_b^k|| for b = log w over the envelope with ||b||^1 and ||b||^k"
                .into(),
        );
        report.notes.push("weights with constant log w are skipped".into());
        Ok(())
    }
}
