use sht_core::operators::{maximal_norm_lower_bound, NormOptions};
use sht_core::weights::dual_exponent;

use super::{failure_verdict, loglog_fit, norm_options, sweep, weight_stats, Experiment};
use crate::candidates::structured_nonnegative;
use crate::config::ExperimentConfig;
use crate::report::{ExperimentReport, Record, Verdict};
use crate::setup::Setup;
use crate::HarnessError;

/// Accepted slope window as multiples of the target `1/(p-1)`.
pub const SLOPE_WINDOW: (f64, f64) = (0.6, 1.4);

/// Fits `log ‖M‖_{L^p(w_a)}` against `log [w_a]_{A_p}` and compares the slope
/// with `1/(p-1)`.
pub struct BuckleyScaling;

impl Experiment for BuckleyScaling {
    fn kind(&self) -> &'static str {
        "buckley-scaling"
    }

    fn summary(&self) -> &'static str {
        "log-log slope of ||M||_{L^p(w_a)} against [w_a]_Ap, target 1/(p-1)"
    }

    fn run(&self, setup: &Setup, config: &ExperimentConfig, report: &mut ExperimentReport) -> Result<(), HarnessError> {
        // structured starts take three quarters of the budget, random ones the rest
        let starts = structured_nonnegative(&setup.grid, config.trials * 3 / 4);
        let opts = NormOptions {
            trials: config.trials - starts.len(),
            ..norm_options(config)
        };
        report.records = sweep(setup, &config.p, |_, w, &p| {
            let (ap, ainf, sigma_ainf) = weight_stats(w, setup, p)?;
            let est = maximal_norm_lower_bound(&setup.grid, p, w.values(), &starts, &opts)?;
            let rhs = ap.powf(dual_exponent(p) - 1.0);
            Ok(Record {
                ap,
                ainf,
                sigma_ainf,
                lhs: est.value,
                rhs,
                ratio: est.value / rhs,
                ..Record::default()
            }
            .with("p", p))
        });
        report.verdicts.push(failure_verdict(&report.records));
        for &p in &config.p {
            let pts: Vec<&Record> = super::evaluated(&report.records)
                .filter(|r| r.extra.get("p") == Some(&p))
                .collect();
            let xs: Vec<f64> = pts.iter().map(|r| r.ap).collect();
            let ys: Vec<f64> = pts.iter().map(|r| r.lhs).collect();
            let target = 1.0 / (p - 1.0);
            let fit = loglog_fit(
                &format!("slope at p = {p}"),
                &xs,
                &ys,
                target,
                SLOPE_WINDOW.0 * target,
                SLOPE_WINDOW.1 * target,
            );
            if fit.issued {
                report.verdicts.push(Verdict {
                    name: format!("fitted slope at p = {p} within [{}, {}]", fit.lo, fit.hi),
                    rule: "lo <= slope <= hi".into(),
                    tolerance: 0.0,
                    measured: fit.slope,
                    threshold: fit.hi,
                    passed: fit.passed,
                });
            } else {
                report.notes.push(format!(
                    "no slope verdict at p = {p}: {} points, R^2 = {}",
                    fit.points,
                    crate::report::format_g(fit.r_squared)
                ));
            }
            report.fits.push(fit);
        }
        report.measured_c = super::max_ratio(&report.records, |_| true);
        report.notes.push("lhs are LOWER_BOUND estimates from the relinearised ascent".into());
        Ok(())
    }
}
