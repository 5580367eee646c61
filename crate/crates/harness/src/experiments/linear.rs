use nalgebra::DVector;
use sht_core::operators::{lp_norm, maximal, maximal_r, two_weight_norm_lower_bound, weighted_norm};
use sht_core::weights::{a1_constant, dual_exponent};

use super::{failure_verdict, max_ratio, norm_options, sweep, weight_stats, Experiment};
use crate::candidates::signed_candidates;
use crate::config::ExperimentConfig;
use crate::report::{ExperimentReport, Record, Verdict};
use crate::setup::Setup;
use crate::HarnessError;

/// `∫|Tf| w ≤ C [w]_{A_p} ∫ Mf w`: the best `C` over test functions.
pub struct CoifmanFefferman;

impl Experiment for CoifmanFefferman {
    fn kind(&self) -> &'static str {
        "coifman-fefferman"
    }

    fn summary(&self) -> &'static str {
        "best C in ∫|Tf| w <= C [w]_Ap ∫ Mf w over test functions"
    }

    fn run(&self, setup: &Setup, config: &ExperimentConfig, report: &mut ExperimentReport) -> Result<(), HarnessError> {
        let a = setup.kernel()?.matrix();
        let mu = setup.space.masses();
        let fs = signed_candidates(&setup.grid, config.trials, config.seed);
        report.records = sweep(setup, &config.p, |_, w, &p| {
            let (ap, ainf, sigma_ainf) = weight_stats(w, setup, p)?;
            let mut best = Record::default();
            for f in &fs {
                let tf = &a * DVector::from_column_slice(f);
                let lhs = lp_norm(tf.as_slice(), w.values(), mu, 1.0);
                let rhs = ap * lp_norm(&maximal(&setup.grid, f), w.values(), mu, 1.0);
                if rhs > 0.0 && lhs / rhs >= best.ratio {
                    best = Record {
                        lhs,
                        rhs,
                        ratio: lhs / rhs,
                        ..Record::default()
                    };
                }
            }
            Ok(Record {
                ap,
                ainf,
                sigma_ainf,
                ..best
            }
            .with("p", p))
        });
        report.measured_c = max_ratio(&report.records, |_| true);
        report.verdicts.push(failure_verdict(&report.records));
        report.verdicts.push(Verdict::finite("measured C", report.measured_c));
        Ok(())
    }
}

/// `‖Tf‖_{L^p(w)} ≤ C p p' (r')^{1/p'} ‖f‖_{L^p(M_r w)}` with one `C` over
/// the `(p, r, w)` sweep; the left side is a lower bound for the two-weight
/// operator norm.
pub struct LinearGrowth;

impl Experiment for LinearGrowth {
    fn kind(&self) -> &'static str {
        "linear-growth"
    }

    fn summary(&self) -> &'static str {
        "||T||_{L^p(M_r w) -> L^p(w)} against p p' (r')^(1/p') over (p, r, w)"
    }

    fn run(&self, setup: &Setup, config: &ExperimentConfig, report: &mut ExperimentReport) -> Result<(), HarnessError> {
        let a = setup.kernel()?.matrix();
        let opts = norm_options(config);
        let starts = signed_candidates(&setup.grid, config.trials, config.seed);
        let pr: Vec<(f64, f64)> = config.p.iter().flat_map(|&p| config.r.iter().map(move |&r| (p, r))).collect();
        report.records = sweep(setup, &pr, |_, w, &(p, r)| {
            let (ap, ainf, sigma_ainf) = weight_stats(w, setup, p)?;
            let mrw = maximal_r(&setup.grid, w.values(), r)?;
            let est = two_weight_norm_lower_bound(&a, &setup.space, p, w.values(), &mrw, &starts, &opts);
            let q = dual_exponent(p);
            let rhs = p * q * dual_exponent(r).powf(1.0 / q);
            Ok(Record {
                ap,
                ainf,
                sigma_ainf,
                lhs: est.value,
                rhs,
                ratio: est.value / rhs,
                ..Record::default()
            }
            .with("p", p)
            .with("r", r))
        });
        report.measured_c = max_ratio(&report.records, |_| true);
        report.verdicts.push(failure_verdict(&report.records));
        report.verdicts.push(Verdict::finite("sweep-wide C", report.measured_c));
        report.notes.push("lhs are LOWER_BOUND estimates of the two-weight norm".into());
        Ok(())
    }
}

/// `‖T‖_{L^p(w)} / (p p' [w]_{A_∞}^{1/p'} [w]_{A_1}^{1/p})`.
pub struct A1Mixed;

impl Experiment for A1Mixed {
    fn kind(&self) -> &'static str {
        "a1-mixed"
    }

    fn summary(&self) -> &'static str {
        "||T||_{L^p(w)} against p p' [w]_Ainf^(1/p') [w]_A1^(1/p)"
    }

    fn run(&self, setup: &Setup, config: &ExperimentConfig, report: &mut ExperimentReport) -> Result<(), HarnessError> {
        let a = setup.kernel()?.matrix();
        let opts = norm_options(config);
        report.records = sweep(setup, &config.p, |_, w, &p| {
            let (ap, ainf, sigma_ainf) = weight_stats(w, setup, p)?;
            let a1 = a1_constant(w, &setup.grid)?;
            let est = weighted_norm(&a, &setup.space, p, w.values(), &opts)?;
            let q = dual_exponent(p);
            let rhs = p * q * ainf.powf(1.0 / q) * a1.powf(1.0 / p);
            Ok(Record {
                ap,
                ainf,
                sigma_ainf,
                lhs: est.value,
                rhs,
                ratio: est.value / rhs,
                ..Record::default()
            }
            .with("p", p)
            .with("a1", a1)
            .with("exact", if est.kind == sht_core::operators::EstimateKind::Exact { 1.0 } else { 0.0 }))
        });
        report.measured_c = max_ratio(&report.records, |_| true);
        report.verdicts.push(failure_verdict(&report.records));
        report.verdicts.push(Verdict::finite("sweep-wide C", report.measured_c));
        Ok(())
    }
}

/// `‖Tf‖_{L^p(V)} ≤ C p ‖Mf‖_{L^p(V)}` with `V = (M_r w)^{1-p}`.
pub struct DualMaximal;

impl Experiment for DualMaximal {
    fn kind(&self) -> &'static str {
        "dual-maximal"
    }

    fn summary(&self) -> &'static str {
        "best C in ||Tf||_{L^p(V)} <= C p ||Mf||_{L^p(V)}, V = (M_r w)^(1-p)"
    }

    fn run(&self, setup: &Setup, config: &ExperimentConfig, report: &mut ExperimentReport) -> Result<(), HarnessError> {
        let a = setup.kernel()?.matrix();
        let mu = setup.space.masses();
        let fs = signed_candidates(&setup.grid, config.trials, config.seed);
        let pr: Vec<(f64, f64)> = config.p.iter().flat_map(|&p| config.r.iter().map(move |&r| (p, r))).collect();
        report.records = sweep(setup, &pr, |_, w, &(p, r)| {
            let (ap, ainf, sigma_ainf) = weight_stats(w, setup, p)?;
            let v: Vec<f64> = maximal_r(&setup.grid, w.values(), r)?
                .into_iter()
                .map(|m| m.powf(1.0 - p))
                .collect();
            let mut best = Record::default();
            for f in &fs {
                let tf = &a * DVector::from_column_slice(f);
                let lhs = lp_norm(tf.as_slice(), &v, mu, p);
                let rhs = p * lp_norm(&maximal(&setup.grid, f), &v, mu, p);
                if rhs > 0.0 && lhs / rhs >= best.ratio {
                    best = Record {
                        lhs,
                        rhs,
                        ratio: lhs / rhs,
                        ..Record::default()
                    };
                }
            }
            Ok(Record {
                ap,
                ainf,
                sigma_ainf,
                ..best
            }
            .with("p", p)
            .with("r", r))
        });
        report.measured_c = max_ratio(&report.records, |_| true);
        report.verdicts.push(failure_verdict(&report.records));
        report.verdicts.push(Verdict::finite("measured C", report.measured_c));
        Ok(())
    }
}
