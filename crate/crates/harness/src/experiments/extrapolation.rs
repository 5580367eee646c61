use sht_core::operators::{maximal_norm_lower_bound, weighted_norm};
use sht_core::weights::{a1_constant, ap_constant, extrapolation_constant};

use super::{failure_verdict, max_ratio, norm_options, sweep, weight_stats, Experiment};
use crate::candidates::structured_nonnegative;
use crate::config::ExperimentConfig;
use crate::report::{ExperimentReport, Record, Verdict};
use crate::setup::Setup;
use crate::HarnessError;

/// The hypothesis `N(t) = t^{1/(p0-1)}` satisfied by the maximal operator.
pub fn buckley_n(p0: f64) -> impl Fn(f64) -> f64 {
    move |t| t.powf(1.0 / (p0 - 1.0))
}

#[derive(Debug, Clone, Copy)]
enum Part {
    /// `‖M‖_{L^{p0}(w)} / N([w]_{A_{p0}})`, whose sweep maximum is the
    /// hypothesis constant.
    Hypothesis,
    /// `‖M‖_{L^p(w)} / (C_hyp K(w))`.
    Conclusion(f64),
    /// `‖T‖_{L^p(w)} / [w]_{A_1}`.
    Corollary(f64),
}

/// Extrapolation for the pair `(Mf, f)` from a measured `L^{p0}` hypothesis,
/// and the `N(t) = t` corollary for the kernel operator with `A_1` weights.
pub struct Extrapolation;

impl Experiment for Extrapolation {
    fn kind(&self) -> &'static str {
        "extrapolation"
    }

    fn summary(&self) -> &'static str {
        "||M||_{L^p(w)} against C_hyp K(w) from a measured L^p0 hypothesis, and ||T||_{L^p(w)} against [w]_A1"
    }

    fn run(&self, setup: &Setup, config: &ExperimentConfig, report: &mut ExperimentReport) -> Result<(), HarnessError> {
        let p0 = config.p0;
        if !(p0 > 1.0 && p0.is_finite()) {
            return Err(HarnessError::Config(format!("extrapolation needs p0 in (1, inf), got {p0}")));
        }
        let a = setup.kernel()?.matrix();
        let opts = norm_options(config);
        let starts = structured_nonnegative(&setup.grid, config.trials);
        let n_fn = buckley_n(p0);
        let m_norm = |w: &sht_core::weights::Weight, p: f64| {
            maximal_norm_lower_bound(&setup.grid, p, w.values(), &starts, &opts).map(|e| e.value)
        };
        let hypothesis = sweep(setup, &[Part::Hypothesis], |_, w, _| {
            let (ap, ainf, sigma_ainf) = weight_stats(w, setup, p0)?;
            let lhs = m_norm(w, p0)?;
            let rhs = n_fn(ap);
            Ok(Record {
                ap,
                ainf,
                sigma_ainf,
                lhs,
                rhs,
                ratio: lhs / rhs,
                ..Record::default()
            }
            .with("part", 0.0)
            .with("p", p0))
        });
        let c_hyp = max_ratio(&hypothesis, |_| true);
        let mut parts: Vec<Part> = config.p.iter().filter(|&&p| p != p0).map(|&p| Part::Conclusion(p)).collect();
        parts.extend(config.p.iter().map(|&p| Part::Corollary(p)));
        let rest = sweep(setup, &parts, |_, w, &part| {
            let g = &setup.grid;
            match part {
                Part::Conclusion(p) => {
                    let (ap, ainf, sigma_ainf) = weight_stats(w, setup, p)?;
                    let ext = extrapolation_constant(w, g, p, p0, &n_fn, &opts)?;
                    let lhs = m_norm(w, p)?;
                    let rhs = c_hyp * ext.k;
                    Ok(Record {
                        ap,
                        ainf,
                        sigma_ainf,
                        lhs,
                        rhs,
                        ratio: lhs / rhs,
                        ..Record::default()
                    }
                    .with("part", 1.0)
                    .with("p", p)
                    .with("case", ext.case as f64)
                    .with("k_argument", ext.argument)
                    .with("ap0", ap_constant(w, g, p0)?))
                }
                Part::Corollary(p) => {
                    let (ap, ainf, sigma_ainf) = weight_stats(w, setup, p)?;
                    let a1 = a1_constant(w, g)?;
                    let lhs = weighted_norm(&a, &setup.space, p, w.values(), &opts)?.value;
                    Ok(Record {
                        ap,
                        ainf,
                        sigma_ainf,
                        lhs,
                        rhs: a1,
                        ratio: lhs / a1,
                        ..Record::default()
                    }
                    .with("part", 2.0)
                    .with("p", p))
                }
                Part::Hypothesis => unreachable!("hypothesis points run first"),
            }
        });
        report.records = hypothesis;
        let offset = report.records.len();
        report.records.extend(rest.into_iter().map(|mut r| {
            r.index += offset;
            r
        }));
        let part = |c: f64| move |r: &Record| r.extra.get("part") == Some(&c);
        report.measured_c = max_ratio(&report.records, part(1.0));
        report.verdicts.push(failure_verdict(&report.records));
        report.verdicts.push(Verdict::finite("hypothesis constant C_hyp", c_hyp));
        report.verdicts.push(Verdict::finite("conclusion constant over the sweep", report.measured_c));
        report.verdicts.push(Verdict::finite("N(t) = t corollary constant", max_ratio(&report.records, part(2.0))));
        report.notes.push(format!("hypothesis N(t) = t^(1/(p0-1)) at p0 = {p0}, C_hyp = sweep maximum of part 0"));
        report.notes.push("K(w) applies N to the whole bracketed product".into());
        report.notes.push("part: 0 hypothesis, 1 conclusion, 2 corollary with N(t) = t".into());
        Ok(())
    }
}
