use sht_core::dyadic::{extract_sparse, AllLevelsThinned, DyadicGrid, SparseFamily};
use sht_core::operators::{weighted_norm, EstimateKind};

use super::{failure_verdict, max_ratio, norm_options, spread, sweep, weight_stats, Experiment};
use crate::config::ExperimentConfig;
use crate::report::{ExperimentReport, Record, Verdict};
use crate::setup::Setup;
use crate::HarnessError;

/// Largest ratio tolerated between sweep extremes of a normalised constant.
pub const SPREAD_LIMIT: f64 = 10.0;

/// Testing constants of the sparse operator of `family`:
/// `max_Q ‖S_Q(σχ_Q)‖_{L^2(w)} / σ(Q)^{1/2}` and the same with `w` and `σ`
/// exchanged, where `S_Q` keeps the family cubes contained in `Q`.
pub fn testing_constants(grid: &DyadicGrid, family: &SparseFamily, w: &[f64], sigma: &[f64]) -> (f64, f64) {
    let space = grid.space();
    let mu = space.masses();
    let mass = |v: &[f64], pts: &[usize]| pts.iter().map(|&x| v[x] * mu[x]).sum::<f64>();
    let one_side = |u: &[f64], v: &[f64], q: usize| {
        // ‖S_Q(u χ_Q)‖_{L^2(v)}^2 / u(Q)
        let outer = &grid.cube(q).members;
        let mut s = vec![0.0; space.len()];
        for &l in &family.cubes {
            let c = grid.cube(l);
            if c.members.iter().all(|x| outer.binary_search(x).is_ok()) {
                let avg = mass(u, &c.members) / c.measure;
                for &x in &c.members {
                    s[x] += avg;
                }
            }
        }
        let lhs: f64 = outer.iter().map(|&x| s[x] * s[x] * v[x] * mu[x]).sum();
        (lhs / mass(u, outer)).sqrt()
    };
    (0..grid.cubes().len()).fold((0.0f64, 0.0f64), |(c1, c2), q| {
        (c1.max(one_side(sigma, w, q)), c2.max(one_side(w, sigma, q)))
    })
}

/// `‖T‖_{L^2(w)} / ([w]_{A_2}^{1/2} ([w]_{A_∞} + [σ]_{A_∞})^{1/2})` and the
/// sparse testing constants normalised the same way.
pub struct MixedA2Ainf;

impl Experiment for MixedA2Ainf {
    fn kind(&self) -> &'static str {
        "mixed-a2-ainf"
    }

    fn summary(&self) -> &'static str {
        "||T||_{L^2(w)} against [w]_A2^(1/2) ([w]_Ainf + [sigma]_Ainf)^(1/2), with sparse testing conditions"
    }

    fn run(&self, setup: &Setup, config: &ExperimentConfig, report: &mut ExperimentReport) -> Result<(), HarnessError> {
        let a = setup.kernel()?.matrix();
        let opts = norm_options(config);
        let family = extract_sparse(&setup.grid, &AllLevelsThinned);
        report.records = sweep(setup, &[()], |_, w, _| {
            let (ap, ainf, sigma_ainf) = weight_stats(w, setup, 2.0)?;
            let est = weighted_norm(&a, &setup.space, 2.0, w.values(), &opts)?;
            let rhs = (ap * (ainf + sigma_ainf)).sqrt();
            let sigma = w.sigma(2.0)?;
            let (c1, c2) = testing_constants(&setup.grid, &family, w.values(), sigma.values());
            Ok(Record {
                ap,
                ainf,
                sigma_ainf,
                lhs: est.value,
                rhs,
                ratio: est.value / rhs,
                ..Record::default()
            }
            .with("exact", if est.kind == EstimateKind::Exact { 1.0 } else { 0.0 })
            .with("testing_sigma", c1 / rhs)
            .with("testing_w", c2 / rhs))
        });
        let recs = &report.records;
        report.measured_c = max_ratio(recs, |_| true);
        let extra_max = |key: &str| {
            super::evaluated(recs).filter_map(|r| r.extra.get(key).copied()).fold(0.0, f64::max)
        };
        let (t1, t2) = (extra_max("testing_sigma"), extra_max("testing_w"));
        report.verdicts.push(failure_verdict(recs));
        report.verdicts.push(Verdict::at_most("max/min ratio over the sweep", spread(recs, |_| true), SPREAD_LIMIT, 0.0));
        report.verdicts.push(Verdict::finite("sweep-wide testing constant, sigma side", t1));
        report.verdicts.push(Verdict::finite("sweep-wide testing constant, w side", t2));
        report.notes.push(format!("sparse family: all-levels-thinned, {} cubes", family.len()));
        report.notes.push("testing constants are divided by the same envelope as the operator norm".into());
        Ok(())
    }
}
