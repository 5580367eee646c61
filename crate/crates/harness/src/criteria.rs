//! The thirteen acceptance criteria, each a self-contained check with pinned
//! tolerances and a one-line outcome.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sht_core::bmo::{bmo_norm, corpus_function, jn_check};
use sht_core::dyadic::{build_grid, cz_decompose, extract_sparse, verify_grid, AllLevelsThinned, CzStack, DyadicGrid};
use sht_core::operators::{maximal, NormOptions, SparseOperator};
use sht_core::space::FiniteSht;
use sht_core::weights::{
    a1_constant, ainf_fujii_wilson, ainf_hruscev, ap_constant, dual_exponent, factor_check, levelset_inequality_check,
    lognormal_weight, power_weight, rubio_de_francia, verify_reverse_holder, Weight,
};

use crate::config::{ExperimentConfig, SpaceSpec};
use crate::experiments::Registry;
use crate::oracle;
use crate::setup::{build_space, default_delta};
use crate::suite::FULL_CONFIGS;
use crate::HarnessError;

/// Relative agreement demanded of optimised constants against the oracles.
pub const ORACLE_TOL: f64 = 1e-12;
/// Relative slack on the inequalities of criteria 3, 5, 6, 7 and 8.
pub const INEQUALITY_TOL: f64 = 1e-9;
/// Largest relative change of `β_X` between the two corpus halves.
pub const JN_HALF_SPREAD: f64 = 0.10;
pub const GRID_BUDGET: Duration = Duration::from_secs(120);
pub const REVERSE_HOLDER_BUDGET: Duration = Duration::from_secs(300);
pub const BUCKLEY_BUDGET: Duration = Duration::from_secs(300);

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Outcome {
    /// `[PASS] 3 reverse Hölder: ...`.
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {}: {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

type Check = fn() -> Result<(bool, String), HarnessError>;

pub const CRITERIA: [(u8, &str, Check); 13] = [
    (1, "grid lawfulness", grid_lawfulness),
    (2, "oracle equivalence", oracle_equivalence),
    (3, "reverse Hölder", reverse_holder),
    (4, "John-Nirenberg", john_nirenberg),
    (5, "level-set inequality", level_set),
    (6, "factorization", factorization),
    (7, "Rubio de Francia", rubio),
    (8, "duality identity", duality),
    (9, "Buckley scaling", buckley),
    (10, "mixed A2-Ainf", mixed),
    (11, "commutator scaling", commutator),
    (12, "weak endpoint", weak_endpoint),
    (13, "determinism", determinism),
];

pub fn run_one(id: u8) -> Option<Outcome> {
    let &(id, name, check) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let (passed, detail) = match check() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Some(Outcome {
        id,
        name,
        passed,
        detail,
        elapsed: start.elapsed(),
    })
}

pub fn run_all() -> Vec<Outcome> {
    CRITERIA.iter().filter_map(|c| run_one(c.0)).collect()
}

fn grid_for(space: FiniteSht) -> Result<DyadicGrid, HarnessError> {
    let space = Arc::new(space);
    let delta = default_delta(&space);
    Ok(build_grid(space, delta)?)
}

/// The builder zoo: intervals, Cantor sets, a snowflaked interval and ten
/// random graph metrics.
pub fn zoo() -> Vec<SpaceSpec> {
    let mut out = vec![
        SpaceSpec::Interval { n: 8 },
        SpaceSpec::Interval { n: 64 },
        SpaceSpec::Interval { n: 256 },
        SpaceSpec::Cantor { level: 2 },
        SpaceSpec::Cantor { level: 4 },
        SpaceSpec::Cantor { level: 6 },
        SpaceSpec::Snowflake { n: 64, s: 2.0 },
    ];
    out.extend((0..10).map(|seed| SpaceSpec::Graph {
        n: 24,
        edge_prob: 0.2,
        seed,
    }));
    out
}

/// Every space with at most 8 points used by the oracle comparison.
pub fn small_spaces() -> Vec<SpaceSpec> {
    let mut out: Vec<SpaceSpec> = (1..=8).map(|n| SpaceSpec::Interval { n }).collect();
    out.extend((0..=3).map(|level| SpaceSpec::Cantor { level }));
    out.push(SpaceSpec::Snowflake { n: 8, s: 2.0 });
    out.extend((0..6).map(|seed| SpaceSpec::Graph {
        n: 3 + seed as usize,
        edge_prob: 0.4,
        seed,
    }));
    out
}

fn grid_lawfulness() -> Result<(bool, String), HarnessError> {
    let start = Instant::now();
    let mut failed = Vec::new();
    let zoo = zoo();
    for spec in &zoo {
        let grid = grid_for(build_space(spec)?)?;
        if !verify_grid(&grid).all_passed() {
            failed.push(format!("{spec:?}"));
        }
    }
    let elapsed = start.elapsed();
    Ok((
        failed.is_empty() && elapsed <= GRID_BUDGET,
        format!("{} spaces, {} failing {:?}, {:.1}s of {}s", zoo.len(), failed.len(), failed, elapsed.as_secs_f64(), GRID_BUDGET.as_secs()),
    ))
}

/// Mismatches between the optimised routines and the oracles on one grid,
/// for a handful of random weights and functions.
pub fn oracle_mismatches(grid: &DyadicGrid, seed: u64) -> Result<Vec<String>, HarnessError> {
    let space = grid.space_arc().clone();
    let n = grid.len_points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = Vec::new();
    let check = |bad: &mut Vec<String>, what: &str, a: f64, b: f64| {
        if !oracle::rel_close(a, b, ORACLE_TOL) {
            bad.push(format!("{what}: {a} vs {b}"));
        }
    };
    for t in 0..4u64 {
        let w = lognormal_weight(space.clone(), 0.3 + 0.4 * t as f64, seed * 31 + t);
        let v = w.values();
        for p in [1.5, 2.0, 3.0] {
            check(&mut bad, &format!("A_{p}"), ap_constant(&w, grid, p)?, oracle::ap(grid, v, p));
        }
        check(&mut bad, "A_1", a1_constant(&w, grid)?, oracle::a1(grid, v));
        check(&mut bad, "A_inf Fujii-Wilson", ainf_fujii_wilson(&w, grid)?, oracle::fujii_wilson(grid, v));
        check(&mut bad, "A_inf Hruscev", ainf_hruscev(&w, grid)?, oracle::hruscev(grid, v));
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let log_w: Vec<f64> = v.iter().map(|x| x.ln()).collect();
        check(&mut bad, "BMO of f", bmo_norm(grid, &f), oracle::bmo(grid, &f));
        check(&mut bad, "BMO of log w", bmo_norm(grid, &log_w), oracle::bmo(grid, &log_w));
        for (x, (a, b)) in maximal(grid, &f).iter().zip(oracle::maximal(grid, &f)).enumerate() {
            check(&mut bad, &format!("Mf({x})"), *a, b);
        }
        let families = [
            extract_sparse(grid, &AllLevelsThinned),
            extract_sparse(grid, &CzStack::new(f.clone())),
        ];
        for fam in families {
            let op = SparseOperator::new(grid, fam.clone())?;
            for (x, (a, b)) in op.apply(&f).iter().zip(oracle::sparse_apply(grid, &fam.cubes, &f)).enumerate() {
                check(&mut bad, &format!("T^S f({x})"), *a, b);
            }
        }
        let top = f.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for frac in [0.1, 0.3, 0.6, 0.9] {
            let lambda = frac * top;
            if lambda <= 0.0 {
                continue;
            }
            let mut got = cz_decompose(grid, &f, lambda)?.cubes;
            got.sort_unstable();
            let want = oracle::cz_family(grid, &f, lambda);
            if got != want {
                bad.push(format!("CZ family at {lambda}: {got:?} vs {want:?}"));
            }
        }
    }
    Ok(bad)
}

fn oracle_equivalence() -> Result<(bool, String), HarnessError> {
    let specs = small_spaces();
    let mut bad = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let grid = grid_for(build_space(spec)?)?;
        for m in oracle_mismatches(&grid, i as u64)? {
            bad.push(format!("{spec:?}: {m}"));
        }
    }
    Ok((
        bad.is_empty(),
        format!("{} spaces with n <= 8, {} mismatches at {ORACLE_TOL:e}{}", specs.len(), bad.len(), first(&bad)),
    ))
}

fn first(items: &[String]) -> String {
    items.first().map(|s| format!("; first: {s}")).unwrap_or_default()
}

fn interval_grid(n: usize) -> Result<DyadicGrid, HarnessError> {
    grid_for(build_space(&SpaceSpec::Interval { n })?)
}

fn reverse_holder() -> Result<(bool, String), HarnessError> {
    let start = Instant::now();
    let grid = interval_grid(64)?;
    let space = grid.space_arc().clone();
    let mut weights: Vec<Weight> = (0..500u64)
        .map(|i| lognormal_weight(space.clone(), 0.25 * (1 + i % 8) as f64, 1000 + i))
        .collect();
    weights.extend((0..=39).map(|i| power_weight(space.clone(), -0.9 + 0.1 * i as f64)));
    let mut violations = 0;
    let mut worst = 0.0f64;
    for w in &weights {
        let rep = verify_reverse_holder(w, &grid)?;
        worst = worst.max(rep.worst_ratio);
        if !rep.passed {
            violations += 1;
        }
    }
    let elapsed = start.elapsed();
    Ok((
        violations == 0 && elapsed <= REVERSE_HOLDER_BUDGET,
        format!(
            "{} weights on interval n = 64, {violations} violations, worst ratio {worst:.6} against bound 2",
            weights.len()
        ),
    ))
}

/// `β_X` of each corpus half: the largest exponential average at `α_X`.
pub fn jn_halves(grid: &DyadicGrid, seed: u64) -> (f64, f64, bool) {
    let space = grid.space_arc();
    let betas: Vec<f64> = (0..200u64)
        .map(|i| jn_check(grid, &corpus_function(space, seed, i), None).sup_average)
        .collect();
    let finite = betas.iter().all(|b| b.is_finite());
    let half = |s: &[f64]| s.iter().copied().fold(0.0, f64::max);
    (half(&betas[..100]), half(&betas[100..]), finite)
}

fn john_nirenberg() -> Result<(bool, String), HarnessError> {
    let grid = interval_grid(64)?;
    let (b1, b2, finite) = jn_halves(&grid, 7);
    let change = (b1 / b2 - 1.0).abs();
    Ok((
        finite && change <= JN_HALF_SPREAD,
        format!("beta halves {b1:.6} and {b2:.6}, relative change {change:.4} (limit {JN_HALF_SPREAD})"),
    ))
}

fn level_set() -> Result<(bool, String), HarnessError> {
    let mut specs = vec![SpaceSpec::Interval { n: 16 }, SpaceSpec::Cantor { level: 4 }, SpaceSpec::Interval { n: 8 }];
    specs.extend((0..3).map(|seed| SpaceSpec::Graph {
        n: 16,
        edge_prob: 0.25,
        seed,
    }));
    let mut violations = 0;
    let mut pairs = 0;
    let mut worst = 0.0f64;
    for (i, spec) in specs.iter().enumerate() {
        let grid = grid_for(build_space(spec)?)?;
        let space = grid.space_arc().clone();
        let weights = [
            lognormal_weight(space.clone(), 0.5, i as u64),
            lognormal_weight(space.clone(), 1.5, 100 + i as u64),
            power_weight(space.clone(), 0.7),
            power_weight(space.clone(), -0.5),
        ];
        for w in &weights {
            for p in [1.5, 2.0, 3.0] {
                let rep = levelset_inequality_check(w, &grid, p, 64, i as u64)?;
                violations += rep.violations;
                pairs += rep.pairs_checked;
                worst = worst.max(rep.worst_ratio);
            }
        }
    }
    Ok((
        violations == 0,
        format!("{pairs} (cube, subset) pairs on {} spaces with n <= 16, {violations} violations, worst ratio {worst:.6}", specs.len()),
    ))
}

fn factorization() -> Result<(bool, String), HarnessError> {
    let grid = interval_grid(32)?;
    let space = grid.space_arc().clone();
    let mut violations = 0;
    let mut checked = 0;
    for (j, (p, p0)) in [(2.0, 3.0), (1.5, 4.0), (3.0, 2.0), (4.0, 1.5)].into_iter().enumerate() {
        for i in 0..200u64 {
            let seed = 10_000 * j as u64 + 2 * i;
            let w = lognormal_weight(space.clone(), 0.2 + 0.1 * (i % 8) as f64, seed);
            let u = lognormal_weight(space.clone(), 0.2 + 0.1 * (i % 5) as f64, seed + 1);
            let rep = factor_check(&w, &u, &grid, p, p0)?;
            checked += 1;
            if rep.composite > rep.bound * (1.0 + INEQUALITY_TOL) {
                violations += 1;
            }
        }
    }
    Ok((violations == 0, format!("{checked} (w, u) pairs over four (p, p0), {violations} violations")))
}

fn rubio() -> Result<(bool, String), HarnessError> {
    let grid = interval_grid(32)?;
    let space = grid.space_arc().clone();
    let weights = [power_weight(space.clone(), 0.5), lognormal_weight(space.clone(), 0.7, 3)];
    let opts = NormOptions {
        trials: 8,
        seed: 5,
        ..NormOptions::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let fs: Vec<Vec<f64>> = (0..100)
        .map(|_| (0..32).map(|_| rng.random_range(0.0..1.0f64).powi(3)).collect())
        .collect();
    let mut failures = 0;
    let mut runs = 0;
    let mut worst_norm = 0.0f64;
    let mut worst_a1 = 0.0f64;
    for w in &weights {
        for p in [1.5, 3.0] {
            for f in &fs {
                let rep = rubio_de_francia(f, &grid, p, w, &opts)?;
                runs += 1;
                worst_norm = worst_norm.max(rep.norm_ratio);
                worst_a1 = worst_a1.max(rep.a1 / (2.0 * rep.m_norm));
                let ok = rep.majorizes
                    && rep.norm_ratio <= 2.0 * (1.0 + INEQUALITY_TOL)
                    && rep.a1 <= 2.0 * rep.m_norm * (1.0 + INEQUALITY_TOL);
                if !ok {
                    failures += 1;
                }
            }
        }
    }
    Ok((
        failures == 0,
        format!("{runs} runs, {failures} failing; worst ||Rf||/||f|| {worst_norm:.6} (<= 2), worst [Rf]_A1 / 2||M|| {worst_a1:.6} (<= 1)"),
    ))
}

fn duality() -> Result<(bool, String), HarnessError> {
    let grid = interval_grid(64)?;
    let space = grid.space_arc().clone();
    let mut worst = 0.0f64;
    for i in 0..200u64 {
        let p = [1.5, 2.0, 3.0, 4.0][i as usize % 4];
        let w = lognormal_weight(space.clone(), 0.2 + 0.15 * (i % 10) as f64, 500 + i);
        let lhs = ap_constant(&w.sigma(p)?, &grid, dual_exponent(p))?;
        let rhs = ap_constant(&w, &grid, p)?.powf(dual_exponent(p) - 1.0);
        worst = worst.max((lhs - rhs).abs() / rhs);
    }
    Ok((worst <= INEQUALITY_TOL, format!("200 weights, worst relative gap {worst:.3e} (limit {INEQUALITY_TOL:e})")))
}

fn full_config(kind: &str) -> Result<ExperimentConfig, HarnessError> {
    let (_, text) = FULL_CONFIGS
        .iter()
        .find(|(k, _)| *k == kind)
        .ok_or_else(|| HarnessError::UnknownKind(kind.into()))?;
    ExperimentConfig::parse(text)
}

fn verdict_summary(report: &crate::ExperimentReport) -> String {
    let failing: Vec<&str> = report.verdicts.iter().filter(|v| !v.passed).map(|v| v.name.as_str()).collect();
    if failing.is_empty() {
        format!("{} verdicts pass", report.verdicts.len())
    } else {
        format!("failing verdicts: {}", failing.join("; "))
    }
}

fn buckley() -> Result<(bool, String), HarnessError> {
    let start = Instant::now();
    let report = Registry::default().run(&full_config("buckley-scaling")?)?;
    let fit = report.fits.first().cloned();
    let elapsed = start.elapsed();
    Ok(match fit {
        Some(f) => (
            f.issued && f.passed && report.all_passed() && elapsed <= BUCKLEY_BUDGET,
            format!(
                "slope {:.4} in [{}, {}], R^2 {:.4}, {} points; {}",
                f.slope,
                f.lo,
                f.hi,
                f.r_squared,
                f.points,
                verdict_summary(&report)
            ),
        ),
        None => (false, "no fit".into()),
    })
}

fn experiment_criterion(kind: &str) -> Result<(bool, String), HarnessError> {
    let report = Registry::default().run(&full_config(kind)?)?;
    Ok((report.all_passed(), format!("measured C {:.4}; {}", report.measured_c, verdict_summary(&report))))
}

fn mixed() -> Result<(bool, String), HarnessError> {
    experiment_criterion("mixed-a2-ainf")
}

fn commutator() -> Result<(bool, String), HarnessError> {
    experiment_criterion("commutator")
}

fn weak_endpoint() -> Result<(bool, String), HarnessError> {
    experiment_criterion("weak-endpoint")
}

fn determinism() -> Result<(bool, String), HarnessError> {
    let registry = Registry::default();
    let mut differing = Vec::new();
    let configs = crate::suite::SMOKE_CONFIGS;
    for (kind, text) in configs {
        let cfg = ExperimentConfig::parse(text)?;
        let a = registry.run(&cfg)?;
        let b = registry.run(&cfg)?;
        if a.to_json() != b.to_json() || a.to_csv() != b.to_csv() {
            differing.push(*kind);
        }
    }
    Ok((
        differing.is_empty(),
        format!("{} experiments rerun, {} differing {:?}", configs.len(), differing.len(), differing),
    ))
}
