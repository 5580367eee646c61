use rand::Rng;
use serde::Serialize;

use super::{a1_constant, ainf_fujii_wilson, ap_constant, rh_exponent, Weight, WeightError};
use crate::dyadic::DyadicGrid;
use crate::operators::maximal_within;

/// Relative slack allowed on inequality assertions.
pub(crate) const INEQ_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReverseHolderReport {
    pub r: f64,
    pub bound: f64,
    pub worst_ratio: f64,
    pub worst_cube: usize,
    pub cubes_checked: usize,
    pub passed: bool,
}

fn finish(r: f64, bound: f64, ratios: impl Iterator<Item = f64>) -> ReverseHolderReport {
    let mut report = ReverseHolderReport {
        r,
        bound,
        worst_ratio: 0.0,
        worst_cube: 0,
        cubes_checked: 0,
        passed: true,
    };
    for (q, ratio) in ratios.enumerate() {
        if ratio > report.worst_ratio {
            report.worst_ratio = ratio;
            report.worst_cube = q;
        }
        report.cubes_checked += 1;
    }
    report.passed = report.worst_ratio <= bound * (1.0 + INEQ_TOL);
    report
}

/// `avg_Q w^{1+r} / (avg_Q w)^{1+r}` on every cube at the sharp exponent `r`,
/// against the bound 2.
pub fn verify_reverse_holder(w: &Weight, grid: &DyadicGrid) -> Result<ReverseHolderReport, WeightError> {
    let r = rh_exponent(w, grid)?;
    let pow: Vec<f64> = w.values().iter().map(|v| v.powf(1.0 + r)).collect();
    let a = grid.averages(w.values());
    let b = grid.averages(&pow);
    Ok(finish(r, 2.0, b.iter().zip(&a).map(|(x, y)| x / y.powf(1.0 + r))))
}

/// `avg_Q M(wχ_Q)^{1+r} / (avg_Q w)^{1+r}` on every cube, against `2 [w]_{A_∞}`.
pub fn verify_rhi_maximal(w: &Weight, grid: &DyadicGrid) -> Result<ReverseHolderReport, WeightError> {
    let r = rh_exponent(w, grid)?;
    let fw = ainf_fujii_wilson(w, grid)?;
    let mu = grid.space().masses();
    let a = grid.averages(w.values());
    let ratios: Vec<f64> = (0..grid.cubes().len())
        .map(|q| {
            let m = maximal_within(grid, w.values(), q);
            let c = grid.cube(q);
            let lhs = c.members.iter().map(|&x| m[x].powf(1.0 + r) * mu[x]).sum::<f64>() / c.measure;
            lhs / a[q].powf(1.0 + r)
        })
        .collect();
    Ok(finish(r, 2.0 * fw, ratios.into_iter()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetReport {
    pub p: f64,
    pub ap: f64,
    /// Largest `(mu(A)/mu(Q))^p / ([w]_{A_p} w(A)/w(Q))`.
    pub worst_ratio: f64,
    pub pairs_checked: u64,
    pub violations: u64,
    /// Cubes whose subsets were all enumerated.
    pub exhaustive_cubes: usize,
    pub passed: bool,
}

/// Cubes with at most this many points have every subset enumerated.
const EXHAUSTIVE_POINTS: usize = 16;
const SUBSET_CAP: u64 = 100_000;

/// `(mu(A)/mu(Q))^p ≤ [w]_{A_p} w(A)/w(Q)` for subsets `A ⊆ Q`: every subset
/// of small cubes, all singletons of every cube, and `trials` random subsets
/// of the larger cubes.
pub fn levelset_inequality_check(
    w: &Weight,
    grid: &DyadicGrid,
    p: f64,
    trials: usize,
    seed: u64,
) -> Result<LevelSetReport, WeightError> {
    let ap = ap_constant(w, grid, p)?;
    let space = grid.space();
    let mu = space.masses();
    let wv = w.values();
    let mut report = LevelSetReport {
        p,
        ap,
        worst_ratio: 0.0,
        pairs_checked: 0,
        violations: 0,
        exhaustive_cubes: 0,
        passed: true,
    };
    let mut record = |ma: f64, wa: f64, mq: f64, wq: f64| {
        let lhs = (ma / mq).powf(p);
        let rhs = ap * wa / wq;
        report.pairs_checked += 1;
        if lhs > rhs * (1.0 + INEQ_TOL) {
            report.violations += 1;
        }
        if lhs > 0.0 {
            report.worst_ratio = report.worst_ratio.max(lhs / rhs);
        }
    };
    let mut large = Vec::new();
    let mut exhaustive = 0;
    for (q, c) in grid.cubes().iter().enumerate() {
        let wq = w.mass_of(&c.members);
        let m = c.members.len();
        if m <= EXHAUSTIVE_POINTS && (1u64 << m) <= SUBSET_CAP {
            exhaustive += 1;
            // Gray-code walk: one point toggles per step
            let (mut ma, mut wa) = (0.0f64, 0.0f64);
            let mut inside = vec![false; m];
            for step in 1u64..(1u64 << m) {
                let bit = step.trailing_zeros() as usize;
                let x = c.members[bit];
                let sign = if inside[bit] { -1.0 } else { 1.0 };
                inside[bit] = !inside[bit];
                ma += sign * mu[x];
                wa += sign * wv[x] * mu[x];
                // recompute exactly to keep rounding from accumulating
                if step % 64 == 0 {
                    ma = c.members.iter().zip(&inside).filter(|(_, &i)| i).map(|(&y, _)| mu[y]).sum();
                    wa = c.members.iter().zip(&inside).filter(|(_, &i)| i).map(|(&y, _)| wv[y] * mu[y]).sum();
                }
                record(ma.max(0.0), wa.max(0.0), c.measure, wq);
            }
        } else {
            for &x in &c.members {
                record(mu[x], wv[x] * mu[x], c.measure, wq);
            }
            large.push(q);
        }
    }
    if !large.is_empty() {
        let mut rng = crate::operators::trial_rng(seed, 0);
        for _ in 0..trials {
            let c = grid.cube(large[rng.random_range(0..large.len())]);
            let density: f64 = rng.random_range(0.0..1.0);
            let (mut ma, mut wa) = (0.0, 0.0);
            for &x in &c.members {
                if rng.random_bool(density) {
                    ma += mu[x];
                    wa += wv[x] * mu[x];
                }
            }
            record(ma, wa, c.measure, w.mass_of(&c.members));
        }
    }
    report.exhaustive_cubes = exhaustive;
    report.passed = report.violations == 0;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorReport {
    /// 1 for `p < p0`, 2 for `p0 < p`.
    pub case: u8,
    pub p: f64,
    pub p0: f64,
    pub composite: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Builds the factorization composite of `w ∈ A_p` and `u ∈ A_1` and compares
/// its `A_{p0}` constant with the product bound. `p = 1` in the first case
/// uses `[w]_{A_1}`.
pub fn factor_check(w: &Weight, u: &Weight, grid: &DyadicGrid, p: f64, p0: f64) -> Result<FactorReport, WeightError> {
    let ua1 = a1_constant(u, grid)?;
    let (case, composite, bound) = if 1.0 <= p && p < p0 {
        let wp = if p == 1.0 { a1_constant(w, grid)? } else { ap_constant(w, grid, p)? };
        let v: Vec<f64> = w.values().iter().zip(u.values()).map(|(a, b)| a * b.powf(p - p0)).collect();
        let c = Weight::new(w.space_arc().clone(), v)?;
        (1, ap_constant(&c, grid, p0)?, wp * ua1.powf(p0 - p))
    } else if 1.0 < p0 && p0 < p {
        let wp = ap_constant(w, grid, p)?;
        let v: Vec<f64> = w
            .values()
            .iter()
            .zip(u.values())
            .map(|(a, b)| (a.powf(p0 - 1.0) * b.powf(p - p0)).powf(1.0 / (p - 1.0)))
            .collect();
        let c = Weight::new(w.space_arc().clone(), v)?;
        let bound = wp.powf((p0 - 1.0) / (p - 1.0)) * ua1.powf((p - p0) / (p - 1.0));
        (2, ap_constant(&c, grid, p0)?, bound)
    } else {
        return Err(WeightError::ExponentOrder { p, p0 });
    };
    Ok(FactorReport {
        case,
        p,
        p0,
        composite,
        bound,
        passed: composite <= bound * (1.0 + INEQ_TOL),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::dyadic::build_grid;
    use crate::space::build_interval_space;
    use crate::weights::{lognormal_weight, power_weight};

    fn grid(n: usize) -> DyadicGrid {
        build_grid(Arc::new(build_interval_space(n).unwrap()), 0.125).unwrap()
    }

    #[test]
    fn constant_weight_reverse_holder() {
        let g = grid(16);
        let w = Weight::constant(g.space_arc().clone(), 2.0).unwrap();
        let r = verify_reverse_holder(&w, &g).unwrap();
        assert!(r.passed && (r.worst_ratio - 1.0).abs() < 1e-12);
        let m = verify_rhi_maximal(&w, &g).unwrap();
        assert!(m.passed && (m.worst_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_weights_satisfy_reverse_holder() {
        let g = grid(64);
        for i in 0..=39 {
            let a = -0.9 + 0.1 * i as f64;
            let w = power_weight(g.space_arc().clone(), a);
            assert!(verify_reverse_holder(&w, &g).unwrap().passed, "a = {a}");
            assert!(verify_rhi_maximal(&w, &g).unwrap().passed, "a = {a}");
        }
    }

    #[test]
    fn levelset_small_space_exhaustive() {
        let g = grid(16);
        for seed in 0..5 {
            let w = lognormal_weight(g.space_arc().clone(), 1.0, seed);
            let r = levelset_inequality_check(&w, &g, 2.0, 100, seed).unwrap();
            assert!(r.passed, "{r:?}");
            assert_eq!(r.exhaustive_cubes, g.cubes().len());
            assert!(r.worst_ratio <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn factorization_cases() {
        let g = grid(16);
        let one = Weight::constant(g.space_arc().clone(), 1.0).unwrap();
        let r = factor_check(&one, &one, &g, 2.0, 3.0).unwrap();
        assert!((r.composite - 1.0).abs() < 1e-14 && (r.bound - 1.0).abs() < 1e-14);
        let w = lognormal_weight(g.space_arc().clone(), 0.7, 1);
        let u = lognormal_weight(g.space_arc().clone(), 0.4, 2);
        assert_eq!(factor_check(&w, &u, &g, 3.0, 2.0).unwrap().case, 2);
        assert!(factor_check(&w, &u, &g, 2.0, 3.0).unwrap().passed);
        assert!(factor_check(&w, &u, &g, 1.0, 2.0).unwrap().passed);
        assert!(matches!(
            factor_check(&w, &u, &g, 2.0, 2.0),
            Err(WeightError::ExponentOrder { .. })
        ));
    }
}
