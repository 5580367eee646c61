use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::Serialize;

use super::norm::{lp_norm, trial_rng};
use super::{ball_maximal, check_len, check_weight, maximal, maximal_r, KernelOperator, OperatorError, SparseOperator};
use crate::dyadic::{cz_decompose, extract_sparse, AllLevelsThinned, CzStack, DyadicGrid, SelectionRule};
use crate::space::REL_TOL;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationReport {
    /// `‖Tf‖ / max_S ‖T^S |f|‖` per trial.
    pub ratios: Vec<f64>,
    pub measured_c: f64,
}

/// Compares `‖Tf‖_{L^p(w)}` with the largest `‖T^S |f|‖_{L^p(w)}` over sparse
/// families built from `|f|` (Calderón–Zygmund stacks at bases 2 and 4 and the
/// thinned family of all cubes).
pub fn lerner_domination_check(
    op: &KernelOperator,
    grid: &DyadicGrid,
    p: f64,
    w: &[f64],
    trials: usize,
    seed: u64,
) -> Result<DominationReport, OperatorError> {
    if op.certificate().is_none() {
        return Err(OperatorError::Uncertified);
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(OperatorError::PInvalid(p));
    }
    let n = grid.len_points();
    check_weight(w, n)?;
    let a = op.matrix();
    let mu = grid.space().masses();
    let mut ratios = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = trial_rng(seed, t as u64);
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        ratios.push(domination_ratio(&a, grid, p, w, &f, mu)?);
    }
    let measured_c = ratios.iter().copied().fold(0.0, f64::max);
    Ok(DominationReport { ratios, measured_c })
}

pub(crate) fn domination_ratio(
    a: &nalgebra::DMatrix<f64>,
    grid: &DyadicGrid,
    p: f64,
    w: &[f64],
    f: &[f64],
    mu: &[f64],
) -> Result<f64, OperatorError> {
    let tf = a * DVector::from_column_slice(f);
    let num = lp_norm(tf.as_slice(), w, mu, p);
    if num == 0.0 {
        return Ok(0.0);
    }
    let abs: Vec<f64> = f.iter().map(|v| v.abs()).collect();
    let rules: [Box<dyn SelectionRule>; 3] = [
        Box::new(CzStack { f: abs.clone(), base: 2.0 }),
        Box::new(CzStack { f: abs.clone(), base: 4.0 }),
        Box::new(AllLevelsThinned),
    ];
    let mut den = 0.0f64;
    for rule in &rules {
        let s = SparseOperator::new(grid, extract_sparse(grid, rule.as_ref()))?;
        den = den.max(lp_norm(&s.apply(&abs), w, mu, p));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffSupportReport {
    /// `∫_{X∖Q̃} |Ta| w / ∫ |a| Mw` per trial; trials with both sides zero are skipped.
    pub ratios: Vec<f64>,
    pub measured_c: f64,
    pub trivial_trials: usize,
}

/// `∫_{X∖Q̃} |Ta| w dmu / ∫ |a| Mw dmu` for one mean-zero atom `a` supported in
/// cube `q`, with `Q̃ = B(x_c, 2 kappa C scale(Q))`. Both sides zero gives 0.
pub fn offsupport_ratio(
    op: &KernelOperator,
    grid: &DyadicGrid,
    q: usize,
    a: &[f64],
    w: &[f64],
) -> Result<(f64, f64), OperatorError> {
    let space = grid.space();
    let n = space.len();
    check_len(a, n)?;
    check_len(w, n)?;
    let cube = grid.cube(q);
    if (0..n).any(|x| a[x] != 0.0 && !cube.contains(x)) {
        return Err(OperatorError::AtomOutsideCube);
    }
    let integral = space.integrate(a);
    let scale: f64 = a.iter().zip(space.masses()).map(|(v, m)| v.abs() * m).sum();
    if integral.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(OperatorError::AtomNotMeanZero(integral));
    }
    let radius = 2.0 * space.kappa() * grid.c_sandwich() * grid.scale(cube.level);
    let dilated = space.ball(cube.center, radius);
    let ta = op.matrix() * DVector::from_column_slice(a);
    let lhs: f64 = (0..n)
        .filter(|&x| !dilated.contains(x))
        .map(|x| ta[x].abs() * w[x] * space.mu(x))
        .sum();
    let mw = maximal(grid, w);
    let rhs: f64 = (0..n).map(|x| a[x].abs() * mw[x] * space.mu(x)).sum();
    Ok((lhs, rhs))
}

/// Random mean-zero atoms in random cubes against random log-normal weights.
pub fn offsupport_bound_check(
    op: &KernelOperator,
    grid: &DyadicGrid,
    trials: usize,
    seed: u64,
) -> Result<OffSupportReport, OperatorError> {
    if op.certificate().is_none() {
        return Err(OperatorError::Uncertified);
    }
    let space = grid.space();
    let n = space.len();
    let cubes: Vec<usize> = (0..grid.cubes().len()).filter(|&q| grid.cube(q).len() >= 2).collect();
    let mut report = OffSupportReport {
        ratios: Vec::new(),
        measured_c: 0.0,
        trivial_trials: 0,
    };
    if cubes.is_empty() {
        report.trivial_trials = trials;
        return Ok(report);
    }
    let lognormal = LogNormal::new(0.0, 1.0).expect("valid parameters");
    for t in 0..trials {
        let mut rng = trial_rng(seed, t as u64);
        let q = cubes[rng.random_range(0..cubes.len())];
        let cube = grid.cube(q);
        let mut a = vec![0.0; n];
        for &x in &cube.members {
            a[x] = rng.random_range(-1.0..1.0);
        }
        let mean = space.integrate_over(&a, &cube.members) / cube.measure;
        for &x in &cube.members {
            a[x] -= mean;
        }
        let w: Vec<f64> = (0..n).map(|_| lognormal.sample(&mut rng)).collect();
        let (lhs, rhs) = offsupport_ratio(op, grid, q, &a, &w)?;
        if rhs == 0.0 {
            report.trivial_trials += 1;
            continue;
        }
        report.ratios.push(lhs / rhs);
    }
    report.measured_c = report.ratios.iter().copied().fold(0.0, f64::max);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizationReport {
    /// Worst `sup_{Q_j} / inf_{Q_j}` of the dyadic `M_r(w χ_{Ω̃^c})`.
    pub dyadic_worst: f64,
    /// Same with the maximal function over balls.
    pub ball_worst: f64,
    pub cubes_checked: usize,
}

/// For Calderón–Zygmund cubes `Q_j` of random functions, compares the
/// largest and smallest values of `M_r(w χ_{Ω̃^c})` on each `Q_j`, where
/// `Ω̃` is the union of the dilations `B(x_c, 2 kappa C scale(Q_j))`.
/// A cube on which the function vanishes identically has ratio 1.
pub fn maximal_localization_check(
    grid: &DyadicGrid,
    w: &[f64],
    r: f64,
    trials: usize,
    seed: u64,
) -> Result<LocalizationReport, OperatorError> {
    if !(r >= 1.0) {
        return Err(OperatorError::RInvalid(r));
    }
    let space = grid.space();
    let n = space.len();
    check_len(w, n)?;
    let mut report = LocalizationReport {
        dyadic_worst: 1.0,
        ball_worst: 1.0,
        cubes_checked: 0,
    };
    for t in 0..trials {
        let mut rng = trial_rng(seed, t as u64);
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0f64).powi(6)).collect();
        let lambda = 2.0 * space.integrate(&f) / space.total_mass();
        if lambda <= 0.0 {
            continue;
        }
        let family = cz_decompose(grid, &f, lambda)?;
        let mut outside = vec![true; n];
        for &q in &family.cubes {
            let c = grid.cube(q);
            let radius = 2.0 * space.kappa() * grid.c_sandwich() * grid.scale(c.level);
            for x in space.ball(c.center, radius).members {
                outside[x] = false;
            }
        }
        let u: Vec<f64> = (0..n).map(|x| if outside[x] { w[x] } else { 0.0 }).collect();
        let dyadic = maximal_r(grid, &u, r)?;
        let pow: Vec<f64> = u.iter().map(|v| v.abs().powf(r)).collect();
        let ball: Vec<f64> = ball_maximal(space, &pow).into_iter().map(|v| v.powf(1.0 / r)).collect();
        for &q in &family.cubes {
            let members = &grid.cube(q).members;
            report.dyadic_worst = report.dyadic_worst.max(spread(&dyadic, members));
            report.ball_worst = report.ball_worst.max(spread(&ball, members));
            report.cubes_checked += 1;
        }
    }
    Ok(report)
}

fn spread(values: &[f64], members: &[usize]) -> f64 {
    let hi = members.iter().map(|&x| values[x]).fold(0.0, f64::max);
    let lo = members.iter().map(|&x| values[x]).fold(f64::INFINITY, f64::min);
    if hi <= REL_TOL * lo.abs() || hi == 0.0 {
        1.0
    } else if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::DMatrix;

    use super::*;
    use crate::dyadic::build_grid;
    use crate::operators::graded_sign_kernel;
    use crate::space::build_interval_space;

    fn setup(n: usize) -> (DyadicGrid, KernelOperator) {
        let space = Arc::new(build_interval_space(n).unwrap());
        let g = build_grid(space.clone(), 0.125).unwrap();
        let k = graded_sign_kernel(&space);
        (g, KernelOperator::certified(space, k).unwrap())
    }

    #[test]
    fn zero_kernel_dominates_trivially() {
        let space = Arc::new(build_interval_space(16).unwrap());
        let g = build_grid(space.clone(), 0.125).unwrap();
        let op = KernelOperator::certified(space, DMatrix::zeros(16, 16)).unwrap();
        let r = lerner_domination_check(&op, &g, 2.0, &[1.0; 16], 5, 1).unwrap();
        assert_eq!(r.measured_c, 0.0);
    }

    #[test]
    fn uncertified_kernel_is_rejected() {
        let space = Arc::new(build_interval_space(4).unwrap());
        let g = build_grid(space.clone(), 0.125).unwrap();
        let op = KernelOperator::new(space, DMatrix::zeros(4, 4)).unwrap();
        assert!(matches!(
            lerner_domination_check(&op, &g, 2.0, &[1.0; 4], 1, 0),
            Err(OperatorError::Uncertified)
        ));
    }

    #[test]
    fn domination_constant_is_finite() {
        let (g, op) = setup(64);
        let r = lerner_domination_check(&op, &g, 2.0, &vec![1.0; 64], 20, 7).unwrap();
        assert!(r.measured_c.is_finite() && r.measured_c > 0.0);
    }

    #[test]
    fn atoms() {
        let (g, op) = setup(32);
        let w = vec![1.0; 32];
        let leaf = g.level(g.k_min())[0];
        assert_eq!(offsupport_ratio(&op, &g, leaf, &[0.0; 32], &w).unwrap(), (0.0, 0.0));
        let q = (0..g.cubes().len()).find(|&q| g.cube(q).len() == 2 || g.cube(q).len() > 2).unwrap();
        let c = g.cube(q);
        let mut a = vec![0.0; 32];
        a[c.members[0]] = 1.0 / g.space().mu(c.members[0]);
        a[c.members[1]] = -1.0 / g.space().mu(c.members[1]);
        let (lhs, rhs) = offsupport_ratio(&op, &g, q, &a, &w).unwrap();
        assert!(rhs > 0.0 && (lhs / rhs).is_finite());
        a[c.members[1]] = 0.0;
        assert!(matches!(
            offsupport_ratio(&op, &g, q, &a, &w),
            Err(OperatorError::AtomNotMeanZero(_))
        ));
        let r = offsupport_bound_check(&op, &g, 30, 3).unwrap();
        assert!(r.measured_c.is_finite());
    }

    #[test]
    fn localization_with_vanishing_weight_is_one() {
        let (g, _) = setup(64);
        let r = maximal_localization_check(&g, &[0.0; 64], 2.0, 5, 0).unwrap();
        assert_eq!(r.dyadic_worst, 1.0);
        assert_eq!(r.ball_worst, 1.0);
        let r = maximal_localization_check(&g, &vec![1.0; 64], 2.0, 5, 0).unwrap();
        assert!(r.ball_worst.is_finite() && r.dyadic_worst.is_finite());
    }
}
