use serde::Serialize;

use super::checks::INEQ_TOL;
use super::{a1_of_values, ainf_fujii_wilson, ap_constant, dual_exponent, Weight, WeightError};
use crate::bmo::{alpha_x, bmo_norm};
use crate::dyadic::DyadicGrid;
use crate::operators::{lp_norm, maximal, maximal_norm_lower_bound, NormOptions, OperatorError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RubioReport {
    pub rf: Vec<f64>,
    /// The value of `‖M‖_{L^p(w)}` used in the series.
    pub m_norm: f64,
    /// Lower bound from the norm search before growth ratios are folded in.
    pub m_norm_search: f64,
    pub terms: usize,
    pub majorizes: bool,
    /// `‖Rf‖ / ‖f‖`, 0 for `f = 0`.
    pub norm_ratio: f64,
    pub a1: f64,
    pub passed: bool,
}

const MAX_TERMS: usize = 4000;

/// `Rf = Σ_k M^k f / (2N)^k` with `N` an estimate of `‖M‖_{L^p(w)}`.
///
/// `N` is the larger of a norm search and the realised ratios
/// `‖M^{k+1} f‖ / ‖M^k f‖`, so `‖M^k f‖ ≤ N^k ‖f‖` holds along the series.
/// Terms are added until the remaining tail, bounded by
/// `max f · Σ_{j > k} (2N)^{-j}`, drops below `1e-12` of the smallest
/// positive partial sum.
pub fn rubio_de_francia(
    f: &[f64],
    grid: &DyadicGrid,
    p: f64,
    w: &Weight,
    opts: &NormOptions,
) -> Result<RubioReport, WeightError> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(WeightError::PInvalid(p));
    }
    let n = grid.len_points();
    if f.len() != n {
        return Err(WeightError::LengthMismatch {
            expected: n,
            found: f.len(),
        });
    }
    if f.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(WeightError::NonPositive);
    }
    let search = maximal_norm_lower_bound(grid, p, w.values(), &[f.to_vec()], opts)
        .map_err(|e| WeightError::NormEstimateFailed(e.to_string()))?;
    if !(search.value.is_finite() && search.value >= 1.0 - 1e-9) {
        return Err(WeightError::NormEstimateFailed(format!("implausible value {}", search.value)));
    }
    let mu = grid.space().masses();
    let wv = w.values();
    let fmax = f.iter().copied().fold(0.0, f64::max);
    let mut n_est = search.value.max(1.0);
    let mut iterates = vec![f.to_vec()];
    let mut norms = vec![lp_norm(f, wv, mu, p)];
    loop {
        let next = maximal(grid, iterates.last().expect("nonempty"));
        let nn = lp_norm(&next, wv, mu, p);
        let prev = *norms.last().expect("nonempty");
        if prev > 0.0 {
            n_est = n_est.max(nn / prev);
        }
        iterates.push(next);
        norms.push(nn);
        let k = iterates.len() - 1;
        let ratio = 1.0 / (2.0 * n_est);
        let tail = fmax * ratio.powi(k as i32 + 1) / (1.0 - ratio);
        let mf = &iterates[1];
        let floor = mf.iter().filter(|&&v| v > 0.0).fold(f64::INFINITY, |a, &v| a.min(v)) * ratio;
        if fmax == 0.0 || tail <= 1e-12 * floor || k >= MAX_TERMS {
            break;
        }
    }
    let mut rf = vec![0.0; n];
    let mut scale = 1.0;
    for it in &iterates {
        for (r, v) in rf.iter_mut().zip(it) {
            *r += v * scale;
        }
        scale /= 2.0 * n_est;
    }
    let fnorm = norms[0];
    let norm_ratio = if fnorm == 0.0 { 0.0 } else { lp_norm(&rf, wv, mu, p) / fnorm };
    let majorizes = rf.iter().zip(f).all(|(r, v)| r >= v);
    let a1 = a1_of_values(grid, &rf);
    let passed = majorizes && norm_ratio <= 2.0 * (1.0 + INEQ_TOL) && a1 <= 2.0 * n_est * (1.0 + INEQ_TOL);
    Ok(RubioReport {
        rf,
        m_norm: n_est,
        m_norm_search: search.value,
        terms: iterates.len(),
        majorizes,
        norm_ratio,
        a1,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoifmanRochbergReport {
    pub r: f64,
    pub r_dual: f64,
    /// `[(Mf)^{1/r}]_{A_1}`.
    pub a1: f64,
    /// `a1 / r'`.
    pub ratio: f64,
}

pub fn coifman_rochberg_check(f: &[f64], grid: &DyadicGrid, r: f64) -> Result<CoifmanRochbergReport, WeightError> {
    if !(r > 1.0) {
        return Err(OperatorError::RInvalid(r).into());
    }
    if f.len() != grid.len_points() {
        return Err(WeightError::LengthMismatch {
            expected: grid.len_points(),
            found: f.len(),
        });
    }
    if f.iter().all(|&v| v == 0.0) {
        return Err(WeightError::ZeroFunction);
    }
    let v: Vec<f64> = maximal(grid, f).into_iter().map(|m| m.powf(1.0 / r)).collect();
    let a1 = a1_of_values(grid, &v);
    let r_dual = dual_exponent(r);
    Ok(CoifmanRochbergReport {
        r,
        r_dual,
        a1,
        ratio: a1 / r_dual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtrapolationReport {
    /// 1 for `p < p0`, 2 for `p > p0`.
    pub case: u8,
    pub ap: f64,
    /// `‖M‖_{L^p(w)}` in the first case, `‖M‖_{L^{p'}(σ)}` in the second.
    pub m_norm: f64,
    /// The argument handed to `N`.
    pub argument: f64,
    pub k: f64,
}

/// `K(w)` of the extrapolation theorem with `N` applied to the whole product:
/// `N([w]_{A_p} (2‖M‖_{L^p(w)})^{p0-p})` for `p < p0` and
/// `N([w]_{A_p}^{(p0-1)/(p-1)} (2‖M‖_{L^{p'}(σ)})^{(p-p0)/(p-1)})` for `p > p0`.
/// Maximal norms are lower bounds from the ascent search.
pub fn extrapolation_constant(
    w: &Weight,
    grid: &DyadicGrid,
    p: f64,
    p0: f64,
    n_fn: &dyn Fn(f64) -> f64,
    opts: &NormOptions,
) -> Result<ExtrapolationReport, WeightError> {
    if p == p0 {
        return Err(WeightError::CaseMismatch);
    }
    let ap = ap_constant(w, grid, p)?;
    let (case, m_norm, argument) = if p < p0 {
        let m = maximal_norm_lower_bound(grid, p, w.values(), &[], opts)?.value;
        (1, m, ap * (2.0 * m).powf(p0 - p))
    } else {
        let q = dual_exponent(p);
        let sigma = w.sigma(p)?;
        let m = maximal_norm_lower_bound(grid, q, sigma.values(), &[], opts)?.value;
        let e = (p0 - 1.0) / (p - 1.0);
        (2, m, ap.powf(e) * (2.0 * m).powf((p - p0) / (p - 1.0)))
    };
    Ok(ExtrapolationReport {
        case,
        ap,
        m_norm,
        argument,
        k: n_fn(argument),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugatedPoint {
    pub z: f64,
    pub a2_ratio: f64,
    pub ainf_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugatedWeightReport {
    pub bmo_norm: f64,
    /// `α_X / (4τ)` with `τ = 2/ε`.
    pub gamma_prime: f64,
    /// Admissible `|z|`; `None` when `b` has zero oscillation.
    pub radius: Option<f64>,
    pub a2: f64,
    pub ainf: f64,
    pub sigma_ainf: f64,
    pub points: Vec<ConjugatedPoint>,
    pub max_a2_ratio: f64,
    pub max_ainf_ratio: f64,
}

/// `[w e^{2zb}]_{A_2} / [w]_{A_2}` and `[w e^{2zb}]_{A_∞} / [w]_{A_∞}` at
/// `z = t · radius` for each `t` in `fractions`, where
/// `radius = γ' / (‖b‖_{BMO} ([w]_{A_∞} + [σ]_{A_∞}))`. If `b` has no
/// oscillation every `z` is admissible and `z = t` is used.
pub fn conjugated_weight_check(
    w: &Weight,
    b: &[f64],
    grid: &DyadicGrid,
    fractions: &[f64],
) -> Result<ConjugatedWeightReport, WeightError> {
    if b.len() != grid.len_points() {
        return Err(WeightError::LengthMismatch {
            expected: grid.len_points(),
            found: b.len(),
        });
    }
    let bmo = bmo_norm(grid, b);
    let a2 = ap_constant(w, grid, 2.0)?;
    let ainf = ainf_fujii_wilson(w, grid)?;
    let sigma_ainf = ainf_fujii_wilson(&w.sigma(2.0)?, grid)?;
    let eps = grid.epsilon();
    let gamma_prime = alpha_x(eps) / (4.0 * 2.0 / eps);
    let radius = (bmo > 0.0).then(|| gamma_prime / (bmo * (ainf + sigma_ainf)));
    let bmean = b.iter().sum::<f64>() / b.len() as f64;
    let mut points = Vec::with_capacity(fractions.len());
    for &t in fractions {
        let z = radius.map_or(t, |r| t * r);
        let factor: Vec<f64> = b.iter().map(|v| (2.0 * z * (v - bmean)).exp()).collect();
        let v = w.times(&factor)?;
        points.push(ConjugatedPoint {
            z,
            a2_ratio: ap_constant(&v, grid, 2.0)? / a2,
            ainf_ratio: ainf_fujii_wilson(&v, grid)? / ainf,
        });
    }
    let max_a2_ratio = points.iter().map(|p| p.a2_ratio).fold(0.0, f64::max);
    let max_ainf_ratio = points.iter().map(|p| p.ainf_ratio).fold(0.0, f64::max);
    Ok(ConjugatedWeightReport {
        bmo_norm: bmo,
        gamma_prime,
        radius,
        a2,
        ainf,
        sigma_ainf,
        points,
        max_a2_ratio,
        max_ainf_ratio,
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
    fn rubio_zero_and_constant() {
        let g = grid(16);
        let w = Weight::constant(g.space_arc().clone(), 1.0).unwrap();
        let opts = NormOptions::default();
        let r = rubio_de_francia(&[0.0; 16], &g, 2.0, &w, &opts).unwrap();
        assert!(r.rf.iter().all(|&v| v == 0.0) && r.passed);
        let r = rubio_de_francia(&[3.0; 16], &g, 2.0, &w, &opts).unwrap();
        let s = 2.0 * r.m_norm;
        let expected = 3.0 * s / (s - 1.0);
        for v in &r.rf {
            assert!((v - expected).abs() < 1e-12 * expected);
        }
        assert!(r.passed);
    }

    #[test]
    fn rubio_random_functions() {
        let g = grid(32);
        let w = power_weight(g.space_arc().clone(), 0.5);
        for seed in 0..10 {
            let f = lognormal_weight(g.space_arc().clone(), 1.0, seed);
            let r = rubio_de_francia(f.values(), &g, 2.0, &w, &NormOptions::default()).unwrap();
            assert!(r.passed, "{seed}: {} {} {}", r.majorizes, r.norm_ratio, r.a1);
        }
    }

    #[test]
    fn coifman_rochberg_examples() {
        let g = grid(16);
        let r = coifman_rochberg_check(&[1.0; 16], &g, 2.0).unwrap();
        assert_eq!(r.a1, 1.0);
        let mut spike = vec![0.0; 16];
        spike[5] = 1.0;
        let r = coifman_rochberg_check(&spike, &g, 2.0).unwrap();
        assert!(r.a1.is_finite() && r.a1 >= 1.0);
        let r = coifman_rochberg_check(&spike, &g, 100.0).unwrap();
        assert!(r.ratio.is_finite());
        assert!(matches!(
            coifman_rochberg_check(&[0.0; 16], &g, 2.0),
            Err(WeightError::ZeroFunction)
        ));
    }

    #[test]
    fn extrapolation_cases() {
        let g = grid(16);
        let w = Weight::constant(g.space_arc().clone(), 1.0).unwrap();
        let opts = NormOptions::default();
        let r = extrapolation_constant(&w, &g, 2.0, 3.0, &|t| t, &opts).unwrap();
        assert!((r.k - 2.0 * r.m_norm).abs() < 1e-12);
        let c = extrapolation_constant(&w, &g, 3.0, 2.0, &|_| 5.0, &opts).unwrap();
        assert_eq!((c.case, c.k), (2, 5.0));
        assert!(matches!(
            extrapolation_constant(&w, &g, 2.0, 2.0, &|t| t, &opts),
            Err(WeightError::CaseMismatch)
        ));
    }

    #[test]
    fn conjugated_weights() {
        let g = grid(32);
        let w = power_weight(g.space_arc().clone(), 0.3);
        let r = conjugated_weight_check(&w, &[2.0; 32], &g, &[-1.0, 0.0, 3.0]).unwrap();
        assert!(r.radius.is_none());
        for p in &r.points {
            assert!((p.a2_ratio - 1.0).abs() < 1e-12 && (p.ainf_ratio - 1.0).abs() < 1e-12);
        }
        let b: Vec<f64> = (0..32).map(|i| if i < 16 { 0.0 } else { 1.0 }).collect();
        let r = conjugated_weight_check(&w, &b, &g, &[-1.0, -0.5, 0.0, 0.5, 1.0]).unwrap();
        assert!(r.radius.unwrap() > 0.0);
        assert_eq!(r.points[2].a2_ratio, 1.0);
        assert!(r.max_a2_ratio.is_finite() && r.max_ainf_ratio.is_finite());
    }
}
