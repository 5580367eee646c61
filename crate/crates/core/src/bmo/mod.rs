//! Dyadic BMO and the John–Nirenberg inequality.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::dyadic::DyadicGrid;
use crate::space::FiniteSht;

/// `b_Q = mu(Q)^{-1} Σ_{x ∈ Q} b(x) mu(x)`.
pub fn cube_mean(grid: &DyadicGrid, b: &[f64], q: usize) -> f64 {
    grid.average(q, b)
}

/// `avg_Q |b - b_Q|` for every cube.
pub fn oscillations(grid: &DyadicGrid, b: &[f64]) -> Vec<f64> {
    let mu = grid.space().masses();
    grid.cubes()
        .iter()
        .enumerate()
        .map(|(q, c)| {
            let m = cube_mean(grid, b, q);
            c.members.iter().map(|&x| (b[x] - m).abs() * mu[x]).sum::<f64>() / c.measure
        })
        .collect()
}

/// `max_Q avg_Q |b - b_Q|` over the dyadic cubes.
pub fn bmo_norm(grid: &DyadicGrid, b: &[f64]) -> f64 {
    assert_eq!(b.len(), grid.len_points(), "function length");
    let norm = oscillations(grid, b).into_iter().fold(0.0, f64::max);
    debug_assert!(parent_jump_ratio(grid, b, norm) <= 1.0 + 1e-12);
    norm
}

/// Largest `|b_Q - b_{Q̂}| / (‖b‖_{BMO} / ε)` over parent/child pairs; 0 if
/// there are none or `b` has no oscillation.
pub fn parent_jump_ratio(grid: &DyadicGrid, b: &[f64], norm: f64) -> f64 {
    let means: Vec<f64> = (0..grid.cubes().len()).map(|q| cube_mean(grid, b, q)).collect();
    let bound = norm / grid.epsilon();
    let mut worst = 0.0f64;
    for (q, c) in grid.cubes().iter().enumerate() {
        if let Some(parent) = c.parent {
            let jump = (means[q] - means[parent]).abs();
            if jump > 0.0 {
                worst = worst.max(if bound > 0.0 { jump / bound } else { f64::INFINITY });
            }
        }
    }
    worst
}

/// A function with its dyadic BMO norm.
#[derive(Debug, Clone, PartialEq)]
pub struct BmoFunction {
    pub values: Vec<f64>,
    pub norm: f64,
}

impl BmoFunction {
    pub fn new(grid: &DyadicGrid, values: Vec<f64>) -> Self {
        let norm = bmo_norm(grid, &values);
        Self { values, norm }
    }
}

/// `α_X = (ε/3) ln 2`.
pub fn alpha_x(epsilon: f64) -> f64 {
    epsilon / 3.0 * std::f64::consts::LN_2
}

/// `ε ln 2 / (2ε + 1)`, the smallness threshold on `α` used inside the proof.
pub fn alpha_threshold(epsilon: f64) -> f64 {
    epsilon * std::f64::consts::LN_2 / (2.0 * epsilon + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JnReport {
    pub alpha: f64,
    pub alpha_x: f64,
    pub alpha_threshold: f64,
    pub bmo_norm: f64,
    /// `max_Q avg_Q exp(α |b - b_Q| / ‖b‖_{BMO})`.
    pub sup_average: f64,
    pub worst_cube: usize,
}

/// Exponential averages at `α_X`, or at `alpha` when given. Constant `b` has
/// every average equal to 1.
pub fn jn_check(grid: &DyadicGrid, b: &[f64], alpha: Option<f64>) -> JnReport {
    let eps = grid.epsilon();
    let alpha_x = alpha_x(eps);
    let alpha = alpha.unwrap_or(alpha_x);
    let norm = bmo_norm(grid, b);
    let mu = grid.space().masses();
    let mut report = JnReport {
        alpha,
        alpha_x,
        alpha_threshold: alpha_threshold(eps),
        bmo_norm: norm,
        sup_average: 1.0,
        worst_cube: grid.roots().first().copied().unwrap_or(0),
    };
    if norm == 0.0 {
        return report;
    }
    for (q, c) in grid.cubes().iter().enumerate() {
        let m = cube_mean(grid, b, q);
        let avg = c
            .members
            .iter()
            .map(|&x| (alpha * (b[x] - m).abs() / norm).exp() * mu[x])
            .sum::<f64>()
            / c.measure;
        if avg > report.sup_average {
            report.sup_average = avg;
            report.worst_cube = q;
        }
    }
    report
}

/// Member `index` of a reproducible corpus of test functions: smoothed
/// Gaussian noise, steps, logarithms of power profiles and isolated spikes,
/// cycling through the four families.
pub fn corpus_function(space: &Arc<FiniteSht>, seed: u64, index: u64) -> Vec<f64> {
    let n = space.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let t: Vec<f64> = match space.coords() {
        Some(c) => c.to_vec(),
        None => (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect(),
    };
    match index % 4 {
        0 => {
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            let raw: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
            let width = rng.random_range(1..=4usize);
            (0..n)
                .map(|i| {
                    let lo = i.saturating_sub(width);
                    let hi = (i + width + 1).min(n);
                    raw[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
                })
                .collect()
        }
        1 => {
            let cut = rng.random_range(0.0..1.0);
            let h = rng.random_range(0.5..5.0);
            t.iter().map(|&x| if x < cut { 0.0 } else { h }).collect()
        }
        2 => {
            let a = rng.random_range(-0.9..3.0);
            t.iter().map(|&x| a * x.ln()).collect()
        }
        _ => {
            let mut b = vec![0.0; n];
            b[rng.random_range(0..n)] = rng.random_range(1.0..1e3);
            b
        }
    }
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    use super::*;
    use crate::dyadic::build_grid;
    use crate::space::build_interval_space;

    fn two_point() -> DyadicGrid {
        let rho = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let space = FiniteSht::new(vec!["a".into(), "b".into()], rho, vec![1.0, 1.0]).unwrap();
        build_grid(Arc::new(space), 0.125).unwrap()
    }

    fn interval(n: usize) -> DyadicGrid {
        build_grid(Arc::new(build_interval_space(n).unwrap()), 0.125).unwrap()
    }

    #[test]
    fn two_point_values() {
        let g = two_point();
        let root = g.roots()[0];
        assert_eq!(cube_mean(&g, &[0.0, 1.0], root), 0.5);
        assert_eq!(bmo_norm(&g, &[0.0, 1.0]), 0.5);
        assert_eq!(bmo_norm(&g, &[3.0, 3.0]), 0.0);
        for &c in &g.cube(root).children {
            let x = g.cube(c).members[0];
            assert_eq!(cube_mean(&g, &[0.0, 1.0], c), x as f64);
        }
    }

    #[test]
    fn constant_function_averages_are_one() {
        let g = interval(16);
        let r = jn_check(&g, &[2.0; 16], None);
        assert_eq!(r.sup_average, 1.0);
    }

    #[test]
    fn step_and_spike() {
        let g = interval(64);
        let step: Vec<f64> = (0..64).map(|i| if i < 32 { 0.0 } else { 1.0 }).collect();
        let r = jn_check(&g, &step, None);
        assert!(r.sup_average.is_finite() && r.sup_average >= 1.0);
        assert!(r.alpha_x <= r.alpha_threshold);
        let mut spike = vec![0.0; 64];
        spike[17] = 1e6;
        assert!(jn_check(&g, &spike, None).sup_average.is_finite());
    }

    #[test]
    fn log_weight_has_finite_norm() {
        let g = interval(64);
        let space = g.space_arc().clone();
        let b: Vec<f64> = space.coords().unwrap().iter().map(|t| 0.7 * t.ln()).collect();
        let norm = bmo_norm(&g, &b);
        assert!(norm.is_finite() && norm > 0.0);
        assert!(parent_jump_ratio(&g, &b, norm) <= 1.0 + 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn norm_properties(seed in 0u64..1000, index in 0u64..64, c in -50.0f64..50.0, l in -8.0f64..8.0) {
            let g = interval(32);
            let b = corpus_function(g.space_arc(), seed, index);
            let norm = bmo_norm(&g, &b);
            let shifted: Vec<f64> = b.iter().map(|v| v + c).collect();
            let scaled: Vec<f64> = b.iter().map(|v| v * l).collect();
            let tol = 1e-9 * (1.0 + norm);
            prop_assert!((bmo_norm(&g, &shifted) - norm).abs() <= tol * (1.0 + c.abs()));
            prop_assert!((bmo_norm(&g, &scaled) - l.abs() * norm).abs() <= tol * (1.0 + l.abs()));
            let mean = g.space().integrate(&b) / g.space().total_mass();
            let sup = b.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
            prop_assert!(norm <= 2.0 * sup * (1.0 + 1e-12));
            prop_assert!(parent_jump_ratio(&g, &b, norm) <= 1.0 + 1e-12);
            let hi = jn_check(&g, &b, None).sup_average;
            let lo = jn_check(&g, &b, Some(0.5 * alpha_x(g.epsilon()))).sup_average;
            prop_assert!(lo <= hi);
        }
    }
}
