use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sht_core::dyadic::{build_grid, cz_decompose, extract_sparse, AllLevelsThinned, CzStack, DyadicGrid};
use sht_core::operators::{
    commutator_apply, graded_sign_kernel, kernel_apply, maximal, maximal_norm_lower_bound, weighted_norm,
    KernelOperator, NormOptions, SparseOperator,
};
use sht_core::space::{
    build_cantor_space, build_interval_space, build_random_graph_space, build_snowflake_space, certify_doubling,
    certify_quasimetric, FiniteSht,
};
use sht_core::weights::{ap_constant, lognormal_weight, power_weight, verify_reverse_holder};

fn grid_of(space: FiniteSht) -> DyadicGrid {
    let delta = 1.0 / (8.0 * space.kappa().powi(3));
    build_grid(Arc::new(space), delta).unwrap()
}

fn random_values(n: usize, seed: u64, lo: f64, hi: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// `|x_i - x_j|^s` on the first `m` of the points.
fn power_line(xs: &[f64], s: f64, m: usize) -> FiniteSht {
    let rho = DMatrix::from_fn(m, m, |i, j| (xs[i] - xs[j]).abs().powf(s));
    FiniteSht::new((0..m).map(|i| i.to_string()).collect(), rho, vec![1.0 / m as f64; m]).unwrap()
}

fn dot_mu(space: &FiniteSht, f: &[f64], g: &[f64]) -> f64 {
    (0..f.len()).map(|x| f[x] * g[x] * space.mu(x)).sum()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adding_points_never_lowers_kappa(seed in 0u64..10_000, s in 1.0f64..3.0, m in 3usize..12) {
        // distinct points so the power distance never vanishes off the diagonal
        let mut xs = random_values(14, seed, 0.0, 1.0);
        for (i, x) in xs.iter_mut().enumerate() {
            *x += i as f64 * 1e-3;
        }
        let small = power_line(&xs, s, m);
        let big = power_line(&xs, s, m + 2);
        prop_assert!(small.kappa() <= big.kappa());
    }

    #[test]
    fn certifiers_reproduce_stored_constants(seed in 0u64..10_000, n in 2usize..20) {
        let space = build_random_graph_space(n, 0.3, seed).unwrap();
        prop_assert_eq!(certify_quasimetric(space.rho_matrix()).unwrap(), space.kappa());
        prop_assert_eq!(certify_doubling(space.rho_matrix(), space.masses()), space.doubling());
    }

    #[test]
    fn snowflake_kappa_law(seed in 0u64..10_000, n in 2usize..20, which in 0usize..2) {
        let s = [1.5, 2.0][which];
        let base = build_random_graph_space(n, 0.3, seed).unwrap();
        let snow = build_snowflake_space(&base, s).unwrap();
        let bound = 2f64.powf(s - 1.0) * base.kappa().powf(s);
        prop_assert!(snow.kappa() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn levels_partition_the_mass(seed in 0u64..10_000, n in 2usize..32) {
        let grid = grid_of(build_random_graph_space(n, 0.25, seed).unwrap());
        let total = grid.space().total_mass();
        for (k, ids) in grid.levels_coarse_to_fine() {
            let sum: f64 = ids.iter().map(|&q| grid.cube(q).measure).sum();
            prop_assert!(close(sum, total, 1e-12), "level {k}: {sum} vs {total}");
        }
    }

    #[test]
    fn cz_matches_a_scan_of_all_cubes(seed in 0u64..10_000, n in 1usize..32, lambda in 0.05f64..3.0) {
        let grid = grid_of(build_interval_space(n).unwrap());
        let f = random_values(n, seed, -2.0, 2.0);
        let fam = cz_decompose(&grid, &f, lambda).unwrap();
        let abs: Vec<f64> = f.iter().map(|v| v.abs()).collect();
        let avg: Vec<f64> = (0..grid.cubes().len()).map(|q| grid.average(q, &abs)).collect();
        let mut scan: Vec<usize> = (0..grid.cubes().len())
            .filter(|&q| avg[q] > lambda && grid.ancestors(q).all(|a| avg[a] <= lambda))
            .collect();
        scan.sort_unstable();
        let mut got = fam.cubes.clone();
        got.sort_unstable();
        prop_assert_eq!(got, scan);
        let l1 = grid.space().integrate(&abs);
        prop_assert!(fam.union_measure(&grid) <= l1 / lambda * (1.0 + 1e-12));
    }

    #[test]
    fn cz_families_shrink_as_lambda_grows(seed in 0u64..10_000, l1 in 0.05f64..2.0, gap in 0.0f64..2.0) {
        let grid = grid_of(build_interval_space(32).unwrap());
        let f = random_values(32, seed, 0.0, 3.0);
        let low = cz_decompose(&grid, &f, l1).unwrap();
        let high = cz_decompose(&grid, &f, l1 + gap).unwrap();
        for &q in &high.cubes {
            let inside = low.cubes.iter().any(|&p| {
                let big = &grid.cube(p).members;
                grid.cube(q).members.iter().all(|x| big.binary_search(x).is_ok())
            });
            prop_assert!(inside, "cube {q} at {} escapes the family at {l1}", l1 + gap);
        }
    }

    #[test]
    fn sparse_families_have_disjoint_large_e_sets(seed in 0u64..10_000, n in 2usize..48) {
        let grid = grid_of(build_interval_space(n).unwrap());
        let f = random_values(n, seed, 0.0, 5.0);
        for fam in [extract_sparse(&grid, &AllLevelsThinned), extract_sparse(&grid, &CzStack::new(f))] {
            let mut seen = vec![false; n];
            for (q, e) in fam.cubes.iter().zip(&fam.e_sets) {
                for &x in e {
                    prop_assert!(!seen[x], "point {x} in two E sets");
                    seen[x] = true;
                }
                let mass = grid.space().measure_of(e);
                prop_assert!(mass >= grid.cube(*q).measure / 2.0 * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn ap_is_at_least_one_and_decreases_in_p(seed in 0u64..10_000, sigma in 0.0f64..2.0, p1 in 1.1f64..4.0, dp in 0.0f64..4.0) {
        let grid = grid_of(build_interval_space(24).unwrap());
        let w = lognormal_weight(grid.space_arc().clone(), sigma, seed);
        let a1 = ap_constant(&w, &grid, p1).unwrap();
        let a2 = ap_constant(&w, &grid, p1 + dp).unwrap();
        prop_assert!(a1 >= 1.0 - 1e-12);
        prop_assert!(a2 <= a1 * (1.0 + 1e-12));
    }

    #[test]
    fn reverse_holder_holds_at_the_sharp_exponent(seed in 0u64..10_000, sigma in 0.0f64..1.5, n in 2usize..40) {
        let grid = grid_of(build_interval_space(n).unwrap());
        let w = lognormal_weight(grid.space_arc().clone(), sigma, seed);
        let report = verify_reverse_holder(&w, &grid).unwrap();
        prop_assert!(report.passed, "{report:?}");
    }

    #[test]
    fn maximal_is_sublinear_homogeneous_and_bounded(seed in 0u64..10_000, c in 0.0f64..10.0) {
        let grid = grid_of(build_cantor_space(4).unwrap());
        let n = grid.len_points();
        let f = random_values(n, seed, -3.0, 3.0);
        let g = random_values(n, seed + 1, -3.0, 3.0);
        let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        let scaled: Vec<f64> = f.iter().map(|v| c * v).collect();
        let (mf, mg, ms, mc) = (maximal(&grid, &f), maximal(&grid, &g), maximal(&grid, &sum), maximal(&grid, &scaled));
        let sup = f.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for x in 0..n {
            prop_assert!(ms[x] <= (mf[x] + mg[x]) * (1.0 + 1e-12) + 1e-12);
            prop_assert!(close(mc[x], c * mf[x], 1e-12));
            prop_assert!(mf[x] <= sup * (1.0 + 1e-12));
        }
    }

    #[test]
    fn sparse_operators_are_self_adjoint(seed in 0u64..10_000, n in 2usize..40) {
        let grid = grid_of(build_interval_space(n).unwrap());
        let f = random_values(n, seed, -1.0, 1.0);
        let g = random_values(n, seed + 7, -1.0, 1.0);
        let op = SparseOperator::new(&grid, extract_sparse(&grid, &AllLevelsThinned)).unwrap();
        let space = grid.space();
        prop_assert!(close(dot_mu(space, &op.apply(&f), &g), dot_mu(space, &f, &op.apply(&g)), 1e-12));
    }

    #[test]
    fn kernel_adjoint_and_first_commutator(seed in 0u64..10_000, n in 2usize..24) {
        let space = Arc::new(build_random_graph_space(n, 0.3, seed).unwrap());
        let op = KernelOperator::new(space.clone(), graded_sign_kernel(&space)).unwrap();
        let f = random_values(n, seed, -1.0, 1.0);
        let g = random_values(n, seed + 3, -1.0, 1.0);
        let b = random_values(n, seed + 5, -2.0, 2.0);
        let lhs = dot_mu(&space, &kernel_apply(&op, &f), &g);
        let rhs = dot_mu(&space, &f, &kernel_apply(&op.adjoint(), &g));
        prop_assert!(close(lhs, rhs, 1e-12));

        let c = commutator_apply(&op, &b, 1, &f).unwrap();
        let tf = kernel_apply(&op, &f);
        let bf: Vec<f64> = b.iter().zip(&f).map(|(x, y)| x * y).collect();
        let tbf = kernel_apply(&op, &bf);
        for x in 0..n {
            prop_assert!(close(c[x], b[x] * tf[x] - tbf[x], 1e-12));
        }
    }
}

#[test]
fn cantor_balls_sit_in_the_ahlfors_window() {
    for level in 0..=6u32 {
        let space = build_cantor_space(level).unwrap();
        for j in 0..=level {
            let r = 3f64.powi(-(j as i32));
            let (lo, hi) = (2f64.powi(-(j as i32) - 1), 2f64.powi(-(j as i32) + 1));
            for x in 0..space.len() {
                let m = space.ball_mass(x, r);
                assert!(m >= lo * (1.0 - 1e-12) && m <= hi * (1.0 + 1e-12), "L={level} j={j} x={x}: {m}");
            }
        }
    }
}

/// Hill climbing from many random unit vectors on `‖Bx‖ / ‖x‖`.
fn sphere_search(b: &DMatrix<f64>, seed: u64) -> f64 {
    let n = b.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratio = |x: &[f64]| {
        let v = nalgebra::DVector::from_column_slice(x);
        (b * &v).norm() / v.norm()
    };
    let mut best = 0.0f64;
    for _ in 0..200 {
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut cur = ratio(&x);
        let mut step = 0.5;
        while step > 1e-9 {
            let mut improved = false;
            for i in 0..n {
                for sign in [-1.0, 1.0] {
                    x[i] += sign * step;
                    let r = ratio(&x);
                    if r > cur {
                        cur = r;
                        improved = true;
                    } else {
                        x[i] -= sign * step;
                    }
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
        best = best.max(cur);
    }
    best
}

#[test]
fn exact_two_norm_agrees_with_sphere_search() {
    for n in 1..=4 {
        for seed in 0..4 {
            let space = build_random_graph_space(n, 0.5, seed).unwrap();
            let w = random_values(n, seed + 11, 0.2, 5.0);
            let a = KernelOperator::new(Arc::new(space.clone()), graded_sign_kernel(&space)).unwrap().matrix();
            let est = weighted_norm(&a, &space, 2.0, &w, &NormOptions::default()).unwrap();
            let d: Vec<f64> = w.iter().zip(space.masses()).map(|(x, m)| (x * m).sqrt()).collect();
            let b = DMatrix::from_fn(n, n, |i, j| d[i] * a[(i, j)] / d[j]);
            let searched = sphere_search(&b, seed);
            assert!(close(est.value, searched, 1e-6), "n={n} seed={seed}: {} vs {searched}", est.value);
        }
    }
}

/// Log-log slope of `‖M‖_{L^p(w_a)}` against `[w_a]_{A_p}` for `w_a = x^a`
/// with `a` approaching `p - 1`, which should reach `1/(p-1) - 0.1`.
#[test]
#[ignore = "unattainable on a 256-point interval: local slopes flatten to about 0.44 at p = 2"]
fn maximal_norm_grows_at_the_buckley_rate() {
    let space = Arc::new(build_interval_space(256).unwrap());
    let grid = build_grid(space.clone(), 1.0 / 8.0).unwrap();
    let opts = NormOptions {
        trials: 32,
        seed: 7,
        ..NormOptions::default()
    };
    for p in [1.5f64, 2.0, 3.0] {
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for t in [0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 0.98] {
            let w = power_weight(space.clone(), t * (p - 1.0));
            xs.push(ap_constant(&w, &grid, p).unwrap().ln());
            ys.push(maximal_norm_lower_bound(&grid, p, w.values(), &[], &opts).unwrap().value.ln());
        }
        let m = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let slope = sxy / sxx;
        assert!(slope >= 1.0 / (p - 1.0) - 0.1, "p = {p}: slope {slope}");
    }
}
