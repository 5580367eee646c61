//! Test functions for lower-bound searches: point masses, power profiles,
//! Calderón–Zygmund bad parts and log-normal noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sht_core::dyadic::{cz_decompose, DyadicGrid};

fn positions(grid: &DyadicGrid) -> Vec<f64> {
    let n = grid.len_points();
    match grid.space().coords() {
        Some(c) => c.to_vec(),
        None => (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect(),
    }
}

/// Nonnegative starts for the maximal operator: `t^{-s}` and `(1-t)^{-s}`
/// profiles, initial segments and point masses, at most `count` in all.
pub fn structured_nonnegative(grid: &DyadicGrid, count: usize) -> Vec<Vec<f64>> {
    let n = grid.len_points();
    let t = positions(grid);
    let mut out = Vec::new();
    for i in 1..=19 {
        let s = 0.05 * i as f64;
        out.push(t.iter().map(|x| x.powf(-s)).collect());
        out.push(t.iter().map(|x| (1.0 - x).max(0.5 / n as f64).powf(-s)).collect());
    }
    let mut len = 1;
    while len < n {
        out.push((0..n).map(|i| if i < len { 1.0 } else { 0.0 }).collect());
        len *= 2;
    }
    for x in [0, n / 2, n - 1] {
        let mut f = vec![0.0; n];
        f[x] = 1.0;
        out.push(f);
    }
    out.truncate(count);
    out
}

/// Signed test functions, `count` in all: every fourth one a normalised
/// point mass, the rest cycling through mean-zero bad parts of random
/// functions, signed power profiles and uniform noise. The list for a larger
/// `count` extends the list for a smaller one.
pub fn signed_candidates(grid: &DyadicGrid, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = grid.len_points();
    let t = positions(grid);
    let space = grid.space();
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            if i % 4 == 0 {
                let x = ((van_der_corput(i as u64 / 4) * n as f64) as usize).min(n - 1);
                let mut f = vec![0.0; n];
                f[x] = 1.0 / space.mu(x);
                return f;
            }
            match (i - i / 4 - 1) % 3 {
                0 => {
                    let g: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0f64).powi(8)).collect();
                    let lambda = 2.0 * space.integrate(&g) / space.total_mass();
                    let mut b = vec![0.0; n];
                    if let Ok(fam) = cz_decompose(grid, &g, lambda) {
                        for (q, avg) in fam.cubes.iter().zip(&fam.averages) {
                            for &x in &grid.cube(*q).members {
                                b[x] = g[x] - avg;
                            }
                        }
                    }
                    if b.iter().all(|&v| v == 0.0) {
                        g
                    } else {
                        b
                    }
                }
                1 => {
                    let s = rng.random_range(0.1..0.95);
                    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    t.iter().map(|x| sign * x.powf(-s)).collect()
                }
                _ => (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            }
        })
        .collect()
}

/// Base-2 radical inverse: 0, 1/2, 1/4, 3/4, 1/8, ...
fn van_der_corput(mut k: u64) -> f64 {
    let mut out = 0.0;
    let mut scale = 0.5;
    while k > 0 {
        if k & 1 == 1 {
            out += scale;
        }
        k >>= 1;
        scale *= 0.5;
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use sht_core::dyadic::build_grid;
    use sht_core::space::build_interval_space;

    use super::*;

    fn grid(n: usize) -> DyadicGrid {
        let space = Arc::new(build_interval_space(n).unwrap());
        build_grid(space.clone(), 1.0 / (8.0 * space.kappa().powi(3))).unwrap()
    }

    #[test]
    fn longer_lists_extend_shorter_ones() {
        let g = grid(32);
        let short = signed_candidates(&g, 9, 3);
        let long = signed_candidates(&g, 40, 3);
        assert_eq!(short[..], long[..9]);
        assert_eq!(structured_nonnegative(&g, 10)[..], structured_nonnegative(&g, 30)[..10]);
    }

    #[test]
    fn point_masses_spread_out() {
        let g = grid(16);
        let fs = signed_candidates(&g, 16, 0);
        let spots: Vec<usize> = fs.iter().step_by(4).map(|f| f.iter().position(|&v| v != 0.0).unwrap()).collect();
        assert_eq!(spots, [0, 8, 4, 12]);
    }
}
