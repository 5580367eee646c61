//! Naive enumerations over every cube and point, written without the grid's
//! tree helpers, used to cross-check the optimised constants on small spaces.

use sht_core::dyadic::DyadicGrid;

fn avg(grid: &DyadicGrid, q: usize, f: &[f64]) -> f64 {
    let mu = grid.space().masses();
    let c = grid.cube(q);
    let mass: f64 = c.members.iter().map(|&x| mu[x]).sum();
    c.members.iter().map(|&x| f[x] * mu[x]).sum::<f64>() / mass
}

fn subset(inner: &[usize], outer: &[usize]) -> bool {
    inner.iter().all(|x| outer.contains(x))
}

/// `max_{Q ∋ x} avg_Q |f|` by scanning every cube for every point.
pub fn maximal(grid: &DyadicGrid, f: &[f64]) -> Vec<f64> {
    let abs: Vec<f64> = f.iter().map(|v| v.abs()).collect();
    (0..f.len())
        .map(|x| {
            (0..grid.cubes().len())
                .filter(|&q| grid.cube(q).members.contains(&x))
                .map(|q| avg(grid, q, &abs))
                .fold(0.0, f64::max)
        })
        .collect()
}

pub fn ap(grid: &DyadicGrid, w: &[f64], p: f64) -> f64 {
    let e = -1.0 / (p - 1.0);
    let s: Vec<f64> = w.iter().map(|v| v.powf(e)).collect();
    (0..grid.cubes().len())
        .map(|q| avg(grid, q, w) * avg(grid, q, &s).powf(p - 1.0))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn a1(grid: &DyadicGrid, w: &[f64]) -> f64 {
    maximal(grid, w).iter().zip(w).map(|(m, v)| m / v).fold(f64::NEG_INFINITY, f64::max)
}

/// `max_Q w(Q)^{-1} ∫_Q M(w χ_Q)`, with `M(w χ_Q)` on `Q` taken over the
/// cubes whose point sets lie inside `Q`.
pub fn fujii_wilson(grid: &DyadicGrid, w: &[f64]) -> f64 {
    let mu = grid.space().masses();
    let cubes = grid.cubes();
    (0..cubes.len())
        .map(|q| {
            let outer = &cubes[q].members;
            let integral: f64 = outer
                .iter()
                .map(|&x| {
                    let m = (0..cubes.len())
                        .filter(|&l| cubes[l].members.contains(&x) && subset(&cubes[l].members, outer))
                        .map(|l| avg(grid, l, w))
                        .fold(0.0, f64::max);
                    m * mu[x]
                })
                .sum();
            let wq: f64 = outer.iter().map(|&x| w[x] * mu[x]).sum();
            integral / wq
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn hruscev(grid: &DyadicGrid, w: &[f64]) -> f64 {
    let logs: Vec<f64> = w.iter().map(|v| v.ln()).collect();
    (0..grid.cubes().len())
        .map(|q| avg(grid, q, w) / avg(grid, q, &logs).exp())
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn bmo(grid: &DyadicGrid, b: &[f64]) -> f64 {
    (0..grid.cubes().len())
        .map(|q| {
            let m = avg(grid, q, b);
            let dev: Vec<f64> = b.iter().map(|v| (v - m).abs()).collect();
            avg(grid, q, &dev)
        })
        .fold(0.0, f64::max)
}

/// `Σ_{Q ∈ family, Q ∋ x} avg_Q f`.
pub fn sparse_apply(grid: &DyadicGrid, family: &[usize], f: &[f64]) -> Vec<f64> {
    (0..f.len())
        .map(|x| {
            family
                .iter()
                .filter(|&&q| grid.cube(q).members.contains(&x))
                .map(|&q| avg(grid, q, f))
                .sum()
        })
        .collect()
}

/// Cubes whose `|f|`-average exceeds `lambda` while no ancestor's does,
/// sorted by id.
pub fn cz_family(grid: &DyadicGrid, f: &[f64], lambda: f64) -> Vec<usize> {
    let abs: Vec<f64> = f.iter().map(|v| v.abs()).collect();
    let above = |q: usize| avg(grid, q, &abs) > lambda;
    let mut out: Vec<usize> = (0..grid.cubes().len())
        .filter(|&q| {
            let mut up = grid.cube(q).parent;
            while let Some(p) = up {
                if above(p) {
                    return false;
                }
                up = grid.cube(p).parent;
            }
            above(q)
        })
        .collect();
    out.sort_unstable();
    out
}

/// `|a - b| ≤ tol · max(|a|, |b|)`, with equal infinities accepted.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}
