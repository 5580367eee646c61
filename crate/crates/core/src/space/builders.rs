use nalgebra::DMatrix;
use petgraph::algo::floyd_warshall;
use petgraph::graph::UnGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FiniteSht, SpaceError};

/// Midpoint grid `{(k + 1/2)/n}` in `(0, 1]` with Euclidean distance and
/// uniform mass `1/n`.
pub fn build_interval_space(n: usize) -> Result<FiniteSht, SpaceError> {
    if n == 0 {
        return Err(SpaceError::InvalidParameter("interval space needs n >= 1".into()));
    }
    let nf = n as f64;
    // distances from integer offsets so equal gaps give identical floats
    let rho = DMatrix::from_fn(n, n, |i, j| i.abs_diff(j) as f64 / nf);
    let coords: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) / nf).collect();
    let labels = coords.iter().map(|c| format!("{c}")).collect();
    FiniteSht::new(labels, rho, vec![1.0 / nf; n])?.with_coords(coords)
}

/// Midpoints of the `2^level` intervals of the middle-thirds Cantor
/// construction at the given level, with uniform mass `2^-level`.
pub fn build_cantor_space(level: u32) -> Result<FiniteSht, SpaceError> {
    if level > 20 {
        return Err(SpaceError::InvalidParameter(format!(
            "cantor level {level} is too deep"
        )));
    }
    let count = 1usize << level;
    let scale = 3f64.powi(level as i32);
    // left endpoints m / 3^L, m with ternary digits in {0, 2}
    let lefts: Vec<u64> = (0..count as u64)
        .map(|bits| {
            let mut m = 0u64;
            for d in (0..level).rev() {
                m = 3 * m + 2 * ((bits >> d) & 1);
            }
            m
        })
        .collect();
    let rho = DMatrix::from_fn(count, count, |i, j| lefts[i].abs_diff(lefts[j]) as f64 / scale);
    let coords: Vec<f64> = lefts.iter().map(|&m| (2 * m + 1) as f64 / (2.0 * scale)).collect();
    let labels = coords.iter().map(|c| format!("{c}")).collect();
    FiniteSht::new(labels, rho, vec![1.0 / count as f64; count])?.with_coords(coords)
}

/// Replaces `rho` by `rho^s`; masses and coordinates are kept.
pub fn build_snowflake_space(base: &FiniteSht, s: f64) -> Result<FiniteSht, SpaceError> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(SpaceError::InvalidParameter(format!(
            "snowflake exponent must be positive, got {s}"
        )));
    }
    let rho = base.rho_matrix().map(|d| d.powf(s));
    let space = FiniteSht::new(base.labels().to_vec(), rho, base.masses().to_vec())?;
    match base.coords() {
        Some(c) => space.with_coords(c.to_vec()),
        None => Ok(space),
    }
}

/// Shortest-path metric of a random connected weighted graph.
///
/// A random spanning tree guarantees connectivity; every other pair gets an
/// edge with probability `edge_prob`. Edge lengths and point masses are drawn
/// uniformly from `[0.5, 2]`.
pub fn build_random_graph_space(
    n: usize,
    edge_prob: f64,
    seed: u64,
) -> Result<FiniteSht, SpaceError> {
    if n == 0 {
        return Err(SpaceError::InvalidParameter("graph space needs n >= 1".into()));
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(SpaceError::InvalidParameter(format!(
            "edge probability {edge_prob} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = UnGraph::<(), f64>::with_capacity(n, 2 * n);
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for i in 1..n {
        let j = rng.random_range(0..i);
        let len = rng.random_range(0.5..2.0);
        graph.add_edge(nodes[i], nodes[j], len);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(edge_prob) {
                let len = rng.random_range(0.5..2.0);
                graph.add_edge(nodes[i], nodes[j], len);
            }
        }
    }
    let paths = floyd_warshall(&graph, |e| *e.weight())
        .map_err(|_| SpaceError::InvalidParameter("negative cycle".into()))?;
    let rho = DMatrix::from_fn(n, n, |i, j| {
        paths[&(nodes[i], nodes[j])].min(paths[&(nodes[j], nodes[i])])
    });
    let mu: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let labels = (0..n).map(|i| format!("v{i}")).collect();
    FiniteSht::new(labels, rho, mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_single_point() {
        let s = build_interval_space(1).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.kappa(), 1.0);
        assert_eq!(s.doubling(), 1.0);
    }

    #[test]
    fn interval_is_metric() {
        assert_eq!(build_interval_space(8).unwrap().kappa(), 1.0);
        let big = build_interval_space(256).unwrap();
        assert_eq!(big.kappa(), 1.0);
        assert!(big.doubling() >= 1.0);
    }

    #[test]
    fn interval_rejects_zero() {
        assert!(build_interval_space(0).is_err());
    }

    #[test]
    fn cantor_level_two_midpoints() {
        let s = build_cantor_space(2).unwrap();
        let expected = [1.0 / 18.0, 5.0 / 18.0, 13.0 / 18.0, 17.0 / 18.0];
        for (c, e) in s.coords().unwrap().iter().zip(expected) {
            assert!((c - e).abs() < 1e-15);
        }
        assert!(s.masses().iter().all(|&m| m == 0.25));
        assert_eq!(build_cantor_space(0).unwrap().len(), 1);
    }

    #[test]
    fn cantor_level_six_certifies() {
        let s = build_cantor_space(6).unwrap();
        assert_eq!(s.len(), 64);
        // distances are integer gaps divided by 3^6, so sums round
        assert!((s.kappa() - 1.0).abs() < 1e-12);
        assert!(s.doubling().is_finite());
    }

    #[test]
    fn random_graph_is_deterministic_metric() {
        let a = build_random_graph_space(20, 0.1, 7).unwrap();
        let b = build_random_graph_space(20, 0.1, 7).unwrap();
        assert_eq!(a.rho_matrix(), b.rho_matrix());
        assert!((a.kappa() - 1.0).abs() < 1e-12);
    }
}
