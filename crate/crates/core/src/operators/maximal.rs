use super::{check_len, OperatorError};
use crate::dyadic::DyadicGrid;
use crate::space::FiniteSht;

/// Dyadic maximal function `Mf(x) = max_{Q ∋ x} avg_Q |f|`.
pub fn maximal(grid: &DyadicGrid, f: &[f64]) -> Vec<f64> {
    assert_eq!(f.len(), grid.len_points(), "function length");
    let abs: Vec<f64> = f.iter().map(|v| v.abs()).collect();
    let avg = grid.averages(&abs);
    let mut best = vec![0.0f64; grid.cubes().len()];
    for id in grid.cubes_coarse_to_fine() {
        let up = grid.cube(id).parent.map_or(0.0, |p| best[p]);
        best[id] = avg[id].max(up);
    }
    grid.leaf_of_points().into_iter().map(|c| best[c]).collect()
}

/// `M_r f = (M(|f|^r))^(1/r)`.
pub fn maximal_r(grid: &DyadicGrid, f: &[f64], r: f64) -> Result<Vec<f64>, OperatorError> {
    if !(r >= 1.0) {
        return Err(OperatorError::RInvalid(r));
    }
    check_len(f, grid.len_points())?;
    if r == 1.0 {
        return Ok(maximal(grid, f));
    }
    let pow: Vec<f64> = f.iter().map(|v| v.abs().powf(r)).collect();
    Ok(maximal(grid, &pow).into_iter().map(|v| v.powf(1.0 / r)).collect())
}

/// `M(f χ_Q)` for the cube `q`, evaluated at every point.
///
/// On `Q` only cubes inside `Q` matter; outside `Q` only the ancestors of
/// `Q` meet the support.
pub fn maximal_within(grid: &DyadicGrid, f: &[f64], q: usize) -> Vec<f64> {
    assert_eq!(f.len(), grid.len_points(), "function length");
    let space = grid.space();
    let cube = grid.cube(q);
    let mut out = vec![0.0; f.len()];
    let mut best = vec![0.0f64; grid.cubes().len()];
    let mut deepest = vec![usize::MAX; f.len()];
    for id in grid.subtree(q) {
        let c = grid.cube(id);
        let avg = c.members.iter().map(|&x| f[x].abs() * space.mu(x)).sum::<f64>() / c.measure;
        let up = if id == q { 0.0 } else { best[c.parent.unwrap()] };
        best[id] = avg.max(up);
        for &x in &c.members {
            deepest[x] = id;
        }
    }
    for &x in &cube.members {
        out[x] = best[deepest[x]];
    }
    let mass: f64 = cube.members.iter().map(|&x| f[x].abs() * space.mu(x)).sum();
    for a in grid.ancestors(q) {
        let anc = grid.cube(a);
        let val = mass / anc.measure;
        for &x in &anc.members {
            if !cube.contains(x) {
                out[x] = out[x].max(val);
            }
        }
    }
    out
}

/// Uncentred maximal function over the realised open balls of the space.
pub fn ball_maximal(space: &FiniteSht, f: &[f64]) -> Vec<f64> {
    let n = space.len();
    assert_eq!(f.len(), n, "function length");
    let mut out = vec![0.0f64; n];
    for c in 0..n {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| space.rho(c, a).total_cmp(&space.rho(c, b)).then(a.cmp(&b)));
        // group points at equal distance: every realised ball is a prefix of groups
        let mut groups: Vec<(usize, usize, f64)> = Vec::new();
        let (mut mass, mut integral) = (0.0, 0.0);
        let mut start = 0;
        while start < n {
            let d = space.rho(c, order[start]);
            let mut end = start;
            while end < n && !crate::space::strictly_less(d, space.rho(c, order[end])) {
                let y = order[end];
                mass += space.mu(y);
                integral += f[y].abs() * space.mu(y);
                end += 1;
            }
            groups.push((start, end, integral / mass));
            start = end;
        }
        let mut running = 0.0f64;
        for &(s, e, avg) in groups.iter().rev() {
            running = running.max(avg);
            for &y in &order[s..e] {
                out[y] = out[y].max(running);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::DMatrix;

    use super::*;
    use crate::dyadic::build_grid;
    use crate::space::build_interval_space;

    fn two_point_grid() -> DyadicGrid {
        let rho = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let space = FiniteSht::new(vec!["a".into(), "b".into()], rho, vec![1.0, 1.0]).unwrap();
        build_grid(Arc::new(space), 0.125).unwrap()
    }

    #[test]
    fn two_point_examples() {
        let g = two_point_grid();
        assert_eq!(maximal(&g, &[0.0, 1.0]), vec![0.5, 1.0]);
        assert_eq!(maximal(&g, &[-3.0, -3.0]), vec![3.0, 3.0]);
        let m2 = maximal_r(&g, &[0.0, 1.0], 2.0).unwrap();
        assert!((m2[0] - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(m2[1], 1.0);
        assert!(matches!(maximal_r(&g, &[0.0, 1.0], 0.5), Err(OperatorError::RInvalid(_))));
    }

    #[test]
    fn within_matches_masked_maximal() {
        let g = build_grid(Arc::new(build_interval_space(32).unwrap()), 0.125).unwrap();
        let f: Vec<f64> = (0..32).map(|i| ((i * 7) % 5) as f64 + 0.5).collect();
        for q in 0..g.cubes().len() {
            let c = g.cube(q);
            let masked: Vec<f64> = (0..32).map(|x| if c.contains(x) { f[x] } else { 0.0 }).collect();
            let direct = maximal(&g, &masked);
            let local = maximal_within(&g, &f, q);
            for x in 0..32 {
                assert!((direct[x] - local[x]).abs() <= 1e-12 * direct[x].max(1.0));
            }
        }
    }

    #[test]
    fn ball_maximal_dominates_point_values() {
        let space = build_interval_space(16).unwrap();
        let f: Vec<f64> = (0..16).map(|i| (i as f64 - 7.5).abs()).collect();
        let m = ball_maximal(&space, &f);
        for x in 0..16 {
            assert!(m[x] >= f[x]);
        }
        assert!(ball_maximal(&space, &[2.0; 16]).iter().all(|&v| (v - 2.0).abs() < 1e-14));
    }
}
