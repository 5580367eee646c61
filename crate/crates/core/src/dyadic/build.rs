use std::sync::Arc;

use super::{CubeRecord, DyadicGrid, GridError};
use crate::space::{strictly_less, FiniteSht, REL_TOL};

/// Net separation at level `k` is `SEPARATION_FACTOR * kappa^2 * delta^-k`.
const SEPARATION_FACTOR: f64 = 4.0;

/// Builds the dyadic grid of `space` for the given `delta`.
///
/// `delta <= 1/(8 kappa^3)` is sufficient for the sandwich property; larger
/// values are accepted and audited, failing with [`GridError::DeltaTooLarge`]
/// when the inner ball containment breaks.
pub fn build_grid(space: Arc<FiniteSht>, delta: f64) -> Result<DyadicGrid, GridError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(GridError::InvalidDelta(delta));
    }
    let n = space.len();
    if n == 1 {
        let records = vec![CubeRecord {
            level: 0,
            center: 0,
            parent: None,
            members: vec![0],
        }];
        return DyadicGrid::from_records(space, delta, 1.0, 1.0, records);
    }

    let kappa = space.kappa();
    let sep_factor = SEPARATION_FACTOR * kappa * kappa;
    let separation = |k: i32| sep_factor * delta.powi(-k);
    let diam = space.diameter();
    let dmin = space.min_positive_distance().expect("n >= 2");

    // coarsest level: a single center already covers everything
    let mut k_top = ((diam / sep_factor).ln() / -delta.ln()).floor() as i32 + 1;
    while separation(k_top - 1) > diam {
        k_top -= 1;
    }
    while separation(k_top) <= diam {
        k_top += 1;
    }
    // finest level: every point is its own center
    let mut k_bot = ((dmin / sep_factor).ln() / -delta.ln()).floor() as i32;
    while !strictly_less(dmin, separation(k_bot + 1)) {
        k_bot += 1;
    }
    while strictly_less(dmin, separation(k_bot)) {
        k_bot -= 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| space.mu(b).total_cmp(&space.mu(a)).then(a.cmp(&b)));

    // nets[i] is the net of level k_top - i
    let depth = (k_top - k_bot + 1) as usize;
    let mut nets: Vec<Vec<usize>> = Vec::with_capacity(depth);
    let mut in_net = vec![false; n];
    nets.push(vec![order[0]]);
    in_net[order[0]] = true;
    for i in 1..depth {
        let k = k_top - i as i32;
        let t = separation(k);
        let mut net = nets[i - 1].clone();
        for &p in &order {
            if in_net[p] {
                continue;
            }
            if net.iter().all(|&q| !strictly_less(space.rho(p, q), t)) {
                net.push(p);
                in_net[p] = true;
            }
        }
        nets.push(net);
    }
    debug_assert_eq!(nets[depth - 1].len(), n);

    // parent center of each center, per level below the top
    let mut parent_center: Vec<Vec<usize>> = vec![vec![usize::MAX; n]; depth];
    for i in 1..depth {
        let upper = &nets[i - 1];
        for &z in &nets[i] {
            parent_center[i][z] = if upper.contains(&z) {
                z
            } else {
                *upper
                    .iter()
                    .min_by(|&&a, &&b| space.rho(z, a).total_cmp(&space.rho(z, b)).then(a.cmp(&b)))
                    .unwrap()
            };
        }
    }

    // ancestor center of every point at every level, walking up from the leaves
    let mut ancestor = vec![vec![0usize; n]; depth];
    ancestor[depth - 1] = (0..n).collect();
    for i in (0..depth - 1).rev() {
        for x in 0..n {
            ancestor[i][x] = parent_center[i + 1][ancestor[i + 1][x]];
        }
    }

    // trim duplicated single-cube levels at the top and all-singleton levels at the bottom
    let mut first = 0;
    while first + 1 < depth && nets[first + 1].len() == 1 {
        first += 1;
    }
    let mut last = depth - 1;
    while last > first && nets[last - 1].len() == n {
        last -= 1;
    }

    let mut records = Vec::new();
    let mut id_of: Vec<Vec<usize>> = vec![vec![usize::MAX; n]; depth];
    for i in first..=last {
        let k = k_top - i as i32;
        let mut centers = nets[i].clone();
        centers.sort_unstable();
        for z in centers {
            let members: Vec<usize> = (0..n).filter(|&x| ancestor[i][x] == z).collect();
            let parent = (i > first).then(|| id_of[i - 1][parent_center[i][z]]);
            id_of[i][z] = records.len();
            records.push(CubeRecord {
                level: k,
                center: z,
                parent,
                members,
            });
        }
    }

    let mut grid = DyadicGrid::from_records(space, delta, 1.0, 1.0, records)?;
    grid.epsilon = achieved_epsilon(&grid);
    grid.c_sandwich = achieved_sandwich(&grid);
    check_inner_balls(&grid)?;
    Ok(grid)
}

fn achieved_epsilon(grid: &DyadicGrid) -> f64 {
    grid.cubes()
        .iter()
        .filter_map(|c| c.parent.map(|p| c.measure / grid.cube(p).measure))
        .fold(1.0, f64::min)
}

fn achieved_sandwich(grid: &DyadicGrid) -> f64 {
    let space = grid.space();
    let worst = grid
        .cubes()
        .iter()
        .map(|c| {
            let r = grid.scale(c.level);
            c.members
                .iter()
                .map(|&x| space.rho(c.center, x) / r)
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    // open outer ball: pad past the certifier tolerance
    (worst * (1.0 + 4.0 * REL_TOL)).max(1.0)
}

fn check_inner_balls(grid: &DyadicGrid) -> Result<(), GridError> {
    let space = grid.space();
    for c in grid.cubes() {
        let ball = space.ball(c.center, grid.scale(c.level));
        if let Some(&x) = ball.members.iter().find(|&&x| !c.contains(x)) {
            return Err(GridError::DeltaTooLarge {
                delta: grid.delta(),
                detail: format!(
                    "point {x} lies in the inner ball of cube {} (level {}) but outside the cube",
                    c.id, c.level
                ),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_interval_space, FiniteSht};
    use nalgebra::DMatrix;

    fn two_points(m0: f64, m1: f64) -> Arc<FiniteSht> {
        let rho = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        Arc::new(FiniteSht::new(vec!["0".into(), "1".into()], rho, vec![m0, m1]).unwrap())
    }

    #[test]
    fn single_point_grid() {
        let space = Arc::new(build_interval_space(1).unwrap());
        let g = build_grid(space, 0.125).unwrap();
        assert_eq!(g.cubes().len(), 1);
        assert_eq!(g.epsilon(), 1.0);
    }

    #[test]
    fn two_point_grid_by_hand() {
        let g = build_grid(two_points(1.0, 1.0), 0.125).unwrap();
        assert_eq!(g.num_levels(), 2);
        let root = g.cube(g.roots()[0]);
        assert_eq!(root.members, vec![0, 1]);
        assert_eq!(root.children.len(), 2);
        assert_eq!(g.level(g.k_min()).len(), 2);
        assert_eq!(g.epsilon(), 0.5);
    }

    #[test]
    fn invalid_delta() {
        assert!(matches!(
            build_grid(two_points(1.0, 1.0), 1.0),
            Err(GridError::InvalidDelta(_))
        ));
        assert!(matches!(
            build_grid(two_points(1.0, 1.0), 0.0),
            Err(GridError::InvalidDelta(_))
        ));
    }

    #[test]
    fn levels_partition_interval() {
        let space = Arc::new(build_interval_space(64).unwrap());
        let g = build_grid(space.clone(), 0.125).unwrap();
        for (_, ids) in g.levels_coarse_to_fine() {
            let total: f64 = ids.iter().map(|&id| g.cube(id).measure).sum();
            assert!((total - space.total_mass()).abs() <= 1e-12 * space.total_mass());
        }
        assert!(g.level(g.k_min()).iter().all(|&id| g.cube(id).len() == 1));
        assert_eq!(g.roots().len(), 1);
    }
}
