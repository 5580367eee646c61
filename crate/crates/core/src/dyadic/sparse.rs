use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{cz_decompose, DyadicGrid, GridError};

/// Proposes candidate cubes; [`extract_sparse`] then keeps a sparse subset.
pub trait SelectionRule: Send + Sync {
    fn name(&self) -> &str;

    /// Candidate cube ids in any order.
    fn candidates(&self, grid: &DyadicGrid) -> Vec<usize>;
}

/// Every cube of every level; the greedy pass thins it down.
#[derive(Debug, Clone, Default)]
pub struct AllLevelsThinned;

impl SelectionRule for AllLevelsThinned {
    fn name(&self) -> &str {
        "all-levels-thinned"
    }

    fn candidates(&self, grid: &DyadicGrid) -> Vec<usize> {
        (0..grid.cubes().len()).collect()
    }
}

/// Union of the Calderón–Zygmund families of `|f|` at heights `base^m`.
#[derive(Debug, Clone)]
pub struct CzStack {
    pub f: Vec<f64>,
    pub base: f64,
}

impl CzStack {
    pub fn new(f: Vec<f64>) -> Self {
        Self { f, base: 2.0 }
    }
}

impl SelectionRule for CzStack {
    fn name(&self) -> &str {
        "cz-stack"
    }

    fn candidates(&self, grid: &DyadicGrid) -> Vec<usize> {
        if self.f.len() != grid.len_points() || !(self.base > 1.0) {
            return Vec::new();
        }
        let abs: Vec<f64> = self.f.iter().map(|v| v.abs()).collect();
        let avg = grid.averages(&abs);
        let top = avg.iter().copied().fold(0.0, f64::max);
        let bottom = avg.iter().copied().filter(|&a| a > 0.0).fold(f64::INFINITY, f64::min);
        if top <= 0.0 {
            return Vec::new();
        }
        let lb = self.base.ln();
        let m_lo = (bottom.ln() / lb).floor() as i32 - 1;
        let m_hi = (top.ln() / lb).ceil() as i32;
        let mut out = Vec::new();
        for m in m_lo..=m_hi {
            let fam = cz_decompose(grid, &abs, self.base.powi(m)).expect("lambda is positive");
            out.extend(fam.cubes);
        }
        out
    }
}

/// Each cube independently with probability `p`.
#[derive(Debug, Clone)]
pub struct RandomSelection {
    pub p: f64,
    pub seed: u64,
}

impl SelectionRule for RandomSelection {
    fn name(&self) -> &str {
        "random"
    }

    fn candidates(&self, grid: &DyadicGrid) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let p = self.p.clamp(0.0, 1.0);
        (0..grid.cubes().len()).filter(|_| rng.random_bool(p)).collect()
    }
}

/// A fixed list of cubes.
#[derive(Debug, Clone)]
pub struct ExplicitCubes(pub Vec<usize>);

impl SelectionRule for ExplicitCubes {
    fn name(&self) -> &str {
        "explicit"
    }

    fn candidates(&self, grid: &DyadicGrid) -> Vec<usize> {
        self.0.iter().copied().filter(|&id| id < grid.cubes().len()).collect()
    }
}

/// A family of cubes of one grid together with the sets
/// `E(Q) = Q \ ∪{Q' in family, Q' ⊊ Q}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFamily {
    grid_id: u64,
    /// Cube ids, coarse to fine.
    pub cubes: Vec<usize>,
    /// `E(Q)` for each cube, same order, sorted points.
    pub e_sets: Vec<Vec<usize>>,
}

impl SparseFamily {
    /// Wraps arbitrary cubes without enforcing sparsity; see [`is_sparse`].
    pub fn from_cubes_unchecked(grid: &DyadicGrid, cubes: &[usize]) -> Self {
        let mut cubes: Vec<usize> = cubes.to_vec();
        sort_coarse_to_fine(grid, &mut cubes);
        cubes.dedup();
        let e_sets = cubes
            .iter()
            .map(|&q| {
                let cover = proper_subcube_cover(grid, &cubes, q);
                grid.cube(q)
                    .members
                    .iter()
                    .copied()
                    .filter(|x| !cover[*x])
                    .collect()
            })
            .collect();
        Self {
            grid_id: grid.id(),
            cubes,
            e_sets,
        }
    }

    pub fn grid_id(&self) -> u64 {
        self.grid_id
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparsityReport {
    /// Largest `mu(∪ proper subcubes in family) / mu(Q)`.
    pub worst_ratio: f64,
    pub worst_cube: Option<usize>,
    pub sparse: bool,
}

fn sort_coarse_to_fine(grid: &DyadicGrid, ids: &mut [usize]) {
    ids.sort_by(|&a, &b| grid.cube(b).level.cmp(&grid.cube(a).level).then(a.cmp(&b)));
}

fn is_proper_subset(small: &[usize], big: &[usize]) -> bool {
    small.len() < big.len() && small.iter().all(|x| big.binary_search(x).is_ok())
}

/// Point mask of the union of family members that are proper subsets of `q`.
fn proper_subcube_cover(grid: &DyadicGrid, family: &[usize], q: usize) -> Vec<bool> {
    let mut cover = vec![false; grid.len_points()];
    let big = &grid.cube(q).members;
    for &c in family {
        let small = &grid.cube(c).members;
        if is_proper_subset(small, big) {
            for &x in small {
                cover[x] = true;
            }
        }
    }
    cover
}

/// Keeps the candidates of `rule` that can be admitted, coarse to fine,
/// without breaking `mu(∪ proper subcubes) <= mu(Q)/2` for any admitted `Q`.
/// Candidates repeating the point set of an admitted cube are skipped.
pub fn extract_sparse(grid: &DyadicGrid, rule: &dyn SelectionRule) -> SparseFamily {
    let space = grid.space();
    let mut cand = rule.candidates(grid);
    sort_coarse_to_fine(grid, &mut cand);
    cand.dedup();

    let mut admitted: Vec<usize> = Vec::new();
    // for each admitted cube: mask and mass of the union of its admitted proper subcubes
    let mut covers: Vec<(Vec<bool>, f64)> = Vec::new();
    let mut slot = vec![usize::MAX; grid.cubes().len()];

    'next: for q in cand {
        let members = &grid.cube(q).members;
        let mut touched = Vec::new();
        for a in std::iter::once(q).chain(grid.ancestors(q)) {
            let s = slot[a];
            if s == usize::MAX {
                continue;
            }
            let big = &grid.cube(a).members;
            if big == members {
                continue 'next;
            }
            let (mask, mass) = &covers[s];
            let added: f64 = members.iter().filter(|&&x| !mask[x]).map(|&x| space.mu(x)).sum();
            if mass + added > grid.cube(a).measure / 2.0 {
                continue 'next;
            }
            touched.push(s);
        }
        for s in touched {
            let (mask, mass) = &mut covers[s];
            for &x in members {
                if !mask[x] {
                    mask[x] = true;
                    *mass += space.mu(x);
                }
            }
        }
        slot[q] = covers.len();
        covers.push((vec![false; grid.len_points()], 0.0));
        admitted.push(q);
    }
    let family = SparseFamily::from_cubes_unchecked(grid, &admitted);
    debug_assert!(is_sparse(grid, &family).map(|r| r.sparse).unwrap_or(false));
    family
}

/// Worst sparsity ratio of `family` over its cubes.
pub fn is_sparse(grid: &DyadicGrid, family: &SparseFamily) -> Result<SparsityReport, GridError> {
    if family.grid_id != grid.id() {
        return Err(GridError::MixedGrids);
    }
    let space = grid.space();
    let mut report = SparsityReport {
        worst_ratio: 0.0,
        worst_cube: None,
        sparse: true,
    };
    for &q in &family.cubes {
        let cover = proper_subcube_cover(grid, &family.cubes, q);
        let c = grid.cube(q);
        let covered: f64 = c.members.iter().filter(|&&x| cover[x]).map(|&x| space.mu(x)).sum();
        let ratio = covered / c.measure;
        if ratio > report.worst_ratio {
            report.worst_ratio = ratio;
            report.worst_cube = Some(q);
        }
    }
    report.sparse = report.worst_ratio <= 0.5 * (1.0 + 1e-12);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::DMatrix;

    use super::*;
    use crate::dyadic::build_grid;
    use crate::space::{build_interval_space, FiniteSht};

    fn two_point_grid(m0: f64, m1: f64) -> DyadicGrid {
        let rho = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let space = FiniteSht::new(vec!["a".into(), "b".into()], rho, vec![m0, m1]).unwrap();
        build_grid(Arc::new(space), 0.125).unwrap()
    }

    fn check_e_sets(grid: &DyadicGrid, fam: &SparseFamily) {
        let mut seen = vec![false; grid.len_points()];
        for (q, e) in fam.cubes.iter().zip(&fam.e_sets) {
            for &x in e {
                assert!(!seen[x], "E sets overlap at {x}");
                seen[x] = true;
            }
            let mass = grid.space().measure_of(e);
            assert!(mass >= grid.cube(*q).measure / 2.0 * (1.0 - 1e-12));
        }
    }

    #[test]
    fn root_only_is_sparse() {
        let g = two_point_grid(1.0, 1.0);
        let fam = extract_sparse(&g, &ExplicitCubes(g.roots().to_vec()));
        let r = is_sparse(&g, &fam).unwrap();
        assert_eq!(r.worst_ratio, 0.0);
        assert!(r.sparse);
    }

    #[test]
    fn chain_with_heavy_child_is_not_sparse() {
        let g = two_point_grid(0.6, 0.4);
        let root = g.roots()[0];
        let heavy = *g.cube(root).children.iter().find(|&&c| g.cube(c).members == [0]).unwrap();
        let fam = SparseFamily::from_cubes_unchecked(&g, &[root, heavy]);
        let r = is_sparse(&g, &fam).unwrap();
        assert!((r.worst_ratio - 0.6).abs() < 1e-15);
        assert!(!r.sparse);
        // the greedy pass drops the heavy child
        let thinned = extract_sparse(&g, &ExplicitCubes(vec![root, heavy]));
        assert_eq!(thinned.cubes, vec![root]);
    }

    #[test]
    fn empty_and_disjoint_families() {
        let g = two_point_grid(1.0, 1.0);
        let empty = SparseFamily::from_cubes_unchecked(&g, &[]);
        assert_eq!(is_sparse(&g, &empty).unwrap().worst_ratio, 0.0);
        let leaves = g.level(g.k_min()).to_vec();
        let fam = SparseFamily::from_cubes_unchecked(&g, &leaves);
        let r = is_sparse(&g, &fam).unwrap();
        assert_eq!(r.worst_ratio, 0.0);
        assert!(r.sparse);
    }

    #[test]
    fn cz_stack_on_two_points() {
        let g = two_point_grid(1.0, 1.0);
        let fam = extract_sparse(&g, &CzStack::new(vec![0.0, 4.0]));
        assert!(is_sparse(&g, &fam).unwrap().sparse);
        assert!(fam.cubes.contains(&g.roots()[0]));
        check_e_sets(&g, &fam);
    }

    #[test]
    fn rules_on_a_deep_grid() {
        let g = build_grid(Arc::new(build_interval_space(64).unwrap()), 0.125).unwrap();
        let f: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64).collect();
        let rules: Vec<Box<dyn SelectionRule>> = vec![
            Box::new(AllLevelsThinned),
            Box::new(CzStack::new(f)),
            Box::new(RandomSelection { p: 0.9, seed: 3 }),
        ];
        for rule in &rules {
            let fam = extract_sparse(&g, rule.as_ref());
            assert!(!fam.is_empty(), "{}", rule.name());
            assert!(is_sparse(&g, &fam).unwrap().sparse, "{}", rule.name());
            check_e_sets(&g, &fam);
            assert_eq!(fam, extract_sparse(&g, rule.as_ref()));
        }
    }

    #[test]
    fn mixed_grids_are_rejected() {
        let g = two_point_grid(1.0, 1.0);
        let h = two_point_grid(1.0, 1.0);
        let fam = extract_sparse(&g, &AllLevelsThinned);
        assert!(matches!(is_sparse(&h, &fam), Err(GridError::MixedGrids)));
    }
}
