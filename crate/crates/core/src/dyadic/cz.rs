use super::{DyadicGrid, GridError};

/// Maximal dyadic cubes on which the average of `|f|` exceeds `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct CzFamily {
    pub lambda: f64,
    /// Selected cube ids, coarse to fine.
    pub cubes: Vec<usize>,
    /// `avg_Q |f|` for each selected cube, same order.
    pub averages: Vec<f64>,
}

impl CzFamily {
    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Sorted points covered by the family.
    pub fn union_points(&self, grid: &DyadicGrid) -> Vec<usize> {
        let mut pts: Vec<usize> = self
            .cubes
            .iter()
            .flat_map(|&id| grid.cube(id).members.iter().copied())
            .collect();
        pts.sort_unstable();
        pts.dedup();
        pts
    }

    pub fn union_measure(&self, grid: &DyadicGrid) -> f64 {
        self.cubes.iter().map(|&id| grid.cube(id).measure).sum()
    }
}

/// Calderón–Zygmund stopping cubes of `|f|` at height `lambda`.
///
/// When several nested cubes have the same point set, the coarsest one is
/// selected. Every selected cube with a parent satisfies
/// `lambda < avg_Q |f| <= lambda / epsilon`; a selected top-level cube has no
/// upper bound.
pub fn cz_decompose(grid: &DyadicGrid, f: &[f64], lambda: f64) -> Result<CzFamily, GridError> {
    grid.check_len(f)?;
    if !(lambda > 0.0) {
        return Err(GridError::LambdaNonpositive(lambda));
    }
    let abs: Vec<f64> = f.iter().map(|v| v.abs()).collect();
    let avg = grid.averages(&abs);
    let mut covered = vec![false; grid.cubes().len()];
    let mut family = CzFamily {
        lambda,
        cubes: Vec::new(),
        averages: Vec::new(),
    };
    for id in grid.cubes_coarse_to_fine() {
        let c = grid.cube(id);
        if c.parent.is_some_and(|p| covered[p]) {
            covered[id] = true;
            continue;
        }
        if avg[id] > lambda {
            covered[id] = true;
            family.cubes.push(id);
            family.averages.push(avg[id]);
            debug_assert!(
                c.parent.is_none()
                    || avg[id] <= lambda / grid.epsilon() * (1.0 + 1e-9),
                "stopping bound violated"
            );
        }
    }
    Ok(family)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::DMatrix;

    use super::*;
    use crate::dyadic::build_grid;
    use crate::space::FiniteSht;

    fn two_point_grid() -> DyadicGrid {
        let rho = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let space = FiniteSht::new(vec!["a".into(), "b".into()], rho, vec![1.0, 1.0]).unwrap();
        build_grid(Arc::new(space), 0.125).unwrap()
    }

    #[test]
    fn root_is_selected_when_its_average_exceeds_lambda() {
        let g = two_point_grid();
        let fam = cz_decompose(&g, &[0.0, 4.0], 1.0).unwrap();
        assert_eq!(fam.cubes, vec![g.roots()[0]]);
        assert_eq!(fam.averages, vec![2.0]);
    }

    #[test]
    fn constant_below_lambda_is_empty() {
        let g = two_point_grid();
        assert!(cz_decompose(&g, &[3.0, 3.0], 3.0).unwrap().is_empty());
        assert!(cz_decompose(&g, &[0.0, 0.0], 0.5).unwrap().is_empty());
    }

    #[test]
    fn nonpositive_lambda_is_rejected() {
        let g = two_point_grid();
        assert!(matches!(
            cz_decompose(&g, &[1.0, 1.0], 0.0),
            Err(GridError::LambdaNonpositive(_))
        ));
    }

    #[test]
    fn child_selected_below_root() {
        let g = two_point_grid();
        let fam = cz_decompose(&g, &[0.0, 4.0], 3.0).unwrap();
        assert_eq!(fam.cubes.len(), 1);
        assert_eq!(g.cube(fam.cubes[0]).members, vec![1]);
        assert!(fam.averages[0] <= 3.0 * g.doubling_ratio());
    }
}
