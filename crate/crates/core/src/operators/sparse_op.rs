use nalgebra::{DMatrix, DVector};

use super::OperatorError;
use crate::dyadic::{DyadicGrid, GridError, SparseFamily};

/// `T^S f = Σ_{Q ∈ S} (avg_Q f) χ_Q` as a dense matrix.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    family: SparseFamily,
    matrix: DMatrix<f64>,
}

impl SparseOperator {
    pub fn new(grid: &DyadicGrid, family: SparseFamily) -> Result<Self, OperatorError> {
        if family.grid_id() != grid.id() {
            return Err(GridError::MixedGrids.into());
        }
        let matrix = averaging_matrix(grid, family.cubes.iter().copied());
        Ok(Self { family, matrix })
    }

    /// The localisation `S_Q f = Σ_{L ∈ S, L ⊆ Q} (avg_L f) χ_L`.
    pub fn localized(&self, grid: &DyadicGrid, q: usize) -> DMatrix<f64> {
        let outer = &grid.cube(q).members;
        let inside = self.family.cubes.iter().copied().filter(|&l| {
            grid.cube(l).members.iter().all(|x| outer.binary_search(x).is_ok())
        });
        averaging_matrix(grid, inside)
    }

    pub fn family(&self) -> &SparseFamily {
        &self.family
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.matrix.ncols(), "function length");
        (&self.matrix * DVector::from_column_slice(f)).as_slice().to_vec()
    }
}

fn averaging_matrix(grid: &DyadicGrid, cubes: impl Iterator<Item = usize>) -> DMatrix<f64> {
    let n = grid.len_points();
    let space = grid.space();
    let mut a = DMatrix::zeros(n, n);
    for q in cubes {
        let c = grid.cube(q);
        for &y in &c.members {
            let v = space.mu(y) / c.measure;
            for &x in &c.members {
                a[(x, y)] += v;
            }
        }
    }
    a
}
