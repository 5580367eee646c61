//! Dyadic grids on finite spaces of homogeneous type.
//!
//! Levels are indexed so that larger `k` is coarser: a cube at level `k` has
//! scale `delta^-k`, children live at level `k - 1`, parents at `k + 1`. The
//! sandwich property reads
//! `B(x_c, delta^-k) ⊆ Q ⊆ B(x_c, C delta^-k)`.
//!
//! Construction: for every level a maximal `4 kappa^2 delta^-k`-separated net
//! is grown greedily from the net of the level above (candidates in order of
//! descending mass, ties by index). Each new center is attached to its nearest
//! center one level up (ties by index); existing centers are their own parent.
//! A point belongs to the level-`k` cube of the center reached by following
//! parent links from its own singleton. For `delta <= 1/(8 kappa^3)` this
//! yields the inner ball containment; everything is re-checked a posteriori
//! and the constants `epsilon` and `C` are the achieved ones.

mod build;
mod cz;
mod file;
mod sparse;
mod verify;

pub use build::build_grid;
pub use cz::{cz_decompose, CzFamily};
pub use file::{GridFile, GRID_SCHEMA};
pub use sparse::{
    extract_sparse, is_sparse, AllLevelsThinned, CzStack, ExplicitCubes, RandomSelection,
    SelectionRule, SparseFamily, SparsityReport,
};
pub use verify::{verify_grid, GridReport, PropertyCheck};

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::space::FiniteSht;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("delta {delta} too large: {detail}")]
    DeltaTooLarge { delta: f64, detail: String },
    #[error("lambda must be positive, got {0}")]
    LambdaNonpositive(f64),
    #[error("function has {found} values, space has {expected} points")]
    LengthMismatch { expected: usize, found: usize },
    #[error("sparse family belongs to a different grid")]
    MixedGrids,
    #[error("grid file: {0}")]
    Schema(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

static NEXT_GRID_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_grid_id() -> u64 {
    NEXT_GRID_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicCube {
    pub id: usize,
    pub level: i32,
    /// Sorted point indices.
    pub members: Vec<usize>,
    pub center: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub measure: f64,
}

impl DyadicCube {
    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Serializable description of one cube, used by grid files and for
/// assembling grids by hand.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CubeRecord {
    pub level: i32,
    pub center: usize,
    pub parent: Option<usize>,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DyadicGrid {
    id: u64,
    space: Arc<FiniteSht>,
    delta: f64,
    epsilon: f64,
    c_sandwich: f64,
    k_min: i32,
    cubes: Vec<DyadicCube>,
    /// `levels[i]` holds the cubes of level `k_min + i`.
    levels: Vec<Vec<usize>>,
}

impl DyadicGrid {
    /// Assembles a grid from cube records without checking any property.
    ///
    /// Children lists are derived from the parent links. Use
    /// [`verify_grid`] to audit the result.
    pub fn from_records(
        space: Arc<FiniteSht>,
        delta: f64,
        epsilon: f64,
        c_sandwich: f64,
        records: Vec<CubeRecord>,
    ) -> Result<Self, GridError> {
        let n = space.len();
        if records.is_empty() {
            return Err(GridError::Schema("grid has no cubes".into()));
        }
        for (i, r) in records.iter().enumerate() {
            if r.center >= n || r.members.iter().any(|&x| x >= n) {
                return Err(GridError::Schema(format!("cube {i} references a missing point")));
            }
            if r.parent.is_some_and(|p| p >= records.len()) {
                return Err(GridError::Schema(format!("cube {i} has a missing parent")));
            }
            if r.members.is_empty() {
                return Err(GridError::Schema(format!("cube {i} is empty")));
            }
        }
        let k_min = records.iter().map(|r| r.level).min().unwrap();
        let k_max = records.iter().map(|r| r.level).max().unwrap();
        let mut levels = vec![Vec::new(); (k_max - k_min + 1) as usize];
        let mut cubes: Vec<DyadicCube> = records
            .into_iter()
            .enumerate()
            .map(|(id, r)| {
                let mut members = r.members;
                members.sort_unstable();
                members.dedup();
                let measure = space.measure_of(&members);
                DyadicCube {
                    id,
                    level: r.level,
                    members,
                    center: r.center,
                    parent: r.parent,
                    children: Vec::new(),
                    measure,
                }
            })
            .collect();
        for id in 0..cubes.len() {
            levels[(cubes[id].level - k_min) as usize].push(id);
            if let Some(p) = cubes[id].parent {
                cubes[p].children.push(id);
            }
        }
        Ok(Self {
            id: fresh_grid_id(),
            space,
            delta,
            epsilon,
            c_sandwich,
            k_min,
            cubes,
            levels,
        })
    }

    pub fn to_records(&self) -> Vec<CubeRecord> {
        self.cubes
            .iter()
            .map(|c| CubeRecord {
                level: c.level,
                center: c.center,
                parent: c.parent,
                members: c.members.clone(),
            })
            .collect()
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn space(&self) -> &FiniteSht {
        &self.space
    }

    pub fn space_arc(&self) -> &Arc<FiniteSht> {
        &self.space
    }

    pub fn len_points(&self) -> usize {
        self.space.len()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Achieved property-5 constant: `mu(child) >= epsilon mu(parent)`.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `1 / epsilon`, the stopping-time constant of Calderón–Zygmund cubes.
    pub fn doubling_ratio(&self) -> f64 {
        1.0 / self.epsilon
    }

    pub fn c_sandwich(&self) -> f64 {
        self.c_sandwich
    }

    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    pub fn k_max(&self) -> i32 {
        self.k_min + self.levels.len() as i32 - 1
    }

    /// Radius `delta^-k` attached to level `k`.
    pub fn scale(&self, level: i32) -> f64 {
        self.delta.powi(-level)
    }

    pub fn cubes(&self) -> &[DyadicCube] {
        &self.cubes
    }

    pub fn cube(&self, id: usize) -> &DyadicCube {
        &self.cubes[id]
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Cube ids of level `k`; empty outside `[k_min, k_max]`.
    pub fn level(&self, k: i32) -> &[usize] {
        if k < self.k_min || k > self.k_max() {
            return &[];
        }
        &self.levels[(k - self.k_min) as usize]
    }

    /// Levels from coarsest to finest.
    pub fn levels_coarse_to_fine(&self) -> impl Iterator<Item = (i32, &[usize])> {
        let k_min = self.k_min;
        self.levels
            .iter()
            .enumerate()
            .rev()
            .map(move |(i, ids)| (k_min + i as i32, ids.as_slice()))
    }

    /// Cube ids ordered from coarse to fine, ties by id.
    pub fn cubes_coarse_to_fine(&self) -> Vec<usize> {
        self.levels_coarse_to_fine()
            .flat_map(|(_, ids)| ids.iter().copied())
            .collect()
    }

    pub fn roots(&self) -> &[usize] {
        self.level(self.k_max())
    }

    /// Average of `values` over cube `id` with respect to `mu`.
    pub fn average(&self, id: usize, values: &[f64]) -> f64 {
        let cube = &self.cubes[id];
        self.space.integrate_over(values, &cube.members) / cube.measure
    }

    /// Per-cube averages of `values`, indexed by cube id.
    pub fn averages(&self, values: &[f64]) -> Vec<f64> {
        (0..self.cubes.len()).map(|id| self.average(id, values)).collect()
    }

    /// Ancestors of `id`, nearest first (excluding `id` itself).
    pub fn ancestors(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(self.cubes[id].parent, move |&p| self.cubes[p].parent)
    }

    /// Descendants of `id` including `id`, coarse to fine.
    pub fn subtree(&self, id: usize) -> Vec<usize> {
        let mut out = vec![id];
        let mut i = 0;
        while i < out.len() {
            let c = out[i];
            out.extend(self.cubes[c].children.iter().copied());
            i += 1;
        }
        out
    }

    /// The finest-level cube containing each point.
    pub fn leaf_of_points(&self) -> Vec<usize> {
        let mut leaf = vec![usize::MAX; self.len_points()];
        for (_, ids) in self.levels_coarse_to_fine() {
            for &id in ids {
                for &x in &self.cubes[id].members {
                    leaf[x] = id;
                }
            }
        }
        leaf
    }

    pub(crate) fn check_len(&self, values: &[f64]) -> Result<(), GridError> {
        if values.len() != self.len_points() {
            return Err(GridError::LengthMismatch {
                expected: self.len_points(),
                found: values.len(),
            });
        }
        Ok(())
    }
}
