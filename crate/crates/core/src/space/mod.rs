//! Finite spaces of homogeneous type.
//!
//! A [`FiniteSht`] is a finite point set with a quasimetric matrix and strictly
//! positive point masses. Construction validates the matrix and certifies the
//! quasimetric constant `kappa` and the doubling constant `D_mu` exactly over
//! the finite data; both are stored and never recomputed.

mod builders;
mod file;

pub use builders::{
    build_cantor_space, build_interval_space, build_random_graph_space, build_snowflake_space,
};
pub use file::{SpaceFile, SPACE_SCHEMA};

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

/// Relative tolerance used by every certifier comparison.
pub const REL_TOL: f64 = 1e-12;

/// `a < b` by more than the certifier tolerance.
#[inline]
pub fn strictly_less(a: f64, b: f64) -> bool {
    a < b - REL_TOL * a.abs().max(b.abs())
}

/// `a <= b` up to the certifier tolerance.
#[inline]
pub fn approx_le(a: f64, b: f64) -> bool {
    a <= b + REL_TOL * a.abs().max(b.abs())
}

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("space must contain at least one point")]
    Empty,
    #[error("distance matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("distance ({i}, {j}) is not finite")]
    NonFiniteDistance { i: usize, j: usize },
    #[error("distance matrix is not symmetric at ({i}, {j})")]
    AsymmetricMatrix { i: usize, j: usize },
    #[error("negative distance at ({i}, {j})")]
    NegativeDistance { i: usize, j: usize },
    #[error("distinct points {i} and {j} are at distance zero")]
    ZeroOffDiagonal { i: usize, j: usize },
    #[error("diagonal entry {i} is nonzero")]
    NonZeroDiagonal { i: usize },
    #[error("point mass {i} is not strictly positive and finite")]
    NonPositiveMass { i: usize },
    #[error("{what}: expected {expected} entries, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid builder parameter: {0}")]
    InvalidParameter(String),
    #[error("space file: {0}")]
    Schema(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A finite space of homogeneous type with certified constants.
#[derive(Debug, Clone)]
pub struct FiniteSht {
    labels: Vec<String>,
    coords: Option<Vec<f64>>,
    rho: DMatrix<f64>,
    mu: Vec<f64>,
    kappa: f64,
    doubling: f64,
}

/// An open ball `{ y : rho(center, y) < radius }`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    pub members: Vec<usize>,
}

impl Ball {
    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }
}

impl FiniteSht {
    /// Validates `rho` and `mu`, then certifies `kappa` and `D_mu`.
    pub fn new(labels: Vec<String>, rho: DMatrix<f64>, mu: Vec<f64>) -> Result<Self, SpaceError> {
        let n = labels.len();
        if n == 0 {
            return Err(SpaceError::Empty);
        }
        if rho.nrows() != n || rho.ncols() != n {
            if rho.nrows() != rho.ncols() {
                return Err(SpaceError::NotSquare {
                    rows: rho.nrows(),
                    cols: rho.ncols(),
                });
            }
            return Err(SpaceError::LengthMismatch {
                what: "distance matrix rows",
                expected: n,
                found: rho.nrows(),
            });
        }
        if mu.len() != n {
            return Err(SpaceError::LengthMismatch {
                what: "point masses",
                expected: n,
                found: mu.len(),
            });
        }
        if let Some(i) = mu.iter().position(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(SpaceError::NonPositiveMass { i });
        }
        let kappa = certify_quasimetric(&rho)?;
        let doubling = certify_doubling(&rho, &mu);
        Ok(Self {
            labels,
            coords: None,
            rho,
            mu,
            kappa,
            doubling,
        })
    }

    /// Attaches real coordinates (used by power weights and ordered kernels).
    pub fn with_coords(mut self, coords: Vec<f64>) -> Result<Self, SpaceError> {
        if coords.len() != self.len() {
            return Err(SpaceError::LengthMismatch {
                what: "coordinates",
                expected: self.len(),
                found: coords.len(),
            });
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn coords(&self) -> Option<&[f64]> {
        self.coords.as_deref()
    }

    #[inline]
    pub fn rho(&self, x: usize, y: usize) -> f64 {
        self.rho[(x, y)]
    }

    pub fn rho_matrix(&self) -> &DMatrix<f64> {
        &self.rho
    }

    #[inline]
    pub fn mu(&self, x: usize) -> f64 {
        self.mu[x]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mu
    }

    pub fn total_mass(&self) -> f64 {
        self.mu.iter().sum()
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn doubling(&self) -> f64 {
        self.doubling
    }

    pub fn diameter(&self) -> f64 {
        self.rho.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest distance between distinct points; `None` for a single point.
    pub fn min_positive_distance(&self) -> Option<f64> {
        let n = self.len();
        let mut best: Option<f64> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.rho(i, j);
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }

    pub fn ball(&self, center: usize, radius: f64) -> Ball {
        let members = (0..self.len())
            .filter(|&y| strictly_less(self.rho(center, y), radius))
            .collect();
        Ball {
            center,
            radius,
            members,
        }
    }

    pub fn ball_mass(&self, center: usize, radius: f64) -> f64 {
        (0..self.len())
            .filter(|&y| strictly_less(self.rho(center, y), radius))
            .map(|y| self.mu[y])
            .sum()
    }

    /// `mu(B(x, rho(x, y)))` for every ordered pair, the normalisation used by
    /// kernel decay and smoothness conditions.
    pub fn pair_ball_masses(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut out = DMatrix::zeros(n, n);
        for x in 0..n {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| self.rho(x, a).total_cmp(&self.rho(x, b)));
            let sorted: Vec<f64> = order.iter().map(|&y| self.rho(x, y)).collect();
            let mut prefix = Vec::with_capacity(n + 1);
            prefix.push(0.0);
            for &y in &order {
                prefix.push(prefix.last().unwrap() + self.mu[y]);
            }
            for y in 0..n {
                let r = self.rho(x, y);
                let cnt = sorted.partition_point(|&d| strictly_less(d, r));
                out[(x, y)] = prefix[cnt];
            }
        }
        out
    }

    /// Sum of `values * mu` over the given points.
    pub fn integrate_over(&self, values: &[f64], points: &[usize]) -> f64 {
        points.iter().map(|&x| values[x] * self.mu[x]).sum()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.mu).map(|(v, m)| v * m).sum()
    }

    pub fn measure_of(&self, points: &[usize]) -> f64 {
        points.iter().map(|&x| self.mu[x]).sum()
    }
}

fn validate_matrix(rho: &DMatrix<f64>) -> Result<(), SpaceError> {
    let (rows, cols) = rho.shape();
    if rows != cols {
        return Err(SpaceError::NotSquare { rows, cols });
    }
    if rows == 0 {
        return Err(SpaceError::Empty);
    }
    for i in 0..rows {
        for j in 0..rows {
            let d = rho[(i, j)];
            if !d.is_finite() {
                return Err(SpaceError::NonFiniteDistance { i, j });
            }
            if d < 0.0 {
                return Err(SpaceError::NegativeDistance { i, j });
            }
        }
    }
    for i in 0..rows {
        if rho[(i, i)] != 0.0 {
            return Err(SpaceError::NonZeroDiagonal { i });
        }
        for j in (i + 1)..rows {
            let (a, b) = (rho[(i, j)], rho[(j, i)]);
            if (a - b).abs() > REL_TOL * a.max(b) {
                return Err(SpaceError::AsymmetricMatrix { i, j });
            }
            if a == 0.0 {
                return Err(SpaceError::ZeroOffDiagonal { i, j });
            }
        }
    }
    Ok(())
}

/// Smallest `kappa` with `rho(x,z) <= kappa (rho(x,y) + rho(y,z))` for all triples.
pub fn certify_quasimetric(rho: &DMatrix<f64>) -> Result<f64, SpaceError> {
    validate_matrix(rho)?;
    let n = rho.nrows();
    let kappa = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut best = 1.0_f64;
            for z in 0..n {
                if z == x {
                    continue;
                }
                let target = rho[(x, z)];
                for y in 0..n {
                    let ratio = target / (rho[(x, y)] + rho[(y, z)]);
                    if ratio > best {
                        best = ratio;
                    }
                }
            }
            best
        })
        .reduce(|| 1.0, f64::max);
    Ok(kappa)
}

/// Largest ratio `mu(B(x, 2r)) / mu(B(x, r))` over points and realized radii.
///
/// With open balls, `r -> mu(B(x, r))` is constant on each interval
/// `(d_i, d_{i+1}]` between consecutive distances from `x`, while
/// `mu(B(x, 2r))` is nondecreasing, so the supremum over all `r > 0` is
/// attained at a distance realized from `x`.
pub fn certify_doubling(rho: &DMatrix<f64>, mu: &[f64]) -> f64 {
    let n = mu.len();
    (0..n)
        .into_par_iter()
        .map(|x| {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| rho[(x, a)].total_cmp(&rho[(x, b)]));
            let dists: Vec<f64> = order.iter().map(|&y| rho[(x, y)]).collect();
            let mut prefix = Vec::with_capacity(n + 1);
            prefix.push(0.0);
            for &y in &order {
                prefix.push(prefix.last().unwrap() + mu[y]);
            }
            let mass_below = |r: f64| prefix[dists.partition_point(|&d| strictly_less(d, r))];
            let mut best = 1.0_f64;
            for &r in dists.iter().filter(|&&d| d > 0.0) {
                let inner = mass_below(r);
                let outer = mass_below(2.0 * r);
                best = best.max(outer / inner);
            }
            best
        })
        .reduce(|| 1.0, f64::max)
}
