use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{FiniteSht, SpaceError};

pub const SPACE_SCHEMA: &str = "sht-space/1";

/// On-disk space description.
///
/// `rho` holds the lower triangle row by row: row `i` lists
/// `rho(i, 0), ..., rho(i, i)`, so the last entry of every row is zero.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpaceFile {
    pub schema: String,
    pub points: Vec<String>,
    pub rho: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<f64>>,
}

impl SpaceFile {
    pub fn from_space(space: &FiniteSht) -> Self {
        let n = space.len();
        let rho = (0..n)
            .map(|i| (0..=i).map(|j| space.rho(i, j)).collect())
            .collect();
        Self {
            schema: SPACE_SCHEMA.to_string(),
            points: space.labels().to_vec(),
            rho,
            mu: space.masses().to_vec(),
            coords: space.coords().map(<[f64]>::to_vec),
        }
    }

    pub fn into_space(self) -> Result<FiniteSht, SpaceError> {
        if self.schema != SPACE_SCHEMA {
            return Err(SpaceError::Schema(format!(
                "expected schema {SPACE_SCHEMA}, found {}",
                self.schema
            )));
        }
        let n = self.points.len();
        if self.rho.len() != n {
            return Err(SpaceError::LengthMismatch {
                what: "distance rows",
                expected: n,
                found: self.rho.len(),
            });
        }
        for (i, row) in self.rho.iter().enumerate() {
            if row.len() != i + 1 {
                return Err(SpaceError::Schema(format!(
                    "row {i} of rho has {} entries, expected {}",
                    row.len(),
                    i + 1
                )));
            }
        }
        let rho = DMatrix::from_fn(n, n, |i, j| {
            if j <= i {
                self.rho[i][j]
            } else {
                self.rho[j][i]
            }
        });
        let space = FiniteSht::new(self.points, rho, self.mu)?;
        match self.coords {
            Some(c) => space.with_coords(c),
            None => Ok(space),
        }
    }

    pub fn parse(text: &str) -> Result<FiniteSht, SpaceError> {
        serde_json::from_str::<SpaceFile>(text)?.into_space()
    }

    pub fn to_json(space: &FiniteSht) -> String {
        serde_json::to_string_pretty(&Self::from_space(space)).expect("space serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::build_interval_space;

    #[test]
    fn file_roundtrip_preserves_certificates() {
        let space = build_interval_space(5).unwrap();
        let back = SpaceFile::parse(&SpaceFile::to_json(&space)).unwrap();
        assert_eq!(back.rho_matrix(), space.rho_matrix());
        assert_eq!(back.kappa(), space.kappa());
        assert_eq!(back.doubling(), space.doubling());
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let text = r#"{"schema":"sht-space/0","points":["a"],"rho":[[0]],"mu":[1]}"#;
        assert!(matches!(SpaceFile::parse(text), Err(SpaceError::Schema(_))));
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let text = r#"{"schema":"sht-space/1","points":["a","b"],"rho":[[0],[1]],"mu":[1,1]}"#;
        assert!(matches!(SpaceFile::parse(text), Err(SpaceError::Schema(_))));
    }
}
