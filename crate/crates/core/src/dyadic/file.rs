use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{CubeRecord, DyadicGrid, GridError};
use crate::space::FiniteSht;

pub const GRID_SCHEMA: &str = "sht-grid/1";

/// On-disk grid: cube records referring to point indices of a space file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridFile {
    pub schema: String,
    pub delta: f64,
    pub epsilon: f64,
    pub c_sandwich: f64,
    pub cubes: Vec<CubeRecord>,
}

impl GridFile {
    pub fn from_grid(grid: &DyadicGrid) -> Self {
        Self {
            schema: GRID_SCHEMA.to_string(),
            delta: grid.delta(),
            epsilon: grid.epsilon(),
            c_sandwich: grid.c_sandwich(),
            cubes: grid.to_records(),
        }
    }

    pub fn into_grid(self, space: Arc<FiniteSht>) -> Result<DyadicGrid, GridError> {
        if self.schema != GRID_SCHEMA {
            return Err(GridError::Schema(format!(
                "expected schema {GRID_SCHEMA}, found {}",
                self.schema
            )));
        }
        DyadicGrid::from_records(space, self.delta, self.epsilon, self.c_sandwich, self.cubes)
    }

    pub fn parse(text: &str, space: Arc<FiniteSht>) -> Result<DyadicGrid, GridError> {
        serde_json::from_str::<GridFile>(text)?.into_grid(space)
    }

    pub fn to_json(grid: &DyadicGrid) -> String {
        serde_json::to_string_pretty(&Self::from_grid(grid)).expect("grid serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{build_grid, verify_grid};
    use crate::space::build_interval_space;

    #[test]
    fn roundtrip_keeps_cubes_and_constants() {
        let space = Arc::new(build_interval_space(16).unwrap());
        let g = build_grid(space.clone(), 0.125).unwrap();
        let back = GridFile::parse(&GridFile::to_json(&g), space).unwrap();
        assert_eq!(back.to_records(), g.to_records());
        assert_eq!(back.epsilon(), g.epsilon());
        assert_eq!(back.c_sandwich(), g.c_sandwich());
        assert!(verify_grid(&back).all_passed());
    }

    #[test]
    fn out_of_range_point_is_rejected() {
        let space = Arc::new(build_interval_space(2).unwrap());
        let text = r#"{"schema":"sht-grid/1","delta":0.125,"epsilon":0.5,"c_sandwich":1,
            "cubes":[{"level":0,"center":0,"parent":null,"members":[0,5]}]}"#;
        assert!(matches!(GridFile::parse(text, space), Err(GridError::Schema(_))));
    }
}
