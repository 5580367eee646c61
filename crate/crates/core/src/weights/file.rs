use serde::{Deserialize, Serialize};

use super::WeightError;

pub const WEIGHT_SCHEMA: &str = "sht-weight/1";

/// One value per point, in the order of the space file. Weights require
/// positive values; the same format carries signed functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFile {
    pub schema: String,
    pub values: Vec<f64>,
}

impl WeightFile {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            schema: WEIGHT_SCHEMA.into(),
            values,
        }
    }

    /// Parses and checks the schema tag and length; values are returned as-is.
    pub fn parse(text: &str, n: usize) -> Result<Vec<f64>, WeightError> {
        let file: WeightFile = serde_json::from_str(text)?;
        if file.schema != WEIGHT_SCHEMA {
            return Err(WeightError::Schema(format!("unknown schema {:?}", file.schema)));
        }
        if file.values.len() != n {
            return Err(WeightError::LengthMismatch {
                expected: n,
                found: file.values.len(),
            });
        }
        if file.values.iter().any(|v| !v.is_finite()) {
            return Err(WeightError::Schema("non-finite value".into()));
        }
        Ok(file.values)
    }

    pub fn to_json(values: &[f64]) -> String {
        serde_json::to_string_pretty(&Self::new(values.to_vec())).expect("plain data")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_errors() {
        let v = vec![1.0, 0.1 + 0.2, -3.5];
        assert_eq!(WeightFile::parse(&WeightFile::to_json(&v), 3).unwrap(), v);
        assert!(matches!(
            WeightFile::parse(&WeightFile::to_json(&v), 2),
            Err(WeightError::LengthMismatch { .. })
        ));
        let bad = r#"{"schema":"sht-weight/0","values":[1]}"#;
        assert!(matches!(WeightFile::parse(bad, 1), Err(WeightError::Schema(_))));
    }
}
