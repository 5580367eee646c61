//! `sht-exp/1` experiment configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const CONFIG_SCHEMA: &str = "sht-exp/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    pub kind: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub space: SpaceSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub weights: WeightSpec,
    #[serde(default)]
    pub kernel: KernelSpec,
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    #[serde(default = "default_r")]
    pub r: Vec<f64>,
    #[serde(default = "default_k")]
    pub k: Vec<u32>,
    /// Exponent of the assumed bound in the extrapolation experiment.
    #[serde(default = "default_p0")]
    pub p0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_trials() -> usize {
    16
}

fn default_p() -> Vec<f64> {
    vec![2.0]
}

fn default_r() -> Vec<f64> {
    vec![2.0]
}

fn default_k() -> Vec<u32> {
    vec![1]
}

fn default_p0() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceSpec {
    Interval { n: usize },
    Cantor { level: u32 },
    Snowflake { n: usize, s: f64 },
    Graph { n: usize, edge_prob: f64, seed: u64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Defaults to `1 / (8 kappa^3)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightFamily {
    /// `x^a` for each parameter `a`.
    Power,
    /// Log-normal with each parameter as sigma.
    Lognormal,
    /// Constant weight; parameters are the constants.
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub family: WeightFamily,
    pub params: Vec<f64>,
}

impl Default for WeightSpec {
    fn default() -> Self {
        Self {
            family: WeightFamily::Constant,
            params: vec![1.0],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "choice", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    #[default]
    GradedSign,
    File { path: PathBuf },
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.schema != CONFIG_SCHEMA {
            return bad(format!("schema must be {CONFIG_SCHEMA:?}, got {:?}", self.schema));
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        match &self.space {
            SpaceSpec::Interval { n } | SpaceSpec::Graph { n, .. } if *n == 0 => return bad("n must be positive".into()),
            SpaceSpec::Snowflake { n, s } if *n == 0 || !(*s > 0.0) => {
                return bad("snowflake needs n > 0 and s > 0".into())
            }
            SpaceSpec::Graph { edge_prob, .. } if !(0.0..=1.0).contains(edge_prob) => {
                return bad("edge_prob must lie in [0, 1]".into())
            }
            SpaceSpec::Cantor { level } if *level > 12 => return bad("cantor level must be at most 12".into()),
            _ => {}
        }
        if let Some(d) = self.grid.delta {
            if !(d > 0.0 && d < 1.0) {
                return bad(format!("delta must lie in (0, 1), got {d}"));
            }
        }
        for &a in &self.weights.params {
            let ok = match self.weights.family {
                WeightFamily::Power => a.is_finite(),
                WeightFamily::Lognormal => a.is_finite() && a >= 0.0,
                WeightFamily::Constant => a.is_finite() && a > 0.0,
            };
            if !ok {
                return bad(format!("invalid weight parameter {a}"));
            }
        }
        if self.p.is_empty() || self.p.iter().any(|&p| !(p > 1.0 && p.is_finite())) {
            return bad("every p must lie in (1, inf)".into());
        }
        if self.r.is_empty() || self.r.iter().any(|&r| !(r > 1.0 && r.is_finite())) {
            return bad("every r must lie in (1, inf)".into());
        }
        if self.k.is_empty() || self.k.iter().any(|&k| k > 8) {
            return bad("every k must lie in 0..=8".into());
        }
        if !(self.p0 >= 1.0 && self.p0.is_finite()) {
            return bad("p0 must be at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
schema = "sht-exp/1"
kind = "buckley-scaling"
seed = 3
trials = 8
p = [2.0]

[space]
builder = "interval"
n = 64

[weights]
family = "power"
params = [0.0, 0.5]
"#;

    #[test]
    fn parse_and_roundtrip() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.space, SpaceSpec::Interval { n: 64 });
        assert_eq!(cfg.kernel, KernelSpec::GradedSign);
        assert_eq!(ExperimentConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        for (from, to) in [
            ("sht-exp/1", "sht-exp/2"),
            ("trials = 8", "trials = 0"),
            ("p = [2.0]", "p = [1.0]"),
            ("n = 64", "n = 0"),
            ("params = [0.0, 0.5]", "params = [0.0, inf]"),
            ("seed = 3", "seed = 3\nbogus = 1"),
        ] {
            let text = SAMPLE.replace(from, to);
            assert!(matches!(ExperimentConfig::parse(&text), Err(HarnessError::Config(_))), "{to}");
        }
    }
}
