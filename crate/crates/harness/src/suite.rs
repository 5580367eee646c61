//! Smoke and full suites: every experiment at desk size and the
//! acceptance-size scaling sweeps compared against golden reports, plus the
//! acceptance criteria at the full level.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use sht_core::dyadic::build_grid;
use sht_core::space::build_interval_space;
use sht_core::weights::{characteristics, Weight};

use crate::config::ExperimentConfig;
use crate::criteria;
use crate::experiments::Registry;
use crate::HarnessError;

macro_rules! configs {
    ($dir:literal: $($kind:literal),* $(,)?) => {
        &[$(($kind, include_str!(concat!("../configs/", $dir, "/", $kind, ".toml")))),*]
    };
}

/// `(kind, config text)` for every experiment at desk-check size.
pub const SMOKE_CONFIGS: &[(&str, &str)] = configs!("smoke":
    "a1-mixed",
    "buckley-scaling",
    "coifman-fefferman",
    "commutator",
    "dual-maximal",
    "extrapolation",
    "linear-growth",
    "mixed-a2-ainf",
    "weak-endpoint",
);

/// Acceptance-size configs for the scaling criteria.
pub const FULL_CONFIGS: &[(&str, &str)] = configs!("full":
    "buckley-scaling",
    "commutator",
    "mixed-a2-ainf",
    "weak-endpoint",
);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteLevel {
    Smoke,
    Full,
}

impl std::str::FromStr for SuiteLevel {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "smoke" => Ok(Self::Smoke),
            "full" => Ok(Self::Full),
            other => Err(HarnessError::Config(format!("suite level must be smoke or full, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub goldens: PathBuf,
    /// Rewrite golden files instead of comparing against them.
    pub bless: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            goldens: default_goldens_dir(),
            bless: false,
        }
    }
}

pub fn default_goldens_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("goldens")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub level: SuiteLevel,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `None` when equal, otherwise the first differing line of `name`.
pub fn golden_diff(name: &str, expected: &str, actual: &str) -> Option<String> {
    if expected == actual {
        return None;
    }
    let (mut e, mut a) = (expected.lines(), actual.lines());
    let mut line = 1;
    loop {
        match (e.next(), a.next()) {
            (Some(x), Some(y)) if x == y => line += 1,
            (x, y) => {
                return Some(format!(
                    "golden {name} differs at line {line}: expected {:?}, got {:?}",
                    x.unwrap_or("<end of file>"),
                    y.unwrap_or("<end of file>")
                ))
            }
        }
    }
}

fn golden_check(kind: &str, json: &str, opts: &SuiteOptions) -> CheckResult {
    let path = opts.goldens.join(format!("{kind}.json"));
    let name = format!("golden {kind}");
    if opts.bless {
        let written = std::fs::create_dir_all(&opts.goldens).and_then(|_| std::fs::write(&path, json));
        return CheckResult {
            name,
            passed: written.is_ok(),
            detail: match written {
                Ok(()) => format!("wrote {}", path.display()),
                Err(e) => format!("{}: {e}", path.display()),
            },
        };
    }
    match std::fs::read_to_string(&path) {
        Ok(expected) => match golden_diff(&path.display().to_string(), &expected, json) {
            None => CheckResult {
                name,
                passed: true,
                detail: "matches".into(),
            },
            Some(diff) => CheckResult {
                name,
                passed: false,
                detail: diff,
            },
        },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: format!("{}: {e}", path.display()),
        },
    }
}

/// Constant weights have every characteristic equal to 1.
fn constant_weight_check() -> CheckResult {
    let detail = (|| -> Result<String, HarnessError> {
        let space = Arc::new(build_interval_space(16)?);
        let grid = build_grid(space.clone(), crate::setup::default_delta(&space))?;
        let w = Weight::constant(space, 3.0)?;
        let c = characteristics(&w, &grid, 2.0)?;
        let ones = [c.ap, c.a1, c.ainf_fw, c.ainf_h, c.sigma_ainf_fw];
        if ones.iter().all(|v| (v - 1.0).abs() <= 1e-12) {
            Ok("all equal 1".to_string())
        } else {
            Err(HarnessError::Config(format!("constants {ones:?}")))
        }
    })();
    CheckResult {
        name: "constant weight characteristics".into(),
        passed: detail.is_ok(),
        detail: detail.unwrap_or_else(|e| e.to_string()),
    }
}

fn small_oracle_check() -> CheckResult {
    let run = || -> Result<Vec<String>, HarnessError> {
        let mut bad = Vec::new();
        for n in 1..=4 {
            let space = Arc::new(build_interval_space(n)?);
            let grid = build_grid(space.clone(), crate::setup::default_delta(&space))?;
            bad.extend(criteria::oracle_mismatches(&grid, n as u64)?);
        }
        Ok(bad)
    };
    let (passed, detail) = match run() {
        Ok(bad) if bad.is_empty() => (true, "intervals n <= 4 agree".to_string()),
        Ok(bad) => (false, bad.join("; ")),
        Err(e) => (false, e.to_string()),
    };
    CheckResult {
        name: "oracle agreement on tiny intervals".into(),
        passed,
        detail,
    }
}

pub fn suite(level: SuiteLevel, opts: &SuiteOptions) -> SuiteReport {
    let registry = Registry::default();
    let mut checks = vec![constant_weight_check(), small_oracle_check()];
    for (kind, text) in SMOKE_CONFIGS {
        let result = ExperimentConfig::parse(text).and_then(|cfg| registry.run(&cfg));
        match result {
            Ok(report) => {
                let failing: Vec<&str> = report.verdicts.iter().filter(|v| !v.passed).map(|v| v.name.as_str()).collect();
                checks.push(CheckResult {
                    name: format!("experiment {kind}"),
                    passed: failing.is_empty(),
                    detail: if failing.is_empty() {
                        format!("{} verdicts pass", report.verdicts.len())
                    } else {
                        format!("failing: {}", failing.join("; "))
                    },
                });
                checks.push(golden_check(kind, &report.to_json(), opts));
            }
            Err(e) => checks.push(CheckResult {
                name: format!("experiment {kind}"),
                passed: false,
                detail: e.to_string(),
            }),
        }
    }
    for (kind, text) in FULL_CONFIGS {
        let name = format!("{kind}.full");
        match ExperimentConfig::parse(text).and_then(|cfg| registry.run(&cfg)) {
            Ok(report) => checks.push(golden_check(&name, &report.to_json(), opts)),
            Err(e) => checks.push(CheckResult {
                name: format!("golden {name}"),
                passed: false,
                detail: e.to_string(),
            }),
        }
    }
    if level == SuiteLevel::Full {
        for o in criteria::run_all() {
            checks.push(CheckResult {
                name: format!("criterion {} {}", o.id, o.name),
                passed: o.passed,
                detail: o.detail,
            });
        }
    }
    SuiteReport { level, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diff_names_the_first_differing_line() {
        assert_eq!(golden_diff("g", "a\nb\n", "a\nb\n"), None);
        let d = golden_diff("g.json", "a\nb\nc", "a\nx\nc").unwrap();
        assert!(d.contains("g.json") && d.contains("line 2") && d.contains("\"b\"") && d.contains("\"x\""));
        let short = golden_diff("g", "a\nb", "a").unwrap();
        assert!(short.contains("<end of file>"));
    }

    #[test]
    fn every_kind_has_a_smoke_config() {
        let kinds: Vec<&str> = Registry::default().kinds().collect();
        let smoke: Vec<&str> = SMOKE_CONFIGS.iter().map(|(k, _)| *k).collect();
        assert_eq!(kinds, smoke);
        for (kind, text) in SMOKE_CONFIGS.iter().chain(FULL_CONFIGS) {
            assert_eq!(ExperimentConfig::parse(text).unwrap().kind, *kind);
        }
    }
}
