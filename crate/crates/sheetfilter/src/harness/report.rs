use super::checks::{CheckLevel, CheckResult};
use super::config::ExperimentConfig;
use serde::Serialize;
use serde_json::Value;
use std::fmt::Write as _;

pub const ARTIFACT_VERSION: &str = concat!("sheetfilter ", env!("CARGO_PKG_VERSION"));

/// Contents of `summary.json`. Wall-clock timing is printed to stdout and
/// kept out of the artifacts so reruns are byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub artifact_version: String,
    pub subcommand: String,
    pub check_level: CheckLevel,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    /// Subcommand-specific numbers.
    pub summary: Value,
    /// Trace and field files written by the run.
    pub artifacts: Vec<String>,
    pub config: ExperimentConfig,
}

impl RunReport {
    pub fn new(subcommand: &str, level: CheckLevel, config: &ExperimentConfig, checks: Vec<CheckResult>, summary: Value) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        RunReport {
            artifact_version: ARTIFACT_VERSION.into(),
            subcommand: subcommand.into(),
            check_level: level,
            passed,
            checks,
            summary,
            artifacts: Vec::new(),
            config: config.clone(),
        }
    }

    /// `report.txt`.
    pub fn human(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{} - {}", self.artifact_version, self.subcommand).unwrap();
        let c = &self.config;
        writeln!(
            s,
            "grid {}x{} on [0,{}]x[0,{}], H = ({}, {}), seed {}, level {:?}",
            c.grid.n1, c.grid.n2, c.grid.t1, c.grid.t2, c.hurst.alpha, c.hurst.beta, c.seeds.master, self.check_level
        )
        .unwrap();
        if !self.checks.is_empty() {
            writeln!(s).unwrap();
            for check in &self.checks {
                writeln!(s, "{}", check.summary_line()).unwrap();
                for p in check.parts.iter().filter(|p| !p.passed) {
                    writeln!(s, "       failing: {} = {:.6e} > {:.6e}", p.label, p.value, p.bound).unwrap();
                }
            }
        }
        if let Value::Object(m) = &self.summary {
            let scalars: Vec<_> = m.iter().filter(|(_, v)| v.is_number() || v.is_string() || v.is_boolean()).collect();
            if !scalars.is_empty() {
                writeln!(s).unwrap();
                for (k, v) in scalars {
                    writeln!(s, "{k}: {v}").unwrap();
                }
            }
        }
        if !self.artifacts.is_empty() {
            writeln!(s, "\nartifacts: {}", self.artifacts.join(", ")).unwrap();
        }
        writeln!(s, "\nverdict: {}", if self.passed { "PASS" } else { "FAIL" }).unwrap();
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn verdict_follows_checks() {
        let cfg = ExperimentConfig::default();
        let r = RunReport::new("simulate", CheckLevel::Fast, &cfg, vec![], json!({"n": 3}));
        assert!(r.passed);
        let text = r.human();
        assert!(text.contains("n: 3"));
        assert!(text.ends_with("verdict: PASS\n"));
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["config"]["schema_version"], json!(cfg.schema_version));
        assert!(v.get("timing").is_none());
    }
}
