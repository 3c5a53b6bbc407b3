//! Oracles and statistical checks.
//!
//! Every check returns a [`TestReport`] whose verdict is a pure function of
//! its statistic and threshold: p-value tests pass when `pvalue >= threshold`,
//! moment z-tests when `|stat| <= threshold`, exact comparisons when
//! `stat <= threshold`. Reports serialize as one JSON object per line.

mod checks;
mod enumerate;
pub mod stats;
mod suites;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checks::*;
pub use enumerate::{
    enumerate_labelled_shape_law, enumerate_shape_law, labelled_tree_count, shape_formula_table, vertex_factor,
    ShapeTable, MAX_ENUMERATION_P,
};
pub use suites::{run_check, run_suite, Suite, SuiteConfig};

/// Default significance level of p-value tests.
pub const DEFAULT_LEVEL: f64 = 0.01;

/// Default bound on `|z|` for moment checks.
pub const DEFAULT_Z_BOUND: f64 = 5.0;

/// Tolerance of exact comparisons.
pub const EXACT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatKind {
    #[serde(rename = "KS")]
    Ks,
    #[serde(rename = "chi-square")]
    ChiSquare,
    #[serde(rename = "moment-z")]
    MomentZ,
    #[serde(rename = "exact")]
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub kind: StatKind,
    /// Serialized as `null` when not finite (inconclusive runs, infinite
    /// chi-square statistics).
    #[serde(deserialize_with = "nullable_f64")]
    pub stat: f64,
    /// `None` for exact comparisons and for inconclusive runs.
    pub pvalue: Option<f64>,
    pub threshold: f64,
    pub n: usize,
    pub seed: u64,
    pub verdict: Verdict,
    /// Number of seeded attempts (2 when the first one failed).
    #[serde(default = "one")]
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

fn nullable_f64<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn one() -> u32 {
    1
}

impl TestReport {
    fn build(name: &str, kind: StatKind, stat: f64, pvalue: Option<f64>, threshold: f64, n: usize, seed: u64) -> Self {
        let mut r = Self {
            name: name.to_string(),
            kind,
            stat,
            pvalue,
            threshold,
            n,
            seed,
            verdict: Verdict::Inconclusive,
            attempts: 1,
            detail: None,
        };
        r.verdict = r.decide();
        r
    }

    /// A KS or chi-square report at the default level.
    pub fn from_pvalue(name: &str, kind: StatKind, stat: f64, pvalue: f64, n: usize, seed: u64) -> Self {
        Self::build(name, kind, stat, Some(pvalue), DEFAULT_LEVEL, n, seed)
    }

    /// A moment z-test report with bound [`DEFAULT_Z_BOUND`].
    pub fn from_z(name: &str, z: f64, n: usize, seed: u64) -> Self {
        Self::build(name, StatKind::MomentZ, z, Some(stats::normal_two_sided(z)), DEFAULT_Z_BOUND, n, seed)
    }

    /// An exact comparison: `error <= tol` passes.
    pub fn from_error(name: &str, error: f64, tol: f64, n: usize, seed: u64) -> Self {
        Self::build(name, StatKind::Exact, error, None, tol, n, seed)
    }

    pub fn inconclusive(name: &str, kind: StatKind, n: usize, seed: u64, why: impl Into<String>) -> Self {
        Self::build(name, kind, f64::NAN, None, DEFAULT_LEVEL, n, seed).with_detail(why)
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    /// Verdict implied by the statistic and threshold.
    pub fn decide(&self) -> Verdict {
        if self.stat.is_nan() || (self.n < stats::MIN_SAMPLES && self.kind != StatKind::Exact) {
            return Verdict::Inconclusive;
        }
        let ok = match self.kind {
            StatKind::Ks | StatKind::ChiSquare => self.pvalue.is_some_and(|p| p >= self.threshold),
            StatKind::MomentZ => self.stat.abs() <= self.threshold,
            StatKind::Exact => self.stat <= self.threshold,
        };
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Re-decides a p-value test at another significance level.
    pub fn at_level(mut self, level: f64) -> Self {
        if matches!(self.kind, StatKind::Ks | StatKind::ChiSquare) {
            self.threshold = level;
            self.verdict = self.decide();
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json_line(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// One human-readable line.
    pub fn summary(&self) -> String {
        let p = self.pvalue.map(|p| format!(" p={p:.4}")).unwrap_or_default();
        format!(
            "{:<13} {} [{}] stat={:.6}{} threshold={} n={} seed={}",
            self.verdict.to_string().to_uppercase(),
            self.name,
            serde_json::to_value(self.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
            self.stat,
            p,
            self.threshold,
            self.n,
            self.seed
        )
    }
}

/// Writes reports as JSON lines.
pub fn reports_to_jsonl(reports: &[TestReport]) -> Result<String> {
    let mut out = String::new();
    for r in reports {
        out.push_str(&r.to_json_line()?);
        out.push('\n');
    }
    Ok(out)
}

pub fn reports_from_jsonl(s: &str) -> Result<Vec<TestReport>> {
    s.lines().filter(|l| !l.trim().is_empty()).map(TestReport::from_json_line).collect()
}

impl FromStr for StatKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Parse(format!("unknown statistic kind {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_follow_thresholds() {
        assert!(TestReport::from_pvalue("a", StatKind::Ks, 0.1, 0.02, 100, 1).passed());
        assert!(!TestReport::from_pvalue("a", StatKind::Ks, 0.1, 0.005, 100, 1).passed());
        assert!(TestReport::from_pvalue("a", StatKind::Ks, 0.1, 0.005, 100, 1).at_level(0.001).passed());
        assert!(TestReport::from_z("z", -4.9, 100, 1).passed());
        assert!(!TestReport::from_z("z", 5.1, 100, 1).passed());
        assert!(TestReport::from_error("e", 1e-12, EXACT_TOL, 1, 1).passed());
        assert_eq!(TestReport::from_pvalue("a", StatKind::Ks, 0.1, 0.5, 5, 1).verdict, Verdict::Inconclusive);
        assert_eq!(TestReport::inconclusive("i", StatKind::Ks, 100, 1, "starved").verdict, Verdict::Inconclusive);
    }

    #[test]
    fn json_lines_round_trip() {
        let rs = vec![
            TestReport::from_pvalue("a", StatKind::ChiSquare, 3.0, 0.4, 1000, 7),
            TestReport::from_error("b", 0.0, EXACT_TOL, 1, 7).with_detail("x"),
        ];
        let s = reports_to_jsonl(&rs).unwrap();
        assert!(s.lines().next().unwrap().contains("\"kind\":\"chi-square\""));
        assert_eq!(reports_from_jsonl(&s).unwrap(), rs);
        let inc = TestReport::inconclusive("c", StatKind::Ks, 0, 7, "starved");
        let back = TestReport::from_json_line(&inc.to_json_line().unwrap()).unwrap();
        assert!(back.stat.is_nan());
        assert_eq!(back.verdict, Verdict::Inconclusive);
        assert_eq!("moment-z".parse::<StatKind>().unwrap(), StatKind::MomentZ);
    }
}
