//! `stable-tree bench`: growth time, peak memory and a doubling regression
//! of per-round and per-query cost against `log2 p`.

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::linebreaking::{grow_with, Algorithm, GrowthConfig};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub alpha: f64,
    pub leaves: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub doubling_steps: usize,
    pub queries: usize,
}

impl BenchConfig {
    pub fn growth(&self, leaves: usize) -> Result<GrowthConfig> {
        GrowthConfig::new(self.alpha, leaves, self.algorithm, self.seed)
    }

    pub fn validate(&self) -> Result<()> {
        self.growth(self.leaves)?;
        ensure!(self.doubling_steps <= 20, Parameter, "at most 20 doubling steps");
        Ok(())
    }

    /// Leaf counts of the regression, smallest first, ending at `leaves`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = (0..=self.doubling_steps).rev().map(|j| (self.leaves >> j).max(1)).collect();
        s.dedup();
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingPoint {
    pub leaves: usize,
    pub grow_seconds: f64,
    pub ns_per_round: f64,
    pub ns_per_query: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub wall_seconds: f64,
    pub rounds_per_second: f64,
    /// `VmHWM` of the process in KiB; `None` off Linux.
    pub peak_rss_kib: Option<u64>,
    pub total_length: f64,
    pub invariants_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariant_error: Option<String>,
    pub doubling: Vec<DoublingPoint>,
    /// Least-squares slope of ns/round against `log2 p`.
    pub round_slope_per_doubling: f64,
    /// Least-squares slope of ns/query against `log2 p`.
    pub query_slope_per_doubling: f64,
    /// Log-log slope of ns/round against `p`: near 0 for logarithmic cost,
    /// near 1 for linear cost.
    pub round_loglog_slope: f64,
    /// Soft gate: `round_loglog_slope < 0.5`.
    pub consistent_with_log_cost: bool,
}

pub fn peak_rss_kib() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let mut doubling = Vec::new();
    let mut last = None;
    for p in cfg.sizes() {
        let growth = cfg.growth(p)?;
        let start = Instant::now();
        let outcome = grow_with(&growth, &mut growth.rng())?;
        let grow_seconds = start.elapsed().as_secs_f64();
        let mut rng = RngStream::new(cfg.seed, 1);
        let start = Instant::now();
        for _ in 0..cfg.queries {
            black_box(outcome.tree.sample_skeleton_point(&mut rng));
        }
        let ns_per_query = if cfg.queries > 0 { start.elapsed().as_nanos() as f64 / cfg.queries as f64 } else { 0.0 };
        doubling.push(DoublingPoint {
            leaves: p,
            grow_seconds,
            ns_per_round: grow_seconds * 1e9 / p as f64,
            ns_per_query,
        });
        last = Some((outcome.tree, grow_seconds));
    }
    let (tree, wall_seconds) = last.expect("at least one size");
    let invariant = tree.check_invariants();
    let log_p: Vec<f64> = doubling.iter().map(|d| (d.leaves as f64).log2()).collect();
    let round: Vec<f64> = doubling.iter().map(|d| d.ns_per_round).collect();
    let query: Vec<f64> = doubling.iter().map(|d| d.ns_per_query).collect();
    let log_round: Vec<f64> = round.iter().map(|r| r.max(1e-3).log2()).collect();
    let round_loglog_slope = slope(&log_p, &log_round);
    Ok(BenchReport {
        config: cfg.clone(),
        wall_seconds,
        rounds_per_second: cfg.leaves as f64 / wall_seconds.max(1e-12),
        peak_rss_kib: peak_rss_kib(),
        total_length: tree.total_length(),
        invariants_ok: invariant.is_ok(),
        invariant_error: invariant.err().map(|e| e.to_string()),
        doubling,
        round_slope_per_doubling: slope(&log_p, &round),
        query_slope_per_doubling: slope(&log_p, &query),
        round_loglog_slope,
        consistent_with_log_cost: round_loglog_slope < 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_double() {
        let c =
            BenchConfig { alpha: 1.5, leaves: 1000, seed: 1, algorithm: Algorithm::I, doubling_steps: 3, queries: 10 };
        assert_eq!(c.sizes(), vec![125, 250, 500, 1000]);
        let c = BenchConfig { leaves: 2, ..c };
        assert_eq!(c.sizes(), vec![1, 2]);
    }

    #[test]
    fn slope_of_line() {
        assert!((slope(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn small_bench_runs() {
        let c = BenchConfig {
            alpha: 1.5,
            leaves: 2000,
            seed: 3,
            algorithm: Algorithm::II,
            doubling_steps: 2,
            queries: 100,
        };
        let r = run_bench(&c).unwrap();
        assert!(r.invariants_ok);
        assert_eq!(r.doubling.len(), 3);
        assert!(r.total_length > 0.0);
    }
}
