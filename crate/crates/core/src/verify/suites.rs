//! Named collections of checks with per-check seeds and one rerun on failure.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::checks::*;
use super::{TestReport, Verdict, DEFAULT_LEVEL};
use crate::error::{Error, Result};
use crate::linebreaking::Algorithm;
use crate::rng::derive_seed;
use crate::rtree::ShapeSignature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Shapes,
    Lengths,
    Mixture,
    Dirichlet,
    Brownian,
    Moments,
    All,
}

impl Suite {
    pub const PARTS: [Suite; 6] =
        [Suite::Shapes, Suite::Lengths, Suite::Mixture, Suite::Dirichlet, Suite::Brownian, Suite::Moments];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Shapes => "shapes",
            Suite::Lengths => "lengths",
            Suite::Mixture => "mixture",
            Suite::Dirichlet => "dirichlet",
            Suite::Brownian => "brownian",
            Suite::Moments => "moments",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::PARTS
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Parameter(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub alphas: Vec<f64>,
    /// Replicates per Monte Carlo check.
    pub n: usize,
    pub seed: u64,
    /// Significance level of p-value tests.
    pub level: f64,
    /// Rerun a failing check once with a fresh seed.
    pub rerun: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { alphas: vec![1.2, 1.5, 1.8], n: 10_000, seed: 1, level: DEFAULT_LEVEL, rerun: true }
    }
}

/// Runs one check under `label`: seed `derive_seed(seed, label, 0)`, and on
/// failure (if enabled) a second attempt with `derive_seed(seed, label, 1)`.
/// Only a double failure is reported as a failure.
pub fn run_check(label: &str, cfg: &SuiteConfig, check: impl Fn(u64) -> Result<TestReport>) -> Result<TestReport> {
    let mut first = check(derive_seed(cfg.seed, label, 0))?.at_level(cfg.level);
    first.name = label.to_string();
    if first.verdict != Verdict::Fail || !cfg.rerun {
        return Ok(first);
    }
    let mut second = check(derive_seed(cfg.seed, label, 1))?.at_level(cfg.level);
    second.name = label.to_string();
    second.attempts = 2;
    let prior = format!("first attempt failed (seed {}, stat {:.6}, p {:?})", first.seed, first.stat, first.pvalue);
    second.detail = Some(match second.detail.take() {
        Some(d) => format!("{prior}; {d}"),
        None => prior,
    });
    Ok(second)
}

fn shapes(cfg: &SuiteConfig, out: &mut Vec<TestReport>) -> Result<()> {
    let n = cfg.n;
    for &a in &cfg.alphas {
        for p in 1..=6 {
            out.push(run_check(&format!("shapes/formula/alpha={a}/p={p}"), cfg, |_| check_shape_formula(a, p))?);
        }
        for alg in [Algorithm::I, Algorithm::II, Algorithm::Marchal] {
            for p in 3..=5 {
                out.push(run_check(&format!("shapes/{alg}/alpha={a}/p={p}"), cfg, |s| {
                    check_shape_frequencies(a, p, alg, n, s)
                })?);
            }
        }
        out.push(run_check(&format!("shapes/normalized-I/alpha={a}/p=4"), cfg, |s| {
            check_shape_frequencies(a, 4, Algorithm::NormalizedI, n, s)
        })?);
        out.push(run_check(&format!("shapes/I-vs-II/alpha={a}/p=5"), cfg, |s| {
            check_shape_agreement(a, 5, Algorithm::I, Algorithm::II, n, s)
        })?);
    }
    out.push(run_check("shapes/remy-uniform/p=4", cfg, |s| check_remy_uniformity(4, n, s))?);
    Ok(())
}

fn lengths(cfg: &SuiteConfig, out: &mut Vec<TestReport>) -> Result<()> {
    let n = cfg.n;
    let shapes = [(2, "((()()))"), (3, "(((()())()))"), (3, "((()()()))")];
    for &a in &cfg.alphas {
        for (p, sig) in shapes {
            let shape = ShapeSignature::parse(sig)?;
            out.push(run_check(&format!("lengths/given-shape/alpha={a}/p={p}/{shape}"), cfg, |s| {
                check_lengths_given_shape(a, p, &shape, n, s)
            })?);
        }
        out.push(run_check(&format!("lengths/normalized-scaling/alpha={a}/p=4"), cfg, |s| {
            check_normalized_scaling(a, 4, n, s)
        })?);
        out.push(run_check(&format!("lengths/edge-probability-limit/alpha={a}"), cfg, |s| {
            check_edge_probability_limit(a, 1_000, 10_000, 0.01, s)
        })?);
        out.push(run_check(&format!("lengths/ledgers/alpha={a}/p=10000"), cfg, |s| check_exact_ledgers(a, 10_000, s))?);
    }
    Ok(())
}

fn mixture(cfg: &SuiteConfig, out: &mut Vec<TestReport>) -> Result<()> {
    let n = cfg.n;
    for &a in &cfg.alphas {
        out.push(run_check(&format!("mixture/total-length/alpha={a}/p=4"), cfg, |s| {
            check_total_length_mixture(a, 4, n, s)
        })?);
    }
    let sets: [(f64, &[f64]); 2] = [(0.5, &[0.5, 0.5]), (1.0 / 3.0, &[1.0 / 3.0, 1.0])];
    for (i, (beta, thetas)) in sets.into_iter().enumerate() {
        out.push(run_check(&format!("mixture/lengths-masses/set{}", i + 1), cfg, |s| {
            check_lengths_masses(beta, thetas, n, s)
        })?);
        out.push(run_check(&format!("mixture/lengths-masses-moment/set{}", i + 1), cfg, |s| {
            check_lengths_masses_moment(beta, thetas, n, s)
        })?);
    }
    Ok(())
}

fn dirichlet(cfg: &SuiteConfig, out: &mut Vec<TestReport>) -> Result<()> {
    let n = cfg.n;
    type Check = Box<dyn Fn(u64) -> Result<TestReport>>;
    let singles: Vec<(&str, Check)> = vec![
        ("dirichlet/gamma-ml/set1", Box::new(move |s| check_gamma_ml(0.5, 1.0, n, s))),
        ("dirichlet/gamma-ml/set2", Box::new(move |s| check_gamma_ml(1.0 / 3.0, 4.0 / 3.0, n, s))),
        ("dirichlet/decomposition/set1", Box::new(move |s| check_decomposition(&[1.0, 1.0, 1.0], 2, n, s))),
        ("dirichlet/decomposition/set2", Box::new(move |s| check_decomposition(&[0.5, 1.5, 2.0, 1.0], 2, n, s))),
        ("dirichlet/aggregation", Box::new(move |s| check_aggregation(&[1.0, 2.0, 3.0, 0.5], n, s))),
        ("dirichlet/recursion/set1", Box::new(move |s| check_recursion(1.5, 2, 3, &[2.0], 1, n, s))),
        ("dirichlet/recursion/set2", Box::new(move |s| check_recursion(1.2, 3, 5, &[4.0, 5.0], 2, n, s))),
        ("dirichlet/recursion2/set1", Box::new(move |s| check_recursion2(1.5, 1, 1, &[], n, s))),
        ("dirichlet/recursion2/set2", Box::new(move |s| check_recursion2(1.5, 2, 3, &[1.0], n, s))),
    ];
    for (label, f) in &singles {
        out.push(run_check(label, cfg, f)?);
    }
    for (i, a) in [vec![1.0, 1.0], vec![0.5, 1.5, 3.0]].into_iter().enumerate() {
        out.push(run_check(&format!("dirichlet/size-bias/index/set{}", i + 1), cfg, |s| {
            Ok(check_size_bias(&a, n, s)?.remove(0))
        })?);
        out.push(run_check(&format!("dirichlet/size-bias/conditional/set{}", i + 1), cfg, |s| {
            Ok(check_size_bias(&a, n, s)?.remove(1))
        })?);
    }
    Ok(())
}

fn brownian(cfg: &SuiteConfig, out: &mut Vec<TestReport>) -> Result<()> {
    let n = cfg.n;
    out.push(run_check("brownian/increments/p=5", cfg, |s| check_brownian_reduction(5, n, s))?);
    out.push(run_check("brownian/increment-correlation/p=5", cfg, |s| check_brownian_correlation(5, n, s))?);
    out.push(run_check("brownian/aldous-first-point", cfg, |s| check_aldous_first_point(n, s))?);
    out.push(run_check("brownian/aldous-vs-I/p=4", cfg, |s| check_aldous_vs_chain(4, n, s))?);
    Ok(())
}

fn moments(cfg: &SuiteConfig, out: &mut Vec<TestReport>) -> Result<()> {
    let n = cfg.n;
    let mut alphas = cfg.alphas.clone();
    if !alphas.contains(&2.0) {
        alphas.push(2.0);
    }
    for &a in &alphas {
        out.push(run_check(&format!("moments/chain/alpha={a}"), cfg, |s| check_chain_moments(a, 6, 3, n, s))?);
    }
    let reps = n.min(2_000);
    for &a in cfg.alphas.iter().filter(|&&a| a < 2.0) {
        out.push(run_check(&format!("moments/truncated-m1/alpha={a}"), cfg, |s| {
            check_truncated_m1(a, 10_000, reps, s)
        })?);
    }
    out.push(run_check("moments/ks-calibration", cfg, |s| check_ks_calibration(1_000, 200, s))?);
    Ok(())
}

/// Runs a suite; reports come back in a fixed order.
pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<Vec<TestReport>> {
    for &a in &cfg.alphas {
        crate::chain::AlphaParam::new(a)?;
    }
    crate::error::ensure!(cfg.n >= 1, Parameter, "n must be >= 1");
    crate::error::ensure!(cfg.level > 0.0 && cfg.level < 1.0, Parameter, "level must be in (0, 1)");
    let mut out = Vec::new();
    let parts: Vec<Suite> = if suite == Suite::All { Suite::PARTS.to_vec() } else { vec![suite] };
    for s in parts {
        match s {
            Suite::Shapes => shapes(cfg, &mut out)?,
            Suite::Lengths => lengths(cfg, &mut out)?,
            Suite::Mixture => mixture(cfg, &mut out)?,
            Suite::Dirichlet => dirichlet(cfg, &mut out)?,
            Suite::Brownian => brownian(cfg, &mut out)?,
            Suite::Moments => moments(cfg, &mut out)?,
            Suite::All => unreachable!(),
        }
    }
    Ok(out)
}
