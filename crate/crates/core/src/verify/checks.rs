//! Monte Carlo and exact checks of the distributional identities.
//!
//! Each check takes its sample size and seed explicitly and is deterministic
//! given them. Checks that combine several KS statistics report the smallest
//! p-value multiplied by the number of statistics (Bonferroni).

use statrs::distribution::{Beta, ContinuousCDF, Exp, Gamma};

use super::enumerate::{enumerate_labelled_shape_law, enumerate_shape_law, shape_formula_table};
use super::stats::{chi_square, chi_square_two_sample, correlation, ks_two_sample, ks_vs_cdf, moment_z, TestStat};
use super::{StatKind, TestReport, DEFAULT_LEVEL, EXACT_TOL};
use crate::chain::{beta_step_params, sample_trajectory, AlphaParam};
use crate::distributions::{
    beta_moment, ml_moment, sample_beta, sample_dirichlet, sample_gamma, sample_m1, sample_ml, DirichletParams,
    M1Sampler, MlParams,
};
use crate::error::{ensure, Error, Result};
use crate::linebreaking::{grow_aldous, grow_with, Algorithm, GrowthConfig, MarchalTree};
use crate::rng::RngStream;
use crate::rtree::{EdgeId, ShapeSignature};

/// Rejection sampling gives up on shapes rarer than this.
pub const SHAPE_PROBABILITY_FLOOR: f64 = 1e-3;

type Part = (String, TestStat);

fn bonferroni(name: &str, parts: &[Part], seed: u64) -> TestReport {
    let m = parts.len().max(1) as f64;
    let (label, worst) = parts.iter().min_by(|a, b| a.1.pvalue.total_cmp(&b.1.pvalue)).expect("at least one statistic");
    let n = parts.iter().map(|p| p.1.n).min().unwrap_or(0);
    TestReport::from_pvalue(name, StatKind::Ks, worst.stat, (worst.pvalue * m).min(1.0), n, seed).with_detail(format!(
        "{} statistics; worst {label}: D={:.5} p={:.4}",
        parts.len(),
        worst.stat,
        worst.pvalue
    ))
}

fn beta_cdf(a: f64, b: f64) -> Result<impl Fn(f64) -> f64> {
    let d = Beta::new(a, b).map_err(|e| Error::Parameter(e.to_string()))?;
    Ok(move |x: f64| d.cdf(x.clamp(0.0, 1.0)))
}

fn column(samples: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    samples.iter().map(|v| f(v)).collect()
}

/// One-sample KS of every coordinate and every pairwise sum against the
/// Beta marginals of `Dir(a)`.
fn vs_dirichlet(samples: &[Vec<f64>], a: &[f64]) -> Result<Vec<Part>> {
    let total: f64 = a.iter().sum();
    let mut parts = Vec::new();
    for i in 0..a.len() {
        let rest = total - a[i];
        if rest <= 0.0 {
            continue;
        }
        let xs = column(samples, |v| v[i]);
        parts.push((format!("coord {}", i + 1), ks_vs_cdf(&xs, beta_cdf(a[i], rest)?)));
    }
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let rest = total - a[i] - a[j];
            if rest <= 1e-12 * total {
                continue;
            }
            let xs = column(samples, |v| v[i] + v[j]);
            parts.push((format!("sum {}+{}", i + 1, j + 1), ks_vs_cdf(&xs, beta_cdf(a[i] + a[j], rest)?)));
        }
    }
    Ok(parts)
}

/// Two-sample KS of every coordinate and every pairwise sum.
fn two_sample_vectors(lhs: &[Vec<f64>], rhs: &[Vec<f64>]) -> Vec<Part> {
    let k = lhs[0].len();
    let mut parts = Vec::new();
    for i in 0..k {
        parts.push((format!("coord {}", i + 1), ks_two_sample(&column(lhs, |v| v[i]), &column(rhs, |v| v[i]))));
    }
    for i in 0..k {
        for j in i + 1..k {
            let f = |v: &[f64]| v[i] + v[j];
            parts.push((format!("sum {}+{}", i + 1, j + 1), ks_two_sample(&column(lhs, f), &column(rhs, f))));
        }
    }
    parts
}

fn dirichlet(a: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
    if a.len() == 1 {
        return Ok(vec![1.0]);
    }
    sample_dirichlet(&DirichletParams::new(a.to_vec())?, rng)
}

fn fmt_vec(a: &[f64]) -> String {
    let items: Vec<String> = a.iter().map(|x| format!("{x}")).collect();
    format!("({})", items.join(","))
}

// ---------------------------------------------------------------------------
// Shapes

/// Closed-form shape law against the Marchal enumeration.
pub fn check_shape_formula(alpha: f64, p: usize) -> Result<TestReport> {
    let a = AlphaParam::new(alpha)?;
    let enumerated = enumerate_shape_law(a, p)?;
    let formula = shape_formula_table(a, p)?;
    let err = enumerated.max_rel_diff(&formula).max((enumerated.total() - 1.0).abs());
    Ok(TestReport::from_error(&format!("shapes/formula/alpha={alpha}/p={p}"), err, EXACT_TOL, enumerated.len(), 0)
        .with_detail(format!("{} shapes", enumerated.len())))
}

/// Shape `T_p` of one run of `algorithm`.
fn sample_shape(cfg: &GrowthConfig, rng: &mut RngStream) -> Result<ShapeSignature> {
    if cfg.algorithm.is_discrete() {
        let mut t = MarchalTree::new(cfg.alpha);
        while t.leaf_count() < cfg.p_target {
            t.step(rng)?;
        }
        return Ok(t.shape());
    }
    Ok(grow_with(cfg, rng)?.tree.shape())
}

fn shape_samples(
    alpha: f64,
    p: usize,
    algorithm: Algorithm,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<ShapeSignature>> {
    let cfg = GrowthConfig::new(alpha, p, algorithm, seed)?;
    let mut rng = RngStream::new(seed, stream);
    (0..n).map(|_| sample_shape(&cfg, &mut rng)).collect()
}

/// Chi-square of the shape frequencies of `algorithm` against the exact law.
pub fn check_shape_frequencies(alpha: f64, p: usize, algorithm: Algorithm, n: usize, seed: u64) -> Result<TestReport> {
    let name = format!("shapes/{algorithm}/alpha={alpha}/p={p}");
    let table = enumerate_shape_law(AlphaParam::new(alpha)?, p)?;
    let shapes = shape_samples(alpha, p, algorithm, n, seed, 0)?;
    let (counts, outside) = table.tally(&shapes);
    if outside > 0 {
        return Ok(TestReport::from_pvalue(&name, StatKind::ChiSquare, f64::INFINITY, 0.0, n, seed)
            .with_detail(format!("{outside} samples outside the support")));
    }
    let t = chi_square(&counts, &table.probabilities());
    Ok(TestReport::from_pvalue(&name, StatKind::ChiSquare, t.stat, t.pvalue, n, seed)
        .with_detail(format!("{} shapes", table.len())))
}

/// Two-sample chi-square between the shape frequencies of two algorithms.
pub fn check_shape_agreement(
    alpha: f64,
    p: usize,
    a: Algorithm,
    b: Algorithm,
    n: usize,
    seed: u64,
) -> Result<TestReport> {
    let name = format!("shapes/{a}-vs-{b}/alpha={alpha}/p={p}");
    let xs = shape_samples(alpha, p, a, n, seed, 0)?;
    let ys = shape_samples(alpha, p, b, n, seed, 1)?;
    let mut keys: Vec<&ShapeSignature> = xs.iter().chain(&ys).collect();
    keys.sort();
    keys.dedup();
    let count = |v: &[ShapeSignature]| -> Vec<u64> {
        let mut c = vec![0u64; keys.len()];
        for s in v {
            c[keys.binary_search(&s).unwrap()] += 1;
        }
        c
    };
    let t = chi_square_two_sample(&count(&xs), &count(&ys));
    Ok(TestReport::from_pvalue(&name, StatKind::ChiSquare, t.stat, t.pvalue, n, seed))
}

/// Rémy's algorithm is uniform over leaf-labelled binary trees.
pub fn check_remy_uniformity(p: usize, n: usize, seed: u64) -> Result<TestReport> {
    let name = format!("shapes/remy-uniform/p={p}");
    let a = AlphaParam::new(2.0)?;
    let table = enumerate_labelled_shape_law(a, p)?;
    let mut rng = RngStream::new(seed, 0);
    let mut shapes = Vec::with_capacity(n);
    for _ in 0..n {
        let mut t = MarchalTree::new(a);
        while t.leaf_count() < p {
            t.step(&mut rng)?;
        }
        shapes.push(t.labelled_shape());
    }
    let (counts, outside) = table.tally(&shapes);
    ensure!(outside == 0, State, "Rémy produced a labelled shape outside the enumeration");
    let spread = table.probabilities().iter().fold(0.0f64, |m, &q| m.max((q * table.len() as f64 - 1.0).abs()));
    let t = chi_square(&counts, &vec![1.0 / table.len() as f64; table.len()]);
    Ok(TestReport::from_pvalue(&name, StatKind::ChiSquare, t.stat, t.pvalue, n, seed)
        .with_detail(format!("{} labelled shapes; enumerated law deviates from uniform by {spread:.1e}", table.len())))
}

// ---------------------------------------------------------------------------
// Lengths

/// Edge lengths of algorithm-I trees conditioned (by rejection) on shape
/// `shape`, against `M_p · B_|t| · Dir(1, …, 1)`. Compares the total length
/// and the root edge.
pub fn check_lengths_given_shape(
    alpha: f64,
    p: usize,
    shape: &ShapeSignature,
    n: usize,
    seed: u64,
) -> Result<TestReport> {
    let name = format!("lengths/given-shape/alpha={alpha}/p={p}/{shape}");
    let a = AlphaParam::new(alpha)?;
    let prob = enumerate_shape_law(a, p)?.get(shape);
    if prob < SHAPE_PROBABILITY_FLOOR {
        return Ok(TestReport::inconclusive(
            &name,
            StatKind::Ks,
            0,
            seed,
            format!("shape probability {prob:.2e} below the floor"),
        ));
    }
    let cfg = GrowthConfig::new(alpha, p, Algorithm::I, seed)?;
    let mut rng = RngStream::new(seed, 0);
    let budget = (n as f64 / prob * 4.0) as usize + 1000;
    let (mut total_a, mut edge_a) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut tries = 0;
    while total_a.len() < n {
        if tries == budget {
            return Ok(TestReport::inconclusive(
                &name,
                StatKind::Ks,
                total_a.len(),
                seed,
                "rejection budget exhausted",
            ));
        }
        tries += 1;
        let tree = grow_with(&cfg, &mut rng)?.tree;
        if &tree.shape() == shape {
            total_a.push(tree.total_length());
            edge_a.push(tree.edge_length(EdgeId(0)));
        }
    }
    let size = shape.size();
    let a_val = a.value();
    let b_shape = ((p as f64 * a_val - 1.0) / (a_val - 1.0) - size as f64).max(0.0);
    let ones = vec![1.0; size];
    let mut rng = RngStream::new(seed, 1);
    let (mut total_b, mut edge_b) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let m = sample_ml(a.ml_params(p), &mut rng)?;
        let b = sample_beta(size as f64, b_shape, &mut rng)?;
        let d = dirichlet(&ones, &mut rng)?;
        total_b.push(m * b);
        edge_b.push(m * b * d[0]);
    }
    let parts = vec![
        ("total length".to_string(), ks_two_sample(&total_a, &total_b)),
        ("root edge".to_string(), ks_two_sample(&edge_a, &edge_b)),
    ];
    let r = bonferroni(&name, &parts, seed);
    let detail = format!("{}; acceptance rate {:.3}", r.detail.clone().unwrap_or_default(), n as f64 / tries as f64);
    Ok(r.with_detail(detail))
}

/// Total length of algorithm-I trees against
/// `M_p (∏ β_j + Σ_i B_i (1-β_i) ∏_{j>i} β_j)` with independent factors.
pub fn check_total_length_mixture(alpha: f64, p: usize, n: usize, seed: u64) -> Result<TestReport> {
    let name = format!("mixture/total-length/alpha={alpha}/p={p}");
    let a = AlphaParam::new(alpha)?;
    let cfg = GrowthConfig::new(alpha, p, Algorithm::I, seed)?;
    let mut rng = RngStream::new(seed, 0);
    let grown: Vec<f64> =
        (0..n).map(|_| grow_with(&cfg, &mut rng).map(|o| o.tree.total_length())).collect::<Result<_>>()?;
    let mut rng = RngStream::new(seed, 1);
    let mut direct = Vec::with_capacity(n);
    for _ in 0..n {
        let m = sample_ml(a.ml_params(p), &mut rng)?;
        let mut acc = 1.0;
        // Horner form: acc_i = β_i acc_{i-1} + B_i (1 - β_i), starting from 1.
        for i in 1..p {
            let (ba, bb) = beta_step_params(a, i);
            let beta = sample_beta(ba, bb, &mut rng)?;
            let b = sample_beta(1.0, a.branch_fraction_b(), &mut rng)?;
            acc = beta * acc + b * (1.0 - beta);
        }
        direct.push(m * acc);
    }
    let t = ks_two_sample(&grown, &direct);
    Ok(TestReport::from_pvalue(&name, StatKind::Ks, t.stat, t.pvalue, n, seed))
}

/// Total length of normalized-I trees against (algorithm-I total length) /
/// (height of leaf 1).
pub fn check_normalized_scaling(alpha: f64, p: usize, n: usize, seed: u64) -> Result<TestReport> {
    let name = format!("lengths/normalized-scaling/alpha={alpha}/p={p}");
    let norm = GrowthConfig::new(alpha, p, Algorithm::NormalizedI, seed)?;
    let plain = GrowthConfig::new(alpha, p, Algorithm::I, seed)?;
    let mut rng = RngStream::new(seed, 0);
    let mut xs = Vec::with_capacity(n);
    let mut worst_height: f64 = 0.0;
    for _ in 0..n {
        let t = grow_with(&norm, &mut rng)?.tree;
        worst_height = worst_height.max((t.distance_to_root(t.leaf(1).unwrap()) - 1.0).abs());
        xs.push(t.total_length());
    }
    let mut rng = RngStream::new(seed, 1);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let t = grow_with(&plain, &mut rng)?.tree;
        ys.push(t.total_length() / t.distance_to_root(t.leaf(1).unwrap()));
    }
    let t = ks_two_sample(&xs, &ys);
    Ok(TestReport::from_pvalue(&name, StatKind::Ks, t.stat, t.pvalue, n, seed)
        .with_detail(format!("max |height(leaf 1) - 1| = {worst_height:.1e}")))
}

/// Running average of `L_p / M_p` over `p_lo ≤ p ≤ p_hi` along one run,
/// against the limit `α - 1` (relative tolerance `tol`).
pub fn check_edge_probability_limit(alpha: f64, p_lo: usize, p_hi: usize, tol: f64, seed: u64) -> Result<TestReport> {
    ensure!(1 <= p_lo && p_lo <= p_hi, Parameter, "need 1 <= p_lo <= p_hi");
    let name = format!("lengths/edge-probability-limit/alpha={alpha}/p={p_lo}..{p_hi}");
    let mut cfg = GrowthConfig::new(alpha, p_hi, Algorithm::I, seed)?;
    cfg.trace = true;
    let out = grow_with(&cfg, &mut cfg.rng())?;
    let rows = out.trace.expect("trace requested");
    let mut ratios: Vec<f64> = rows.rows.iter().filter(|r| r.p >= p_lo).map(|r| r.l_p / r.m_p).collect();
    ratios.push(out.tree.total_length() / out.m.expect("line-breaking run"));
    let avg = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let target = alpha - 1.0;
    let err = (avg / target - 1.0).abs();
    Ok(TestReport::from_error(&name, err, tol, ratios.len(), seed)
        .with_detail(format!("average {avg:.6}, limit {target}")))
}

/// Weight ledger `Σ W_v = M_p - L_p` and degree identity after every round of
/// algorithm II and of algorithm I with weight tracking.
pub fn check_exact_ledgers(alpha: f64, p: usize, seed: u64) -> Result<TestReport> {
    let name = format!("lengths/ledgers/alpha={alpha}/p={p}");
    let mut worst: f64 = 0.0;
    let mut rounds = 0;
    for alg in [Algorithm::II, Algorithm::I] {
        let mut cfg = GrowthConfig::new(alpha, p, alg, seed)?;
        cfg.weight_tracking = true;
        cfg.check_ledgers = true;
        match grow_with(&cfg, &mut cfg.rng()) {
            Ok(out) => {
                let s = out.ledger.expect("ledger requested");
                worst = worst.max(s.max_weight_error).max(s.max_degree_error);
                rounds += s.rounds;
            }
            Err(Error::State(msg)) => {
                return Ok(TestReport::from_error(&name, f64::INFINITY, EXACT_TOL, rounds, seed)
                    .with_detail(format!("{alg}: {msg}")));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(TestReport::from_error(&name, worst, EXACT_TOL, rounds, seed)
        .with_detail("algorithms II and I (weights tracked)"))
}

// ---------------------------------------------------------------------------
// Dirichlet and Mittag-Leffler identities

/// `G^β M ~ Gamma(θ/β)` for independent `G ~ Gamma(θ)`, `M ~ ML(β, θ)`.
pub fn check_gamma_ml(beta: f64, theta: f64, n: usize, seed: u64) -> Result<TestReport> {
    let name = format!("dirichlet/gamma-ml/beta={beta:.4}/theta={theta:.4}");
    let params = MlParams::new(beta, theta)?;
    let mut rng = RngStream::new(seed, 0);
    let mut xs = Vec::with_capacity(n);
    for _ in 0..n {
        let g = sample_gamma(theta, &mut rng)?;
        xs.push(g.powf(beta) * sample_ml(params, &mut rng)?);
    }
    let target = Gamma::new(theta / beta, 1.0).map_err(|e| Error::Parameter(e.to_string()))?;
    let t = ks_vs_cdf(&xs, |x| target.cdf(x));
    Ok(TestReport::from_pvalue(&name, StatKind::Ks, t.stat, t.pvalue, n, seed))
}

/// Size-biased pick from `Dir(a)`: the index law (chi-square) and the
/// conditional law `Dir(a + e_i)` (KS on marginals and pairwise sums).
pub fn check_size_bias(a: &[f64], n: usize, seed: u64) -> Result<Vec<TestReport>> {
    let tag = fmt_vec(a);
    let mut rng = RngStream::new(seed, 0);
    let mut by_index: Vec<Vec<Vec<f64>>> = vec![Vec::new(); a.len()];
    for _ in 0..n {
        let d = dirichlet(a, &mut rng)?;
        let u = rng.open01();
        let mut acc = 0.0;
        let mut pick = a.len() - 1;
        for (i, &di) in d.iter().enumerate() {
            acc += di;
            if u < acc {
                pick = i;
                break;
            }
        }
        by_index[pick].push(d);
    }
    let counts: Vec<u64> = by_index.iter().map(|v| v.len() as u64).collect();
    let total: f64 = a.iter().sum();
    let probs: Vec<f64> = a.iter().map(|x| x / total).collect();
    let t = chi_square(&counts, &probs);
    let index = TestReport::from_pvalue(
        &format!("dirichlet/size-bias/index/a={tag}"),
        StatKind::ChiSquare,
        t.stat,
        t.pvalue,
        n,
        seed,
    );
    let mut parts = Vec::new();
    for (i, samples) in by_index.iter().enumerate() {
        if samples.len() < super::stats::MIN_SAMPLES {
            continue;
        }
        let mut shifted = a.to_vec();
        shifted[i] += 1.0;
        for (label, s) in vs_dirichlet(samples, &shifted)? {
            parts.push((format!("I={} {label}", i + 1), s));
        }
    }
    let cond = bonferroni(&format!("dirichlet/size-bias/conditional/a={tag}"), &parts, seed);
    Ok(vec![index, cond])
}

/// `(D_1, …, D_p) = B_p (D̃_1, …, D̃_p)` with independent
/// `B_p ~ Beta(Σ_{i≤p} a_i, Σ_{i>p} a_i)` and `D̃ ~ Dir(a_1, …, a_p)`.
pub fn check_decomposition(a: &[f64], p: usize, n: usize, seed: u64) -> Result<TestReport> {
    ensure!(p >= 1 && p < a.len(), Parameter, "need 1 <= p < len(a)");
    let name = format!("dirichlet/decomposition/a={}/p={p}", fmt_vec(a));
    let (head, tail): (f64, f64) = (a[..p].iter().sum(), a[p..].iter().sum());
    let mut rng = RngStream::new(seed, 0);
    let lhs: Vec<Vec<f64>> = (0..n).map(|_| dirichlet(a, &mut rng).map(|d| d[..p].to_vec())).collect::<Result<_>>()?;
    let mut rng = RngStream::new(seed, 1);
    let mut rhs = Vec::with_capacity(n);
    for _ in 0..n {
        let b = sample_beta(head, tail, &mut rng)?;
        rhs.push(dirichlet(&a[..p], &mut rng)?.into_iter().map(|x| b * x).collect::<Vec<_>>());
    }
    Ok(bonferroni(&name, &two_sample_vectors(&lhs, &rhs), seed))
}

/// Merging two coordinates: `(D_1 + D_2, D_3, …) ~ Dir(a_1 + a_2, a_3, …)`.
pub fn check_aggregation(a: &[f64], n: usize, seed: u64) -> Result<TestReport> {
    ensure!(a.len() >= 3, Parameter, "aggregation needs at least 3 coordinates");
    let name = format!("dirichlet/aggregation/a={}", fmt_vec(a));
    let mut rng = RngStream::new(seed, 0);
    let samples: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            dirichlet(a, &mut rng).map(|d| {
                let mut v = vec![d[0] + d[1]];
                v.extend_from_slice(&d[2..]);
                v
            })
        })
        .collect::<Result<_>>()?;
    let mut merged = vec![a[0] + a[1]];
    merged.extend_from_slice(&a[2..]);
    Ok(bonferroni(&name, &vs_dirichlet(&samples, &merged)?, seed))
}

/// First recursion: inserting a branch into a Dirichlet vector whose last
/// `k - p` coordinates carry the weights `a`.
pub fn check_recursion(
    alpha: f64,
    p: usize,
    k: usize,
    a: &[f64],
    i_star: usize,
    n: usize,
    seed: u64,
) -> Result<TestReport> {
    ensure!(p < k && k < 2 * p, Parameter, "need p+1 <= k <= 2p-1");
    ensure!(a.len() == k - p, Parameter, "need k-p weights");
    ensure!((1..=a.len()).contains(&i_star), Parameter, "i* out of range");
    let al = AlphaParam::new(alpha)?.value();
    let want = ((p as f64 + 1.0) * al - 2.0) / (al - 1.0) - k as f64;
    let sum: f64 = a.iter().sum();
    ensure!((sum - want).abs() < 1e-9 * want.max(1.0), Parameter, "weights sum to {sum}, expected {want}");
    let name = format!("dirichlet/recursion/alpha={alpha}/p={p}/k={k}/a={}/i={i_star}", fmt_vec(a));
    let c = (2.0 - al) / (al - 1.0);
    let (bpa, bpb) = (((p as f64 + 1.0) * al - 2.0) / (al - 1.0), 1.0 / (al - 1.0));
    let mut params = vec![1.0; k];
    params.extend_from_slice(a);
    let mut rng = RngStream::new(seed, 0);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let b = sample_beta(1.0, c, &mut rng)?;
        let bp = sample_beta(bpa, bpb, &mut rng)?;
        let d = dirichlet(&params, &mut rng)?;
        let mut v: Vec<f64> = d[..k].iter().map(|x| bp * x).collect();
        v.push((1.0 - bp) * b);
        for j in 0..a.len() {
            let extra = if j + 1 == i_star { (1.0 - bp) * (1.0 - b) } else { 0.0 };
            v.push(bp * d[k + j] + extra);
        }
        samples.push(v);
    }
    let mut target = vec![1.0; k + 1];
    target.extend_from_slice(a);
    target[k + i_star] += c;
    Ok(bonferroni(&name, &vs_dirichlet(&samples, &target)?, seed)
        .with_detail(format!("target Dir{}", fmt_vec(&target))))
}

/// Second recursion: splitting the first coordinate of `Dir(2, 1, …, 1, a)`
/// uniformly and appending the new branch and its leftover mass.
pub fn check_recursion2(alpha: f64, p: usize, k: usize, a: &[f64], n: usize, seed: u64) -> Result<TestReport> {
    ensure!(p <= k && k < 2 * p, Parameter, "need p <= k <= 2p-1");
    ensure!(a.len() == k - p, Parameter, "need k-p weights");
    let al = AlphaParam::new(alpha)?.value();
    let want = (p as f64 * al - 1.0) / (al - 1.0) - k as f64;
    let sum: f64 = a.iter().sum();
    ensure!((sum - want).abs() < 1e-9 * want.abs().max(1.0), Parameter, "weights sum to {sum}, expected {want}");
    let name = format!("dirichlet/recursion2/alpha={alpha}/p={p}/k={k}/a={}", fmt_vec(a));
    let c = (2.0 - al) / (al - 1.0);
    let (bpa, bpb) = (((p as f64 + 1.0) * al - 2.0) / (al - 1.0), 1.0 / (al - 1.0));
    let mut params = vec![2.0];
    params.extend(std::iter::repeat_n(1.0, k - 1));
    params.extend_from_slice(a);
    let mut rng = RngStream::new(seed, 0);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let b = sample_beta(1.0, c, &mut rng)?;
        let bp = sample_beta(bpa, bpb, &mut rng)?;
        let u = rng.open01();
        let d = dirichlet(&params, &mut rng)?;
        let mut v = vec![bp * d[0] * u, bp * d[0] * (1.0 - u)];
        v.extend(d[1..k].iter().map(|x| bp * x));
        v.push((1.0 - bp) * b);
        v.extend(d[k..].iter().map(|x| bp * x));
        v.push((1.0 - bp) * (1.0 - b));
        samples.push(v);
    }
    let mut target = vec![1.0; k + 2];
    target.extend_from_slice(a);
    target.push(c);
    Ok(bonferroni(&name, &vs_dirichlet(&samples, &target)?, seed)
        .with_detail(format!("target Dir{}", fmt_vec(&target))))
}

/// `M · Z` with `M ~ ML(β, θ)`, `Z ~ Dir(θ_i/β)` against
/// `(X_i^β M^{(i)})` with `X ~ Dir(θ_i)`, `M^{(i)} ~ ML(β, θ_i)`.
pub fn check_lengths_masses(beta: f64, thetas: &[f64], n: usize, seed: u64) -> Result<TestReport> {
    ensure!(thetas.len() >= 2, Parameter, "need at least two parts");
    let theta: f64 = thetas.iter().sum();
    let name = format!("mixture/lengths-masses/beta={beta:.4}/theta={}", fmt_vec(thetas));
    let scaled: Vec<f64> = thetas.iter().map(|t| t / beta).collect();
    let whole = MlParams::new(beta, theta)?;
    let parts: Vec<MlParams> = thetas.iter().map(|&t| MlParams::new(beta, t)).collect::<Result<_>>()?;
    let mut rng = RngStream::new(seed, 0);
    let mut lhs = Vec::with_capacity(n);
    for _ in 0..n {
        let m = sample_ml(whole, &mut rng)?;
        lhs.push(dirichlet(&scaled, &mut rng)?.into_iter().map(|z| m * z).collect::<Vec<_>>());
    }
    let mut rng = RngStream::new(seed, 1);
    let mut rhs = Vec::with_capacity(n);
    for _ in 0..n {
        let x = dirichlet(thetas, &mut rng)?;
        let v = x
            .iter()
            .zip(&parts)
            .map(|(xi, &pi)| sample_ml(pi, &mut rng).map(|m| xi.powf(beta) * m))
            .collect::<Result<Vec<_>>>()?;
        rhs.push(v);
    }
    Ok(bonferroni(&name, &two_sample_vectors(&lhs, &rhs), seed))
}

/// First-moment form of the same identity: the sample mean of `M Z_1`
/// against `E[X_1^β] E[M^{(1)}]`.
pub fn check_lengths_masses_moment(beta: f64, thetas: &[f64], n: usize, seed: u64) -> Result<TestReport> {
    let theta: f64 = thetas.iter().sum();
    let name = format!("mixture/lengths-masses-moment/beta={beta:.4}/theta={}", fmt_vec(thetas));
    let scaled: Vec<f64> = thetas.iter().map(|t| t / beta).collect();
    let whole = MlParams::new(beta, theta)?;
    let mut rng = RngStream::new(seed, 0);
    let mut xs = Vec::with_capacity(n);
    for _ in 0..n {
        let m = sample_ml(whole, &mut rng)?;
        xs.push(m * dirichlet(&scaled, &mut rng)?[0]);
    }
    let target = beta_moment(thetas[0], theta - thetas[0], beta) * ml_moment(MlParams::new(beta, thetas[0])?, 1)?;
    let z = moment_z(&xs, target, None);
    Ok(TestReport::from_z(&name, z, n, seed).with_detail(format!("target mean {target:.6}")))
}

/// All fixed parameter sets of the Dirichlet and Gamma / Mittag-Leffler
/// identities.
pub fn check_dirichlet_lemmas(n: usize, seed: u64) -> Result<Vec<TestReport>> {
    let s = |label: &str| crate::rng::derive_seed(seed, label, 0);
    let mut out =
        vec![check_gamma_ml(0.5, 1.0, n, s("gamma-ml-1"))?, check_gamma_ml(1.0 / 3.0, 4.0 / 3.0, n, s("gamma-ml-2"))?];
    out.extend(check_size_bias(&[1.0, 1.0], n, s("size-bias-1"))?);
    out.extend(check_size_bias(&[0.5, 1.5, 3.0], n, s("size-bias-2"))?);
    out.push(check_decomposition(&[1.0, 1.0, 1.0], 2, n, s("decomposition-1"))?);
    out.push(check_decomposition(&[0.5, 1.5, 2.0, 1.0], 2, n, s("decomposition-2"))?);
    out.push(check_aggregation(&[1.0, 2.0, 3.0, 0.5], n, s("aggregation"))?);
    out.push(check_recursion(1.5, 2, 3, &[2.0], 1, n, s("recursion-1"))?);
    out.push(check_recursion(1.2, 3, 5, &[4.0, 5.0], 2, n, s("recursion-2"))?);
    out.push(check_recursion2(1.5, 1, 1, &[], n, s("recursion2-1"))?);
    out.push(check_recursion2(1.5, 2, 3, &[1.0], n, s("recursion2-2"))?);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Brownian case

/// Increments of `M_p^2 / 4` per step, one column per step.
fn brownian_increments(trajectories: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p_max = trajectories.iter().map(Vec::len).min().unwrap_or(0);
    let mut inc = vec![Vec::with_capacity(trajectories.len()); p_max];
    for m in trajectories {
        let mut prev = 0.0;
        for (k, x) in m.iter().take(p_max).enumerate() {
            let q = x * x / 4.0;
            inc[k].push(q - prev);
            prev = q;
        }
    }
    inc
}

/// `n` exact chain trajectories at α = 2 drawn from stream 0 of `seed`, in
/// the same order as `stable-tree chain --alpha 2 --replicates n`.
pub fn brownian_trajectories(p_max: usize, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let a = AlphaParam::new(2.0)?;
    let mut rng = RngStream::new(seed, 0);
    (0..n).map(|_| sample_trajectory(a, M1Sampler::Exact, p_max, &mut rng)).collect()
}

/// KS of each increment of `M_p^2 / 4` against Exp(1), on given trajectories.
pub fn brownian_reduction_from(trajectories: &[Vec<f64>], seed: u64) -> Result<TestReport> {
    let inc = brownian_increments(trajectories);
    ensure!(!inc.is_empty(), Parameter, "no trajectories");
    let name = format!("brownian/increments/p={}", inc.len());
    let exp = Exp::new(1.0).map_err(|e| Error::Parameter(e.to_string()))?;
    let parts: Vec<Part> =
        inc.iter().enumerate().map(|(k, xs)| (format!("increment {}", k + 1), ks_vs_cdf(xs, |x| exp.cdf(x)))).collect();
    Ok(bonferroni(&name, &parts, seed))
}

/// Increments of `M_p^2 / 4` at α = 2 against Exp(1).
pub fn check_brownian_reduction(p_max: usize, n: usize, seed: u64) -> Result<TestReport> {
    brownian_reduction_from(&brownian_trajectories(p_max, n, seed)?, seed)
}

/// Correlation of consecutive increments of `M_p^2 / 4`, scaled by `√n`.
pub fn check_brownian_correlation(p_max: usize, n: usize, seed: u64) -> Result<TestReport> {
    ensure!(p_max >= 2, Parameter, "need at least two increments");
    let name = format!("brownian/increment-correlation/p={p_max}");
    let inc = brownian_increments(&brownian_trajectories(p_max, n, seed)?);
    let (k, z) = (1..p_max)
        .map(|k| (k, correlation(&inc[k - 1], &inc[k]) * (n as f64).sqrt()))
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .unwrap();
    Ok(TestReport::from_z(&name, z, n, seed).with_detail(format!("largest at increments {k},{}", k + 1)))
}

/// `R_1^2` in Aldous' construction (intensity `t dt`) is exponential with mean 2.
pub fn check_aldous_first_point(n: usize, seed: u64) -> Result<TestReport> {
    let name = "brownian/aldous-first-point".to_string();
    let mut rng = RngStream::new(seed, 0);
    let xs: Vec<f64> =
        (0..n).map(|_| grow_aldous(1, 1.0, &mut rng).map(|t| t.total_length().powi(2))).collect::<Result<_>>()?;
    let t = ks_vs_cdf(&xs, |x| 1.0 - (-x / 2.0).exp());
    Ok(TestReport::from_pvalue(&name, StatKind::Ks, t.stat, t.pvalue, n, seed))
}

/// Algorithm I at α = 2 against Aldous' construction with intensity `t dt/2`:
/// total length and the distance between leaves 1 and 2.
pub fn check_aldous_vs_chain(p: usize, n: usize, seed: u64) -> Result<TestReport> {
    ensure!(p >= 2, Parameter, "need p >= 2");
    let name = format!("brownian/aldous-vs-I/p={p}");
    let cfg = GrowthConfig::new(2.0, p, Algorithm::I, seed)?;
    let mut rng = RngStream::new(seed, 0);
    let (mut ta, mut da) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let t = grow_with(&cfg, &mut rng)?.tree;
        ta.push(t.total_length());
        da.push(t.distance_matrix().get(1, 2));
    }
    let mut rng = RngStream::new(seed, 1);
    let (mut tb, mut db) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let t = grow_aldous(p, 0.5, &mut rng)?;
        tb.push(t.total_length());
        db.push(t.distance_matrix().get(1, 2));
    }
    let parts = vec![
        ("total length".to_string(), ks_two_sample(&ta, &tb)),
        ("d(leaf 1, leaf 2)".to_string(), ks_two_sample(&da, &db)),
    ];
    Ok(bonferroni(&name, &parts, seed))
}

// ---------------------------------------------------------------------------
// Moments and calibration

/// Empirical `E[M_p^k]` along chain trajectories against the exact moments,
/// for `p ≤ p_max`, `k ≤ k_max`. Reports the largest `|z|`.
pub fn check_chain_moments(alpha: f64, p_max: usize, k_max: u32, n: usize, seed: u64) -> Result<TestReport> {
    let name = format!("moments/chain/alpha={alpha}/p<={p_max}/k<={k_max}");
    let a = AlphaParam::new(alpha)?;
    let mut rng = RngStream::new(seed, 0);
    let mut cols = vec![Vec::with_capacity(n); p_max];
    for _ in 0..n {
        for (p, m) in sample_trajectory(a, M1Sampler::Exact, p_max, &mut rng)?.into_iter().enumerate() {
            cols[p].push(m);
        }
    }
    let mut worst = (0.0f64, 1usize, 1u32);
    for (i, col) in cols.iter().enumerate() {
        let params = a.ml_params(i + 1);
        for k in 1..=k_max {
            let xs: Vec<f64> = col.iter().map(|m| m.powi(k as i32)).collect();
            let z = moment_z(&xs, ml_moment(params, k)?, Some(ml_moment(params, 2 * k)?));
            if z.abs() > worst.0.abs() {
                worst = (z, i + 1, k);
            }
        }
    }
    let m1 = ml_moment(a.ml_params(1), 1)?;
    Ok(TestReport::from_z(&name, worst.0, n, seed)
        .with_detail(format!("largest |z| at p={}, k={}; E[M_1]={m1:.6}", worst.1, worst.2)))
}

/// Mean of the truncated-product `M_1` against the exact `E[M_1]`.
pub fn check_truncated_m1(alpha: f64, n_trunc: usize, n: usize, seed: u64) -> Result<TestReport> {
    let name = format!("moments/truncated-m1/alpha={alpha}/n_trunc={n_trunc}");
    let a = AlphaParam::new(alpha)?;
    let mut rng = RngStream::new(seed, 0);
    let xs: Vec<f64> = (0..n).map(|_| sample_m1(a, n_trunc, &mut rng).map(|d| d.value)).collect::<Result<_>>()?;
    let params = a.ml_params(1);
    let z = moment_z(&xs, ml_moment(params, 1)?, None);
    Ok(TestReport::from_z(&name, z, n, seed))
}

/// Rejection rate of a KS test of uniform samples against the uniform CDF
/// at the default level: `|rate - level| ≤ level / 2` passes.
pub fn check_ks_calibration(reps: usize, sample_size: usize, seed: u64) -> Result<TestReport> {
    let name = format!("moments/ks-calibration/reps={reps}/size={sample_size}");
    let mut rng = RngStream::new(seed, 0);
    let mut rejections = 0usize;
    for _ in 0..reps {
        let xs: Vec<f64> = (0..sample_size).map(|_| rng.open01()).collect();
        if ks_vs_cdf(&xs, |x| x.clamp(0.0, 1.0)).pvalue < DEFAULT_LEVEL {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / reps as f64;
    Ok(TestReport::from_error(&name, (rate - DEFAULT_LEVEL).abs(), DEFAULT_LEVEL / 2.0, reps, seed)
        .with_detail(format!("{rejections} rejections, rate {rate:.4}")))
}
