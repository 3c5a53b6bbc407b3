//! Kolmogorov–Smirnov, chi-square and moment z-tests.
//!
//! KS p-values use the asymptotic Kolmogorov distribution with Stephens'
//! small-sample correction `λ = (√n + 0.12 + 0.11/√n) D`.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Minimum number of observations for any test to be conclusive.
pub const MIN_SAMPLES: usize = 20;

/// Survival function of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series, fast for small λ.
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=20).map(|k| (-(((2 * k - 1) as f64).powi(2)) * c).exp()).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn stephens_pvalue(d: f64, n_eff: f64) -> f64 {
    let sn = n_eff.sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestStat {
    pub stat: f64,
    pub pvalue: f64,
    pub n: usize,
}

/// One-sample KS statistic and p-value of `xs` against a continuous CDF.
pub fn ks_vs_cdf(xs: &[f64], cdf: impl Fn(f64) -> f64) -> TestStat {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    TestStat { stat: d, pvalue: stephens_pvalue(d, n), n: v.len() }
}

/// Two-sample KS statistic and p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestStat {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let t = x[i].min(y[j]);
        while i < n && x[i] <= t {
            i += 1;
        }
        while j < m && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n * m) as f64 / (n + m) as f64;
    TestStat { stat: d, pvalue: stephens_pvalue(d, n_eff), n: n.min(m) }
}

/// Merges categories until every expected count is at least 5. Returns
/// pooled `(observed, expected)` pairs.
fn pool_bins(observed: &[f64], expected: &[f64]) -> Vec<(f64, f64)> {
    let mut bins: Vec<(f64, f64)> = observed.iter().copied().zip(expected.iter().copied()).collect();
    bins.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut pool = (0.0, 0.0);
    for (o, e) in bins {
        if pool.1 < 5.0 {
            pool = (pool.0 + o, pool.1 + e);
        } else {
            out.push(pool);
            pool = (o, e);
        }
    }
    if pool.1 >= 5.0 || out.is_empty() {
        out.push(pool);
    } else {
        let last = out.last_mut().unwrap();
        last.0 += pool.0;
        last.1 += pool.1;
    }
    out
}

/// Pearson goodness of fit of category counts against exact probabilities.
/// An observation in a zero-probability category gives p-value 0.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> TestStat {
    assert_eq!(observed.len(), probs.len());
    let n: u64 = observed.iter().sum();
    let total_p: f64 = probs.iter().sum();
    if observed.iter().zip(probs).any(|(&o, &p)| p <= 0.0 && o > 0) {
        return TestStat { stat: f64::INFINITY, pvalue: 0.0, n: n as usize };
    }
    let obs: Vec<f64> = observed.iter().map(|&o| o as f64).collect();
    let exp: Vec<f64> = probs.iter().map(|&p| p / total_p * n as f64).collect();
    let bins = pool_bins(&obs, &exp);
    let stat: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let df = bins.len().saturating_sub(1);
    let pvalue = if df == 0 { 1.0 } else { ChiSquared::new(df as f64).unwrap().sf(stat) };
    TestStat { stat, pvalue, n: n as usize }
}

/// Pearson test of homogeneity between two count vectors over the same categories.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> TestStat {
    assert_eq!(a.len(), b.len());
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let n = na + nb;
    // Pool on the smaller of the two expected counts per category.
    let mut cats: Vec<(f64, f64, f64)> =
        a.iter().zip(b).map(|(&x, &y)| (x as f64, y as f64, (x + y) as f64)).filter(|c| c.2 > 0.0).collect();
    cats.sort_by(|p, q| p.2.total_cmp(&q.2));
    let min_share = na.min(nb) / n;
    let mut pooled: Vec<(f64, f64, f64)> = Vec::new();
    let mut cur = (0.0, 0.0, 0.0);
    for c in cats {
        if cur.2 * min_share < 5.0 {
            cur = (cur.0 + c.0, cur.1 + c.1, cur.2 + c.2);
        } else {
            pooled.push(cur);
            cur = c;
        }
    }
    if cur.2 * min_share >= 5.0 || pooled.is_empty() {
        pooled.push(cur);
    } else {
        let last = pooled.last_mut().unwrap();
        *last = (last.0 + cur.0, last.1 + cur.1, last.2 + cur.2);
    }
    let mut stat = 0.0;
    for &(x, y, t) in &pooled {
        let (ea, eb) = (t * na / n, t * nb / n);
        stat += (x - ea).powi(2) / ea + (y - eb).powi(2) / eb;
    }
    let df = pooled.len().saturating_sub(1);
    let pvalue = if df == 0 { 1.0 } else { ChiSquared::new(df as f64).unwrap().sf(stat) };
    TestStat { stat, pvalue, n: (na.min(nb)) as usize }
}

/// z-score of the sample mean of `xs` against an exact mean. The standard
/// error uses the exact second moment when given, the sample variance otherwise.
pub fn moment_z(xs: &[f64], mean: f64, second: Option<f64>) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = match second {
        Some(s) => s - mean * mean,
        None => xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0),
    };
    (m - mean) / (var / n).sqrt()
}

/// Two-sided normal tail probability of a z-score.
pub fn normal_two_sided(z: f64) -> f64 {
    statrs::function::erf::erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Pearson correlation coefficient.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}
