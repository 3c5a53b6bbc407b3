//! Samplers and moment evaluators for Gamma, Beta, Dirichlet and generalized
//! Mittag-Leffler laws.
//!
//! Conventions: `Gamma(a)` always has unit rate, `Beta(a, 0)` is the point
//! mass at 1, and `ML(β, θ)` is the polynomially tilted law of `σ_β^{-β}`
//! where `σ_β` is the positive stable variable with Laplace transform
//! `exp(-λ^β)`.

use std::f64::consts::PI;

use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::chain::AlphaParam;
use crate::error::{ensure, Error, Result};
use crate::rng::RngStream;

/// Default number of Beta factors in the truncated-product `M_1` sampler.
pub const DEFAULT_N_TRUNC: usize = 100_000;

/// Below this truncation the `M_1` draw is flagged as biased.
pub const MIN_N_TRUNC: usize = 10_000;

/// Parameters of `ML(β, θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlParams {
    beta: f64,
    theta: f64,
}

impl MlParams {
    pub fn new(beta: f64, theta: f64) -> Result<Self> {
        ensure!(beta > 0.0 && beta < 1.0, Parameter, "ML requires 0 < beta < 1, got {beta}");
        ensure!(
            theta.is_finite() && theta > -beta,
            Parameter,
            "ML requires theta > -beta, got theta={theta}, beta={beta}"
        );
        Ok(Self { beta, theta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    a: Vec<f64>,
}

impl DirichletParams {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        ensure!(a.len() >= 2, Parameter, "Dirichlet needs at least 2 components, got {}", a.len());
        for (i, &ai) in a.iter().enumerate() {
            ensure!(ai.is_finite() && ai > 0.0, Parameter, "Dirichlet parameter a[{i}] = {ai} must be > 0");
        }
        Ok(Self { a })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.a
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.a.iter().sum()
    }

    /// Mean of component `i`, `a_i / Σa`.
    pub fn mean(&self, i: usize) -> f64 {
        self.a[i] / self.total()
    }
}

/// Draw from `Gamma(shape, 1)`; never returns 0.
pub fn sample_gamma(shape: f64, rng: &mut RngStream) -> Result<f64> {
    ensure!(shape.is_finite() && shape > 0.0, Parameter, "gamma shape must be > 0, got {shape}");
    let dist = rand_distr::Gamma::new(shape, 1.0).map_err(|e| Error::Parameter(e.to_string()))?;
    loop {
        let x: f64 = dist.sample(rng);
        if x > 0.0 {
            return Ok(x);
        }
    }
}

/// Draw from `Beta(a, b)`, in `(0, 1]`.
///
/// `b = 0` returns exactly 1 without consuming randomness. Draws that
/// underflow to 0 are resampled, never clamped.
pub fn sample_beta(a: f64, b: f64, rng: &mut RngStream) -> Result<f64> {
    ensure!(a.is_finite() && a > 0.0, Parameter, "beta parameter a must be > 0, got {a}");
    ensure!(b.is_finite() && b >= 0.0, Parameter, "beta parameter b must be >= 0, got {b}");
    if b == 0.0 {
        return Ok(1.0);
    }
    let dist = rand_distr::Beta::new(a, b).map_err(|e| Error::Parameter(e.to_string()))?;
    loop {
        let x: f64 = dist.sample(rng);
        if x > 0.0 && x <= 1.0 {
            return Ok(x);
        }
    }
}

/// Draw from `Dir(a)` by normalizing independent Gamma variables.
pub fn sample_dirichlet(params: &DirichletParams, rng: &mut RngStream) -> Result<Vec<f64>> {
    loop {
        let mut g = params.a.iter().map(|&ai| sample_gamma(ai, rng)).collect::<Result<Vec<_>>>()?;
        let s: f64 = g.iter().sum();
        if s > 0.0 && s.is_finite() {
            g.iter_mut().for_each(|x| *x /= s);
            return Ok(g);
        }
    }
}

/// Natural log of the `k`-th moment of `ML(β, θ)`:
/// `Γ(θ+1) Γ(θ/β+k+1) / (Γ(θ/β+1) Γ(θ+kβ+1))`.
pub fn ln_ml_moment(params: MlParams, k: u32) -> f64 {
    let (b, t) = (params.beta, params.theta);
    let k = k as f64;
    ln_gamma(t + 1.0) + ln_gamma(t / b + k + 1.0) - ln_gamma(t / b + 1.0) - ln_gamma(t + k * b + 1.0)
}

/// Exact `k`-th moment of `ML(β, θ)`, evaluated in log space.
pub fn ml_moment(params: MlParams, k: u32) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    let lm = ln_ml_moment(params, k);
    ensure!(lm.is_finite() && lm < f64::MAX.ln(), Range, "ML moment k={k} overflows for {params:?}");
    Ok(lm.exp())
}

/// `k`-th moment of `Beta(a, b)`, `Γ(a+b) Γ(a+k) / (Γ(a) Γ(a+b+k))`.
pub fn beta_moment(a: f64, b: f64, k: f64) -> f64 {
    if b == 0.0 {
        return 1.0;
    }
    (ln_gamma(a + b) + ln_gamma(a + k) - ln_gamma(a) - ln_gamma(a + b + k)).exp()
}

/// Exact sampler for `ML(1/2, p - 1/2) = 2 √Gamma(p)`.
pub fn sample_ml_half(p: u32, rng: &mut RngStream) -> Result<f64> {
    ensure!(p >= 1, Parameter, "sample_ml_half needs p >= 1");
    Ok(2.0 * sample_gamma(p as f64, rng)?.sqrt())
}

/// Exact sampler for `ML(β, θ)`.
///
/// `β = 1/2` uses `2 √Gamma(θ + 1/2)`. Otherwise the positive stable variable
/// is written through Kanter's representation `σ = (A(U)/E)^{(1-β)/β}`; the
/// polynomial tilt `σ^{-θ}` factorizes over `(U, E)`, so `E ~ Gamma(1 + c)`
/// and `U` has density proportional to `A(U)^{-c}` on `(0, π)`, with
/// `c = θ(1-β)/β`. `A` is increasing, so `U` is drawn by rejection from the
/// uniform law. For `θ < 0` the identity
/// `ML(β, θ) = ML(β, θ+1) · Beta(θ/β + 1, 1/β - 1)` is applied first.
pub fn sample_ml(params: MlParams, rng: &mut RngStream) -> Result<f64> {
    let (beta, theta) = (params.beta, params.theta);
    if beta == 0.5 {
        return Ok(2.0 * sample_gamma(theta + 0.5, rng)?.sqrt());
    }
    if theta < 0.0 {
        let up = sample_ml(MlParams::new(beta, theta + 1.0)?, rng)?;
        let shrink = sample_beta(theta / beta + 1.0, 1.0 / beta - 1.0, rng)?;
        return Ok(up * shrink);
    }
    let c = theta * (1.0 - beta) / beta;
    let e = sample_gamma(1.0 + c, rng)?;
    let ln_a0 = zolotarev_ln_a_at_zero(beta);
    let ln_a = loop {
        let u = PI * rng.open01();
        let ln_a = zolotarev_ln_a(beta, u);
        if !ln_a.is_finite() {
            continue;
        }
        if c == 0.0 || rng.open01().ln() <= c * (ln_a0 - ln_a) {
            break ln_a;
        }
    };
    let m = ((1.0 - beta) * (e.ln() - ln_a)).exp();
    if m > 0.0 && m.is_finite() {
        Ok(m)
    } else {
        sample_ml(params, rng)
    }
}

/// `ln A(u)` with `A(u) = (sin(βu)^β sin((1-β)u)^{1-β} / sin u)^{1/(1-β)}`.
fn zolotarev_ln_a(beta: f64, u: f64) -> f64 {
    let num = beta * (beta * u).sin().ln() + (1.0 - beta) * ((1.0 - beta) * u).sin().ln();
    (num - u.sin().ln()) / (1.0 - beta)
}

/// `ln A(0+) = (β/(1-β)) ln β + ln(1-β)`, the minimum of `ln A` on `(0, π)`.
fn zolotarev_ln_a_at_zero(beta: f64) -> f64 {
    beta / (1.0 - beta) * beta.ln() + (1.0 - beta).ln()
}

/// How `M_1 ~ ML(1-1/α, 1-1/α)` is drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum M1Sampler {
    /// Tilted-stable rejection (or `2√Gamma(1)` at α = 2); no truncation bias.
    #[default]
    Exact,
    /// Normalized product of `n_trunc - 1` Beta factors.
    Truncated { n_trunc: usize },
}

/// Result of the truncated-product sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M1Draw {
    pub value: f64,
    /// Set when `n_trunc` is below [`MIN_N_TRUNC`].
    pub truncation_warning: bool,
}

/// Deterministic prefactor `(α/(α-1)) Γ(n+1-1/α) / Γ(n+1-2/α)` multiplying
/// `β_1 ⋯ β_{n-1}` in the truncated `M_1` approximation.
///
/// This is the martingale normalization times `E[M_1]`, so the truncated
/// draw has mean exactly `E[M_1]` at every `n`; asymptotically it behaves as
/// `(α/(α-1)) n^{1/α}`.
pub fn m1_prefactor(alpha: AlphaParam, n: usize) -> f64 {
    let a = alpha.value();
    let n = n as f64;
    a / (a - 1.0) * (ln_gamma(n + 1.0 - 1.0 / a) - ln_gamma(n + 1.0 - 2.0 / a)).exp()
}

/// The mean-one martingale `X_n = c_n β_1 ⋯ β_{n-1}`.
pub fn m1_martingale(alpha: AlphaParam, n: usize, rng: &mut RngStream) -> Result<f64> {
    ensure!(n >= 1, Parameter, "martingale index must be >= 1");
    let a = alpha.value();
    let nf = n as f64;
    let ln_c =
        ln_gamma(nf + 1.0 - 1.0 / a) + ln_gamma(2.0 - 2.0 / a) - ln_gamma(2.0 - 1.0 / a) - ln_gamma(nf + 1.0 - 2.0 / a);
    Ok((ln_c + ln_beta_product(alpha, n, rng)?).exp())
}

fn ln_beta_product(alpha: AlphaParam, n: usize, rng: &mut RngStream) -> Result<f64> {
    let mut acc = 0.0;
    for i in 1..n {
        let (a, b) = crate::chain::beta_step_params(alpha, i);
        acc += sample_beta(a, b, rng)?.ln();
    }
    Ok(acc)
}

/// Truncated-product approximation of `M_1`.
///
/// For α = 2 this is the exact `2√Gamma(1)` draw and `n_trunc` is ignored.
pub fn sample_m1(alpha: AlphaParam, n_trunc: usize, rng: &mut RngStream) -> Result<M1Draw> {
    ensure!(n_trunc >= 1, Parameter, "n_trunc must be >= 1");
    if alpha.is_brownian() {
        return Ok(M1Draw { value: sample_ml_half(1, rng)?, truncation_warning: false });
    }
    let ln_value = m1_prefactor(alpha, n_trunc).ln() + ln_beta_product(alpha, n_trunc, rng)?;
    Ok(M1Draw { value: ln_value.exp(), truncation_warning: n_trunc < MIN_N_TRUNC })
}

/// Draws `M_1` with the requested method.
pub fn sample_m1_with(alpha: AlphaParam, method: M1Sampler, rng: &mut RngStream) -> Result<f64> {
    match method {
        M1Sampler::Exact => sample_ml(alpha.ml_params(1), rng),
        M1Sampler::Truncated { n_trunc } => Ok(sample_m1(alpha, n_trunc, rng)?.value),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT_PI: f64 = 1.772_453_850_905_516;
    // 2Γ(4/3)/Γ(5/3), evaluated independently at 30 digits.
    const ML_THIRD_MEAN: f64 = 1.978_364_259_646_79;
    const ML_THIRD_SECOND: f64 = 5.357_877_069_415_495;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    fn within_se(xs: &[f64], target: f64, k: f64) -> bool {
        let (m, v) = mean_var(xs);
        (m - target).abs() <= k * (v / xs.len() as f64).sqrt()
    }

    #[test]
    fn gamma_rejects_bad_shape() {
        let mut r = RngStream::new(0, 0);
        assert!(matches!(sample_gamma(0.0, &mut r), Err(Error::Parameter(_))));
        assert!(sample_gamma(-1.0, &mut r).is_err());
        assert!(sample_gamma(f64::NAN, &mut r).is_err());
    }

    #[test]
    fn gamma_exp_mean() {
        let mut r = RngStream::new(1, 0);
        let xs: Vec<f64> = (0..1_000_000).map(|_| sample_gamma(1.0, &mut r).unwrap()).collect();
        let (m, _) = mean_var(&xs);
        assert!((m - 1.0).abs() < 3e-3, "mean {m}");
    }

    #[test]
    fn gamma_integer_shape_moments() {
        let mut r = RngStream::new(2, 0);
        let k = 4.0;
        let xs: Vec<f64> = (0..200_000).map(|_| sample_gamma(k, &mut r).unwrap()).collect();
        assert!(within_se(&xs, k, 5.0));
        // variance of the sample variance for Gamma(k): (μ4 - σ^4)/n with μ4 = 3k² + 6k
        let (_, v) = mean_var(&xs);
        let se_v = ((3.0 * k * k + 6.0 * k - k * k) / xs.len() as f64).sqrt();
        assert!((v - k).abs() < 5.0 * se_v, "var {v}");
    }

    #[test]
    fn gamma_half_second_moment() {
        let mut r = RngStream::new(3, 0);
        let sq: Vec<f64> = (0..400_000).map(|_| sample_gamma(0.5, &mut r).unwrap().powi(2)).collect();
        assert!(within_se(&sq, 0.75, 5.0));
    }

    #[test]
    fn beta_conventions() {
        let mut r = RngStream::new(4, 0);
        for a in [0.1, 1.0, 7.5, 1e6] {
            assert_eq!(sample_beta(a, 0.0, &mut r).unwrap(), 1.0);
        }
        assert!(sample_beta(0.0, 1.0, &mut r).is_err());
        assert!(sample_beta(1.0, -0.5, &mut r).is_err());
    }

    #[test]
    fn beta_means() {
        let mut r = RngStream::new(5, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_beta(2.0, 2.0, &mut r).unwrap()).collect();
        assert!(within_se(&xs, 0.5, 5.0));
        let xs: Vec<f64> = (0..100_000).map(|_| sample_beta(6.0, 1.0, &mut r).unwrap()).collect();
        assert!(within_se(&xs, 6.0 / 7.0, 5.0));
        assert!(xs.iter().all(|&x| x > 0.0 && x <= 1.0));
    }

    #[test]
    fn dirichlet_means_and_simplex() {
        let mut r = RngStream::new(6, 0);
        for a in [vec![1.0, 1.0], vec![1.0, 1.0, 1.0], vec![2.0, 1.0, 1.0]] {
            let p = DirichletParams::new(a.clone()).unwrap();
            let draws: Vec<Vec<f64>> = (0..50_000).map(|_| sample_dirichlet(&p, &mut r).unwrap()).collect();
            for d in &draws {
                assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(d.iter().all(|&x| x >= 0.0));
            }
            for i in 0..a.len() {
                let col: Vec<f64> = draws.iter().map(|d| d[i]).collect();
                assert!(within_se(&col, p.mean(i), 5.0), "{a:?} component {i}");
            }
        }
        assert!(DirichletParams::new(vec![1.0]).is_err());
        assert!(DirichletParams::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn ml_params_validation() {
        assert!(MlParams::new(0.0, 1.0).is_err());
        assert!(MlParams::new(1.0, 1.0).is_err());
        assert!(MlParams::new(0.5, -0.5).is_err());
        assert!(MlParams::new(0.5, -0.49).is_ok());
    }

    #[test]
    fn ml_moment_values() {
        let half = MlParams::new(0.5, 0.5).unwrap();
        let third = MlParams::new(1.0 / 3.0, 1.0 / 3.0).unwrap();
        assert_eq!(ml_moment(third, 0).unwrap(), 1.0);
        assert!((ml_moment(half, 1).unwrap() / SQRT_PI - 1.0).abs() < 1e-12);
        assert!((ml_moment(third, 1).unwrap() / ML_THIRD_MEAN - 1.0).abs() < 1e-12);
        assert!((ml_moment(third, 2).unwrap() / ML_THIRD_SECOND - 1.0).abs() < 1e-12);
        assert!((ml_moment(third, 3).unwrap() / 18.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ml_moment_overflow_is_range_error() {
        let p = MlParams::new(0.01, 1e6).unwrap();
        assert!(matches!(ml_moment(p, 50_000), Err(Error::Range(_))));
    }

    #[test]
    fn ml_half_matches_closed_form() {
        let mut r = RngStream::new(7, 0);
        let xs: Vec<f64> = (0..200_000).map(|_| sample_ml_half(1, &mut r).unwrap()).collect();
        assert!(within_se(&xs, SQRT_PI, 5.0));
        let sq: Vec<f64> = (0..200_000).map(|_| sample_ml_half(2, &mut r).unwrap().powi(2)).collect();
        assert!(within_se(&sq, 8.0, 5.0));
    }

    #[test]
    fn kanter_sampler_reproduces_half_case() {
        // β = 1/2 through the generic rejection path must agree with 2√Gamma.
        let mut r = RngStream::new(8, 0);
        let beta = 0.5 + 1e-12;
        let p = MlParams::new(beta, 0.5).unwrap();
        let xs: Vec<f64> = (0..200_000).map(|_| sample_ml(p, &mut r).unwrap()).collect();
        assert!(within_se(&xs, SQRT_PI, 5.0));
    }

    #[test]
    fn kanter_sampler_moments() {
        let mut r = RngStream::new(9, 0);
        for (b, t) in [(1.0 / 3.0, 1.0 / 3.0), (0.2, 0.8), (0.75, 0.0), (0.4, -0.3), (1.0 / 6.0, 2.5)] {
            let p = MlParams::new(b, t).unwrap();
            let xs: Vec<f64> = (0..100_000).map(|_| sample_ml(p, &mut r).unwrap()).collect();
            for k in 1..=2u32 {
                let pk: Vec<f64> = xs.iter().map(|x| x.powi(k as i32)).collect();
                let target = ml_moment(p, k).unwrap();
                assert!(within_se(&pk, target, 5.0), "β={b} θ={t} k={k}");
            }
        }
    }

    #[test]
    fn m1_brownian_is_closed_form() {
        let alpha = AlphaParam::new(2.0).unwrap();
        let mut r1 = RngStream::new(10, 0);
        let mut r2 = RngStream::new(10, 0);
        let d = sample_m1(alpha, 5, &mut r1).unwrap();
        assert_eq!(d.value, sample_ml_half(1, &mut r2).unwrap());
        assert!(!d.truncation_warning);
    }

    #[test]
    fn m1_truncation_warning() {
        let alpha = AlphaParam::new(1.5).unwrap();
        let mut r = RngStream::new(11, 0);
        assert!(sample_m1(alpha, 100, &mut r).unwrap().truncation_warning);
        assert!(!sample_m1(alpha, MIN_N_TRUNC, &mut r).unwrap().truncation_warning);
    }

    #[test]
    fn martingale_has_mean_one() {
        let alpha = AlphaParam::new(1.5).unwrap();
        let mut r = RngStream::new(12, 0);
        for n in [1usize, 2, 5, 50] {
            let xs: Vec<f64> = (0..100_000).map(|_| m1_martingale(alpha, n, &mut r).unwrap()).collect();
            if n == 1 {
                assert!(xs.iter().all(|&x| (x - 1.0).abs() < 1e-12));
            } else {
                assert!(within_se(&xs, 1.0, 5.0), "n={n}");
            }
        }
    }

    #[test]
    fn m1_prefactor_approaches_power_law() {
        let alpha = AlphaParam::new(1.5).unwrap();
        let n = 1_000_000usize;
        let asymptotic = 3.0 * (n as f64).powf(1.0 / 1.5);
        assert!((m1_prefactor(alpha, n) / asymptotic - 1.0).abs() < 1e-5);
    }

    #[test]
    fn truncated_m1_moments() {
        let alpha = AlphaParam::new(1.5).unwrap();
        let mut r = RngStream::new(13, 0);
        let xs: Vec<f64> = (0..20_000).map(|_| sample_m1(alpha, 2_000, &mut r).unwrap().value).collect();
        assert!(within_se(&xs, ML_THIRD_MEAN, 5.0));
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!(within_se(&sq, ML_THIRD_SECOND, 5.0));
    }

    /// Full-scale version of the truncated sampler check (10^5 × 10^5 Beta
    /// draws, several minutes on one core).
    #[test]
    #[ignore]
    fn truncated_m1_full_scale() {
        let alpha = AlphaParam::new(1.5).unwrap();
        let mut r = RngStream::new(14, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_m1(alpha, DEFAULT_N_TRUNC, &mut r).unwrap().value).collect();
        let (m, _) = mean_var(&xs);
        assert!((m / ML_THIRD_MEAN - 1.0).abs() < 0.01);
        let sq = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!((sq / ML_THIRD_SECOND - 1.0).abs() < 0.01);
    }
}
