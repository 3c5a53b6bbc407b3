//! The increasing Markov chain `(M_p, p ≥ 1)` driving the line-breaking
//! constructions.
//!
//! `M_p ~ ML(1-1/α, p-1/α)` and the backward step is `M_p = M_{p+1} β_p`
//! with `β_p ~ Beta(((p+1)α-2)/(α-1), 1/(α-1))` independent of `M_{p+1}`.
//! Exact trajectories are therefore sampled backwards from their last step.

use serde::{Deserialize, Serialize};

use crate::distributions::{m1_prefactor, sample_beta, sample_gamma, sample_ml, M1Sampler, MlParams};
use crate::error::{ensure, Result};
use crate::rng::RngStream;

/// Stability index α ∈ (1, 2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct AlphaParam {
    alpha: f64,
}

impl AlphaParam {
    pub fn new(alpha: f64) -> Result<Self> {
        ensure!(alpha > 1.0 && alpha <= 2.0, Parameter, "alpha must lie in (1, 2], got {alpha}");
        Ok(Self { alpha })
    }

    pub fn value(&self) -> f64 {
        self.alpha
    }

    /// `β = 1 - 1/α`, the ML index of the chain marginals.
    pub fn beta_index(&self) -> f64 {
        1.0 - 1.0 / self.alpha
    }

    pub fn is_brownian(&self) -> bool {
        self.alpha == 2.0
    }

    /// `θ_p = p - 1/α`.
    pub fn theta(&self, p: usize) -> f64 {
        p as f64 - 1.0 / self.alpha
    }

    /// Parameters of the marginal law of `M_p`.
    pub fn ml_params(&self, p: usize) -> MlParams {
        MlParams::new(self.beta_index(), self.theta(p)).expect("alpha in (1,2] gives valid ML parameters")
    }

    /// Second parameter of the branch fraction `B ~ Beta(1, (2-α)/(α-1))`.
    pub fn branch_fraction_b(&self) -> f64 {
        (2.0 - self.alpha) / (self.alpha - 1.0)
    }
}

impl TryFrom<f64> for AlphaParam {
    type Error = crate::Error;

    fn try_from(value: f64) -> Result<Self> {
        AlphaParam::new(value)
    }
}

impl From<AlphaParam> for f64 {
    fn from(a: AlphaParam) -> f64 {
        a.alpha
    }
}

/// Parameters `(a, b)` of `β_p ~ Beta(((p+1)α-2)/(α-1), 1/(α-1))`.
pub fn beta_step_params(alpha: AlphaParam, p: usize) -> (f64, f64) {
    let a = alpha.value();
    (((p as f64 + 1.0) * a - 2.0) / (a - 1.0), 1.0 / (a - 1.0))
}

/// A pre-sampled trajectory `M_1 < … < M_H` with its factors `β_1, …, β_{H-1}`,
/// satisfying `values[p-1] == values[p] * betas[p-1]` (exactly for backward
/// paths, up to rounding for truncated forward ones).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPath {
    values: Vec<f64>,
    betas: Vec<f64>,
}

impl ChainPath {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// The horizon `H`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Draws a trajectory up to `horizon`.
///
/// With [`M1Sampler::Exact`] the endpoint `M_H ~ ML(1-1/α, H-1/α)` is drawn
/// exactly and the path is filled in backwards, `M_p = M_{p+1} β_p`, which is
/// exact because `β_p` is independent of `M_{p+1}`. Stepping forwards from an
/// independently drawn `M_1` with fresh factors would not be: `β_p` is not
/// independent of `M_p`.
///
/// With [`M1Sampler::Truncated`] the factors `β_1, …, β_{N-1}` with
/// `N = max(n_trunc, H)` are drawn first, `M_1` is their normalized product,
/// and the path is read off forwards as `M_{p+1} = M_p / β_p` using the same
/// factors.
pub fn sample_path(alpha: AlphaParam, m1: M1Sampler, horizon: usize, rng: &mut RngStream) -> Result<ChainPath> {
    ensure!(horizon >= 1, Parameter, "chain horizon must be >= 1");
    match m1 {
        M1Sampler::Exact => {
            let mut values = vec![0.0; horizon];
            let mut betas = vec![0.0; horizon - 1];
            values[horizon - 1] = sample_ml(alpha.ml_params(horizon), rng)?;
            for p in (1..horizon).rev() {
                let (a, b) = beta_step_params(alpha, p);
                let upper = values[p];
                let (beta, m) = loop {
                    let beta = sample_beta(a, b, rng)?;
                    let m = upper * beta;
                    if m > 0.0 && m < upper {
                        break (beta, m);
                    }
                };
                betas[p - 1] = beta;
                values[p - 1] = m;
            }
            Ok(ChainPath { values, betas })
        }
        M1Sampler::Truncated { n_trunc } => {
            ensure!(n_trunc >= 1, Parameter, "n_trunc must be >= 1");
            let n = n_trunc.max(horizon);
            let mut factors = Vec::with_capacity(n - 1);
            for i in 1..n {
                let (a, b) = beta_step_params(alpha, i);
                let beta = loop {
                    let beta = sample_beta(a, b, rng)?;
                    if beta < 1.0 {
                        break beta;
                    }
                };
                factors.push(beta);
            }
            let ln_m1 = m1_prefactor(alpha, n).ln() + factors.iter().map(|b| b.ln()).sum::<f64>();
            let mut values = Vec::with_capacity(horizon);
            values.push(ln_m1.exp());
            ensure!(values[0] > 0.0 && values[0].is_finite(), Range, "truncated M_1 left the floating-point range");
            factors.truncate(horizon - 1);
            for p in 1..horizon {
                let m = values[p - 1];
                let next = exact_quotient(m, factors[p - 1]).unwrap_or(m / factors[p - 1]);
                values.push(next);
            }
            Ok(ChainPath { values, betas: factors })
        }
    }
}

/// One point of a chain trajectory.
///
/// Stepping consumes the state and returns the next one. A state started
/// from a [`ChainPath`] walks that path; past its end (or without one) only
/// the Brownian case α = 2 can be continued exactly, through the Poisson
/// description `M_{p+1}^2 = M_p^2 + 4 E`. With history retained, the factors
/// `β_1, …, β_{p-1}` and values `M_1, …, M_p` are kept so the backward
/// relation can be replayed exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    p: usize,
    m: f64,
    path: Option<ChainPath>,
    history: Option<ChainHistory>,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct ChainHistory {
    betas: Vec<f64>,
    values: Vec<f64>,
}

impl ChainState {
    /// Starts a chain at `p = 1` with value `m1` and no pre-sampled path.
    pub fn start(m1: f64, keep_history: bool) -> Result<Self> {
        ensure!(m1.is_finite() && m1 > 0.0, Parameter, "chain start must be positive, got {m1}");
        let history = keep_history.then(|| ChainHistory { betas: Vec::new(), values: vec![m1] });
        Ok(Self { p: 1, m: m1, path: None, history })
    }

    /// Starts at `p = 1` on a pre-sampled path.
    pub fn from_path(path: ChainPath, keep_history: bool) -> Self {
        let mut s = Self::start(path.values[0], keep_history).expect("paths hold positive values");
        s.path = Some(path);
        s
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// Last step covered by the pre-sampled path, if any.
    pub fn horizon(&self) -> Option<usize> {
        self.path.as_ref().map(ChainPath::len)
    }

    /// Factors `β_1, …, β_{p-1}` when history is retained.
    pub fn betas(&self) -> Option<&[f64]> {
        self.history.as_ref().map(|h| h.betas.as_slice())
    }

    /// Values `M_1, …, M_p` when history is retained.
    pub fn values(&self) -> Option<&[f64]> {
        self.history.as_ref().map(|h| h.values.as_slice())
    }

    /// Recomputes `M_q = M_{q+1} β_q` from stored history, for `1 ≤ q < p`.
    pub fn backward(&self, q: usize) -> Option<f64> {
        let h = self.history.as_ref()?;
        (q >= 1 && q < self.p).then(|| h.values[q] * h.betas[q - 1])
    }

    /// Step to `M_{p+1}`.
    pub fn next(self, alpha: AlphaParam, rng: &mut RngStream) -> Result<Self> {
        Ok(self.next_with_beta(alpha, rng)?.0)
    }

    /// As [`ChainState::next`], also returning the factor `β_p = M_p / M_{p+1}`.
    pub fn next_with_beta(self, alpha: AlphaParam, rng: &mut RngStream) -> Result<(Self, f64)> {
        if let Some(path) = &self.path {
            if self.p < path.len() {
                let (beta, m_next) = (path.betas[self.p - 1], path.values[self.p]);
                return Ok(self.advance(beta, m_next));
            }
        }
        ensure!(
            alpha.is_brownian(),
            Unsupported,
            "step {} is past the sampled horizon; forward steps are only exact for alpha = 2",
            self.p
        );
        let (beta, m_next) = loop {
            let m_next = (self.m * self.m + 4.0 * sample_gamma(1.0, rng)?).sqrt();
            if m_next <= self.m {
                continue;
            }
            let beta = self.m / m_next;
            if let Some(m_next) = exact_quotient(self.m, beta) {
                break (beta, m_next);
            }
        };
        Ok(self.advance(beta, m_next))
    }

    /// Divides by a fresh `β_p` drawn independently of the current value.
    ///
    /// This is the transition of the normalized chain `M̄`. It is not a
    /// transition of `(M_p)`, whose factor `β_p` is independent of `M_{p+1}`
    /// rather than of `M_p`.
    pub fn step_independent(self, alpha: AlphaParam, rng: &mut RngStream) -> Result<(Self, f64)> {
        let (a, b) = beta_step_params(alpha, self.p);
        let (beta, m_next) = loop {
            let beta = sample_beta(a, b, rng)?;
            if beta >= 1.0 {
                continue;
            }
            if let Some(m_next) = exact_quotient(self.m, beta) {
                break (beta, m_next);
            }
        };
        Ok(self.advance(beta, m_next))
    }

    fn advance(mut self, beta: f64, m_next: f64) -> (Self, f64) {
        self.p += 1;
        self.m = m_next;
        if let Some(h) = self.history.as_mut() {
            h.betas.push(beta);
            h.values.push(m_next);
        }
        (self, beta)
    }
}

/// Returns `m' > m` with `m' · β == m` exactly in floating point, searching a
/// few ulps around `m / β`. `None` if no such value exists nearby.
fn exact_quotient(m: f64, beta: f64) -> Option<f64> {
    let q = m / beta;
    let mut cands = [q; 5];
    cands[1] = q.next_up();
    cands[2] = q.next_down();
    cands[3] = q.next_up().next_up();
    cands[4] = q.next_down().next_down();
    cands.into_iter().find(|&c| c > m && c * beta == m)
}

/// State at `p = 1` on a trajectory sampled up to `horizon`.
pub fn chain_init(
    alpha: AlphaParam,
    m1: M1Sampler,
    horizon: usize,
    keep_history: bool,
    rng: &mut RngStream,
) -> Result<ChainState> {
    Ok(ChainState::from_path(sample_path(alpha, m1, horizon, rng)?, keep_history))
}

/// `M_1, …, M_{p_max}` along one trajectory.
pub fn sample_trajectory(alpha: AlphaParam, m1: M1Sampler, p_max: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    Ok(sample_path(alpha, m1, p_max, rng)?.into_values())
}

/// The normalized chain `M̄_1 = 1`, `M̄_p = (β_1 ⋯ β_{p-1})^{-1}`.
pub fn normalized_chain(alpha: AlphaParam, p_max: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    ensure!(p_max >= 1, Parameter, "p_max must be >= 1");
    let mut state = ChainState::start(1.0, false)?;
    let mut out = Vec::with_capacity(p_max);
    out.push(1.0);
    while state.p() < p_max {
        state = state.step_independent(alpha, rng)?.0;
        out.push(state.m());
    }
    Ok(out)
}

/// Transition density of the chain at α = 2,
/// `p(m, m') = (m'/2) exp(-(m'^2 - m^2)/4)` for `m' ≥ m`.
///
/// Other values of α are rejected: the general density involves the stable
/// density `g_{1-1/α}`, which has no simple closed form.
pub fn transition_density_brownian(alpha: AlphaParam, m: f64, m_next: f64) -> Result<f64> {
    ensure!(
        alpha.is_brownian(),
        Unsupported,
        "transition density is only available for alpha = 2, got {}",
        alpha.value()
    );
    ensure!(m > 0.0 && m.is_finite(), Domain, "current state must be positive, got {m}");
    ensure!(m_next >= m, Domain, "next state {m_next} is below current state {m}");
    Ok(0.5 * m_next * (-(m_next * m_next - m * m) / 4.0).exp())
}
