//! Hamiltonian Monte Carlo over the model posteriors.
//!
//! Chains run on an unconstrained parameterization: a truncated slope is
//! mapped through `b = ±exp(q)` (log-distance from the truncation bound, with
//! the Jacobian added to the log-density) and the intercept is shifted to the
//! covariate mean, which removes most of the `a`–`b` posterior correlation
//! that narrow-range covariates would otherwise induce. Draws are reported in
//! natural coordinates.
//!
//! Warmup follows the usual windowed scheme: dual-averaging step-size
//! adaptation throughout, with diagonal mass-matrix estimation over doubling
//! memory windows when the warmup phase is long enough. The number of
//! leapfrog steps per transition is jittered uniformly in `1..=leapfrog_steps`
//! to avoid periodic trajectories.
//!
//! Everything is deterministic given `(seed, config)`: each chain owns a
//! private RNG stream derived from the master seed and the chain index, and
//! chains are run in a fixed order, so results do not depend on scheduling.

use crate::gumbel::GumbelParams;
use crate::math::FloatExt;
use crate::posterior::{FitProblem, ParamVector};
use crate::prior::{SlopePrior, Truncation};
use crate::rng::Rng;
use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("no finite log-posterior found after {retries} initialization attempts (chain {chain})")]
    Initialization { chain: usize, retries: usize },
    #[error("chain {chain} rejected every proposal during warmup (step size {step_size:e})")]
    AllRejected { chain: usize, step_size: f64 },
    #[error("sampler config invalid: {0}")]
    BadConfig(&'static str),
}

/// Sampler tuning knobs; all exposed through the pipeline config file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    /// Number of chains.
    pub chains: usize,
    /// Post-warmup draws per chain.
    pub iterations: usize,
    /// Warmup (adaptation) iterations per chain, discarded.
    pub warmup: usize,
    /// Master seed; chain `c` uses the derived stream `(seed, c)`.
    pub seed: u64,
    /// Maximum leapfrog steps per transition (actual count jittered).
    pub leapfrog_steps: usize,
    /// Dual-averaging target acceptance statistic.
    pub target_accept: f64,
    /// Step size used before adaptation finds its own.
    pub init_step_size: f64,
    /// Lower bound on the adapted step size.
    pub step_size_min: f64,
    /// Upper bound on the adapted step size.
    pub step_size_max: f64,
    /// Initialization redraws allowed before giving up.
    pub max_init_retries: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            iterations: 10_000,
            warmup: 1_000,
            seed: 0,
            leapfrog_steps: 16,
            target_accept: 0.8,
            init_step_size: 0.1,
            step_size_min: 1e-8,
            step_size_max: 10.0,
            max_init_retries: 100,
        }
    }
}

impl SamplerConfig {
    fn validate(&self) -> Result<(), SampleError> {
        if self.chains == 0 {
            return Err(SampleError::BadConfig("chains must be >= 1"));
        }
        if self.iterations == 0 {
            return Err(SampleError::BadConfig("iterations must be >= 1"));
        }
        if self.leapfrog_steps == 0 {
            return Err(SampleError::BadConfig("leapfrog_steps must be >= 1"));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(SampleError::BadConfig("target_accept must be in (0,1)"));
        }
        if !(self.step_size_min > 0.0 && self.step_size_min <= self.step_size_max) {
            return Err(SampleError::BadConfig("step size bounds out of order"));
        }
        Ok(())
    }
}

/// Per-chain sampling statistics.
#[derive(Debug, Clone, Copy)]
pub struct ChainStats {
    pub accept_rate: f64,
    pub divergences: usize,
    pub step_size: f64,
}

/// Post-warmup draws from all chains, in natural coordinates.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    chains: Vec<Vec<ParamVector>>,
    pub stats: Vec<ChainStats>,
    pub seed: u64,
    /// True when the problem carried any improper (flat) prior.
    pub improper_prior: bool,
    has_slope: bool,
}

impl PosteriorDraws {
    /// Assemble draws directly; used by tests that need synthetic chains.
    #[cfg(test)]
    pub(crate) fn from_raw_parts(
        chains: Vec<Vec<ParamVector>>,
        stats: Vec<ChainStats>,
        seed: u64,
        improper_prior: bool,
        has_slope: bool,
    ) -> Self {
        Self {
            chains,
            stats,
            seed,
            improper_prior,
            has_slope,
        }
    }

    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn n_iterations(&self) -> usize {
        self.chains.first().map(Vec::len).unwrap_or(0)
    }

    pub fn total_draws(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    pub fn chains(&self) -> &[Vec<ParamVector>] {
        &self.chains
    }

    pub fn has_slope(&self) -> bool {
        self.has_slope
    }

    pub fn iter_all(&self) -> impl Iterator<Item = &ParamVector> {
        self.chains.iter().flatten()
    }

    /// Names of the sampled parameters, in the order used by
    /// [`param_series`](Self::param_series).
    pub fn param_names(&self) -> Vec<&'static str> {
        if self.has_slope {
            vec!["a", "b", "log_sigma"]
        } else {
            vec!["a", "log_sigma"]
        }
    }

    /// One parameter's trace for one chain.
    pub fn param_series(&self, chain: usize, param: usize) -> Vec<f64> {
        let extract: fn(&ParamVector) -> f64 = match (self.has_slope, param) {
            (_, 0) => |t| t.a,
            (true, 1) => |t| t.b.unwrap_or(f64::NAN),
            (true, 2) | (false, 1) => |t| t.log_sigma,
            _ => panic!("parameter index {param} out of range"),
        };
        self.chains[chain].iter().map(extract).collect()
    }

    /// All chains pooled, mapped through `f`.
    pub fn pooled<F: Fn(&ParamVector) -> f64>(&self, f: F) -> Vec<f64> {
        self.iter_all().map(f).collect()
    }

    pub fn total_divergences(&self) -> usize {
        self.stats.iter().map(|s| s.divergences).sum()
    }
}

/// Map between the natural parameters and the unconstrained sampling space.
#[derive(Debug, Clone, Copy)]
enum SlopeMap {
    /// No slope in the model.
    Absent,
    /// Unbounded slope sampled directly.
    Identity,
    /// `b = exp(q)` for a support of `(0, inf)`.
    ExpPositive,
    /// `b = -exp(q)` for a support of `(-inf, 0)`.
    ExpNegative,
}

impl SlopeMap {
    fn for_prior(prior: &SlopePrior, has_slope: bool) -> Self {
        if !has_slope {
            return SlopeMap::Absent;
        }
        match prior {
            SlopePrior::Flat => SlopeMap::Identity,
            SlopePrior::TruncatedNormal { truncation, .. } => match truncation {
                Truncation::LowerAtZero => SlopeMap::ExpPositive,
                Truncation::UpperAtZero => SlopeMap::ExpNegative,
                Truncation::None => SlopeMap::Identity,
            },
        }
    }
}

struct Space<'p> {
    prob: &'p FitProblem,
    slope_map: SlopeMap,
    /// Mean of the predictor values; the sampled intercept is `a + b*center`.
    center: f64,
    dim: usize,
}

impl<'p> Space<'p> {
    fn new(prob: &'p FitProblem) -> Self {
        let slope_map = SlopeMap::for_prior(prob.slope_prior(), prob.has_slope());
        let center = prob
            .predictor()
            .map(|p| p.iter().sum::<f64>() / p.len() as f64)
            .unwrap_or(0.0);
        let dim = if prob.has_slope() { 3 } else { 2 };
        Self {
            prob,
            slope_map,
            center,
            dim,
        }
    }

    fn slope_from_unconstrained(&self, q: f64) -> f64 {
        match self.slope_map {
            SlopeMap::Absent => 0.0,
            SlopeMap::Identity => q,
            SlopeMap::ExpPositive => q.exp(),
            SlopeMap::ExpNegative => -q.exp(),
        }
    }

    fn to_natural(&self, q: &[f64]) -> ParamVector {
        match self.slope_map {
            SlopeMap::Absent => ParamVector {
                a: q[0],
                b: None,
                log_sigma: q[1],
            },
            _ => {
                let b = self.slope_from_unconstrained(q[1]);
                ParamVector {
                    a: q[0] - b * self.center,
                    b: Some(b),
                    log_sigma: q[2],
                }
            }
        }
    }

    /// Log-posterior plus the transform Jacobian, with its gradient, in
    /// unconstrained coordinates. `None` marks a non-finite density.
    fn logp_grad(&self, q: &[f64]) -> Option<(f64, Vec<f64>)> {
        let theta = self.to_natural(q);
        if !theta.is_finite() {
            return None;
        }
        let lp = self.prob.log_posterior(&theta).ok()?;
        if !lp.is_finite() {
            return None;
        }
        let g = self.prob.grad_log_posterior(&theta).ok()?;
        match self.slope_map {
            SlopeMap::Absent => Some((lp, vec![g.a, g.log_sigma])),
            map => {
                let b = theta.b.unwrap_or(0.0);
                let g_b = g.b.unwrap_or(0.0);
                // d b / d q_b is b itself for the exp maps, 1 for identity.
                let (db_dq, log_jac, jac_grad) = match map {
                    SlopeMap::Identity => (1.0, 0.0, 0.0),
                    _ => (b, q[1], 1.0),
                };
                let lp_q = lp + log_jac;
                // a = q_a - b*center, so q_b moves both b and a.
                let g_qb = (g_b - self.center * g.a) * db_dq + jac_grad;
                Some((lp_q, vec![g.a, g_qb, g.log_sigma]))
            }
        }
    }

    /// Overdispersed start: method-of-moments estimates jittered by +-0.5 on
    /// the intercept and log-scale, slope drawn from its prior (standard
    /// normal when flat).
    fn initial_point(&self, rng: &mut Rng) -> Vec<f64> {
        let mom = GumbelParams::method_of_moments(self.prob.observations())
            .unwrap_or_else(|_| GumbelParams::new(1.0, 1.0).unwrap());
        let qa = mom.mu().max(1e-12).ln() + rng.uniform_range(-0.5, 0.5);
        let qs = mom.sigma().ln() + rng.uniform_range(-0.5, 0.5);
        match self.slope_map {
            SlopeMap::Absent => vec![qa, qs],
            SlopeMap::Identity => vec![qa, self.prob.slope_prior().initial_draw(rng), qs],
            SlopeMap::ExpPositive => {
                let b = self.prob.slope_prior().initial_draw(rng).max(1e-12);
                vec![qa, b.ln().max(-20.0), qs]
            }
            SlopeMap::ExpNegative => {
                let b = self.prob.slope_prior().initial_draw(rng).min(-1e-12);
                vec![qa, (-b).ln().max(-20.0), qs]
            }
        }
    }
}

/// Dual-averaging step-size adaptation (the Hoffman–Gelman scheme).
struct DualAveraging {
    mu: f64,
    log_eps_bar: f64,
    h_bar: f64,
    count: f64,
    target: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    fn new(eps0: f64, target: f64) -> Self {
        Self {
            mu: (10.0 * eps0).ln(),
            log_eps_bar: 0.0,
            h_bar: 0.0,
            count: 0.0,
            target,
        }
    }

    fn update(&mut self, accept_stat: f64) -> f64 {
        self.count += 1.0;
        let frac = 1.0 / (self.count + Self::T0);
        self.h_bar = (1.0 - frac) * self.h_bar + frac * (self.target - accept_stat);
        let log_eps = self.mu - self.count.sqrt() / Self::GAMMA * self.h_bar;
        let weight = self.count.powf(-Self::KAPPA);
        self.log_eps_bar = weight * log_eps + (1.0 - weight) * self.log_eps_bar;
        log_eps.exp()
    }

    fn adapted(&self) -> f64 {
        self.log_eps_bar.exp()
    }
}

/// Streaming mean/variance for the mass-matrix windows.
struct Welford {
    n: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(dim: usize) -> Self {
        Self {
            n: 0.0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1.0;
        for (i, &xi) in x.iter().enumerate() {
            let d = xi - self.mean[i];
            self.mean[i] += d / self.n;
            self.m2[i] += d * (xi - self.mean[i]);
        }
    }

    /// Regularized variance estimate (shrunk toward a small diagonal), as in
    /// the usual windowed adaptation.
    fn regularized_variance(&self) -> Option<Vec<f64>> {
        if self.n < 10.0 {
            return None;
        }
        let shrink = self.n / (self.n + 5.0);
        Some(
            self.m2
                .iter()
                .map(|&m2| (shrink * m2 / (self.n - 1.0) + (1.0 - shrink) * 1e-3).max(1e-10))
                .collect(),
        )
    }
}

struct Transition {
    q: Vec<f64>,
    grad: Vec<f64>,
    logp: f64,
    accept_stat: f64,
    accepted: bool,
    divergent: bool,
}

/// One HMC transition with a jittered number of leapfrog steps.
#[allow(clippy::too_many_arguments)]
fn hmc_transition(
    space: &Space,
    q0: &[f64],
    grad0: &[f64],
    logp0: f64,
    eps: f64,
    max_steps: usize,
    inv_mass: &[f64],
    rng: &mut Rng,
) -> Transition {
    let dim = q0.len();
    let n_steps = 1 + rng.below(max_steps as u64) as usize;
    // p ~ N(0, M) with M = 1/inv_mass.
    let mut p: Vec<f64> = (0..dim)
        .map(|i| rng.normal() / inv_mass[i].sqrt())
        .collect();
    let kinetic =
        |p: &[f64]| -> f64 { 0.5 * p.iter().zip(inv_mass).map(|(&pi, &im)| pi * pi * im).sum::<f64>() };
    let h0 = -logp0 + kinetic(&p);

    let mut q = q0.to_vec();
    let mut grad = grad0.to_vec();
    let mut logp = logp0;
    let mut ok = true;
    for _ in 0..n_steps {
        for i in 0..dim {
            p[i] += 0.5 * eps * grad[i];
        }
        for i in 0..dim {
            q[i] += eps * inv_mass[i] * p[i];
        }
        match space.logp_grad(&q) {
            Some((lp, g)) => {
                logp = lp;
                grad = g;
            }
            None => {
                ok = false;
                break;
            }
        }
        for i in 0..dim {
            p[i] += 0.5 * eps * grad[i];
        }
    }

    let (accept_stat, divergent) = if ok {
        let h1 = -logp + kinetic(&p);
        let delta = h0 - h1;
        if !delta.is_finite() || delta < -1000.0 {
            (0.0, true)
        } else {
            (delta.min(0.0).exp(), false)
        }
    } else {
        (0.0, true)
    };

    let accepted = accept_stat > 0.0 && rng.uniform() < accept_stat;
    if accepted {
        Transition {
            q,
            grad,
            logp,
            accept_stat,
            accepted,
            divergent,
        }
    } else {
        Transition {
            q: q0.to_vec(),
            grad: grad0.to_vec(),
            logp: logp0,
            accept_stat,
            accepted,
            divergent,
        }
    }
}

/// Heuristic initial step size: double/halve until the one-step acceptance
/// crosses 1/2.
fn find_initial_step_size(
    space: &Space,
    q: &[f64],
    grad: &[f64],
    logp: f64,
    eps0: f64,
    inv_mass: &[f64],
    rng: &mut Rng,
) -> f64 {
    let mut eps = eps0;
    let one_step = |eps: f64, rng: &mut Rng| -> f64 {
        hmc_transition(space, q, grad, logp, eps, 1, inv_mass, rng).accept_stat
    };
    let a0 = one_step(eps, rng);
    let going_up = a0 > 0.5;
    for _ in 0..50 {
        let a = one_step(eps, rng);
        if going_up {
            if a <= 0.5 {
                break;
            }
            eps *= 2.0;
        } else {
            if a >= 0.5 {
                break;
            }
            eps *= 0.5;
        }
        if !(1e-10..=1e4).contains(&eps) {
            break;
        }
    }
    eps
}

/// Draw from the posterior of `prob`.
///
/// Runs `cfg.chains` independent chains from overdispersed starting points
/// and returns the post-warmup draws. Deterministic given `(cfg.seed, cfg)`.
pub fn sample(prob: &FitProblem, cfg: &SamplerConfig) -> Result<PosteriorDraws, SampleError> {
    cfg.validate()?;
    let space = Space::new(prob);
    let mut chains = Vec::with_capacity(cfg.chains);
    let mut stats = Vec::with_capacity(cfg.chains);
    for chain_idx in 0..cfg.chains {
        let mut rng = Rng::stream(cfg.seed, chain_idx as u64);
        let (draws, chain_stats) = run_chain(&space, cfg, chain_idx, &mut rng)?;
        chains.push(draws);
        stats.push(chain_stats);
    }
    Ok(PosteriorDraws {
        chains,
        stats,
        seed: cfg.seed,
        improper_prior: prob.has_improper_prior(),
        has_slope: prob.has_slope(),
    })
}

fn run_chain(
    space: &Space,
    cfg: &SamplerConfig,
    chain_idx: usize,
    rng: &mut Rng,
) -> Result<(Vec<ParamVector>, ChainStats), SampleError> {
    // Initialization with bounded retries.
    let mut state: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    for _ in 0..cfg.max_init_retries.max(1) {
        let q = space.initial_point(rng);
        if let Some((lp, g)) = space.logp_grad(&q) {
            state = Some((q, g, lp));
            break;
        }
    }
    let (mut q, mut grad, mut logp) = state.ok_or(SampleError::Initialization {
        chain: chain_idx,
        retries: cfg.max_init_retries,
    })?;

    let mut inv_mass = vec![1.0; space.dim];
    let mut eps = find_initial_step_size(space, &q, &grad, logp, cfg.init_step_size, &inv_mass, rng)
        .clamp(cfg.step_size_min, cfg.step_size_max);
    let mut da = DualAveraging::new(eps, cfg.target_accept);

    // Mass-adaptation windows (init/base/term buffers), only when warmup is
    // long enough to fill them.
    const INIT_BUFFER: usize = 75;
    const BASE_WINDOW: usize = 25;
    const TERM_BUFFER: usize = 50;
    let windows_enabled = cfg.warmup >= INIT_BUFFER + BASE_WINDOW + TERM_BUFFER;
    let mut window_end = INIT_BUFFER + BASE_WINDOW;
    let mut window_size = BASE_WINDOW;
    let mut welford = Welford::new(space.dim);
    let mut warmup_accepts = 0usize;

    for iter in 0..cfg.warmup {
        let t = hmc_transition(space, &q, &grad, logp, eps, cfg.leapfrog_steps, &inv_mass, rng);
        if t.accepted {
            warmup_accepts += 1;
        }
        q = t.q;
        grad = t.grad;
        logp = t.logp;
        eps = da.update(t.accept_stat).clamp(cfg.step_size_min, cfg.step_size_max);

        if windows_enabled && iter >= INIT_BUFFER && iter < cfg.warmup - TERM_BUFFER {
            welford.push(&q);
            if iter + 1 == window_end {
                if let Some(var) = welford.regularized_variance() {
                    inv_mass = var;
                }
                welford = Welford::new(space.dim);
                // Restart step-size adaptation around the current value.
                // TODO: re-run the initial step-size search here instead,
                // since the new metric changes the stable step scale.
                da = DualAveraging::new(eps, cfg.target_accept);
                window_size *= 2;
                window_end = (window_end + window_size).min(cfg.warmup - TERM_BUFFER);
                // Absorb a trailing stub window into this one.
                if cfg.warmup - TERM_BUFFER < window_end + window_size * 2 {
                    window_end = cfg.warmup - TERM_BUFFER;
                }
            }
        }
    }
    if cfg.warmup > 0 {
        if warmup_accepts == 0 {
            return Err(SampleError::AllRejected {
                chain: chain_idx,
                step_size: eps,
            });
        }
        eps = da.adapted().clamp(cfg.step_size_min, cfg.step_size_max);
    }

    let mut draws = Vec::with_capacity(cfg.iterations);
    let mut accept_sum = 0.0;
    let mut divergences = 0usize;
    for _ in 0..cfg.iterations {
        let t = hmc_transition(space, &q, &grad, logp, eps, cfg.leapfrog_steps, &inv_mass, rng);
        q = t.q;
        grad = t.grad;
        logp = t.logp;
        accept_sum += t.accept_stat;
        if t.divergent {
            divergences += 1;
        }
        draws.push(space.to_natural(&q));
    }
    Ok((
        draws,
        ChainStats {
            accept_rate: accept_sum / cfg.iterations as f64,
            divergences,
            step_size: eps,
        },
    ))
}
