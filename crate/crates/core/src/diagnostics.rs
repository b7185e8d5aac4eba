//! Convergence diagnostics: rank-normalized split-R̂ and bulk effective
//! sample size.
//!
//! Chains are split in half, pooled draws are rank-normalized (average ranks
//! for ties, mapped through the normal quantile), and the classic
//! between/within variance ratio is computed on the transformed sequences.
//! ESS uses the combined-chain autocorrelation with Geyer's initial monotone
//! positive sequence truncation.

use crate::math::{normal_quantile, FloatExt};
use crate::sampler::PosteriorDraws;
use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnoseError {
    #[error("diagnostics need at least 2 chains, got {0}")]
    TooFewChains(usize),
    #[error("diagnostics need at least 4 draws per chain, got {0}")]
    TooFewDraws(usize),
}

/// Per-parameter convergence measures. `rhat`/`ess` are `None` when the
/// parameter's draws carry no variance (a stuck or degenerate chain), which
/// is reported through `indeterminate` instead of NaN.
#[derive(Debug, Clone)]
pub struct ParamDiagnostics {
    pub name: &'static str,
    pub rhat: Option<f64>,
    pub ess: Option<f64>,
    pub indeterminate: bool,
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub params: Vec<ParamDiagnostics>,
    pub divergences: usize,
    /// All R̂ < 1.01 and all ESS > 400.
    pub pass: bool,
}

impl Diagnostics {
    pub fn max_rhat(&self) -> Option<f64> {
        self.params
            .iter()
            .filter_map(|p| p.rhat)
            .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
    }

    pub fn min_ess(&self) -> Option<f64> {
        self.params
            .iter()
            .filter_map(|p| p.ess)
            .fold(None, |acc, e| Some(acc.map_or(e, |a: f64| a.min(e))))
    }
}

/// Split-R̂ and bulk ESS for every sampled parameter.
pub fn diagnose(draws: &PosteriorDraws) -> Result<Diagnostics, DiagnoseError> {
    if draws.n_chains() < 2 {
        return Err(DiagnoseError::TooFewChains(draws.n_chains()));
    }
    if draws.n_iterations() < 4 {
        return Err(DiagnoseError::TooFewDraws(draws.n_iterations()));
    }
    let names = draws.param_names();
    let mut params = Vec::with_capacity(names.len());
    for (idx, name) in names.iter().enumerate() {
        let chains: Vec<Vec<f64>> = (0..draws.n_chains())
            .map(|c| draws.param_series(c, idx))
            .collect();
        let split = split_chains(&chains);
        if is_degenerate(&split) {
            params.push(ParamDiagnostics {
                name,
                rhat: None,
                ess: None,
                indeterminate: true,
            });
            continue;
        }
        let z = rank_normalize(&split);
        let rhat = split_rhat(&z);
        let ess = bulk_ess(&z);
        params.push(ParamDiagnostics {
            name,
            rhat,
            ess,
            indeterminate: rhat.is_none(),
        });
    }
    let pass = params.iter().all(|p| {
        !p.indeterminate
            && p.rhat.map(|r| r < 1.01).unwrap_or(false)
            && p.ess.map(|e| e > 400.0).unwrap_or(false)
    });
    Ok(Diagnostics {
        params,
        divergences: draws.total_divergences(),
        pass,
    })
}

/// Each chain halved; odd trailing draw dropped.
fn split_chains(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    let half = n / 2;
    let mut out = Vec::with_capacity(chains.len() * 2);
    for c in chains {
        out.push(c[..half].to_vec());
        out.push(c[half..2 * half].to_vec());
    }
    out
}

fn is_degenerate(split: &[Vec<f64>]) -> bool {
    let first = split[0][0];
    split
        .iter()
        .all(|s| s.iter().all(|&v| v == first || !v.is_finite()))
}

/// Pooled average ranks (ties averaged) mapped through the normal quantile
/// with the (r - 3/8)/(S + 1/4) offset.
fn rank_normalize(split: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let total: usize = split.iter().map(Vec::len).sum();
    let mut indexed: Vec<(f64, usize)> = Vec::with_capacity(total);
    for (j, s) in split.iter().enumerate() {
        for (i, &v) in s.iter().enumerate() {
            indexed.push((v, j * (total + 1) + i));
        }
    }
    indexed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ranks = vec![0.0; total];
    let mut pos = 0usize;
    let positions: Vec<usize> = indexed.iter().map(|&(_, id)| id).collect();
    let values: Vec<f64> = indexed.iter().map(|&(v, _)| v).collect();
    while pos < total {
        let mut end = pos + 1;
        while end < total && values[end] == values[pos] {
            end += 1;
        }
        // Average rank of the tie group, 1-based.
        let avg = (pos + 1 + end) as f64 / 2.0;
        for r in ranks.iter_mut().take(end).skip(pos) {
            *r = avg;
        }
        pos = end;
    }
    let s = total as f64;
    let mut z = vec![vec![0.0; split[0].len()]; split.len()];
    let n_per = split[0].len();
    for (&id, &rank) in positions.iter().zip(&ranks) {
        let j = id / (total + 1);
        let i = id % (total + 1);
        debug_assert!(i < n_per);
        z[j][i] = normal_quantile(((rank - 0.375) / (s + 0.25)).clamp(1e-12, 1.0 - 1e-12));
    }
    z
}

/// Classic split-R̂ on already-transformed sequences.
fn split_rhat(seqs: &[Vec<f64>]) -> Option<f64> {
    let n = seqs[0].len() as f64;
    let means: Vec<f64> = seqs.iter().map(|s| crate::stats::mean(s)).collect();
    let vars: Vec<f64> = seqs.iter().map(|s| crate::stats::sample_var(s)).collect();
    let w = crate::stats::mean(&vars);
    if w <= 0.0 || !w.is_finite() {
        return None;
    }
    let b = n * crate::stats::sample_var(&means);
    let var_plus = (n - 1.0) / n * w + b / n;
    Some((var_plus / w).sqrt())
}

/// Bulk ESS via combined autocorrelations and Geyer truncation.
fn bulk_ess(seqs: &[Vec<f64>]) -> Option<f64> {
    let m = seqs.len();
    let n = seqs[0].len();
    if n < 4 {
        return None;
    }
    let means: Vec<f64> = seqs.iter().map(|s| crate::stats::mean(s)).collect();
    let vars: Vec<f64> = seqs.iter().map(|s| crate::stats::sample_var(s)).collect();
    let w = crate::stats::mean(&vars);
    if w <= 0.0 {
        return None;
    }
    let b = n as f64 * crate::stats::sample_var(&means);
    let var_plus = (n as f64 - 1.0) / n as f64 * w + b / n as f64;

    // Biased autocovariance (divisor n) per sequence at a given lag.
    let acov = |s: &[f64], mean: f64, t: usize| -> f64 {
        let mut acc = 0.0;
        for i in 0..(n - t) {
            acc += (s[i] - mean) * (s[i + t] - mean);
        }
        acc / n as f64
    };

    let mean_acov = |t: usize| -> f64 {
        let mut acc = 0.0;
        for (j, s) in seqs.iter().enumerate() {
            acc += acov(s, means[j], t);
        }
        acc / m as f64
    };

    // rho_0 from the biased variance; then Geyer pairs.
    let rho = |t: usize| -> f64 { 1.0 - (w - mean_acov(t)) / var_plus };
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut t = 0usize;
    while t + 1 < n {
        let pair = rho(t) + rho(t + 1);
        if pair <= 0.0 {
            break;
        }
        // Enforce monotone nonincreasing pair sums.
        let pair = pair.min(prev_pair);
        prev_pair = pair;
        tau += 2.0 * pair;
        t += 2;
    }
    let tau = tau.max(1.0 / (m as f64 * n as f64));
    let total = (m * n) as f64;
    Some((total / tau).min(total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::ParamVector;
    use crate::rng::Rng;
    use crate::sampler::{ChainStats, PosteriorDraws};

    fn draws_from(chains: Vec<Vec<f64>>) -> PosteriorDraws {
        let wrapped: Vec<Vec<ParamVector>> = chains
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&v| ParamVector {
                        a: v,
                        b: None,
                        log_sigma: v * 0.5 + 1.0,
                    })
                    .collect()
            })
            .collect();
        let stats = chains
            .iter()
            .map(|_| ChainStats {
                accept_rate: 1.0,
                divergences: 0,
                step_size: 0.1,
            })
            .collect();
        PosteriorDraws::from_raw_parts(wrapped, stats, 0, false, false)
    }

    #[test]
    fn white_noise_copies_give_unit_rhat() {
        let mut rng = Rng::new(12);
        let noise: Vec<f64> = (0..4000).map(|_| rng.normal()).collect();
        let d = draws_from(vec![noise.clone(), noise.clone()]);
        let diag = diagnose(&d).unwrap();
        let rhat = diag.params[0].rhat.unwrap();

        // Oracle: plain split-R-hat formula computed from scratch on the
        // same four half-sequences (no rank normalization; white noise is
        // already Gaussian so the two agree closely).
        let half = noise.len() / 2;
        let seqs = [
            &noise[..half],
            &noise[half..],
            &noise[..half],
            &noise[half..],
        ];
        let means: Vec<f64> = seqs.iter().map(|s| crate::stats::mean(s)).collect();
        let vars: Vec<f64> = seqs.iter().map(|s| crate::stats::sample_var(s)).collect();
        let w = crate::stats::mean(&vars);
        let b = half as f64 * crate::stats::sample_var(&means);
        let var_plus = (half as f64 - 1.0) / half as f64 * w + b / half as f64;
        let oracle = (var_plus / w).sqrt();

        assert!((rhat - 1.0).abs() < 0.005, "rhat {rhat}");
        assert!((oracle - 1.0).abs() < 0.005, "oracle {oracle}");
        assert!((rhat - oracle).abs() < 0.01);
    }

    #[test]
    fn disjoint_chains_fail_loudly() {
        let mut rng = Rng::new(3);
        let c1: Vec<f64> = (0..500).map(|_| 0.0 + 0.01 * rng.normal()).collect();
        let c2: Vec<f64> = (0..500).map(|_| 10.0 + 0.01 * rng.normal()).collect();
        let d = draws_from(vec![c1, c2]);
        let diag = diagnose(&d).unwrap();
        assert!(diag.params[0].rhat.unwrap() > 1.2);
        assert!(!diag.pass);
    }

    #[test]
    fn constant_chains_flagged_indeterminate() {
        let d = draws_from(vec![vec![2.5; 100], vec![2.5; 100]]);
        let diag = diagnose(&d).unwrap();
        assert!(diag.params[0].indeterminate);
        assert!(diag.params[0].rhat.is_none());
        assert!(!diag.pass);
    }

    #[test]
    fn preconditions_enforced() {
        let d = draws_from(vec![vec![1.0, 2.0, 3.0, 4.0, 5.0]]);
        assert_eq!(diagnose(&d).unwrap_err(), DiagnoseError::TooFewChains(1));
        let d = draws_from(vec![vec![1.0, 2.0], vec![1.5, 2.5]]);
        assert_eq!(diagnose(&d).unwrap_err(), DiagnoseError::TooFewDraws(2));
    }

    #[test]
    fn ar1_ess_matches_theoretical_factor() {
        // AR(1) with coefficient rho has integrated autocorrelation time
        // (1 + rho) / (1 - rho); the estimate should land within ~25%.
        let rho: f64 = 0.7;
        let tau_expected = (1.0 + rho) / (1.0 - rho);
        let mut rng = Rng::new(2024);
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|_| {
                let mut x = 0.0;
                (0..4000)
                    .map(|_| {
                        x = rho * x + (1.0 - rho * rho).sqrt() * rng.normal();
                        x
                    })
                    .collect()
            })
            .collect();
        let total = 16_000.0;
        let d = draws_from(chains);
        let diag = diagnose(&d).unwrap();
        let ess = diag.params[0].ess.unwrap();
        let tau_hat = total / ess;
        assert!(
            (tau_hat / tau_expected - 1.0).abs() < 0.25,
            "tau {tau_hat:.2} vs expected {tau_expected:.2}"
        );
    }

    #[test]
    fn independent_noise_ess_near_total() {
        let mut rng = Rng::new(77);
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..1000).map(|_| rng.normal()).collect())
            .collect();
        let d = draws_from(chains);
        let diag = diagnose(&d).unwrap();
        let ess = diag.params[0].ess.unwrap();
        assert!(ess > 2000.0, "ess {ess}");
        assert!(ess <= 4000.0);
        assert!(diag.pass);
    }
}
