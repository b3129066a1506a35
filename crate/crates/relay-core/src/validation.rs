//! Empirical checks of the random-matrix laws behind the asymptotic
//! analysis: exact distributions where they are known, concentration and
//! tail trends where only rates are known.
//!
//! Every probe draws its own realizations from per-sample derived seeds and
//! reports a reproducible statistic. Kolmogorov-Smirnov tests run at the
//! asymptotic one-percent level `1.63 / sqrt(n)`.

use crate::channel::{sample_realization, NetworkDims, PowerConfig};
use crate::error::{Error, Result};
use crate::exec::{mean_and_stderr, pairwise_sum, run_trials};
use crate::matrix::{min_gram_eigenvalue, ComplexMatrix};
use crate::rng::{mix_seed, Xoshiro256PlusPlus};
use crate::schemes::{compute_plan, icbs_activate, interference_norm, uplink_svd};
use crate::stats::{beta_cdf, exponential_cdf, ks_critical_1pct, ks_statistic, wilson_interval};

/// Minimum sample count accepted by any probe.
pub const MIN_SAMPLES: usize = 100;

/// Configuration for the threshold-based probes.
///
/// `beta` is the activation threshold, `gamma` the block-norm threshold,
/// and `xi` the interference-norm threshold; `delta()` is their ratio
/// `gamma / beta`. The default schedule ties all three to the relay count:
/// `beta = 1/ln K`, `gamma = 2 ln K / K`, `xi = K / ln^2 K` (natural logs).
#[derive(Debug, Clone, Copy)]
pub struct ProbeConfig {
    pub dims: NetworkDims,
    pub powers: PowerConfig,
    pub samples: usize,
    pub beta: f64,
    pub gamma: f64,
    pub xi: f64,
    pub seed: u64,
}

impl ProbeConfig {
    pub fn new(
        dims: NetworkDims,
        powers: PowerConfig,
        samples: usize,
        beta: f64,
        gamma: f64,
        xi: f64,
        seed: u64,
    ) -> Result<Self> {
        if samples < MIN_SAMPLES {
            return Err(Error::contract(format!(
                "at least {MIN_SAMPLES} samples required, got {samples}"
            )));
        }
        if !(beta > 0.0 && gamma > 0.0 && xi > 0.0) {
            return Err(Error::contract("probe thresholds must be positive"));
        }
        Ok(Self {
            dims,
            powers,
            samples,
            beta,
            gamma,
            xi,
            seed,
        })
    }

    /// The coupled threshold schedule in the relay count.
    pub fn schedule(
        dims: NetworkDims,
        powers: PowerConfig,
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        let k = dims.relays as f64;
        if dims.relays < 2 {
            return Err(Error::contract("the threshold schedule needs K >= 2"));
        }
        let ln_k = k.ln();
        Self::new(
            dims,
            powers,
            samples,
            1.0 / ln_k,
            2.0 * ln_k / k,
            k / (ln_k * ln_k),
            seed,
        )
    }

    pub fn delta(&self) -> f64 {
        self.gamma / self.beta
    }
}

/// Result of a distribution goodness-of-fit check.
#[derive(Debug, Clone, Copy)]
pub struct DistCheckReport {
    /// Kolmogorov-Smirnov sup-distance.
    pub statistic: f64,
    pub samples: usize,
    /// Critical value the statistic was compared against.
    pub threshold: f64,
    pub pass: bool,
    pub empirical_mean: f64,
    pub empirical_var: f64,
}

fn dist_report(values: &[f64], cdf: impl Fn(f64) -> f64) -> DistCheckReport {
    let statistic = ks_statistic(values, cdf);
    let threshold = ks_critical_1pct(values.len());
    let mean = pairwise_sum(values) / values.len() as f64;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (values.len().max(2) - 1) as f64;
    DistCheckReport {
        statistic,
        samples: values.len(),
        threshold,
        pass: statistic < threshold,
        empirical_mean: mean,
        empirical_var: var,
    }
}

/// Checks that the squared norm of one column of one relay block of the
/// stacked uplink's left singular factor follows Beta(N, NK - N).
///
/// One value is taken per realization (block 0, column 0) so the samples
/// are independent.
pub fn check_unitary_block_norm_dist(
    dims: NetworkDims,
    samples: usize,
    seed: u64,
) -> Result<DistCheckReport> {
    if dims.relays < 2 {
        return Err(Error::contract(
            "block-norm distribution check needs K >= 2 (the single-block norm is constant)",
        ));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::contract(format!(
            "at least {MIN_SAMPLES} samples required"
        )));
    }
    let values = run_trials(samples, 1, |i| {
        let real = sample_realization(dims, mix_seed(seed, i as u64));
        let svd = uplink_svd(&real)?;
        let block = &svd.u_blocks[0];
        Ok((0..block.rows())
            .map(|r| block.at(r, 0).norm_sqr())
            .sum::<f64>())
    })?;
    let a = dims.relay_antennas as f64;
    let b = (dims.relays * dims.relay_antennas - dims.relay_antennas) as f64;
    Ok(dist_report(&values, |x| beta_cdf(x, a, b)))
}

/// Checks that the minimum Gram eigenvalue of an M x M complex Gaussian
/// matrix is Exponential with rate M.
pub fn check_min_eig_exponential(
    m: usize,
    samples: usize,
    seed: u64,
) -> Result<DistCheckReport> {
    if m == 0 {
        return Err(Error::contract("antenna count must be positive"));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::contract(format!(
            "at least {MIN_SAMPLES} samples required"
        )));
    }
    let values = run_trials(samples, 1, |i| {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(mix_seed(seed, i as u64));
        let a = ComplexMatrix::gaussian(m, m, &mut rng);
        min_gram_eigenvalue(&a)
    })?;
    let rate = m as f64;
    Ok(dist_report(&values, |x| exponential_cdf(x, rate)))
}

/// Concentration summary for one aspect-ratio point.
#[derive(Debug, Clone, Copy)]
pub struct ConcentrationPoint {
    pub s: usize,
    /// Mean of `min_gram_eigenvalue / s` across trials.
    pub mean_ratio: f64,
    pub stddev: f64,
}

/// Tracks how the scaled minimum Gram eigenvalue of an r x s Gaussian
/// matrix concentrates at 1 as s grows with r fixed.
pub fn check_min_gram_concentration(
    r: usize,
    s_list: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<ConcentrationPoint>> {
    if r == 0 || r > 4 {
        return Err(Error::contract("row count must be in 1..=4"));
    }
    if trials < MIN_SAMPLES {
        return Err(Error::contract(format!(
            "at least {MIN_SAMPLES} trials required"
        )));
    }
    s_list
        .iter()
        .enumerate()
        .map(|(si, &s)| {
            if s < 10 * r {
                return Err(Error::contract("each s must be at least 10 r"));
            }
            let ratios = run_trials(trials, 1, |t| {
                let mut rng = Xoshiro256PlusPlus::seed_from_u64(mix_seed(
                    seed,
                    (si as u64) << 32 | t as u64,
                ));
                let a = ComplexMatrix::gaussian(r, s, &mut rng);
                Ok(min_gram_eigenvalue(&a)? / s as f64)
            })?;
            let (mean_ratio, stderr) = mean_and_stderr(&ratios);
            Ok(ConcentrationPoint {
                s,
                mean_ratio,
                stddev: stderr * (trials as f64).sqrt(),
            })
        })
        .collect()
}

/// Empirical tail of the interference norm under threshold activation.
#[derive(Debug, Clone, Copy)]
pub struct TailReport {
    pub xi: f64,
    pub exceed: u64,
    pub samples: usize,
    pub probability: f64,
    /// 95% Wilson interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Estimates `P[v > xi]` where `v` is the squared norm of the interference
/// block sum left by deactivated relays at threshold `beta`.
pub fn probe_interference_tail(cfg: &ProbeConfig) -> Result<TailReport> {
    let flags = run_trials(cfg.samples, 1, |i| {
        let real = sample_realization(cfg.dims, mix_seed(cfg.seed, i as u64));
        let plan = compute_plan(&real, &cfg.powers)?;
        let act = icbs_activate(&plan, cfg.beta, &cfg.powers)?;
        let v = interference_norm(&real, &plan, &act);
        Ok(if v > cfg.xi { 1.0 } else { 0.0 })
    })?;
    let exceed = flags.iter().filter(|f| **f > 0.5).count() as u64;
    let probability = exceed as f64 / cfg.samples as f64;
    let (ci_low, ci_high) = wilson_interval(exceed, cfg.samples as u64, 1.96);
    Ok(TailReport {
        xi: cfg.xi,
        exceed,
        samples: cfg.samples,
        probability,
        ci_low,
        ci_high,
    })
}

/// Empirical deactivation and block-norm exceedance frequencies.
#[derive(Debug, Clone, Copy)]
pub struct DeactivationReport {
    /// P[beta_k > beta]: fraction of relay slots that would deactivate.
    pub p_deactivate: f64,
    pub p_deactivate_ci: (f64, f64),
    /// P[||U_k||^2 > gamma].
    pub p_block_norm: f64,
    pub p_block_norm_ci: (f64, f64),
    /// Total relay slots counted (samples * K).
    pub count: u64,
}

/// Counts both indicator events across realizations and relay indices.
pub fn probe_deactivation_prob(cfg: &ProbeConfig) -> Result<DeactivationReport> {
    let k = cfg.dims.relays;
    let per_trial = run_trials(cfg.samples, 1, |i| {
        let real = sample_realization(cfg.dims, mix_seed(cfg.seed, i as u64));
        let plan = compute_plan(&real, &cfg.powers)?;
        let deact = plan
            .beta_loads
            .iter()
            .filter(|b| !(b.is_finite() && **b <= cfg.beta))
            .count() as u64;
        let big_norm = plan
            .svd
            .u_blocks
            .iter()
            .filter(|u| u.frob_norm_sq() > cfg.gamma)
            .count() as u64;
        Ok((deact, big_norm))
    })?;
    let count = (cfg.samples * k) as u64;
    let deact: u64 = per_trial.iter().map(|(d, _)| d).sum();
    let norm: u64 = per_trial.iter().map(|(_, b)| b).sum();
    Ok(DeactivationReport {
        p_deactivate: deact as f64 / count as f64,
        p_deactivate_ci: wilson_interval(deact, count, 1.96),
        p_block_norm: norm as f64 / count as f64,
        p_block_norm_ci: wilson_interval(norm, count, 1.96),
        count,
    })
}
