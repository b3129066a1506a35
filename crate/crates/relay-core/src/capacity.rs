//! Cut-set upper bound on the network rate and the closed-form anchors it
//! converges to.
//!
//! The bound is half the point-to-point capacity of the stacked uplink:
//! water-filling over the Gram eigenvalues of the NK x M compound channel.
//! `cu_star` is the analytic ceiling `(M/2) log2(1 + KNP/M)` and `r_s` the
//! growth anchor `(M/2) log2(KNP/M)`; their difference vanishes as K grows.

use crate::channel::{sample_realization, ChannelRealization, NetworkDims};
use crate::error::Result;
use crate::exec::{mean_and_stderr, run_trials};
use crate::matrix::water_fill;
use crate::rng::mix_seed;
use crate::schemes::uplink_svd;

/// Monte Carlo estimate of a rate or bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    /// Sample mean, bits per channel use.
    pub mean: f64,
    /// Standard error of the mean.
    pub stderr: f64,
    pub trials: u64,
}

/// Classification of the bound values produced by this module.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    CutSetRealization,
    CutSetErgodic,
    ClosedFormCuStar,
    RateAnchor,
}

/// A bound value paired with what it is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValue {
    pub value: f64,
    pub kind: BoundKind,
}

/// Per-realization cut-set rate: water-fill the source power over the
/// uplink Gram eigenvalues, `(1/2) sum_i log2(1 + lambda_i p_i)`.
pub fn cut_set_rate(real: &ChannelRealization, p_source: f64) -> Result<f64> {
    let svd = uplink_svd(real)?;
    cut_set_rate_from_gains(&svd.lambda, p_source)
}

/// Cut-set rate from precomputed eigenvalues (shared with the sweeps so a
/// single SVD serves all schemes on a paired realization).
pub fn cut_set_rate_from_gains(lambda: &[f64], p_source: f64) -> Result<f64> {
    // Zero eigenvalues carry no rate and would break the water-filler's
    // positivity contract; they receive no power by optimality anyway.
    let positive: Vec<f64> = lambda.iter().copied().filter(|l| *l > 0.0).collect();
    if positive.is_empty() {
        return Ok(0.0);
    }
    let powers = water_fill(&positive, p_source)?;
    Ok(0.5
        * positive
            .iter()
            .zip(&powers)
            .map(|(l, p)| (1.0 + l * p).log2())
            .sum::<f64>())
}

/// Closed-form ceiling `(M/2) log2(1 + K N P / M)`.
pub fn closed_form_cu_star(dims: NetworkDims, p_source: f64) -> f64 {
    let m = dims.tx_antennas as f64;
    let kn = (dims.relays * dims.relay_antennas) as f64;
    0.5 * m * (1.0 + kn * p_source / m).log2()
}

/// Growth anchor `(M/2) log2(K N P / M)`. May be negative for tiny powers;
/// it is an asymptote, not an achievable rate.
pub fn r_s(dims: NetworkDims, p_source: f64) -> f64 {
    let m = dims.tx_antennas as f64;
    let kn = (dims.relays * dims.relay_antennas) as f64;
    0.5 * m * (kn * p_source / m).log2()
}

/// Monte Carlo average of a per-realization evaluator over `trials`
/// independent channel draws. Trial t sees the realization seeded with
/// `mix_seed(seed, t)`, so the estimate is reproducible for any worker
/// count and any evaluation order.
pub fn ergodic_average<F>(
    dims: NetworkDims,
    trials: u64,
    seed: u64,
    workers: usize,
    eval: F,
) -> Result<RateEstimate>
where
    F: Fn(&ChannelRealization) -> Result<f64> + Sync,
{
    let samples = run_trials(trials as usize, workers, |t| {
        let real = sample_realization(dims, mix_seed(seed, t as u64));
        eval(&real)
    })?;
    let (mean, stderr) = mean_and_stderr(&samples);
    Ok(RateEstimate {
        mean,
        stderr,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::stack_uplink;
    use crate::matrix::ComplexMatrix;

    fn dims(k: usize, m: usize, n: usize) -> NetworkDims {
        NetworkDims::new(k, m, n).unwrap()
    }

    #[test]
    fn cut_set_single_stream() {
        // M = 1: the lone eigenvalue is ||h||^2 and gets the whole budget.
        let d = dims(3, 1, 2);
        let real = sample_realization(d, 5);
        let h = stack_uplink(&real);
        let expect = 0.5 * (1.0 + 10.0 * h.frob_norm_sq()).log2();
        let got = cut_set_rate(&real, 10.0).unwrap();
        assert!((got - expect).abs() < 1e-9, "{got} vs {expect}");
    }

    #[test]
    fn cut_set_equal_gains_split_evenly() {
        let rate = cut_set_rate_from_gains(&[3.0, 3.0], 4.0).unwrap();
        let expect = (1.0f64 + 3.0 * 2.0).log2(); // 2 * (1/2) log2(1 + 3 * 2)
        assert!((rate - expect).abs() < 1e-12);
    }

    #[test]
    fn cut_set_beats_uniform_allocation() {
        let d = dims(8, 2, 2);
        for t in 0..10 {
            let real = sample_realization(d, mix_seed(61, t));
            let svd = uplink_svd(&real).unwrap();
            let got = cut_set_rate(&real, 10.0).unwrap();
            let uniform: f64 = 0.5
                * svd
                    .lambda
                    .iter()
                    .map(|l| (1.0 + l * 10.0 / 2.0).log2())
                    .sum::<f64>();
            assert!(got + 1e-12 >= uniform, "trial {t}: {got} < uniform {uniform}");
        }
    }

    #[test]
    fn cut_set_zero_channel() {
        let d = dims(1, 2, 2);
        let mut real = sample_realization(d, 9);
        real.uplinks[0] = ComplexMatrix::zeros(2, 2);
        assert_eq!(cut_set_rate(&real, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn cu_star_examples() {
        let d = dims(10, 2, 2);
        let got = closed_form_cu_star(d, 10.0);
        assert!((got - 101f64.log2()).abs() < 1e-12);
        assert_eq!(closed_form_cu_star(d, 0.0000), 0.0);
        // K N P / M = 1 gives M/2 bits.
        let d2 = dims(1, 2, 2);
        assert!((closed_form_cu_star(d2, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn r_s_examples_and_gap_identity() {
        let d1 = dims(1, 2, 2);
        assert!(r_s(d1, 1.0).abs() < 1e-12); // KNP/M = 1
        assert!((r_s(d1, 2.0) - 1.0).abs() < 1e-12); // KNP/M = 2
        let d = dims(10, 2, 2);
        assert!((r_s(d, 10.0) - 100f64.log2()).abs() < 1e-12);

        // cu_star - r_s = (M/2) log2(1 + M/(KNP)), monotone to zero in K.
        let mut last = f64::INFINITY;
        for k in [2usize, 4, 8, 16, 64] {
            let dk = dims(k, 2, 2);
            let gap = closed_form_cu_star(dk, 10.0) - r_s(dk, 10.0);
            let expect = (1.0 + 2.0 / (k as f64 * 2.0 * 10.0)).log2();
            assert!((gap - expect).abs() < 1e-12);
            assert!(gap < last);
            last = gap;
        }
    }

    #[test]
    fn cut_set_monotone_in_appended_relays() {
        // Extending a draw with one more relay can only raise the bound.
        let d_small = dims(3, 2, 2);
        let d_big = dims(4, 2, 2);
        for t in 0..10 {
            let big = sample_realization(d_big, mix_seed(71, t));
            let small = ChannelRealization {
                dims: d_small,
                uplinks: big.uplinks[..3].to_vec(),
                downlinks: big.downlinks[..3].to_vec(),
            };
            let r_small = cut_set_rate(&small, 10.0).unwrap();
            let r_big = cut_set_rate(&big, 10.0).unwrap();
            assert!(r_big + 1e-12 >= r_small, "trial {t}: {r_big} < {r_small}");
        }
    }

    #[test]
    fn ergodic_average_constant_and_closed_form() {
        let d = dims(2, 2, 2);
        let est = ergodic_average(d, 50, 1, 1, |_| Ok(2.5)).unwrap();
        assert_eq!(est.mean, 2.5);
        assert_eq!(est.stderr, 0.0);

        let anchor = closed_form_cu_star(d, 10.0);
        let est = ergodic_average(d, 20, 1, 1, |_| Ok(anchor)).unwrap();
        assert_eq!(est.mean, anchor);
    }

    #[test]
    fn ergodic_cut_set_below_cu_star() {
        let d = dims(10, 2, 2);
        let est = ergodic_average(d, 2000, 7, 4, |real| cut_set_rate(real, 10.0)).unwrap();
        let ceiling = closed_form_cu_star(d, 10.0);
        assert!(
            est.mean <= ceiling + 3.0 * est.stderr,
            "ergodic mean {} above ceiling {ceiling}",
            est.mean
        );
    }

    #[test]
    fn ergodic_average_worker_invariance() {
        let d = dims(4, 2, 2);
        let a = ergodic_average(d, 200, 3, 1, |real| cut_set_rate(real, 10.0)).unwrap();
        let b = ergodic_average(d, 200, 3, 7, |real| cut_set_rate(real, 10.0)).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn per_realization_chain_inequality() {
        // cut_set <= (M/2) log2(1 + P ||H||_F^2 / M).
        let d = dims(6, 2, 2);
        for t in 0..10 {
            let real = sample_realization(d, mix_seed(81, t));
            let rate = cut_set_rate(&real, 10.0).unwrap();
            let h = stack_uplink(&real);
            let cap = 0.5 * 2.0 * (1.0 + 10.0 * h.frob_norm_sq() / 2.0).log2();
            assert!(rate <= cap + 1e-9, "trial {t}: {rate} > {cap}");
        }
    }
}
