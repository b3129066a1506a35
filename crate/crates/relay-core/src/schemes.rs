//! Relay beamforming schemes and their per-realization achievable rates.
//!
//! Three amplify-and-forward strategies are implemented:
//!
//! - CBS: every relay applies `alpha * G_k^dagger U_k^H`, where the `U_k`
//!   are the row blocks of the left singular factor of the stacked uplink.
//!   The end-to-end channel diagonalizes and the forwarded noise stays
//!   white; the common gain `alpha` is pinned by the worst-loaded relay.
//! - ICBS: same relay processing, but relays whose load `beta_k` exceeds a
//!   threshold are switched off. The surviving relays share a larger
//!   `alpha` at the cost of an interference term from the missing blocks.
//! - BNOP matched filtering: the classical coherent baseline where each
//!   relay applies `c_k G_k^H H_k^H` at full per-relay power.
//!
//! All rates are in bits per channel use and include the half-duplex
//! factor 1/2.

use num_complex::Complex64;

use crate::channel::{relay_output_power, stack_uplink, ChannelRealization, PowerConfig};
use crate::error::{Error, Result};
use crate::matrix::{
    logdet_hermitian_psd, min_singular_value, pseudo_inverse, svd_thin, ComplexMatrix,
};

/// Uplink SVD data shared by the beamforming schemes and the cut-set bound.
///
/// `u_blocks[k]` is the N x M row block of the left singular factor
/// belonging to relay k, `v` is the M x M right factor used as the transmit
/// precoder, and `lambda` holds the M Gram eigenvalues of the stacked
/// uplink (squared singular values, descending).
#[derive(Debug, Clone)]
pub struct UplinkSvd {
    pub u_blocks: Vec<ComplexMatrix>,
    pub v: ComplexMatrix,
    pub lambda: Vec<f64>,
}

/// Decomposes the stacked uplink channel. `N >= M` keeps the thin rank at
/// exactly M, so each block is N x M.
pub fn uplink_svd(real: &ChannelRealization) -> Result<UplinkSvd> {
    let stack = stack_uplink(real);
    let f = svd_thin(&stack)?;
    let n = real.dims.relay_antennas;
    let u_blocks = (0..real.dims.relays)
        .map(|k| f.u.row_block(k * n, n))
        .collect();
    let lambda = f.sigma.iter().map(|s| s * s).collect();
    Ok(UplinkSvd {
        u_blocks,
        v: f.v,
        lambda,
    })
}

/// Beamforming plan for one realization: uplink factors plus the per-relay
/// loads that drive gain selection and activation.
#[derive(Debug, Clone)]
pub struct BeamformPlan {
    pub svd: UplinkSvd,
    /// `beta_k`: expected relay output power before common scaling.
    /// `+inf` marks a rank-deficient downlink (relay unusable).
    pub beta_loads: Vec<f64>,
}

/// Computes the uplink SVD and every relay load.
pub fn compute_plan(real: &ChannelRealization, powers: &PowerConfig) -> Result<BeamformPlan> {
    let svd = uplink_svd(real)?;
    let beta_loads = (0..real.dims.relays)
        .map(|k| relay_load_from_block(real, &svd.u_blocks[k], k, powers))
        .collect::<Result<Vec<_>>>()?;
    Ok(BeamformPlan { svd, beta_loads })
}

/// Relay load `beta_k = E ||G_k^dagger U_k^H r_k||^2`, in closed form:
/// `trace(T ((P_s/M) H_k H_k^H + I_N) T^H)` with `T = G_k^dagger U_k^H`.
///
/// A downlink whose smallest singular value falls below the rank cutoff
/// yields `+inf`, which deactivates the relay under every scheme.
pub fn relay_load(
    real: &ChannelRealization,
    plan: &BeamformPlan,
    k: usize,
    powers: &PowerConfig,
) -> Result<f64> {
    relay_load_from_block(real, &plan.svd.u_blocks[k], k, powers)
}

fn relay_load_from_block(
    real: &ChannelRealization,
    u_block: &ComplexMatrix,
    k: usize,
    powers: &PowerConfig,
) -> Result<f64> {
    let g = &real.downlinks[k];
    let (sigma_min, cutoff) = min_singular_value(g)?;
    if sigma_min <= cutoff {
        return Ok(f64::INFINITY);
    }
    let t = pseudo_inverse(g)?.mul(&u_block.adjoint());
    Ok(relay_output_power_with(real, k, &t, powers.p_source))
}

/// `trace(F S F^H)` with `S = (P_s/M) H_k H_k^H + I_N`; shared with the
/// public closed form in `channel`.
fn relay_output_power_with(
    real: &ChannelRealization,
    k: usize,
    f_k: &ComplexMatrix,
    p_source: f64,
) -> f64 {
    relay_output_power(real, k, f_k, p_source)
}

/// Common CBS gain: `alpha = sqrt(P_r / max_k beta_k)`, which saturates the
/// output power of the worst-loaded relay and keeps every other relay
/// within budget.
pub fn cbs_gain(plan: &BeamformPlan, powers: &PowerConfig) -> Result<f64> {
    let max = plan.beta_loads.iter().cloned().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Err(Error::contract(
            "all relay loads are zero; the uplink stack is degenerate",
        ));
    }
    Ok((powers.p_relay / max).sqrt())
}

/// Outcome of threshold activation: the surviving relay indices and the
/// common gain they share. An empty set is a valid outcome (every load
/// exceeded the threshold); the scheme then contributes rate zero.
#[derive(Debug, Clone)]
pub struct Activation {
    pub active: Vec<usize>,
    pub alpha: f64,
}

impl Activation {
    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }
}

/// Activates the relays with `beta_k <= beta_threshold` (infinite loads
/// never activate) and sets `alpha = sqrt(P_r / max_active beta_k)`, the
/// tight choice that still satisfies `alpha >= sqrt(P_r / beta_threshold)`.
pub fn icbs_activate(
    plan: &BeamformPlan,
    beta_threshold: f64,
    powers: &PowerConfig,
) -> Result<Activation> {
    if beta_threshold <= 0.0 || beta_threshold.is_nan() {
        return Err(Error::contract("beta threshold must be positive"));
    }
    let active: Vec<usize> = plan
        .beta_loads
        .iter()
        .enumerate()
        .filter(|(_, b)| b.is_finite() && **b <= beta_threshold)
        .map(|(k, _)| k)
        .collect();
    if active.is_empty() {
        return Ok(Activation {
            active,
            alpha: 0.0,
        });
    }
    let max = active
        .iter()
        .map(|&k| plan.beta_loads[k])
        .fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Err(Error::contract("active relay loads are all zero"));
    }
    Ok(Activation {
        active,
        alpha: (powers.p_relay / max).sqrt(),
    })
}

/// Threshold schedule `beta = 1 / ln K`; a single relay gets an infinite
/// threshold so the incremental scheme degenerates to CBS.
pub fn default_threshold(relays: usize) -> f64 {
    if relays <= 1 {
        f64::INFINITY
    } else {
        1.0 / (relays as f64).ln()
    }
}

/// CBS rate for a given eigenvalue profile and gain:
/// `(1/2) sum_i log2(1 + (alpha^2/(1+alpha^2)) (P_s/M) lambda_i)`.
///
/// Exact because the CBS end-to-end channel is diagonal with white noise of
/// variance `1 + alpha^2` per stream.
pub fn cbs_rate_for_gain(lambda: &[f64], alpha: f64, p_source: f64) -> f64 {
    let m = lambda.len() as f64;
    let eff = alpha * alpha / (1.0 + alpha * alpha) * (p_source / m);
    0.5 * lambda
        .iter()
        .map(|l| (1.0 + eff * l).log2())
        .sum::<f64>()
}

/// Per-realization CBS achievable rate.
pub fn rate_cbs(real: &ChannelRealization, powers: &PowerConfig) -> Result<f64> {
    let plan = compute_plan(real, powers)?;
    rate_cbs_from_plan(&plan, powers)
}

pub fn rate_cbs_from_plan(plan: &BeamformPlan, powers: &PowerConfig) -> Result<f64> {
    let alpha = cbs_gain(plan, powers)?;
    Ok(cbs_rate_for_gain(&plan.svd.lambda, alpha, powers.p_source))
}

/// Per-realization ICBS achievable rate at a fixed activation threshold.
pub fn rate_icbs(
    real: &ChannelRealization,
    powers: &PowerConfig,
    beta_threshold: f64,
) -> Result<f64> {
    let plan = compute_plan(real, powers)?;
    let act = icbs_activate(&plan, beta_threshold, powers)?;
    rate_icbs_from_plan(real, &plan, &act, powers)
}

/// ICBS rate from precomputed parts:
/// `(1/2) log2 |I_M + alpha^2 (P_s/M) H* H*^H P_n*^{-1}|` with
/// `H* = Lambda^{1/2} - sum_{k off} U_k^H H_k V` and
/// `P_n* = alpha^2 sum_{k on} U_k^H U_k + I_M`.
pub fn rate_icbs_from_plan(
    real: &ChannelRealization,
    plan: &BeamformPlan,
    act: &Activation,
    powers: &PowerConfig,
) -> Result<f64> {
    if act.is_empty() {
        return Ok(0.0);
    }
    let m = real.dims.tx_antennas;
    let alpha_sq = act.alpha * act.alpha;

    let mut active_mask = vec![false; real.dims.relays];
    for &k in &act.active {
        active_mask[k] = true;
    }

    let mut h_star = ComplexMatrix::diag(
        &plan
            .svd
            .lambda
            .iter()
            .map(|l| l.sqrt())
            .collect::<Vec<_>>(),
    );
    let mut noise = ComplexMatrix::identity(m);
    for k in 0..real.dims.relays {
        let u_k = &plan.svd.u_blocks[k];
        if active_mask[k] {
            noise = noise.add(&u_k.adjoint().mul(u_k).scaled_re(alpha_sq));
        } else {
            let term = u_k.adjoint().mul(&real.uplinks[k]).mul(&plan.svd.v);
            h_star = h_star.sub(&term);
        }
    }

    let signal = h_star
        .mul(&h_star.adjoint())
        .scaled_re(alpha_sq * powers.p_source / m as f64);
    let total = logdet_hermitian_psd(&noise.add(&signal))?;
    let base = logdet_hermitian_psd(&noise)?;
    Ok(0.5 * (total - base) / std::f64::consts::LN_2)
}

/// Squared Frobenius norm of the interference block sum
/// `|| sum_{k off} U_k^H H_k ||^2` left behind by deactivation.
pub fn interference_norm(
    real: &ChannelRealization,
    plan: &BeamformPlan,
    act: &Activation,
) -> f64 {
    let m = real.dims.tx_antennas;
    let mut active_mask = vec![false; real.dims.relays];
    for &k in &act.active {
        active_mask[k] = true;
    }
    let mut sum = ComplexMatrix::zeros(m, m);
    for k in 0..real.dims.relays {
        if active_mask[k] {
            continue;
        }
        sum = sum.add(&plan.svd.u_blocks[k].adjoint().mul(&real.uplinks[k]));
    }
    sum.frob_norm_sq()
}

/// Builds the explicit CBS relay matrices `alpha G_k^dagger U_k^H`.
pub fn cbs_relay_matrices(
    real: &ChannelRealization,
    plan: &BeamformPlan,
    powers: &PowerConfig,
) -> Result<(Vec<ComplexMatrix>, f64)> {
    let alpha = cbs_gain(plan, powers)?;
    let mats = (0..real.dims.relays)
        .map(|k| {
            pseudo_inverse(&real.downlinks[k]).map(|pinv| {
                pinv.mul(&plan.svd.u_blocks[k].adjoint())
                    .scaled(Complex64::new(alpha, 0.0))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((mats, alpha))
}

/// Builds the explicit ICBS relay matrices; deactivated relays get zero.
pub fn icbs_relay_matrices(
    real: &ChannelRealization,
    plan: &BeamformPlan,
    act: &Activation,
) -> Result<Vec<ComplexMatrix>> {
    let n = real.dims.relay_antennas;
    let mut active_mask = vec![false; real.dims.relays];
    for &k in &act.active {
        active_mask[k] = true;
    }
    (0..real.dims.relays)
        .map(|k| {
            if !active_mask[k] {
                return Ok(ComplexMatrix::zeros(n, n));
            }
            pseudo_inverse(&real.downlinks[k]).map(|pinv| {
                pinv.mul(&plan.svd.u_blocks[k].adjoint())
                    .scaled(Complex64::new(act.alpha, 0.0))
            })
        })
        .collect()
}

/// BNOP matched filtering: `F_k = c_k G_k^H H_k^H` with `c_k` saturating
/// each relay's expected output power at `P_r`. The transmitter sends a
/// white signal (no precoding).
///
/// The rate follows the baseline's reception model: the receiver knows the
/// per-antenna signal power and interference-plus-noise power, so each
/// antenna decodes its own stream and the cross-stream terms of the
/// non-diagonal effective channel count as noise,
/// `(1/2) sum_i log2(1 + SINR_i)`. The interference grows with the signal
/// power, which is what caps this scheme's high-SNR slope.
pub fn bnop_matched_filter(
    real: &ChannelRealization,
    powers: &PowerConfig,
) -> Result<(Vec<ComplexMatrix>, f64)> {
    let mats: Vec<ComplexMatrix> = (0..real.dims.relays)
        .map(|k| {
            let raw = real.downlinks[k].adjoint().mul(&real.uplinks[k].adjoint());
            let power = relay_output_power(real, k, &raw, powers.p_source);
            if power > 0.0 {
                raw.scaled_re((powers.p_relay / power).sqrt())
            } else {
                // Degenerate zero channel: the relay stays silent.
                raw.scaled_re(0.0)
            }
        })
        .collect();
    let eff = crate::channel::end_to_end(real, &mats, powers.p_source)?;
    let m = real.dims.tx_antennas;
    let mut rate = 0.0;
    for i in 0..m {
        let signal = eff.input_cov_scale * eff.h_eff.at(i, i).norm_sqr();
        let interference: f64 = (0..m)
            .filter(|j| *j != i)
            .map(|j| eff.input_cov_scale * eff.h_eff.at(i, j).norm_sqr())
            .sum();
        let noise = eff.noise_cov.at(i, i).re;
        rate += 0.5 * (1.0 + signal / (interference + noise)).log2();
    }
    Ok((mats, rate))
}

/// Picks the activation threshold that maximizes the per-realization ICBS
/// rate, scanning the K candidate thresholds `beta_(1) <= ... <= beta_(K)`
/// (activating the j best-loaded relays for each j). This is the adaptive
/// operating mode used by the experiment sweeps, where a single fixed
/// threshold cannot serve every (K, P) point; the asymptotic schedule
/// `1/ln K` remains available through [`default_threshold`].
pub fn icbs_best_threshold(
    real: &ChannelRealization,
    plan: &BeamformPlan,
    powers: &PowerConfig,
) -> Result<f64> {
    let m = real.dims.tx_antennas;
    let mut candidates: Vec<f64> = plan
        .beta_loads
        .iter()
        .copied()
        .filter(|b| b.is_finite())
        .collect();
    if candidates.is_empty() {
        return Ok(f64::INFINITY);
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();

    let mut order: Vec<usize> = (0..plan.beta_loads.len())
        .filter(|&k| plan.beta_loads[k].is_finite())
        .collect();
    order.sort_by(|&a, &b| plan.beta_loads[a].partial_cmp(&plan.beta_loads[b]).unwrap());

    // Incrementally grow the active set in load order. The signal term is
    // assembled from the active side: sum_{k on} U_k^H H_k V equals
    // Lambda^{1/2} minus the interference sum.
    let mut sum_uu = ComplexMatrix::zeros(m, m);
    let mut h_active = ComplexMatrix::zeros(m, m);
    let mut best_rate = f64::NEG_INFINITY;
    let mut best_threshold = candidates[0];
    let mut next = 0usize;
    for &threshold in &candidates {
        while next < order.len() && plan.beta_loads[order[next]] <= threshold {
            let k = order[next];
            let u_k = &plan.svd.u_blocks[k];
            sum_uu = sum_uu.add(&u_k.adjoint().mul(u_k));
            h_active = h_active.add(&u_k.adjoint().mul(&real.uplinks[k]).mul(&plan.svd.v));
            next += 1;
        }
        if threshold <= 0.0 {
            continue;
        }
        let alpha_sq = powers.p_relay / threshold;
        let noise = sum_uu
            .scaled_re(alpha_sq)
            .add(&ComplexMatrix::identity(m));
        let signal = h_active
            .mul(&h_active.adjoint())
            .scaled_re(alpha_sq * powers.p_source / m as f64);
        let rate =
            0.5 * (logdet_hermitian_psd(&noise.add(&signal))? - logdet_hermitian_psd(&noise)?)
                / std::f64::consts::LN_2;
        if rate > best_rate {
            best_rate = rate;
            best_threshold = threshold;
        }
    }
    Ok(best_threshold)
}
