//! Network dimensions, fading realizations, and the generic end-to-end
//! amplify-and-forward channel.
//!
//! A realization is one draw of the K uplink matrices `H_k` (N x M) and the
//! K downlink matrices `G_k` (M x N), all with i.i.d. CN(0,1) entries. Any
//! choice of relay matrices `F_k` then collapses the two-hop network into an
//! equivalent point-to-point channel with colored noise.

use crate::error::{Error, Result};
use crate::matrix::{logdet_hermitian_psd, ComplexMatrix};
use crate::rng::Xoshiro256PlusPlus;

/// Node counts and antenna counts. The transmitter and receiver carry M
/// antennas each, every one of the K relays carries N >= M.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkDims {
    pub relays: usize,
    pub tx_antennas: usize,
    pub relay_antennas: usize,
}

impl NetworkDims {
    pub fn new(relays: usize, tx_antennas: usize, relay_antennas: usize) -> Result<Self> {
        if relays == 0 || tx_antennas == 0 || relay_antennas == 0 {
            return Err(Error::contract("network dimensions must be positive"));
        }
        if relay_antennas < tx_antennas {
            return Err(Error::contract(
                "relay antenna count N must be at least the terminal antenna count M",
            ));
        }
        Ok(Self {
            relays,
            tx_antennas,
            relay_antennas,
        })
    }
}

/// Source and relay transmit power constraints, linear scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConfig {
    pub p_source: f64,
    pub p_relay: f64,
}

impl PowerConfig {
    pub fn new(p_source: f64, p_relay: f64) -> Result<Self> {
        if !(p_source > 0.0 && p_relay > 0.0) || !p_source.is_finite() || !p_relay.is_finite() {
            return Err(Error::contract("powers must be finite and positive"));
        }
        Ok(Self { p_source, p_relay })
    }

    /// Equal source and relay power, the default operating point.
    pub fn equal(p: f64) -> Result<Self> {
        Self::new(p, p)
    }
}

/// One draw of all channel matrices.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub dims: NetworkDims,
    /// K uplink matrices, each N x M.
    pub uplinks: Vec<ComplexMatrix>,
    /// K downlink matrices, each M x N.
    pub downlinks: Vec<ComplexMatrix>,
}

/// Samples a realization deterministically from a seed.
///
/// Draw order is fixed: `H_1 .. H_K` then `G_1 .. G_K`, each filled
/// row-major, so a given `(dims, seed)` pair is bit-reproducible across
/// runs and worker counts.
pub fn sample_realization(dims: NetworkDims, seed: u64) -> ChannelRealization {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let uplinks = (0..dims.relays)
        .map(|_| ComplexMatrix::gaussian(dims.relay_antennas, dims.tx_antennas, &mut rng))
        .collect();
    let downlinks = (0..dims.relays)
        .map(|_| ComplexMatrix::gaussian(dims.tx_antennas, dims.relay_antennas, &mut rng))
        .collect();
    ChannelRealization {
        dims,
        uplinks,
        downlinks,
    }
}

/// Stacks the uplink blocks into the NK x M compound channel.
pub fn stack_uplink(real: &ChannelRealization) -> ComplexMatrix {
    let refs: Vec<&ComplexMatrix> = real.uplinks.iter().collect();
    ComplexMatrix::stack_rows(&refs)
}

/// The equivalent point-to-point channel induced by a set of relay
/// matrices: `y = h_eff x + (colored noise)`.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    /// M x M equivalent channel.
    pub h_eff: ComplexMatrix,
    /// M x M noise covariance; always `I_M` plus a PSD forwarding term.
    pub noise_cov: ComplexMatrix,
    /// Per-stream transmit power (P_s / M for the white input used here).
    pub input_cov_scale: f64,
}

impl EffectiveChannel {
    /// Mutual information of the equivalent channel in bits per channel
    /// use, including the half-duplex factor 1/2:
    /// `(1/2) log2 |I + s h h^H noise_cov^{-1}|`, evaluated stably as a
    /// difference of two Cholesky log-determinants.
    pub fn mutual_information_bits(&self) -> Result<f64> {
        let m = self.h_eff.rows();
        let signal = self
            .h_eff
            .mul(&self.h_eff.adjoint())
            .scaled_re(self.input_cov_scale);
        debug_assert_eq!(signal.rows(), m);
        let total = logdet_hermitian_psd(&self.noise_cov.add(&signal))?;
        let noise = logdet_hermitian_psd(&self.noise_cov)?;
        Ok(0.5 * (total - noise) / std::f64::consts::LN_2)
    }
}

/// Assembles the end-to-end channel for arbitrary N x N relay matrices:
/// `h_eff = sum_k G_k F_k H_k`,
/// `noise_cov = I_M + sum_k (G_k F_k)(G_k F_k)^H`.
pub fn end_to_end(
    real: &ChannelRealization,
    relay_mats: &[ComplexMatrix],
    p_source: f64,
) -> Result<EffectiveChannel> {
    let dims = real.dims;
    if relay_mats.len() != dims.relays {
        return Err(Error::contract(format!(
            "expected {} relay matrices, got {}",
            dims.relays,
            relay_mats.len()
        )));
    }
    let n = dims.relay_antennas;
    for f in relay_mats {
        if f.rows() != n || f.cols() != n {
            return Err(Error::contract(format!(
                "relay matrices must be {n}x{n}, got {}x{}",
                f.rows(),
                f.cols()
            )));
        }
    }

    let m = dims.tx_antennas;
    let mut h_eff = ComplexMatrix::zeros(m, m);
    let mut noise_cov = ComplexMatrix::identity(m);
    for k in 0..dims.relays {
        let gf = real.downlinks[k].mul(&relay_mats[k]);
        h_eff = h_eff.add(&gf.mul(&real.uplinks[k]));
        noise_cov = noise_cov.add(&gf.mul(&gf.adjoint()));
    }
    Ok(EffectiveChannel {
        h_eff,
        noise_cov,
        input_cov_scale: p_source / m as f64,
    })
}

/// Expected output power of relay k under matrix `f_k` and white per-stream
/// input covariance (P_s / M) I:
/// `trace(F_k ((P_s/M) H_k H_k^H + I_N) F_k^H)`.
pub fn relay_output_power(
    real: &ChannelRealization,
    k: usize,
    f_k: &ComplexMatrix,
    p_source: f64,
) -> f64 {
    let h = &real.uplinks[k];
    let n = real.dims.relay_antennas;
    let m = real.dims.tx_antennas;
    let rx_cov = h
        .mul(&h.adjoint())
        .scaled_re(p_source / m as f64)
        .add(&ComplexMatrix::identity(n));
    f_k.mul(&rx_cov).mul(&f_k.adjoint()).trace().re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::mix_seed;
    use num_complex::Complex64;

    #[test]
    fn sampling_is_deterministic_and_seed_sensitive() {
        let dims = NetworkDims::new(1, 1, 1).unwrap();
        let a = sample_realization(dims, 7);
        let b = sample_realization(dims, 7);
        assert_eq!(a.uplinks[0].at(0, 0), b.uplinks[0].at(0, 0));
        assert_eq!(a.downlinks[0].at(0, 0), b.downlinks[0].at(0, 0));

        let c = sample_realization(dims, 8);
        assert_ne!(a.uplinks[0].at(0, 0), c.uplinks[0].at(0, 0));
    }

    #[test]
    fn entry_second_moment_is_one() {
        let dims = NetworkDims::new(2, 2, 2).unwrap();
        let trials = 12_500; // 8 uplink entries per draw -> 1e5 samples
        let mut sum = 0.0;
        let mut count = 0usize;
        for t in 0..trials {
            let r = sample_realization(dims, mix_seed(42, t));
            for h in &r.uplinks {
                sum += h.frob_norm_sq();
                count += h.rows() * h.cols();
            }
        }
        let mean = sum / count as f64;
        assert!((mean - 1.0).abs() < 0.02, "E|h|^2 = {mean}");
    }

    #[test]
    fn stack_uplink_places_blocks_in_order() {
        let dims = NetworkDims::new(2, 2, 2).unwrap();
        let mut real = sample_realization(dims, 3);
        real.uplinks[0] = ComplexMatrix::zeros(2, 2);
        real.uplinks[1] = ComplexMatrix::identity(2);
        let s = stack_uplink(&real);
        assert_eq!(s.rows(), 4);
        assert_eq!(s.at(0, 0).re, 0.0);
        assert_eq!(s.at(2, 0).re, 1.0);
        assert_eq!(s.at(3, 1).re, 1.0);
    }

    #[test]
    fn stack_uplink_norm_identity() {
        let dims = NetworkDims::new(3, 2, 3).unwrap();
        let real = sample_realization(dims, 11);
        let s = stack_uplink(&real);
        let sum: f64 = real.uplinks.iter().map(|h| h.frob_norm_sq()).sum();
        assert!((s.frob_norm_sq() - sum).abs() < 1e-10 * sum);
    }

    #[test]
    fn end_to_end_silent_relays() {
        let dims = NetworkDims::new(2, 2, 2).unwrap();
        let real = sample_realization(dims, 5);
        let zeros = vec![ComplexMatrix::zeros(2, 2); 2];
        let eff = end_to_end(&real, &zeros, 10.0).unwrap();
        assert_eq!(eff.h_eff.frob_norm(), 0.0);
        let err = eff.noise_cov.sub(&ComplexMatrix::identity(2)).frob_norm();
        assert_eq!(err, 0.0);
        assert_eq!(eff.mutual_information_bits().unwrap(), 0.0);
    }

    #[test]
    fn end_to_end_scalar_case() {
        let dims = NetworkDims::new(1, 1, 1).unwrap();
        let real = sample_realization(dims, 21);
        let h = real.uplinks[0].at(0, 0);
        let g = real.downlinks[0].at(0, 0);
        let f = Complex64::new(0.8, -0.3);
        let fm = ComplexMatrix::new(1, 1, vec![f]).unwrap();
        let eff = end_to_end(&real, std::slice::from_ref(&fm), 4.0).unwrap();
        assert!((eff.h_eff.at(0, 0) - g * f * h).norm() < 1e-14);
        let expect = 1.0 + (g * f).norm_sqr();
        assert!((eff.noise_cov.at(0, 0).re - expect).abs() < 1e-14);
    }

    #[test]
    fn end_to_end_rejects_bad_shapes() {
        let dims = NetworkDims::new(2, 2, 2).unwrap();
        let real = sample_realization(dims, 5);
        let bad = vec![ComplexMatrix::zeros(1, 1); 2];
        assert!(end_to_end(&real, &bad, 1.0).is_err());
        let short = vec![ComplexMatrix::zeros(2, 2)];
        assert!(end_to_end(&real, &short, 1.0).is_err());
    }

    #[test]
    fn relay_power_pure_noise_forwarding() {
        let dims = NetworkDims::new(1, 2, 3).unwrap();
        let mut real = sample_realization(dims, 9);
        real.uplinks[0] = ComplexMatrix::zeros(3, 2);
        let f = ComplexMatrix::identity(3);
        let p = relay_output_power(&real, 0, &f, 10.0);
        assert!((p - 3.0).abs() < 1e-12, "forwarded noise power {p}");
        assert_eq!(relay_output_power(&real, 0, &ComplexMatrix::zeros(3, 3), 10.0), 0.0);
    }

    #[test]
    fn relay_power_scales_quadratically() {
        let dims = NetworkDims::new(1, 2, 2).unwrap();
        let real = sample_realization(dims, 31);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(32);
        let f = ComplexMatrix::gaussian(2, 2, &mut rng);
        let p1 = relay_output_power(&real, 0, &f, 5.0);
        let p2 = relay_output_power(&real, 0, &f.scaled_re(2.0), 5.0);
        assert!((p2 - 4.0 * p1).abs() < 1e-12 * p2.abs());
        assert!(p1 >= 0.0);
    }

    #[test]
    fn relay_power_matches_monte_carlo() {
        // Oracle: direct expectation of ||F (H x + n)||^2 over samples.
        let dims = NetworkDims::new(1, 2, 2).unwrap();
        let real = sample_realization(dims, 77);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(78);
        let f = ComplexMatrix::gaussian(2, 2, &mut rng);
        let p_source = 6.0;
        let closed = relay_output_power(&real, 0, &f, p_source);

        let scale = (p_source / 2.0).sqrt();
        let samples = 100_000;
        let mut acc = 0.0;
        for _ in 0..samples {
            let x = ComplexMatrix::gaussian(2, 1, &mut rng).scaled_re(scale);
            let n = ComplexMatrix::gaussian(2, 1, &mut rng);
            let out = f.mul(&real.uplinks[0].mul(&x).add(&n));
            acc += out.frob_norm_sq();
        }
        let mc = acc / samples as f64;
        assert!(
            (mc - closed).abs() < 0.02 * closed,
            "mc {mc} vs closed form {closed}"
        );
    }

    #[test]
    fn noise_cov_minus_identity_is_psd() {
        let dims = NetworkDims::new(3, 2, 2).unwrap();
        for t in 0..20 {
            let real = sample_realization(dims, mix_seed(5, t));
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(mix_seed(6, t));
            let mats: Vec<ComplexMatrix> =
                (0..3).map(|_| ComplexMatrix::gaussian(2, 2, &mut rng)).collect();
            let eff = end_to_end(&real, &mats, 10.0).unwrap();
            let excess = eff.noise_cov.sub(&ComplexMatrix::identity(2));
            // Smallest eigenvalue of a PSD Hermitian matrix equals its
            // smallest singular value.
            let min_eig = crate::matrix::min_gram_eigenvalue(&excess).unwrap().sqrt();
            let g = excess.at(0, 0).re + excess.at(1, 1).re;
            let det = excess.at(0, 0).re * excess.at(1, 1).re - excess.at(0, 1).norm_sqr();
            // Sign check via trace/determinant: both nonnegative for PSD.
            assert!(g >= -1e-10 && det >= -1e-10 * g.abs().max(1.0), "trace {g}, det {det}");
            assert!(min_eig >= -1e-10);
        }
    }
}
