//! Monte Carlo simulation of amplify-and-forward relaying in a parallel
//! MIMO relay network.
//!
//! K relays with N antennas each connect an M-antenna transmitter to an
//! M-antenna receiver over two half-duplex hops; there is no direct link.
//! The crate provides:
//!
//! - complex linear-algebra kernels (SVD, pseudo-inverse, log-determinant,
//!   water-filling) sized for desk-scale experiments ([`matrix`]),
//! - Rayleigh fading channel sampling and the generic end-to-end
//!   amplify-and-forward channel ([`channel`]),
//! - the cooperative beamforming scheme (CBS), its incremental variant
//!   (ICBS), and the matched-filter baseline (BNOP) with per-realization
//!   achievable rates ([`schemes`]),
//! - the uplink cut-set bound and its closed-form anchors ([`capacity`]),
//! - distributional and tail checks for the random-matrix laws the
//!   analysis rests on ([`validation`]),
//! - reproducible experiment sweeps over relay count, SNR, and relay
//!   power schedules ([`montecarlo`]).
//!
//! Everything is deterministic given a master seed: per-trial seeds come
//! from a published mixing function and accumulation is order-fixed, so
//! results are bit-identical across runs and worker counts.

pub mod capacity;
pub mod channel;
pub mod error;
pub(crate) mod exec;
pub mod matrix;
pub mod montecarlo;
pub mod rng;
pub mod schemes;
pub mod stats;
pub mod validation;

pub use error::{Error, Result};
