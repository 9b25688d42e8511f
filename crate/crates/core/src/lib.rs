//! Exact and bounded information-theoretic performance of single-user MIMO
//! links whose transmitter and receiver use 1-bit converters per real
//! dimension.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: Q-function, binary entropy, Gauss-Hermite expectations and
//!   the positive-quadrant 2-D quadrature.
//! - [`channel`]: LOS (spherical and planar wavefront) and IID Rayleigh
//!   channel generators, the η descriptor and spectral decompositions.
//! - [`quantized_dmc`]: packed QPSK vectors, transmit/receive quartets, the
//!   sign quantizer, transition probabilities and the noiseless receive set.
//! - [`capacity`]: exact mutual information, Blahut-Arimoto capacity over
//!   quartet probabilities, the high-SNR limit and ergodic Monte Carlo.
//! - [`lowsnr`]: minimum energy per bit, wideband slope and the low-SNR
//!   expansion.
//! - [`beamforming`]: single-quartet transmission, candidate subsets and
//!   the energy-per-bit bracketing bounds.
//! - [`rayleigh_bounds`]: closed-form bracketing of the ergodic spectral
//!   efficiency for IID Rayleigh fading with equiprobable signaling.
//! - [`power_model`]: ADC power law and the 1-bit vs full-resolution
//!   break-even bandwidth.
//!
//! SNR values are linear everywhere in this crate; conversion to and from dB
//! goes through [`numerics::Decibel`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamforming;
pub mod capacity;
pub mod channel;
mod error;
pub mod lowsnr;
pub mod numerics;
pub mod power_model;
pub mod quantized_dmc;
pub mod rayleigh_bounds;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Library version, stamped into emitted reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
