//! mSNOW: a Gold-code concurrent PHY layer and network simulator for the
//! SNOW LPWAN.
//!
//! The crate is organized along the signal path:
//!
//! - [`pnseq`] — LFSR m-sequences, preferred pairs, and Gold-code PN sets
//!   with exact correlation arithmetic.
//! - [`spreadcodec`] — spreading data bits into chip symbols and despreading
//!   received sample vectors back into bits.
//! - [`phy`] — the D-OFDM wideband layer: subcarrier plans, baseband
//!   synthesis for uplink and downlink, AWGN, global-FFT demultiplexing,
//!   RSS quantization, preamble detection, and the per-subcarrier decoder.
//! - [`netsim`] — scenario simulation: PN/subcarrier assignment, traffic
//!   generation, uplink convergecast, concurrent downlink, P2P relaying via
//!   the base station, and the legacy single-sensor-per-subcarrier baseline.
//! - [`metrics`] — CDR, throughput, latency, and energy reports plus the
//!   Shannon/Nyquist bitrate and scalability calculators.

pub mod metrics;
pub mod netsim;
pub mod phy;
pub mod pnseq;
pub mod spreadcodec;

use std::fmt;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An all-zero LFSR seed (a fixed point of the shift register).
    ZeroSeed,
    /// The feedback polynomial is not primitive: the register state returned
    /// to the seed after `period` < 2^n - 1 steps.
    NonPrimitive { degree: usize, period: usize },
    /// Decimation by `q` does not produce a full-period sequence.
    DecimationGcd { len: usize, q: usize },
    /// Two sequences that must have equal length do not.
    LengthMismatch { left: usize, right: usize },
    /// A preferred-pair condition is violated.
    InvalidPair(String),
    /// A configuration value is malformed or out of range.
    Config(String),
    /// A capacity bound was exceeded.
    Capacity(String),
    /// A runtime failure inside a scenario or signal operation.
    Runtime(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ZeroSeed => write!(f, "all-zero seed is a fixed point of the shift register"),
            Error::NonPrimitive { degree, period } => write!(
                f,
                "polynomial of degree {degree} is not primitive: measured period {period} < {}",
                (1usize << degree) - 1
            ),
            Error::DecimationGcd { len, q } => write!(
                f,
                "decimation by {q} does not cover a length-{len} sequence (gcd != 1)"
            ),
            Error::LengthMismatch { left, right } => {
                write!(f, "sequence length mismatch: {left} vs {right}")
            }
            Error::InvalidPair(reason) => write!(f, "invalid preferred pair: {reason}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Capacity(msg) => write!(f, "capacity exceeded: {msg}"),
            Error::Runtime(msg) => write!(f, "runtime error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
