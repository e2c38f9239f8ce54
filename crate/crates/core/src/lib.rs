//! Hybrid polar coding for non-coherent block-fading channels.
//!
//! Part of the message is carried non-systematically in the polar input
//! vector `u`, and a small number of bits are carried systematically in the
//! codeword `v`. The systematic bits repeat the first non-systematic bits
//! ("dynamic pilots"), so a receiver can decode a short prefix with only the
//! channel distribution known, estimate per-block gains from it, and then
//! decode the rest of the frame with refined soft information.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, sweeps and the
//! command line live in the `hybrid-polar-sim` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod channel;
pub mod codec;
pub mod construction;
pub mod crc;
pub mod decoder;
mod error;
pub mod estimation;
pub mod gf2;
pub mod receiver;
pub mod stats;
pub mod trial;

pub use channel::{FadingModel, FrameObservation, GainSource, SnrConvention};
pub use codec::{HybridCode, HybridFrame};
pub use construction::{CodeConfig, CodeParams, ConstructionMethod, Interleaver};
pub use crc::CrcSpec;
pub use decoder::{BitRole, DecodeCandidate, FFunction, FrozenMap, ListDecoder};
pub use error::Error;
pub use estimation::Estimator;
pub use gf2::{BitMatrix, BitVector};
pub use receiver::{BaselineReceiver, CsiMode, HybridReceiver, PhaseOneResult, ReceiverOutput, Status};
pub use stats::{PointStats, WilsonInterval};
pub use trial::{Scheme, TrialOptions, TrialOutcome};

/// Saturation magnitude for every log-likelihood ratio in the crate.
pub const LLR_MAX: f64 = 300.0;

pub type Result<T, E = Error> = core::result::Result<T, E>;
