//! BPSK over a real Rayleigh block-fading channel.
//!
//! Each frame of `N = B·T_c` symbols sees `B` independent gains, each held for
//! `T_c` symbols, plus i.i.d. Gaussian noise.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::construction::Interleaver;
use crate::{Error, Result, LLR_MAX};

/// How an SNR in dB maps to the noise variance `σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrConvention {
    /// `SNR = E[h²]·E[x²]/σ² = 2σ_h²/σ²`.
    #[default]
    AverageReceived,
    /// `SNR = 1/σ²`, ignoring the fading power.
    Transmit,
}

impl SnrConvention {
    pub fn noise_variance(self, snr_db: f64, sigma_h: f64) -> f64 {
        let snr = libm::pow(10.0, snr_db / 10.0);
        match self {
            Self::AverageReceived => 2.0 * sigma_h * sigma_h / snr,
            Self::Transmit => 1.0 / snr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingModel {
    pub sigma_h: f64,
    /// Noise variance per real dimension.
    pub noise_var: f64,
    pub coherence_time: usize,
    pub blocks: usize,
    /// Test hook: replace every drawn gain by this value.
    pub fixed_gain: Option<f64>,
    /// Test hook: draw the noise but do not add it.
    pub noiseless: bool,
}

impl FadingModel {
    pub fn new(sigma_h: f64, noise_var: f64, coherence_time: usize, blocks: usize) -> Result<Self> {
        if !(sigma_h > 0.0) || !(noise_var > 0.0) {
            return Err(Error::InvalidConfig("sigma_h and noise variance must be positive"));
        }
        if coherence_time == 0 || blocks == 0 {
            return Err(Error::InvalidConfig("coherence time and block count must be positive"));
        }
        Ok(Self {
            sigma_h,
            noise_var,
            coherence_time,
            blocks,
            fixed_gain: None,
            noiseless: false,
        })
    }

    pub fn from_snr(
        snr_db: f64,
        convention: SnrConvention,
        sigma_h: f64,
        coherence_time: usize,
        blocks: usize,
    ) -> Result<Self> {
        Self::new(sigma_h, convention.noise_variance(snr_db, sigma_h), coherence_time, blocks)
    }

    pub fn with_fixed_gain(mut self, gain: f64) -> Self {
        self.fixed_gain = Some(gain);
        self
    }

    pub fn noiseless(mut self) -> Self {
        self.noiseless = true;
        self
    }

    pub fn frame_len(&self) -> usize {
        self.coherence_time * self.blocks
    }

    /// `E[h] = σ_h·√(π/2)`.
    pub fn mean_gain(&self) -> f64 {
        rayleigh_mean(self.sigma_h)
    }

    /// `Var[h] = (2 − π/2)·σ_h²`.
    pub fn gain_variance(&self) -> f64 {
        rayleigh_variance(self.sigma_h)
    }

    /// Block index of symbol `j`.
    #[inline]
    pub fn block_of(&self, j: usize) -> usize {
        j / self.coherence_time
    }
}

pub fn rayleigh_mean(sigma_h: f64) -> f64 {
    sigma_h * libm::sqrt(PI / 2.0)
}

pub fn rayleigh_variance(sigma_h: f64) -> f64 {
    (2.0 - PI / 2.0) * sigma_h * sigma_h
}

/// One Rayleigh draw by inverse CDF: `σ_h·√(−2 ln U)`, `U ∈ (0, 1]`.
pub fn sample_rayleigh<R: Rng + ?Sized>(rng: &mut R, sigma_h: f64) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    sigma_h * libm::sqrt(-2.0 * libm::log(u))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameObservation {
    /// Received samples in transmit order.
    pub y: Vec<f64>,
    /// True per-block gains.
    pub gains: Vec<f64>,
}

/// Bit 0 → +1, bit 1 → −1.
pub fn modulate_bpsk(bits: &[u8]) -> Vec<f64> {
    bits.iter()
        .map(|&b| if b & 1 == 0 { 1.0 } else { -1.0 })
        .collect()
}

/// Hard decision on received samples (nonnegative → 0).
pub fn hard_decision(y: &[f64]) -> Vec<u8> {
    y.iter().map(|&v| u8::from(v < 0.0)).collect()
}

/// Sends `symbols` through the channel. Draws `B` gains, then `N` noise
/// samples, always in that order so that streams stay aligned across
/// schemes and hooks.
pub fn transmit<R: Rng + ?Sized>(
    symbols: &[f64],
    model: &FadingModel,
    rng: &mut R,
) -> Result<FrameObservation> {
    if symbols.len() != model.frame_len() {
        return Err(Error::LengthMismatch {
            expected: model.frame_len(),
            got: symbols.len(),
        });
    }
    let gains: Vec<f64> = (0..model.blocks)
        .map(|_| {
            let h = sample_rayleigh(rng, model.sigma_h);
            model.fixed_gain.unwrap_or(h)
        })
        .collect();
    let sigma = libm::sqrt(model.noise_var);
    let y = symbols
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let z: f64 = StandardNormal.sample(rng);
            let w = if model.noiseless { 0.0 } else { sigma * z };
            gains[model.block_of(j)] * x + w
        })
        .collect();
    Ok(FrameObservation { y, gains })
}

/// Which gain the LLR computation assumes for each block.
#[derive(Debug, Clone, Copy)]
pub enum GainSource<'a> {
    /// True gains (perfect CSI).
    Perfect(&'a [f64]),
    /// The Rayleigh mean for every block (distribution knowledge only).
    Cdi,
    /// Per-block estimates.
    Estimated(&'a [f64]),
}

#[inline]
pub fn saturate(llr: f64) -> f64 {
    llr.clamp(-LLR_MAX, LLR_MAX)
}

/// `L_j = 2·g·y_j/σ²` with the block gain `g` chosen by `source`, in
/// transmit order, saturated to `±LLR_MAX`.
pub fn compute_llr(y: &[f64], source: GainSource<'_>, model: &FadingModel) -> Result<Vec<f64>> {
    if y.len() != model.frame_len() {
        return Err(Error::LengthMismatch {
            expected: model.frame_len(),
            got: y.len(),
        });
    }
    let cdi = [model.mean_gain()];
    let gains: &[f64] = match source {
        GainSource::Perfect(g) | GainSource::Estimated(g) => {
            if g.len() != model.blocks {
                return Err(Error::LengthMismatch {
                    expected: model.blocks,
                    got: g.len(),
                });
            }
            g
        }
        GainSource::Cdi => &cdi,
    };
    let scale = 2.0 / model.noise_var;
    Ok(y.iter()
        .enumerate()
        .map(|(j, &v)| {
            let g = if gains.len() == 1 { gains[0] } else { gains[model.block_of(j)] };
            saturate(scale * g * v)
        })
        .collect())
}

pub fn interleave<T: Copy>(pi: &Interleaver, v: &[T]) -> Result<Vec<T>> {
    pi.interleave(v)
}

pub fn deinterleave<T: Copy>(pi: &Interleaver, x: &[T]) -> Result<Vec<T>> {
    pi.deinterleave(x)
}
