//! Per-block channel-gain estimation from decoded pilots.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::channel::FadingModel;
use crate::{Error, Result};

/// Lower clamp applied to every estimate. Rayleigh gains are nonnegative, so
/// a negative estimate is noise-dominated and would invert a whole block.
pub const GAIN_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    LeastSquares,
    /// Bayes-linear estimate from the first two moments of the Rayleigh prior.
    Lmmse,
}

/// Pilot observations grouped by block: `p` received samples and the `p`
/// matching ±1 pilot symbols for each of `B` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBlockView {
    per_block: usize,
    received: Vec<f64>,
    symbols: Vec<f64>,
}

impl PilotBlockView {
    pub fn new(per_block: usize, received: Vec<f64>, symbols: Vec<f64>) -> Result<Self> {
        if received.len() != symbols.len() {
            return Err(Error::LengthMismatch {
                expected: received.len(),
                got: symbols.len(),
            });
        }
        if per_block == 0 && !received.is_empty() {
            return Err(Error::InvalidConfig("pilot samples given with zero pilots per block"));
        }
        if per_block > 0 && !received.len().is_multiple_of(per_block) {
            return Err(Error::InvalidConfig("pilot samples must fill whole blocks"));
        }
        Ok(Self {
            per_block,
            received,
            symbols,
        })
    }

    /// Gathers the leading `p` samples of each block of `y` (transmit order)
    /// together with the pilot symbols for `pilot_bits`.
    pub fn from_frame(y: &[f64], model: &FadingModel, per_block: usize, pilot_bits: &[u8]) -> Result<Self> {
        if pilot_bits.len() != per_block * model.blocks {
            return Err(Error::LengthMismatch {
                expected: per_block * model.blocks,
                got: pilot_bits.len(),
            });
        }
        if y.len() != model.frame_len() {
            return Err(Error::LengthMismatch {
                expected: model.frame_len(),
                got: y.len(),
            });
        }
        let received = (0..model.blocks)
            .flat_map(|b| y[b * model.coherence_time..b * model.coherence_time + per_block].iter().copied())
            .collect();
        let symbols = crate::channel::modulate_bpsk(pilot_bits);
        Self::new(per_block, received, symbols)
    }

    pub fn per_block(&self) -> usize {
        self.per_block
    }

    pub fn blocks(&self) -> usize {
        self.received.len().checked_div(self.per_block).unwrap_or(0)
    }

    /// `Σ_j x_j·y_j` for every block.
    fn correlations(&self) -> impl Iterator<Item = f64> + '_ {
        self.received
            .chunks(self.per_block.max(1))
            .zip(self.symbols.chunks(self.per_block.max(1)))
            .map(|(y, x)| y.iter().zip(x).map(|(a, b)| a * b).sum())
    }
}

/// `ĥ_i = max((1/p)·Σ_j x_j·y_j, floor)`.
pub fn estimate_ls(view: &PilotBlockView, floor: f64) -> Vec<f64> {
    let p = view.per_block as f64;
    view.correlations().map(|c| (c / p).max(floor)).collect()
}

/// `ĥ_i = E[h] + Var[h]·z/(p·Var[h] + σ²)` with `z = Σ x·y − p·E[h]`,
/// clamped like [`estimate_ls`]. With no pilots the prior mean is returned
/// for each of `blocks` blocks.
pub fn estimate_lmmse(
    view: &PilotBlockView,
    mean: f64,
    variance: f64,
    noise_var: f64,
    blocks: usize,
    floor: f64,
) -> Vec<f64> {
    if view.per_block == 0 {
        return alloc::vec![mean.max(floor); blocks];
    }
    let p = view.per_block as f64;
    view.correlations()
        .map(|c| (mean + variance * (c - p * mean) / (p * variance + noise_var)).max(floor))
        .collect()
}

impl Estimator {
    pub fn estimate(self, view: &PilotBlockView, model: &FadingModel) -> Vec<f64> {
        match self {
            Self::LeastSquares => estimate_ls(view, GAIN_FLOOR),
            Self::Lmmse => estimate_lmmse(
                view,
                model.mean_gain(),
                model.gain_variance(),
                model.noise_var,
                model.blocks,
                GAIN_FLOOR,
            ),
        }
    }
}
