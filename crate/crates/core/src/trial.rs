//! One seeded Monte Carlo frame per call, for any of the three schemes.
//!
//! Every frame draws from its own ChaCha8 stream selected by the frame index
//! under the master seed, in a fixed order: message bits, then block gains,
//! then noise. Schemes and SNR points run on the same seed therefore see the
//! same messages, gains and (scaled) noise.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{modulate_bpsk, transmit, FadingModel};
use crate::codec::HybridCode;
use crate::construction::CodeConfig;
use crate::estimation::Estimator;
use crate::receiver::{BaselineReceiver, CsiMode, HybridReceiver, Status};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Hybrid code, two-phase receiver.
    Hybrid,
    /// Pilot-free code, receiver knows the gains.
    NsPerfectCsi,
    /// Pilot-free code, receiver knows only the gain distribution.
    NsCdi,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Hybrid, Scheme::NsPerfectCsi, Scheme::NsCdi];

    pub fn name(self) -> &'static str {
        match self {
            Self::Hybrid => "hybrid",
            Self::NsPerfectCsi => "ns_perfect_csi",
            Self::NsCdi => "ns_cdi",
        }
    }
}

impl core::fmt::Display for Scheme {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOptions {
    pub snr_db: f64,
    pub master_seed: u64,
    pub estimator: Estimator,
    /// Also decode each hybrid frame with oracle pilots.
    pub genie_pilots: bool,
    /// Replace every drawn gain by this value.
    pub fixed_gain: Option<f64>,
    /// Draw noise but do not add it.
    pub noiseless: bool,
}

impl TrialOptions {
    pub fn new(snr_db: f64, master_seed: u64) -> Self {
        Self {
            snr_db,
            master_seed,
            estimator: Estimator::LeastSquares,
            genie_pilots: false,
            fixed_gain: None,
            noiseless: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub frame_error: bool,
    pub bit_errors: usize,
    /// Hybrid only: phase 1 returned wrong pilot bits.
    pub pilot_error: bool,
    /// Hybrid with oracle pilots enabled: the genie decode failed.
    pub genie_frame_error: Option<bool>,
    pub status: Status,
    pub s: Vec<u8>,
    pub s_hat: Vec<u8>,
    pub gains: Vec<f64>,
    /// Hybrid only: phase-1 gain estimates.
    pub h_hat: Vec<f64>,
}

/// The random stream of one frame.
pub fn frame_rng(master_seed: u64, frame_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(frame_index);
    rng
}

#[derive(Clone)]
enum Rx {
    Hybrid(HybridReceiver),
    Baseline(BaselineReceiver, CsiMode),
}

/// Encoder, channel and receiver for one scheme at one SNR. Holds decoder
/// scratch; use one per worker.
#[derive(Clone)]
pub struct TrialRunner {
    code: HybridCode,
    rx: Rx,
    model: FadingModel,
    options: TrialOptions,
}

impl TrialRunner {
    /// `cfg` is the hybrid configuration; the baselines use its pilot-free
    /// companion.
    pub fn new(cfg: &CodeConfig, scheme: Scheme, options: TrialOptions) -> Result<Self> {
        let p = cfg.params();
        let mut model = FadingModel::from_snr(options.snr_db, p.snr_convention, p.sigma_h, p.coherence_time, p.blocks)?;
        if let Some(g) = options.fixed_gain {
            model = model.with_fixed_gain(g);
        }
        if options.noiseless {
            model = model.noiseless();
        }
        let (code, rx) = match scheme {
            Scheme::Hybrid => {
                let code = HybridCode::new(cfg.clone())?;
                (code.clone(), Rx::Hybrid(HybridReceiver::new(code, options.estimator)?))
            }
            Scheme::NsPerfectCsi | Scheme::NsCdi => {
                let code = HybridCode::new(if cfg.k_s() == 0 { cfg.clone() } else { cfg.baseline()? })?;
                let mode = if scheme == Scheme::NsCdi { CsiMode::Cdi } else { CsiMode::Perfect };
                (code.clone(), Rx::Baseline(BaselineReceiver::new(code)?, mode))
            }
        };
        Ok(Self {
            code,
            rx,
            model,
            options,
        })
    }

    pub fn model(&self) -> &FadingModel {
        &self.model
    }

    pub fn code(&self) -> &HybridCode {
        &self.code
    }

    pub fn run(&mut self, frame_index: u64) -> Result<TrialOutcome> {
        let mut rng = frame_rng(self.options.master_seed, frame_index);
        let k = self.code.config().k();
        let s: Vec<u8> = (0..k).map(|_| rng.random_range(0..2u8)).collect();
        let frame = self.code.encode(&s)?;
        let obs = transmit(&modulate_bpsk(&frame.x), &self.model, &mut rng)?;
        let (out, pilot_error, genie_frame_error) = match &mut self.rx {
            Rx::Hybrid(rx) => {
                let truth = self.code.pilot_bits(&s);
                let mut out = rx.joint_decode(&obs.y, &self.model)?;
                out.record_truth(&obs.gains);
                let pilot_error = out.diagnostics.phase_one.as_ref().is_some_and(|p| p.pilot_bits != truth);
                let genie = if self.options.genie_pilots {
                    Some(rx.genie_decode(&obs.y, &self.model, &truth)?.s_hat != s)
                } else {
                    None
                };
                (out, pilot_error, genie)
            }
            Rx::Baseline(rx, mode) => (rx.baseline_decode(&obs.y, &self.model, *mode, Some(&obs.gains))?, false, None),
        };
        let bit_errors = out.s_hat.iter().zip(&s).filter(|(a, b)| a != b).count();
        let h_hat = out
            .diagnostics
            .phase_one
            .as_ref()
            .map(|p| p.h_hat.clone())
            .unwrap_or_default();
        Ok(TrialOutcome {
            frame_error: bit_errors > 0,
            bit_errors,
            pilot_error,
            genie_frame_error,
            status: out.status,
            s,
            s_hat: out.s_hat,
            gains: obs.gains,
            h_hat,
        })
    }
}

/// Builds a runner and decodes one frame. Sweeps should keep a
/// [`TrialRunner`] per worker instead.
pub fn run_trial(cfg: &CodeConfig, scheme: Scheme, options: TrialOptions, frame_index: u64) -> Result<TrialOutcome> {
    TrialRunner::new(cfg, scheme, options)?.run(frame_index)
}
