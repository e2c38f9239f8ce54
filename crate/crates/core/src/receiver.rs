//! Receivers: the two-phase joint estimation and decoding receiver for the
//! hybrid code, and single-pass receivers for the pilot-free baseline.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::channel::{compute_llr, FadingModel, GainSource};
use crate::codec::HybridCode;
use crate::decoder::{DecodeCandidate, FrozenMap, ListDecoder};
use crate::estimation::{Estimator, PilotBlockView};
use crate::{Error, Result, LLR_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// Baseline: no list candidate passed the CRC.
    CrcFail,
    /// Hybrid: some candidates passed the message CRC, none matched the pilots.
    PilotCheckFail,
    /// Hybrid: no candidate passed the message CRC.
    ListExhausted,
}

/// Receiver-side channel knowledge for the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiMode {
    Perfect,
    Cdi,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOneResult {
    /// Decoded `u` at the first `k_s` non-frozen positions.
    pub pilot_bits: Vec<u8>,
    pub crc_ok: bool,
    pub h_hat: Vec<f64>,
    pub path_metric: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub phase_one: Option<PhaseOneResult>,
    /// Metric of the candidate `ŝ` came from.
    pub path_metric: f64,
    /// Candidates that passed the message CRC.
    pub crc_passing: usize,
    /// Mean squared gain-estimate error, when the truth was supplied.
    pub estimate_mse: Option<f64>,
}

/// Outcome of scanning a phase-2 list.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub s_hat: Vec<u8>,
    pub status: Status,
    pub path_metric: f64,
    pub crc_passing: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverOutput {
    pub s_hat: Vec<u8>,
    pub status: Status,
    pub diagnostics: Diagnostics,
}

impl ReceiverOutput {
    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }

    /// Fills [`Diagnostics::estimate_mse`] from the true gains.
    pub fn record_truth(&mut self, gains: &[f64]) {
        if let Some(p1) = &self.diagnostics.phase_one {
            let n = gains.len().max(1) as f64;
            let sq: f64 = p1.h_hat.iter().zip(gains).map(|(a, b)| (a - b) * (a - b)).sum();
            self.diagnostics.estimate_mse = Some(sq / n);
        }
    }
}

fn check_frame(code: &HybridCode, model: &FadingModel, y: &[f64]) -> Result<()> {
    let p = code.config().params();
    if model.coherence_time != p.coherence_time || model.blocks != p.blocks {
        return Err(Error::InvalidConfig("channel block structure disagrees with the code"));
    }
    if y.len() != code.config().n() {
        return Err(Error::LengthMismatch {
            expected: code.config().n(),
            got: y.len(),
        });
    }
    Ok(())
}

/// Two-phase receiver for a hybrid code with `k_s > 0`. Holds decoder
/// scratch; use one per worker.
#[derive(Debug, Clone)]
pub struct HybridReceiver {
    code: HybridCode,
    estimator: Estimator,
    decoder: ListDecoder,
    frozen: FrozenMap,
}

impl HybridReceiver {
    pub fn new(code: HybridCode, estimator: Estimator) -> Result<Self> {
        let cfg = code.config();
        if cfg.k_s() == 0 {
            return Err(Error::InvalidConfig("the hybrid receiver needs k_s > 0"));
        }
        let p = cfg.params();
        let decoder = ListDecoder::new(cfg.n(), p.list_pilot.max(p.list_message))?;
        let frozen = FrozenMap::from_info(cfg.n(), &cfg.info_set());
        Ok(Self {
            code,
            estimator,
            decoder,
            frozen,
        })
    }

    pub fn code(&self) -> &HybridCode {
        &self.code
    }

    pub fn estimator(&self) -> Estimator {
        self.estimator
    }

    /// Phase 1: decode the pilot prefix with CDI-only soft values and
    /// estimate the block gains from it.
    pub fn channel_estimation_phase(&mut self, y: &[f64], model: &FadingModel) -> Result<PhaseOneResult> {
        check_frame(&self.code, model, y)?;
        let cfg = self.code.config();
        let llr = cfg.interleaver().deinterleave(&compute_llr(y, GainSource::Cdi, model)?)?;
        let prefixes = self
            .decoder
            .prefix_scl_decode(&llr, &self.frozen, cfg.params().list_pilot, cfg.k_s())?;
        let pick = prefixes.iter().position(|c| self.code.crc_pilot().check(&c.bits));
        let chosen = &prefixes[pick.unwrap_or(0)];
        let h_hat = self.estimate(y, model, &chosen.bits)?;
        Ok(PhaseOneResult {
            pilot_bits: chosen.bits.clone(),
            crc_ok: pick.is_some(),
            h_hat,
            path_metric: chosen.path_metric,
        })
    }

    /// Phase 1 replaced by the true pilot values (diagnostics only).
    pub fn oracle_phase(&self, y: &[f64], model: &FadingModel, true_pilots: &[u8]) -> Result<PhaseOneResult> {
        check_frame(&self.code, model, y)?;
        if true_pilots.len() != self.code.config().k_s() {
            return Err(Error::LengthMismatch {
                expected: self.code.config().k_s(),
                got: true_pilots.len(),
            });
        }
        Ok(PhaseOneResult {
            pilot_bits: true_pilots.to_vec(),
            crc_ok: true,
            h_hat: self.estimate(y, model, true_pilots)?,
            path_metric: 0.0,
        })
    }

    fn estimate(&self, y: &[f64], model: &FadingModel, pilots: &[u8]) -> Result<Vec<f64>> {
        let view = PilotBlockView::from_frame(y, model, self.code.config().params().pilots_per_block, pilots)?;
        Ok(self.estimator.estimate(&view, model))
    }

    /// Phase 2: decode the message with estimated-CSI soft values, the
    /// pilot slots pinned and the pilot prefix frozen to the phase-1 bits.
    pub fn message_decoding_phase(
        &mut self,
        y: &[f64],
        model: &FadingModel,
        p1: PhaseOneResult,
    ) -> Result<ReceiverOutput> {
        let list = self.phase_two_list(y, model, &p1)?;
        let Selection {
            s_hat,
            status,
            path_metric,
            crc_passing,
        } = self.select(&list, &p1.pilot_bits);
        Ok(ReceiverOutput {
            s_hat,
            status,
            diagnostics: Diagnostics {
                phase_one: Some(p1),
                path_metric,
                crc_passing,
                estimate_mse: None,
            },
        })
    }

    /// Scans `list` in order: the first candidate passing the message CRC
    /// and matching `pilot_bits` at the systematic positions wins.
    pub fn select(&self, list: &[DecodeCandidate], pilot_bits: &[u8]) -> Selection {
        let mut crc_passing = 0;
        let mut chosen = None;
        for c in list {
            let (s, crc_ok) = self.code.extract_message(&c.u_hat);
            if !crc_ok {
                continue;
            }
            crc_passing += 1;
            if chosen.is_none() && self.code.pilot_consistent(&c.u_hat, pilot_bits) {
                chosen = Some((s, c.path_metric));
            }
        }
        match chosen {
            Some((s_hat, path_metric)) => Selection {
                s_hat,
                status: Status::Ok,
                path_metric,
                crc_passing,
            },
            None => Selection {
                s_hat: self.code.extract_message(&list[0].u_hat).0,
                status: if crc_passing > 0 {
                    Status::PilotCheckFail
                } else {
                    Status::ListExhausted
                },
                path_metric: list[0].path_metric,
                crc_passing,
            },
        }
    }

    /// Phase-2 decoder inputs: codeword-order LLRs with the pilot slots
    /// pinned, and the frozen map with the pilot prefix frozen.
    pub fn phase_two_inputs(&self, y: &[f64], model: &FadingModel, p1: &PhaseOneResult) -> Result<(Vec<f64>, FrozenMap)> {
        check_frame(&self.code, model, y)?;
        let cfg = self.code.config();
        if p1.pilot_bits.len() != cfg.k_s() {
            return Err(Error::LengthMismatch {
                expected: cfg.k_s(),
                got: p1.pilot_bits.len(),
            });
        }
        let mut llr = compute_llr(y, GainSource::Estimated(&p1.h_hat), model)?;
        for (slot, &b) in cfg.pilot_slots().iter().zip(&p1.pilot_bits) {
            llr[*slot] = if b == 0 { LLR_MAX } else { -LLR_MAX };
        }
        let llr = cfg.interleaver().deinterleave(&llr)?;
        let mut fm = self.frozen.clone();
        fm.freeze(cfg.pilot_prefix(), &p1.pilot_bits);
        Ok((llr, fm))
    }

    /// The phase-2 list, best metric first, before any selection.
    pub fn phase_two_list(&mut self, y: &[f64], model: &FadingModel, p1: &PhaseOneResult) -> Result<Vec<DecodeCandidate>> {
        let (llr, fm) = self.phase_two_inputs(y, model, p1)?;
        let list_size = self.code.config().params().list_message;
        self.decoder.scl_decode(&llr, &fm, list_size)
    }

    /// Both phases end to end.
    pub fn joint_decode(&mut self, y: &[f64], model: &FadingModel) -> Result<ReceiverOutput> {
        let p1 = self.channel_estimation_phase(y, model)?;
        self.message_decoding_phase(y, model, p1)
    }

    /// Phase 2 run with oracle pilots.
    pub fn genie_decode(&mut self, y: &[f64], model: &FadingModel, true_pilots: &[u8]) -> Result<ReceiverOutput> {
        let p1 = self.oracle_phase(y, model, true_pilots)?;
        self.message_decoding_phase(y, model, p1)
    }
}

/// Single-pass CRC-aided list receiver for a pilot-free code.
#[derive(Debug, Clone)]
pub struct BaselineReceiver {
    code: HybridCode,
    decoder: ListDecoder,
    frozen: FrozenMap,
}

impl BaselineReceiver {
    pub fn new(code: HybridCode) -> Result<Self> {
        let cfg = code.config();
        if cfg.k_s() != 0 {
            return Err(Error::InvalidConfig("the baseline receiver needs k_s = 0"));
        }
        let decoder = ListDecoder::new(cfg.n(), cfg.params().list_message)?;
        let frozen = FrozenMap::from_info(cfg.n(), &cfg.info_set());
        Ok(Self { code, decoder, frozen })
    }

    pub fn code(&self) -> &HybridCode {
        &self.code
    }

    /// `gains` are required for [`CsiMode::Perfect`] and ignored otherwise.
    pub fn baseline_decode(
        &mut self,
        y: &[f64],
        model: &FadingModel,
        mode: CsiMode,
        gains: Option<&[f64]>,
    ) -> Result<ReceiverOutput> {
        check_frame(&self.code, model, y)?;
        let source = match (mode, gains) {
            (CsiMode::Perfect, Some(g)) => GainSource::Perfect(g),
            (CsiMode::Perfect, None) => return Err(Error::MissingGenie),
            (CsiMode::Cdi, _) => GainSource::Cdi,
        };
        let cfg = self.code.config();
        let llr = cfg.interleaver().deinterleave(&compute_llr(y, source, model)?)?;
        let code = &self.code;
        let ns = cfg.non_systematic();
        let best = self.decoder.ca_scl_decode(
            &llr,
            &self.frozen,
            cfg.params().list_message,
            code.crc_message(),
            |u| ns.iter().map(|&i| u[i]).collect(),
        )?;
        let (s_hat, _) = code.extract_message(&best.u_hat);
        Ok(ReceiverOutput {
            s_hat,
            status: if best.crc_ok { Status::Ok } else { Status::CrcFail },
            diagnostics: Diagnostics {
                phase_one: None,
                path_metric: best.path_metric,
                crc_passing: usize::from(best.crc_ok),
                estimate_mse: None,
            },
        })
    }
}
