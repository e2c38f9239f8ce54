//! Error counters and confidence intervals for Monte Carlo points.

use serde::{Deserialize, Serialize};

use crate::trial::TrialOutcome;
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for a binomial proportion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilsonInterval {
    pub lo: f64,
    pub hi: f64,
}

impl WilsonInterval {
    /// 95% interval for `successes` out of `trials`; `[0, 1]` when `trials = 0`.
    pub fn new(successes: u64, trials: u64) -> Self {
        Self::with_z(successes, trials, Z95)
    }

    pub fn with_z(successes: u64, trials: u64, z: f64) -> Self {
        if trials == 0 {
            return Self { lo: 0.0, hi: 1.0 };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = z / denom * libm::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
        // The ends are exactly 0 and 1 at the extremes; avoid rounding there.
        Self {
            lo: if successes == 0 { 0.0 } else { (center - half).max(0.0) },
            hi: if successes >= trials { 1.0 } else { (center + half).min(1.0) },
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }
}

/// Integer counters for one SNR point. Merging is commutative and
/// associative, so results do not depend on how frames are split between
/// workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PointStats {
    pub frames: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    /// Message bits per frame.
    pub message_bits: u64,
    pub pilot_errors: u64,
    /// Frames decoded a second time with oracle pilots.
    pub genie_frames: u64,
    pub genie_errors: u64,
}

impl PointStats {
    pub fn new(message_bits: usize) -> Self {
        Self {
            message_bits: message_bits as u64,
            ..Self::default()
        }
    }

    pub fn record(&mut self, outcome: &TrialOutcome) {
        self.frames += 1;
        self.frame_errors += u64::from(outcome.frame_error);
        self.bit_errors += outcome.bit_errors as u64;
        self.pilot_errors += u64::from(outcome.pilot_error);
        if let Some(e) = outcome.genie_frame_error {
            self.genie_frames += 1;
            self.genie_errors += u64::from(e);
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.frames += other.frames;
        self.frame_errors += other.frame_errors;
        self.bit_errors += other.bit_errors;
        self.message_bits = self.message_bits.max(other.message_bits);
        self.pilot_errors += other.pilot_errors;
        self.genie_frames += other.genie_frames;
        self.genie_errors += other.genie_errors;
        self
    }

    fn ratio(a: u64, b: u64) -> f64 {
        if b == 0 {
            0.0
        } else {
            a as f64 / b as f64
        }
    }

    pub fn fer(&self) -> f64 {
        Self::ratio(self.frame_errors, self.frames)
    }

    pub fn fer_ci(&self) -> WilsonInterval {
        WilsonInterval::new(self.frame_errors, self.frames)
    }

    pub fn ber(&self) -> f64 {
        Self::ratio(self.bit_errors, self.frames * self.message_bits)
    }

    pub fn pilot_er(&self) -> f64 {
        Self::ratio(self.pilot_errors, self.frames)
    }

    pub fn pilot_ci(&self) -> WilsonInterval {
        WilsonInterval::new(self.pilot_errors, self.frames)
    }

    pub fn genie_message_fer(&self) -> Option<f64> {
        (self.genie_frames > 0).then(|| Self::ratio(self.genie_errors, self.genie_frames))
    }

    pub fn genie_ci(&self) -> Option<WilsonInterval> {
        (self.genie_frames > 0).then(|| WilsonInterval::new(self.genie_errors, self.genie_frames))
    }
}

/// `P_e^p + (1 − P_e^p)·P_e^m`.
pub fn union_bound(pilot_er: f64, message_fer: f64) -> f64 {
    pilot_er + (1.0 - pilot_er) * message_fer
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub fer: f64,
    pub bound: f64,
    /// FER interval width plus the width of the bound's interval, the latter
    /// obtained by evaluating the bound at the interval ends of its terms.
    pub combined_ci_width: f64,
    /// Allowed excess over the bound: twice the combined width.
    pub slack: f64,
    pub pass: bool,
}

/// Checks `FER ≤ P_e^p + (1 − P_e^p)·P_e^m` up to the CI slack.
pub fn fer_bound_check(stats: &PointStats) -> Result<BoundReport> {
    let (pm, pm_ci) = match (stats.genie_message_fer(), stats.genie_ci()) {
        (Some(p), Some(ci)) => (p, ci),
        _ => return Err(Error::MissingGenie),
    };
    let pp_ci = stats.pilot_ci();
    let bound = union_bound(stats.pilot_er(), pm);
    let bound_width = union_bound(pp_ci.hi, pm_ci.hi) - union_bound(pp_ci.lo, pm_ci.lo);
    let combined_ci_width = stats.fer_ci().width() + bound_width;
    let slack = 2.0 * combined_ci_width;
    let fer = stats.fer();
    Ok(BoundReport {
        fer,
        bound,
        combined_ci_width,
        slack,
        pass: fer <= bound + slack,
    })
}
