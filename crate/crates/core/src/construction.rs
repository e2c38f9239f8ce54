//! Code construction: synthetic-channel reliability ordering, the
//! `(F, I_ns, I_s)` index partition and the pilot interleaver.
//!
//! All indices are 0-based in memory. The JSON form of [`CodeConfig`] uses
//! 1-based ascending arrays.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::channel::SnrConvention;
use crate::{Error, Result};

/// How synthetic-channel reliabilities are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstructionMethod {
    /// Gaussian-approximation density evolution of the mean LLR.
    #[default]
    GaussianApproximation,
    /// Bhattacharyya-parameter recursion (exact on the erasure channel).
    Bhattacharyya,
}

/// Mean LLR of the BI-AWGN channel equivalent to the design point, with the
/// fading power `E[h²] = 2σ_h²` folded into the SNR.
pub fn design_mean_llr(design_snr_db: f64, sigma_h: f64, convention: SnrConvention) -> f64 {
    let noise_var = convention.noise_variance(design_snr_db, sigma_h);
    2.0 * 2.0 * sigma_h * sigma_h / noise_var
}

/// Ranking of the `n` synthetic channels (0-based u indices), most reliable
/// first. Ties go to the larger index.
pub fn reliability_order(
    n: usize,
    design_snr_db: f64,
    sigma_h: f64,
    method: ConstructionMethod,
    convention: SnrConvention,
) -> Result<Vec<usize>> {
    if !n.is_power_of_two() {
        return Err(Error::InvalidConfig("block length must be a power of two"));
    }
    let m0 = design_mean_llr(design_snr_db, sigma_h, convention);
    let score = match method {
        ConstructionMethod::GaussianApproximation => ga_mean_llrs(n, m0),
        // Z = exp(-m0/4) for BI-AWGN; rank on -ln Z.
        ConstructionMethod::Bhattacharyya => log_bhattacharyya(n, -m0 / 4.0)
            .into_iter()
            .map(|l| -l)
            .collect(),
    };
    Ok(rank_descending(&score))
}

/// Orders indices by score, highest first, larger index first on ties.
pub fn rank_descending(score: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..score.len()).collect();
    idx.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(b.cmp(&a)));
    idx
}

/// Expands one value per level: index bit 0 takes the degraded ("minus")
/// transform, bit 1 the upgraded ("plus") one. Bits are consumed from the
/// most significant end, matching the natural-order generator.
fn polarize(n: usize, root: f64, minus: impl Fn(f64) -> f64, plus: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut cur = vec![root];
    while cur.len() < n {
        let mut next = Vec::with_capacity(cur.len() * 2);
        for &z in &cur {
            next.push(minus(z));
            next.push(plus(z));
        }
        cur = next;
    }
    cur
}

/// Bhattacharyya parameters of the synthetic channels for a channel with
/// parameter `z0` (the erasure probability on the BEC).
pub fn bhattacharyya_parameters(n: usize, z0: f64) -> Vec<f64> {
    polarize(n, z0, |z| 2.0 * z - z * z, |z| z * z)
}

fn log_bhattacharyya(n: usize, ln_z0: f64) -> Vec<f64> {
    polarize(
        n,
        ln_z0,
        |lz| lz + libm::log(2.0 - libm::exp(lz)),
        |lz| 2.0 * lz,
    )
}

/// Gaussian-approximation mean LLRs of the synthetic channels.
pub fn ga_mean_llrs(n: usize, m0: f64) -> Vec<f64> {
    polarize(n, m0, ga_check_node, |m| 2.0 * m)
}

/// `ln φ(x)` with the usual two-piece approximation of
/// `φ(x) = 1 − E[tanh(L/2)]`, `L ~ N(x, 2x)`.
fn ln_phi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < 10.0 {
        (-0.4527 * libm::pow(x, 0.86) + 0.0218).min(0.0)
    } else {
        0.5 * libm::log(core::f64::consts::PI / x) - x / 4.0 + libm::log(1.0 - 10.0 / (7.0 * x))
    }
}

/// Check-node update `φ⁻¹(1 − (1 − φ(m))²)`, evaluated in the log domain so
/// that large means do not underflow.
fn ga_check_node(m: f64) -> f64 {
    if m <= 0.0 {
        return 0.0;
    }
    let lp = ln_phi(m);
    let target = lp + libm::log(2.0 - libm::exp(lp));
    let (mut lo, mut hi) = (0.0_f64, m);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ln_phi(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Splits the `info_count + k_s` most reliable indices into the
/// non-systematic and systematic sets. Returns `(F, I_ns, I_s)`, each ascending.
///
/// `I_s` takes the `k_s` largest natural indices of `I`, so the first `k_s`
/// indices of `I` (in decoding order) are non-systematic.
pub fn build_index_sets(
    ranking: &[usize],
    info_count: usize,
    k_s: usize,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let n = ranking.len();
    let total = info_count + k_s;
    if total > n {
        return Err(Error::InvalidConfig("K + m_e + m_d + k_s exceeds N"));
    }
    if total < 2 * k_s {
        return Err(Error::InvalidConfig("|I| must be at least 2·k_s"));
    }
    let mut info: Vec<usize> = ranking[..total].to_vec();
    info.sort_unstable();
    let systematic = info[total - k_s..].to_vec();
    let non_systematic = info[..total - k_s].to_vec();
    if info[..k_s].iter().any(|i| systematic.binary_search(i).is_ok()) {
        return Err(Error::InvalidConfig("first k_s indices of I intersect I_s"));
    }
    let mut is_info = vec![false; n];
    for &i in &info {
        is_info[i] = true;
    }
    let frozen = (0..n).filter(|&i| !is_info[i]).collect();
    Ok((frozen, non_systematic, systematic))
}

/// Permutation from codeword order `v` to transmit order `x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    /// `forward[i]` is the transmit slot of `v_i`.
    forward: Vec<usize>,
    /// `inverse[j]` is the codeword index sent in slot `j`.
    inverse: Vec<usize>,
}

impl Interleaver {
    pub fn identity(n: usize) -> Self {
        Self {
            forward: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    /// Places `systematic` (ascending) in the first `per_block` slots of each
    /// coherent block, block by block; every other codeword index fills the
    /// remaining slots in ascending order.
    pub fn pilot_leading(
        n: usize,
        coherence_time: usize,
        blocks: usize,
        per_block: usize,
        systematic: &[usize],
    ) -> Result<Self> {
        if per_block > coherence_time {
            return Err(Error::InvalidConfig("pilots per block exceed the coherence time"));
        }
        if n != coherence_time * blocks {
            return Err(Error::InvalidConfig("N must equal B·T_c"));
        }
        if systematic.len() != per_block * blocks {
            return Err(Error::InvalidConfig("k_s must equal pilots per block times B"));
        }
        let mut forward = vec![usize::MAX; n];
        let mut slot_used = vec![false; n];
        for (k, &v) in systematic.iter().enumerate() {
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v, bound: n });
            }
            let slot = (k / per_block) * coherence_time + k % per_block;
            forward[v] = slot;
            slot_used[slot] = true;
        }
        let mut free = (0..n).filter(|&j| !slot_used[j]);
        for f in forward.iter_mut().filter(|f| **f == usize::MAX) {
            *f = free.next().expect("slot count matches");
        }
        Self::from_forward(forward)
    }

    pub fn from_forward(forward: Vec<usize>) -> Result<Self> {
        let n = forward.len();
        let mut inverse = vec![usize::MAX; n];
        for (i, &j) in forward.iter().enumerate() {
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, bound: n });
            }
            if inverse[j] != usize::MAX {
                return Err(Error::InvalidConfig("interleaver is not a permutation"));
            }
            inverse[j] = i;
        }
        Ok(Self { forward, inverse })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    /// `x_j = v_{π⁻¹(j)}`.
    pub fn interleave<T: Copy>(&self, v: &[T]) -> Result<Vec<T>> {
        self.check_len(v.len())?;
        Ok(self.inverse.iter().map(|&i| v[i]).collect())
    }

    /// Inverse of [`Self::interleave`].
    pub fn deinterleave<T: Copy>(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_len(x.len())?;
        Ok(self.forward.iter().map(|&j| x[j]).collect())
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }
}

/// User-facing parameters from which a [`CodeConfig`] is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    /// Block length `N` (power of two).
    #[serde(rename = "N")]
    pub n: usize,
    /// Message bits per frame `K`.
    #[serde(rename = "K")]
    pub k: usize,
    /// Coherence time `T_c` in symbols.
    #[serde(rename = "T_c")]
    pub coherence_time: usize,
    /// Coherent blocks per frame `B`.
    #[serde(rename = "B")]
    pub blocks: usize,
    /// Pilots per block `p`; `k_s = p·B`.
    #[serde(rename = "p")]
    pub pilots_per_block: usize,
    /// CRC width protecting the pilot prefix (`m_e`).
    #[serde(rename = "m_e")]
    pub crc_pilot: usize,
    /// CRC width protecting the whole message (`m_d`).
    #[serde(rename = "m_d")]
    pub crc_message: usize,
    /// List size of the channel-estimation phase (`L_e`).
    #[serde(rename = "L_e")]
    pub list_pilot: usize,
    /// List size of the message-decoding phase (`L_d`).
    #[serde(rename = "L_d")]
    pub list_message: usize,
    pub design_snr_db: f64,
    pub sigma_h: f64,
    #[serde(default)]
    pub construction: ConstructionMethod,
    #[serde(default)]
    pub snr_convention: SnrConvention,
}

impl CodeParams {
    /// The `N=1024, R=1/2, T_c=64, B=16` setup with 3 pilots per block.
    pub fn reference_t64() -> Self {
        Self {
            n: 1024,
            k: 512,
            coherence_time: 64,
            blocks: 16,
            pilots_per_block: 3,
            crc_pilot: 12,
            crc_message: 4,
            list_pilot: 16,
            list_message: 16,
            design_snr_db: 4.0,
            sigma_h: 1.0,
            construction: ConstructionMethod::GaussianApproximation,
            snr_convention: SnrConvention::AverageReceived,
        }
    }

    /// The `N=1024, R=1/2, T_c=128, B=8` setup with 6 pilots per block.
    pub fn reference_t128() -> Self {
        Self {
            coherence_time: 128,
            blocks: 8,
            pilots_per_block: 6,
            ..Self::reference_t64()
        }
    }

    pub fn k_s(&self) -> usize {
        self.pilots_per_block * self.blocks
    }

    /// Non-frozen, non-systematic positions: `K + m_e + m_d`.
    pub fn non_systematic_count(&self) -> usize {
        self.k + self.crc_pilot + self.crc_message
    }

    /// The pilot-free comparison code: same `N`, `K`, total CRC budget in
    /// a single message CRC, identity interleaver.
    pub fn baseline(&self) -> Self {
        Self {
            pilots_per_block: 0,
            crc_pilot: 0,
            crc_message: self.crc_pilot + self.crc_message,
            list_pilot: self.list_message,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n.is_power_of_two() || self.n < 2 {
            return Err(Error::InvalidConfig("N must be a power of two ≥ 2"));
        }
        if self.coherence_time == 0 || self.blocks == 0 || self.n != self.coherence_time * self.blocks {
            return Err(Error::InvalidConfig("N must equal B·T_c"));
        }
        if self.pilots_per_block > self.coherence_time {
            return Err(Error::InvalidConfig("pilots per block exceed the coherence time"));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("K must be positive"));
        }
        let k_s = self.k_s();
        if k_s == 0 && self.crc_pilot != 0 {
            return Err(Error::InvalidConfig("m_e must be 0 without pilots"));
        }
        if k_s > 0 && self.crc_pilot >= k_s {
            return Err(Error::InvalidConfig("m_e must be smaller than k_s"));
        }
        if k_s > 0 && k_s - self.crc_pilot > self.k {
            return Err(Error::InvalidConfig("pilot payload k_s − m_e exceeds K"));
        }
        if self.non_systematic_count() + k_s > self.n {
            return Err(Error::InvalidConfig("K + m_e + m_d + k_s exceeds N"));
        }
        if self.non_systematic_count() < k_s {
            return Err(Error::InvalidConfig("|I| must be at least 2·k_s"));
        }
        if self.list_pilot == 0 || self.list_message == 0 {
            return Err(Error::InvalidConfig("list sizes must be at least 1"));
        }
        if !(self.sigma_h > 0.0) || !self.sigma_h.is_finite() {
            return Err(Error::InvalidConfig("sigma_h must be positive"));
        }
        if !self.design_snr_db.is_finite() {
            return Err(Error::InvalidConfig("design SNR must be finite"));
        }
        Ok(())
    }
}

/// A fully constructed code: parameters plus the derived index partition and
/// interleaver. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CodeConfigDocument", into = "CodeConfigDocument")]
pub struct CodeConfig {
    params: CodeParams,
    frozen: Vec<usize>,
    non_systematic: Vec<usize>,
    systematic: Vec<usize>,
    interleaver: Interleaver,
}

impl CodeConfig {
    pub fn build(params: CodeParams) -> Result<Self> {
        params.validate()?;
        let ranking = reliability_order(
            params.n,
            params.design_snr_db,
            params.sigma_h,
            params.construction,
            params.snr_convention,
        )?;
        Self::from_ranking(params, &ranking)
    }

    /// Builds the partition from an explicit reliability ranking.
    pub fn from_ranking(params: CodeParams, ranking: &[usize]) -> Result<Self> {
        params.validate()?;
        if ranking.len() != params.n {
            return Err(Error::LengthMismatch {
                expected: params.n,
                got: ranking.len(),
            });
        }
        let (frozen, non_systematic, systematic) =
            build_index_sets(ranking, params.non_systematic_count(), params.k_s())?;
        let interleaver = Interleaver::pilot_leading(
            params.n,
            params.coherence_time,
            params.blocks,
            params.pilots_per_block,
            &systematic,
        )?;
        let cfg = Self {
            params,
            frozen,
            non_systematic,
            systematic,
            interleaver,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same partition and interleaver with different list sizes.
    pub fn with_lists(&self, list_pilot: usize, list_message: usize) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.params.list_pilot = list_pilot;
        cfg.params.list_message = list_message;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The companion pilot-free code built from the same parameters.
    pub fn baseline(&self) -> Result<Self> {
        Self::build(self.params.baseline())
    }

    /// Checks every structural invariant of the configuration.
    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        p.validate()?;
        let n = p.n;
        if self.non_systematic.len() != p.non_systematic_count() {
            return Err(Error::InvalidConfig("|I_ns| must equal K + m_e + m_d"));
        }
        if self.systematic.len() != p.k_s() {
            return Err(Error::InvalidConfig("|I_s| must equal k_s"));
        }
        let mut seen = vec![0u8; n];
        for set in [&self.frozen, &self.non_systematic, &self.systematic] {
            for (k, &i) in set.iter().enumerate() {
                if i >= n {
                    return Err(Error::IndexOutOfRange { index: i, bound: n });
                }
                if k > 0 && set[k - 1] >= i {
                    return Err(Error::InvalidConfig("index sets must be strictly ascending"));
                }
                seen[i] += 1;
            }
        }
        if seen.iter().any(|&c| c != 1) {
            return Err(Error::InvalidConfig("F, I_ns and I_s must partition [N]"));
        }
        let k_s = p.k_s();
        if self.info_set()[..k_s] != self.non_systematic[..k_s] {
            return Err(Error::InvalidConfig("first k_s indices of I must lie in I_ns"));
        }
        if self.interleaver.len() != n {
            return Err(Error::InvalidConfig("interleaver length must equal N"));
        }
        for (k, &v) in self.systematic.iter().enumerate() {
            let slot = (k / p.pilots_per_block) * p.coherence_time + k % p.pilots_per_block;
            if self.interleaver.forward()[v] != slot {
                return Err(Error::InvalidConfig("interleaver must lead each block with its pilots"));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    pub fn k_s(&self) -> usize {
        self.params.k_s()
    }

    pub fn frozen(&self) -> &[usize] {
        &self.frozen
    }

    pub fn non_systematic(&self) -> &[usize] {
        &self.non_systematic
    }

    pub fn systematic(&self) -> &[usize] {
        &self.systematic
    }

    pub fn interleaver(&self) -> &Interleaver {
        &self.interleaver
    }

    /// `I = I_ns ∪ I_s`, ascending.
    pub fn info_set(&self) -> Vec<usize> {
        let mut info: Vec<usize> = self
            .non_systematic
            .iter()
            .chain(&self.systematic)
            .copied()
            .collect();
        info.sort_unstable();
        info
    }

    /// The first `k_s` non-frozen u positions, which carry the pilot values.
    pub fn pilot_prefix(&self) -> &[usize] {
        &self.non_systematic[..self.k_s()]
    }

    /// Transmit slots holding the systematic (pilot) bits, in `I_s` order.
    pub fn pilot_slots(&self) -> Vec<usize> {
        self.systematic
            .iter()
            .map(|&v| self.interleaver.forward()[v])
            .collect()
    }
}

/// On-disk form of [`CodeConfig`]: 1-based ascending index arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CodeConfigDocument {
    #[serde(flatten)]
    params: CodeParams,
    k_s: usize,
    frozen_set: Vec<usize>,
    non_systematic_set: Vec<usize>,
    systematic_set: Vec<usize>,
    /// Entry `i` is the transmit position of codeword bit `i`.
    interleaver: Vec<usize>,
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|i| i + 1).collect()
}

fn zero_based(v: &[usize]) -> Result<Vec<usize>> {
    v.iter()
        .map(|&i| {
            i.checked_sub(1)
                .ok_or(Error::InvalidConfig("indices are 1-based"))
        })
        .collect()
}

impl From<CodeConfig> for CodeConfigDocument {
    fn from(c: CodeConfig) -> Self {
        Self {
            k_s: c.k_s(),
            frozen_set: one_based(&c.frozen),
            non_systematic_set: one_based(&c.non_systematic),
            systematic_set: one_based(&c.systematic),
            interleaver: one_based(c.interleaver.forward()),
            params: c.params,
        }
    }
}

impl TryFrom<CodeConfigDocument> for CodeConfig {
    type Error = Error;

    fn try_from(d: CodeConfigDocument) -> Result<Self> {
        if d.k_s != d.params.k_s() {
            return Err(Error::InvalidConfig("k_s must equal p·B"));
        }
        let cfg = Self {
            params: d.params,
            frozen: zero_based(&d.frozen_set)?,
            non_systematic: zero_based(&d.non_systematic_set)?,
            systematic: zero_based(&d.systematic_set)?,
            interleaver: Interleaver::from_forward(zero_based(&d.interleaver)?)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
