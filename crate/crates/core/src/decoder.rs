//! Successive-cancellation decoding: SC, list (SCL), CRC-aided list and
//! prefix-terminated list decoding.
//!
//! The code is `x = u·F^{⊗n}` in natural order, so at every level of the
//! recursion symbol `j` pairs with `j + N/2`. LLRs are positive for bit 0.
//!
//! The list decoder keeps one array per tree layer per path and shares them
//! between paths with reference counts, copying a layer only when a path
//! writes to an array another path still reads.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::crc::CrcSpec;
use crate::{Error, Result};

/// Check-node LLR rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FFunction {
    /// `sign(a)·sign(b)·min(|a|, |b|)`
    #[default]
    MinSum,
    /// `2·atanh(tanh(a/2)·tanh(b/2))`
    Exact,
}

const SIGN: u64 = 1 << 63;

#[inline(always)]
fn f_min_sum(a: f64, b: f64) -> f64 {
    let m = a.abs().min(b.abs());
    f64::from_bits(m.to_bits() | ((a.to_bits() ^ b.to_bits()) & SIGN))
}

#[inline]
fn f_exact(a: f64, b: f64) -> f64 {
    let m = f_min_sum(a, b);
    let corr = libm::log1p(libm::exp(-(a + b).abs())) - libm::log1p(libm::exp(-(a - b).abs()));
    // The correction only shrinks the magnitude; clamp rounding at zero.
    if m >= 0.0 {
        (m + corr).max(0.0)
    } else {
        (m + corr).min(0.0)
    }
}

impl FFunction {
    #[inline(always)]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Self::MinSum => f_min_sum(a, b),
            Self::Exact => f_exact(a, b),
        }
    }
}

#[inline(always)]
fn g(a: f64, b: f64, left: u8) -> f64 {
    if left == 0 {
        b + a
    } else {
        b - a
    }
}

#[inline(always)]
fn hard(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

/// Metric increment for deciding `bit` against `llr`.
#[inline(always)]
fn penalty(llr: f64, bit: u8) -> f64 {
    if hard(llr) == bit || llr == 0.0 {
        0.0
    } else {
        llr.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitRole {
    Frozen(u8),
    Info,
}

/// Role of every position of `u`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrozenMap {
    roles: Vec<BitRole>,
}

impl FrozenMap {
    /// Positions in `info` are information bits; every other one is frozen to 0.
    pub fn from_info(n: usize, info: &[usize]) -> Self {
        let mut roles = vec![BitRole::Frozen(0); n];
        for &i in info {
            roles[i] = BitRole::Info;
        }
        Self { roles }
    }

    pub fn from_roles(roles: Vec<BitRole>) -> Self {
        Self { roles }
    }

    /// Re-tags `positions` as frozen with the given values.
    pub fn freeze(&mut self, positions: &[usize], values: &[u8]) {
        for (&i, &b) in positions.iter().zip(values) {
            self.roles[i] = BitRole::Frozen(b & 1);
        }
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn role(&self, i: usize) -> BitRole {
        self.roles[i]
    }

    pub fn roles(&self) -> &[BitRole] {
        &self.roles
    }

    pub fn info_positions(&self) -> Vec<usize> {
        (0..self.roles.len())
            .filter(|&i| self.roles[i] == BitRole::Info)
            .collect()
    }

    pub fn info_count(&self) -> usize {
        self.roles.iter().filter(|r| **r == BitRole::Info).count()
    }
}

/// One surviving path of a list decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeCandidate {
    pub u_hat: Vec<u8>,
    /// Accumulated penalty; lower is more probable.
    pub path_metric: f64,
    /// Set by CRC-aided selection; `false` when unchecked.
    pub crc_ok: bool,
    /// Set by the receiver's pilot check; `false` when unchecked.
    pub pilot_consistent: bool,
}

/// A path of a prefix-terminated decode: the decided information bits so far.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixCandidate {
    pub bits: Vec<u8>,
    pub path_metric: f64,
}

fn check_inputs(llr: &[f64], fm: &FrozenMap) -> Result<()> {
    if llr.len() != fm.len() {
        return Err(Error::LengthMismatch {
            expected: fm.len(),
            got: llr.len(),
        });
    }
    if !llr.len().is_power_of_two() {
        return Err(Error::InvalidConfig("block length must be a power of two"));
    }
    Ok(())
}

/// Plain recursive SC decoder.
pub fn sc_decode(llr: &[f64], fm: &FrozenMap, f: FFunction) -> Result<Vec<u8>> {
    check_inputs(llr, fm)?;
    let mut u = vec![0u8; llr.len()];
    sc_recurse(llr, fm.roles(), &mut u, f, &mut |_, _| {});
    Ok(u)
}

/// SC with every decision replaced by `u_true` (genie-aided), returning the
/// LLR each leaf saw.
pub fn genie_leaf_llrs(llr: &[f64], u_true: &[u8], f: FFunction) -> Result<Vec<f64>> {
    if llr.len() != u_true.len() {
        return Err(Error::LengthMismatch {
            expected: llr.len(),
            got: u_true.len(),
        });
    }
    let roles: Vec<BitRole> = u_true.iter().map(|&b| BitRole::Frozen(b)).collect();
    let mut u = vec![0u8; llr.len()];
    let mut leaves = vec![0.0; llr.len()];
    sc_recurse(llr, &roles, &mut u, f, &mut |i, l| leaves[i] = l);
    Ok(leaves)
}

fn sc_recurse(
    llr: &[f64],
    roles: &[BitRole],
    u: &mut [u8],
    f: FFunction,
    leaf: &mut dyn FnMut(usize, f64),
) -> Vec<u8> {
    sc_node(llr, roles, u, 0, f, leaf)
}

fn sc_node(
    llr: &[f64],
    roles: &[BitRole],
    u: &mut [u8],
    offset: usize,
    f: FFunction,
    leaf: &mut dyn FnMut(usize, f64),
) -> Vec<u8> {
    let n = llr.len();
    if n == 1 {
        leaf(offset, llr[0]);
        let bit = match roles[0] {
            BitRole::Frozen(b) => b,
            BitRole::Info => hard(llr[0]),
        };
        u[0] = bit;
        return vec![bit];
    }
    let m = n / 2;
    let left_llr: Vec<f64> = (0..m).map(|j| f.apply(llr[j], llr[j + m])).collect();
    let (u_l, u_r) = u.split_at_mut(m);
    let left = sc_node(&left_llr, &roles[..m], u_l, offset, f, leaf);
    let right_llr: Vec<f64> = (0..m).map(|j| g(llr[j], llr[j + m], left[j])).collect();
    let right = sc_node(&right_llr, &roles[m..], u_r, offset + m, f, leaf);
    let mut out = Vec::with_capacity(n);
    out.extend(left.iter().zip(&right).map(|(a, b)| a ^ b));
    out.extend_from_slice(&right);
    out
}

/// Fixed-size arrays shared between paths by reference count.
#[derive(Debug, Clone)]
struct Pool<T> {
    size: usize,
    data: Vec<T>,
    refs: Vec<u32>,
    free: Vec<usize>,
}

impl<T: Copy + Default> Pool<T> {
    fn new(size: usize, capacity: usize) -> Self {
        Self {
            size,
            data: vec![T::default(); size * capacity],
            refs: vec![0; capacity],
            free: (0..capacity).rev().collect(),
        }
    }

    fn reset(&mut self) {
        self.refs.iter_mut().for_each(|r| *r = 0);
        self.free.clear();
        self.free.extend((0..self.refs.len()).rev());
    }

    fn alloc(&mut self) -> usize {
        let id = self.free.pop().expect("pool capacity covers the list size");
        self.refs[id] = 1;
        id
    }

    fn release(&mut self, id: usize) {
        self.refs[id] -= 1;
        if self.refs[id] == 0 {
            self.free.push(id);
        }
    }

    #[inline]
    fn slice(&self, id: usize) -> &[T] {
        &self.data[id * self.size..(id + 1) * self.size]
    }

    #[inline]
    fn slice_mut(&mut self, id: usize) -> &mut [T] {
        &mut self.data[id * self.size..(id + 1) * self.size]
    }
}

/// SCL decoder for one block length and a maximum list size. Holds all the
/// scratch memory; create one per worker.
#[derive(Debug, Clone)]
pub struct ListDecoder {
    n: usize,
    layers: usize,
    capacity: usize,
    f: FFunction,
    /// Layer `ℓ` holds the LLRs of the current size-`2^ℓ` node.
    llr: Vec<Pool<f64>>,
    /// Layer `ℓ` holds the partial sums of the left and right size-`2^ℓ` children.
    bits: Vec<Pool<u8>>,
    llr_idx: Vec<usize>,
    bit_idx: Vec<usize>,
    metric: Vec<f64>,
    /// Active path slots, best first.
    active: Vec<usize>,
    idle: Vec<usize>,
    /// `(parent slot, bit)` per step and slot.
    trace: Vec<(u16, u8)>,
    candidates: Vec<(f64, usize, u8)>,
}

impl ListDecoder {
    pub fn new(n: usize, max_list: usize) -> Result<Self> {
        Self::with_f(n, max_list, FFunction::MinSum)
    }

    pub fn with_f(n: usize, max_list: usize, f: FFunction) -> Result<Self> {
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidConfig("block length must be a power of two ≥ 2"));
        }
        if max_list == 0 || max_list > u16::MAX as usize {
            return Err(Error::InvalidConfig("list size out of range"));
        }
        let layers = n.trailing_zeros() as usize;
        Ok(Self {
            n,
            layers,
            capacity: max_list,
            f,
            llr: (0..layers).map(|l| Pool::new(1 << l, max_list)).collect(),
            bits: (0..layers).map(|l| Pool::new(2 << l, max_list)).collect(),
            llr_idx: vec![0; layers * max_list],
            bit_idx: vec![0; layers * max_list],
            metric: vec![0.0; max_list],
            active: Vec::with_capacity(max_list),
            idle: Vec::with_capacity(max_list),
            trace: vec![(0, 0); n * max_list],
            candidates: Vec::with_capacity(2 * max_list),
        })
    }

    pub fn block_length(&self) -> usize {
        self.n
    }

    pub fn max_list(&self) -> usize {
        self.capacity
    }

    pub fn f_function(&self) -> FFunction {
        self.f
    }

    /// Full list decode. Returns up to `list` candidates, best metric first.
    pub fn scl_decode(&mut self, llr: &[f64], fm: &FrozenMap, list: usize) -> Result<Vec<DecodeCandidate>> {
        let last = self.run(llr, fm, list, None)?;
        Ok(self
            .active
            .clone()
            .into_iter()
            .map(|slot| DecodeCandidate {
                u_hat: self.backtrack(slot, last),
                path_metric: self.metric[slot],
                crc_ok: false,
                pilot_consistent: false,
            })
            .collect())
    }

    /// List decode, then pick the best candidate whose extracted word passes
    /// `crc`. Falls back to the best-metric candidate with `crc_ok = false`.
    pub fn ca_scl_decode<E>(
        &mut self,
        llr: &[f64],
        fm: &FrozenMap,
        list: usize,
        crc: &CrcSpec,
        extract: E,
    ) -> Result<DecodeCandidate>
    where
        E: Fn(&[u8]) -> Vec<u8>,
    {
        let mut list = self.scl_decode(llr, fm, list)?;
        let pick = list.iter().position(|c| crc.check(&extract(&c.u_hat)));
        let mut best = list.swap_remove(pick.unwrap_or(0));
        best.crc_ok = pick.is_some();
        Ok(best)
    }

    /// Runs the list decoder only until the `stop_count`-th information bit
    /// has been decided and returns the decided information bits of every
    /// surviving path, best first.
    pub fn prefix_scl_decode(
        &mut self,
        llr: &[f64],
        fm: &FrozenMap,
        list: usize,
        stop_count: usize,
    ) -> Result<Vec<PrefixCandidate>> {
        if stop_count > fm.info_count() {
            return Err(Error::InvalidConfig("stop count exceeds the information bits"));
        }
        if stop_count == 0 {
            check_inputs(llr, fm)?;
            return Ok(vec![PrefixCandidate {
                bits: Vec::new(),
                path_metric: 0.0,
            }]);
        }
        let last = self.run(llr, fm, list, Some(stop_count))?;
        let roles = fm.roles();
        Ok(self
            .active
            .clone()
            .into_iter()
            .map(|slot| {
                let u = self.backtrack(slot, last);
                PrefixCandidate {
                    bits: (0..=last)
                        .filter(|&i| roles[i] == BitRole::Info)
                        .map(|i| u[i])
                        .collect(),
                    path_metric: self.metric[slot],
                }
            })
            .collect())
    }

    fn reset(&mut self) {
        for p in &mut self.llr {
            p.reset();
        }
        for p in &mut self.bits {
            p.reset();
        }
        self.active.clear();
        self.idle.clear();
        self.idle.extend((1..self.capacity).rev());
        self.active.push(0);
        self.metric[0] = 0.0;
        for l in 0..self.layers {
            self.llr_idx[l] = self.llr[l].alloc();
            self.bit_idx[l] = self.bits[l].alloc();
        }
    }

    /// Decodes leaves `0..` until the end or until `stop_info` information
    /// bits are decided. Returns the last processed leaf.
    fn run(&mut self, llr: &[f64], fm: &FrozenMap, list: usize, stop_info: Option<usize>) -> Result<usize> {
        check_inputs(llr, fm)?;
        if llr.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: llr.len(),
            });
        }
        if list == 0 || list > self.capacity {
            return Err(Error::InvalidConfig("list size exceeds decoder capacity"));
        }
        self.reset();
        let mut decided = 0;
        for phi in 0..self.n {
            for k in 0..self.active.len() {
                let slot = self.active[k];
                self.update_llrs(slot, phi, llr);
            }
            match fm.role(phi) {
                BitRole::Frozen(bit) => {
                    for k in 0..self.active.len() {
                        let slot = self.active[k];
                        let leaf = self.llr[0].slice(self.llr_idx[slot * self.layers])[0];
                        self.metric[slot] += penalty(leaf, bit);
                        self.trace[phi * self.capacity + slot] = (slot as u16, bit);
                        self.update_bits(slot, phi, bit);
                    }
                }
                BitRole::Info => {
                    self.fork(phi, list);
                    decided += 1;
                }
            }
            if stop_info == Some(decided) {
                return Ok(phi);
            }
        }
        Ok(self.n - 1)
    }

    fn fork(&mut self, phi: usize, list: usize) {
        let layers = self.layers;
        self.candidates.clear();
        for (rank, &slot) in self.active.iter().enumerate() {
            let leaf = self.llr[0].slice(self.llr_idx[slot * layers])[0];
            let pm = self.metric[slot];
            self.candidates.push((pm + penalty(leaf, 0), rank, 0));
            self.candidates.push((pm + penalty(leaf, 1), rank, 1));
        }
        self.candidates
            .sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        self.candidates.truncate(list);

        let old = core::mem::take(&mut self.active);
        let mut used = vec![false; old.len()];
        for c in &self.candidates {
            used[c.1] = true;
        }
        for (rank, &slot) in old.iter().enumerate() {
            if !used[rank] {
                self.kill(slot);
            }
        }
        let mut taken = vec![false; old.len()];
        let candidates = core::mem::take(&mut self.candidates);
        for &(pm, rank, bit) in &candidates {
            let parent = old[rank];
            let slot = if taken[rank] {
                self.clone_path(parent)
            } else {
                taken[rank] = true;
                parent
            };
            self.metric[slot] = pm;
            self.trace[phi * self.capacity + slot] = (parent as u16, bit);
            self.active.push(slot);
        }
        self.candidates = candidates;
        for k in 0..self.active.len() {
            let slot = self.active[k];
            let bit = self.trace[phi * self.capacity + slot].1;
            self.update_bits(slot, phi, bit);
        }
    }

    fn kill(&mut self, slot: usize) {
        for l in 0..self.layers {
            self.llr[l].release(self.llr_idx[slot * self.layers + l]);
            self.bits[l].release(self.bit_idx[slot * self.layers + l]);
        }
        self.idle.push(slot);
    }

    fn clone_path(&mut self, src: usize) -> usize {
        let dst = self.idle.pop().expect("list never exceeds capacity");
        for l in 0..self.layers {
            let a = self.llr_idx[src * self.layers + l];
            let b = self.bit_idx[src * self.layers + l];
            self.llr[l].refs[a] += 1;
            self.bits[l].refs[b] += 1;
            self.llr_idx[dst * self.layers + l] = a;
            self.bit_idx[dst * self.layers + l] = b;
        }
        dst
    }

    /// Array for writing a whole LLR layer; shared arrays are replaced
    /// without copying.
    fn writable_llr(&mut self, slot: usize, l: usize) -> usize {
        let key = slot * self.layers + l;
        let id = self.llr_idx[key];
        if self.llr[l].refs[id] == 1 {
            return id;
        }
        self.llr[l].release(id);
        let fresh = self.llr[l].alloc();
        self.llr_idx[key] = fresh;
        fresh
    }

    /// Array for partially writing a partial-sum layer; shared arrays are
    /// copied first.
    fn writable_bits(&mut self, slot: usize, l: usize) -> usize {
        let key = slot * self.layers + l;
        let id = self.bit_idx[key];
        if self.bits[l].refs[id] == 1 {
            return id;
        }
        let pool = &mut self.bits[l];
        let fresh = pool.alloc();
        let size = pool.size;
        pool.data.copy_within(id * size..(id + 1) * size, fresh * size);
        pool.release(id);
        self.bit_idx[key] = fresh;
        fresh
    }

    fn update_llrs(&mut self, slot: usize, phi: usize, channel: &[f64]) {
        let layers = self.layers;
        let (top, right_at_top) = if phi == 0 {
            (layers - 1, false)
        } else {
            (phi.trailing_zeros() as usize, true)
        };
        for l in (0..=top).rev() {
            let child = self.writable_llr(slot, l);
            let half = 1usize << l;
            let (lo, hi) = self.llr.split_at_mut(l + 1);
            let parent: &[f64] = if l + 1 == layers {
                channel
            } else {
                hi[0].slice(self.llr_idx[slot * layers + l + 1])
            };
            let out = lo[l].slice_mut(child);
            let (pa, pb) = parent.split_at(half);
            if right_at_top && l == top {
                let left = &self.bits[l].slice(self.bit_idx[slot * layers + l])[..half];
                for (((o, &a), &b), &s) in out.iter_mut().zip(pa).zip(pb).zip(left) {
                    *o = g(a, b, s);
                }
            } else {
                match self.f {
                    FFunction::MinSum => {
                        for ((o, &a), &b) in out.iter_mut().zip(pa).zip(pb) {
                            *o = f_min_sum(a, b);
                        }
                    }
                    FFunction::Exact => {
                        for ((o, &a), &b) in out.iter_mut().zip(pa).zip(pb) {
                            *o = f_exact(a, b);
                        }
                    }
                }
            }
        }
    }

    fn update_bits(&mut self, slot: usize, phi: usize, bit: u8) {
        let layers = self.layers;
        let id = self.writable_bits(slot, 0);
        self.bits[0].slice_mut(id)[phi & 1] = bit;
        let mut l = 0;
        while l + 1 < layers && (phi >> l) & 1 == 1 {
            let dst = self.writable_bits(slot, l + 1);
            let src = self.bit_idx[slot * layers + l];
            let half = 1usize << l;
            let offset = ((phi >> (l + 1)) & 1) * 2 * half;
            let (lo, hi) = self.bits.split_at_mut(l + 1);
            let s = lo[l].slice(src);
            let d = &mut hi[0].slice_mut(dst)[offset..offset + 2 * half];
            let (s_l, s_r) = s.split_at(half);
            let (d_l, d_r) = d.split_at_mut(half);
            for j in 0..half {
                d_l[j] = s_l[j] ^ s_r[j];
                d_r[j] = s_r[j];
            }
            l += 1;
        }
    }

    fn backtrack(&self, mut slot: usize, last: usize) -> Vec<u8> {
        let mut u = vec![0u8; self.n];
        for phi in (0..=last).rev() {
            let (parent, bit) = self.trace[phi * self.capacity + slot];
            u[phi] = bit;
            slot = parent as usize;
        }
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::polar_encode;
    use crate::construction::{bhattacharyya_parameters, reliability_order, ConstructionMethod};
    use crate::channel::SnrConvention;
    use crate::LLR_MAX;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noisy_llr(x: &[u8], sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
        x.iter()
            .map(|&b| {
                let s = if b == 0 { 1.0 } else { -1.0 };
                let z: f64 = StandardNormal.sample(rng);
                2.0 * (s + sigma * z) / (sigma * sigma)
            })
            .collect()
    }

    fn code(n: usize, k: usize) -> FrozenMap {
        let r = reliability_order(n, 2.0, 1.0, ConstructionMethod::GaussianApproximation, SnrConvention::AverageReceived).unwrap();
        FrozenMap::from_info(n, &r[..k])
    }

    fn random_u(fm: &FrozenMap, rng: &mut ChaCha8Rng) -> Vec<u8> {
        fm.roles()
            .iter()
            .map(|r| match r {
                BitRole::Frozen(b) => *b,
                BitRole::Info => rng.random_range(0..2),
            })
            .collect()
    }

    #[test]
    fn n2_hand_example() {
        let fm = FrozenMap::from_info(2, &[0, 1]);
        assert_eq!(sc_decode(&[3.0, -1.0], &fm, FFunction::MinSum).unwrap(), vec![1, 1]);
        let mut dec = ListDecoder::new(2, 4).unwrap();
        let list = dec.scl_decode(&[3.0, -1.0], &fm, 4).unwrap();
        // Metrics equal the correlation discrepancy of each codeword.
        let metrics: Vec<f64> = list.iter().map(|c| c.path_metric).collect();
        assert_eq!(list[0].u_hat, vec![1, 1]);
        assert_eq!(metrics, vec![0.0, 1.0, 3.0, 4.0]);
    }

    #[test]
    fn all_frozen_returns_frozen_vector() {
        let roles = vec![BitRole::Frozen(1), BitRole::Frozen(0), BitRole::Frozen(1), BitRole::Frozen(1)];
        let fm = FrozenMap::from_roles(roles);
        let llr = [5.0, -2.0, 0.5, 3.0];
        assert_eq!(sc_decode(&llr, &fm, FFunction::MinSum).unwrap(), vec![1, 0, 1, 1]);
        let mut dec = ListDecoder::new(4, 2).unwrap();
        let list = dec.scl_decode(&llr, &fm, 2).unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].u_hat, vec![1, 0, 1, 1]);
    }

    #[test]
    fn noiseless_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut dec = ListDecoder::new(256, 8).unwrap();
        for k in [1, 64, 128, 255] {
            let fm = code(256, k);
            let u = random_u(&fm, &mut rng);
            let x = polar_encode(&u);
            let llr: Vec<f64> = x.iter().map(|&b| if b == 0 { LLR_MAX } else { -LLR_MAX }).collect();
            assert_eq!(sc_decode(&llr, &fm, FFunction::MinSum).unwrap(), u);
            let list = dec.scl_decode(&llr, &fm, 8).unwrap();
            assert_eq!(list[0].u_hat, u);
            assert_eq!(list[0].path_metric, 0.0);
        }
    }

    #[test]
    fn list_of_one_is_sc() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut dec = ListDecoder::new(128, 1).unwrap();
        for f in [FFunction::MinSum, FFunction::Exact] {
            let mut dec_f = ListDecoder::with_f(128, 1, f).unwrap();
            for _ in 0..200 {
                let fm = code(128, 64);
                let x = polar_encode(&random_u(&fm, &mut rng));
                let llr = noisy_llr(&x, 0.9, &mut rng);
                let sc = sc_decode(&llr, &fm, f).unwrap();
                assert_eq!(dec_f.scl_decode(&llr, &fm, 1).unwrap()[0].u_hat, sc);
                if f == FFunction::MinSum {
                    assert_eq!(dec.scl_decode(&llr, &fm, 1).unwrap()[0].u_hat, sc);
                }
            }
        }
    }

    /// Exact ML over every codeword of the code by squared Euclidean distance.
    fn brute_force_ml(fm: &FrozenMap, y: &[f64]) -> Vec<u8> {
        let info = fm.info_positions();
        let mut best = (f64::INFINITY, Vec::new());
        for m in 0..1u32 << info.len() {
            let mut u = vec![0u8; fm.len()];
            for (k, &i) in info.iter().enumerate() {
                u[i] = ((m >> k) & 1) as u8;
            }
            let x = polar_encode(&u);
            let d: f64 = x
                .iter()
                .zip(y)
                .map(|(&b, &r)| (r - if b == 0 { 1.0 } else { -1.0 }).powi(2))
                .sum();
            if d < best.0 {
                best = (d, u);
            }
        }
        best.1
    }

    #[test]
    fn full_list_is_maximum_likelihood() {
        let fm = code(8, 4);
        let mut dec = ListDecoder::new(8, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..2000 {
            let snr_db = (trial % 7) as f64;
            let sigma = (10f64.powf(-snr_db / 10.0)).sqrt();
            let x = polar_encode(&random_u(&fm, &mut rng));
            let y: Vec<f64> = x
                .iter()
                .map(|&b| (if b == 0 { 1.0 } else { -1.0 }) + sigma * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect();
            let llr: Vec<f64> = y.iter().map(|v| 2.0 * v / (sigma * sigma)).collect();
            let list = dec.scl_decode(&llr, &fm, 16).unwrap();
            assert_eq!(list.len(), 16);
            assert_eq!(list[0].u_hat, brute_force_ml(&fm, &y), "trial {trial}");
        }
    }

    #[test]
    fn genie_leaves_reproduce_erasure_bhattacharyya() {
        // Enumerate every erasure pattern of N=4 at ε=0.5 (erasure = LLR 0):
        // the fraction of patterns leaving leaf i at zero is its Bhattacharyya
        // parameter under the same index convention as the construction.
        let n = 4;
        let mut erased = vec![0usize; n];
        for pattern in 0..1u32 << n {
            let llr: Vec<f64> = (0..n).map(|j| if (pattern >> j) & 1 == 1 { 0.0 } else { LLR_MAX }).collect();
            let leaves = genie_leaf_llrs(&llr, &[0; 4], FFunction::MinSum).unwrap();
            for (i, l) in leaves.iter().enumerate() {
                if *l == 0.0 {
                    erased[i] += 1;
                }
            }
        }
        let z = bhattacharyya_parameters(n, 0.5);
        for i in 0..n {
            assert_eq!(erased[i] as f64 / 16.0, z[i]);
        }
    }

    #[test]
    fn prefix_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let fm = code(64, 32);
        let x = polar_encode(&random_u(&fm, &mut rng));
        let llr = noisy_llr(&x, 0.8, &mut rng);
        let mut dec = ListDecoder::new(64, 8).unwrap();
        let empty = dec.prefix_scl_decode(&llr, &fm, 8, 0).unwrap();
        assert_eq!(empty, vec![PrefixCandidate { bits: vec![], path_metric: 0.0 }]);
        let full = dec.prefix_scl_decode(&llr, &fm, 8, 32).unwrap();
        let list = dec.scl_decode(&llr, &fm, 8).unwrap();
        let info = fm.info_positions();
        assert_eq!(full.len(), list.len());
        for (p, c) in full.iter().zip(&list) {
            assert_eq!(p.bits, info.iter().map(|&i| c.u_hat[i]).collect::<Vec<_>>());
            assert!(p.path_metric <= c.path_metric);
        }
        assert!(dec.prefix_scl_decode(&llr, &fm, 8, 33).is_err());
    }

    #[test]
    fn noiseless_prefix_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let fm = code(128, 70);
        let u = random_u(&fm, &mut rng);
        let llr: Vec<f64> = polar_encode(&u).iter().map(|&b| if b == 0 { 20.0 } else { -20.0 }).collect();
        let mut dec = ListDecoder::new(128, 16).unwrap();
        let p = dec.prefix_scl_decode(&llr, &fm, 16, 12).unwrap();
        let info = fm.info_positions();
        assert_eq!(p[0].bits, info[..12].iter().map(|&i| u[i]).collect::<Vec<_>>());
        assert_eq!(p[0].path_metric, 0.0);
    }

    #[test]
    fn crc_rejects_single_flip() {
        // Payload of 12 bits plus a 4-bit CRC on a 32-bit code; the channel
        // is noiseless except for one information bit driven the wrong way
        // in the u domain, which is exactly a single-bit payload error.
        let crc = CrcSpec::standard(4).unwrap();
        let fm = code(32, 16);
        let info = fm.info_positions();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let payload: Vec<u8> = (0..12).map(|_| rng.random_range(0..2)).collect();
        let mut word = payload.clone();
        word.extend(crc.compute(&payload));
        let mut u = vec![0u8; 32];
        for (&i, &b) in info.iter().zip(&word) {
            u[i] = b;
        }
        let mut wrong = u.clone();
        wrong[info[5]] ^= 1;
        // Soft values favour the wrong word but only slightly.
        let xw = polar_encode(&wrong);
        let xt = polar_encode(&u);
        let llr: Vec<f64> = xw
            .iter()
            .zip(&xt)
            .map(|(&a, &b)| match (a, b) {
                (0, 0) => 10.0,
                (1, 1) => -10.0,
                (0, _) => 0.2,
                _ => -0.2,
            })
            .collect();
        let mut dec = ListDecoder::new(32, 8).unwrap();
        let plain = dec.scl_decode(&llr, &fm, 8).unwrap();
        assert_eq!(plain[0].u_hat, wrong);
        let extract = |u: &[u8]| info.iter().map(|&i| u[i]).collect::<Vec<_>>();
        let best = dec.ca_scl_decode(&llr, &fm, 8, &crc, extract).unwrap();
        assert!(best.crc_ok);
        assert_eq!(best.u_hat, u);
    }

    #[test]
    fn decoder_rejects_bad_lengths() {
        let mut dec = ListDecoder::new(8, 2).unwrap();
        let fm = FrozenMap::from_info(8, &[7]);
        assert!(dec.scl_decode(&[0.0; 4], &FrozenMap::from_info(4, &[3]), 2).is_err());
        assert!(dec.scl_decode(&[0.0; 8], &fm, 3).is_err());
        assert!(ListDecoder::new(12, 2).is_err());
    }

    #[test]
    fn exact_f_matches_tanh_rule() {
        for (a, b) in [(1.0, 2.0), (-3.0, 0.5), (0.1, -0.1), (8.0, 9.0), (-6.0, -7.5)] {
            let t = 2.0 * ((a / 2.0f64).tanh() * (b / 2.0f64).tanh()).atanh();
            assert!((f_exact(a, b) - t).abs() < 1e-9, "{a} {b}");
        }
        // Large magnitudes, where the tanh form loses precision.
        let expected = 20.0 + (-50f64).exp().ln_1p() - (-10f64).exp().ln_1p();
        assert!((f_exact(-20.0, -30.0) - expected).abs() < 1e-12);
        assert!(f_exact(300.0, 300.0).is_finite());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn metrics_never_decrease(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fm = code(64, 32);
            let x = polar_encode(&random_u(&fm, &mut rng));
            let llr = noisy_llr(&x, 1.0, &mut rng);
            let mut dec = ListDecoder::new(64, 4).unwrap();
            let mut prev = 0.0;
            for stop in 1..=32 {
                let best = dec.prefix_scl_decode(&llr, &fm, 4, stop).unwrap()[0].path_metric;
                prop_assert!(best >= prev);
                prev = best;
            }
            let list = dec.scl_decode(&llr, &fm, 4).unwrap();
            for w in list.windows(2) {
                prop_assert!(w[0].path_metric <= w[1].path_metric);
            }
        }

        #[test]
        fn deterministic(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fm = code(128, 60);
            let x = polar_encode(&random_u(&fm, &mut rng));
            let llr = noisy_llr(&x, 1.0, &mut rng);
            let mut a = ListDecoder::new(128, 8).unwrap();
            let mut b = ListDecoder::new(128, 16).unwrap();
            prop_assert_eq!(a.scl_decode(&llr, &fm, 8).unwrap(), b.scl_decode(&llr, &fm, 8).unwrap());
            prop_assert_eq!(a.scl_decode(&llr, &fm, 8).unwrap(), a.scl_decode(&llr, &fm, 8).unwrap());
        }
    }

    /// List decoding written directly from the definition: every path keeps
    /// its own `u` prefix and its leaf LLR is recomputed from scratch.
    fn naive_scl(llr: &[f64], fm: &FrozenMap, list: usize) -> Vec<(Vec<u8>, f64)> {
        let n = llr.len();
        let mut paths: Vec<(Vec<u8>, f64)> = vec![(vec![0; n], 0.0)];
        for i in 0..n {
            let mut next = Vec::new();
            for (u, pm) in &paths {
                let leaf = genie_leaf_llrs(llr, u, FFunction::MinSum).unwrap()[i];
                let bits: &[u8] = match fm.role(i) {
                    BitRole::Frozen(0) => &[0],
                    BitRole::Frozen(_) => &[1],
                    BitRole::Info => &[0, 1],
                };
                for &b in bits {
                    let mut v = u.clone();
                    v[i] = b;
                    next.push((v, pm + penalty(leaf, b)));
                }
            }
            // Stable sort keeps (path rank, bit) order among equal metrics.
            next.sort_by(|a, b| a.1.total_cmp(&b.1));
            if fm.role(i) == BitRole::Info {
                next.truncate(list);
            }
            paths = next;
        }
        paths
    }

    #[test]
    fn matches_naive_list_decoder() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let fm = code(32, 16);
        let mut dec = ListDecoder::new(32, 8).unwrap();
        for _ in 0..300 {
            let x = polar_encode(&random_u(&fm, &mut rng));
            let llr = noisy_llr(&x, 1.0, &mut rng);
            for l in [1, 2, 4, 8] {
                let fast: Vec<(Vec<u8>, f64)> = dec
                    .scl_decode(&llr, &fm, l)
                    .unwrap()
                    .into_iter()
                    .map(|c| (c.u_hat, c.path_metric))
                    .collect();
                let slow = naive_scl(&llr, &fm, l);
                assert_eq!(fast.len(), slow.len());
                for (a, b) in fast.iter().zip(&slow) {
                    assert_eq!(a.0, b.0);
                    assert!((a.1 - b.1).abs() < 1e-9);
                }
            }
        }
    }

    /// A larger list almost always keeps a path at least as good as the
    /// smaller list's best. It is not guaranteed: extra survivors can spawn
    /// children that crowd out the smaller list's winner at a later step
    /// (the naive decoder above reproduces every such case), so the check
    /// is on the frequency.
    #[test]
    fn doubling_the_list_rarely_loses_the_best() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let fm = code(128, 64);
        let mut dec = ListDecoder::new(128, 32).unwrap();
        let (mut total, mut worse) = (0, 0);
        for _ in 0..300 {
            let x = polar_encode(&random_u(&fm, &mut rng));
            let llr = noisy_llr(&x, 1.0, &mut rng);
            for l in [1, 2, 4, 8, 16] {
                let small = dec.scl_decode(&llr, &fm, l).unwrap();
                let big = dec.scl_decode(&llr, &fm, 2 * l).unwrap();
                total += 1;
                worse += usize::from(big[0].path_metric > small[0].path_metric);
            }
        }
        assert!(worse * 50 < total, "{worse}/{total}");
    }
}
