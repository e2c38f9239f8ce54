//! Polar encoders: non-systematic, systematic, and hybrid with dynamic pilots.
//!
//! Bits are unpacked `u8` values (0 or 1). The transform is `v = u·F^{⊗n}`
//! without bit reversal.

use alloc::vec;
use alloc::vec::Vec;

use crate::construction::CodeConfig;
use crate::crc::CrcSpec;
use crate::gf2::{BitMatrix, BitVector};
use crate::{Error, Result};

/// In-place `x ← x·F^{⊗n}` butterfly. `bits.len()` must be a power of two.
pub fn polar_transform(bits: &mut [u8]) {
    let n = bits.len();
    debug_assert!(n.is_power_of_two());
    let mut half = n / 2;
    while half >= 1 {
        for block in bits.chunks_exact_mut(2 * half) {
            let (a, b) = block.split_at_mut(half);
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x ^= *y;
            }
        }
        half /= 2;
    }
}

pub fn polar_encode(u: &[u8]) -> Vec<u8> {
    let mut v = u.to_vec();
    polar_transform(&mut v);
    v
}

/// `x = u^I·G_N^I` with `u^F = 0`. `info` is ascending and 0-based.
pub fn encode_non_systematic(msg: &[u8], n: usize, info: &[usize]) -> Result<Vec<u8>> {
    if msg.len() != info.len() {
        return Err(Error::LengthMismatch {
            expected: info.len(),
            got: msg.len(),
        });
    }
    if !n.is_power_of_two() {
        return Err(Error::InvalidConfig("block length must be a power of two"));
    }
    let mut u = vec![0u8; n];
    for (&i, &b) in info.iter().zip(msg) {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, bound: n });
        }
        u[i] = b & 1;
    }
    polar_transform(&mut u);
    Ok(u)
}

/// Systematic encoder: message bits appear at codeword positions `J`.
#[derive(Debug, Clone)]
pub struct SystematicEncoder {
    n: usize,
    info: Vec<usize>,
    systematic: Vec<usize>,
    /// `(G_N^{IJ})⁻¹`
    inverse: BitMatrix,
}

impl SystematicEncoder {
    pub fn new(n: usize, info: &[usize], systematic: &[usize]) -> Result<Self> {
        if info.len() != systematic.len() {
            return Err(Error::LengthMismatch {
                expected: info.len(),
                got: systematic.len(),
            });
        }
        if !n.is_power_of_two() {
            return Err(Error::InvalidConfig("block length must be a power of two"));
        }
        let g = BitMatrix::polar_generator(n.trailing_zeros());
        let inverse = g.submatrix(info, systematic)?.inverse()?;
        Ok(Self {
            n,
            info: info.to_vec(),
            systematic: systematic.to_vec(),
            inverse,
        })
    }

    /// The input vector `u` with `u^I = x^J·(G^{IJ})⁻¹` and `u^{I^c} = 0`.
    pub fn input_vector(&self, msg: &[u8]) -> Result<Vec<u8>> {
        if msg.len() != self.info.len() {
            return Err(Error::LengthMismatch {
                expected: self.info.len(),
                got: msg.len(),
            });
        }
        let u_info = BitVector::from_bits(msg).mul_mat(&self.inverse)?;
        let mut u = vec![0u8; self.n];
        for (k, &i) in self.info.iter().enumerate() {
            u[i] = u_info.get(k);
        }
        Ok(u)
    }

    pub fn encode(&self, msg: &[u8]) -> Result<Vec<u8>> {
        let mut u = self.input_vector(msg)?;
        polar_transform(&mut u);
        Ok(u)
    }

    pub fn systematic_positions(&self) -> &[usize] {
        &self.systematic
    }
}

/// All intermediate vectors of one hybrid-encoded frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridFrame {
    /// Message, `K` bits.
    pub s: Vec<u8>,
    /// Polar input vector.
    pub u: Vec<u8>,
    /// Codeword before interleaving, `v = u·G_N`.
    pub v: Vec<u8>,
    /// Transmit order, `x = π(v)`.
    pub x: Vec<u8>,
}

/// A hybrid polar code ready to encode: configuration plus the CRCs and the
/// precomputed pieces of the systematic solve.
#[derive(Debug, Clone)]
pub struct HybridCode {
    cfg: CodeConfig,
    crc_pilot: CrcSpec,
    crc_message: CrcSpec,
    /// `G_N^{I_ns I_s}`
    g_ns_s: BitMatrix,
    /// `(G_N^{I_s I_s})⁻¹`
    g_ss_inv: BitMatrix,
}

impl HybridCode {
    pub fn new(cfg: CodeConfig) -> Result<Self> {
        let p = cfg.params();
        let crc_pilot = CrcSpec::standard(p.crc_pilot)?;
        let crc_message = CrcSpec::standard(p.crc_message)?;
        Self::with_crcs(cfg, crc_pilot, crc_message)
    }

    pub fn with_crcs(cfg: CodeConfig, crc_pilot: CrcSpec, crc_message: CrcSpec) -> Result<Self> {
        cfg.validate()?;
        let p = cfg.params();
        if crc_pilot.width() != p.crc_pilot || crc_message.width() != p.crc_message {
            return Err(Error::InvalidConfig("CRC widths disagree with m_e/m_d"));
        }
        let (g_ns_s, g_ss_inv) = if cfg.k_s() == 0 {
            (BitMatrix::zeros(cfg.non_systematic().len(), 0), BitMatrix::zeros(0, 0))
        } else {
            let g = BitMatrix::polar_generator(cfg.n().trailing_zeros());
            let g_ns_s = g.submatrix(cfg.non_systematic(), cfg.systematic())?;
            let g_ss_inv = g.submatrix(cfg.systematic(), cfg.systematic())?.inverse()?;
            (g_ns_s, g_ss_inv)
        };
        Ok(Self {
            cfg,
            crc_pilot,
            crc_message,
            g_ns_s,
            g_ss_inv,
        })
    }

    pub fn config(&self) -> &CodeConfig {
        &self.cfg
    }

    pub fn crc_pilot(&self) -> &CrcSpec {
        &self.crc_pilot
    }

    pub fn crc_message(&self) -> &CrcSpec {
        &self.crc_message
    }

    /// Message bits carried by the pilot prefix, `k_s − m_e` (0 without pilots).
    pub fn pilot_payload_len(&self) -> usize {
        self.cfg.k_s().saturating_sub(self.cfg.params().crc_pilot)
    }

    /// Pilot values `s^{1:k_s−m_e} ∥ CRC_{m_e}`.
    pub fn pilot_bits(&self, s: &[u8]) -> Vec<u8> {
        let prefix = &s[..self.pilot_payload_len()];
        let mut pilot = prefix.to_vec();
        if self.cfg.k_s() > 0 {
            pilot.extend(self.crc_pilot.compute(prefix));
        }
        pilot
    }

    /// Values of `u^{I_ns}` in ascending index order:
    /// pilot bits, then the rest of the message, then `CRC_{m_d}(s)`.
    pub fn non_systematic_values(&self, s: &[u8]) -> Result<Vec<u8>> {
        if s.len() != self.cfg.k() {
            return Err(Error::LengthMismatch {
                expected: self.cfg.k(),
                got: s.len(),
            });
        }
        let mut values = self.pilot_bits(s);
        values.extend_from_slice(&s[self.pilot_payload_len()..]);
        values.extend(self.crc_message.compute(s));
        debug_assert_eq!(values.len(), self.cfg.non_systematic().len());
        Ok(values)
    }

    /// `u^{I_s} = (v^{I_s} − u^{I_ns}·G^{I_ns I_s})·(G^{I_s I_s})⁻¹`.
    fn solve_systematic(&self, u_ns: &[u8], pilot: &[u8]) -> Result<BitVector> {
        let mut rhs = BitVector::from_bits(u_ns).mul_mat(&self.g_ns_s)?;
        rhs.xor_assign(&BitVector::from_bits(pilot))?;
        rhs.mul_mat(&self.g_ss_inv)
    }

    /// Hybrid encoding with dynamic pilots.
    pub fn encode(&self, s: &[u8]) -> Result<HybridFrame> {
        let u_ns = self.non_systematic_values(s)?;
        let pilot = &u_ns[..self.cfg.k_s()];
        let u_s = self.solve_systematic(&u_ns, pilot)?;
        let mut u = vec![0u8; self.cfg.n()];
        for (&i, &b) in self.cfg.non_systematic().iter().zip(&u_ns) {
            u[i] = b;
        }
        for (k, &i) in self.cfg.systematic().iter().enumerate() {
            u[i] = u_s.get(k);
        }
        let v = polar_encode(&u);
        let x = self.cfg.interleaver().interleave(&v)?;
        Ok(HybridFrame {
            s: s.to_vec(),
            u,
            v,
            x,
        })
    }

    /// Recovers `s` from a decoded input vector and reports whether the
    /// message CRC holds.
    pub fn extract_message(&self, u: &[u8]) -> (Vec<u8>, bool) {
        let ns = self.cfg.non_systematic();
        let values: Vec<u8> = ns.iter().map(|&i| u[i]).collect();
        let k = self.cfg.k();
        let k_s = self.cfg.k_s();
        let head = self.pilot_payload_len();
        let mut s = Vec::with_capacity(k);
        s.extend_from_slice(&values[..head]);
        s.extend_from_slice(&values[k_s..k_s + (k - head)]);
        let crc = &values[k_s + (k - head)..];
        let ok = self.crc_message.check_split(&s, crc);
        (s, ok)
    }

    /// `u` at the first `k_s` non-frozen positions.
    pub fn pilot_prefix_of(&self, u: &[u8]) -> Vec<u8> {
        self.cfg.pilot_prefix().iter().map(|&i| u[i]).collect()
    }

    /// True when `v̂^{I_s}` of `u` equals `pilot`.
    pub fn pilot_consistent(&self, u: &[u8], pilot: &[u8]) -> bool {
        let v = polar_encode(u);
        self.cfg
            .systematic()
            .iter()
            .zip(pilot)
            .all(|(&i, &b)| v[i] == b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{CodeParams, ConstructionMethod};
    use crate::channel::SnrConvention;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy_config() -> CodeConfig {
        let params = CodeParams {
            n: 4,
            k: 2,
            coherence_time: 4,
            blocks: 1,
            pilots_per_block: 1,
            crc_pilot: 0,
            crc_message: 0,
            list_pilot: 1,
            list_message: 1,
            design_snr_db: 0.0,
            sigma_h: 1.0,
            construction: ConstructionMethod::GaussianApproximation,
            snr_convention: SnrConvention::AverageReceived,
        };
        CodeConfig::from_ranking(params, &[3, 2, 1, 0]).unwrap()
    }

    fn small_params(n: usize, k: usize, blocks: usize, p: usize, m_e: usize, m_d: usize) -> CodeParams {
        CodeParams {
            n,
            k,
            coherence_time: n / blocks,
            blocks,
            pilots_per_block: p,
            crc_pilot: m_e,
            crc_message: m_d,
            list_pilot: 4,
            list_message: 4,
            design_snr_db: 2.0,
            sigma_h: 1.0,
            construction: ConstructionMethod::GaussianApproximation,
            snr_convention: SnrConvention::AverageReceived,
        }
    }

    #[test]
    fn transform_matches_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 0..=8u32 {
            let g = BitMatrix::polar_generator(n);
            let u: Vec<u8> = (0..1usize << n).map(|_| rng.random_range(0..2)).collect();
            let expected = BitVector::from_bits(&u).mul_mat(&g).unwrap().to_bits();
            assert_eq!(polar_encode(&u), expected);
        }
    }

    #[test]
    fn non_systematic_examples() {
        assert_eq!(encode_non_systematic(&[1, 0, 1], 4, &[1, 2, 3]).unwrap(), vec![0, 0, 1, 1]);
        assert_eq!(encode_non_systematic(&[0, 0, 0], 4, &[1, 2, 3]).unwrap(), vec![0; 4]);
        assert!(matches!(
            encode_non_systematic(&[0, 0], 4, &[1, 2, 3]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn systematic_examples() {
        let enc = SystematicEncoder::new(4, &[1, 2, 3], &[1, 2, 3]).unwrap();
        assert_eq!(enc.encode(&[0, 0, 0]).unwrap(), vec![0; 4]);
        // G^{IJ} rows {2,3,4}, cols {2,3,4} of G_4 = [[1,0,0],[0,1,0],[1,1,1]]
        // whose inverse is itself; u^I = [1,1,0]·inv = [1,1,0].
        let u = enc.input_vector(&[1, 1, 0]).unwrap();
        assert_eq!(u, vec![0, 1, 1, 0]);
        let x = enc.encode(&[1, 1, 0]).unwrap();
        assert_eq!(&x[1..], &[1, 1, 0]);
    }

    #[test]
    fn systematic_rejects_singular_selection() {
        // Rows {1,2} against columns {3,4}: G_4 has zeros there.
        assert_eq!(SystematicEncoder::new(4, &[0, 1], &[2, 3]).unwrap_err(), Error::Singular);
    }

    #[test]
    fn systematic_readback() {
        let cfg = CodeConfig::build(small_params(64, 24, 4, 0, 0, 0)).unwrap();
        let info = cfg.info_set();
        let enc = SystematicEncoder::new(64, &info, &info).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let msg: Vec<u8> = (0..info.len()).map(|_| rng.random_range(0..2)).collect();
            let x = enc.encode(&msg).unwrap();
            let readback: Vec<u8> = info.iter().map(|&j| x[j]).collect();
            assert_eq!(readback, msg);
        }
    }

    #[test]
    fn toy_hybrid_frame() {
        let code = HybridCode::new(toy_config()).unwrap();
        let f = code.encode(&[1, 0]).unwrap();
        assert_eq!(f.u, vec![0, 1, 0, 1]);
        assert_eq!(f.v, vec![0, 0, 1, 1]);
        assert_eq!(f.v[3], f.s[0]);
        let z = code.encode(&[0, 0]).unwrap();
        assert_eq!((z.u, z.v, z.x), (vec![0; 4], vec![0; 4], vec![0; 4]));
    }

    #[test]
    fn hybrid_round_trips_through_extraction() {
        let cfg = CodeConfig::build(small_params(128, 40, 4, 2, 4, 4)).unwrap();
        let code = HybridCode::new(cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let s: Vec<u8> = (0..40).map(|_| rng.random_range(0..2)).collect();
            let f = code.encode(&s).unwrap();
            let (back, ok) = code.extract_message(&f.u);
            assert!(ok);
            assert_eq!(back, s);
            let pilot = code.pilot_bits(&s);
            assert!(code.crc_pilot().check(&pilot));
            assert_eq!(code.pilot_prefix_of(&f.u), pilot);
            assert!(code.pilot_consistent(&f.u, &pilot));
            let mut wrong = f.u.clone();
            wrong[code.config().non_systematic()[10]] ^= 1;
            let (_, ok) = code.extract_message(&wrong);
            assert!(!ok || !code.pilot_consistent(&wrong, &pilot));
        }
    }

    #[test]
    fn reference_config_pilots_equal_prefix() {
        let code = HybridCode::new(CodeConfig::build(CodeParams::reference_t64()).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let s: Vec<u8> = (0..512).map(|_| rng.random_range(0..2)).collect();
            let f = code.encode(&s).unwrap();
            let vs: Vec<u8> = code.config().systematic().iter().map(|&i| f.v[i]).collect();
            assert_eq!(vs, code.pilot_prefix_of(&f.u));
        }
    }

    #[test]
    fn wrong_message_length() {
        let code = HybridCode::new(toy_config()).unwrap();
        assert!(code.encode(&[1]).is_err());
    }

    fn split_check(code: &HybridCode, f: &HybridFrame) -> bool {
        let cfg = code.config();
        let g = BitMatrix::polar_generator(cfg.n().trailing_zeros());
        let sets = [cfg.systematic(), cfg.non_systematic(), cfg.frozen()];
        let u_ns = BitVector::from_bits(&cfg.non_systematic().iter().map(|&i| f.u[i]).collect::<Vec<_>>());
        let u_s = BitVector::from_bits(&cfg.systematic().iter().map(|&i| f.u[i]).collect::<Vec<_>>());
        sets.iter().all(|cols| {
            let mut part = u_ns.mul_mat(&g.submatrix(cfg.non_systematic(), cols).unwrap()).unwrap();
            if !cfg.systematic().is_empty() {
                part.xor_assign(&u_s.mul_mat(&g.submatrix(cfg.systematic(), cols).unwrap()).unwrap()).unwrap();
            }
            part.to_bits() == cols.iter().map(|&j| f.v[j]).collect::<Vec<_>>()
        })
    }

    fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
        a.iter().zip(b).map(|(x, y)| x ^ y).collect()
    }

    proptest! {
        #[test]
        fn blockwise_products_reproduce_codeword(log_n in 4u32..=6, p in 1usize..=2, seed in any::<u64>()) {
            let n = 1usize << log_n;
            let blocks = 2;
            let k = n / 4;
            let code = HybridCode::new(CodeConfig::build(small_params(n, k, blocks, p, 1, 1)).unwrap()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s: Vec<u8> = (0..k).map(|_| rng.random_range(0..2)).collect();
            let f = code.encode(&s).unwrap();
            prop_assert!(split_check(&code, &f));
            let xs: Vec<u8> = code.config().systematic().iter().map(|&i| f.v[i]).collect();
            prop_assert_eq!(xs, code.pilot_bits(&s));
            prop_assert_eq!(code.config().interleaver().deinterleave(&f.x).unwrap(), f.v);
        }

        #[test]
        fn encoders_are_linear_without_crc(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let code = HybridCode::new(CodeConfig::build(small_params(64, 16, 4, 1, 0, 0)).unwrap()).unwrap();
            let a: Vec<u8> = (0..16).map(|_| rng.random_range(0..2)).collect();
            let b: Vec<u8> = (0..16).map(|_| rng.random_range(0..2)).collect();
            let fa = code.encode(&a).unwrap();
            let fb = code.encode(&b).unwrap();
            let fab = code.encode(&xor(&a, &b)).unwrap();
            prop_assert_eq!(fab.x, xor(&fa.x, &fb.x));

            let info = code.config().info_set();
            let ma: Vec<u8> = (0..info.len()).map(|_| rng.random_range(0..2)).collect();
            let mb: Vec<u8> = (0..info.len()).map(|_| rng.random_range(0..2)).collect();
            let ns = |m: &[u8]| encode_non_systematic(m, 64, &info).unwrap();
            prop_assert_eq!(ns(&xor(&ma, &mb)), xor(&ns(&ma), &ns(&mb)));
            let sys = SystematicEncoder::new(64, &info, &info).unwrap();
            prop_assert_eq!(sys.encode(&xor(&ma, &mb)).unwrap(), xor(&sys.encode(&ma).unwrap(), &sys.encode(&mb).unwrap()));
        }
    }
}
