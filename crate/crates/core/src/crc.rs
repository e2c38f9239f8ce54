//! Bitwise CRC over unpacked bit strings.
//!
//! Registers start at the configured initial value, shift MSB-first and have
//! no final XOR. With a zero initial value the CRC is the remainder of
//! `M(x)·x^w` modulo the generator.

use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrcSpec {
    width: usize,
    /// Generator coefficients below the leading `x^width` term, MSB-first.
    generator: u64,
    init: u64,
}

impl CrcSpec {
    pub fn new(width: usize, generator: u64, init: u64) -> Result<Self> {
        if width > 63 {
            return Err(Error::UnsupportedCrcWidth(width));
        }
        let mask = (1u64 << width) - 1;
        if generator & !mask != 0 || init & !mask != 0 {
            return Err(Error::InvalidConfig("CRC generator or initial value wider than the CRC"));
        }
        Ok(Self {
            width,
            generator,
            init,
        })
    }

    /// A well-known generator for `width`, zero initial value. Width 0 is
    /// the empty CRC, which always checks.
    pub fn standard(width: usize) -> Result<Self> {
        let generator = match width {
            0 => 0,
            1 => 0x1,          // x+1
            2 => 0x3,          // x²+x+1
            3 => 0x3,          // x³+x+1
            4 => 0x3,          // x⁴+x+1
            5 => 0x05,         // x⁵+x²+1
            6 => 0x03,         // x⁶+x+1
            7 => 0x09,         // x⁷+x³+1
            8 => 0x07,         // x⁸+x²+x+1
            10 => 0x233,       // x¹⁰+x⁹+x⁵+x⁴+x+1
            11 => 0x621,       // x¹¹+x¹⁰+x⁹+x⁵+1
            12 => 0x80F,       // x¹²+x¹¹+x³+x²+x+1
            16 => 0x1021,      // x¹⁶+x¹²+x⁵+1
            24 => 0xB2B117,
            32 => 0x04C1_1DB7,
            _ => return Err(Error::UnsupportedCrcWidth(width)),
        };
        Self::new(width, generator, 0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn generator(&self) -> u64 {
        self.generator
    }

    /// CRC bits of `bits`, MSB-first.
    pub fn compute(&self, bits: &[u8]) -> Vec<u8> {
        if self.width == 0 {
            return Vec::new();
        }
        let reg = self.register(bits);
        (0..self.width)
            .rev()
            .map(|i| ((reg >> i) & 1) as u8)
            .collect()
    }

    /// True when the trailing `width` bits of `word` are the CRC of the rest.
    pub fn check(&self, word: &[u8]) -> bool {
        if word.len() < self.width {
            return false;
        }
        let (payload, crc) = word.split_at(word.len() - self.width);
        self.check_split(payload, crc)
    }

    pub fn check_split(&self, payload: &[u8], crc: &[u8]) -> bool {
        if crc.len() != self.width {
            return false;
        }
        if self.width == 0 {
            return true;
        }
        let reg = self.register(payload);
        crc.iter()
            .enumerate()
            .all(|(k, &b)| ((reg >> (self.width - 1 - k)) & 1) as u8 == (b & 1))
    }

    fn register(&self, bits: &[u8]) -> u64 {
        let top = self.width - 1;
        let mask = if self.width == 64 { u64::MAX } else { (1u64 << self.width) - 1 };
        let mut reg = self.init;
        for &b in bits {
            let feedback = ((reg >> top) & 1) ^ u64::from(b & 1);
            reg = (reg << 1) & mask;
            if feedback == 1 {
                reg ^= self.generator;
            }
        }
        reg
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Plain polynomial long division of `M(x)·x^w` by the full generator.
    fn long_division(msg: &[u8], generator_with_lead: &[u8]) -> Vec<u8> {
        let w = generator_with_lead.len() - 1;
        let mut r: Vec<u8> = msg.to_vec();
        r.extend(core::iter::repeat_n(0, w));
        for i in 0..msg.len() {
            if r[i] == 1 {
                for (k, &g) in generator_with_lead.iter().enumerate() {
                    r[i + k] ^= g;
                }
            }
        }
        r[msg.len()..].to_vec()
    }

    fn ascii_bits(s: &str) -> Vec<u8> {
        s.bytes().flat_map(|b| (0..8).rev().map(move |i| (b >> i) & 1)).collect()
    }

    fn poly_bits(width: usize, generator: u64) -> Vec<u8> {
        let mut v = vec![1u8];
        v.extend((0..width).rev().map(|i| ((generator >> i) & 1) as u8));
        v
    }

    #[test]
    fn check_value_123456789() {
        let bits = ascii_bits("123456789");
        let spec = CrcSpec::standard(16).unwrap();
        let oracle = long_division(&bits, &poly_bits(16, 0x1021));
        let crc = spec.compute(&bits);
        assert_eq!(crc, oracle);
        let value = crc.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b));
        assert_eq!(value, 0x31C3);
    }

    #[test]
    fn zero_input_gives_zero_crc() {
        for w in [4, 12, 16] {
            let spec = CrcSpec::standard(w).unwrap();
            assert_eq!(spec.compute(&[0; 37]), vec![0; w]);
        }
    }

    #[test]
    fn empty_crc_always_checks() {
        let spec = CrcSpec::standard(0).unwrap();
        assert!(spec.compute(&[1, 0, 1]).is_empty());
        assert!(spec.check(&[1, 0, 1]));
    }

    #[test]
    fn unsupported_width() {
        assert_eq!(CrcSpec::standard(9), Err(Error::UnsupportedCrcWidth(9)));
        assert!(CrcSpec::new(4, 0x13, 0).is_err());
    }

    #[test]
    fn single_bit_errors_detected() {
        let spec = CrcSpec::standard(4).unwrap();
        let mut word = vec![1, 0, 1, 1, 0, 0, 1, 0, 1, 1];
        word.extend(spec.compute(&word.clone()));
        assert!(spec.check(&word));
        for i in 0..word.len() {
            let mut w = word.clone();
            w[i] ^= 1;
            assert!(!spec.check(&w), "flip at {i}");
        }
    }

    proptest! {
        #[test]
        fn matches_long_division(bits in proptest::collection::vec(0u8..2, 0..200), w in proptest::sample::select(vec![4usize, 12, 16, 24])) {
            let spec = CrcSpec::standard(w).unwrap();
            prop_assert_eq!(spec.compute(&bits), long_division(&bits, &poly_bits(w, spec.generator())));
        }

        #[test]
        fn appended_crc_checks(bits in proptest::collection::vec(0u8..2, 0..200), w in proptest::sample::select(vec![0usize, 4, 12, 16])) {
            let spec = CrcSpec::standard(w).unwrap();
            let mut word = bits.clone();
            word.extend(spec.compute(&bits));
            prop_assert!(spec.check(&word));
        }
    }
}
