//! Dense linear algebra over GF(2).
//!
//! Rows are packed into `u64` words, least significant bit first. Index sets
//! passed to [`BitMatrix::submatrix`] are 0-based and must be ascending.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

const WORD: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

/// A packed row vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// Builds a vector from unpacked bits. Any nonzero byte counts as 1.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                v.words[i / WORD] |= 1 << (i % WORD);
            }
        }
        v
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> u8 {
        debug_assert!(i < self.len);
        ((self.words[i / WORD] >> (i % WORD)) & 1) as u8
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: u8) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD);
        if bit & 1 == 1 {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// In-place XOR with another vector of the same length.
    pub fn xor_assign(&mut self, other: &BitVector) -> Result<()> {
        if self.len != other.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                got: other.len,
            });
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        Ok(())
    }

    /// Row-vector times matrix: `self · m`.
    pub fn mul_mat(&self, m: &BitMatrix) -> Result<BitVector> {
        if self.len != m.rows {
            return Err(Error::DimensionMismatch {
                expected: m.rows,
                got: self.len,
            });
        }
        let mut out = BitVector::zeros(m.cols);
        for i in 0..self.len {
            if self.get(i) == 1 {
                for (o, r) in out.words.iter_mut().zip(m.row_words(i)) {
                    *o ^= r;
                }
            }
        }
        Ok(out)
    }

    /// Picks the entries at `indices` (0-based), in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<BitVector> {
        let mut out = BitVector::zeros(indices.len());
        for (k, &i) in indices.iter().enumerate() {
            if i >= self.len {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    bound: self.len,
                });
            }
            out.set(k, self.get(i));
        }
        Ok(out)
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.len {
            write!(f, "{}", self.get(i))?;
        }
        f.write_str("]")
    }
}

/// A packed `rows × cols` matrix over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            words: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Builds a matrix from unpacked rows. All rows must have equal length.
    pub fn from_rows(rows: &[&[u8]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            for (j, &b) in row.iter().enumerate() {
                m.set(i, j, b);
            }
        }
        Ok(m)
    }

    /// The 2×2 polar kernel `[[1,0],[1,1]]`.
    pub fn polar_kernel() -> Self {
        Self::from_rows(&[&[1, 0], &[1, 1]]).expect("static kernel")
    }

    /// `F^{⊗n}` in natural (non bit-reversed) order, built by repeated
    /// Kronecker products of the kernel.
    pub fn polar_generator(n: u32) -> Self {
        let kernel = Self::polar_kernel();
        let mut g = Self::identity(1);
        for _ in 0..n {
            g = g.kron(&kernel);
        }
        g
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        debug_assert!(i < self.rows && j < self.cols);
        ((self.words[i * self.stride + j / WORD] >> (j % WORD)) & 1) as u8
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, bit: u8) {
        debug_assert!(i < self.rows && j < self.cols);
        let w = &mut self.words[i * self.stride + j / WORD];
        let mask = 1u64 << (j % WORD);
        if bit & 1 == 1 {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    fn row_words(&self, i: usize) -> &[u64] {
        &self.words[i * self.stride..(i + 1) * self.stride]
    }

    pub fn row(&self, i: usize) -> BitVector {
        BitVector {
            len: self.cols,
            words: self.row_words(i).to_vec(),
        }
    }

    fn xor_row_into(&mut self, src: usize, dst: usize) {
        for k in 0..self.stride {
            let w = self.words[src * self.stride + k];
            self.words[dst * self.stride + k] ^= w;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for k in 0..self.stride {
            self.words.swap(a * self.stride + k, b * self.stride + k);
        }
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = BitMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self.get(i, k) == 1 {
                    let dst = i * out.stride;
                    for (o, r) in out.words[dst..dst + out.stride]
                        .iter_mut()
                        .zip(other.row_words(k))
                    {
                        *o ^= r;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &BitMatrix) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) == 0 {
                    continue;
                }
                for p in 0..other.rows {
                    for q in 0..other.cols {
                        if other.get(p, q) == 1 {
                            out.set(i * other.rows + p, j * other.cols + q, 1);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) == 1 {
                    out.set(j, i, 1);
                }
            }
        }
        out
    }

    /// The submatrix with rows `rowset` and columns `colset`, both 0-based
    /// and strictly ascending.
    pub fn submatrix(&self, rowset: &[usize], colset: &[usize]) -> Result<BitMatrix> {
        check_index_set(rowset, self.rows)?;
        check_index_set(colset, self.cols)?;
        let mut out = BitMatrix::zeros(rowset.len(), colset.len());
        for (a, &i) in rowset.iter().enumerate() {
            for (b, &j) in colset.iter().enumerate() {
                if self.get(i, j) == 1 {
                    out.set(a, b, 1);
                }
            }
        }
        Ok(out)
    }

    /// Gauss–Jordan inversion. The pivot for each column is the first
    /// nonzero entry at or below the diagonal.
    pub fn inverse(&self) -> Result<BitMatrix> {
        if self.rows != self.cols {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = BitMatrix::identity(n);
        for col in 0..n {
            let pivot = (col..n).find(|&r| a.get(r, col) == 1).ok_or(Error::Singular)?;
            a.swap_rows(pivot, col);
            inv.swap_rows(pivot, col);
            for r in 0..n {
                if r != col && a.get(r, col) == 1 {
                    a.xor_row_into(col, r);
                    inv.xor_row_into(col, r);
                }
            }
        }
        Ok(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols && *self == BitMatrix::identity(self.rows)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            for j in 0..self.cols {
                write!(f, "{}", self.get(i, j))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn check_index_set(set: &[usize], bound: usize) -> Result<()> {
    for (k, &i) in set.iter().enumerate() {
        if i >= bound {
            return Err(Error::IndexOutOfRange { index: i, bound });
        }
        if k > 0 && set[k - 1] >= i {
            return Err(Error::InvalidConfig("index set must be strictly ascending"));
        }
    }
    Ok(())
}
