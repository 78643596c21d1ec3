//! Bit-packed GF(2) matrices and an incremental row basis.

use rand::Rng;

use crate::error::{Error, Result};

const WORD: usize = 64;

fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

/// Row-major GF(2) matrix, 64 columns per word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if f(r, c) {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    /// Uniformly random entries.
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            let row = m.row_mut(r);
            row.iter_mut().for_each(|w| *w = rng.gen());
            if !cols.is_multiple_of(WORD) {
                if let Some(last) = row.last_mut() {
                    *last &= (1u64 << (cols % WORD)) - 1;
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r * self.stride + c / WORD] >> (c % WORD)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        let w = &mut self.data[r * self.stride + c / WORD];
        let bit = 1u64 << (c % WORD);
        if value {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn rank(&self) -> usize {
        let mut basis = XorBasis::new(self.cols);
        (0..self.rows)
            .filter(|&r| basis.insert(self.row(r)))
            .count()
    }

    /// `M·v` for a 0/1 column vector `v` of length `cols`.
    pub fn mul_vec(&self, v: &[u8]) -> Result<Vec<u8>> {
        if v.len() != self.cols {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                actual: v.len(),
            });
        }
        let packed = pack(v);
        Ok((0..self.rows)
            .map(|r| {
                let ones: u32 = self
                    .row(r)
                    .iter()
                    .zip(&packed)
                    .map(|(a, b)| (a & b).count_ones())
                    .sum();
                (ones & 1) as u8
            })
            .collect())
    }
}

/// Pack 0/1 bytes into words, bit `i` of the vector at bit `i % 64` of word
/// `i / 64`.
pub fn pack(bits: &[u8]) -> Vec<u64> {
    let mut out = vec![0u64; words_for(bits.len())];
    for (i, &b) in bits.iter().enumerate() {
        if b & 1 == 1 {
            out[i / WORD] |= 1 << (i % WORD);
        }
    }
    out
}

/// A reduced set of linearly independent rows, grown one row at a time.
#[derive(Debug, Clone)]
pub struct XorBasis {
    stride: usize,
    rows: Vec<Vec<u64>>,
    /// Basis row whose highest set bit is this column.
    pivot_of: Vec<Option<usize>>,
}

fn highest_bit(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .rev()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * WORD + (WORD - 1 - w.leading_zeros() as usize))
}

impl XorBasis {
    pub fn new(cols: usize) -> Self {
        Self {
            stride: words_for(cols),
            rows: Vec::new(),
            pivot_of: vec![None; cols],
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Adds `row` if it is independent of the current basis; returns whether
    /// it was.
    pub fn insert(&mut self, row: &[u64]) -> bool {
        debug_assert_eq!(row.len(), self.stride);
        let mut v = row.to_vec();
        while let Some(lead) = highest_bit(&v) {
            match self.pivot_of[lead] {
                Some(p) => v.iter_mut().zip(&self.rows[p]).for_each(|(a, b)| *a ^= b),
                None => {
                    self.pivot_of[lead] = Some(self.rows.len());
                    self.rows.push(v);
                    return true;
                }
            }
        }
        false
    }
}

/// Rows `rows` of the polar generator `G = B_N F^{⊗n}` restricted to the
/// columns `cols`, in the given orders. `G[i][j] = 1` iff the bit-reversal of
/// `j` is a bitwise subset of `i`.
pub fn generator_submatrix(len: usize, rows: &[usize], cols: &[usize]) -> Result<BitMatrix> {
    let bits = crate::polar::log2_len(len)?;
    if let Some(&bad) = rows.iter().chain(cols).find(|&&i| i >= len) {
        return Err(Error::IndexOutOfRange { index: bad, len });
    }
    let reversed: Vec<usize> = cols
        .iter()
        .map(|&j| j.reverse_bits() >> (usize::BITS - bits))
        .collect();
    let mut m = BitMatrix::zeros(rows.len(), cols.len());
    for (r, &i) in rows.iter().enumerate() {
        for (c, &rj) in reversed.iter().enumerate() {
            if rj & !i == 0 {
                m.set(r, c, true);
            }
        }
    }
    Ok(m)
}
