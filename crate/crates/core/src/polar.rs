//! The polar transform `x = u·B_N·F^{⊗n}` and successive-cancellation
//! decoding.
//!
//! `B_N` commutes with `F^{⊗n}`, so the encoder runs the `F^{⊗n}` butterfly
//! in place and then applies the bit-reversal permutation. The decoder undoes
//! the permutation on the channel outputs and walks the butterfly tree in
//! natural order, so position `i` of `u` is decided through the split channel
//! `W_N^{(i)}` whose index bits read, most significant first, the
//! minus/plus branch taken at each polarization level. This is the same
//! order [`crate::construction::bec_z_evolution`] produces.
//!
//! Erasure channels are decoded with an exact three-valued message algebra;
//! every other channel uses log-likelihood ratios with `±∞` sentinels.

use crate::channel::{ChannelModel, ChannelSample};
use crate::construction::bec_z_evolution;
use crate::error::{Error, Result};

/// `log2(len)` if `len` is a power of two and at least 2.
pub fn log2_len(len: usize) -> Result<u32> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    Ok(len.trailing_zeros())
}

fn reverse_bits(i: usize, bits: u32) -> usize {
    if bits == 0 {
        return 0;
    }
    i.reverse_bits() >> (usize::BITS - bits)
}

/// The bit-reversal permutation of `0..len`: entry `i` is `i` with its
/// `log2(len)`-bit representation reversed.
pub fn bit_reversal_permutation(len: usize) -> Result<Vec<usize>> {
    let bits = log2_len(len)?;
    Ok((0..len).map(|i| reverse_bits(i, bits)).collect())
}

fn butterfly(v: &mut [u8]) {
    let len = v.len();
    let mut half = 1;
    while half < len {
        for block in v.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= *b;
            }
        }
        half *= 2;
    }
}

fn bit_reverse_in_place(v: &mut [u8], bits: u32) {
    for i in 0..v.len() {
        let j = reverse_bits(i, bits);
        if i < j {
            v.swap(i, j);
        }
    }
}

/// In-place `u ↦ u·B_N·F^{⊗n}` over GF(2).
pub fn polar_transform_in_place(u: &mut [u8]) -> Result<()> {
    let bits = log2_len(u.len())?;
    butterfly(u);
    bit_reverse_in_place(u, bits);
    Ok(())
}

/// `x = u·B_N·F^{⊗n}` in `O(N log N)`.
pub fn polar_encode(u: &[u8]) -> Result<Vec<u8>> {
    let mut x: Vec<u8> = u.iter().map(|b| b & 1).collect();
    polar_transform_in_place(&mut x)?;
    Ok(x)
}

/// How a decoded position was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Channel,
    Frozen,
    /// Both hypotheses equally likely; decided 0.
    TieBroken,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub u_hat: Vec<u8>,
    pub flags: Vec<Decision>,
}

impl DecodeResult {
    pub fn ties(&self) -> usize {
        self.flags
            .iter()
            .filter(|f| **f == Decision::TieBroken)
            .count()
    }
}

/// Three-valued SC message on erasure channels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Ternary {
    Zero,
    One,
    #[default]
    Erased,
}

impl Ternary {
    fn from_bit(b: u8) -> Self {
        if b & 1 == 0 {
            Ternary::Zero
        } else {
            Ternary::One
        }
    }

    fn from_sample(y: ChannelSample) -> Self {
        match y {
            ChannelSample::ZERO => Ternary::Zero,
            ChannelSample::ONE => Ternary::One,
            _ => Ternary::Erased,
        }
    }
}

trait ScMessage: Copy {
    /// Message for `a ⊕ b` given messages for `a` and `b`.
    fn check(a: Self, b: Self) -> Self;
    /// Message for `b` given `a ⊕ b` (first) and `b` (second) observations
    /// and the decided value of `a`.
    fn update(first: Self, second: Self, a: u8) -> Self;
    /// `Some(bit)` for a decision, `None` on an exact tie.
    fn hard(self) -> Option<u8>;
}

impl ScMessage for Ternary {
    fn check(a: Self, b: Self) -> Self {
        match (a, b) {
            (Ternary::Erased, _) | (_, Ternary::Erased) => Ternary::Erased,
            (a, b) => Ternary::from_bit((a == Ternary::One) as u8 ^ (b == Ternary::One) as u8),
        }
    }

    fn update(first: Self, second: Self, a: u8) -> Self {
        match (first, second) {
            (_, Ternary::Zero) | (_, Ternary::One) => second,
            (Ternary::Erased, Ternary::Erased) => Ternary::Erased,
            (f, Ternary::Erased) => Ternary::from_bit((f == Ternary::One) as u8 ^ a),
        }
    }

    fn hard(self) -> Option<u8> {
        match self {
            Ternary::Zero => Some(0),
            Ternary::One => Some(1),
            Ternary::Erased => None,
        }
    }
}

/// LLR `ln P(0)/P(1)`.
impl ScMessage for f64 {
    fn check(a: f64, b: f64) -> f64 {
        if a == 0.0 || b == 0.0 || a.is_nan() || b.is_nan() {
            return 0.0;
        }
        match (a.is_infinite(), b.is_infinite()) {
            (true, true) => a.signum() * b.signum() * f64::INFINITY,
            (true, false) => a.signum() * b,
            (false, true) => b.signum() * a,
            (false, false) => {
                a.signum() * b.signum() * a.abs().min(b.abs()) + (-(a + b).abs()).exp().ln_1p()
                    - (-(a - b).abs()).exp().ln_1p()
            }
        }
    }

    fn update(first: f64, second: f64, a: u8) -> f64 {
        let r = if a & 1 == 0 {
            second + first
        } else {
            second - first
        };
        // contradictory infinite evidence only follows a wrong earlier decision
        if r.is_nan() {
            0.0
        } else {
            r
        }
    }

    fn hard(self) -> Option<u8> {
        if self > 0.0 {
            Some(0)
        } else if self < 0.0 {
            Some(1)
        } else {
            None
        }
    }
}

/// Walks the SC tree. `bits` receives the re-encoded partial sums of this
/// subtree; `leaf(position, message)` returns the bit fed back for
/// `position`.
fn sc_recurse<M: ScMessage, F: FnMut(usize, M) -> u8>(
    input: &[M],
    scratch: &mut [M],
    bits: &mut [u8],
    offset: usize,
    leaf: &mut F,
) {
    let len = input.len();
    if len == 1 {
        bits[0] = leaf(offset, input[0]) & 1;
        return;
    }
    let half = len / 2;
    let (child, rest) = scratch.split_at_mut(half);
    let (first, second) = input.split_at(half);
    for ((c, &f), &s) in child.iter_mut().zip(first).zip(second) {
        *c = M::check(f, s);
    }
    let (left, right) = bits.split_at_mut(half);
    sc_recurse(child, rest, left, offset, leaf);
    for (j, c) in child.iter_mut().enumerate() {
        *c = M::update(first[j], second[j], left[j]);
    }
    sc_recurse(child, rest, right, offset + half, leaf);
    for (l, r) in left.iter_mut().zip(right.iter()) {
        *l ^= *r;
    }
}

fn run_sc<M: ScMessage + Default, F: FnMut(usize, M) -> u8>(
    y: &[ChannelSample],
    bits: u32,
    to_msg: impl Fn(ChannelSample) -> M,
    leaf: &mut F,
) {
    let len = y.len();
    let input: Vec<M> = (0..len).map(|k| to_msg(y[reverse_bits(k, bits)])).collect();
    let mut scratch = vec![M::default(); len];
    let mut partial = vec![0u8; len];
    sc_recurse(&input, &mut scratch, &mut partial, 0, leaf);
}

/// An SC decoder bound to a block length and a frozen assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScDecoder {
    bits: u32,
    frozen: Vec<Option<u8>>,
}

impl ScDecoder {
    /// `frozen_vals[k]` is the value of position `frozen_set[k]`.
    pub fn new(len: usize, frozen_set: &[usize], frozen_vals: &[u8]) -> Result<Self> {
        let bits = log2_len(len)?;
        if frozen_vals.len() != frozen_set.len() {
            return Err(Error::LengthMismatch {
                expected: frozen_set.len(),
                actual: frozen_vals.len(),
            });
        }
        let mut frozen = vec![None; len];
        for (&i, &v) in frozen_set.iter().zip(frozen_vals) {
            if i >= len {
                return Err(Error::IndexOutOfRange { index: i, len });
            }
            frozen[i] = Some(v & 1);
        }
        Ok(Self { bits, frozen })
    }

    /// Build from a per-position frozen map.
    pub fn from_frozen_map(frozen: Vec<Option<u8>>) -> Result<Self> {
        let bits = log2_len(frozen.len())?;
        Ok(Self { bits, frozen })
    }

    pub fn len(&self) -> usize {
        self.frozen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frozen.is_empty()
    }

    /// Decode `y`, the output of `ch` for every codeword symbol.
    pub fn decode(&self, y: &[ChannelSample], ch: &ChannelModel) -> Result<DecodeResult> {
        let len = self.len();
        if y.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                actual: y.len(),
            });
        }
        let mut u_hat = vec![0u8; len];
        let mut flags = vec![Decision::Channel; len];
        let frozen = &self.frozen;
        let mut leaf = |i: usize, hard: Option<u8>| -> u8 {
            let (bit, flag) = match (frozen[i], hard) {
                (Some(v), _) => (v, Decision::Frozen),
                (None, Some(b)) => (b, Decision::Channel),
                (None, None) => (0, Decision::TieBroken),
            };
            u_hat[i] = bit;
            flags[i] = flag;
            bit
        };
        if ch.is_erasure() {
            run_sc(y, self.bits, Ternary::from_sample, &mut |i, m: Ternary| {
                leaf(i, m.hard())
            });
        } else {
            run_sc(y, self.bits, |s| ch.llr(s), &mut |i, m: f64| {
                leaf(i, m.hard())
            });
        }
        Ok(DecodeResult { u_hat, flags })
    }
}

/// One-shot SC decode.
pub fn sc_decode(
    y: &[ChannelSample],
    ch: &ChannelModel,
    frozen_set: &[usize],
    frozen_vals: &[u8],
) -> Result<DecodeResult> {
    ScDecoder::new(y.len(), frozen_set, frozen_vals)?.decode(y, ch)
}

/// Genie-aided SC pass: every position is decided from the channel, but
/// the true `u` is fed back. Returns each position's raw decision, `None`
/// for an exact tie (an erased position on erasure channels).
pub fn genie_decisions(
    y: &[ChannelSample],
    ch: &ChannelModel,
    u_true: &[u8],
) -> Result<Vec<Option<u8>>> {
    let bits = log2_len(y.len())?;
    if u_true.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            actual: u_true.len(),
        });
    }
    let mut out = vec![None; y.len()];
    if ch.is_erasure() {
        run_sc(y, bits, Ternary::from_sample, &mut |i, m: Ternary| {
            out[i] = m.hard();
            u_true[i]
        });
    } else {
        run_sc(y, bits, |s| ch.llr(s), &mut |i, m: f64| {
            out[i] = m.hard();
            u_true[i]
        });
    }
    Ok(out)
}

/// Exact erasure probability of every split channel `W_N^{(i)}` of an
/// erasure channel, `N = 2^n`. Shares its recursion with
/// [`bec_z_evolution`].
pub fn split_channel_exact(ch: &ChannelModel, n: u32) -> Result<Vec<f64>> {
    let eps = ch.erasure_prob().ok_or(Error::NotErasure)?;
    Ok(bec_z_evolution(eps, n)?.z)
}
