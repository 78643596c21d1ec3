//! Split-channel reliabilities and information-set selection.
//!
//! Z tables are indexed in SC decoding order (see [`crate::polar`]): the
//! most significant bit of an index picks the branch at the first
//! polarization level, with 0 the degraded (`2Z - Z²`) branch.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::polar::{genie_decisions, log2_len, polar_encode, ScDecoder};
use crate::rng::RngStreams;
use rand::Rng;

/// Smallest accepted Monte Carlo trial count.
pub const MIN_MONTE_CARLO_TRIALS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum ZSource {
    ExactErasure,
    MonteCarlo { trials: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZTable {
    pub z: Vec<f64>,
    pub source: ZSource,
}

impl ZTable {
    /// Validates length and range.
    pub fn new(z: Vec<f64>, source: ZSource) -> Result<Self> {
        log2_len(z.len())?;
        if let Some(bad) = z.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!(
                "Z value {bad} outside [0, 1]"
            )));
        }
        Ok(Self { z, source })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn n(&self) -> u32 {
        self.z.len().trailing_zeros()
    }

    pub fn mean(&self) -> f64 {
        self.z.iter().sum::<f64>() / self.z.len() as f64
    }

    /// Fraction of entries strictly below `level`.
    pub fn fraction_below(&self, level: f64) -> f64 {
        self.z.iter().filter(|&&v| v < level).count() as f64 / self.len() as f64
    }

    /// Fraction of entries strictly above `level`.
    pub fn fraction_above(&self, level: f64) -> f64 {
        self.z.iter().filter(|&&v| v > level).count() as f64 / self.len() as f64
    }
}

/// Exact Z values of every split channel of an erasure channel with erasure
/// probability `eps`, `N = 2^n`.
pub fn bec_z_evolution(eps: f64, n: u32) -> Result<ZTable> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!(
            "erasure probability {eps}"
        )));
    }
    if n == 0 || n >= usize::BITS {
        return Err(Error::InvalidParameter(format!("n = {n} must be >= 1")));
    }
    let mut z = vec![eps];
    for _ in 0..n {
        z = z
            .iter()
            .flat_map(|&v| [(2.0 * v - v * v).clamp(0.0, 1.0), (v * v).clamp(0.0, 1.0)])
            .collect();
    }
    Ok(ZTable {
        z,
        source: ZSource::ExactErasure,
    })
}

/// Per-position error frequency of a genie-aided SC decoder over random
/// inputs. On erasure channels an erased decision counts as an error, which
/// makes the estimate unbiased for the exact Z value; elsewhere exact ties
/// are decided as 0.
pub fn monte_carlo_z(
    ch: &ChannelModel,
    n: u32,
    trials: usize,
    streams: &RngStreams,
) -> Result<ZTable> {
    if trials < MIN_MONTE_CARLO_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo needs at least {MIN_MONTE_CARLO_TRIALS} trials, got {trials}"
        )));
    }
    if n == 0 || n > 24 {
        return Err(Error::InvalidParameter(format!("n = {n} out of range")));
    }
    let len = 1usize << n;
    let counts = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<Vec<u64>> {
            let mut rng = streams.stream(t);
            let u: Vec<u8> = (0..len).map(|_| rng.gen_range(0..2u8)).collect();
            let x = polar_encode(&u)?;
            let y = ch.transmit(&x, &mut rng);
            let decisions = genie_decisions(&y, ch, &u)?;
            Ok(decisions
                .iter()
                .zip(&u)
                .map(|(d, &b)| {
                    let wrong = match d {
                        Some(bit) => *bit != b,
                        None if ch.is_erasure() => true,
                        None => b != 0,
                    };
                    wrong as u64
                })
                .collect())
        })
        .try_reduce(
            || vec![0u64; len],
            |mut acc, v| {
                acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
                Ok(acc)
            },
        )?;
    Ok(ZTable {
        z: counts.iter().map(|&c| c as f64 / trials as f64).collect(),
        source: ZSource::MonteCarlo { trials },
    })
}

/// Exact table for erasure channels, Monte Carlo with `trials` otherwise.
pub fn z_table_for(
    ch: &ChannelModel,
    n: u32,
    trials: usize,
    streams: &RngStreams,
) -> Result<ZTable> {
    match ch.erasure_prob() {
        Some(eps) => bec_z_evolution(eps, n),
        None => monte_carlo_z(ch, n, trials, streams),
    }
}

/// `(1/N)·2^{-N^β}`.
pub fn threshold(len: usize, beta: f64) -> f64 {
    let nf = len as f64;
    (-(nf.powf(beta))).exp2() / nf
}

/// Every index whose Z value is at most `(1/N)·2^{-N^β}`. May be empty.
pub fn select_info_set(z: &ZTable, beta: f64) -> Result<Vec<usize>> {
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "beta {beta} not in (0, 0.5)"
        )));
    }
    let thr = threshold(z.len(), beta);
    Ok((0..z.len()).filter(|&i| z.z[i] <= thr).collect())
}

/// The `k` indices with the smallest Z values, smaller index first on ties.
/// Returned in increasing index order.
pub fn select_top_k(z: &ZTable, k: usize) -> Result<Vec<usize>> {
    if k > z.len() {
        return Err(Error::InvalidParameter(format!(
            "K = {k} exceeds block length {}",
            z.len()
        )));
    }
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z.z[a].total_cmp(&z.z[b]).then(a.cmp(&b)));
    let mut chosen = order[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// A polar code: information set, frozen set and frozen values.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarCode {
    z_table: ZTable,
    info_set: Vec<usize>,
    frozen_set: Vec<usize>,
    frozen_vals: Vec<u8>,
}

impl PolarCode {
    /// `frozen_vals` follows the increasing order of the frozen set.
    pub fn new(z_table: ZTable, mut info_set: Vec<usize>, frozen_vals: Vec<u8>) -> Result<Self> {
        let len = z_table.len();
        info_set.sort_unstable();
        info_set.dedup();
        if let Some(&bad) = info_set.iter().find(|&&i| i >= len) {
            return Err(Error::IndexOutOfRange { index: bad, len });
        }
        let mut is_info = vec![false; len];
        info_set.iter().for_each(|&i| is_info[i] = true);
        let frozen_set: Vec<usize> = (0..len).filter(|&i| !is_info[i]).collect();
        if frozen_vals.len() != frozen_set.len() {
            return Err(Error::LengthMismatch {
                expected: frozen_set.len(),
                actual: frozen_vals.len(),
            });
        }
        Ok(Self {
            z_table,
            info_set,
            frozen_set,
            frozen_vals: frozen_vals.into_iter().map(|b| b & 1).collect(),
        })
    }

    /// Threshold rule, frozen bits all zero.
    pub fn by_threshold(z_table: ZTable, beta: f64) -> Result<Self> {
        let info = select_info_set(&z_table, beta)?;
        let frozen = vec![0; z_table.len() - info.len()];
        Self::new(z_table, info, frozen)
    }

    /// Top-K rule, frozen bits all zero.
    pub fn by_top_k(z_table: ZTable, k: usize) -> Result<Self> {
        let info = select_top_k(&z_table, k)?;
        let frozen = vec![0; z_table.len() - info.len()];
        Self::new(z_table, info, frozen)
    }

    pub fn n(&self) -> u32 {
        self.z_table.n()
    }

    pub fn len(&self) -> usize {
        self.z_table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_table.is_empty()
    }

    pub fn k(&self) -> usize {
        self.info_set.len()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.len() as f64
    }

    pub fn z_table(&self) -> &ZTable {
        &self.z_table
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn frozen_set(&self) -> &[usize] {
        &self.frozen_set
    }

    pub fn frozen_vals(&self) -> &[u8] {
        &self.frozen_vals
    }

    /// Place `info` on the information set and the frozen values elsewhere,
    /// then encode.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k() {
            return Err(Error::LengthMismatch {
                expected: self.k(),
                actual: info.len(),
            });
        }
        let mut u = vec![0u8; self.len()];
        for (&i, &b) in self.info_set.iter().zip(info) {
            u[i] = b & 1;
        }
        for (&i, &b) in self.frozen_set.iter().zip(&self.frozen_vals) {
            u[i] = b;
        }
        polar_encode(&u)
    }

    pub fn decoder(&self) -> ScDecoder {
        ScDecoder::new(self.len(), &self.frozen_set, &self.frozen_vals)
            .expect("a valid code always yields a valid decoder")
    }
}

/// `Σ_{i∈A} Z(W_N^{(i)})`.
pub fn block_error_bound(code: &PolarCode) -> f64 {
    code.info_set.iter().map(|&i| code.z_table.z[i]).sum()
}
