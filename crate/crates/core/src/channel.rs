//! Binary-input discrete memoryless channels.
//!
//! A channel is one of an erasure channel BEC(ε) with outputs `{0, 1, ?}`,
//! a crossover channel BSC(p) with outputs `{0, 1}`, or an explicit
//! transition table `W(y|x)` over a finite output alphabet. The erasure
//! symbol `?` is the distinguished output [`ChannelSample::ERASURE`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-sum tolerance for transition tables.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// One channel output symbol, an index into the channel's output alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChannelSample(pub u32);

impl ChannelSample {
    pub const ZERO: ChannelSample = ChannelSample(0);
    pub const ONE: ChannelSample = ChannelSample(1);
    /// The erasure symbol of an erasure channel.
    pub const ERASURE: ChannelSample = ChannelSample(2);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Transition probabilities `W(y|0)` and `W(y|1)` over a common output
/// alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    rows: [Vec<f64>; 2],
}

impl TransitionTable {
    pub fn new(row0: Vec<f64>, row1: Vec<f64>) -> Result<Self> {
        if row0.is_empty() || row0.len() != row1.len() {
            return Err(Error::InvalidChannel(format!(
                "rows must be non-empty and of equal length (got {} and {})",
                row0.len(),
                row1.len()
            )));
        }
        for (x, row) in [&row0, &row1].into_iter().enumerate() {
            if let Some(p) = row
                .iter()
                .find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0)
            {
                return Err(Error::InvalidChannel(format!(
                    "row {x} has entry {p} outside [0,1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidChannel(format!("row {x} sums to {sum}")));
            }
        }
        Ok(Self { rows: [row0, row1] })
    }

    pub fn row(&self, x: u8) -> &[f64] {
        &self.rows[(x & 1) as usize]
    }

    pub fn alphabet_size(&self) -> usize {
        self.rows[0].len()
    }
}

/// A binary-input DMC. Immutable once constructed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelRepr", into = "ChannelRepr")]
pub enum ChannelModel {
    Erasure { eps: f64 },
    Crossover { p: f64 },
    Explicit(TransitionTable),
}

/// Serialized form: `{"kind":"erasure","param":0.25}`,
/// `{"kind":"crossover","param":0.11}` or
/// `{"kind":"explicit","table":[[...],[...]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChannelRepr {
    Erasure { param: f64 },
    Crossover { param: f64 },
    Explicit { table: [Vec<f64>; 2] },
}

impl TryFrom<ChannelRepr> for ChannelModel {
    type Error = Error;

    fn try_from(repr: ChannelRepr) -> Result<Self> {
        match repr {
            ChannelRepr::Erasure { param } => ChannelModel::erasure(param),
            ChannelRepr::Crossover { param } => ChannelModel::crossover(param),
            ChannelRepr::Explicit { table: [r0, r1] } => ChannelModel::explicit(r0, r1),
        }
    }
}

impl From<ChannelModel> for ChannelRepr {
    fn from(ch: ChannelModel) -> Self {
        match ch {
            ChannelModel::Erasure { eps } => ChannelRepr::Erasure { param: eps },
            ChannelModel::Crossover { p } => ChannelRepr::Crossover { param: p },
            ChannelModel::Explicit(t) => ChannelRepr::Explicit { table: t.rows },
        }
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidChannel(format!("{name}={p} not in [0,1]")));
    }
    Ok(())
}

impl ChannelModel {
    pub fn erasure(eps: f64) -> Result<Self> {
        check_probability("erasure probability", eps)?;
        Ok(ChannelModel::Erasure { eps })
    }

    pub fn crossover(p: f64) -> Result<Self> {
        check_probability("crossover probability", p)?;
        Ok(ChannelModel::Crossover { p })
    }

    pub fn explicit(row0: Vec<f64>, row1: Vec<f64>) -> Result<Self> {
        Ok(ChannelModel::Explicit(TransitionTable::new(row0, row1)?))
    }

    /// The erasure probability, if this is an erasure channel.
    pub fn erasure_prob(&self) -> Option<f64> {
        match self {
            ChannelModel::Erasure { eps } => Some(*eps),
            _ => None,
        }
    }

    pub fn is_erasure(&self) -> bool {
        matches!(self, ChannelModel::Erasure { .. })
    }

    pub fn alphabet_size(&self) -> usize {
        match self {
            ChannelModel::Erasure { .. } => 3,
            ChannelModel::Crossover { .. } => 2,
            ChannelModel::Explicit(t) => t.alphabet_size(),
        }
    }

    /// `W(y|x)`.
    pub fn transition(&self, y: ChannelSample, x: u8) -> f64 {
        let x = x & 1;
        match self {
            ChannelModel::Erasure { eps } => match y {
                ChannelSample::ERASURE => *eps,
                ChannelSample(s) if s == x as u32 => 1.0 - eps,
                _ => 0.0,
            },
            ChannelModel::Crossover { p } => match y.0 {
                s if s > 1 => 0.0,
                s if s == x as u32 => 1.0 - p,
                _ => *p,
            },
            ChannelModel::Explicit(t) => t.row(x).get(y.index()).copied().unwrap_or(0.0),
        }
    }

    /// The full transition table of this channel.
    pub fn table(&self) -> TransitionTable {
        let m = self.alphabet_size();
        let row = |x| {
            (0..m as u32)
                .map(|y| self.transition(ChannelSample(y), x))
                .collect()
        };
        TransitionTable {
            rows: [row(0), row(1)],
        }
    }

    /// Mutual information under a uniform input, in bits.
    pub fn symmetric_capacity(&self) -> f64 {
        match self {
            ChannelModel::Erasure { eps } => 1.0 - eps,
            _ => {
                let t = self.table();
                let mut total = 0.0;
                for y in 0..t.alphabet_size() {
                    let w0 = t.rows[0][y];
                    let w1 = t.rows[1][y];
                    let q = 0.5 * w0 + 0.5 * w1;
                    for w in [w0, w1] {
                        if w > 0.0 {
                            total += 0.5 * w * (w / q).log2();
                        }
                    }
                }
                total.clamp(0.0, 1.0)
            }
        }
    }

    /// Bhattacharyya parameter `Z(W) = Σ_y √(W(y|0) W(y|1))`.
    pub fn bhattacharyya(&self) -> f64 {
        match self {
            ChannelModel::Erasure { eps } => *eps,
            _ => {
                let t = self.table();
                let z: f64 = t.rows[0]
                    .iter()
                    .zip(&t.rows[1])
                    .map(|(a, b)| (a * b).sqrt())
                    .sum();
                z.clamp(0.0, 1.0)
            }
        }
    }

    /// Log-likelihood ratio `ln W(y|0)/W(y|1)`, with `±∞` for symbols only
    /// one input can produce.
    pub fn llr(&self, y: ChannelSample) -> f64 {
        let w0 = self.transition(y, 0);
        let w1 = self.transition(y, 1);
        match (w0 > 0.0, w1 > 0.0) {
            (true, true) => (w0 / w1).ln(),
            (true, false) => f64::INFINITY,
            (false, true) => f64::NEG_INFINITY,
            (false, false) => 0.0,
        }
    }

    /// Draw one output for input bit `x`.
    pub fn sample<R: Rng + ?Sized>(&self, x: u8, rng: &mut R) -> ChannelSample {
        let x = x & 1;
        let u: f64 = rng.gen();
        match self {
            ChannelModel::Erasure { eps } => {
                if u < *eps {
                    ChannelSample::ERASURE
                } else {
                    ChannelSample(x as u32)
                }
            }
            ChannelModel::Crossover { p } => ChannelSample((x ^ (u < *p) as u8) as u32),
            ChannelModel::Explicit(t) => {
                let row = t.row(x);
                let mut acc = 0.0;
                for (y, w) in row.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        return ChannelSample(y as u32);
                    }
                }
                // rounding left u above the cumulative sum; take the last
                // symbol with positive mass
                let last = row.iter().rposition(|w| *w > 0.0).unwrap_or(0);
                ChannelSample(last as u32)
            }
        }
    }

    /// Pass a whole codeword through the channel.
    pub fn transmit<R: Rng + ?Sized>(&self, x: &[u8], rng: &mut R) -> Vec<ChannelSample> {
        x.iter().map(|&b| self.sample(b, rng)).collect()
    }

    /// Compose this channel with a degrading channel on its output:
    /// `W_e(y_e|x) = Σ_{y_m} W_m(y_m|x) W_d(y_e|y_m)`.
    ///
    /// Erasure∘erasure stays an erasure channel with
    /// `ε_e = ε_m + (1 − ε_m) δ`, crossover∘crossover stays a crossover
    /// channel; every other combination yields an explicit table.
    pub fn degrade(&self, degrader: &Degrader) -> Result<ChannelModel> {
        let dtable = degrader.table();
        let expected = dtable.len();
        let actual = self.alphabet_size();
        if expected != actual {
            return Err(Error::AlphabetMismatch { expected, actual });
        }
        let out = dtable[0].len();
        let base = self.table();
        let compose = |x: u8| -> Vec<f64> {
            (0..out)
                .map(|ye| {
                    base.row(x)
                        .iter()
                        .zip(&dtable)
                        .map(|(wm, drow)| wm * drow[ye])
                        .sum()
                })
                .collect()
        };
        let (row0, row1) = (compose(0), compose(1));
        match (self, degrader) {
            (ChannelModel::Erasure { .. }, Degrader::Erasure { .. }) => {
                ChannelModel::erasure(row0[ChannelSample::ERASURE.index()].clamp(0.0, 1.0))
            }
            (ChannelModel::Crossover { .. }, Degrader::Crossover { .. }) => {
                ChannelModel::crossover(row0[1].clamp(0.0, 1.0))
            }
            _ => ChannelModel::explicit(row0, row1),
        }
    }
}

/// A channel acting on another channel's output alphabet.
#[derive(Debug, Clone, PartialEq)]
pub enum Degrader {
    /// On `{0, 1, ?}`: erase each unerased symbol with probability `delta`.
    Erasure { delta: f64 },
    /// On `{0, 1}`: flip with probability `p`.
    Crossover { p: f64 },
    /// Arbitrary stochastic matrix; `rows[y_m][y_e] = W_d(y_e|y_m)`.
    Table(Vec<Vec<f64>>),
}

impl Degrader {
    pub fn erasure(delta: f64) -> Result<Self> {
        check_probability("degrader erasure probability", delta)?;
        Ok(Degrader::Erasure { delta })
    }

    pub fn crossover(p: f64) -> Result<Self> {
        check_probability("degrader crossover probability", p)?;
        Ok(Degrader::Crossover { p })
    }

    pub fn table_from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidChannel(
                "degrader rows must be non-empty and of equal length".into(),
            ));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidChannel(format!(
                    "degrader row {i} out of range"
                )));
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidChannel(format!(
                    "degrader row {i} sums to {sum}"
                )));
            }
        }
        Ok(Degrader::Table(rows))
    }

    /// The identity channel on an alphabet of size `m`.
    pub fn identity(m: usize) -> Self {
        Degrader::Table(
            (0..m)
                .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    fn table(&self) -> Vec<Vec<f64>> {
        match self {
            Degrader::Erasure { delta } => vec![
                vec![1.0 - delta, 0.0, *delta],
                vec![0.0, 1.0 - delta, *delta],
                vec![0.0, 0.0, 1.0],
            ],
            Degrader::Crossover { p } => vec![vec![1.0 - p, *p], vec![*p, 1.0 - p]],
            Degrader::Table(rows) => rows.clone(),
        }
    }
}
