//! Nested polar codes for the degraded wiretap channel.
//!
//! Positions split into three roles: the secret set `A_m \ A_e`, the
//! randomization set `A_e` filled with fresh uniform bits, and the frozen
//! set `F_m`. Legitimate decoding is plain SC over `F_m`.
//!
//! When the eavesdropper channel is an erasure channel, the leakage of
//! every realized erasure pattern is computed exactly by GF(2) rank
//! arithmetic. Otherwise a Fano-type estimate is reported and flagged.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binary_entropy;
use crate::channel::{ChannelModel, ChannelSample};
use crate::construction::{
    bec_z_evolution, block_error_bound, select_info_set, select_top_k, PolarCode, ZTable,
};
use crate::error::{Error, Result};
use crate::gf2::{generator_submatrix, XorBasis};
use crate::polar::{log2_len, polar_encode, ScDecoder};
use crate::rng::RngStreams;

/// How the two information sets are sized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RateRule {
    /// `Z ≤ (1/N)·2^{-N^β}` on each table.
    Threshold { beta: f64 },
    /// The `k_main` / `k_eve` most reliable positions of each table.
    TopK { k_main: usize, k_eve: usize },
    /// `K_m = ⌈(I(W_m) − backoff)·N⌉` and `K_e = ⌈(I(W_e) + eve_margin)·N⌉`,
    /// with `K_e` capped at `K_m`. Randomization has to cover everything
    /// Eve's channel can carry, so Eve's side is never backed off.
    CapacityBackoff { backoff: f64, eve_margin: f64 },
}

impl Default for RateRule {
    fn default() -> Self {
        RateRule::CapacityBackoff {
            backoff: 0.05,
            eve_margin: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Secret,
    Random,
    Frozen,
}

#[derive(Debug, Clone)]
pub struct WiretapCode {
    main: ChannelModel,
    eve: ChannelModel,
    z_main: ZTable,
    z_eve: ZTable,
    main_info: Vec<usize>,
    eve_info: Vec<usize>,
    secret: Vec<usize>,
    frozen: Vec<usize>,
    roles: Vec<Role>,
    decoder: ScDecoder,
}

fn ceil_len(fraction: f64, len: usize) -> usize {
    let k = (fraction * len as f64).ceil();
    k.clamp(0.0, len as f64) as usize
}

/// Fails unless `eve` is (or, for general tables, plausibly is) a degraded
/// version of `main`. Erasure and crossover pairs are decided exactly; other
/// pairs are only checked through capacity and Bhattacharyya ordering.
pub fn check_degraded(main: &ChannelModel, eve: &ChannelModel) -> Result<()> {
    let ok = match (main, eve) {
        (ChannelModel::Erasure { eps: m }, ChannelModel::Erasure { eps: e }) => e >= m,
        (ChannelModel::Crossover { p: m }, ChannelModel::Crossover { p: e }) => {
            (0.5 - e).abs() <= (0.5 - m).abs()
        }
        (ChannelModel::Erasure { eps }, ChannelModel::Crossover { p }) => {
            (0.5 - p).abs() <= 0.5 * (1.0 - eps)
        }
        _ => {
            eve.symmetric_capacity() <= main.symmetric_capacity() + 1e-12
                && eve.bhattacharyya() + 1e-12 >= main.bhattacharyya()
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::DegradationViolated(format!(
            "main {main:?}, eavesdropper {eve:?}"
        )))
    }
}

/// Build from exact erasure tables. Both channels must be erasure channels.
pub fn build_wiretap_code(
    main: &ChannelModel,
    eve: &ChannelModel,
    n: u32,
    rule: RateRule,
) -> Result<WiretapCode> {
    let em = main.erasure_prob().ok_or(Error::NotErasure)?;
    let ee = eve.erasure_prob().ok_or(Error::NotErasure)?;
    check_degraded(main, eve)?;
    build_from_tables(
        main.clone(),
        eve.clone(),
        bec_z_evolution(em, n)?,
        bec_z_evolution(ee, n)?,
        rule,
    )
}

/// Build from caller-supplied tables, e.g. Monte Carlo estimates.
pub fn build_from_tables(
    main: ChannelModel,
    eve: ChannelModel,
    z_main: ZTable,
    z_eve: ZTable,
    rule: RateRule,
) -> Result<WiretapCode> {
    check_degraded(&main, &eve)?;
    if z_main.len() != z_eve.len() {
        return Err(Error::LengthMismatch {
            expected: z_main.len(),
            actual: z_eve.len(),
        });
    }
    let len = z_main.len();
    let (main_info, eve_info) = match rule {
        RateRule::Threshold { beta } => (
            select_info_set(&z_main, beta)?,
            select_info_set(&z_eve, beta)?,
        ),
        RateRule::TopK { k_main, k_eve } => {
            if k_eve > k_main {
                return Err(Error::InvalidParameter(format!(
                    "k_eve = {k_eve} exceeds k_main = {k_main}"
                )));
            }
            (select_top_k(&z_main, k_main)?, select_top_k(&z_eve, k_eve)?)
        }
        RateRule::CapacityBackoff {
            backoff,
            eve_margin,
        } => {
            if !(backoff.is_finite() && eve_margin.is_finite()) {
                return Err(Error::InvalidParameter("non-finite rate margin".into()));
            }
            let k_main = ceil_len(main.symmetric_capacity() - backoff, len);
            let k_eve = ceil_len(eve.symmetric_capacity() + eve_margin, len).min(k_main);
            (select_top_k(&z_main, k_main)?, select_top_k(&z_eve, k_eve)?)
        }
    };
    from_sets(main, eve, z_main, z_eve, main_info, eve_info)
}

/// Assemble a code from explicit sets. Frozen values are all zero.
pub fn from_sets(
    main: ChannelModel,
    eve: ChannelModel,
    z_main: ZTable,
    z_eve: ZTable,
    main_info: Vec<usize>,
    eve_info: Vec<usize>,
) -> Result<WiretapCode> {
    let len = z_main.len();
    let mut roles = vec![Role::Frozen; len];
    for &i in &main_info {
        if i >= len {
            return Err(Error::IndexOutOfRange { index: i, len });
        }
        roles[i] = Role::Secret;
    }
    let mut violations = 0;
    for &i in &eve_info {
        if i >= len {
            return Err(Error::IndexOutOfRange { index: i, len });
        }
        match roles[i] {
            Role::Frozen => violations += 1,
            _ => roles[i] = Role::Random,
        }
    }
    if violations > 0 {
        return Err(Error::InclusionViolated { violations });
    }
    let pick = |role: Role| -> Vec<usize> { (0..len).filter(|&i| roles[i] == role).collect() };
    let secret = pick(Role::Secret);
    let frozen = pick(Role::Frozen);
    let decoder = ScDecoder::new(len, &frozen, &vec![0; frozen.len()])?;
    let mut main_info = main_info;
    let mut eve_info = eve_info;
    main_info.sort_unstable();
    main_info.dedup();
    eve_info.sort_unstable();
    eve_info.dedup();
    Ok(WiretapCode {
        main,
        eve,
        z_main,
        z_eve,
        main_info,
        eve_info,
        secret,
        frozen,
        roles,
        decoder,
    })
}

/// One encoded block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedTrial {
    pub secret: Vec<u8>,
    pub random: Vec<u8>,
    pub u: Vec<u8>,
    pub x: Vec<u8>,
}

impl WiretapCode {
    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn n(&self) -> u32 {
        self.len().trailing_zeros()
    }

    pub fn main_channel(&self) -> &ChannelModel {
        &self.main
    }

    pub fn eve_channel(&self) -> &ChannelModel {
        &self.eve
    }

    pub fn z_main(&self) -> &ZTable {
        &self.z_main
    }

    pub fn z_eve(&self) -> &ZTable {
        &self.z_eve
    }

    pub fn main_info_set(&self) -> &[usize] {
        &self.main_info
    }

    /// The randomization positions `A_e`.
    pub fn eve_info_set(&self) -> &[usize] {
        &self.eve_info
    }

    pub fn secret_positions(&self) -> &[usize] {
        &self.secret
    }

    pub fn frozen_set(&self) -> &[usize] {
        &self.frozen
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn secret_rate(&self) -> f64 {
        self.secret.len() as f64 / self.len() as f64
    }

    /// `I(W_m) − I(W_e)`.
    pub fn secrecy_capacity(&self) -> f64 {
        (self.main.symmetric_capacity() - self.eve.symmetric_capacity()).max(0.0)
    }

    /// The main-channel polar code over `A_m`.
    pub fn main_code(&self) -> PolarCode {
        PolarCode::new(
            self.z_main.clone(),
            self.main_info.clone(),
            vec![0; self.frozen.len()],
        )
        .expect("sets were validated at construction")
    }

    /// Encode with the given randomization bits.
    pub fn encode_with(&self, secret: &[u8], random: &[u8]) -> Result<EncodedTrial> {
        if secret.len() != self.secret.len() {
            return Err(Error::LengthMismatch {
                expected: self.secret.len(),
                actual: secret.len(),
            });
        }
        if random.len() != self.eve_info.len() {
            return Err(Error::LengthMismatch {
                expected: self.eve_info.len(),
                actual: random.len(),
            });
        }
        let mut u = vec![0u8; self.len()];
        for (&i, &b) in self.secret.iter().zip(secret) {
            u[i] = b & 1;
        }
        for (&i, &b) in self.eve_info.iter().zip(random) {
            u[i] = b & 1;
        }
        let x = polar_encode(&u)?;
        Ok(EncodedTrial {
            secret: secret.iter().map(|b| b & 1).collect(),
            random: random.iter().map(|b| b & 1).collect(),
            u,
            x,
        })
    }

    /// Eve's equivocation `H(V_m | Y_e)` in bits given the positions she
    /// received unerased.
    pub fn eve_equivocation_exact(&self, unerased: &[usize]) -> Result<f64> {
        if !self.eve.is_erasure() {
            return Err(Error::NotErasure);
        }
        Ok(linear_equivocation(self.len(), &self.secret, &self.eve_info, unerased)? as f64)
    }
}

/// Draw uniform randomization bits and encode.
pub fn secrecy_encode<R: Rng + ?Sized>(
    code: &WiretapCode,
    secret: &[u8],
    rng: &mut R,
) -> Result<EncodedTrial> {
    let random: Vec<u8> = (0..code.eve_info.len())
        .map(|_| rng.gen_range(0..2))
        .collect();
    code.encode_with(secret, &random)
}

/// SC-decode the main observation and return the secret bits.
pub fn secrecy_decode(code: &WiretapCode, y_main: &[ChannelSample]) -> Result<Vec<u8>> {
    let d = code.decoder.decode(y_main, &code.main)?;
    Ok(code.secret.iter().map(|&i| d.u_hat[i]).collect())
}

/// `H(V_S | Y_T)` for `x = u·G` with `u_S` and `u_R` uniform, every other
/// position known, and Eve seeing exactly the coordinates `T`:
/// `|S| − rank([G_S; G_R]_T) + rank([G_R]_T)`.
pub fn linear_equivocation(
    len: usize,
    secret: &[usize],
    random: &[usize],
    unerased: &[usize],
) -> Result<usize> {
    log2_len(len)?;
    let mut cols: Vec<usize> = unerased.to_vec();
    cols.sort_unstable();
    cols.dedup();
    if secret.is_empty() {
        if let Some(&bad) = cols.iter().chain(random).find(|&&i| i >= len) {
            return Err(Error::IndexOutOfRange { index: bad, len });
        }
        return Ok(0);
    }
    let rows: Vec<usize> = random.iter().chain(secret).copied().collect();
    let g = generator_submatrix(len, &rows, &cols)?;
    let mut basis = XorBasis::new(cols.len());
    for r in 0..random.len() {
        basis.insert(g.row(r));
    }
    // rank([G_S; G_R]_T) − rank([G_R]_T)
    let rank_added = (random.len()..rows.len())
        .filter(|&r| basis.insert(g.row(r)))
        .count();
    Ok(secret.len() - rank_added)
}

/// How the leakage figure was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeakageMethod {
    /// Exact rank oracle averaged over realized erasure patterns.
    ExactRank,
    /// `N·I(W_e) − |A_e| + h2(p) + |A_e|·p` with `p` Eve's empirical genie
    /// SC error on the randomization bits. Approximate.
    FanoEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WiretapReport {
    pub n: u32,
    pub k_main: usize,
    pub k_eve: usize,
    pub secret_bits: usize,
    pub secret_rate: f64,
    pub pe_hat: f64,
    pub block_errors: usize,
    pub block_error_bound: f64,
    pub leakage_rate_bits_per_use: f64,
    pub leakage_method: LeakageMethod,
    pub secrecy_capacity_ref: f64,
    pub trials: usize,
    pub seed: u64,
}

struct TrialOutcome {
    block_error: bool,
    leaked_bits: usize,
    eve_error: bool,
}

/// Monte Carlo over secrets, randomization and channel noise. Trial `t` uses
/// stream `t` of `streams`.
pub fn simulate_wiretap(
    code: &WiretapCode,
    trials: usize,
    streams: &RngStreams,
) -> Result<WiretapReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let exact = code.eve.is_erasure();
    // Eve's genie decoder knows the secret and frozen bits and decodes A_e.
    let eve_decoder = if exact {
        None
    } else {
        let known: Vec<usize> = (0..code.len())
            .filter(|&i| code.roles[i] != Role::Random)
            .collect();
        Some(known)
    };
    let outcomes: Vec<TrialOutcome> = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<TrialOutcome> {
            let mut rng = streams.stream(t);
            let secret: Vec<u8> = (0..code.secret.len())
                .map(|_| rng.gen_range(0..2))
                .collect();
            let enc = secrecy_encode(code, &secret, &mut rng)?;
            let y_main = code.main.transmit(&enc.x, &mut rng);
            let y_eve = code.eve.transmit(&enc.x, &mut rng);
            let block_error = secrecy_decode(code, &y_main)? != secret;
            let (leaked_bits, eve_error) = match &eve_decoder {
                None => {
                    let unerased: Vec<usize> = (0..code.len())
                        .filter(|&j| y_eve[j] != ChannelSample::ERASURE)
                        .collect();
                    let h =
                        linear_equivocation(code.len(), &code.secret, &code.eve_info, &unerased)?;
                    (code.secret.len() - h, false)
                }
                Some(known) => {
                    let vals: Vec<u8> = known.iter().map(|&i| enc.u[i]).collect();
                    let d = ScDecoder::new(code.len(), known, &vals)?.decode(&y_eve, &code.eve)?;
                    (0, d.u_hat != enc.u)
                }
            };
            Ok(TrialOutcome {
                block_error,
                leaked_bits,
                eve_error,
            })
        })
        .collect::<Result<_>>()?;

    let block_errors = outcomes.iter().filter(|o| o.block_error).count();
    let len = code.len() as f64;
    let leakage_rate = if exact {
        outcomes.iter().map(|o| o.leaked_bits as u64).sum::<u64>() as f64 / trials as f64 / len
    } else {
        let p = outcomes.iter().filter(|o| o.eve_error).count() as f64 / trials as f64;
        let ke = code.eve_info.len() as f64;
        let bound = len * code.eve.symmetric_capacity() - ke + binary_entropy(p) + ke * p;
        bound.clamp(0.0, code.secret.len() as f64) / len
    };
    Ok(WiretapReport {
        n: code.n(),
        k_main: code.main_info.len(),
        k_eve: code.eve_info.len(),
        secret_bits: code.secret.len(),
        secret_rate: code.secret_rate(),
        pe_hat: block_errors as f64 / trials as f64,
        block_errors,
        block_error_bound: block_error_bound(&code.main_code()),
        leakage_rate_bits_per_use: leakage_rate,
        leakage_method: if exact {
            LeakageMethod::ExactRank
        } else {
            LeakageMethod::FanoEstimate
        },
        secrecy_capacity_ref: code.secrecy_capacity(),
        trials,
        seed: streams.seed(),
    })
}
