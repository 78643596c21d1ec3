//! Experiment drivers. Each returns a [`ResultRecord`] whose metrics depend
//! only on the configuration and its seed.

use std::path::Path;

use polarguard_core::construction::{block_error_bound, select_info_set, threshold, PolarCode};
use polarguard_core::keyagree::{
    draw_schedule, expected_capacity, expected_secrecy, pa_bound, renyi_entropy, run_key_agreement,
    HashSeed, KeyAgreementParams, KeyTranscript,
};
use polarguard_core::wiretap::{build_from_tables, simulate_wiretap};
use polarguard_core::{ChannelModel, RngStreams, ZTable};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::cache::{cached_table, CacheError};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::record::{Metrics, ResultRecord};

/// Level for the "good" and "bad" polarization fractions.
pub const POLARIZATION_DELTA: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{kind}: {source}")]
    Core {
        kind: ExperimentKind,
        source: polarguard_core::Error,
    },
    #[error("{kind}: {source}")]
    Cache {
        kind: ExperimentKind,
        source: CacheError,
    },
    #[error("cannot build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

type Outcome = Result<(Metrics, Vec<Metrics>, Option<Value>), ExperimentError>;

/// Run the configured experiment, on a dedicated pool when `threads` is
/// set. Results do not depend on the pool size.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultRecord, ExperimentError> {
    let run = || match cfg.kind {
        ExperimentKind::Polarize => polarize(cfg),
        ExperimentKind::Construct => construct(cfg),
        ExperimentKind::SimulateWiretap => simulate(cfg),
        ExperimentKind::Keyagree => keyagree(cfg),
        ExperimentKind::HashCheck => hash_check(cfg),
    };
    let (metrics, rows, details) = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()?
            .install(run)?,
        None => run()?,
    };
    Ok(ResultRecord::new(cfg.clone(), metrics, rows, details))
}

fn core_err(kind: ExperimentKind) -> impl Fn(polarguard_core::Error) -> ExperimentError {
    move |source| ExperimentError::Core { kind, source }
}

fn table(cfg: &ExperimentConfig, ch: &ChannelModel, n: u32) -> Result<ZTable, ExperimentError> {
    cached_table(
        cfg.cache.as_deref().map(Path::new),
        ch,
        n,
        cfg.mc_trials,
        cfg.seed(),
    )
    .map_err(|source| ExperimentError::Cache {
        kind: cfg.kind,
        source,
    })
}

fn polarize(cfg: &ExperimentConfig) -> Outcome {
    let ch = cfg.channel.clone().expect("validated");
    let n_max = cfg.n.expect("validated");
    let n_min = cfg.n_min.unwrap_or(n_max);
    let capacity = ch.symmetric_capacity();
    let mut rows = Vec::new();
    for n in n_min..=n_max {
        let z = table(cfg, &ch, n)?;
        let len = z.len();
        let rate_level = (-((len as f64).powf(cfg.beta))).exp2();
        let info = select_info_set(&z, cfg.beta).map_err(core_err(cfg.kind))?;
        let mut row = Metrics::new();
        row.insert("n".into(), json!(n));
        row.insert("len".into(), json!(len));
        row.insert(
            "fraction_good".into(),
            json!(z.fraction_below(POLARIZATION_DELTA)),
        );
        row.insert(
            "fraction_bad".into(),
            json!(z.fraction_above(1.0 - POLARIZATION_DELTA)),
        );
        row.insert(
            "fraction_rate_threshold".into(),
            json!(z.fraction_below(rate_level)),
        );
        row.insert(
            "fraction_info_set".into(),
            json!(info.len() as f64 / len as f64),
        );
        row.insert("mean_z".into(), json!(z.mean()));
        rows.push(row);
    }
    let nondecreasing = |key: &str| {
        rows.windows(2)
            .all(|w| w[0][key].as_f64() <= w[1][key].as_f64())
    };
    let mut metrics = rows.last().cloned().expect("at least one n");
    metrics.insert("capacity".into(), json!(capacity));
    metrics.insert("delta".into(), json!(POLARIZATION_DELTA));
    metrics.insert("beta".into(), json!(cfg.beta));
    metrics.insert(
        "good_nondecreasing".into(),
        json!(nondecreasing("fraction_good")),
    );
    metrics.insert(
        "bad_nondecreasing".into(),
        json!(nondecreasing("fraction_bad")),
    );
    Ok((metrics, rows, None))
}

fn construct(cfg: &ExperimentConfig) -> Outcome {
    let ch = cfg.channel.clone().expect("validated");
    let n = cfg.n.expect("validated");
    let z = table(cfg, &ch, n)?;
    let len = z.len();
    let err = core_err(cfg.kind);
    let k = cfg.k.or_else(|| {
        cfg.rate
            .map(|r| ((r * len as f64).ceil().max(0.0) as usize).min(len))
    });
    let code = match k {
        Some(k) => PolarCode::by_top_k(z, k),
        None => PolarCode::by_threshold(z, cfg.beta),
    }
    .map_err(&err)?;
    let mut metrics = Metrics::new();
    metrics.insert("n".into(), json!(n));
    metrics.insert("len".into(), json!(len));
    metrics.insert("k".into(), json!(code.k()));
    metrics.insert("rate".into(), json!(code.rate()));
    metrics.insert("capacity".into(), json!(ch.symmetric_capacity()));
    metrics.insert("block_error_bound".into(), json!(block_error_bound(&code)));
    metrics.insert(
        "rule".into(),
        json!(if k.is_some() { "top-k" } else { "threshold" }),
    );
    if k.is_none() {
        metrics.insert("threshold".into(), json!(threshold(len, cfg.beta)));
    }
    if let Some(trials) = cfg.trials.filter(|&t| t > 0) {
        let streams = RngStreams::new(cfg.seed(), format!("construct/n{n}"));
        let decoder = code.decoder();
        let errors: Vec<bool> = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = streams.stream(t);
                let info: Vec<u8> = (0..code.k()).map(|_| rng.gen_range(0..2)).collect();
                let x = code.encode(&info)?;
                let y = ch.transmit(&x, &mut rng);
                let d = decoder.decode(&y, &ch)?;
                Ok(code
                    .info_set()
                    .iter()
                    .zip(&info)
                    .any(|(&i, &b)| d.u_hat[i] != b))
            })
            .collect::<Result<_, polarguard_core::Error>>()
            .map_err(&err)?;
        let block_errors = errors.iter().filter(|e| **e).count();
        metrics.insert("trials".into(), json!(trials));
        metrics.insert("block_errors".into(), json!(block_errors));
        metrics.insert("pe_hat".into(), json!(block_errors as f64 / trials as f64));
    }
    Ok((metrics.clone(), vec![metrics], None))
}

fn simulate(cfg: &ExperimentConfig) -> Outcome {
    let main = cfg.main.clone().expect("validated");
    let eve = cfg.eve.clone().expect("validated");
    let n = cfg.n.expect("validated");
    let trials = cfg.trials.expect("validated");
    let err = core_err(cfg.kind);
    let z_main = table(cfg, &main, n)?;
    let z_eve = table(cfg, &eve, n)?;
    let rule = cfg.rate_rule.unwrap_or_default();
    let code = build_from_tables(main, eve, z_main, z_eve, rule).map_err(&err)?;
    let report = simulate_wiretap(
        &code,
        trials,
        &RngStreams::new(cfg.seed(), "simulate-wiretap"),
    )
    .map_err(&err)?;
    let Value::Object(obj) = serde_json::to_value(&report).expect("report serializes") else {
        unreachable!("reports serialize to objects")
    };
    let mut metrics: Metrics = obj.into_iter().collect();
    metrics.insert(
        "rate_rule".into(),
        serde_json::to_value(rule).expect("rule serializes"),
    );
    let row: Metrics = metrics
        .iter()
        .filter(|(_, v)| !v.is_object())
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    Ok((metrics, vec![row], None))
}

fn keyagree(cfg: &ExperimentConfig) -> Outcome {
    let err = core_err(cfg.kind);
    let dist_main = cfg.dist_main.clone().expect("validated");
    let dist_eve = cfg.dist_eve.clone().expect("validated");
    let params = KeyAgreementParams {
        n: cfg.n.expect("validated"),
        block_rule: cfg.block_rule,
        key_rule: cfg.key_rule,
        eps_star: cfg.eps_star,
    };
    let mut transcripts: Vec<KeyTranscript> = Vec::with_capacity(cfg.runs);
    for run in 0..cfg.runs {
        let streams = RngStreams::new(cfg.seed(), format!("keyagree/run{run}"));
        let schedule = draw_schedule(
            &dist_main,
            &dist_eve,
            cfg.super_blocks.expect("validated"),
            cfg.blocks_per_super.expect("validated"),
            &mut streams.child("schedule").stream(0),
        )
        .map_err(&err)?;
        transcripts.push(run_key_agreement(&schedule, &params, &streams).map_err(&err)?);
    }
    let runs = transcripts.len() as f64;
    let mismatches = transcripts.iter().filter(|t| t.totals.mismatch).count();
    let per_use: Vec<f64> = transcripts
        .iter()
        .map(|t| t.totals.equivocation_per_use)
        .collect();
    let leak_ratio = |t: &KeyTranscript| {
        if t.totals.r_bits == 0 {
            0.0
        } else {
            t.totals.leakage_proxy_bits / t.totals.r_bits as f64
        }
    };
    let rows: Vec<Metrics> = transcripts
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut row = Metrics::new();
            row.insert("run".into(), json!(i));
            row.insert("n_bits".into(), json!(t.totals.n_bits));
            row.insert("r_bits".into(), json!(t.totals.r_bits));
            row.insert("mismatch".into(), json!(t.totals.mismatch));
            row.insert("failed_blocks".into(), json!(t.totals.failed_blocks));
            row.insert(
                "total_equivocation_bits".into(),
                json!(t.totals.total_equivocation_bits),
            );
            row.insert(
                "equivocation_per_use".into(),
                json!(t.totals.equivocation_per_use),
            );
            row.insert(
                "leakage_proxy_bits".into(),
                json!(t.totals.leakage_proxy_bits),
            );
            row.insert("key_hex".into(), json!(t.totals.key_hex));
            row
        })
        .collect();
    let mut metrics = Metrics::new();
    metrics.insert("runs".into(), json!(cfg.runs));
    metrics.insert("mismatch_frequency".into(), json!(mismatches as f64 / runs));
    metrics.insert(
        "mean_equivocation_per_use".into(),
        json!(per_use.iter().sum::<f64>() / runs),
    );
    metrics.insert(
        "min_equivocation_per_use".into(),
        json!(per_use.iter().copied().fold(f64::INFINITY, f64::min)),
    );
    metrics.insert(
        "max_equivocation_per_use".into(),
        json!(per_use.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
    );
    metrics.insert(
        "expected_capacity".into(),
        json!(expected_capacity(&dist_main)),
    );
    metrics.insert(
        "expected_secrecy".into(),
        json!(expected_secrecy(&dist_main, &dist_eve)),
    );
    metrics.insert(
        "min_r_bits".into(),
        json!(transcripts
            .iter()
            .map(|t| t.totals.r_bits)
            .min()
            .unwrap_or(0)),
    );
    metrics.insert(
        "mean_r_bits".into(),
        json!(
            transcripts
                .iter()
                .map(|t| t.totals.r_bits as f64)
                .sum::<f64>()
                / runs
        ),
    );
    metrics.insert(
        "max_leakage_proxy_ratio".into(),
        json!(transcripts.iter().map(leak_ratio).fold(0.0, f64::max)),
    );
    metrics.insert(
        "max_leakage_proxy_bits".into(),
        json!(transcripts
            .iter()
            .map(|t| t.totals.leakage_proxy_bits)
            .fold(0.0, f64::max)),
    );
    metrics.insert(
        "failed_blocks".into(),
        json!(transcripts
            .iter()
            .map(|t| t.totals.failed_blocks)
            .sum::<usize>()),
    );
    metrics.insert(
        "asymptotic_n_bits".into(),
        json!(transcripts[0].asymptotic_lengths.n_bits),
    );
    metrics.insert(
        "asymptotic_r_bits".into(),
        json!(transcripts[0].asymptotic_lengths.r_bits),
    );
    metrics.insert("key_hex".into(), json!(transcripts[0].totals.key_hex));
    let details = serde_json::to_value(&transcripts).expect("transcripts serialize");
    Ok((metrics, rows, Some(details)))
}

/// Source distribution for the hash check: heavy weight on every third
/// input, light elsewhere, drawn from the config seed.
fn hash_source(input_bits: usize, seed: u64) -> Vec<f64> {
    let mut rng = RngStreams::new(seed, "hash-check/source").stream(0);
    let weights: Vec<f64> = (0..1usize << input_bits)
        .map(|w| {
            if w % 3 == 0 {
                rng.gen_range(0.5..4.0)
            } else {
                rng.gen_range(0.0..0.2)
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

/// Hash value of every input for one matrix, built one column at a time.
fn hash_all_inputs(hash: &HashSeed, input_bits: usize) -> Vec<usize> {
    let r = hash.output_bits();
    let columns: Vec<usize> = (0..input_bits)
        .map(|c| {
            (0..r).fold(0, |acc, row| {
                acc | ((hash.matrix.get(row, c) as usize) << row)
            })
        })
        .collect();
    let mut out = vec![0usize; 1 << input_bits];
    for w in 1..out.len() {
        out[w] = out[w & (w - 1)] ^ columns[w.trailing_zeros() as usize];
    }
    out
}

fn hash_check(cfg: &ExperimentConfig) -> Outcome {
    let input_bits = cfg.input_bits.expect("validated");
    let samples = cfg.samples.expect("validated");
    let err = core_err(cfg.kind);
    let probs = hash_source(input_bits, cfg.seed());
    let renyi = renyi_entropy(&probs).map_err(&err)?;
    let mut metrics = Metrics::new();
    metrics.insert("input_bits".into(), json!(input_bits));
    metrics.insert("samples".into(), json!(samples));
    metrics.insert("renyi_entropy".into(), json!(renyi));
    let mut rows = Vec::new();
    for &r in cfg.key_bits.as_deref().expect("validated") {
        let streams = RngStreams::new(cfg.seed(), format!("hash-check/r{r}"));
        let mut pair_rng = streams.child("pair").stream(0);
        let x1: usize = pair_rng.gen_range(0..1usize << input_bits);
        let x2: usize = (x1 + pair_rng.gen_range(1..1usize << input_bits)) % (1 << input_bits);
        let per_sample: Vec<(f64, bool)> = (0..samples as u64)
            .into_par_iter()
            .map(|s| {
                let seed: u64 = streams.stream(s).gen();
                let hash = HashSeed::draw(r, input_bits, seed)?;
                let keys = hash_all_inputs(&hash, input_bits);
                let mut key_probs = vec![0.0f64; 1 << r];
                for (w, p) in probs.iter().enumerate() {
                    key_probs[keys[w]] += p;
                }
                let h: f64 = key_probs
                    .iter()
                    .filter(|&&p| p > 0.0)
                    .map(|p| -p * p.log2())
                    .sum();
                Ok((h, keys[x1] == keys[x2]))
            })
            .collect::<Result<_, polarguard_core::Error>>()
            .map_err(&err)?;
        let h_mean = per_sample.iter().map(|(h, _)| h).sum::<f64>() / samples as f64;
        let collisions = per_sample.iter().filter(|(_, c)| *c).count();
        let p = (-(r as f64)).exp2();
        let sigma = (p * (1.0 - p) / samples as f64).sqrt();
        let mut row = Metrics::new();
        row.insert("r".into(), json!(r));
        row.insert("h_key_given_hash".into(), json!(h_mean));
        row.insert("pa_bound".into(), json!(pa_bound(r, renyi)));
        row.insert(
            "collision_rate".into(),
            json!(collisions as f64 / samples as f64),
        );
        row.insert("collision_limit".into(), json!(p + 3.0 * sigma));
        for (k, v) in &row {
            if k != "r" {
                metrics.insert(format!("{k}_r{r}"), v.clone());
            }
        }
        rows.push(row);
    }
    Ok((metrics, rows, None))
}
