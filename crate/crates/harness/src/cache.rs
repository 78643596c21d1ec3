//! On-disk Z-table cache.
//!
//! One file per (channel kind, parameter, n, source, trials, seed). The
//! first line is a header naming those fields; every following line is one
//! Z value in shortest round-trip decimal form, so a reload is bit-exact.
//! Tables for explicit transition matrices are never cached.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use polarguard_core::construction::{bec_z_evolution, monte_carlo_z};
use polarguard_core::{ChannelModel, RngStreams, ZSource, ZTable};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache I/O on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("corrupt cache file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error(transparent)]
    Core(#[from] polarguard_core::Error),
}

/// Identifies one cached table.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheKey {
    pub kind: &'static str,
    pub param: f64,
    pub n: u32,
    pub source: ZSource,
    pub seed: Option<u64>,
}

impl CacheKey {
    /// `None` for channels that are not cached.
    pub fn for_channel(ch: &ChannelModel, n: u32, mc_trials: usize, seed: u64) -> Option<Self> {
        let (kind, param) = match ch {
            ChannelModel::Erasure { eps } => ("erasure", *eps),
            ChannelModel::Crossover { p } => ("crossover", *p),
            ChannelModel::Explicit(_) => return None,
        };
        let (source, seed) = if ch.is_erasure() {
            (ZSource::ExactErasure, None)
        } else {
            (ZSource::MonteCarlo { trials: mc_trials }, Some(seed))
        };
        Some(Self {
            kind,
            param,
            n,
            source,
            seed,
        })
    }

    fn source_str(&self) -> String {
        match self.source {
            ZSource::ExactErasure => "exact".into(),
            ZSource::MonteCarlo { trials } => format!("mc{trials}"),
        }
    }

    fn seed_str(&self) -> String {
        self.seed.map_or_else(|| "-".into(), |s| s.to_string())
    }

    pub fn file_name(&self) -> String {
        format!(
            "z-{}-{}-n{}-{}-s{}.txt",
            self.kind,
            self.param,
            self.n,
            self.source_str(),
            self.seed_str()
        )
    }

    pub fn header(&self) -> String {
        format!(
            "# kind={} param={} n={} source={} seed={}",
            self.kind,
            self.param,
            self.n,
            self.source_str(),
            self.seed_str()
        )
    }
}

/// Compute a table: exact for erasure channels, otherwise Monte Carlo on
/// streams labelled by the channel and `n`.
pub fn compute_table(
    ch: &ChannelModel,
    n: u32,
    mc_trials: usize,
    seed: u64,
) -> Result<ZTable, CacheError> {
    Ok(match ch.erasure_prob() {
        Some(eps) => bec_z_evolution(eps, n)?,
        None => monte_carlo_z(
            ch,
            n,
            mc_trials,
            &RngStreams::new(seed, format!("z-table/n{n}")),
        )?,
    })
}

pub fn write_table(path: &Path, key: &CacheKey, table: &ZTable) -> Result<(), CacheError> {
    let mut text = key.header();
    text.push('\n');
    for z in &table.z {
        text.push_str(&z.to_string());
        text.push('\n');
    }
    fs::write(path, text).map_err(|source| CacheError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn read_table(path: &Path, key: &CacheKey) -> Result<ZTable, CacheError> {
    let corrupt = |reason: String| CacheError::Corrupt {
        path: path.to_owned(),
        reason,
    };
    let text = fs::read_to_string(path).map_err(|source| CacheError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != key.header() {
        return Err(corrupt(format!(
            "header `{header}` does not match `{}`",
            key.header()
        )));
    }
    let z = lines
        .map(|l| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| corrupt(format!("`{l}`: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if z.len() != 1usize << key.n {
        return Err(corrupt(format!("{} values for n={}", z.len(), key.n)));
    }
    Ok(ZTable::new(z, key.source)?)
}

/// Load from `dir` if present, otherwise compute and store.
pub fn cached_table(
    dir: Option<&Path>,
    ch: &ChannelModel,
    n: u32,
    mc_trials: usize,
    seed: u64,
) -> Result<ZTable, CacheError> {
    let (Some(dir), Some(key)) = (dir, CacheKey::for_channel(ch, n, mc_trials, seed)) else {
        return compute_table(ch, n, mc_trials, seed);
    };
    let path = dir.join(key.file_name());
    if path.exists() {
        return read_table(&path, &key);
    }
    let table = compute_table(ch, n, mc_trials, seed)?;
    fs::create_dir_all(dir).map_err(|source| CacheError::Io {
        path: dir.to_owned(),
        source,
    })?;
    write_table(&path, &key, &table)?;
    Ok(table)
}
