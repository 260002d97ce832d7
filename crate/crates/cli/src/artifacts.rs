//! Fixed artifact names under the output directory, atomic file writes, and
//! loaders for the persisted pipeline stages.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

use xgcf_core::features::FEATURE_NAMES;
use xgcf_core::ingest::PlayerTable;
use xgcf_core::nuts::{read_chain_csv, ChainDraws, PosteriorDraws, SamplerConfig};
use xgcf_core::PriorMeanMatrix64;

pub const SHOTS_CSV: &str = "shots.csv";
pub const PLAYER_TABLE_JSON: &str = "player_table.json";
pub const INGEST_REPORT_JSON: &str = "ingest_report.json";
pub const MATCH_REPORT_JSON: &str = "match_report.json";
pub const FEATURES_CSV: &str = "features.csv";
pub const SCALER_JSON: &str = "scaler.json";
pub const PRIORS_CSV: &str = "priors.csv";
pub const RUN_METADATA_JSON: &str = "run_metadata.json";
pub const DIAGNOSTICS_JSON: &str = "diagnostics.json";
pub const XG_CSV: &str = "xg.csv";
pub const COUNTERFACTUAL_REPORT_JSON: &str = "counterfactual_report.json";
pub const COUNTERFACTUAL_DRAWS_CSV: &str = "counterfactual_draws.csv";

pub fn chain_csv_name(chain: usize) -> String {
    format!("draws_chain_{chain}.csv")
}

/// Whole-file atomic write: write a temp sibling, then rename over the
/// destination.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} into place", tmp.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_player_table(dir: &Path) -> Result<PlayerTable> {
    let mut table: PlayerTable = read_json(&dir.join(PLAYER_TABLE_JSON))?;
    table.rebuild_lookup();
    Ok(table)
}

/// Load the prior mean matrix persisted as priors.csv (rows in player-index
/// order, columns in feature order).
pub fn load_prior_means(dir: &Path, n_players: usize) -> Result<PriorMeanMatrix64> {
    let path = dir.join(PRIORS_CSV);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(&path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut priors = PriorMeanMatrix64::zeros(n_players);
    let mut row_count = 0usize;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if i >= n_players {
            bail!("{}: more rows than players ({n_players})", path.display());
        }
        for j in 0..FEATURE_NAMES.len() {
            let raw = record.get(j + 1).unwrap_or("");
            priors.mu[(i, j)] = raw
                .parse()
                .with_context(|| format!("{}: row {i}: bad value '{raw}'", path.display()))?;
        }
        row_count += 1;
    }
    if row_count != n_players {
        bail!(
            "{}: {row_count} rows for {n_players} players",
            path.display()
        );
    }
    Ok(priors)
}

/// Load every persisted chain in index order and reassemble the posterior.
pub fn load_draws(dir: &Path, config: &SamplerConfig) -> Result<PosteriorDraws<f64>> {
    let mut chains: Vec<ChainDraws<f64>> = Vec::new();
    let mut names: Option<Vec<String>> = None;
    for k in 0.. {
        let path = dir.join(chain_csv_name(k));
        if !path.exists() {
            break;
        }
        let (chain_names, chain) = read_chain_csv::<f64>(&path)?;
        match &names {
            None => names = Some(chain_names),
            Some(expected) => {
                if *expected != chain_names {
                    bail!("{}: parameter names differ from chain 0", path.display());
                }
            }
        }
        chains.push(chain);
    }
    if chains.is_empty() {
        bail!("no draws_chain_*.csv files under {}", dir.display());
    }
    if chains.len() < 2 {
        bail!(
            "found only {} chain under {}; diagnostics and reports need at least 2",
            chains.len(),
            dir.display()
        );
    }
    let n = chains[0].draws.nrows();
    if chains.iter().any(|c| c.draws.nrows() != n) {
        bail!("chains under {} have unequal draw counts", dir.display());
    }
    Ok(PosteriorDraws {
        chains,
        param_names: names.expect("at least one chain"),
        config: config.clone(),
    })
}
