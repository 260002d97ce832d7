//! Run configuration: defaults, optional JSON config file, CLI overrides.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use xgcf_core::model::{ModelKind, PriorMode};
use xgcf_core::nuts::SamplerConfig;

pub const DEFAULT_MIN_SHOTS: usize = 30;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub events_dir: Option<PathBuf>,
    pub shots_csv: Option<PathBuf>,
    pub fm_ratings: Option<PathBuf>,
    pub aliases: Option<PathBuf>,
    pub min_shots: usize,
    pub kind: ModelKind,
    pub prior_mode: PriorMode,
    pub sampler: SamplerConfig,
    pub out: PathBuf,
    pub context_flag: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            events_dir: None,
            shots_csv: None,
            fm_ratings: None,
            aliases: None,
            min_shots: DEFAULT_MIN_SHOTS,
            kind: ModelKind::Hierarchical,
            prior_mode: PriorMode::ExpertInformed,
            sampler: SamplerConfig::default(),
            out: PathBuf::from("out"),
            context_flag: "under_pressure".to_string(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("failed to read config {}: {e}", path.display()))?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("invalid config {}: {e}", path.display()))?;
        Ok(config)
    }
}
