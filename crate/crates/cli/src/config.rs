use std::fs;
use std::path::Path;

use looksearch::lsh::{DEFAULT_BITS_PER_BAND, DEFAULT_NUM_BANDS};
use looksearch::retrieval::default_max_candidates;
use looksearch::{Error, HasherConfig, Metric, Result, SearchConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub hasher: HasherSection,
    pub search: SearchDefaults,
    pub service: ServiceConfig,
}

/// Hasher parameters; `dim` may be left out and taken from the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HasherSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub num_bands: usize,
    pub bits_per_band: usize,
    pub seed: u64,
}

impl Default for HasherSection {
    fn default() -> Self {
        HasherSection {
            dim: None,
            num_bands: DEFAULT_NUM_BANDS,
            bits_per_band: DEFAULT_BITS_PER_BAND,
            seed: 0,
        }
    }
}

impl HasherSection {
    pub fn resolve(&self, corpus_dim: Option<usize>) -> Result<HasherConfig> {
        let dim = match (self.dim, corpus_dim) {
            (Some(d), Some(c)) if d != c => {
                return Err(Error::Config(format!("hasher.dim is {d} but the corpus has dimension {c}")))
            }
            (Some(d), _) => d,
            (None, Some(c)) => c,
            (None, None) => 1,
        };
        let config = HasherConfig {
            dim,
            num_bands: self.num_bands,
            bits_per_band: self.bits_per_band,
            seed: self.seed,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchDefaults {
    pub k: usize,
    /// Defaults to `max(10 * k, 100)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_candidates: Option<usize>,
    pub metric: Metric,
}

impl Default for SearchDefaults {
    fn default() -> Self {
        SearchDefaults {
            k: 5,
            max_candidates: None,
            metric: Metric::Hamming,
        }
    }
}

impl SearchDefaults {
    /// Search config for `k` results (the default `k` when `None`). A
    /// configured candidate cap below `k` is raised to `k`.
    pub fn search_config(&self, k: Option<usize>) -> Result<SearchConfig> {
        let k = k.unwrap_or(self.k);
        let max_candidates = self.max_candidates.unwrap_or_else(|| default_max_candidates(k)).max(k);
        SearchConfig::new(k, max_candidates, self.metric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServiceConfig {
    pub bind: String,
    pub port: u16,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1".into(),
            port: 8080,
        }
    }
}

impl EngineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: EngineConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.search.search_config(None)?;
        Ok(config)
    }
}
