use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::build_index;
use crate::lsh::{HasherConfig, LshHasher};
use crate::model::{Embedding, ProductRecord, QueryObject};
use crate::querylang::Restriction;
use crate::retrieval::{search, Metric, SearchConfig};

/// A query object annotated with the product it depicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "MatchPairRow", into = "MatchPairRow")]
pub struct MatchPair {
    pub query: QueryObject,
    pub ground_truth_id: String,
}

/// Flat JSONL form of a [`MatchPair`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatchPairRow {
    query_embedding: Embedding,
    predicted_category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    predicted_gender: Option<String>,
    ground_truth_id: String,
}

impl From<MatchPairRow> for MatchPair {
    fn from(row: MatchPairRow) -> Self {
        MatchPair {
            query: QueryObject {
                embedding: row.query_embedding,
                predicted_category: row.predicted_category,
                predicted_gender: row.predicted_gender,
            },
            ground_truth_id: row.ground_truth_id,
        }
    }
}

impl From<MatchPair> for MatchPairRow {
    fn from(pair: MatchPair) -> Self {
        MatchPairRow {
            query_embedding: pair.query.embedding,
            predicted_category: pair.query.predicted_category,
            predicted_gender: pair.query.predicted_gender,
            ground_truth_id: pair.ground_truth_id,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetrievalEvalParams {
    pub hasher: HasherConfig,
    /// Raised to `k` when smaller.
    pub max_candidates: usize,
    pub metric: Metric,
}

/// Fraction of pairs whose ground truth appears in the top `k` results of a
/// search over an index built from `corpus` (ground truths plus distractors).
pub fn retrieval_precision_at_k(
    pairs: &[MatchPair],
    corpus: &[ProductRecord],
    params: &RetrievalEvalParams,
    k: usize,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let ids: HashSet<&str> = corpus.iter().map(|r| r.id.as_str()).collect();
    let mut missing: Vec<&str> = pairs
        .iter()
        .map(|p| p.ground_truth_id.as_str())
        .filter(|id| !ids.contains(id))
        .collect();
    if !missing.is_empty() {
        missing.sort_unstable();
        missing.dedup();
        return Err(Error::InvalidInput(format!(
            "ground truth ids missing from corpus: {}",
            missing.join(", ")
        )));
    }
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let hasher = LshHasher::new(params.hasher)?;
    let index = build_index(corpus, &hasher)?;
    let config = SearchConfig::new(k, params.max_candidates.max(k), params.metric)?;
    let mut hits = 0usize;
    for pair in pairs {
        let results = search(&index, &pair.query, &Restriction::MatchAll, &config)?;
        if results.iter().any(|r| r.id == pair.ground_truth_id) {
            hits += 1;
        }
    }
    Ok(hits as f64 / pairs.len() as f64)
}
