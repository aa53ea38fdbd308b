//! Query path: category routing, restriction filtering, token-match candidate
//! generation and exact-distance reranking.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{DocSet, IndexShard, IndexShardSet};
use crate::lsh::{binarize, cosine_distance_slices, Token};
use crate::model::{Embedding, QueryObject, GENDER};
use crate::querylang::{resolve_candidates, Restriction};

pub const DEFAULT_K: usize = 5;
const MIN_DEFAULT_CANDIDATES: usize = 100;
const UNISEX: &str = "unisex";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Hamming distance between sign-binarized embeddings.
    #[default]
    Hamming,
    /// Cosine distance between raw embeddings.
    Cosine,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hamming" => Ok(Metric::Hamming),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::Config(format!("unknown metric {other:?} (expected hamming or cosine)"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Hamming => "hamming",
            Metric::Cosine => "cosine",
        })
    }
}

/// `max(10 * k, 100)`.
pub fn default_max_candidates(k: usize) -> usize {
    (10 * k).max(MIN_DEFAULT_CANDIDATES)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub k: usize,
    pub max_candidates: usize,
    pub metric: Metric,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self::with_k(DEFAULT_K)
    }
}

impl SearchConfig {
    pub fn new(k: usize, max_candidates: usize, metric: Metric) -> Result<Self> {
        let config = SearchConfig {
            k,
            max_candidates,
            metric,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_k(k: usize) -> Self {
        SearchConfig {
            k,
            max_candidates: default_max_candidates(k),
            metric: Metric::Hamming,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.k > self.max_candidates {
            return Err(Error::Config(format!(
                "k ({}) must not exceed max_candidates ({})",
                self.k, self.max_candidates
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub ordinal: u32,
    pub token_matches: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub id: String,
    pub distance: f64,
    pub token_matches: u32,
}

/// Ascending distance, then descending token matches, then ascending id.
pub fn result_order(a: &SearchResult, b: &SearchResult) -> Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then(b.token_matches.cmp(&a.token_matches))
        .then_with(|| a.id.cmp(&b.id))
}

fn candidate_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.token_matches.cmp(&a.token_matches).then(a.ordinal.cmp(&b.ordinal))
}

/// Top `max_candidates` allowed documents by number of shared tokens (ties by
/// ordinal). Documents sharing no token are never candidates.
pub fn candidate_generation(
    query_tokens: &[Token],
    allowed: &DocSet,
    shard: &IndexShard,
    max_candidates: usize,
) -> Vec<Candidate> {
    if allowed.is_empty() || max_candidates == 0 {
        return Vec::new();
    }
    let mut seen = HashSet::with_capacity(query_tokens.len());
    let mut counts = vec![0u16; shard.len()];
    let mut touched = Vec::new();
    for token in query_tokens {
        if !seen.insert(*token) {
            continue;
        }
        for &ordinal in shard.token_posting(*token) {
            if !allowed.contains(ordinal) {
                continue;
            }
            let c = &mut counts[ordinal as usize];
            if *c == 0 {
                touched.push(ordinal);
            }
            *c += 1;
        }
    }
    let mut candidates: Vec<Candidate> = touched
        .into_iter()
        .map(|ordinal| Candidate {
            ordinal,
            token_matches: u32::from(counts[ordinal as usize]),
        })
        .collect();
    if candidates.len() > max_candidates {
        candidates.select_nth_unstable_by(max_candidates - 1, candidate_order);
        candidates.truncate(max_candidates);
    }
    candidates.sort_unstable_by(candidate_order);
    candidates
}

/// Exact distances from the forward index, sorted by [`result_order`].
pub fn rerank(candidates: &[Candidate], query: &Embedding, shard: &IndexShard, metric: Metric) -> Vec<SearchResult> {
    let fwd = shard.forward();
    let query_code = binarize(query);
    let mut results: Vec<SearchResult> = candidates
        .iter()
        .map(|c| {
            let distance = match metric {
                Metric::Hamming => f64::from(query_code.hamming_unchecked(fwd.code(c.ordinal))),
                // a zero vector has no direction; treat it as orthogonal
                Metric::Cosine => cosine_distance_slices(query.as_slice(), fwd.embedding(c.ordinal)).unwrap_or(1.0),
            };
            SearchResult {
                id: fwd.id(c.ordinal).to_string(),
                distance,
                token_matches: c.token_matches,
            }
        })
        .collect();
    results.sort_by(result_order);
    results
}

/// Full query path against the shard named by the query's predicted category.
/// An unknown category yields no results.
pub fn search(
    set: &IndexShardSet,
    query: &QueryObject,
    restriction: &Restriction,
    config: &SearchConfig,
) -> Result<Vec<SearchResult>> {
    config.validate()?;
    query.validate(set.hasher().dim())?;
    if config.metric == Metric::Cosine && query.embedding.as_slice().iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidInput("cosine search with a zero query vector".into()));
    }
    let Some(shard) = set.shard(&query.predicted_category) else {
        return Ok(Vec::new());
    };
    let allowed = resolve_candidates(restriction, shard);
    let tokens = set.hasher().tokens(&query.embedding)?;
    let candidates = candidate_generation(&tokens, &allowed, shard, config.max_candidates);
    let mut results = rerank(&candidates, &query.embedding, shard, config.metric);
    results.truncate(config.k);
    Ok(results)
}

/// Restricts to the predicted gender or "unisex". An empty prediction leaves
/// `base` unchanged.
pub fn expand_gender_restriction(base: Restriction, predicted_gender: &str) -> Restriction {
    if predicted_gender.is_empty() {
        return base;
    }
    let clause = if predicted_gender == UNISEX {
        Restriction::pair(GENDER, UNISEX)
    } else {
        Restriction::Or(vec![
            Restriction::pair(GENDER, predicted_gender),
            Restriction::pair(GENDER, UNISEX),
        ])
    };
    match base {
        Restriction::MatchAll => clause,
        other => Restriction::And(vec![other, clause]),
    }
}
