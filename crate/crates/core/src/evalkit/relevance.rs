//! Aggregation of human relevance ratings over the top-K result slots.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rating {
    #[serde(alias = "Extremely Similar")]
    ExtremelySimilar,
    Similar,
    #[serde(alias = "Marginally Similar")]
    MarginallySimilar,
    #[serde(alias = "Not Similar")]
    NotSimilar,
    #[serde(alias = "Did Not Load")]
    DidNotLoad,
}

impl Rating {
    pub fn is_bad(self) -> bool {
        matches!(self, Rating::MarginallySimilar | Rating::NotSimilar | Rating::DidNotLoad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceRating {
    pub query_id: String,
    /// 1-based rank of the rated result.
    #[serde(alias = "result_rank")]
    pub rank: usize,
    pub rating: Rating,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelevanceReport {
    pub k: usize,
    pub queries: usize,
    pub rated_slots: usize,
    /// `rated_slots / (queries * k)`.
    pub coverage: f64,
    /// Similar or Extremely Similar.
    pub similar_p_at_k: f64,
    /// Similar only.
    pub similar_exclusive_p_at_k: f64,
    pub extremely_similar_p_at_k: f64,
    pub bad_rate: f64,
}

/// Slot-level precision over ranks `1..=k`, aggregated across queries.
/// Unrated slots are left out of every denominator and show up in `coverage`.
pub fn relevance_at_k(ratings: &[RelevanceRating], k: usize) -> Result<RelevanceReport> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let mut seen = HashSet::new();
    let mut queries = BTreeSet::new();
    let (mut rated, mut extremely, mut similar, mut bad) = (0usize, 0usize, 0usize, 0usize);
    for r in ratings {
        if r.rank == 0 {
            return Err(Error::InvalidInput(format!("query {:?}: ranks start at 1", r.query_id)));
        }
        if !seen.insert((r.query_id.as_str(), r.rank)) {
            return Err(Error::InvalidInput(format!(
                "duplicate rating for query {:?} rank {}",
                r.query_id, r.rank
            )));
        }
        queries.insert(r.query_id.as_str());
        if r.rank > k {
            continue;
        }
        rated += 1;
        match r.rating {
            Rating::ExtremelySimilar => extremely += 1,
            Rating::Similar => similar += 1,
            _ => bad += 1,
        }
    }
    let frac = |n: usize| if rated == 0 { 0.0 } else { n as f64 / rated as f64 };
    let expected = queries.len() * k;
    Ok(RelevanceReport {
        k,
        queries: queries.len(),
        rated_slots: rated,
        coverage: if expected == 0 { 0.0 } else { rated as f64 / expected as f64 },
        similar_p_at_k: frac(similar + extremely),
        similar_exclusive_p_at_k: frac(similar),
        extremely_similar_p_at_k: frac(extremely),
        bad_rate: frac(bad),
    })
}
