//! Labeling-quality metrics: modal-answer agreement, accuracy against golden
//! labels, and the share of questions above an agreement threshold.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_AGREEMENT_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEvent {
    pub question_id: String,
    pub labeler_id: String,
    pub answer: String,
}

/// Golden answer row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldenAnswer {
    pub question_id: String,
    pub answer: String,
}

/// Rejects a labeler answering the same question twice.
pub fn validate_label_events(events: &[LabelEvent]) -> Result<()> {
    let mut seen = HashSet::new();
    for e in events {
        if !seen.insert((e.question_id.as_str(), e.labeler_id.as_str())) {
            return Err(Error::InvalidInput(format!(
                "labeler {:?} answered question {:?} more than once",
                e.labeler_id, e.question_id
            )));
        }
    }
    Ok(())
}

/// Share of answers equal to the most common answer, per question.
pub fn agreement_by_question(events: &[LabelEvent]) -> BTreeMap<&str, f64> {
    let mut counts: BTreeMap<&str, HashMap<&str, usize>> = BTreeMap::new();
    for e in events {
        *counts.entry(&e.question_id).or_default().entry(&e.answer).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(q, answers)| {
            let total: usize = answers.values().sum();
            let modal = answers.values().copied().max().unwrap_or(0);
            (q, modal as f64 / total as f64)
        })
        .collect()
}

/// Mean over questions of the modal-answer agreement rate.
pub fn label_consistency(events: &[LabelEvent]) -> f64 {
    let rates = agreement_by_question(events);
    if rates.is_empty() {
        return 0.0;
    }
    rates.values().sum::<f64>() / rates.len() as f64
}

/// Fraction of individual labels equal to the golden answer.
pub fn label_accuracy(events: &[LabelEvent], golden: &BTreeMap<String, String>) -> Result<f64> {
    let mut missing: Vec<&str> = events
        .iter()
        .map(|e| e.question_id.as_str())
        .filter(|q| !golden.contains_key(*q))
        .collect();
    if !missing.is_empty() {
        missing.sort_unstable();
        missing.dedup();
        return Err(Error::InvalidInput(format!("no golden answer for: {}", missing.join(", "))));
    }
    if events.is_empty() {
        return Ok(0.0);
    }
    let correct = events.iter().filter(|e| golden[&e.question_id] == e.answer).count();
    Ok(correct as f64 / events.len() as f64)
}

/// Fraction of questions whose agreement is at least `threshold` (inclusive).
pub fn calibration_rate(events: &[LabelEvent], threshold: f64) -> f64 {
    let rates = agreement_by_question(events);
    if rates.is_empty() {
        return 0.0;
    }
    rates.values().filter(|r| **r >= threshold).count() as f64 / rates.len() as f64
}
