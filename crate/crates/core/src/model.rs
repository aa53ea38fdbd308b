//! Shared data model: embeddings, attribute maps, product records and the
//! JSONL corpus format.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attribute names with engine-level meaning.
pub const CATEGORY: &str = "category";
pub const GENDER: &str = "gender";
pub const PRICE: &str = "price";
pub const DOMAIN: &str = "domain";
pub const MERCHANT: &str = "merchant";

/// Closed label set for the `gender` attribute.
pub const GENDER_LABELS: &[&str] = &["Men", "Women", "unisex"];

/// Dense embedding stored at 32-bit precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f32>);

impl Embedding {
    pub fn new(values: Vec<f32>) -> Self {
        Embedding(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }
}

impl From<Vec<f32>> for Embedding {
    fn from(values: Vec<f32>) -> Self {
        Embedding(values)
    }
}

/// An attribute value is either a string label or a number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Str(String),
    Num(f64),
}

impl From<&str> for AttrValue {
    fn from(s: &str) -> Self {
        AttrValue::Str(s.to_string())
    }
}

impl From<String> for AttrValue {
    fn from(s: String) -> Self {
        AttrValue::Str(s)
    }
}

impl From<f64> for AttrValue {
    fn from(v: f64) -> Self {
        AttrValue::Num(v)
    }
}

/// Open attribute map. Names and string values are case-sensitive.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeMap(BTreeMap<String, AttrValue>);

impl AttributeMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: impl Into<AttrValue>) {
        self.0.insert(name.into(), value.into());
    }

    pub fn with(mut self, name: impl Into<String>, value: impl Into<AttrValue>) -> Self {
        self.insert(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&AttrValue> {
        self.0.get(name)
    }

    pub fn get_str(&self, name: &str) -> Option<&str> {
        match self.0.get(name) {
            Some(AttrValue::Str(s)) => Some(s),
            _ => None,
        }
    }

    pub fn get_num(&self, name: &str) -> Option<f64> {
        match self.0.get(name) {
            Some(AttrValue::Num(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn category(&self) -> Option<&str> {
        self.get_str(CATEGORY)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &AttrValue)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<K: Into<String>, V: Into<AttrValue>> FromIterator<(K, V)> for AttributeMap {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        AttributeMap(iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

/// One indexable product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductRecord {
    pub id: String,
    pub embedding: Embedding,
    #[serde(default)]
    pub attributes: AttributeMap,
}

/// A detected query object: its embedding plus the labels predicted by the
/// upstream detector and classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryObject {
    pub embedding: Embedding,
    pub predicted_category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_gender: Option<String>,
}

impl QueryObject {
    pub fn new(embedding: impl Into<Embedding>, category: impl Into<String>) -> Self {
        QueryObject {
            embedding: embedding.into(),
            predicted_category: category.into(),
            predicted_gender: None,
        }
    }

    pub fn validate(&self, expected_dim: usize) -> Result<()> {
        if self.predicted_category.is_empty() {
            return Err(Error::InvalidInput("predicted category is empty".into()));
        }
        if self.embedding.dim() != expected_dim {
            return Err(Error::DimensionMismatch {
                id: "<query>".into(),
                expected: expected_dim,
                found: self.embedding.dim(),
            });
        }
        if !self.embedding.is_finite() {
            return Err(Error::InvalidInput("query embedding has a non-finite value".into()));
        }
        Ok(())
    }
}

/// Axis-aligned box in pixel coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64, category: impl Into<String>) -> Self {
        BoundingBox {
            x_min,
            y_min,
            x_max,
            y_max,
            category: category.into(),
            score: None,
        }
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = Some(score);
        self
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn is_valid(&self) -> bool {
        let coords = [self.x_min, self.y_min, self.x_max, self.y_max];
        coords.iter().all(|c| c.is_finite() && *c >= 0.0)
            && self.x_min < self.x_max
            && self.y_min < self.y_max
            && self.score.is_none_or(|s| (0.0..=1.0).contains(&s))
    }
}

/// Lists every invariant the record violates. An empty report means the
/// record is indexable.
pub fn validate_record(record: &ProductRecord, expected_dim: usize) -> Vec<String> {
    let mut report = Vec::new();
    if record.id.is_empty() {
        report.push("empty id".to_string());
    }
    if record.embedding.dim() != expected_dim {
        report.push(format!(
            "embedding dimension {} does not match {}",
            record.embedding.dim(),
            expected_dim
        ));
    }
    if !record.embedding.is_finite() {
        report.push("non-finite embedding value".to_string());
    }
    match record.attributes.get(CATEGORY) {
        None => report.push("missing category".to_string()),
        Some(AttrValue::Str(s)) if s.is_empty() => report.push("empty category".to_string()),
        Some(AttrValue::Num(_)) => report.push("category is not a string".to_string()),
        Some(AttrValue::Str(_)) => {}
    }
    match record.attributes.get(GENDER) {
        None => {}
        Some(AttrValue::Str(g)) if GENDER_LABELS.contains(&g.as_str()) => {}
        Some(other) => report.push(format!("gender {other:?} is not one of {GENDER_LABELS:?}")),
    }
    for (name, value) in record.attributes.iter() {
        if name.is_empty() {
            report.push("empty attribute name".to_string());
        }
        if let AttrValue::Num(v) = value {
            if !v.is_finite() {
                report.push(format!("non-finite value for attribute {name:?}"));
            }
        }
    }
    report
}

/// Reads a JSONL product corpus. The first record fixes the dimension; blank
/// lines are skipped.
pub fn parse_product_corpus<R: BufRead>(reader: R) -> Result<Vec<ProductRecord>> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let mut dim = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ProductRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        let expected = *dim.get_or_insert(record.embedding.dim());
        if record.embedding.dim() != expected {
            return Err(Error::DimensionMismatch {
                id: record.id,
                expected,
                found: record.embedding.dim(),
            });
        }
        let violations = validate_record(&record, expected);
        if !violations.is_empty() {
            return Err(Error::InvalidRecord {
                line: line_no,
                id: record.id,
                violations,
            });
        }
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId { line: line_no, id: record.id });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_product_corpus<W: Write>(mut writer: W, records: &[ProductRecord]) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads any JSONL file into typed rows, naming the line on failure.
pub fn read_jsonl<T, R>(reader: R) -> Result<Vec<T>>
where
    T: for<'de> Deserialize<'de>,
    R: BufRead,
{
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::MalformedLine {
            line: idx + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: idx + 1,
            message: e.to_string(),
        })?);
    }
    Ok(rows)
}
