//! Per-category shards, each an inverted index over LSH tokens and string
//! attributes plus a forward index used for reranking and numeric predicates.

mod docset;
mod snapshot;

use std::collections::{BTreeMap, HashMap};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lsh::{binarize_slice, BinaryCode, HasherConfig, LshHasher, Token};
use crate::model::{AttrValue, AttributeMap, ProductRecord, CATEGORY};

pub use docset::DocSet;
pub use snapshot::{load_index, save_index, FORMAT_VERSION};

pub const ATTR_PREFIX: &str = "attr:";

/// Inverted-index key for a string attribute.
pub fn attr_key(name: &str, value: &str) -> String {
    format!("{ATTR_PREFIX}{name}={value}")
}

/// Strictly increasing shard-local ordinals.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PostingList(Vec<u32>);

impl PostingList {
    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn push(&mut self, ordinal: u32) {
        debug_assert!(self.0.last().is_none_or(|&last| last < ordinal));
        self.0.push(ordinal);
    }
}

/// Ordinal-addressed document storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardIndex {
    dim: usize,
    ids: Vec<String>,
    embeddings: Vec<f32>,
    codes: Vec<BinaryCode>,
    attributes: Vec<AttributeMap>,
}

impl ForwardIndex {
    fn new(dim: usize) -> Self {
        ForwardIndex {
            dim,
            ids: Vec::new(),
            embeddings: Vec::new(),
            codes: Vec::new(),
            attributes: Vec::new(),
        }
    }

    fn push(&mut self, id: String, embedding: &[f32], attributes: AttributeMap) -> u32 {
        let ordinal = self.ids.len() as u32;
        self.ids.push(id);
        self.embeddings.extend_from_slice(embedding);
        self.codes.push(binarize_slice(embedding));
        self.attributes.push(attributes);
        ordinal
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn id(&self, ordinal: u32) -> &str {
        &self.ids[ordinal as usize]
    }

    pub fn embedding(&self, ordinal: u32) -> &[f32] {
        let start = ordinal as usize * self.dim;
        &self.embeddings[start..start + self.dim]
    }

    pub fn code(&self, ordinal: u32) -> &BinaryCode {
        &self.codes[ordinal as usize]
    }

    pub fn attributes(&self, ordinal: u32) -> &AttributeMap {
        &self.attributes[ordinal as usize]
    }
}

/// All documents of one category.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexShard {
    category: String,
    hasher: HasherConfig,
    // one map per band: pattern -> postings
    token_postings: Vec<HashMap<u64, PostingList>>,
    attr_postings: BTreeMap<String, PostingList>,
    forward: ForwardIndex,
}

impl IndexShard {
    fn new(category: String, hasher: HasherConfig) -> Self {
        IndexShard {
            category,
            hasher,
            token_postings: vec![HashMap::new(); hasher.num_bands],
            attr_postings: BTreeMap::new(),
            forward: ForwardIndex::new(hasher.dim),
        }
    }

    fn add(&mut self, record: &ProductRecord, patterns: &[u64]) {
        let ordinal = self.forward.push(
            record.id.clone(),
            record.embedding.as_slice(),
            record.attributes.clone(),
        );
        for (band, pattern) in patterns.iter().enumerate() {
            self.token_postings[band].entry(*pattern).or_default().push(ordinal);
        }
        for (name, value) in record.attributes.iter() {
            if name == CATEGORY {
                continue;
            }
            if let AttrValue::Str(v) = value {
                self.attr_postings.entry(attr_key(name, v)).or_default().push(ordinal);
            }
        }
    }

    pub fn category(&self) -> &str {
        &self.category
    }

    pub fn hasher_config(&self) -> &HasherConfig {
        &self.hasher
    }

    pub fn forward(&self) -> &ForwardIndex {
        &self.forward
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// Postings for a token (`b<band>:<hex>`) or attribute (`attr:<name>=<value>`)
    /// key. Absent or unparseable keys yield an empty list.
    pub fn posting_lookup(&self, key: &str) -> &[u32] {
        if key.starts_with(ATTR_PREFIX) {
            return self.attr_postings.get(key).map_or(&[], PostingList::as_slice);
        }
        match key.parse::<Token>() {
            Ok(token) => self.token_posting(token),
            Err(_) => &[],
        }
    }

    pub fn token_posting(&self, token: Token) -> &[u32] {
        self.token_postings
            .get(token.band as usize)
            .and_then(|band| band.get(&token.pattern))
            .map_or(&[], PostingList::as_slice)
    }

    pub fn attr_posting(&self, name: &str, value: &str) -> &[u32] {
        self.attr_postings
            .get(&attr_key(name, value))
            .map_or(&[], PostingList::as_slice)
    }

    /// Every inverted-index key with its postings, sorted by key text.
    pub fn inverted_entries(&self) -> Vec<(String, &PostingList)> {
        let mut entries: Vec<(String, &PostingList)> = self
            .token_postings
            .iter()
            .enumerate()
            .flat_map(|(band, map)| {
                map.iter().map(move |(pattern, list)| {
                    (
                        Token {
                            band: band as u32,
                            pattern: *pattern,
                        }
                        .to_string(),
                        list,
                    )
                })
            })
            .chain(self.attr_postings.iter().map(|(k, v)| (k.clone(), v)))
            .collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        entries
    }
}

/// Shards keyed by category, all sharing one hasher.
#[derive(Debug, Clone)]
pub struct IndexShardSet {
    hasher: LshHasher,
    shards: BTreeMap<String, IndexShard>,
}

impl PartialEq for IndexShardSet {
    fn eq(&self, other: &Self) -> bool {
        self.hasher.config() == other.hasher.config() && self.shards == other.shards
    }
}

impl IndexShardSet {
    pub fn empty(hasher: LshHasher) -> Self {
        IndexShardSet {
            hasher,
            shards: BTreeMap::new(),
        }
    }

    pub fn hasher(&self) -> &LshHasher {
        &self.hasher
    }

    pub fn shard(&self, category: &str) -> Option<&IndexShard> {
        self.shards.get(category)
    }

    pub fn shards(&self) -> impl Iterator<Item = &IndexShard> {
        self.shards.values()
    }

    pub fn num_shards(&self) -> usize {
        self.shards.len()
    }

    pub fn num_docs(&self) -> usize {
        self.shards.values().map(IndexShard::len).sum()
    }
}

/// Partitions records into category shards, assigning ordinals in input order.
pub fn build_index(records: &[ProductRecord], hasher: &LshHasher) -> Result<IndexShardSet> {
    for record in records {
        if record.embedding.dim() != hasher.dim() {
            return Err(Error::DimensionMismatch {
                id: record.id.clone(),
                expected: hasher.dim(),
                found: record.embedding.dim(),
            });
        }
        if record.attributes.category().is_none() {
            return Err(Error::InvalidInput(format!(
                "record {:?} has no category",
                record.id
            )));
        }
    }

    let hash = |r: &ProductRecord| hasher.patterns(r.embedding.as_slice());
    #[cfg(feature = "parallel")]
    let patterns: Vec<Vec<u64>> = records.par_iter().map(hash).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let patterns: Vec<Vec<u64>> = records.iter().map(hash).collect::<Result<_>>()?;

    let config = *hasher.config();
    let mut shards: BTreeMap<String, IndexShard> = BTreeMap::new();
    for (record, patterns) in records.iter().zip(&patterns) {
        let category = record.attributes.category().expect("checked above");
        shards
            .entry(category.to_string())
            .or_insert_with(|| IndexShard::new(category.to_string(), config))
            .add(record, patterns);
    }
    Ok(IndexShardSet {
        hasher: hasher.clone(),
        shards,
    })
}
