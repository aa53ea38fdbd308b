//! Embedding retrieval engine built around LSH tokens.
//!
//! Products are partitioned into one shard per category. Each shard keeps an
//! inverted index keyed by LSH tokens and string attribute values, and a
//! forward index holding the raw embedding, its binary code and the full
//! attribute map. Queries are routed by predicted category, restricted by a
//! boolean attribute expression, scored by token-match count and reranked by
//! exact distance.
//!
//! The [`evalkit`] and [`datasetgen`] modules carry the offline measurement
//! side: retrieval precision with distractors, detection mAP / P / R, human
//! relevance aggregation, labeling-quality metrics and weakly supervised
//! single-product dataset generation.

pub mod datasetgen;
pub mod error;
pub mod evalkit;
pub mod index;
pub mod lsh;
pub mod model;
pub mod querylang;
pub mod retrieval;
pub mod synth;

pub use error::{Error, Result};
pub use index::{build_index, load_index, save_index, IndexShard, IndexShardSet};
pub use lsh::{binarize, cosine_distance, hamming_distance, BinaryCode, HasherConfig, LshHasher, Token};
pub use model::{
    parse_product_corpus, validate_record, write_product_corpus, AttrValue, AttributeMap,
    BoundingBox, Embedding, ProductRecord, QueryObject,
};
pub use querylang::{evaluate_restriction, format_ast, parse_restriction, resolve_candidates, Restriction};
pub use retrieval::{expand_gender_restriction, search, Metric, SearchConfig, SearchResult};
