//! The search request shared by `looksearch query` and `POST /v1/search`.

use looksearch::{
    expand_gender_restriction, parse_restriction, search, Embedding, Error, IndexShardSet, QueryObject, Restriction,
    SearchResult,
};
use serde::{Deserialize, Serialize};

use crate::config::SearchDefaults;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    pub embedding: Embedding,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restrict: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum RequestError {
    /// The request itself is wrong: bad restriction, dimension, `k`.
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Engine(Error),
}

impl From<Error> for RequestError {
    fn from(e: Error) -> Self {
        match e {
            Error::Restriction(_) | Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::Config(_) => {
                RequestError::Invalid(e.to_string())
            }
            other => RequestError::Engine(other),
        }
    }
}

impl SearchRequest {
    /// Parsed restriction with gender expansion applied when a gender is given.
    pub fn effective_restriction(&self) -> Result<Restriction, RequestError> {
        let base = match &self.restrict {
            Some(text) => parse_restriction(text).map_err(|e| RequestError::Invalid(format!("restrict: {e}")))?,
            None => Restriction::MatchAll,
        };
        Ok(match &self.gender {
            Some(g) => expand_gender_restriction(base, g),
            None => base,
        })
    }

    pub fn execute(&self, index: &IndexShardSet, defaults: &SearchDefaults) -> Result<Vec<SearchResult>, RequestError> {
        let restriction = self.effective_restriction()?;
        let config = defaults.search_config(self.k)?;
        let query = QueryObject {
            embedding: self.embedding.clone(),
            predicted_category: self.category.clone(),
            predicted_gender: self.gender.clone(),
        };
        Ok(search(index, &query, &restriction, &config)?)
    }
}
