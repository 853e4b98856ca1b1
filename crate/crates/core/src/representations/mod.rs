//! Vector-space feature extractors.
//!
//! Every extractor produces a [`FeatureVector`] whose length depends only on
//! fitted state (lexicon, vocabulary, embedding table), never on the instance.

mod bow;
mod embedding;
mod ngrams;
mod sentiment;
mod spelling;

pub use bow::{extract_bow, Lexicon};
pub use embedding::{extract_mean_embedding, load_embedding_table, EmbeddingTable};
pub use ngrams::{build_ngram_vocab, extract_ngram_bag, NGramUnit, NGramVocabulary};
pub use sentiment::{
    sentiment_syntax_scores, AuxScorer, LexiconScorer, PrecomputedScores,
};
pub use spelling::{levenshtein, spelling_score, Dictionary};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Provenance of one contiguous run of components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub segments: Vec<Segment>,
}

impl FeatureVector {
    /// A vector produced by a single extractor.
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        let len = values.len();
        FeatureVector {
            values,
            segments: vec![Segment {
                name: name.into(),
                offset: 0,
                len,
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Auxiliary per-document scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxScores {
    pub sentiment: f64,
    pub syntax: f64,
    /// Average minimal edit distance to the dictionary.
    pub spelling: f64,
}

/// Concatenates parts in order, re-basing segment offsets.
pub fn concat_features(parts: &[FeatureVector]) -> Result<FeatureVector> {
    if parts.is_empty() {
        return Err(Error::invalid("cannot concatenate zero feature vectors"));
    }
    let total = parts.iter().map(FeatureVector::len).sum();
    let mut values = Vec::with_capacity(total);
    let mut segments = Vec::new();
    for part in parts {
        let base = values.len();
        for seg in &part.segments {
            let slice = &part.values[seg.offset..seg.offset + seg.len];
            if slice.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("segment {:?}", seg.name)));
            }
            segments.push(Segment {
                name: seg.name.clone(),
                offset: base + seg.offset,
                len: seg.len,
            });
        }
        values.extend_from_slice(&part.values);
    }
    Ok(FeatureVector { values, segments })
}
