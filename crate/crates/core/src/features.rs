//! Feature pipeline: named extractors, combinations of them, and per-fold
//! fitting.
//!
//! Extraction is split in two. Everything that does not learn from data
//! (lexicon BoW, embeddings, aux scores, instance graphs) is computed once per
//! corpus in [`PreparedCorpus`]. Everything that does (n-gram vocabularies,
//! class graphs) is fitted per training fold in [`FittedFeatures`].

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, LabeledCorpus};
use crate::error::{Error, Result};
use crate::ngg::{build_graph, build_rcgs_from_graphs, model_vector, NGramGraph, NggParams, RcgSet};
use crate::preprocess::{normalize, Normalized, StopwordSet};
use crate::representations::{
    build_ngram_vocab, concat_features, extract_bow, extract_mean_embedding, extract_ngram_bag,
    sentiment_syntax_scores, spelling_score, AuxScorer, Dictionary, EmbeddingTable, FeatureVector,
    Lexicon, LexiconScorer, NGramUnit, NGramVocabulary,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Extractor {
    #[serde(rename = "ngg")]
    Ngg,
    #[serde(rename = "bow")]
    Bow,
    #[serde(rename = "glove")]
    Glove,
    #[serde(rename = "c-ngrams")]
    CharNgrams,
    #[serde(rename = "w-ngrams")]
    WordNgrams,
    #[serde(rename = "sentiment")]
    Sentiment,
    #[serde(rename = "syntax")]
    Syntax,
    #[serde(rename = "spelling")]
    Spelling,
}

impl Extractor {
    pub const ALL: [Extractor; 8] = [
        Extractor::Ngg,
        Extractor::Bow,
        Extractor::Glove,
        Extractor::CharNgrams,
        Extractor::WordNgrams,
        Extractor::Sentiment,
        Extractor::Syntax,
        Extractor::Spelling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Extractor::Ngg => "ngg",
            Extractor::Bow => "bow",
            Extractor::Glove => "glove",
            Extractor::CharNgrams => "c-ngrams",
            Extractor::WordNgrams => "w-ngrams",
            Extractor::Sentiment => "sentiment",
            Extractor::Syntax => "syntax",
            Extractor::Spelling => "spelling",
        }
    }

    /// Whether the extractor learns state from the training fold.
    pub fn is_fitted(self) -> bool {
        matches!(
            self,
            Extractor::Ngg | Extractor::CharNgrams | Extractor::WordNgrams
        )
    }
}

impl fmt::Display for Extractor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Extractor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Extractor::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown feature extractor {s:?}")))
    }
}

/// A named, ordered list of extractors whose outputs are concatenated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub name: String,
    pub parts: Vec<Extractor>,
}

impl FeatureConfig {
    pub fn single(extractor: Extractor) -> Self {
        FeatureConfig {
            name: extractor.name().to_string(),
            parts: vec![extractor],
        }
    }

    /// The three strongest individual features.
    pub fn best() -> Self {
        FeatureConfig {
            name: "best".into(),
            parts: vec![Extractor::Ngg, Extractor::Bow, Extractor::Glove],
        }
    }

    pub fn all() -> Self {
        FeatureConfig {
            name: "all".into(),
            parts: Extractor::ALL.to_vec(),
        }
    }

    /// Every extractor except the graph model vector.
    pub fn vector() -> Self {
        FeatureConfig {
            name: "vector".into(),
            parts: Extractor::ALL
                .into_iter()
                .filter(|&e| e != Extractor::Ngg)
                .collect(),
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "best" => Some(Self::best()),
            "all" => Some(Self::all()),
            "vector" => Some(Self::vector()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureSettings {
    pub ngg: NggParams,
    /// Fraction of each class's training instances merged into its class graph.
    pub rcg_fraction: f64,
    pub char_n: usize,
    pub word_n: usize,
    /// Vocabulary size of the n-gram bags.
    pub top_k: usize,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        FeatureSettings {
            ngg: NggParams::default(),
            rcg_fraction: 0.9,
            char_n: 3,
            word_n: 2,
            top_k: 100,
        }
    }
}

impl FeatureSettings {
    pub fn validate(&self) -> Result<()> {
        self.ngg.validate()?;
        if !(self.rcg_fraction > 0.0 && self.rcg_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "rcg_fraction must be in (0, 1], got {}",
                self.rcg_fraction
            )));
        }
        if self.char_n == 0 || self.word_n == 0 || self.top_k == 0 {
            return Err(Error::invalid("n-gram ranks and top_k must be >= 1"));
        }
        Ok(())
    }
}

/// Read-only resources shared by every grid cell.
pub struct Resources {
    pub stopwords: StopwordSet,
    pub lexicon: Lexicon,
    pub embeddings: Option<EmbeddingTable>,
    pub dictionary: Option<Dictionary>,
    pub scorer: Box<dyn AuxScorer>,
}

impl Resources {
    /// Bundled stopwords, lexicons and lexicon sentiment; no embeddings or dictionary.
    pub fn bundled() -> Self {
        Resources {
            stopwords: StopwordSet::english(),
            lexicon: Lexicon::bundled(),
            embeddings: None,
            dictionary: None,
            scorer: Box::new(LexiconScorer::bundled()),
        }
    }

    /// Checks that the resources an extractor depends on are present.
    pub fn supports(&self, extractor: Extractor) -> Result<()> {
        match extractor {
            Extractor::Glove if self.embeddings.is_none() => {
                Err(Error::invalid("extractor glove needs an embedding table"))
            }
            Extractor::Spelling if self.dictionary.is_none() => {
                Err(Error::invalid("extractor spelling needs a dictionary"))
            }
            Extractor::Bow if self.lexicon.is_empty() => {
                Err(Error::invalid("extractor bow needs a non-empty lexicon"))
            }
            _ => Ok(()),
        }
    }
}

/// A normalized corpus with every fold-independent feature precomputed.
pub struct PreparedCorpus {
    pub ids: Vec<String>,
    pub labels: Vec<usize>,
    pub label_set: Vec<Label>,
    pub docs: Vec<Normalized>,
    pub settings: FeatureSettings,
    fixed: HashMap<Extractor, Vec<FeatureVector>>,
    graphs: Option<Vec<NGramGraph>>,
}

/// State learned from one training fold.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FittedFeatures {
    pub char_vocab: Option<NGramVocabulary>,
    pub word_vocab: Option<NGramVocabulary>,
    pub rcgs: Option<RcgSet>,
}

impl PreparedCorpus {
    /// Normalizes every document and precomputes what `needed` requires.
    pub fn new(
        corpus: &LabeledCorpus,
        resources: &Resources,
        settings: FeatureSettings,
        needed: &[Extractor],
    ) -> Result<Self> {
        settings.validate()?;
        for &e in needed {
            resources.supports(e)?;
        }
        let docs: Vec<Normalized> = corpus
            .documents
            .par_iter()
            .map(|d| normalize(&d.text, &resources.stopwords))
            .collect();
        let ids: Vec<String> = corpus.documents.iter().map(|d| d.id.clone()).collect();
        let wants = |e: Extractor| needed.contains(&e);

        let mut fixed = HashMap::new();
        if wants(Extractor::Bow) {
            let v = docs
                .par_iter()
                .map(|d| extract_bow(&d.tokens, &resources.lexicon))
                .collect();
            fixed.insert(Extractor::Bow, v);
        }
        if wants(Extractor::Glove) {
            let table = resources.embeddings.as_ref().expect("checked by supports");
            let v = docs
                .par_iter()
                .map(|d| extract_mean_embedding(&d.tokens, table))
                .collect();
            fixed.insert(Extractor::Glove, v);
        }
        if wants(Extractor::Sentiment) || wants(Extractor::Syntax) {
            let scores: Vec<(f64, f64)> = docs
                .par_iter()
                .zip(&ids)
                .map(|(d, id)| sentiment_syntax_scores(id, &d.tokens, resources.scorer.as_ref()))
                .collect::<Result<_>>()?;
            if wants(Extractor::Sentiment) {
                let v = scores
                    .iter()
                    .map(|s| FeatureVector::new("sentiment", vec![s.0]))
                    .collect();
                fixed.insert(Extractor::Sentiment, v);
            }
            if wants(Extractor::Syntax) {
                let v = scores
                    .iter()
                    .map(|s| FeatureVector::new("syntax", vec![s.1]))
                    .collect();
                fixed.insert(Extractor::Syntax, v);
            }
        }
        if wants(Extractor::Spelling) {
            let dict = resources.dictionary.as_ref().expect("checked by supports");
            let v = docs
                .par_iter()
                .map(|d| FeatureVector::new("spelling", vec![spelling_score(&d.tokens, dict)]))
                .collect();
            fixed.insert(Extractor::Spelling, v);
        }
        let graphs = wants(Extractor::Ngg).then(|| {
            docs.par_iter()
                .map(|d| build_graph(&d.canonical, settings.ngg))
                .collect()
        });

        Ok(PreparedCorpus {
            ids,
            labels: corpus.label_indices(),
            label_set: corpus.label_set.clone(),
            docs,
            settings,
            fixed,
            graphs,
        })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Fits vocabularies and class graphs on the documents in `train` only.
    pub fn fit(&self, train: &[usize], parts: &[Extractor], seed: u64) -> Result<FittedFeatures> {
        let mut fitted = FittedFeatures::default();
        let texts = || train.iter().map(|&i| self.docs[i].canonical.as_str()).collect::<Vec<_>>();
        let s = &self.settings;
        if parts.contains(&Extractor::CharNgrams) {
            fitted.char_vocab =
                Some(build_ngram_vocab(&texts(), NGramUnit::Char, s.char_n, s.top_k)?);
        }
        if parts.contains(&Extractor::WordNgrams) {
            fitted.word_vocab =
                Some(build_ngram_vocab(&texts(), NGramUnit::Word, s.word_n, s.top_k)?);
        }
        if parts.contains(&Extractor::Ngg) {
            let graphs = self.graphs_for(Extractor::Ngg)?;
            let refs: Vec<&NGramGraph> = train.iter().map(|&i| &graphs[i]).collect();
            let labels: Vec<usize> = train.iter().map(|&i| self.labels[i]).collect();
            fitted.rcgs = Some(build_rcgs_from_graphs(
                &refs,
                &labels,
                &self.label_set,
                s.rcg_fraction,
                seed,
            )?);
        }
        Ok(fitted)
    }

    fn graphs_for(&self, e: Extractor) -> Result<&[NGramGraph]> {
        self.graphs
            .as_deref()
            .ok_or_else(|| Error::invalid(format!("extractor {e} was not prepared")))
    }

    /// Feature vector of document `doc` under the fitted state.
    pub fn transform(
        &self,
        fitted: &FittedFeatures,
        parts: &[Extractor],
        doc: usize,
    ) -> Result<FeatureVector> {
        let unfitted = |e: Extractor| Error::invalid(format!("extractor {e} was not fitted"));
        let vectors = parts
            .iter()
            .map(|&e| match e {
                Extractor::Ngg => {
                    let rcgs = fitted.rcgs.as_ref().ok_or_else(|| unfitted(e))?;
                    Ok(model_vector(&self.graphs_for(e)?[doc], &rcgs.rcgs))
                }
                Extractor::CharNgrams => {
                    let v = fitted.char_vocab.as_ref().ok_or_else(|| unfitted(e))?;
                    Ok(extract_ngram_bag(&self.docs[doc].canonical, v))
                }
                Extractor::WordNgrams => {
                    let v = fitted.word_vocab.as_ref().ok_or_else(|| unfitted(e))?;
                    Ok(extract_ngram_bag(&self.docs[doc].canonical, v))
                }
                _ => self
                    .fixed
                    .get(&e)
                    .map(|v| v[doc].clone())
                    .ok_or_else(|| Error::invalid(format!("extractor {e} was not prepared"))),
            })
            .collect::<Result<Vec<_>>>()?;
        concat_features(&vectors)
    }

    /// Raw feature rows for `docs`, in order.
    pub fn matrix(
        &self,
        fitted: &FittedFeatures,
        parts: &[Extractor],
        docs: &[usize],
    ) -> Result<Vec<Vec<f64>>> {
        docs.par_iter()
            .map(|&i| self.transform(fitted, parts, i).map(|v| v.values))
            .collect()
    }
}
