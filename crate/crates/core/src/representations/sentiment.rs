use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::preprocess::TokenSequence;

const DEFAULT_SENTIMENT: &str = include_str!("../../data/sentiment_lexicon.tsv");

/// Source of per-document sentiment and syntax scores.
pub trait AuxScorer: Send + Sync {
    /// Returns `(sentiment, syntax)`.
    fn scores(&self, doc_id: &str, tokens: &TokenSequence) -> Result<(f64, f64)>;
}

/// Polarity-word ratio: `(positive - negative) / token count`. Syntax is always 0.
#[derive(Debug, Clone, Default)]
pub struct LexiconScorer {
    positive: HashSet<String>,
    negative: HashSet<String>,
}

impl LexiconScorer {
    pub fn new<I, J, S, T>(positive: I, negative: J) -> Self
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        LexiconScorer {
            positive: positive.into_iter().map(|s| s.as_ref().to_lowercase()).collect(),
            negative: negative.into_iter().map(|s| s.as_ref().to_lowercase()).collect(),
        }
    }

    /// Parses `word<TAB>positive|negative` lines; `#` lines are comments.
    pub fn parse(content: &str) -> std::result::Result<Self, (usize, String)> {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (i, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(word), Some(polarity)) = (parts.next(), parts.next()) else {
                return Err((i + 1, "expected word<TAB>polarity".into()));
            };
            match polarity.trim() {
                "positive" | "+1" | "1" => pos.push(word.trim()),
                "negative" | "-1" => neg.push(word.trim()),
                other => return Err((i + 1, format!("unknown polarity {other:?}"))),
            }
        }
        Ok(LexiconScorer::new(pos, neg))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        LexiconScorer::parse(&content).map_err(|(line, message)| Error::Parse {
            path: path.into(),
            line,
            message,
        })
    }

    /// The bundled polarity list.
    pub fn bundled() -> Self {
        LexiconScorer::parse(DEFAULT_SENTIMENT).expect("bundled sentiment lexicon is well formed")
    }
}

impl AuxScorer for LexiconScorer {
    fn scores(&self, _doc_id: &str, tokens: &TokenSequence) -> Result<(f64, f64)> {
        if tokens.is_empty() {
            return Ok((0.0, 0.0));
        }
        let mut balance = 0i64;
        for t in tokens.tokens() {
            if self.positive.contains(t) {
                balance += 1;
            }
            if self.negative.contains(t) {
                balance -= 1;
            }
        }
        Ok((balance as f64 / tokens.len() as f64, 0.0))
    }
}

/// Externally computed scores keyed by document id, read from
/// `id<TAB>sentiment<TAB>syntax` lines.
///
/// Lookups try the full id first, then the id with any `source:` prefix
/// removed, so files keyed by original dataset ids work on combined corpora.
#[derive(Debug, Clone, Default)]
pub struct PrecomputedScores {
    scores: HashMap<String, (f64, f64)>,
}

impl PrecomputedScores {
    pub fn new(scores: HashMap<String, (f64, f64)>) -> Self {
        PrecomputedScores { scores }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut scores = HashMap::new();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let err = |message: String| Error::Parse {
                path: path.into(),
                line: i + 1,
                message,
            };
            if fields.len() != 3 {
                return Err(err(format!("expected 3 tab-separated fields, found {}", fields.len())));
            }
            if i == 0 && fields[1].trim() == "sentiment" {
                continue;
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(format!("invalid score {s:?}")))
            };
            scores.insert(fields[0].trim().to_string(), (parse(fields[1])?, parse(fields[2])?));
        }
        Ok(PrecomputedScores { scores })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl AuxScorer for PrecomputedScores {
    fn scores(&self, doc_id: &str, _tokens: &TokenSequence) -> Result<(f64, f64)> {
        self.scores
            .get(doc_id)
            .or_else(|| {
                doc_id
                    .split_once(':')
                    .and_then(|(_, bare)| self.scores.get(bare))
            })
            .copied()
            .ok_or_else(|| Error::MissingScore(doc_id.to_string()))
    }
}

pub fn sentiment_syntax_scores(
    doc_id: &str,
    tokens: &TokenSequence,
    scorer: &dyn AuxScorer,
) -> Result<(f64, f64)> {
    let (sentiment, syntax) = scorer.scores(doc_id, tokens)?;
    if !sentiment.is_finite() || !syntax.is_finite() {
        return Err(Error::NonFinite(format!("aux scores of {doc_id:?}")));
    }
    Ok((sentiment, syntax))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::tokenize;
    use std::io::Write;

    #[test]
    fn lexicon_ratio() {
        let s = LexiconScorer::new(["good"], ["bad"]);
        assert_eq!(sentiment_syntax_scores("1", &tokenize("good"), &s).unwrap(), (1.0, 0.0));
        assert_eq!(
            sentiment_syntax_scores("1", &tokenize("bad bad good day"), &s).unwrap(),
            (-0.25, 0.0)
        );
        assert_eq!(sentiment_syntax_scores("1", &tokenize(""), &s).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn bundled_lexicon_has_both_polarities() {
        let s = LexiconScorer::bundled();
        assert!(s.positive.contains("good"));
        assert!(s.negative.contains("hate"));
    }

    #[test]
    fn precomputed_passthrough() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "id\tsentiment\tsyntax\n7\t-0.5\t0.8\nhsol:9\t0.1\t0.2").unwrap();
        let p = PrecomputedScores::load(f.path()).unwrap();
        let empty = tokenize("");
        assert_eq!(p.scores("7", &empty).unwrap(), (-0.5, 0.8));
        assert_eq!(p.scores("rs:7", &empty).unwrap(), (-0.5, 0.8));
        assert_eq!(p.scores("hsol:9", &empty).unwrap(), (0.1, 0.2));
        match p.scores("8", &empty).unwrap_err() {
            Error::MissingScore(id) => assert_eq!(id, "8"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn precomputed_bad_line() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "1\t0.1\t0.2\n2\tx\t0.3").unwrap();
        assert!(matches!(
            PrecomputedScores::load(f.path()).unwrap_err(),
            Error::Parse { line: 2, .. }
        ));
    }
}
