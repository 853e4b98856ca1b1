use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::preprocess::{clean_tweet, TokenSequence};

use super::FeatureVector;

const DEFAULT_LEXICON: &str = include_str!("../../data/hate_lexicon.txt");

/// Ordered keyword list; coordinate `i` of a BoW vector counts keyword `i`.
///
/// Entries are normalized with the same cleaning applied to tweets, so a
/// multi-word keyword matches a contiguous run of tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    keywords: Vec<Vec<String>>,
    by_first: HashMap<String, Vec<usize>>,
}

impl Lexicon {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let mut keywords = Vec::new();
        for entry in entries {
            let cleaned = clean_tweet(entry.as_ref());
            if cleaned.is_empty() || !seen.insert(cleaned.clone()) {
                continue;
            }
            keywords.push(cleaned.split(' ').map(str::to_string).collect::<Vec<_>>());
        }
        let mut by_first: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, kw) in keywords.iter().enumerate() {
            by_first.entry(kw[0].clone()).or_default().push(i);
        }
        Lexicon { keywords, by_first }
    }

    /// Newline-delimited list; `#` comment lines are skipped.
    pub fn parse(content: &str) -> Self {
        Lexicon::new(
            content
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let lex = Lexicon::parse(&content);
        if lex.is_empty() {
            return Err(Error::Load {
                path: path.into(),
                message: "lexicon is empty".into(),
            });
        }
        Ok(lex)
    }

    /// The bundled keyword list.
    pub fn bundled() -> Self {
        Lexicon::parse(DEFAULT_LEXICON)
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    pub fn keywords(&self) -> impl Iterator<Item = String> + '_ {
        self.keywords.iter().map(|k| k.join(" "))
    }
}

/// Raw keyword occurrence counts.
pub fn extract_bow(tokens: &TokenSequence, lexicon: &Lexicon) -> FeatureVector {
    let toks = tokens.tokens();
    let mut counts = vec![0.0; lexicon.len()];
    for (pos, tok) in toks.iter().enumerate() {
        if let Some(candidates) = lexicon.by_first.get(tok) {
            for &k in candidates {
                let kw = &lexicon.keywords[k];
                if toks.len() - pos >= kw.len() && toks[pos..pos + kw.len()] == kw[..] {
                    counts[k] += 1.0;
                }
            }
        }
    }
    FeatureVector::new("bow", counts)
}
