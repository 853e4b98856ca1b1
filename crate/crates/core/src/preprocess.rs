//! Tweet normalization: strip URLs, mentions, retweet markers, hashtags and
//! punctuation; lowercase; tokenize; drop stopwords.

use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;

use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Tokens re-joined by single spaces.
    pub fn joined(&self) -> String {
        self.0.join(" ")
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl<S: AsRef<str>> FromIterator<S> for TokenSequence {
    /// Builds a sequence from raw words, lowercasing them and dropping empties.
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenSequence(
            iter.into_iter()
                .flat_map(|s| {
                    s.as_ref()
                        .split_whitespace()
                        .map(str::to_lowercase)
                        .collect::<Vec<_>>()
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordSet {
    words: HashSet<String>,
}

impl StopwordSet {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopwordSet {
            words: words
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
        }
    }

    /// Parses a newline-delimited list; `#` lines and blank lines are ignored.
    pub fn parse(content: &str) -> Self {
        StopwordSet::new(
            content
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let set = StopwordSet::parse(&content);
        if set.is_empty() {
            return Err(Error::Load {
                path: path.into(),
                message: "stopword list is empty".into(),
            });
        }
        Ok(set)
    }

    /// The bundled English stopword list.
    pub fn english() -> Self {
        StopwordSet::parse(DEFAULT_STOPWORDS)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

fn punctuation() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[\p{P}$+<=>^`|~]").expect("valid punctuation pattern"))
}

fn is_removed_token(tok: &str) -> bool {
    tok.starts_with("http://")
        || tok.starts_with("https://")
        || tok.starts_with("www.")
        || tok.starts_with('@')
        || tok.starts_with('#')
        || tok == "RT"
}

/// Removes URLs, mentions, `RT`, hashtag tokens and punctuation, then
/// lowercases and collapses whitespace. Idempotent.
pub fn clean_tweet(text: &str) -> String {
    let kept: Vec<&str> = text
        .split_whitespace()
        .filter(|tok| !is_removed_token(tok))
        .collect();
    let joined = kept.join(" ");
    let stripped = punctuation().replace_all(&joined, "");
    stripped
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn tokenize(text: &str) -> TokenSequence {
    TokenSequence(text.split_whitespace().map(str::to_string).collect())
}

pub fn remove_stopwords(tokens: &TokenSequence, stop: &StopwordSet) -> TokenSequence {
    TokenSequence(
        tokens
            .0
            .iter()
            .filter(|t| !stop.contains(t))
            .cloned()
            .collect(),
    )
}

/// Cleaned, tokenized, stopword-filtered form of one document. Word-level
/// extractors read `tokens`; character-level extractors read `canonical`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub tokens: TokenSequence,
    pub canonical: String,
}

pub fn normalize(text: &str, stop: &StopwordSet) -> Normalized {
    let tokens = remove_stopwords(&tokenize(&clean_tweet(text)), stop);
    let canonical = tokens.joined();
    Normalized { tokens, canonical }
}
