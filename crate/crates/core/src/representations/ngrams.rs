use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NGramUnit {
    Char,
    Word,
}

/// The `K` most frequent n-grams of a training set, most frequent first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramVocabulary {
    pub unit: NGramUnit,
    pub n: usize,
    /// `(n-gram, corpus occurrence count)`; word n-grams are space-joined.
    pub entries: Vec<(String, usize)>,
    index: HashMap<String, usize>,
}

impl NGramVocabulary {
    pub fn from_entries(unit: NGramUnit, n: usize, entries: Vec<(String, usize)>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (g, _))| (g.clone(), i))
            .collect();
        NGramVocabulary {
            unit,
            n,
            entries,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Calls `f` on every positional n-gram of a canonical text.
fn for_each_ngram(text: &str, unit: NGramUnit, n: usize, mut f: impl FnMut(&str)) {
    match unit {
        NGramUnit::Char => {
            let bounds: Vec<usize> = text
                .char_indices()
                .map(|(i, _)| i)
                .chain(std::iter::once(text.len()))
                .collect();
            let chars = bounds.len() - 1;
            if chars < n {
                return;
            }
            for start in 0..=chars - n {
                f(&text[bounds[start]..bounds[start + n]]);
            }
        }
        NGramUnit::Word => {
            let words: Vec<&str> = text.split_whitespace().collect();
            if words.len() < n {
                return;
            }
            let mut buf = String::new();
            for w in words.windows(n) {
                buf.clear();
                for (i, word) in w.iter().enumerate() {
                    if i > 0 {
                        buf.push(' ');
                    }
                    buf.push_str(word);
                }
                f(&buf);
            }
        }
    }
}

/// Counts every n-gram in `texts` and keeps the `top_k` most frequent.
/// Frequency ties are broken lexicographically.
pub fn build_ngram_vocab<S: AsRef<str>>(
    texts: &[S],
    unit: NGramUnit,
    n: usize,
    top_k: usize,
) -> Result<NGramVocabulary> {
    if n == 0 || top_k == 0 {
        return Err(Error::invalid("n-gram rank and K must be at least 1"));
    }
    if texts.is_empty() {
        return Err(Error::invalid("cannot build n-gram vocabulary from no texts"));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for text in texts {
        for_each_ngram(text.as_ref(), unit, n, |g| {
            if let Some(c) = counts.get_mut(g) {
                *c += 1;
            } else {
                counts.insert(g.to_string(), 1);
            }
        });
    }
    if counts.is_empty() {
        return Err(Error::invalid(format!(
            "training texts contain no {unit:?} {n}-grams"
        )));
    }
    let mut entries: Vec<(String, usize)> = counts.into_iter().collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries.truncate(top_k);
    Ok(NGramVocabulary::from_entries(unit, n, entries))
}

/// Per-instance counts of the vocabulary's n-grams.
pub fn extract_ngram_bag(text: &str, vocab: &NGramVocabulary) -> FeatureVector {
    let mut values = vec![0.0; vocab.len()];
    for_each_ngram(text, vocab.unit, vocab.n, |g| {
        if let Some(&i) = vocab.index.get(g) {
            values[i] += 1.0;
        }
    });
    let name = match vocab.unit {
        NGramUnit::Char => "c-ngrams",
        NGramUnit::Word => "w-ngrams",
    };
    FeatureVector::new(name, values)
}
