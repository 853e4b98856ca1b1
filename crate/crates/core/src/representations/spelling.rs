use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::preprocess::TokenSequence;

/// Unit-cost Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone)]
struct BkNode {
    word: String,
    children: HashMap<usize, usize>,
}

/// Set of correctly spelled words, indexed by a BK-tree for nearest-word queries.
#[derive(Debug, Clone)]
pub struct Dictionary {
    words: HashSet<String>,
    nodes: Vec<BkNode>,
}

impl Dictionary {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut dict = Dictionary {
            words: HashSet::new(),
            nodes: Vec::new(),
        };
        for w in words {
            let w = w.as_ref().trim().to_lowercase();
            if !w.is_empty() && dict.words.insert(w.clone()) {
                dict.insert_node(w);
            }
        }
        dict
    }

    fn insert_node(&mut self, word: String) {
        if self.nodes.is_empty() {
            self.nodes.push(BkNode {
                word,
                children: HashMap::new(),
            });
            return;
        }
        let mut at = 0;
        loop {
            let d = levenshtein(&self.nodes[at].word, &word);
            match self.nodes[at].children.get(&d) {
                Some(&child) => at = child,
                None => {
                    let id = self.nodes.len();
                    self.nodes[at].children.insert(d, id);
                    self.nodes.push(BkNode {
                        word,
                        children: HashMap::new(),
                    });
                    return;
                }
            }
        }
    }

    /// Newline-delimited word list.
    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dict = Dictionary::new(
            content
                .lines()
                .filter(|l| !l.trim_start().starts_with('#')),
        );
        if dict.is_empty() {
            return Err(Error::Load {
                path: path.into(),
                message: "dictionary is empty".into(),
            });
        }
        Ok(dict)
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

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    /// Smallest edit distance from `word` to any dictionary entry.
    pub fn min_distance(&self, word: &str) -> Option<usize> {
        if self.nodes.is_empty() {
            return None;
        }
        if self.words.contains(word) {
            return Some(0);
        }
        let mut best = usize::MAX;
        let mut stack = vec![0usize];
        while let Some(at) = stack.pop() {
            let node = &self.nodes[at];
            let d = levenshtein(&node.word, word);
            best = best.min(d);
            if best == 0 {
                break;
            }
            // Triangle inequality: a child at edge distance e holds words
            // at least |d - e| away from the query.
            for (&e, &child) in &node.children {
                if d.abs_diff(e) < best {
                    stack.push(child);
                }
            }
        }
        Some(best)
    }
}

/// Mean over tokens of the distance to the closest dictionary word; 0 for no tokens.
pub fn spelling_score(tokens: &TokenSequence, dictionary: &Dictionary) -> f64 {
    let toks = tokens.tokens();
    if toks.is_empty() || dictionary.is_empty() {
        return 0.0;
    }
    let total: usize = toks
        .iter()
        .map(|t| dictionary.min_distance(t).unwrap_or(0))
        .sum();
    total as f64 / toks.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::tokenize;
    use proptest::prelude::*;

    /// Full-matrix recursion, kept independent of the two-row version.
    fn levenshtein_matrix(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut m = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in m.iter_mut().enumerate() {
            row[0] = i;
        }
        for j in 0..=b.len() {
            m[0][j] = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let c = if a[i - 1] == b[j - 1] { 0 } else { 1 };
                m[i][j] = (m[i - 1][j] + 1).min(m[i][j - 1] + 1).min(m[i - 1][j - 1] + c);
            }
        }
        m[a.len()][b.len()]
    }

    fn spelling_bruteforce(tokens: &[&str], dict: &[&str]) -> f64 {
        if tokens.is_empty() {
            return 0.0;
        }
        let total: usize = tokens
            .iter()
            .map(|t| dict.iter().map(|d| levenshtein_matrix(t, d)).min().unwrap())
            .sum();
        total as f64 / tokens.len() as f64
    }

    #[test]
    fn distances() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("helo", "hello"), 1);
        assert_eq!(levenshtein("helo", "help"), 1);
        assert_eq!(levenshtein("naïve", "naive"), 1);
    }

    #[test]
    fn score_examples() {
        let d = Dictionary::new(["hello"]);
        assert_eq!(spelling_score(&tokenize("hello"), &d), 0.0);
        let d = Dictionary::new(["hello", "help"]);
        assert_eq!(spelling_score(&tokenize("helo hello"), &d), 0.5);
        assert_eq!(spelling_score(&tokenize(""), &d), 0.0);
    }

    proptest! {
        #[test]
        fn two_row_matches_matrix(a in "[abc]{0,8}", b in "[abc]{0,8}") {
            prop_assert_eq!(levenshtein(&a, &b), levenshtein_matrix(&a, &b));
        }

        #[test]
        fn bktree_matches_bruteforce(
            dict in proptest::collection::vec("[abcd]{1,6}", 1..25),
            toks in proptest::collection::vec("[abcde]{1,7}", 0..6),
        ) {
            let d = Dictionary::new(&dict);
            let mut dict_refs: Vec<&str> = dict.iter().map(String::as_str).collect();
            dict_refs.sort();
            dict_refs.dedup();
            let tok_refs: Vec<&str> = toks.iter().map(String::as_str).collect();
            let seq = tokenize(&toks.join(" "));
            let got = spelling_score(&seq, &d);
            prop_assert_eq!(got, spelling_bruteforce(&tok_refs, &dict_refs));
            prop_assert!(got >= 0.0);
            let all_known = tok_refs.iter().all(|t| d.contains(t));
            prop_assert_eq!(got == 0.0, all_known);
        }

        #[test]
        fn adding_words_never_increases_score(
            dict in proptest::collection::vec("[abc]{1,5}", 1..10),
            extra in "[abc]{1,5}",
            toks in proptest::collection::vec("[abc]{1,5}", 1..5),
        ) {
            let seq = tokenize(&toks.join(" "));
            let before = spelling_score(&seq, &Dictionary::new(&dict));
            let mut bigger = dict.clone();
            bigger.push(extra);
            prop_assert!(spelling_score(&seq, &Dictionary::new(&bigger)) <= before);
        }
    }
}
