use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::preprocess::TokenSequence;

use super::FeatureVector;

/// Pre-trained word vectors of a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        EmbeddingTable {
            dimension,
            vectors: HashMap::new(),
        }
    }

    /// Inserts or replaces a word vector. Returns `true` when the word was already present.
    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<bool> {
        if vector.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: vector.len(),
            });
        }
        Ok(self.vectors.insert(word.into(), vector).is_some())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Reads a GloVe text file (`word v1 .. vd` per line).
///
/// When `keep` is given, only those words are retained; every line is still
/// validated.
pub fn load_embedding_table(
    path: &Path,
    expected_dim: usize,
    keep: Option<&HashSet<String>>,
) -> Result<EmbeddingTable> {
    if expected_dim == 0 {
        return Err(Error::invalid("embedding dimension must be positive"));
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut table = EmbeddingTable::new(expected_dim);
    let mut duplicates = 0usize;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else {
            continue;
        };
        let parse_err = |message: String| Error::Parse {
            path: path.into(),
            line: line_no,
            message,
        };
        let mut vector = Vec::with_capacity(expected_dim);
        for p in parts {
            let v: f64 = p
                .parse()
                .map_err(|_| parse_err(format!("invalid number {p:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(format!("non-finite component {p:?}")));
            }
            vector.push(v);
        }
        if vector.len() != expected_dim {
            return Err(parse_err(format!(
                "expected {expected_dim} components, found {}",
                vector.len()
            )));
        }
        if keep.is_some_and(|k| !k.contains(word)) {
            continue;
        }
        if table.insert(word, vector)? {
            duplicates += 1;
        }
    }
    if duplicates > 0 {
        log::warn!(
            "{}: {duplicates} duplicate words, last occurrence kept",
            path.display()
        );
    }
    Ok(table)
}

/// Component-wise mean over in-vocabulary tokens; zero vector when none are known.
pub fn extract_mean_embedding(tokens: &TokenSequence, table: &EmbeddingTable) -> FeatureVector {
    let mut sum = vec![0.0; table.dimension];
    let mut found = 0usize;
    for tok in tokens.tokens() {
        if let Some(v) = table.get(tok) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            found += 1;
        }
    }
    if found > 0 {
        let n = found as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    FeatureVector::new("glove", sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::tokenize;
    use std::io::Write;

    fn file(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(2);
        t.insert("a", vec![1.0, 3.0]).unwrap();
        t.insert("b", vec![3.0, 5.0]).unwrap();
        t
    }

    #[test]
    fn parses_glove_line() {
        let f = file("the 0.1 0.2\n");
        let t = load_embedding_table(f.path(), 2, None).unwrap();
        assert_eq!(t.get("the"), Some(&[0.1, 0.2][..]));
    }

    #[test]
    fn wrong_component_count_names_line() {
        let f = file("a 1 2\nthe 0.1\n");
        match load_embedding_table(f.path(), 2, None).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn empty_file_is_empty_table() {
        let f = file("");
        let t = load_embedding_table(f.path(), 50, None).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.dimension(), 50);
    }

    #[test]
    fn duplicate_last_wins_and_filter() {
        let f = file("a 1 1\nb 2 2\na 3 3\n");
        let t = load_embedding_table(f.path(), 2, None).unwrap();
        assert_eq!(t.get("a"), Some(&[3.0, 3.0][..]));
        let keep: HashSet<String> = ["b".to_string()].into();
        let t = load_embedding_table(f.path(), 2, Some(&keep)).unwrap();
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn mean_pooling() {
        let t = table();
        assert_eq!(extract_mean_embedding(&tokenize("a b"), &t).values, vec![2.0, 4.0]);
        assert_eq!(
            extract_mean_embedding(&tokenize("a b zzz"), &t).values,
            vec![2.0, 4.0]
        );
        assert_eq!(extract_mean_embedding(&tokenize("zzz"), &t).values, vec![0.0, 0.0]);
        assert_eq!(extract_mean_embedding(&tokenize(""), &t).values, vec![0.0, 0.0]);
    }

    #[test]
    fn permutation_invariant() {
        let t = table();
        let x = extract_mean_embedding(&tokenize("a b b a b"), &t);
        let y = extract_mean_embedding(&tokenize("b b b a a"), &t);
        for (p, q) in x.values.iter().zip(&y.values) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}
