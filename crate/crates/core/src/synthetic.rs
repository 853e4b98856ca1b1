//! Generated corpora for tests and smoke runs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Document, Label, LabeledCorpus, Provenance};

const ALPHABETS: [&str; 2] = ["abcde", "vwxyz"];

/// Binary corpus whose classes are written in disjoint letter sets:
/// HateSpeech documents use `a..=e`, Clean documents `v..=z`. The
/// alphabets are small so every instance shares n-grams with its own class.
pub fn disjoint_alphabet_corpus(per_class: [usize; 2], seed: u64) -> LabeledCorpus {
    let label_set = vec![Label::hate_speech(), Label::clean()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut documents = Vec::new();
    for (class, &n) in per_class.iter().enumerate() {
        let letters: Vec<char> = ALPHABETS[class].chars().collect();
        for _ in 0..n {
            let words: Vec<String> = (0..rng.random_range(3..9))
                .map(|_| {
                    (0..rng.random_range(4..9))
                        .map(|_| letters[rng.random_range(0..letters.len())])
                        .collect()
                })
                .collect();
            documents.push(Document {
                id: format!("syn{}", documents.len()),
                text: words.join(" "),
                label: label_set[class].clone(),
            });
        }
    }
    documents.shuffle(&mut rng);
    LabeledCorpus {
        documents,
        label_set,
        provenance: Provenance::Combined,
        skipped_rows: 0,
    }
}

/// Copy of `corpus` with labels randomly permuted across documents
/// (class counts preserved).
pub fn shuffle_labels(corpus: &LabeledCorpus, seed: u64) -> LabeledCorpus {
    let mut labels: Vec<Label> = corpus.documents.iter().map(|d| d.label.clone()).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = corpus.clone();
    for (d, l) in out.documents.iter_mut().zip(labels) {
        d.label = l;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabets_are_disjoint() {
        let c = disjoint_alphabet_corpus([20, 30], 1);
        assert_eq!(c.class_counts(), vec![20, 30]);
        for d in &c.documents {
            let alpha = if d.label == Label::hate_speech() { ALPHABETS[0] } else { ALPHABETS[1] };
            assert!(d.text.chars().all(|ch| ch == ' ' || alpha.contains(ch)));
        }
    }

    #[test]
    fn shuffling_preserves_counts() {
        let c = disjoint_alphabet_corpus([20, 30], 1);
        let s = shuffle_labels(&c, 2);
        assert_eq!(s.class_counts(), c.class_counts());
        assert_ne!(s, c);
    }
}
