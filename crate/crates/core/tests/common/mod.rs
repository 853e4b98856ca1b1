//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use hategraph_core::corpus::Label;
use hategraph_core::synthetic::disjoint_alphabet_corpus;

/// Writes a disjoint-alphabet corpus in the HSOL `labeled_data.csv` layout
/// (HateSpeech → class 0, Clean → class 2).
pub fn write_hsol_csv(dir: &Path, per_class: [usize; 2], seed: u64) -> PathBuf {
    let corpus = disjoint_alphabet_corpus(per_class, seed);
    let mut out = String::from(",count,hate_speech,offensive_language,neither,class,tweet\n");
    for (i, d) in corpus.documents.iter().enumerate() {
        let class = if d.label == Label::hate_speech() { 0 } else { 2 };
        out.push_str(&format!("{i},3,0,0,3,{class},{}\n", d.text));
    }
    let path = dir.join("labeled_data.csv");
    std::fs::write(&path, out).unwrap();
    path
}

pub fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

/// Data rows of a results CSV (header excluded).
pub fn result_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

pub fn dir_entries(path: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(path)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}
