//! Character n-gram graphs.
//!
//! A text becomes a graph whose nodes are its character n-grams and whose
//! edge weights count how often two n-grams start within `window` positions
//! of each other. Per-class graphs (representative category graphs) are the
//! edge-wise mean of training instance graphs, and each instance is then
//! described by its normalized value similarity to every class graph.
//!
//! Co-occurrence is counted symmetrically: every n-gram looks `window`
//! positions ahead and behind, so one positional pair contributes 2 to the
//! weight of its (unordered) edge. Equal n-grams at different positions form
//! a self-loop edge.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::representations::FeatureVector;

/// Instances per partial mean when merging in parallel. Fixed so the
/// summation order, and therefore the result, does not depend on thread count.
const MERGE_CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NggParams {
    pub n: usize,
    pub window: usize,
}

impl Default for NggParams {
    fn default() -> Self {
        NggParams { n: 3, window: 3 }
    }
}

impl NggParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.window == 0 {
            return Err(Error::invalid(format!(
                "n-gram graph rank and window must be >= 1 (n={}, window={})",
                self.n, self.window
            )));
        }
        Ok(())
    }
}

/// Unordered n-gram pair, stored with the lexicographically smaller side first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeKey(Box<str>, Box<str>);

impl EdgeKey {
    pub fn new(a: &str, b: &str) -> Self {
        if a <= b {
            EdgeKey(a.into(), b.into())
        } else {
            EdgeKey(b.into(), a.into())
        }
    }

    pub fn endpoints(&self) -> (&str, &str) {
        (&self.0, &self.1)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NGramGraph {
    edges: HashMap<EdgeKey, f64>,
    nodes: BTreeSet<Box<str>>,
}

impl NGramGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph directly from weighted edges. Non-positive weights are rejected.
    pub fn from_edges<'a, I>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str, f64)>,
    {
        let mut g = NGramGraph::new();
        for (a, b, w) in edges {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::invalid(format!("edge ({a:?}, {b:?}) has weight {w}")));
            }
            g.add_weight(EdgeKey::new(a, b), w);
        }
        Ok(g)
    }

    fn add_weight(&mut self, key: EdgeKey, w: f64) {
        if !self.nodes.contains(&key.0) {
            self.nodes.insert(key.0.clone());
        }
        if !self.nodes.contains(&key.1) {
            self.nodes.insert(key.1.clone());
        }
        *self.edges.entry(key).or_insert(0.0) += w;
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty() && self.nodes.is_empty()
    }

    pub fn weight(&self, a: &str, b: &str) -> Option<f64> {
        self.edges.get(&EdgeKey::new(a, b)).copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&EdgeKey, f64)> {
        self.edges.iter().map(|(k, &w)| (k, w))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| &**n)
    }

    /// Edges as `ngram1<TAB>ngram2<TAB>weight` lines, sorted.
    pub fn to_tsv(&self) -> String {
        let mut keys: Vec<&EdgeKey> = self.edges.keys().collect();
        keys.sort();
        let mut out = String::new();
        for k in keys {
            let _ = writeln!(out, "{}\t{}\t{}", k.0, k.1, self.edges[k]);
        }
        out
    }

    pub fn from_tsv(content: &str) -> std::result::Result<Self, (usize, String)> {
        let mut g = NGramGraph::new();
        for (i, line) in content.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err((i + 1, format!("expected 3 fields, found {}", fields.len())));
            }
            let w: f64 = fields[2]
                .parse()
                .map_err(|_| (i + 1, format!("invalid weight {:?}", fields[2])))?;
            if !(w > 0.0 && w.is_finite()) {
                return Err((i + 1, format!("weight must be positive, got {w}")));
            }
            g.add_weight(EdgeKey::new(fields[0], fields[1]), w);
        }
        Ok(g)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        NGramGraph::from_tsv(&content).map_err(|(line, message)| Error::Parse {
            path: path.into(),
            line,
            message,
        })
    }
}

/// Builds the character n-gram graph of a canonical text.
pub fn build_graph(text: &str, params: NggParams) -> NGramGraph {
    let mut graph = NGramGraph::new();
    let bounds: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let chars = bounds.len() - 1;
    if params.n == 0 || chars < params.n {
        return graph;
    }
    let grams: Vec<&str> = (0..=chars - params.n)
        .map(|s| &text[bounds[s]..bounds[s + params.n]])
        .collect();
    for g in &grams {
        if !graph.nodes.contains(*g) {
            graph.nodes.insert((*g).into());
        }
    }
    for i in 0..grams.len() {
        let last = (i + params.window).min(grams.len() - 1);
        for j in i + 1..=last {
            // i sees j ahead and j sees i behind.
            graph.add_weight(EdgeKey::new(grams[i], grams[j]), 2.0);
        }
    }
    graph
}

/// Running edge-wise sum over a set of graphs; absent edges count as zero.
#[derive(Debug, Clone, Default)]
pub struct GraphAccumulator {
    sums: HashMap<EdgeKey, f64>,
    nodes: BTreeSet<Box<str>>,
    count: usize,
}

impl GraphAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, graph: &NGramGraph) {
        for (k, &w) in &graph.edges {
            if let Some(s) = self.sums.get_mut(k) {
                *s += w;
            } else {
                self.sums.insert(k.clone(), w);
            }
        }
        for n in &graph.nodes {
            if !self.nodes.contains(n) {
                self.nodes.insert(n.clone());
            }
        }
        self.count += 1;
    }

    /// Folds another partial sum into this one; counts add exactly.
    pub fn combine(&mut self, other: GraphAccumulator) {
        for (k, w) in other.sums {
            *self.sums.entry(k).or_insert(0.0) += w;
        }
        self.nodes.extend(other.nodes);
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// The edge-wise mean. `None` if nothing was added.
    pub fn mean(self) -> Option<NGramGraph> {
        if self.count == 0 {
            return None;
        }
        let n = self.count as f64;
        let edges = self.sums.into_iter().map(|(k, s)| (k, s / n)).collect();
        Some(NGramGraph {
            edges,
            nodes: self.nodes,
        })
    }
}

/// Edge-wise arithmetic mean of the given graphs.
pub fn merge_graphs(instances: &[NGramGraph]) -> Result<NGramGraph> {
    let mut acc = GraphAccumulator::new();
    for g in instances {
        acc.add(g);
    }
    acc.mean()
        .ok_or_else(|| Error::invalid("cannot merge an empty sequence of graphs"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentativeCategoryGraph {
    pub label: Label,
    pub graph: NGramGraph,
    pub merged_count: usize,
}

/// Class graphs in label-set order, plus the training positions they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct RcgSet {
    pub rcgs: Vec<RepresentativeCategoryGraph>,
    /// Positions (into the training slice) of the instances merged, ascending.
    pub subsample: Vec<usize>,
}

/// Builds one representative graph per class from a seeded, per-class
/// `rcg_fraction` subsample of the training texts.
///
/// `labels[i]` indexes into `label_set`. Each class keeps
/// `round(rcg_fraction * class_size)` instances.
pub fn build_rcgs<S: AsRef<str> + Sync>(
    texts: &[S],
    labels: &[usize],
    label_set: &[Label],
    params: NggParams,
    rcg_fraction: f64,
    seed: u64,
) -> Result<RcgSet> {
    params.validate()?;
    if texts.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} texts but {} labels",
            texts.len(),
            labels.len()
        )));
    }
    rcgs_with(labels, label_set, rcg_fraction, seed, |i| {
        build_graph(texts[i].as_ref(), params)
    })
}

/// As [`build_rcgs`], over already-built instance graphs.
pub fn build_rcgs_from_graphs(
    graphs: &[&NGramGraph],
    labels: &[usize],
    label_set: &[Label],
    rcg_fraction: f64,
    seed: u64,
) -> Result<RcgSet> {
    if graphs.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} graphs but {} labels",
            graphs.len(),
            labels.len()
        )));
    }
    rcgs_with(labels, label_set, rcg_fraction, seed, |i| graphs[i])
}

fn rcgs_with<G, F>(
    labels: &[usize],
    label_set: &[Label],
    rcg_fraction: f64,
    seed: u64,
    graph: F,
) -> Result<RcgSet>
where
    G: std::borrow::Borrow<NGramGraph>,
    F: Fn(usize) -> G + Sync,
{
    if !(rcg_fraction > 0.0 && rcg_fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "rcg_fraction must be in (0, 1], got {rcg_fraction}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rcgs = Vec::with_capacity(label_set.len());
    let mut subsample = Vec::new();
    for (class, label) in label_set.iter().enumerate() {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        let take = (rcg_fraction * members.len() as f64).round() as usize;
        members.truncate(take);
        members.sort_unstable();
        if members.is_empty() {
            return Err(Error::invalid(format!(
                "class {label} has no instances in the graph-building subsample"
            )));
        }

        let partials: Vec<GraphAccumulator> = members
            .par_chunks(MERGE_CHUNK)
            .map(|chunk| {
                let mut acc = GraphAccumulator::new();
                for &i in chunk {
                    acc.add(graph(i).borrow());
                }
                acc
            })
            .collect();
        let mut total = GraphAccumulator::new();
        for p in partials {
            total.combine(p);
        }
        let merged_count = total.count();
        rcgs.push(RepresentativeCategoryGraph {
            label: label.clone(),
            graph: total.mean().expect("non-empty class subsample"),
            merged_count,
        });
        subsample.extend(members);
    }
    subsample.sort_unstable();
    Ok(RcgSet { rcgs, subsample })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScores {
    /// Value similarity.
    pub vs: f64,
    /// Size similarity.
    pub ss: f64,
    /// Normalized value similarity, `vs / ss`.
    pub nvs: f64,
}

/// Size, value and normalized value similarity of two graphs (by edge count).
pub fn similarity(g1: &NGramGraph, g2: &NGramGraph) -> SimilarityScores {
    let (n1, n2) = (g1.edge_count(), g2.edge_count());
    match (n1, n2) {
        (0, 0) => {
            return SimilarityScores {
                vs: 0.0,
                ss: 1.0,
                nvs: 0.0,
            }
        }
        (0, _) | (_, 0) => {
            return SimilarityScores {
                vs: 0.0,
                ss: 0.0,
                nvs: 0.0,
            }
        }
        _ => {}
    }
    let (small, large) = if n1 <= n2 { (g1, g2) } else { (g2, g1) };
    // Summed in sorted order: hash iteration order varies between maps and
    // processes, and must not leak into the last bits of the result.
    let mut ratios: Vec<f64> = small
        .edges
        .iter()
        .filter_map(|(k, &w1)| large.edges.get(k).map(|&w2| w1.min(w2) / w1.max(w2)))
        .collect();
    ratios.sort_unstable_by(f64::total_cmp);
    let overlap: f64 = ratios.iter().sum();
    let max = n1.max(n2) as f64;
    let ss = n1.min(n2) as f64 / max;
    let vs = overlap / max;
    SimilarityScores {
        vs,
        ss,
        nvs: vs / ss,
    }
}

/// NVS of `instance` against each class graph, in the given order.
pub fn model_vector(instance: &NGramGraph, rcgs: &[RepresentativeCategoryGraph]) -> FeatureVector {
    FeatureVector::new(
        "ngg",
        rcgs.iter()
            .map(|r| similarity(instance, &r.graph).nvs)
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, window: usize) -> NggParams {
        NggParams { n, window }
    }

    /// Enumerates every ordered positional pair within the window.
    fn brute_graph(text: &str, n: usize, window: usize) -> Vec<(String, String, f64)> {
        let cs: Vec<char> = text.chars().collect();
        if cs.len() < n {
            return vec![];
        }
        let grams: Vec<String> = (0..=cs.len() - n).map(|i| cs[i..i + n].iter().collect()).collect();
        let mut map: std::collections::BTreeMap<(String, String), f64> = Default::default();
        for i in 0..grams.len() {
            for j in 0..grams.len() {
                let d = i.abs_diff(j);
                if d >= 1 && d <= window {
                    let (a, b) = if grams[i] <= grams[j] {
                        (grams[i].clone(), grams[j].clone())
                    } else {
                        (grams[j].clone(), grams[i].clone())
                    };
                    *map.entry((a, b)).or_default() += 1.0;
                }
            }
        }
        map.into_iter().map(|((a, b), w)| (a, b, w)).collect()
    }

    fn sorted_edges(g: &NGramGraph) -> Vec<(String, String, f64)> {
        let mut v: Vec<_> = g
            .edges()
            .map(|(k, w)| (k.0.to_string(), k.1.to_string(), w))
            .collect();
        v.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        v
    }

    #[test]
    fn aba_bigrams() {
        let g = build_graph("aba", p(2, 1));
        assert_eq!(g.nodes().collect::<Vec<_>>(), ["ab", "ba"]);
        assert_eq!(g.weight("ab", "ba"), Some(2.0));
        assert_eq!(g.weight("ba", "ab"), Some(2.0));
        assert_eq!(sorted_edges(&g), brute_graph("aba", 2, 1));
    }

    #[test]
    fn short_text_is_empty() {
        assert!(build_graph("a", p(2, 1)).is_empty());
        assert!(build_graph("", p(3, 3)).is_empty());
    }

    #[test]
    fn single_ngram_is_isolated_node() {
        let g = build_graph("ab", p(2, 3));
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.node_count(), 1);
    }

    #[test]
    fn character_run_self_loop() {
        let g = build_graph("aaaa", p(2, 1));
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.weight("aa", "aa"), Some(4.0));
        assert_eq!(sorted_edges(&g), brute_graph("aaaa", 2, 1));
    }

    #[test]
    fn matches_bruteforce_on_phrases() {
        for text in ["the cat sat on the mat", "ααβγ δ", "abcabcabc", "hate hate"] {
            for (n, w) in [(1, 1), (2, 2), (3, 3), (4, 5)] {
                assert_eq!(sorted_edges(&build_graph(text, p(n, w))), brute_graph(text, n, w));
            }
        }
    }

    #[test]
    fn merge_examples() {
        let g = NGramGraph::from_edges([("a", "b", 2.0), ("b", "c", 0.5)]).unwrap();
        let m = merge_graphs(&[g.clone(), g.clone(), g.clone()]).unwrap();
        assert_eq!(sorted_edges(&m), sorted_edges(&g));

        let e = NGramGraph::from_edges([("x", "y", 2.0)]).unwrap();
        let other = NGramGraph::from_edges([("p", "q", 1.0)]).unwrap();
        let m = merge_graphs(&[e, other]).unwrap();
        assert_eq!(m.weight("x", "y"), Some(1.0));
        assert_eq!(m.weight("p", "q"), Some(0.5));

        assert!(merge_graphs(&[]).is_err());
    }

    #[test]
    fn similarity_examples() {
        let g = build_graph("some text here", p(3, 3));
        let s = similarity(&g, &g);
        assert_eq!((s.vs, s.ss, s.nvs), (1.0, 1.0, 1.0));

        let a = NGramGraph::from_edges([("a", "b", 1.0)]).unwrap();
        let b = NGramGraph::from_edges([("c", "d", 1.0)]).unwrap();
        let s = similarity(&a, &b);
        assert_eq!((s.vs, s.nvs), (0.0, 0.0));

        let g1 = NGramGraph::from_edges([("e1", "e2", 1.0)]).unwrap();
        let g2 = NGramGraph::from_edges([("e1", "e2", 2.0), ("f1", "f2", 1.0)]).unwrap();
        let s = similarity(&g1, &g2);
        assert_eq!((s.vs, s.ss, s.nvs), (0.25, 0.5, 0.5));
    }

    #[test]
    fn similarity_with_empty() {
        let empty = NGramGraph::new();
        let s = similarity(&empty, &empty);
        assert_eq!((s.vs, s.ss, s.nvs), (0.0, 1.0, 0.0));
        let g = build_graph("abcd", p(2, 1));
        let s = similarity(&g, &empty);
        assert_eq!((s.vs, s.ss, s.nvs), (0.0, 0.0, 0.0));
        assert_eq!(similarity(&empty, &g), s);
    }

    fn labels2() -> Vec<Label> {
        vec![Label::new("A"), Label::new("B")]
    }

    #[test]
    fn rcg_single_instance_identity() {
        let texts = ["abcde", "vwxyz"];
        let set = build_rcgs(&texts, &[0, 1], &labels2(), p(2, 2), 1.0, 3).unwrap();
        assert_eq!(set.rcgs[0].graph, build_graph("abcde", p(2, 2)));
        assert_eq!(set.rcgs[1].merged_count, 1);
        assert_eq!(set.subsample, vec![0, 1]);
    }

    #[test]
    fn rcg_ninety_percent() {
        let texts: Vec<String> = (0..20).map(|i| format!("text number {i}")).collect();
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let set = build_rcgs(&texts, &labels, &labels2(), p(3, 3), 0.9, 11).unwrap();
        assert_eq!(set.rcgs[0].merged_count, 9);
        assert_eq!(set.rcgs[1].merged_count, 9);
        assert_eq!(set.subsample.len(), 18);

        let again = build_rcgs(&texts, &labels, &labels2(), p(3, 3), 0.9, 11).unwrap();
        assert_eq!(set.subsample, again.subsample);
        assert_eq!(set.rcgs, again.rcgs);
    }

    #[test]
    fn rcg_errors() {
        let texts = ["abc", "def"];
        assert!(build_rcgs(&texts, &[0, 0], &labels2(), p(2, 1), 1.0, 0).is_err());
        assert!(build_rcgs(&texts, &[0, 1], &labels2(), p(2, 1), 0.0, 0).is_err());
        assert!(build_rcgs(&texts, &[0, 1], &labels2(), p(0, 1), 1.0, 0).is_err());
    }

    #[test]
    fn rcg_excludes_held_out_instances() {
        // Each class has one instance with a unique marker string; whichever
        // instances fall outside the subsample must leave no trace in the RCG.
        let texts: Vec<String> = (0..10)
            .map(|i| format!("{}{}", if i % 2 == 0 { "aaaa" } else { "bbbb" }, ["q", "r", "s", "t", "u", "v", "w", "x", "y", "z"][i]))
            .collect();
        let labels: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let set = build_rcgs(&texts, &labels, &labels2(), p(1, 1), 0.6, 5).unwrap();
        assert_eq!(set.subsample.len(), 6);
        for i in 0..10 {
            let marker = &texts[i][4..];
            let present = set.rcgs.iter().any(|r| r.graph.nodes().any(|n| n == marker));
            assert_eq!(present, set.subsample.contains(&i), "instance {i}");
        }
    }

    #[test]
    fn model_vector_shapes() {
        let texts = ["aaaaaa", "zzzzzz"];
        let set = build_rcgs(&texts, &[0, 1], &labels2(), p(2, 1), 1.0, 0).unwrap();
        let v = model_vector(&build_graph("aaaaaa", p(2, 1)), &set.rcgs);
        assert_eq!(v.values, vec![1.0, 0.0]);
        let three = vec![Label::new("A"), Label::new("B"), Label::new("C")];
        let set = build_rcgs(&["ab", "bc", "cd"].map(|s| s.repeat(3)), &[0, 1, 2], &three, p(2, 1), 1.0, 0)
            .unwrap();
        assert_eq!(model_vector(&build_graph("abab", p(2, 1)), &set.rcgs).len(), 3);
    }

    #[test]
    fn tsv_round_trip_sorted() {
        let g = build_graph("hello world", p(3, 2));
        let tsv = g.to_tsv();
        let lines: Vec<&str> = tsv.lines().collect();
        let mut sorted = lines.clone();
        sorted.sort();
        assert_eq!(lines, sorted);
        let back = NGramGraph::from_tsv(&tsv).unwrap();
        assert_eq!(sorted_edges(&back), sorted_edges(&g));
        assert!(NGramGraph::from_tsv("a\tb\t-1\n").is_err());
        assert!(NGramGraph::from_tsv("a\tb\n").is_err());
    }
}
