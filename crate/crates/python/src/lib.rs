//! Python bindings: preprocessing, n-gram graphs, classifiers, metrics,
//! significance distributions and the experiment runner.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hategraph_core::classifiers::{self, Algorithm, ClassifierSpec, Hyperparameters};
use hategraph_core::config::{self, Overrides, Task};
use hategraph_core::corpus::Label;
use hategraph_core::evaluation;
use hategraph_core::ngg::{self, NggParams};
use hategraph_core::preprocess::{self, StopwordSet};
use hategraph_core::runner;
use hategraph_core::significance;
use hategraph_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn labels_of(names: Vec<String>) -> Vec<Label> {
    names.into_iter().map(Label::new).collect()
}

/// Strips URLs, mentions, retweet markers and HTML entities.
#[pyfunction]
fn clean_tweet(text: &str) -> String {
    preprocess::clean_tweet(text)
}

/// Lowercased word tokens of a cleaned text.
#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    preprocess::tokenize(&preprocess::clean_tweet(text)).into_inner()
}

/// Full normalization with the bundled English stopwords: `(tokens, canonical)`.
#[pyfunction]
fn normalize(text: &str) -> (Vec<String>, String) {
    let n = preprocess::normalize(text, &StopwordSet::english());
    (n.tokens.into_inner(), n.canonical)
}

/// Character n-gram graph of a text.
#[pyclass(name = "NGramGraph", module = "hategraph", from_py_object)]
#[derive(Clone)]
struct PyNGramGraph {
    inner: ngg::NGramGraph,
}

#[pymethods]
impl PyNGramGraph {
    #[new]
    #[pyo3(signature = (text, n = 3, window = 3))]
    fn new(text: &str, n: usize, window: usize) -> PyResult<Self> {
        let params = NggParams { n, window };
        params.validate().map_err(to_py)?;
        Ok(PyNGramGraph {
            inner: ngg::build_graph(text, params),
        })
    }

    /// Graph from `(ngram, ngram, weight)` triples.
    #[staticmethod]
    fn from_edges(edges: Vec<(String, String, f64)>) -> PyResult<Self> {
        let inner = ngg::NGramGraph::from_edges(edges.iter().map(|(a, b, w)| (a.as_str(), b.as_str(), *w)))
            .map_err(to_py)?;
        Ok(PyNGramGraph { inner })
    }

    /// Mean-merge of several graphs.
    #[staticmethod]
    fn merge(graphs: Vec<PyRef<'_, PyNGramGraph>>) -> PyResult<Self> {
        let owned: Vec<ngg::NGramGraph> = graphs.iter().map(|g| g.inner.clone()).collect();
        Ok(PyNGramGraph {
            inner: ngg::merge_graphs(&owned).map_err(to_py)?,
        })
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn weight(&self, a: &str, b: &str) -> Option<f64> {
        self.inner.weight(a, b)
    }

    /// Sorted `(ngram, ngram, weight)` triples.
    fn edges(&self) -> Vec<(String, String, f64)> {
        let mut out: Vec<(String, String, f64)> = self
            .inner
            .edges()
            .map(|(k, w)| {
                let (a, b) = k.endpoints();
                (a.to_string(), b.to_string(), w)
            })
            .collect();
        out.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
        out
    }

    /// `(vs, ss, nvs)` against another graph.
    fn similarity(&self, other: &PyNGramGraph) -> (f64, f64, f64) {
        similarity(self, other)
    }

    fn __len__(&self) -> usize {
        self.inner.edge_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "NGramGraph(nodes={}, edges={})",
            self.inner.node_count(),
            self.inner.edge_count()
        )
    }
}

/// Value, size and normalized value similarity: `(vs, ss, nvs)`.
#[pyfunction]
fn similarity(a: &PyNGramGraph, b: &PyNGramGraph) -> (f64, f64, f64) {
    let s = ngg::similarity(&a.inner, &b.inner);
    (s.vs, s.ss, s.nvs)
}

/// A trained classifier.
#[pyclass(name = "Classifier", module = "hategraph")]
struct PyClassifier {
    inner: classifiers::TrainedModel,
}

#[pymethods]
impl PyClassifier {
    /// Trains on rows `x` with string labels `y`. `params` holds
    /// algorithm-specific hyperparameters; omitted ones take their defaults.
    #[staticmethod]
    #[pyo3(signature = (x, y, algorithm = "LR", seed = 0, params = None))]
    fn train(
        py: Python<'_>,
        x: Vec<Vec<f64>>,
        y: Vec<String>,
        algorithm: &str,
        seed: u64,
        params: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<Self> {
        let algorithm: Algorithm = algorithm.parse().map_err(to_py)?;
        let params_json: serde_json::Value = match params {
            Some(d) => {
                let text: String = py.import("json")?.call_method1("dumps", (d,))?.extract()?;
                serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))?
            }
            None => serde_json::json!({}),
        };
        let hyper: Hyperparameters = serde_json::from_value(serde_json::json!({
            "algorithm": algorithm.tag(),
            "params": params_json,
        }))
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let spec = ClassifierSpec { params: hyper, seed };

        let mut names = y.clone();
        names.sort();
        names.dedup();
        let idx: Vec<usize> = y
            .iter()
            .map(|l| names.binary_search(l).expect("label present"))
            .collect();
        let labels = labels_of(names);
        let inner = py
            .detach(|| classifiers::train(&x, &idx, &labels, &spec))
            .map_err(to_py)?;
        Ok(PyClassifier { inner })
    }

    #[getter]
    fn algorithm(&self) -> &'static str {
        self.inner.algorithm.tag()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels.iter().map(|l| l.to_string()).collect()
    }

    fn predict(&self, x: Vec<f64>) -> PyResult<String> {
        Ok(self.inner.predict(&x).map_err(to_py)?.label.to_string())
    }

    fn predict_batch(&self, py: Python<'_>, x: Vec<Vec<f64>>) -> PyResult<Vec<String>> {
        let preds = py.detach(|| self.inner.predict_batch(&x)).map_err(to_py)?;
        Ok(preds.into_iter().map(|p| p.label.to_string()).collect())
    }

    /// Per-class scores in the order of `labels`.
    fn class_scores(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.class_scores(&x).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(PyClassifier {
            inner: classifiers::TrainedModel::from_json(s).map_err(to_py)?,
        })
    }
}

fn scores_dict<'py>(py: Python<'py>, s: &evaluation::EvalScores) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("macro_f", s.macro_f)?;
    d.set_item("micro_f", s.micro_f)?;
    d.set_item("weighted_f", s.weighted_f)?;
    Ok(d)
}

/// Confusion matrix (rows true, columns predicted) over label indices.
#[pyfunction]
fn confusion(y_true: Vec<usize>, y_pred: Vec<usize>, n_labels: usize) -> PyResult<Vec<Vec<u64>>> {
    let labels: Vec<Label> = (0..n_labels).map(|i| Label::new(i.to_string())).collect();
    Ok(evaluation::confusion(&y_true, &y_pred, &labels).map_err(to_py)?.counts)
}

/// Macro, micro and support-weighted F1 of a confusion matrix.
#[pyfunction]
fn scores<'py>(py: Python<'py>, matrix: Vec<Vec<u64>>) -> PyResult<Bound<'py, PyDict>> {
    let labels: Vec<Label> = (0..matrix.len()).map(|i| Label::new(i.to_string())).collect();
    if matrix.iter().any(|r| r.len() != labels.len()) {
        return Err(PyValueError::new_err("confusion matrix must be square"));
    }
    let mut cm = evaluation::ConfusionMatrix::zeros(&labels);
    cm.counts = matrix;
    scores_dict(py, &evaluation::scores(&cm).map_err(to_py)?)
}

/// Scores of always predicting the most frequent class.
#[pyfunction]
fn majority_baseline<'py>(py: Python<'py>, counts: Vec<u64>) -> PyResult<Bound<'py, PyDict>> {
    let labels: Vec<Label> = (0..counts.len()).map(|i| Label::new(i.to_string())).collect();
    scores_dict(
        py,
        &evaluation::majority_baseline_counts(&counts, &labels).map_err(to_py)?,
    )
}

/// Upper-tail probability of the F distribution.
#[pyfunction]
fn f_upper_tail(f: f64, d1: f64, d2: f64) -> PyResult<f64> {
    significance::f_upper_tail(f, d1, d2).map_err(to_py)
}

/// CDF of the studentized range; `df = inf` gives the normal-range limit.
#[pyfunction]
fn studentized_range_cdf(q: f64, k: usize, df: f64) -> PyResult<f64> {
    significance::studentized_range_cdf(q, k, df).map_err(to_py)
}

#[pyfunction]
fn studentized_range_quantile(p: f64, k: usize, df: f64) -> PyResult<f64> {
    significance::studentized_range_quantile(p, k, df).map_err(to_py)
}

/// Validates a JSON experiment configuration; returns it resolved, as JSON.
#[pyfunction]
#[pyo3(signature = (path, out = None, seed = None, folds = None, task = None))]
fn validate_config(
    path: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    folds: Option<usize>,
    task: Option<&str>,
) -> PyResult<String> {
    let cfg = load_config(path, out, seed, folds, task)?;
    serde_json::to_string_pretty(&cfg).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn load_config(
    path: PathBuf,
    output: Option<PathBuf>,
    seed: Option<u64>,
    folds: Option<usize>,
    task: Option<&str>,
) -> PyResult<config::ExperimentConfig> {
    let task: Option<Task> = task.map(str::parse).transpose().map_err(to_py)?;
    let overrides = Overrides {
        output,
        seed,
        folds,
        task,
        timings: false,
    };
    config::validate_config(&path, &overrides).map_err(to_py)
}

/// Runs an experiment grid. Returns `{"output", "records", "failed"}` where
/// `records` is the number of fold results written.
#[pyfunction]
#[pyo3(signature = (path, out = None, seed = None, folds = None, task = None, jobs = 1))]
fn run_experiment<'py>(
    py: Python<'py>,
    path: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    folds: Option<usize>,
    task: Option<&str>,
    jobs: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = load_config(path, out, seed, folds, task)?;
    let summary = py
        .detach(|| runner::run_experiment(&cfg, jobs))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("output", summary.output.to_string_lossy().into_owned())?;
    d.set_item("records", summary.records.len())?;
    d.set_item("failed", summary.failed())?;
    Ok(d)
}

#[pymodule]
pub fn hategraph(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyNGramGraph>()?;
    m.add_class::<PyClassifier>()?;
    m.add_function(wrap_pyfunction!(clean_tweet, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(similarity, m)?)?;
    m.add_function(wrap_pyfunction!(confusion, m)?)?;
    m.add_function(wrap_pyfunction!(scores, m)?)?;
    m.add_function(wrap_pyfunction!(majority_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(f_upper_tail, m)?)?;
    m.add_function(wrap_pyfunction!(studentized_range_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(studentized_range_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
