//! Naive Bayes, logistic regression, k-nearest neighbors, random forest and
//! multi-layer perceptron classifiers over dense feature vectors.
//!
//! All algorithms share one entry point, [`train`], and produce a
//! [`TrainedModel`] that predicts a label plus a confidence in `[0, 1]`.
//! LR, KNN and the MLP z-score their inputs with statistics fitted on the
//! training set; NB and RF consume raw features.

mod forest;
mod knn;
mod logistic;
mod mlp;
mod naive_bayes;
mod standardize;

pub use forest::{RandomForest, RfParams};
pub use knn::{Knn, KnnParams};
pub use logistic::{LogisticRegression, LrParams};
pub use mlp::{gradient_check, Mlp, MlpParams};
pub use naive_bayes::{GaussianNb, NbParams};
pub use standardize::Standardizer;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

/// Version tag written into serialized model dumps.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "NB")]
    NaiveBayes,
    #[serde(rename = "LR")]
    LogisticRegression,
    #[serde(rename = "KNN")]
    Knn,
    #[serde(rename = "RF")]
    RandomForest,
    #[serde(rename = "MLP")]
    Mlp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::NaiveBayes,
        Algorithm::LogisticRegression,
        Algorithm::Knn,
        Algorithm::RandomForest,
        Algorithm::Mlp,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::NaiveBayes => "NB",
            Algorithm::LogisticRegression => "LR",
            Algorithm::Knn => "KNN",
            Algorithm::RandomForest => "RF",
            Algorithm::Mlp => "MLP",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NB" => Ok(Algorithm::NaiveBayes),
            "LR" => Ok(Algorithm::LogisticRegression),
            "KNN" => Ok(Algorithm::Knn),
            "RF" => Ok(Algorithm::RandomForest),
            "MLP" | "NN" => Ok(Algorithm::Mlp),
            _ => Err(Error::invalid(format!(
                "unknown algorithm {s:?} (expected NB, LR, KNN, RF or MLP)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", content = "params")]
pub enum Hyperparameters {
    #[serde(rename = "NB")]
    NaiveBayes(NbParams),
    #[serde(rename = "LR")]
    LogisticRegression(LrParams),
    #[serde(rename = "KNN")]
    Knn(KnnParams),
    #[serde(rename = "RF")]
    RandomForest(RfParams),
    #[serde(rename = "MLP")]
    Mlp(MlpParams),
}

impl Hyperparameters {
    pub fn defaults(algorithm: Algorithm) -> Self {
        match algorithm {
            Algorithm::NaiveBayes => Hyperparameters::NaiveBayes(NbParams::default()),
            Algorithm::LogisticRegression => Hyperparameters::LogisticRegression(LrParams::default()),
            Algorithm::Knn => Hyperparameters::Knn(KnnParams::default()),
            Algorithm::RandomForest => Hyperparameters::RandomForest(RfParams::default()),
            Algorithm::Mlp => Hyperparameters::Mlp(MlpParams::default()),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            Hyperparameters::NaiveBayes(_) => Algorithm::NaiveBayes,
            Hyperparameters::LogisticRegression(_) => Algorithm::LogisticRegression,
            Hyperparameters::Knn(_) => Algorithm::Knn,
            Hyperparameters::RandomForest(_) => Algorithm::RandomForest,
            Hyperparameters::Mlp(_) => Algorithm::Mlp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(format!("{}: {what}", self.algorithm())))
            }
        };
        match self {
            Hyperparameters::NaiveBayes(p) => {
                check(p.var_smoothing >= 0.0 && p.var_smoothing.is_finite(), "var_smoothing must be >= 0")
            }
            Hyperparameters::LogisticRegression(p) => {
                check(p.l2 >= 0.0 && p.l2.is_finite(), "l2 must be >= 0")?;
                check(p.tol > 0.0, "tol must be > 0")?;
                check(p.max_iter >= 1, "max_iter must be >= 1")
            }
            Hyperparameters::Knn(p) => check(p.k >= 1, "k must be >= 1"),
            Hyperparameters::RandomForest(p) => {
                check(p.trees >= 1, "trees must be >= 1")?;
                check(p.max_features.is_none_or(|m| m >= 1), "max_features must be >= 1")?;
                check(p.max_depth.is_none_or(|d| d >= 1), "max_depth must be >= 1")?;
                check(p.min_samples_split >= 2, "min_samples_split must be >= 2")
            }
            Hyperparameters::Mlp(p) => {
                check(!p.hidden.is_empty() && p.hidden.iter().all(|&h| h >= 1), "hidden sizes must be >= 1")?;
                check((0.0..1.0).contains(&p.dropout), "dropout must be in [0, 1)")?;
                check(p.learning_rate > 0.0 && p.learning_rate.is_finite(), "learning_rate must be > 0")?;
                check(p.batch_size >= 1, "batch_size must be >= 1")?;
                check(p.epochs >= 1, "epochs must be >= 1")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    #[serde(flatten)]
    pub params: Hyperparameters,
    pub seed: u64,
}

impl ClassifierSpec {
    /// Default hyperparameters for `algorithm`.
    pub fn new(algorithm: Algorithm, seed: u64) -> Self {
        ClassifierSpec {
            params: Hyperparameters::defaults(algorithm),
            seed,
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        self.params.algorithm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: Label,
    pub label_index: usize,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelParams {
    NaiveBayes(GaussianNb),
    LogisticRegression(LogisticRegression),
    Knn(Knn),
    RandomForest(RandomForest),
    Mlp(Mlp),
    /// Training data held a single class; always predicts it.
    Constant { class: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub algorithm: Algorithm,
    pub labels: Vec<Label>,
    pub dimension: usize,
    pub standardizer: Option<Standardizer>,
    pub params: ModelParams,
}

#[derive(Serialize, Deserialize)]
struct ModelDump {
    format_version: u32,
    model: TrainedModel,
}

/// Index of the largest score; the earliest wins ties.
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn validate_training(x: &[Vec<f64>], y: &[usize], labels: &[Label]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "{} feature vectors but {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::invalid("training needs at least 2 instances"));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= labels.len()) {
        return Err(Error::invalid(format!("label index {bad} outside label set")));
    }
    let dim = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("training instance {i}")));
        }
    }
    Ok(dim)
}

/// Fits a model. `y[i]` indexes into `labels`, which fixes class order.
pub fn train(
    x: &[Vec<f64>],
    y: &[usize],
    labels: &[Label],
    spec: &ClassifierSpec,
) -> Result<TrainedModel> {
    spec.params.validate()?;
    let dimension = validate_training(x, y, labels)?;
    let n_classes = labels.len();

    if y.iter().all(|&c| c == y[0]) {
        log::warn!(
            "training labels contain a single class ({}); fitting a constant model",
            labels[y[0]]
        );
        return Ok(TrainedModel {
            algorithm: spec.algorithm(),
            labels: labels.to_vec(),
            dimension,
            standardizer: None,
            params: ModelParams::Constant { class: y[0] },
        });
    }

    let standardizer = match spec.algorithm() {
        Algorithm::LogisticRegression | Algorithm::Knn | Algorithm::Mlp => {
            Some(Standardizer::fit(x))
        }
        Algorithm::NaiveBayes | Algorithm::RandomForest => None,
    };
    let scaled;
    let inputs: &[Vec<f64>] = match &standardizer {
        Some(s) => {
            scaled = x.iter().map(|r| s.transform(r)).collect::<Vec<_>>();
            &scaled
        }
        None => x,
    };

    let params = match &spec.params {
        Hyperparameters::NaiveBayes(p) => {
            ModelParams::NaiveBayes(GaussianNb::fit(inputs, y, n_classes, p))
        }
        Hyperparameters::LogisticRegression(p) => {
            ModelParams::LogisticRegression(LogisticRegression::fit(inputs, y, n_classes, p))
        }
        Hyperparameters::Knn(p) => ModelParams::Knn(Knn::fit(inputs, y, n_classes, p)),
        Hyperparameters::RandomForest(p) => {
            ModelParams::RandomForest(RandomForest::fit(inputs, y, n_classes, p, spec.seed))
        }
        Hyperparameters::Mlp(p) => ModelParams::Mlp(Mlp::fit(inputs, y, n_classes, p, spec.seed)),
    };

    Ok(TrainedModel {
        algorithm: spec.algorithm(),
        labels: labels.to_vec(),
        dimension,
        standardizer,
        params,
    })
}

/// Fits a model from labelled vectors. The label set is the sorted set of
/// distinct labels in `y`.
pub fn train_labeled(
    x: &[crate::representations::FeatureVector],
    y: &[Label],
    spec: &ClassifierSpec,
) -> Result<TrainedModel> {
    let mut labels: Vec<Label> = y.to_vec();
    labels.sort();
    labels.dedup();
    let idx: Vec<usize> = y
        .iter()
        .map(|l| labels.binary_search(l).expect("label present"))
        .collect();
    let rows: Vec<Vec<f64>> = x.iter().map(|v| v.values.clone()).collect();
    train(&rows, &idx, &labels, spec)
}

impl TrainedModel {
    /// Per-class scores summing to 1 (vote fractions for KNN and RF).
    pub fn class_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: x.len(),
            });
        }
        let scaled;
        let input = match &self.standardizer {
            Some(s) => {
                scaled = s.transform(x);
                &scaled[..]
            }
            None => x,
        };
        Ok(match &self.params {
            ModelParams::NaiveBayes(m) => m.posterior(input),
            ModelParams::LogisticRegression(m) => m.probabilities(input),
            ModelParams::Knn(m) => m.votes(input),
            ModelParams::RandomForest(m) => m.votes(input),
            ModelParams::Mlp(m) => m.probabilities(input),
            ModelParams::Constant { class } => {
                let mut p = vec![0.0; self.labels.len()];
                p[*class] = 1.0;
                p
            }
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let scores = self.class_scores(x)?;
        let best = argmax(&scores);
        Ok(Prediction {
            label: self.labels[best].clone(),
            label_index: best,
            confidence: scores[best].clamp(0.0, 1.0),
        })
    }

    /// Predicts every row, in parallel, preserving order.
    pub fn predict_batch(&self, x: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        x.par_iter().map(|r| self.predict(r)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelDump {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let dump: ModelDump = serde_json::from_str(s)?;
        if dump.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model format version {}",
                dump.format_version
            )));
        }
        Ok(dump.model)
    }
}
