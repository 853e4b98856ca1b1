//! Confusion matrices, F-measures, the majority baseline and the
//! cross-validation loop.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classifiers::{train, ClassifierSpec, TrainedModel};
use crate::corpus::{FoldPlan, Label};
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, PreparedCorpus};

pub const RESULTS_HEADER: &str = "feature_config,classifier,fold,macro_f,micro_f,weighted_f,seconds";

/// Rows are true labels, columns predicted labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<Label>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(labels: &[Label]) -> Self {
        let n = labels.len();
        ConfusionMatrix {
            labels: labels.to_vec(),
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// True instances per class.
    pub fn support(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn accuracy(&self) -> f64 {
        let diag: u64 = (0..self.counts.len()).map(|i| self.counts[i][i]).sum();
        diag as f64 / self.total() as f64
    }
}

/// Tallies predictions; `y_true` and `y_pred` index into `labels`.
pub fn confusion(y_true: &[usize], y_pred: &[usize], labels: &[Label]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::invalid(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut cm = ConfusionMatrix::zeros(labels);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= labels.len() || p >= labels.len() {
            return Err(Error::invalid(format!(
                "label index {} outside label set of size {}",
                t.max(p),
                labels.len()
            )));
        }
        cm.counts[t][p] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalScores {
    pub per_class: Vec<ClassScores>,
    pub macro_f: f64,
    pub micro_f: f64,
    /// Support-weighted mean of per-class F.
    pub weighted_f: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Per-class and averaged F-measures. Undefined precision, recall or F is 0.
pub fn scores(cm: &ConfusionMatrix) -> Result<EvalScores> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::invalid("cannot score an empty confusion matrix"));
    }
    let n = cm.counts.len();
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    let per_class: Vec<ClassScores> = (0..n)
        .map(|c| {
            let tp = cm.counts[c][c];
            let support: u64 = cm.counts[c].iter().sum();
            let predicted: u64 = (0..n).map(|r| cm.counts[r][c]).sum();
            let (fp, fneg) = (predicted - tp, support - tp);
            tp_all += tp;
            fp_all += fp;
            fn_all += fneg;
            let precision = ratio(tp, tp + fp);
            let recall = ratio(tp, tp + fneg);
            ClassScores {
                precision,
                recall,
                f: f1(precision, recall),
                support,
            }
        })
        .collect();
    let macro_f = per_class.iter().map(|c| c.f).sum::<f64>() / n as f64;
    let micro_f = f1(ratio(tp_all, tp_all + fp_all), ratio(tp_all, tp_all + fn_all));
    let weighted_f = per_class
        .iter()
        .map(|c| c.f * c.support as f64)
        .sum::<f64>()
        / total as f64;
    Ok(EvalScores {
        per_class,
        macro_f,
        micro_f,
        weighted_f,
    })
}

/// Scores of the constant classifier that predicts the most frequent label
/// (the lowest index on ties). `y` indexes into `labels`.
pub fn majority_baseline(y: &[usize], labels: &[Label]) -> Result<EvalScores> {
    let mut counts = vec![0u64; labels.len()];
    for &c in y {
        if c >= labels.len() {
            return Err(Error::invalid(format!("label index {c} outside label set")));
        }
        counts[c] += 1;
    }
    majority_baseline_counts(&counts, labels)
}

/// [`majority_baseline`] from per-class instance counts.
pub fn majority_baseline_counts(counts: &[u64], labels: &[Label]) -> Result<EvalScores> {
    if counts.len() != labels.len() {
        return Err(Error::invalid("one count per label required"));
    }
    let majority = crate::classifiers::argmax(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>());
    let mut cm = ConfusionMatrix::zeros(labels);
    for (c, &n) in counts.iter().enumerate() {
        cm.counts[c][majority] = n;
    }
    scores(&cm)
}

/// Scores of one (feature config, classifier) cell on one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub feature_config: String,
    pub classifier: String,
    pub fold: usize,
    pub scores: EvalScores,
    pub seconds: f64,
}

/// Seed for fold-level fitting, distinct per fold.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs every fold: features and model are fitted on the training indices
/// only and scored on the held-out fold.
pub fn cross_validate(
    corpus: &PreparedCorpus,
    folds: &FoldPlan,
    features: &FeatureConfig,
    classifier: &ClassifierSpec,
) -> Result<Vec<RunRecord>> {
    Ok(cross_validate_models(corpus, folds, features, classifier)?
        .into_iter()
        .map(|(r, _)| r)
        .collect())
}

/// As [`cross_validate`], also returning each fold's trained model.
pub fn cross_validate_models(
    corpus: &PreparedCorpus,
    folds: &FoldPlan,
    features: &FeatureConfig,
    classifier: &ClassifierSpec,
) -> Result<Vec<(RunRecord, TrainedModel)>> {
    (0..folds.k)
        .map(|fold| {
            run_fold(corpus, folds, features, classifier, fold).map_err(|e| Error::Fold {
                fold,
                source: Box::new(e),
            })
        })
        .collect()
}

fn run_fold(
    corpus: &PreparedCorpus,
    folds: &FoldPlan,
    features: &FeatureConfig,
    classifier: &ClassifierSpec,
    fold: usize,
) -> Result<(RunRecord, TrainedModel)> {
    let start = Instant::now();
    let seed = fold_seed(classifier.seed, fold);
    let train_idx = folds.train_indices(fold);
    let test_idx = folds.test_indices(fold);

    let fitted = corpus.fit(&train_idx, &features.parts, seed)?;
    let x_train = corpus.matrix(&fitted, &features.parts, &train_idx)?;
    let y_train: Vec<usize> = train_idx.iter().map(|&i| corpus.labels[i]).collect();
    let spec = ClassifierSpec {
        params: classifier.params.clone(),
        seed,
    };
    let model = train(&x_train, &y_train, &corpus.label_set, &spec)?;

    let x_test = corpus.matrix(&fitted, &features.parts, test_idx)?;
    let y_pred: Vec<usize> = model
        .predict_batch(&x_test)?
        .into_iter()
        .map(|p| p.label_index)
        .collect();
    let y_true: Vec<usize> = test_idx.iter().map(|&i| corpus.labels[i]).collect();
    let scores = scores(&confusion(&y_true, &y_pred, &corpus.label_set)?)?;
    let record = RunRecord {
        feature_config: features.name.clone(),
        classifier: classifier.algorithm().tag().to_string(),
        fold,
        scores,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((record, model))
}

/// Mean scores of one grid cell across folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub feature_config: String,
    pub classifier: String,
    pub folds: usize,
    pub macro_f: f64,
    pub micro_f: f64,
    pub weighted_f: f64,
}

/// Per-cell means, in order of first appearance.
pub fn summarize(records: &[RunRecord]) -> Vec<CellSummary> {
    let mut out: Vec<CellSummary> = Vec::new();
    for r in records {
        let cell = match out
            .iter_mut()
            .find(|c| c.feature_config == r.feature_config && c.classifier == r.classifier)
        {
            Some(c) => c,
            None => {
                out.push(CellSummary {
                    feature_config: r.feature_config.clone(),
                    classifier: r.classifier.clone(),
                    folds: 0,
                    macro_f: 0.0,
                    micro_f: 0.0,
                    weighted_f: 0.0,
                });
                out.last_mut().expect("just pushed")
            }
        };
        cell.folds += 1;
        cell.macro_f += r.scores.macro_f;
        cell.micro_f += r.scores.micro_f;
        cell.weighted_f += r.scores.weighted_f;
    }
    for c in &mut out {
        let n = c.folds as f64;
        c.macro_f /= n;
        c.micro_f /= n;
        c.weighted_f /= n;
    }
    out
}

/// Writes the results CSV. The `seconds` column is left empty unless
/// `timings` is set, so that reruns produce identical bytes.
pub fn write_results_csv<W: Write>(out: W, records: &[RunRecord], timings: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER.split(','))?;
    for r in records {
        let seconds = if timings {
            format!("{:.3}", r.seconds)
        } else {
            String::new()
        };
        w.write_record([
            r.feature_config.clone(),
            r.classifier.clone(),
            r.fold.to_string(),
            r.scores.macro_f.to_string(),
            r.scores.micro_f.to_string(),
            r.scores.weighted_f.to_string(),
            seconds,
        ])?;
    }
    w.flush().map_err(|e| Error::io("results", e))?;
    Ok(())
}
