//! Experiment configuration: JSON parsing with strict key checking, flag
//! overrides, resource resolution and cross-reference validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::{Algorithm, ClassifierSpec, Hyperparameters};
use crate::corpus::ColumnMap;
use crate::error::{Error, Result};
use crate::features::{Extractor, FeatureConfig, FeatureSettings};

/// Environment variable naming a directory searched for data and resources.
pub const DATA_ENV: &str = "HATEGRAPH_DATA";

pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_EMBEDDING_DIM: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    /// HateSpeech vs Clean over RS and/or HSOL.
    #[serde(rename = "binary-combined")]
    BinaryCombined,
    #[serde(rename = "multiclass-rs")]
    MulticlassRs,
    #[serde(rename = "multiclass-hsol")]
    MulticlassHsol,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::BinaryCombined => "binary-combined",
            Task::MulticlassRs => "multiclass-rs",
            Task::MulticlassHsol => "multiclass-hsol",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Task::BinaryCombined, Task::MulticlassRs, Task::MulticlassHsol]
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown task {s:?} (expected binary-combined, multiclass-rs or multiclass-hsol)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<ColumnMap>,
    /// Single-byte delimiter; detected from the extension when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delimiter: Option<char>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Datasets {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hsol: Option<DatasetFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rs: Option<DatasetFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComboEntry {
    pub name: String,
    /// Extractor names; omitted for the built-in combos `best`, `all`, `vector`.
    #[serde(default)]
    pub parts: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierEntry {
    pub algorithm: Algorithm,
    /// Grid label; defaults to the algorithm tag.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub params: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourcePaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
    /// Keyword list defining the BoW dimensions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment_lexicon: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictionary: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_dim: Option<usize>,
    /// TSV `id<TAB>sentiment<TAB>syntax`, replacing the lexicon scorer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precomputed_scores: Option<PathBuf>,
}

/// The configuration file as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub task: Task,
    #[serde(default)]
    pub datasets: Datasets,
    /// Individual extractors, each evaluated on its own.
    #[serde(default)]
    pub features: Vec<String>,
    #[serde(default)]
    pub combos: Vec<ComboEntry>,
    pub classifiers: Vec<ClassifierEntry>,
    #[serde(default)]
    pub folds: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub feature_settings: Option<FeatureSettings>,
    #[serde(default)]
    pub resources: ResourcePaths,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub save_models: bool,
    /// Fill the `seconds` column of the results file.
    #[serde(default)]
    pub timings: bool,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub folds: Option<usize>,
    pub task: Option<Task>,
    pub timings: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedClassifier {
    pub name: String,
    pub spec: ClassifierSpec,
}

/// A validated, fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub task: Task,
    pub datasets: Datasets,
    /// Grid rows: individual features, then combos.
    pub feature_configs: Vec<FeatureConfig>,
    pub classifiers: Vec<NamedClassifier>,
    pub folds: usize,
    pub seed: u64,
    pub alpha: f64,
    pub feature_settings: FeatureSettings,
    pub resources: ResourcePaths,
    pub output: Option<PathBuf>,
    pub save_models: bool,
    pub timings: bool,
    /// Settings that were absent from the file and took their default.
    pub defaults_applied: Vec<String>,
}

impl ExperimentConfig {
    /// Every extractor used by some grid row.
    pub fn extractors(&self) -> Vec<Extractor> {
        let mut out: Vec<Extractor> = self
            .feature_configs
            .iter()
            .flat_map(|f| f.parts.iter().copied())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn grid_size(&self) -> usize {
        self.feature_configs.len() * self.classifiers.len()
    }
}

/// Parses a config file and validates it; see [`validate`].
pub fn validate_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = parse_config(&text)?;
    let base = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let data_dir = std::env::var_os(DATA_ENV).map(PathBuf::from);
    validate(file, overrides, &base, data_dir.as_deref())
}

/// Strict parse: unknown keys and type errors are reported with their JSON path.
pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "<root>".to_string() } else { path };
        Error::Config(vec![format!("{path}: {}", e.into_inner())])
    })
}

/// Resolves a relative path against the config directory, then the data directory.
fn resolve(p: &Path, base: &Path, data_dir: Option<&Path>) -> PathBuf {
    if p.is_absolute() {
        return p.to_path_buf();
    }
    let local = base.join(p);
    if local.exists() {
        return local;
    }
    match data_dir.map(|d| d.join(p)) {
        Some(d) if d.exists() => d,
        _ => local,
    }
}

/// First of `names` present in the data directory.
fn discover(data_dir: Option<&Path>, names: &[&str]) -> Option<PathBuf> {
    let dir = data_dir?;
    names.iter().map(|n| dir.join(n)).find(|p| p.is_file())
}

/// Applies overrides and defaults, resolves paths and checks every cross-reference.
/// All problems are collected, each prefixed by the JSON path it concerns.
pub fn validate(
    mut file: ConfigFile,
    overrides: &Overrides,
    base: &Path,
    data_dir: Option<&Path>,
) -> Result<ExperimentConfig> {
    let mut errors: Vec<String> = Vec::new();
    let mut defaults = Vec::new();

    if let Some(t) = overrides.task {
        file.task = t;
    }
    let folds = match overrides.folds.or(file.folds) {
        Some(k) => k,
        None => {
            defaults.push(format!("folds = {DEFAULT_FOLDS}"));
            DEFAULT_FOLDS
        }
    };
    if folds < 2 {
        errors.push(format!("folds: cross-validation needs at least 2 folds, got {folds}"));
    }
    let seed = match overrides.seed.or(file.seed) {
        Some(s) => s,
        None => {
            defaults.push(format!("seed = {DEFAULT_SEED}"));
            DEFAULT_SEED
        }
    };
    let alpha = file.alpha.unwrap_or_else(|| {
        defaults.push(format!("alpha = {DEFAULT_ALPHA}"));
        DEFAULT_ALPHA
    });
    if !(alpha > 0.0 && alpha < 1.0) {
        errors.push(format!("alpha: must be in (0, 1), got {alpha}"));
    }
    let feature_settings = file.feature_settings.clone().unwrap_or_else(|| {
        defaults.push("feature_settings = defaults".into());
        FeatureSettings::default()
    });
    if let Err(e) = feature_settings.validate() {
        errors.push(format!("feature_settings: {e}"));
    }

    // Datasets.
    let mut datasets = file.datasets.clone();
    for (key, slot, names) in [
        ("hsol", &mut datasets.hsol, &["labeled_data.csv", "hsol.csv"][..]),
        ("rs", &mut datasets.rs, &["rs.csv", "rs.tsv"][..]),
    ] {
        let needed = match file.task {
            Task::BinaryCombined => true,
            Task::MulticlassHsol => key == "hsol",
            Task::MulticlassRs => key == "rs",
        };
        if slot.is_none() && needed {
            if let Some(p) = discover(data_dir, names) {
                defaults.push(format!("datasets.{key}.path = {}", p.display()));
                *slot = Some(DatasetFile {
                    path: p,
                    columns: None,
                    delimiter: None,
                });
            }
        }
        if let Some(d) = slot {
            d.path = resolve(&d.path, base, data_dir);
            if !d.path.is_file() {
                errors.push(format!("datasets.{key}.path: {} does not exist", d.path.display()));
            }
            if let Some(c) = d.delimiter {
                if !c.is_ascii() {
                    errors.push(format!("datasets.{key}.delimiter: must be a single ASCII character"));
                }
            }
        }
    }
    match file.task {
        Task::BinaryCombined if datasets.hsol.is_none() && datasets.rs.is_none() => {
            errors.push("datasets: binary-combined needs at least one of hsol, rs".into())
        }
        Task::MulticlassHsol if datasets.hsol.is_none() => {
            errors.push("datasets.hsol: required by multiclass-hsol".into())
        }
        Task::MulticlassRs if datasets.rs.is_none() => {
            errors.push("datasets.rs: required by multiclass-rs".into())
        }
        _ => {}
    }

    // Features and combos.
    let mut feature_configs: Vec<FeatureConfig> = Vec::new();
    for (i, name) in file.features.iter().enumerate() {
        match name.parse::<Extractor>() {
            Ok(e) if feature_configs.iter().any(|f| f.name == e.name()) => {
                errors.push(format!("features[{i}]: duplicate feature {name:?}"))
            }
            Ok(e) => feature_configs.push(FeatureConfig::single(e)),
            Err(e) => errors.push(format!("features[{i}]: {e}")),
        }
    }
    for (i, combo) in file.combos.iter().enumerate() {
        if combo.name.is_empty() || combo.name.contains(',') {
            errors.push(format!("combos[{i}].name: must be non-empty and contain no commas"));
        }
        if feature_configs.iter().any(|f| f.name == combo.name) {
            errors.push(format!("combos[{i}].name: {:?} is already used", combo.name));
        }
        let parts = match &combo.parts {
            None => match FeatureConfig::builtin(&combo.name) {
                Some(f) => f.parts,
                None => {
                    errors.push(format!(
                        "combos[{i}].parts: required unless the name is best, all or vector"
                    ));
                    continue;
                }
            },
            Some(names) => {
                let mut parts = Vec::new();
                for (j, n) in names.iter().enumerate() {
                    match n.parse::<Extractor>() {
                        Ok(e) if parts.contains(&e) => {
                            errors.push(format!("combos[{i}].parts[{j}]: duplicate extractor {n:?}"))
                        }
                        Ok(e) => parts.push(e),
                        Err(e) => errors.push(format!("combos[{i}].parts[{j}]: {e}")),
                    }
                }
                if names.is_empty() {
                    errors.push(format!("combos[{i}].parts: must not be empty"));
                }
                parts
            }
        };
        feature_configs.push(FeatureConfig {
            name: combo.name.clone(),
            parts,
        });
    }
    if file.features.is_empty() && file.combos.is_empty() {
        errors.push("features: at least one feature or combo is required".into());
    }

    // Classifiers.
    let mut classifiers: Vec<NamedClassifier> = Vec::new();
    let mut classifier_names: Vec<String> = Vec::new();
    for (i, c) in file.classifiers.iter().enumerate() {
        let name = c.name.clone().unwrap_or_else(|| c.algorithm.tag().to_string());
        if name.is_empty() || name.contains(',') {
            errors.push(format!("classifiers[{i}].name: must be non-empty and contain no commas"));
        }
        if classifier_names.contains(&name) {
            errors.push(format!(
                "classifiers[{i}].name: duplicate classifier {name:?}; give repeated algorithms distinct names"
            ));
        }
        classifier_names.push(name.clone());
        let tagged = serde_json::json!({
            "algorithm": c.algorithm.tag(),
            "params": c.params.clone().unwrap_or_else(|| serde_json::json!({})),
        });
        let params = match serde_path_to_error::deserialize::<_, Hyperparameters>(tagged) {
            Ok(p) => p,
            Err(e) => {
                let path = e.path().to_string();
                errors.push(format!("classifiers[{i}].{path}: {}", e.into_inner()));
                continue;
            }
        };
        if let Err(e) = params.validate() {
            errors.push(format!("classifiers[{i}].params: {e}"));
        }
        classifiers.push(NamedClassifier {
            name,
            spec: ClassifierSpec { params, seed },
        });
    }
    if file.classifiers.is_empty() {
        errors.push("classifiers: at least one classifier is required".into());
    }

    // Resources.
    let mut resources = file.resources.clone();
    let used: Vec<Extractor> = feature_configs
        .iter()
        .flat_map(|f| f.parts.iter().copied())
        .collect();
    let uses = |e: Extractor| used.contains(&e);
    let probes: [(&str, &mut Option<PathBuf>, &[&str], bool); 6] = [
        ("stopwords", &mut resources.stopwords, &["stopwords_en.txt", "stopwords.txt"], false),
        ("lexicon", &mut resources.lexicon, &["hate_lexicon.txt", "hatebase.txt"], false),
        ("sentiment_lexicon", &mut resources.sentiment_lexicon, &["sentiment_lexicon.tsv"], false),
        ("dictionary", &mut resources.dictionary, &["dictionary.txt", "words.txt"], uses(Extractor::Spelling)),
        (
            "embeddings",
            &mut resources.embeddings,
            &["glove.twitter.27B.50d.txt", "glove.6B.50d.txt", "embeddings.txt"],
            uses(Extractor::Glove),
        ),
        ("precomputed_scores", &mut resources.precomputed_scores, &[], false),
    ];
    for (key, slot, names, required) in probes {
        if slot.is_none() {
            if let Some(p) = discover(data_dir, names) {
                defaults.push(format!("resources.{key} = {}", p.display()));
                *slot = Some(p);
            }
        }
        match slot {
            Some(p) => {
                *p = resolve(p, base, data_dir);
                if !p.is_file() {
                    errors.push(format!("resources.{key}: {} does not exist", p.display()));
                }
            }
            None if required => errors.push(format!(
                "resources.{key}: required by the features in use (set it or place a default file in ${DATA_ENV})"
            )),
            None => {}
        }
    }
    if resources.embedding_dim == Some(0) {
        errors.push("resources.embedding_dim: must be >= 1".into());
    }
    if resources.embeddings.is_some() && resources.embedding_dim.is_none() {
        defaults.push(format!("resources.embedding_dim = {DEFAULT_EMBEDDING_DIM}"));
        resources.embedding_dim = Some(DEFAULT_EMBEDDING_DIM);
    }

    let output = overrides.output.clone().or(file.output.clone()).map(|p| {
        if p.is_absolute() {
            p
        } else {
            base.join(p)
        }
    });

    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    Ok(ExperimentConfig {
        task: file.task,
        datasets,
        feature_configs,
        classifiers,
        folds,
        seed,
        alpha,
        feature_settings,
        resources,
        output,
        save_models: file.save_models,
        timings: file.timings || overrides.timings,
        defaults_applied: defaults,
    })
}
