//! Grid execution: loads data and resources once, cross-validates every
//! (feature config, classifier) cell and writes the run artifacts.

use std::collections::HashSet;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{DatasetFile, ExperimentConfig, Task, DEFAULT_EMBEDDING_DIM};
use crate::corpus::{
    combine_binary, load_hsol, load_rs, stratified_folds, ColumnMap, FoldPlan, LabeledCorpus,
    Provenance,
};
use crate::error::{Error, Result};
use crate::evaluation::{cross_validate_models, write_results_csv, RunRecord};
use crate::features::{Extractor, FeatureConfig, PreparedCorpus, Resources};
use crate::preprocess::{normalize, StopwordSet};
use crate::representations::{
    load_embedding_table, AuxScorer, Dictionary, Lexicon, LexiconScorer, PrecomputedScores,
};
use crate::significance::{
    anova_two_factor, render_report, tukey_from_anova, Factor, Response,
};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESULTS_FILE: &str = "results.csv";
pub const REPORT_FILE: &str = "significance.md";
pub const MODELS_DIR: &str = "models";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellState {
    Pending,
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellStatus {
    pub feature_config: String,
    pub classifier: String,
    pub status: CellState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputChecksum {
    pub role: String,
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub provenance: Provenance,
    pub documents: usize,
    pub skipped_rows: usize,
    pub class_counts: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub inputs: Vec<InputChecksum>,
    pub corpus: CorpusStats,
    pub cells: Vec<CellStatus>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output: PathBuf,
    pub records: Vec<RunRecord>,
    pub cells: Vec<CellStatus>,
}

impl RunSummary {
    pub fn failed(&self) -> usize {
        self.cells.iter().filter(|c| c.status == CellState::Failed).count()
    }

    pub fn succeeded(&self) -> bool {
        self.failed() == 0
    }
}

/// Runs the whole grid. Cell failures are recorded, not returned: check
/// [`RunSummary::succeeded`]. Errors are reserved for setup problems
/// (unreadable data, unusable output directory, ...).
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<RunSummary> {
    let out = cfg
        .output
        .clone()
        .ok_or_else(|| Error::invalid("no output directory (set `output` or pass --out)"))?;
    prepare_output_dir(&out)?;

    let corpus = load_corpus(cfg)?;
    log::info!(
        "{} corpus: {} documents, classes {:?}",
        cfg.task,
        corpus.len(),
        corpus.class_counts()
    );
    let resources = load_resources(cfg, &corpus)?;
    let inputs = checksum_inputs(cfg)?;

    let cells: Vec<(&FeatureConfig, &crate::config::NamedClassifier)> = cfg
        .feature_configs
        .iter()
        .flat_map(|f| cfg.classifiers.iter().map(move |c| (f, c)))
        .collect();
    let mut manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        inputs,
        corpus: CorpusStats {
            provenance: corpus.provenance,
            documents: corpus.len(),
            skipped_rows: corpus.skipped_rows,
            class_counts: corpus
                .label_set
                .iter()
                .map(|l| l.to_string())
                .zip(corpus.class_counts())
                .collect(),
        },
        cells: cells
            .iter()
            .map(|(f, c)| CellStatus {
                feature_config: f.name.clone(),
                classifier: c.name.clone(),
                status: CellState::Pending,
                error: None,
            })
            .collect(),
    };
    write_manifest(&out, &manifest)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let outcome: Result<Vec<Result<Vec<RunRecord>>>> = pool.install(|| {
        let prepared = PreparedCorpus::new(
            &corpus,
            &resources,
            cfg.feature_settings.clone(),
            &cfg.extractors(),
        )?;
        let folds = stratified_folds(&corpus, cfg.folds, cfg.seed)?;
        Ok(cells
            .par_iter()
            .map(|(f, c)| run_cell(&prepared, &folds, f, c, cfg.save_models.then_some(&out)))
            .collect())
    });
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            // Setup shared by every cell failed: mark them all.
            for cell in &mut manifest.cells {
                cell.status = CellState::Failed;
                cell.error = Some(e.to_string());
            }
            write_manifest(&out, &manifest)?;
            return Err(e);
        }
    };

    let mut records = Vec::new();
    for (status, result) in manifest.cells.iter_mut().zip(outcome) {
        match result {
            Ok(r) => {
                status.status = CellState::Ok;
                records.extend(r);
            }
            Err(e) => {
                log::error!("cell {} / {} failed: {e}", status.feature_config, status.classifier);
                status.status = CellState::Failed;
                status.error = Some(e.to_string());
            }
        }
    }

    let file = fs::File::create(out.join(RESULTS_FILE)).map_err(|e| Error::io(&out, e))?;
    write_results_csv(std::io::BufWriter::new(file), &records, cfg.timings)?;

    let all_ok = manifest.cells.iter().all(|c| c.status == CellState::Ok);
    let report = if all_ok {
        significance_report(&records, cfg.alpha)
    } else {
        "# Significance analysis\n\nSkipped: some grid cells failed, so the design is incomplete. \
         See manifest.json for details.\n"
            .to_string()
    };
    fs::write(out.join(REPORT_FILE), report).map_err(|e| Error::io(&out, e))?;

    write_manifest(&out, &manifest)?;
    Ok(RunSummary {
        output: out,
        records,
        cells: manifest.cells,
    })
}

fn run_cell(
    prepared: &PreparedCorpus,
    folds: &FoldPlan,
    features: &FeatureConfig,
    classifier: &crate::config::NamedClassifier,
    models_dir: Option<&PathBuf>,
) -> Result<Vec<RunRecord>> {
    log::info!("cell {} / {}", features.name, classifier.name);
    let results = cross_validate_models(prepared, folds, features, &classifier.spec)?;
    let mut records = Vec::with_capacity(results.len());
    for (mut record, model) in results {
        record.classifier = classifier.name.clone();
        if let Some(dir) = models_dir {
            let path = dir.join(MODELS_DIR).join(format!(
                "{}__{}__fold{}.json",
                file_safe(&features.name),
                file_safe(&classifier.name),
                record.fold
            ));
            fs::write(&path, model.to_json()?).map_err(|e| Error::io(&path, e))?;
        }
        records.push(record);
    }
    Ok(records)
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

/// ANOVA on macro and micro F plus Tukey HSD for every factor with two or
/// more levels. Statistical failures become notes in the report.
pub fn significance_report(records: &[RunRecord], alpha: f64) -> String {
    let mut anovas = Vec::new();
    let mut tukeys = Vec::new();
    let mut notes = Vec::new();
    for response in [Response::MacroF, Response::MicroF] {
        match anova_two_factor(records, response) {
            Ok(table) => {
                for factor in [Factor::Features, Factor::Classifiers] {
                    if table.means(factor).len() < 2 {
                        continue;
                    }
                    match tukey_from_anova(&table, factor, alpha) {
                        Ok(t) => tukeys.push((response, t)),
                        Err(e) => notes.push(format!("Tukey HSD on {response}: {e}")),
                    }
                }
                anovas.push((response, table));
            }
            Err(e) => notes.push(format!("ANOVA on {response}: {e}")),
        }
    }
    let mut report = render_report(&anovas, &tukeys);
    if !notes.is_empty() {
        report.push_str("\n## Notes\n\n");
        for n in notes {
            report.push_str(&format!("- {n}\n"));
        }
    }
    report
}

/// Creates the output directory, refusing one holding anything other than
/// artifacts of a previous run. Stale model dumps are removed.
fn prepare_output_dir(out: &Path) -> Result<()> {
    if out.exists() {
        let entries = fs::read_dir(out).map_err(|e| Error::io(out, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(out, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if ![MANIFEST_FILE, RESULTS_FILE, REPORT_FILE, MODELS_DIR].contains(&name.as_str()) {
                return Err(Error::invalid(format!(
                    "output directory {} contains unexpected entry {name:?}",
                    out.display()
                )));
            }
        }
        let models = out.join(MODELS_DIR);
        if models.is_dir() {
            for entry in fs::read_dir(&models).map_err(|e| Error::io(&models, e))? {
                let path = entry.map_err(|e| Error::io(&models, e))?.path();
                if path.extension().and_then(|e| e.to_str()) != Some("json") {
                    return Err(Error::invalid(format!(
                        "{} contains unexpected entry {}",
                        models.display(),
                        path.display()
                    )));
                }
                fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
            }
            fs::remove_dir(&models).map_err(|e| Error::io(&models, e))?;
        }
    }
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    Ok(())
}

fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<()> {
    if manifest.config.save_models {
        let models = out.join(MODELS_DIR);
        fs::create_dir_all(&models).map_err(|e| Error::io(&models, e))?;
    }
    let path = out.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(manifest)? + "\n").map_err(|e| Error::io(&path, e))
}

fn load_dataset(
    d: &DatasetFile,
    default_columns: ColumnMap,
    loader: fn(&Path, &ColumnMap, Option<u8>) -> Result<LabeledCorpus>,
) -> Result<LabeledCorpus> {
    let columns = d.columns.clone().unwrap_or(default_columns);
    loader(&d.path, &columns, d.delimiter.map(|c| c as u8))
}

/// Loads the corpus the task calls for.
pub fn load_corpus(cfg: &ExperimentConfig) -> Result<LabeledCorpus> {
    let hsol = || {
        cfg.datasets
            .hsol
            .as_ref()
            .map(|d| load_dataset(d, ColumnMap::hsol(), load_hsol))
            .transpose()
    };
    let rs = || {
        cfg.datasets
            .rs
            .as_ref()
            .map(|d| load_dataset(d, ColumnMap::rs(), load_rs))
            .transpose()
    };
    let missing = |name: &str| Error::invalid(format!("task {} needs the {name} dataset", cfg.task));
    match cfg.task {
        Task::MulticlassHsol => hsol()?.ok_or_else(|| missing("hsol")),
        Task::MulticlassRs => rs()?.ok_or_else(|| missing("rs")),
        Task::BinaryCombined => {
            let empty = |provenance| LabeledCorpus {
                documents: Vec::new(),
                label_set: Vec::new(),
                provenance,
                skipped_rows: 0,
            };
            let rs = rs()?.unwrap_or_else(|| empty(Provenance::Rs));
            let hsol = hsol()?.unwrap_or_else(|| empty(Provenance::Hsol));
            combine_binary(&rs, &hsol)
        }
    }
}

/// Loads configured resources, falling back to the bundled ones. Embedding
/// rows are kept only for words occurring in `corpus`.
pub fn load_resources(cfg: &ExperimentConfig, corpus: &LabeledCorpus) -> Result<Resources> {
    let r = &cfg.resources;
    let stopwords = match &r.stopwords {
        Some(p) => StopwordSet::load(p)?,
        None => StopwordSet::english(),
    };
    let lexicon = match &r.lexicon {
        Some(p) => Lexicon::load(p)?,
        None => Lexicon::bundled(),
    };
    let needed = cfg.extractors();
    let embeddings = match &r.embeddings {
        Some(p) if needed.contains(&Extractor::Glove) => {
            let vocab: HashSet<String> = corpus
                .documents
                .par_iter()
                .map(|d| normalize(&d.text, &stopwords).tokens.into_inner())
                .flatten_iter()
                .collect();
            let dim = r.embedding_dim.unwrap_or(DEFAULT_EMBEDDING_DIM);
            Some(load_embedding_table(p, dim, Some(&vocab))?)
        }
        _ => None,
    };
    let dictionary = match &r.dictionary {
        Some(p) if needed.contains(&Extractor::Spelling) => Some(Dictionary::load(p)?),
        _ => None,
    };
    let scorer: Box<dyn AuxScorer> = match (&r.precomputed_scores, &r.sentiment_lexicon) {
        (Some(p), _) => Box::new(PrecomputedScores::load(p)?),
        (None, Some(p)) => Box::new(LexiconScorer::load(p)?),
        (None, None) => Box::new(LexiconScorer::bundled()),
    };
    Ok(Resources {
        stopwords,
        lexicon,
        embeddings,
        dictionary,
        scorer,
    })
}

fn checksum_inputs(cfg: &ExperimentConfig) -> Result<Vec<InputChecksum>> {
    let d = &cfg.datasets;
    let r = &cfg.resources;
    let inputs = [
        ("datasets.hsol", d.hsol.as_ref().map(|x| &x.path)),
        ("datasets.rs", d.rs.as_ref().map(|x| &x.path)),
        ("resources.stopwords", r.stopwords.as_ref()),
        ("resources.lexicon", r.lexicon.as_ref()),
        ("resources.sentiment_lexicon", r.sentiment_lexicon.as_ref()),
        ("resources.dictionary", r.dictionary.as_ref()),
        ("resources.embeddings", r.embeddings.as_ref()),
        ("resources.precomputed_scores", r.precomputed_scores.as_ref()),
    ];
    inputs
        .into_iter()
        .filter_map(|(role, p)| p.map(|p| (role, p)))
        .map(|(role, path)| {
            let (bytes, sha256) = sha256_file(path)?;
            Ok(InputChecksum {
                role: role.to_string(),
                path: path.clone(),
                bytes,
                sha256,
            })
        })
        .collect()
}

fn sha256_file(path: &Path) -> Result<(u64, String)> {
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    Ok((total, hex::encode(hasher.finalize())))
}
