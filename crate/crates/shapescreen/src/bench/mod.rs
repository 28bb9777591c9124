//! Experiment orchestration: per-query overlays and featurization,
//! baseline combo ranking, stratified 5-fold screener training, and
//! deterministic JSON report assembly.

pub mod synth;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorff::{color_atoms, ColorError};
use crate::eval::{
    self, AggregateSummary, EvalError, ExperimentRecord, MetricRecord,
};
use crate::features::{FeatureError, Layout, Metric, ScoreSet, SimilarityConfig};
use crate::model::{
    export_weights, fit_model, LrModel, ModelError, ScalerKind, TrainConfig, TrainingSet,
    WeightExport,
};
use crate::mol::{load_manifest, ManifestError, MolError, Molecule, SdfError};
use crate::overlay::{best_overlay, OverlayConfig, OverlayError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("experiment needs at least one feature layout")]
    NoLayouts,
    #[error("layout {0} listed more than once")]
    DuplicateLayout(String),
    #[error("outer fold count must be at least 2, got {0}")]
    BadFoldCount(usize),
    #[error("no datasets to run")]
    NoDatasets,
    #[error("every experiment failed; see the failure list")]
    ZeroSuccessfulExperiments,
    #[error("synthetic spec needs nonzero classes, got {actives} actives / {decoys} decoys")]
    DegenerateSyntheticSpec { actives: usize, decoys: usize },
    #[error("synthetic spec needs at least one heavy atom per molecule")]
    EmptySyntheticBlob,
    #[error("dataset {dataset} query {query}: {class} left after exclusions ({have}) is below the fold count {need}")]
    TooFewMolecules {
        dataset: String,
        query: String,
        class: &'static str,
        have: usize,
        need: usize,
    },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Overlay(#[from] OverlayError),
    #[error(transparent)]
    Color(#[from] ColorError),
    #[error(transparent)]
    Mol(#[from] MolError),
    #[error(transparent)]
    Sdf(#[from] SdfError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Full configuration of a benchmark run; echoed verbatim into the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub layouts: Vec<Layout>,
    /// Metric of the parameter-free baseline ranking (TanimotoCombo or
    /// TverskyCombo); layouts carry their own metric choice.
    pub metric: Metric,
    pub alpha: f64,
    pub k_folds: usize,
    pub seed: u64,
    pub scaler: ScalerKind,
    pub c_grid: Vec<f64>,
    pub inner_folds: usize,
    pub max_iters: usize,
    pub overlay: OverlayConfig,
    /// Fail on malformed SDF records instead of skipping them.
    pub strict_parsing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            layouts: vec![Layout::StCt, Layout::StCct, Layout::StCao, Layout::StCctCao],
            metric: Metric::Tanimoto,
            alpha: 0.95,
            k_folds: 5,
            seed: 0,
            scaler: ScalerKind::MaxAbs,
            c_grid: crate::model::default_c_grid(),
            inner_folds: 3,
            max_iters: 10_000,
            overlay: OverlayConfig::default(),
            strict_parsing: false,
        }
    }
}

fn validate_config(cfg: &ExperimentConfig) -> Result<(), BenchError> {
    if cfg.layouts.is_empty() {
        return Err(BenchError::NoLayouts);
    }
    for (i, layout) in cfg.layouts.iter().enumerate() {
        if cfg.layouts[..i].contains(layout) {
            return Err(BenchError::DuplicateLayout(layout.name().to_string()));
        }
    }
    if cfg.k_folds < 2 {
        return Err(BenchError::BadFoldCount(cfg.k_folds));
    }
    SimilarityConfig::new(cfg.alpha)?;
    if cfg.c_grid.is_empty() {
        return Err(BenchError::Model(ModelError::EmptyGrid));
    }
    // `partial_cmp` keeps NaN out alongside the non-positive values.
    if let Some(&c) = cfg
        .c_grid
        .iter()
        .find(|&&c| c.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater))
    {
        return Err(BenchError::Model(ModelError::NonPositiveC(c)));
    }
    Ok(())
}

/// A screening dataset in memory. `queries: None` selects the
/// active-as-query protocol; explicit queries select crystal-query mode.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub actives: Vec<Molecule>,
    pub decoys: Vec<Molecule>,
    pub queries: Option<Vec<Molecule>>,
}

impl From<crate::mol::DatasetManifest> for Dataset {
    fn from(manifest: crate::mol::DatasetManifest) -> Self {
        Dataset {
            name: manifest.dataset,
            actives: manifest.actives,
            decoys: manifest.decoys,
            queries: manifest.queries,
        }
    }
}

impl synth::SyntheticBenchmark {
    /// Packages the generated molecules as a runnable dataset.
    pub fn into_dataset(self, crystal_query: bool) -> Dataset {
        Dataset {
            name: self.dataset,
            actives: self.actives,
            decoys: self.decoys,
            queries: crystal_query.then(|| vec![self.query]),
        }
    }
}

/// Stable seed derivation: FNV-1a over the base seed and context strings,
/// so every (dataset, query, layout, fold) gets an independent,
/// platform-independent stream.
pub fn derive_seed(base: u64, parts: &[&str]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    let mut eat = |byte: u8| hash = (hash ^ u64::from(byte)).wrapping_mul(PRIME);
    for byte in base.to_le_bytes() {
        eat(byte);
    }
    for part in parts {
        for &byte in part.as_bytes() {
            eat(byte);
        }
        eat(0x1f);
    }
    hash
}

/// Library membership of one scored molecule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoredMolecule {
    pub name: String,
    pub active: bool,
    pub fold: usize,
}

/// One trained fold model.
#[derive(Debug, Clone)]
pub struct StoredModel {
    pub layout: Layout,
    pub fold: usize,
    pub model: LrModel,
    /// Present for layouts with per-color-atom features.
    pub weight_export: Option<WeightExport>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ExperimentCounters {
    pub library_size: usize,
    pub overlay_failures: usize,
    pub clamp_events: usize,
    pub models_trained: usize,
}

/// Outcome of one (dataset, query) experiment.
#[derive(Debug, Clone)]
pub struct QueryExperiment {
    pub dataset: String,
    pub query: String,
    /// Baseline record first, then one record per layout.
    pub records: Vec<ExperimentRecord>,
    pub models: Vec<StoredModel>,
    pub molecules: Vec<ScoredMolecule>,
    /// Molecules excluded by overlay or typing failures.
    pub failed_molecules: Vec<(String, String)>,
    /// Per-fold FNV-1a checksum of the sorted training-molecule names,
    /// an audit hook proving which molecules each fold model saw.
    pub fold_train_checksums: Vec<u64>,
    pub counters: ExperimentCounters,
}

fn checksum_names(names: &[&str]) -> u64 {
    let mut sorted: Vec<&str> = names.to_vec();
    sorted.sort_unstable();
    let mut hash = 0;
    for name in sorted {
        hash = derive_seed(hash, &[name]);
    }
    hash
}

/// One library molecule's overlay outcome: `(name, label, scores)` on
/// success, `(name, error message)` when color typing or overlay failed.
type OverlayOutcome = Result<(String, bool, ScoreSet), (String, String)>;

/// Runs the full protocol for one query against one dataset: overlay the
/// library (query removed from its own library by name), build per-layout
/// features, stratify folds, per fold tune/fit on training molecules only
/// and score the held-out fold, with the combo baseline evaluated on the
/// identical folds.
pub fn run_query_experiment(
    dataset: &Dataset,
    query: &Molecule,
    cfg: &ExperimentConfig,
) -> Result<QueryExperiment, BenchError> {
    validate_config(cfg)?;
    let sim = SimilarityConfig::new(cfg.alpha)?;
    let query_colors = color_atoms(query)?;

    let library: Vec<(&Molecule, bool)> = dataset
        .actives
        .iter()
        .filter(|m| m.name != query.name)
        .map(|m| (m, true))
        .chain(dataset.decoys.iter().map(|m| (m, false)))
        .collect();

    let outcomes: Vec<OverlayOutcome> = library
        .par_iter()
        .map(|(molecule, label)| {
            let colors =
                color_atoms(molecule).map_err(|e| (molecule.name.clone(), e.to_string()))?;
            let result = best_overlay(query, &query_colors, molecule, &colors, &cfg.overlay)
                .map_err(|e| (molecule.name.clone(), e.to_string()))?;
            Ok((
                molecule.name.clone(),
                *label,
                ScoreSet::from_overlay(&result, &sim),
            ))
        })
        .collect();

    let mut names = Vec::new();
    let mut labels = Vec::new();
    let mut scores = Vec::new();
    let mut failed_molecules = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok((name, label, score)) => {
                names.push(name);
                labels.push(label);
                scores.push(score);
            }
            Err(failure) => failed_molecules.push(failure),
        }
    }

    for (class, count) in [
        ("actives", labels.iter().filter(|l| **l).count()),
        ("decoys", labels.iter().filter(|l| !**l).count()),
    ] {
        if count < cfg.k_folds {
            return Err(BenchError::TooFewMolecules {
                dataset: dataset.name.clone(),
                query: query.name.clone(),
                class,
                have: count,
                need: cfg.k_folds,
            });
        }
    }

    let fold_seed = derive_seed(cfg.seed, &[&dataset.name, &query.name, "folds"]);
    let folds = eval::stratified_kfold(&labels, cfg.k_folds, fold_seed)?;

    let fold_indices = |fold: usize, in_fold: bool| -> Vec<usize> {
        (0..labels.len())
            .filter(|&i| (folds[i] == fold) == in_fold)
            .collect()
    };

    let mut records = Vec::with_capacity(1 + cfg.layouts.len());
    let baseline_metrics = (0..cfg.k_folds)
        .map(|fold| {
            let test = fold_indices(fold, true);
            let fold_scores: Vec<f64> = test.iter().map(|&i| scores[i].combo(cfg.metric)).collect();
            let fold_labels: Vec<bool> = test.iter().map(|&i| labels[i]).collect();
            MetricRecord::from_scores(&fold_scores, &fold_labels)
        })
        .collect::<Result<Vec<_>, _>>()?;
    records.push(ExperimentRecord {
        method: cfg.metric.combo_name().to_string(),
        dataset: dataset.name.clone(),
        query: query.name.clone(),
        fold_metrics: baseline_metrics,
    });

    let mut models = Vec::new();
    for &layout in &cfg.layouts {
        let features: Vec<Vec<f64>> = scores
            .iter()
            .map(|s| s.feature_vector(layout).values)
            .collect();
        let mut fold_metrics = Vec::with_capacity(cfg.k_folds);
        for fold in 0..cfg.k_folds {
            let train = fold_indices(fold, false);
            let test = fold_indices(fold, true);
            let ts = TrainingSet::new(
                train.iter().map(|&i| features[i].clone()).collect(),
                train.iter().map(|&i| labels[i]).collect(),
            )?;
            let train_config = TrainConfig {
                scaler: cfg.scaler,
                c_grid: cfg.c_grid.clone(),
                inner_folds: cfg.inner_folds,
                max_iters: cfg.max_iters,
                seed: derive_seed(
                    cfg.seed,
                    &[
                        &dataset.name,
                        &query.name,
                        layout.name(),
                        &fold.to_string(),
                        "model",
                    ],
                ),
            };
            let model = fit_model(&ts, layout, &train_config)?;

            let margins: Vec<f64> = test
                .iter()
                .map(|&i| model.decision_margin(&features[i]))
                .collect::<Result<_, _>>()?;
            let fold_labels: Vec<bool> = test.iter().map(|&i| labels[i]).collect();
            fold_metrics.push(MetricRecord::from_scores(&margins, &fold_labels)?);

            let weight_export = layout
                .has_color_atom_overlaps()
                .then(|| export_weights(&model, &query_colors))
                .transpose()?;
            models.push(StoredModel {
                layout,
                fold,
                model,
                weight_export,
            });
        }
        records.push(ExperimentRecord {
            method: layout.name().to_string(),
            dataset: dataset.name.clone(),
            query: query.name.clone(),
            fold_metrics,
        });
    }

    let fold_train_checksums = (0..cfg.k_folds)
        .map(|fold| {
            let train_names: Vec<&str> = fold_indices(fold, false)
                .iter()
                .map(|&i| names[i].as_str())
                .collect();
            checksum_names(&train_names)
        })
        .collect();

    let counters = ExperimentCounters {
        library_size: library.len(),
        overlay_failures: failed_molecules.len(),
        clamp_events: scores.iter().map(|s| s.clamp_events).sum(),
        models_trained: models.len(),
    };
    let molecules = names
        .into_iter()
        .zip(&labels)
        .zip(&folds)
        .map(|((name, &active), &fold)| ScoredMolecule { name, active, fold })
        .collect();

    Ok(QueryExperiment {
        dataset: dataset.name.clone(),
        query: query.name.clone(),
        records,
        models,
        molecules,
        failed_molecules,
        fold_train_checksums,
        counters,
    })
}

/// One failure with enough context to locate it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureNote {
    pub context: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReportCounters {
    pub experiments: usize,
    pub overlays: usize,
    pub overlay_failures: usize,
    pub clamp_events: usize,
    pub models_trained: usize,
    /// Layout name → fold models trained across all experiments.
    pub models_by_layout: BTreeMap<String, usize>,
}

/// The versioned, machine-readable outcome of a benchmark run. Reruns
/// with identical config and inputs serialize to identical bytes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub manifest_paths: Vec<String>,
    pub baseline: String,
    pub summary: AggregateSummary,
    pub counters: ReportCounters,
    /// dataset → query → layout → per-fold weight exports (CAO layouts).
    pub weight_exports: BTreeMap<String, BTreeMap<String, BTreeMap<String, Vec<WeightExport>>>>,
    pub failed_manifests: Vec<FailureNote>,
    pub failed_experiments: Vec<FailureNote>,
}

/// Runs every (dataset, query) experiment and aggregates the results.
/// Individual experiment failures are recorded, not fatal; the run fails
/// only when nothing succeeds.
pub fn run_collection(
    datasets: &[Dataset],
    cfg: &ExperimentConfig,
) -> Result<BenchmarkReport, BenchError> {
    validate_config(cfg)?;
    if datasets.is_empty() {
        return Err(BenchError::NoDatasets);
    }

    let jobs: Vec<(&Dataset, &Molecule)> = datasets
        .iter()
        .flat_map(|dataset| {
            let queries: Vec<&Molecule> = match &dataset.queries {
                Some(queries) => queries.iter().collect(),
                None => dataset.actives.iter().collect(),
            };
            queries.into_iter().map(move |q| (dataset, q))
        })
        .collect();

    let outcomes: Vec<Result<QueryExperiment, FailureNote>> = jobs
        .par_iter()
        .map(|(dataset, query)| {
            run_query_experiment(dataset, query, cfg).map_err(|e| FailureNote {
                context: format!("dataset={} query={}", dataset.name, query.name),
                error: e.to_string(),
            })
        })
        .collect();

    let mut experiments = Vec::new();
    let mut failed_experiments = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(experiment) => experiments.push(experiment),
            Err(note) => failed_experiments.push(note),
        }
    }
    if experiments.is_empty() {
        return Err(BenchError::ZeroSuccessfulExperiments);
    }

    let records: Vec<ExperimentRecord> = experiments
        .iter()
        .flat_map(|e| e.records.iter().cloned())
        .collect();
    let baseline = cfg.metric.combo_name().to_string();
    let summary = eval::aggregate(&records, &baseline)?;

    let mut counters = ReportCounters {
        experiments: experiments.len(),
        ..ReportCounters::default()
    };
    let mut weight_exports: BTreeMap<String, BTreeMap<String, BTreeMap<String, Vec<WeightExport>>>> =
        BTreeMap::new();
    for experiment in &experiments {
        counters.overlays += experiment.counters.library_size;
        counters.overlay_failures += experiment.counters.overlay_failures;
        counters.clamp_events += experiment.counters.clamp_events;
        counters.models_trained += experiment.counters.models_trained;
        for stored in &experiment.models {
            *counters
                .models_by_layout
                .entry(stored.layout.name().to_string())
                .or_default() += 1;
            if let Some(export) = &stored.weight_export {
                weight_exports
                    .entry(experiment.dataset.clone())
                    .or_default()
                    .entry(experiment.query.clone())
                    .or_default()
                    .entry(stored.layout.name().to_string())
                    .or_default()
                    .push(export.clone());
            }
        }
    }

    Ok(BenchmarkReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        manifest_paths: Vec::new(),
        baseline,
        summary,
        counters,
        weight_exports,
        failed_manifests: Vec::new(),
        failed_experiments,
    })
}

/// Loads manifests from disk and runs the collection. Manifest load
/// failures are recorded in the report; the run fails only when no
/// dataset loads or no experiment succeeds.
pub fn run_collection_from_manifests(
    paths: &[PathBuf],
    cfg: &ExperimentConfig,
) -> Result<BenchmarkReport, BenchError> {
    validate_config(cfg)?;
    if paths.is_empty() {
        return Err(BenchError::NoDatasets);
    }
    let mut datasets = Vec::new();
    let mut failed_manifests = Vec::new();
    for path in paths {
        match load_manifest(path, cfg.strict_parsing) {
            Ok(manifest) => datasets.push(Dataset::from(manifest)),
            Err(error) => failed_manifests.push(FailureNote {
                context: path.display().to_string(),
                error: error.to_string(),
            }),
        }
    }
    if datasets.is_empty() {
        return Err(BenchError::ZeroSuccessfulExperiments);
    }
    let mut report = run_collection(&datasets, cfg)?;
    report.manifest_paths = paths.iter().map(|p| p.display().to_string()).collect();
    report.failed_manifests = failed_manifests;
    Ok(report)
}

/// Serializes a report as pretty JSON with a trailing newline; the bytes
/// are a pure function of the report contents.
pub fn report_to_json(report: &BenchmarkReport) -> Result<String, BenchError> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    Ok(text)
}

pub fn write_report(path: &Path, report: &BenchmarkReport) -> Result<(), BenchError> {
    std::fs::write(path, report_to_json(report)?)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<BenchmarkReport, BenchError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
