//! Dataset manifests: a JSON file naming the active, decoy, and optional
//! query SDF files that make up one screening dataset.
//!
//! Schema: `{"dataset": str, "actives": [paths], "decoys": [paths],
//! "queries": [paths]?}`. Paths are resolved relative to the manifest file's
//! directory. When `queries` is absent, every active serves as a query in
//! turn (active-as-query protocol).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use super::sdf::{read_sdf_file, SdfError, SkippedRecord};
use super::Molecule;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("failed to read manifest '{path}': {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest '{path}' is not valid JSON: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("dataset '{dataset}': {source}")]
    Sdf { dataset: String, source: SdfError },
    #[error("dataset '{dataset}' lists no actives")]
    ZeroActives { dataset: String },
    #[error("dataset '{dataset}' lists no decoys")]
    ZeroDecoys { dataset: String },
    #[error("dataset '{dataset}' lists a 'queries' entry that contains no molecules")]
    ZeroQueries { dataset: String },
    #[error("dataset '{dataset}': molecule name '{name}' appears more than once in the {role} list")]
    DuplicateName {
        dataset: String,
        role: &'static str,
        name: String,
    },
    #[error("dataset '{dataset}': molecule name '{name}' appears in both the active and decoy lists")]
    OverlappingName { dataset: String, name: String },
}

#[derive(Debug, Deserialize)]
struct RawManifest {
    dataset: String,
    actives: Vec<PathBuf>,
    decoys: Vec<PathBuf>,
    #[serde(default)]
    queries: Option<Vec<PathBuf>>,
}

/// One screening dataset, fully loaded into memory.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub dataset: String,
    pub actives: Vec<Molecule>,
    pub decoys: Vec<Molecule>,
    /// Explicit query molecules; `None` means active-as-query protocol.
    pub queries: Option<Vec<Molecule>>,
    /// Records the lenient parser skipped, tagged with their source file.
    pub skipped_records: Vec<(PathBuf, SkippedRecord)>,
}

/// Loads a manifest and every SDF file it references.
///
/// With `strict` set, any malformed SDF record is fatal; otherwise malformed
/// records are skipped and reported in `skipped_records`. Validation enforces
/// at least one active and one decoy, unique names within each list, and
/// active/decoy name disjointness.
pub fn load_manifest(path: &Path, strict: bool) -> Result<DatasetManifest, ManifestError> {
    let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let raw: RawManifest = serde_json::from_str(&text).map_err(|source| ManifestError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let dataset = raw.dataset;

    let mut skipped_records = Vec::new();
    let mut load_list = |paths: &[PathBuf]| -> Result<Vec<Molecule>, ManifestError> {
        let mut molecules = Vec::new();
        for rel in paths {
            let file = base.join(rel);
            let outcome = read_sdf_file(&file, strict).map_err(|source| ManifestError::Sdf {
                dataset: dataset.clone(),
                source,
            })?;
            molecules.extend(outcome.molecules);
            skipped_records.extend(outcome.skipped.into_iter().map(|s| (file.clone(), s)));
        }
        Ok(molecules)
    };

    let actives = load_list(&raw.actives)?;
    let decoys = load_list(&raw.decoys)?;
    let queries = match &raw.queries {
        Some(paths) => Some(load_list(paths)?),
        None => None,
    };

    if actives.is_empty() {
        return Err(ManifestError::ZeroActives { dataset });
    }
    if decoys.is_empty() {
        return Err(ManifestError::ZeroDecoys { dataset });
    }
    if let Some(qs) = &queries {
        if qs.is_empty() {
            return Err(ManifestError::ZeroQueries { dataset });
        }
    }

    let unique_names = |mols: &[Molecule], role: &'static str| -> Result<BTreeSet<String>, ManifestError> {
        let mut seen = BTreeSet::new();
        for mol in mols {
            if !seen.insert(mol.name.clone()) {
                return Err(ManifestError::DuplicateName {
                    dataset: dataset.clone(),
                    role,
                    name: mol.name.clone(),
                });
            }
        }
        Ok(seen)
    };
    let active_names = unique_names(&actives, "active")?;
    let decoy_names = unique_names(&decoys, "decoy")?;
    if let Some(qs) = &queries {
        unique_names(qs, "query")?;
    }
    if let Some(name) = active_names.intersection(&decoy_names).next() {
        return Err(ManifestError::OverlappingName {
            dataset,
            name: name.clone(),
        });
    }

    Ok(DatasetManifest {
        dataset,
        actives,
        decoys,
        queries,
        skipped_records,
    })
}
