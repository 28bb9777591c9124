//! Deterministic generator for desk-scale screening datasets: rigid
//! carbon blobs with annotated color atoms, where actives inherit the
//! query's color set (jittered) and decoys carry only a confounder-type
//! color atom at a shared anchor.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::colorff::{format_color_atoms, ColorAtom, ColorType, COLOR_ATOMS_PROPERTY};
use crate::mol::{write_sdf_file, Atom, Molecule};
use crate::overlay::random_rotation;

/// Parameters of one synthetic dataset.
///
/// The query is a random carbon blob annotated with two relevant-type
/// color atoms and one confounder-type color atom at fixed anchors.
/// Actives are jittered copies of the query (full color set); decoys are
/// jittered copies of the blob carrying only the confounder color atom.
/// With both jitters at zero, actives degenerate to exact copies of the
/// query. Every library molecule is shipped in a random rigid pose, so
/// scoring exercises the full alignment machinery.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub dataset: String,
    pub n_actives: usize,
    pub n_decoys: usize,
    /// Heavy atoms in the shared carbon blob.
    pub n_heavy_atoms: usize,
    /// Uniform per-coordinate jitter (Å) on library atom positions.
    pub geometry_jitter: f64,
    /// Uniform per-coordinate jitter (Å) on library color-atom positions.
    pub color_jitter: f64,
    /// Color type carried by actives at the query anchors.
    pub relevant_type: ColorType,
    /// Color type carried by decoys (and the query) at the shared anchor.
    pub confounder_type: ColorType,
    /// Generate decoys exactly like actives, severing the link between
    /// labels and geometry; every method should then score near chance.
    pub decouple_labels: bool,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            dataset: "synthetic".to_string(),
            n_actives: 40,
            n_decoys: 800,
            n_heavy_atoms: 8,
            geometry_jitter: 0.25,
            color_jitter: 0.4,
            relevant_type: ColorType::Donor,
            confounder_type: ColorType::Acceptor,
            decouple_labels: false,
        }
    }
}

/// Anchor sites for the annotated color atoms, in the template frame.
const RELEVANT_ANCHORS: [[f64; 3]; 2] = [[3.0, 0.0, 0.0], [-3.0, 0.0, 0.0]];
const CONFOUNDER_ANCHOR: [f64; 3] = [0.0, 3.0, 0.0];

/// One generated dataset with its designated query.
#[derive(Debug, Clone)]
pub struct SyntheticBenchmark {
    pub dataset: String,
    pub query: Molecule,
    pub actives: Vec<Molecule>,
    pub decoys: Vec<Molecule>,
}

fn uniform_vec(rng: &mut ChaCha8Rng, half_width: f64) -> Vector3<f64> {
    Vector3::new(
        rng.gen_range(-half_width..=half_width),
        rng.gen_range(-half_width..=half_width),
        rng.gen_range(-half_width..=half_width),
    )
}

fn blob_molecule(
    name: String,
    positions: &[Vector3<f64>],
    colors: &[ColorAtom],
) -> Result<Molecule, BenchError> {
    let atoms = positions
        .iter()
        .map(|&p| Atom::new("C", p, 0))
        .collect::<Vec<_>>();
    let mut properties = BTreeMap::new();
    properties.insert(COLOR_ATOMS_PROPERTY.to_string(), format_color_atoms(colors));
    Molecule::new(name, atoms, Vec::new(), properties).map_err(BenchError::from)
}

/// Generates one dataset. Deterministic per (spec, seed).
pub fn make_synthetic_benchmark(
    spec: &SyntheticSpec,
    seed: u64,
) -> Result<SyntheticBenchmark, BenchError> {
    if spec.n_actives == 0 || spec.n_decoys == 0 {
        return Err(BenchError::DegenerateSyntheticSpec {
            actives: spec.n_actives,
            decoys: spec.n_decoys,
        });
    }
    if spec.n_heavy_atoms == 0 {
        return Err(BenchError::EmptySyntheticBlob);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let template: Vec<Vector3<f64>> = (0..spec.n_heavy_atoms)
        .map(|_| uniform_vec(&mut rng, 2.5))
        .collect();
    let query_colors: Vec<ColorAtom> = RELEVANT_ANCHORS
        .iter()
        .map(|&p| ColorAtom::new(spec.relevant_type, Vector3::from(p)))
        .chain(std::iter::once(ColorAtom::new(
            spec.confounder_type,
            Vector3::from(CONFOUNDER_ANCHOR),
        )))
        .collect();
    let query = blob_molecule(
        format!("{}_query", spec.dataset),
        &template,
        &query_colors,
    )?;

    let library_member = |rng: &mut ChaCha8Rng,
                              name: String,
                              active_like: bool|
     -> Result<Molecule, BenchError> {
        let positions: Vec<Vector3<f64>> = template
            .iter()
            .map(|&p| p + uniform_vec(rng, spec.geometry_jitter))
            .collect();
        let colors: Vec<ColorAtom> = if active_like {
            query_colors
                .iter()
                .map(|c| {
                    ColorAtom::new(c.color_type, c.position + uniform_vec(rng, spec.color_jitter))
                })
                .collect()
        } else {
            vec![ColorAtom::new(
                spec.confounder_type,
                Vector3::from(CONFOUNDER_ANCHOR) + uniform_vec(rng, spec.color_jitter),
            )]
        };

        // Ship the molecule in a random rigid pose so nothing about the
        // template frame leaks into scoring.
        let rotation = random_rotation(rng);
        let translation = uniform_vec(rng, 5.0);
        let posed_positions: Vec<Vector3<f64>> =
            positions.iter().map(|p| rotation * p + translation).collect();
        let posed_colors: Vec<ColorAtom> = colors
            .iter()
            .map(|c| ColorAtom::new(c.color_type, rotation * c.position + translation))
            .collect();
        blob_molecule(name, &posed_positions, &posed_colors)
    };

    let actives = (0..spec.n_actives)
        .map(|i| library_member(&mut rng, format!("{}_active_{i:03}", spec.dataset), true))
        .collect::<Result<Vec<_>, _>>()?;
    let decoys = (0..spec.n_decoys)
        .map(|i| {
            library_member(
                &mut rng,
                format!("{}_decoy_{i:03}", spec.dataset),
                spec.decouple_labels,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(SyntheticBenchmark {
        dataset: spec.dataset.clone(),
        query,
        actives,
        decoys,
    })
}

#[derive(Serialize)]
struct ManifestFile<'a> {
    dataset: &'a str,
    actives: Vec<&'a str>,
    decoys: Vec<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    queries: Option<Vec<&'a str>>,
}

/// Writes the dataset to `dir` as SDF files plus `manifest.json` and
/// returns the manifest path. With `crystal_query` the manifest lists the
/// generated query explicitly; otherwise it is omitted and each active
/// serves as its own query.
pub fn write_benchmark(
    dir: &Path,
    benchmark: &SyntheticBenchmark,
    crystal_query: bool,
) -> Result<std::path::PathBuf, BenchError> {
    std::fs::create_dir_all(dir)?;
    write_sdf_file(&dir.join("actives.sdf"), &benchmark.actives)?;
    write_sdf_file(&dir.join("decoys.sdf"), &benchmark.decoys)?;
    if crystal_query {
        write_sdf_file(&dir.join("query.sdf"), std::slice::from_ref(&benchmark.query))?;
    }
    let manifest = ManifestFile {
        dataset: &benchmark.dataset,
        actives: vec!["actives.sdf"],
        decoys: vec!["decoys.sdf"],
        queries: crystal_query.then(|| vec!["query.sdf"]),
    };
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}
