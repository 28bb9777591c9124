//! Similarity scores and model-input feature vectors built from overlay
//! volumes.
//!
//! Shape and color overlaps are normalized into Tanimoto or
//! reference-Tversky scores, optionally decomposed per color type, and the
//! raw per-query-color-atom overlap volumes are exposed (negated, no
//! normalization) as their own feature block.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorff::{ColorAtom, ColorType};
use crate::overlay::OverlayResult;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("alpha must lie in [0,1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("feature vector for '{name}' has dimension {got} but the matrix expects {expected}")]
    DimensionMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
}

/// Tversky similarity settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    /// Bias toward the query's self-overlap; 0.95 emphasizes how much of
    /// the query is covered.
    pub alpha: f64,
}

impl SimilarityConfig {
    pub fn new(alpha: f64) -> Result<Self, FeatureError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(FeatureError::AlphaOutOfRange(alpha));
        }
        Ok(SimilarityConfig { alpha })
    }
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig { alpha: 0.95 }
    }
}

/// Which normalization a score or ranking uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Tanimoto,
    Tversky,
}

impl Metric {
    /// Name of the combo baseline ranking under this metric.
    pub fn combo_name(self) -> &'static str {
        match self {
            Metric::Tanimoto => "TanimotoCombo",
            Metric::Tversky => "TverskyCombo",
        }
    }
}

fn clamped_ratio(numerator: f64, denominator: f64) -> (f64, bool) {
    if denominator <= 0.0 {
        // Absent channel (0/≤0) scores 0 by convention; a positive overlap
        // over a non-positive denominator is a first-order pathology
        // clamped to 1.
        if numerator > 0.0 {
            (1.0, true)
        } else {
            (0.0, false)
        }
    } else {
        let raw = numerator / denominator;
        if raw > 1.0 {
            (1.0, true)
        } else if raw < 0.0 {
            (0.0, true)
        } else {
            (raw, false)
        }
    }
}

/// Tanimoto score `O_AB / (O_AA + O_BB − O_AB)`, clamped to `[0,1]`; a
/// non-positive denominator scores 0 when `O_AB` is 0.
pub fn tanimoto(oab: f64, oaa: f64, obb: f64) -> f64 {
    clamped_ratio(oab, oaa + obb - oab).0
}

/// Reference Tversky score `O_AB / (α·O_AA + (1−α)·O_BB)` with molecule A
/// the query, clamped to `[0,1]`; same zero-denominator convention as
/// [`tanimoto`].
pub fn ref_tversky(oab: f64, oaa: f64, obb: f64, alpha: f64) -> f64 {
    clamped_ratio(oab, alpha * oaa + (1.0 - alpha) * obb).0
}

/// Unweighted sum of a shape score and a color score, in `[0,2]`.
pub fn combo_score(shape_score: f64, color_score: f64) -> f64 {
    shape_score + color_score
}

/// Per-color-type similarity scores (6-vector in [`ColorType`] order).
/// Types absent from both molecules score 0.
pub fn color_components(
    result: &OverlayResult,
    metric: Metric,
    config: &SimilarityConfig,
) -> [f64; 6] {
    std::array::from_fn(|t| {
        let (oab, oaa, obb) = (
            result.color_oab_by_type[t],
            result.color_oaa_by_type[t],
            result.color_obb_by_type[t],
        );
        match metric {
            Metric::Tanimoto => tanimoto(oab, oaa, obb),
            Metric::Tversky => ref_tversky(oab, oaa, obb, config.alpha),
        }
    })
}

/// Negated per-query-color-atom overlap volumes, unnormalized, in the
/// query's color-atom order: entry i is −(overlap of query color atom i
/// with all same-type library color atoms at the optimal pose), so more
/// negative means more favorable.
pub fn color_atom_overlaps(result: &OverlayResult) -> Vec<f64> {
    result
        .query_color_atom_overlaps
        .iter()
        .map(|v| -v)
        .collect()
}

/// The eight feature layouts: shape score, optionally a scalar color
/// score, optionally the 6 per-type components, optionally the k raw
/// color-atom overlaps — under Tanimoto or reference-Tversky
/// normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Layout {
    #[serde(rename = "ST-CT")]
    StCt,
    #[serde(rename = "ST-CCT")]
    StCct,
    #[serde(rename = "ST-CAO")]
    StCao,
    #[serde(rename = "ST-CCT-CAO")]
    StCctCao,
    #[serde(rename = "STv-CTv")]
    StvCtv,
    #[serde(rename = "STv-CCTv")]
    StvCctv,
    #[serde(rename = "STv-CAO")]
    StvCao,
    #[serde(rename = "STv-CCTv-CAO")]
    StvCctvCao,
}

impl Layout {
    pub const ALL: [Layout; 8] = [
        Layout::StCt,
        Layout::StCct,
        Layout::StCao,
        Layout::StCctCao,
        Layout::StvCtv,
        Layout::StvCctv,
        Layout::StvCao,
        Layout::StvCctvCao,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Layout::StCt => "ST-CT",
            Layout::StCct => "ST-CCT",
            Layout::StCao => "ST-CAO",
            Layout::StCctCao => "ST-CCT-CAO",
            Layout::StvCtv => "STv-CTv",
            Layout::StvCctv => "STv-CCTv",
            Layout::StvCao => "STv-CAO",
            Layout::StvCctvCao => "STv-CCTv-CAO",
        }
    }

    /// Case-insensitive parse of a layout name.
    pub fn parse(token: &str) -> Option<Layout> {
        Layout::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(token.trim()))
    }

    /// Whether shape/color scores use reference Tversky instead of Tanimoto.
    pub fn metric(self) -> Metric {
        match self {
            Layout::StCt | Layout::StCct | Layout::StCao | Layout::StCctCao => Metric::Tanimoto,
            _ => Metric::Tversky,
        }
    }

    /// Layout includes the scalar color score (CT/CTv block).
    pub fn has_scalar_color(self) -> bool {
        matches!(self, Layout::StCt | Layout::StvCtv)
    }

    /// Layout includes the 6 per-type color components (CCT/CCTv block).
    pub fn has_color_components(self) -> bool {
        matches!(
            self,
            Layout::StCct | Layout::StCctCao | Layout::StvCctv | Layout::StvCctvCao
        )
    }

    /// Layout includes the k per-query-color-atom overlaps (CAO block).
    pub fn has_color_atom_overlaps(self) -> bool {
        matches!(
            self,
            Layout::StCao | Layout::StCctCao | Layout::StvCao | Layout::StvCctvCao
        )
    }

    /// Feature dimension given k query color atoms.
    pub fn dimension(self, query_color_atom_count: usize) -> usize {
        let mut dim = 1; // shape score
        if self.has_scalar_color() {
            dim += 1;
        }
        if self.has_color_components() {
            dim += 6;
        }
        if self.has_color_atom_overlaps() {
            dim += query_color_atom_count;
        }
        dim
    }
}

/// An assembled model input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub layout: Layout,
    pub values: Vec<f64>,
    pub query_color_atom_count: usize,
}

/// Every similarity score derivable from one overlay, computed once.
///
/// `clamp_events` counts how many of the 16 ratio evaluations (shape and
/// scalar color under both metrics, plus 6 components each) had to be
/// clamped into `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    pub shape_tanimoto: f64,
    pub shape_tversky: f64,
    pub color_tanimoto: f64,
    pub color_tversky: f64,
    pub color_components_tanimoto: [f64; 6],
    pub color_components_tversky: [f64; 6],
    /// Negated, unnormalized per-query-color-atom volumes (≤ 0).
    pub color_atom_overlaps: Vec<f64>,
    pub clamp_events: usize,
}

impl ScoreSet {
    pub fn from_overlay(result: &OverlayResult, config: &SimilarityConfig) -> ScoreSet {
        let mut clamp_events = 0;
        let mut count = |(score, clamped): (f64, bool)| {
            if clamped {
                clamp_events += 1;
            }
            score
        };

        let alpha = config.alpha;
        let t = |oab: f64, oaa: f64, obb: f64| clamped_ratio(oab, oaa + obb - oab);
        let tv =
            |oab: f64, oaa: f64, obb: f64| clamped_ratio(oab, alpha * oaa + (1.0 - alpha) * obb);

        let shape_tanimoto = count(t(result.shape_oab, result.shape_oaa, result.shape_obb));
        let shape_tversky = count(tv(result.shape_oab, result.shape_oaa, result.shape_obb));

        let total_oab: f64 = result.color_oab_by_type.iter().sum();
        let total_oaa: f64 = result.color_oaa_by_type.iter().sum();
        let total_obb: f64 = result.color_obb_by_type.iter().sum();
        let color_tanimoto = count(t(total_oab, total_oaa, total_obb));
        let color_tversky = count(tv(total_oab, total_oaa, total_obb));

        let mut color_components_tanimoto = [0.0; 6];
        let mut color_components_tversky = [0.0; 6];
        for i in 0..6 {
            let (oab, oaa, obb) = (
                result.color_oab_by_type[i],
                result.color_oaa_by_type[i],
                result.color_obb_by_type[i],
            );
            color_components_tanimoto[i] = count(t(oab, oaa, obb));
            color_components_tversky[i] = count(tv(oab, oaa, obb));
        }

        ScoreSet {
            shape_tanimoto,
            shape_tversky,
            color_tanimoto,
            color_tversky,
            color_components_tanimoto,
            color_components_tversky,
            color_atom_overlaps: color_atom_overlaps(result),
            clamp_events,
        }
    }

    pub fn shape_score(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Tanimoto => self.shape_tanimoto,
            Metric::Tversky => self.shape_tversky,
        }
    }

    pub fn color_score(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Tanimoto => self.color_tanimoto,
            Metric::Tversky => self.color_tversky,
        }
    }

    /// Shape + color combo score under the given metric, in `[0,2]`.
    pub fn combo(&self, metric: Metric) -> f64 {
        combo_score(self.shape_score(metric), self.color_score(metric))
    }

    /// Assembles a layout's feature vector. Ordering contract:
    /// [shape score] ++ [scalar color score]? ++ [6 components]? ++
    /// [k color-atom overlaps]?.
    pub fn feature_vector(&self, layout: Layout) -> FeatureVector {
        let metric = layout.metric();
        let k = self.color_atom_overlaps.len();
        let mut values = Vec::with_capacity(layout.dimension(k));
        values.push(self.shape_score(metric));
        if layout.has_scalar_color() {
            values.push(self.color_score(metric));
        }
        if layout.has_color_components() {
            let components = match metric {
                Metric::Tanimoto => &self.color_components_tanimoto,
                Metric::Tversky => &self.color_components_tversky,
            };
            values.extend_from_slice(components);
        }
        if layout.has_color_atom_overlaps() {
            values.extend_from_slice(&self.color_atom_overlaps);
        }
        FeatureVector {
            layout,
            values,
            query_color_atom_count: k,
        }
    }
}

/// Builds one layout's feature vector straight from an overlay result.
pub fn build_feature_vector(
    layout: Layout,
    result: &OverlayResult,
    config: &SimilarityConfig,
) -> FeatureVector {
    ScoreSet::from_overlay(result, config).feature_vector(layout)
}

/// One row of an exported feature matrix.
#[derive(Debug, Clone)]
pub struct FeatureRow {
    pub name: String,
    /// 1 for actives, 0 for decoys.
    pub label: u8,
    pub vector: FeatureVector,
}

/// Serializes rows as CSV with header `name,label,f0..fn`. All rows must
/// share one dimension.
pub fn feature_matrix_csv(rows: &[FeatureRow]) -> Result<String, FeatureError> {
    let dim = rows.first().map_or(0, |r| r.vector.values.len());
    let mut out = String::from("name,label");
    for i in 0..dim {
        write!(out, ",f{i}").unwrap();
    }
    out.push('\n');
    for row in rows {
        if row.vector.values.len() != dim {
            return Err(FeatureError::DimensionMismatch {
                name: row.name.clone(),
                expected: dim,
                got: row.vector.values.len(),
            });
        }
        write!(out, "{},{}", row.name, row.label).unwrap();
        for v in &row.vector.values {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// Companion metadata for an exported feature matrix: the layout and the
/// query's color atoms, whose order fixes the CAO column order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSidecar {
    pub layout: Layout,
    pub query: String,
    pub query_color_atoms: Vec<ColorAtomDescriptor>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColorAtomDescriptor {
    pub color_type: ColorType,
    pub position: [f64; 3],
}

impl FeatureSidecar {
    pub fn new(layout: Layout, query: &str, query_colors: &[ColorAtom]) -> Self {
        FeatureSidecar {
            layout,
            query: query.to_string(),
            query_color_atoms: query_colors
                .iter()
                .map(|c| ColorAtomDescriptor {
                    color_type: c.color_type,
                    position: [c.position.x, c.position.y, c.position.z],
                })
                .collect(),
        }
    }
}
