//! Gaussian-overlap alignment: analytic first-order overlap volumes,
//! their gradients, and rigid-pose optimization of a library molecule onto
//! a query.

mod gaussian;
mod optimize;

pub use gaussian::{
    gaussian_width, pair_overlap, shape_spheres, GaussianSphere, SHAPE_AMPLITUDE,
};
pub(crate) use optimize::random_rotation;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorff::{ColorAtom, ColorType};
use crate::mol::Molecule;
use optimize::{mass_frame, objective_gradient, refine, starting_poses, Channel, Pose};

/// A rigid transform: rotation followed by translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

impl Transform {
    pub fn identity() -> Self {
        Transform {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a transform from raw quaternion components `[w, x, y, z]`
    /// (normalized here) and a translation.
    pub fn from_raw(quat: [f64; 4], translation: Vector3<f64>) -> Self {
        let q = Quaternion::new(quat[0], quat[1], quat[2], quat[3]);
        Transform {
            rotation: UnitQuaternion::from_quaternion(q),
            translation,
        }
    }

    pub fn apply(&self, point: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * point + self.translation
    }

    fn quat_array(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    fn rotation_matrix(&self) -> nalgebra::Matrix3<f64> {
        *self.rotation.to_rotation_matrix().matrix()
    }
}

/// Settings for [`best_overlay`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct OverlayConfig {
    /// Weight of the color-overlap term in the optimization objective;
    /// 0 optimizes shape alone (color volumes are still reported at the
    /// shape-optimal pose).
    pub w_color: f64,
    /// Iteration cap per starting pose.
    pub max_iters: usize,
    /// Additional seeded random-rotation starts beyond the axis flips.
    pub extra_random_starts: usize,
    pub seed: u64,
}

impl Default for OverlayConfig {
    fn default() -> Self {
        OverlayConfig {
            w_color: 1.0,
            max_iters: 200,
            extra_random_starts: 0,
            seed: 0,
        }
    }
}

/// All overlap volumes at the optimal pose of a library molecule (B)
/// against a query (A).
#[derive(Debug, Clone)]
pub struct OverlayResult {
    pub transform: Transform,
    /// Shape overlap O_AB at the optimal pose (Å³).
    pub shape_oab: f64,
    /// Query shape self-overlap O_AA.
    pub shape_oaa: f64,
    /// Library shape self-overlap O_BB.
    pub shape_obb: f64,
    /// Same-type color overlap by color type, query vs posed library.
    pub color_oab_by_type: [f64; 6],
    /// Query color self-overlap by type.
    pub color_oaa_by_type: [f64; 6],
    /// Library color self-overlap by type.
    pub color_obb_by_type: [f64; 6],
    /// Same-type color overlap attributed to each query color atom, in the
    /// query's color-atom order; sums to the sum of `color_oab_by_type`.
    pub query_color_atom_overlaps: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum OverlayError {
    #[error("molecule '{0}' has no heavy atoms to overlay")]
    NoHeavyAtoms(String),
    #[error("overlay of '{library}' onto '{query}' produced a non-finite objective")]
    NonFinite { query: String, library: String },
}

/// First-order overlap volume `Σᵢ∈A Σⱼ∈B pair_overlap(aᵢ, t(bⱼ))`.
/// Self-overlap is the same call with `a = b` and the identity transform.
pub fn molecule_overlap(
    a: &[GaussianSphere],
    b: &[GaussianSphere],
    transform: &Transform,
) -> f64 {
    gaussian::sum_overlap(a, b, &transform.rotation_matrix(), &transform.translation)
}

/// Analytic gradient of [`molecule_overlap`] with respect to the transform's
/// 7 raw parameters (quaternion w,x,y,z then translation x,y,z). The
/// quaternion is treated as unconstrained and the gradient projected onto
/// the unit sphere's tangent space, matching finite differences of
/// `molecule_overlap(a, b, Transform::from_raw(q + h·eᵢ, T))`.
pub fn overlap_gradient(
    a: &[GaussianSphere],
    b: &[GaussianSphere],
    transform: &Transform,
) -> [f64; 7] {
    let channels = [Channel { a, b, weight: 1.0 }];
    objective_gradient(
        &channels,
        &Pose {
            quat: transform.quat_array(),
            trans: transform.translation,
        },
    )
}

/// Color overlap of query color atoms (A) against posed library color
/// atoms (B): per-type totals plus the share attributed to each query atom.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorOverlap {
    pub by_type: [f64; 6],
    /// Row sums per query color atom, in the query's color-atom order.
    pub per_query_atom: Vec<f64>,
}

/// Pairwise Gaussian overlap restricted to matching color types.
pub fn color_overlap(
    a_colors: &[ColorAtom],
    b_colors: &[ColorAtom],
    transform: &Transform,
) -> ColorOverlap {
    let mut by_type = [0.0; 6];
    let mut per_query_atom = vec![0.0; a_colors.len()];
    let posed: Vec<GaussianSphere> = b_colors
        .iter()
        .map(|c| GaussianSphere {
            center: transform.apply(&c.position),
            amplitude: c.amplitude,
            width: c.width,
        })
        .collect();
    for (i, ca) in a_colors.iter().enumerate() {
        let sphere_a = GaussianSphere::from(ca);
        for (cb, sphere_b) in b_colors.iter().zip(&posed) {
            if ca.color_type != cb.color_type {
                continue;
            }
            let v = pair_overlap(&sphere_a, sphere_b);
            per_query_atom[i] += v;
            by_type[ca.color_type.index()] += v;
        }
    }
    ColorOverlap {
        by_type,
        per_query_atom,
    }
}

/// Finds the rigid transform of `library` maximizing
/// `shape_overlap + w_color · Σ same-type color overlap` against `query`,
/// then reports every overlap volume at the winning pose.
///
/// Starting poses superpose Gaussian-mass centroids and align principal
/// axes (4 proper flips, plus 2 axis rolls for near-linear molecules, plus
/// any configured random starts); each is refined by gradient ascent with
/// backtracking. Ties keep the earliest start. Hydrogens never contribute
/// shape spheres.
pub fn best_overlay(
    query: &Molecule,
    query_colors: &[ColorAtom],
    library: &Molecule,
    library_colors: &[ColorAtom],
    config: &OverlayConfig,
) -> Result<OverlayResult, OverlayError> {
    let shape_a = shape_spheres(query);
    let shape_b = shape_spheres(library);
    if shape_a.is_empty() {
        return Err(OverlayError::NoHeavyAtoms(query.name.clone()));
    }
    if shape_b.is_empty() {
        return Err(OverlayError::NoHeavyAtoms(library.name.clone()));
    }

    let colors_a = group_by_type(query_colors);
    let colors_b = group_by_type(library_colors);

    let mut channels = vec![Channel {
        a: &shape_a,
        b: &shape_b,
        weight: 1.0,
    }];
    if config.w_color != 0.0 {
        for t in 0..6 {
            if !colors_a[t].is_empty() && !colors_b[t].is_empty() {
                channels.push(Channel {
                    a: &colors_a[t],
                    b: &colors_b[t],
                    weight: config.w_color,
                });
            }
        }
    }

    let query_frame = mass_frame(&shape_a);
    let library_frame = mass_frame(&shape_b);
    let starts = starting_poses(
        &query_frame,
        &library_frame,
        config.extra_random_starts,
        config.seed,
    );

    let mut best: Option<(f64, Pose)> = None;
    for start in starts {
        let refined = refine(&channels, start, config.max_iters);
        if !refined.objective.is_finite() {
            continue;
        }
        let replace = match &best {
            Some((best_value, _)) => refined.objective > *best_value,
            None => true,
        };
        if replace {
            best = Some((refined.objective, refined.pose));
        }
    }
    let Some((_, pose)) = best else {
        return Err(OverlayError::NonFinite {
            query: query.name.clone(),
            library: library.name.clone(),
        });
    };

    let transform = Transform::from_raw(pose.quat, pose.trans);
    let identity = Transform::identity();
    let cross = color_overlap(query_colors, library_colors, &transform);
    let self_a = color_overlap(query_colors, query_colors, &identity);
    let self_b = color_overlap(library_colors, library_colors, &identity);

    Ok(OverlayResult {
        transform,
        shape_oab: molecule_overlap(&shape_a, &shape_b, &transform),
        shape_oaa: molecule_overlap(&shape_a, &shape_a, &identity),
        shape_obb: molecule_overlap(&shape_b, &shape_b, &identity),
        color_oab_by_type: cross.by_type,
        color_oaa_by_type: self_a.by_type,
        color_obb_by_type: self_b.by_type,
        query_color_atom_overlaps: cross.per_query_atom,
    })
}

fn group_by_type(colors: &[ColorAtom]) -> [Vec<GaussianSphere>; 6] {
    let mut grouped: [Vec<GaussianSphere>; 6] = Default::default();
    for color in colors {
        grouped[color.color_type.index()].push(GaussianSphere::from(color));
    }
    grouped
}

/// The six color types in feature order — re-exported here because overlap
/// vectors are indexed by [`ColorType::index`].
pub fn color_type_order() -> [ColorType; 6] {
    ColorType::ALL
}
