//! Gaussian sphere primitives and closed-form overlap volumes.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::colorff::ColorAtom;
use crate::mol::Molecule;

/// Gaussian amplitude shared by every shape sphere.
pub const SHAPE_AMPLITUDE: f64 = 2.70;

/// Pairs whose exponent `k·d²` exceeds this contribute < 1e-17 Å³ and are
/// skipped in molecule-level sums (pair_overlap itself never truncates).
const EXPONENT_CUTOFF: f64 = 40.0;

/// Width parameter α (Å⁻²) for a Gaussian of amplitude `p` whose isolated
/// volume `p·(π/α)^(3/2)` equals the hard-sphere volume `(4/3)·π·R³`.
pub fn gaussian_width(amplitude: f64, radius: f64) -> f64 {
    PI * (3.0 * amplitude / (4.0 * PI * radius.powi(3))).powf(2.0 / 3.0)
}

/// A single 3D Gaussian `p·exp(−α·|r−c|²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSphere {
    pub center: Vector3<f64>,
    /// Amplitude p (dimensionless), > 0.
    pub amplitude: f64,
    /// Width α (Å⁻²), > 0.
    pub width: f64,
}

impl GaussianSphere {
    /// Sphere of the given hard-sphere radius with the default amplitude.
    pub fn from_radius(center: Vector3<f64>, radius: f64) -> Self {
        GaussianSphere {
            center,
            amplitude: SHAPE_AMPLITUDE,
            width: gaussian_width(SHAPE_AMPLITUDE, radius),
        }
    }

    /// Volume of the isolated Gaussian, `p·(π/α)^(3/2)`.
    pub fn isolated_volume(&self) -> f64 {
        self.amplitude * (PI / self.width).powf(1.5)
    }
}

impl From<&ColorAtom> for GaussianSphere {
    fn from(color: &ColorAtom) -> Self {
        GaussianSphere {
            center: color.position,
            amplitude: color.amplitude,
            width: color.width,
        }
    }
}

/// Shape spheres for a molecule: one Gaussian per heavy atom, parametrized
/// by its van der Waals radius. Hydrogens are excluded.
pub fn shape_spheres(molecule: &Molecule) -> Vec<GaussianSphere> {
    molecule
        .atoms
        .iter()
        .filter(|a| !a.is_hydrogen)
        .map(|a| GaussianSphere::from_radius(a.position, a.vdw_radius))
        .collect()
}

/// Closed-form overlap volume of two Gaussians:
/// `p₁·p₂·(π/(α₁+α₂))^(3/2)·exp(−(α₁·α₂/(α₁+α₂))·d²)`.
pub fn pair_overlap(g1: &GaussianSphere, g2: &GaussianSphere) -> f64 {
    let width_sum = g1.width + g2.width;
    let k = g1.width * g2.width / width_sum;
    let d2 = (g1.center - g2.center).norm_squared();
    g1.amplitude * g2.amplitude * (PI / width_sum).powf(1.5) * (-k * d2).exp()
}

/// First-order overlap of two sphere sets with `b` rotated then translated:
/// `Σᵢ Σⱼ pair_overlap(aᵢ, R·bⱼ + T)`. Self-overlap is the same sum with
/// `a = b` at the identity (diagonal terms included).
pub(crate) fn sum_overlap(
    a: &[GaussianSphere],
    b: &[GaussianSphere],
    rotation: &Matrix3<f64>,
    translation: &Vector3<f64>,
) -> f64 {
    let mut total = 0.0;
    for gb in b {
        let center_b = rotation * gb.center + translation;
        for ga in a {
            let width_sum = ga.width + gb.width;
            let k = ga.width * gb.width / width_sum;
            let d2 = (ga.center - center_b).norm_squared();
            let exponent = k * d2;
            if exponent > EXPONENT_CUTOFF {
                continue;
            }
            total +=
                ga.amplitude * gb.amplitude * (PI / width_sum).powf(1.5) * (-exponent).exp();
        }
    }
    total
}

/// Accumulates the gradient of `weight · sum_overlap(a, b, R(q), T)` into
/// `grad` — the first 4 slots are the derivative with respect to the
/// (unnormalized-quaternion) rotation parameters computed at the unit
/// quaternion, the last 3 the translation derivative. `rotation_derivs` are
/// ∂R/∂q at that quaternion.
pub(crate) fn accumulate_gradient(
    a: &[GaussianSphere],
    b: &[GaussianSphere],
    rotation: &Matrix3<f64>,
    rotation_derivs: &[Matrix3<f64>; 4],
    translation: &Vector3<f64>,
    weight: f64,
    grad: &mut [f64; 7],
) {
    for gb in b {
        let center_b = rotation * gb.center + translation;
        let deriv_centers = [
            rotation_derivs[0] * gb.center,
            rotation_derivs[1] * gb.center,
            rotation_derivs[2] * gb.center,
            rotation_derivs[3] * gb.center,
        ];
        for ga in a {
            let width_sum = ga.width + gb.width;
            let k = ga.width * gb.width / width_sum;
            // v points from the transformed b-center to the a-center; the
            // overlap term is c·exp(−k·|v|²).
            let v = ga.center - center_b;
            let exponent = k * v.norm_squared();
            if exponent > EXPONENT_CUTOFF {
                continue;
            }
            let term =
                ga.amplitude * gb.amplitude * (PI / width_sum).powf(1.5) * (-exponent).exp();
            let common = weight * 2.0 * k * term;
            for m in 0..4 {
                grad[m] += common * v.dot(&deriv_centers[m]);
            }
            grad[4] += common * v.x;
            grad[5] += common * v.y;
            grad[6] += common * v.z;
        }
    }
}

/// Rotation matrix of the unit quaternion `[w, x, y, z]`.
pub(crate) fn rotation_matrix(q: &[f64; 4]) -> Matrix3<f64> {
    let [w, x, y, z] = *q;
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Component-wise derivatives ∂R/∂w, ∂R/∂x, ∂R/∂y, ∂R/∂z of the unit-
/// quaternion rotation matrix, evaluated at `q` treated as unconstrained.
pub(crate) fn rotation_matrix_derivatives(q: &[f64; 4]) -> [Matrix3<f64>; 4] {
    let [w, x, y, z] = *q;
    [
        Matrix3::new(0.0, -z, y, z, 0.0, -x, -y, x, 0.0) * 2.0,
        Matrix3::new(0.0, y, z, y, -2.0 * x, -w, z, w, -2.0 * x) * 2.0,
        Matrix3::new(-2.0 * y, x, w, x, 0.0, z, -w, z, -2.0 * y) * 2.0,
        Matrix3::new(-2.0 * z, -w, x, w, -2.0 * z, y, x, y, 0.0) * 2.0,
    ]
}
