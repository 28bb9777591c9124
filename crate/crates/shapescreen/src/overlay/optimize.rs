//! Rigid-pose refinement: principal-axis starting poses followed by
//! gradient ascent with an Armijo backtracking line search.
//!
//! Poses are parametrized by 7 raw numbers — an unconstrained quaternion
//! (normalized whenever a rotation is built) plus a translation — so the
//! gradient of the normalized objective is the unconstrained gradient
//! projected onto the quaternion's tangent space and scaled by 1/|q|.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gaussian::{
    accumulate_gradient, rotation_matrix, rotation_matrix_derivatives, sum_overlap,
    GaussianSphere,
};

const ARMIJO_C: f64 = 1e-4;
const STEP_SHRINK: f64 = 0.5;
const STEP_GROW: f64 = 2.0;
const MAX_SHRINKS: u32 = 60;
const GRADIENT_TOL: f64 = 1e-8;
const RELATIVE_F_TOL: f64 = 1e-6;

/// One weighted overlap term of the objective (shape, or one color type).
pub(crate) struct Channel<'a> {
    pub a: &'a [GaussianSphere],
    pub b: &'a [GaussianSphere],
    pub weight: f64,
}

/// Raw pose parameters: unconstrained quaternion [w,x,y,z] + translation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Pose {
    pub quat: [f64; 4],
    pub trans: Vector3<f64>,
}

impl Pose {
    fn normalized(mut self) -> Pose {
        let norm = quat_norm(&self.quat);
        if norm > 0.0 {
            for c in &mut self.quat {
                *c /= norm;
            }
        } else {
            self.quat = [1.0, 0.0, 0.0, 0.0];
        }
        self
    }
}

fn quat_norm(q: &[f64; 4]) -> f64 {
    q.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn unit_quat(q: &[f64; 4]) -> ([f64; 4], f64) {
    let norm = quat_norm(q);
    ([q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm], norm)
}

pub(crate) fn objective_value(channels: &[Channel<'_>], pose: &Pose) -> f64 {
    let (unit, _) = unit_quat(&pose.quat);
    let rotation = rotation_matrix(&unit);
    channels
        .iter()
        .map(|ch| ch.weight * sum_overlap(ch.a, ch.b, &rotation, &pose.trans))
        .sum()
}

/// Gradient of the objective with respect to the raw 7 parameters: the
/// unconstrained quaternion gradient at q̂ is projected by (I − q̂q̂ᵀ)/|q|.
pub(crate) fn objective_gradient(channels: &[Channel<'_>], pose: &Pose) -> [f64; 7] {
    let (unit, norm) = unit_quat(&pose.quat);
    let rotation = rotation_matrix(&unit);
    let derivs = rotation_matrix_derivatives(&unit);
    let mut grad = [0.0; 7];
    for ch in channels {
        accumulate_gradient(
            ch.a,
            ch.b,
            &rotation,
            &derivs,
            &pose.trans,
            ch.weight,
            &mut grad,
        );
    }
    let radial: f64 = (0..4).map(|i| grad[i] * unit[i]).sum();
    for i in 0..4 {
        grad[i] = (grad[i] - radial * unit[i]) / norm;
    }
    grad
}

fn grad_norm(grad: &[f64; 7]) -> f64 {
    grad.iter().map(|g| g * g).sum::<f64>().sqrt()
}

fn pose_step(pose: &Pose, grad: &[f64; 7], step: f64) -> Pose {
    Pose {
        quat: [
            pose.quat[0] + step * grad[0],
            pose.quat[1] + step * grad[1],
            pose.quat[2] + step * grad[2],
            pose.quat[3] + step * grad[3],
        ],
        trans: pose.trans + step * Vector3::new(grad[4], grad[5], grad[6]),
    }
}

pub(crate) struct Refined {
    pub objective: f64,
    pub pose: Pose,
}

/// Maximizes the objective from one starting pose by gradient ascent.
///
/// Stops when the relative objective change drops below 1e-6, the gradient
/// norm drops below 1e-8, the line search stalls, or `max_iters` is hit.
pub(crate) fn refine(channels: &[Channel<'_>], start: Pose, max_iters: usize) -> Refined {
    let mut pose = start.normalized();
    let mut value = objective_value(channels, &pose);
    let mut step: Option<f64> = None;

    for _ in 0..max_iters {
        let grad = objective_gradient(channels, &pose);
        let gnorm = grad_norm(&grad);
        if gnorm < GRADIENT_TOL {
            break;
        }
        let mut s = step.unwrap_or(0.25 / gnorm.max(1e-12));
        let mut accepted = None;
        for _ in 0..=MAX_SHRINKS {
            let candidate = pose_step(&pose, &grad, s);
            let candidate_value = objective_value(channels, &candidate);
            if candidate_value.is_finite()
                && candidate_value >= value + ARMIJO_C * s * gnorm * gnorm
            {
                accepted = Some((candidate, candidate_value));
                break;
            }
            s *= STEP_SHRINK;
        }
        let Some((next_pose, next_value)) = accepted else {
            break; // line search stalled: local maximum within precision
        };
        let improvement = next_value - value;
        pose = next_pose.normalized();
        value = next_value;
        step = Some(s * STEP_GROW);
        if improvement.abs() < RELATIVE_F_TOL * value.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Refined {
        objective: value,
        pose,
    }
}

/// Gaussian-mass-weighted centroid and principal axes of a sphere set.
pub(crate) struct MassFrame {
    pub centroid: Vector3<f64>,
    /// Columns are the principal axes e1, e2, e3 (right-handed).
    pub axes: Matrix3<f64>,
    /// Second-moment eigenvalues, descending.
    pub eigenvalues: [f64; 3],
}

pub(crate) fn mass_frame(spheres: &[GaussianSphere]) -> MassFrame {
    let mut total_mass = 0.0;
    let mut weighted = Vector3::zeros();
    for s in spheres {
        let mass = s.isolated_volume();
        total_mass += mass;
        weighted += mass * s.center;
    }
    let centroid = weighted / total_mass;

    let mut moment = Matrix3::zeros();
    for s in spheres {
        let d = s.center - centroid;
        moment += s.isolated_volume() * d * d.transpose();
    }
    moment /= total_mass;

    if moment.norm() < 1e-12 {
        return MassFrame {
            centroid,
            axes: Matrix3::identity(),
            eigenvalues: [0.0; 3],
        };
    }

    let eigen = nalgebra::SymmetricEigen::new(moment);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let eigenvalues = [
        eigen.eigenvalues[order[0]],
        eigen.eigenvalues[order[1]],
        eigen.eigenvalues[order[2]],
    ];
    let e1 = fix_sign(eigen.eigenvectors.column(order[0]).into_owned());
    let e2 = fix_sign(eigen.eigenvectors.column(order[1]).into_owned());
    let e3 = e1.cross(&e2);
    MassFrame {
        centroid,
        axes: Matrix3::from_columns(&[e1, e2, e3]),
        eigenvalues,
    }
}

/// Flips an eigenvector so its largest-magnitude component is positive
/// (lowest index wins ties), giving a deterministic sign convention.
fn fix_sign(v: Vector3<f64>) -> Vector3<f64> {
    let mut best = 0;
    for i in 1..3 {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        -v
    } else {
        v
    }
}

fn is_linear(frame: &MassFrame) -> bool {
    frame.eigenvalues[0] > 1e-12 && frame.eigenvalues[1] <= 1e-9 * frame.eigenvalues[0]
}

/// Starting poses: the library's principal frame aligned onto the query's,
/// times the four proper axis flips; near-linear molecules add two rolls
/// (90° and 270°) about the aligned molecular axis; plus optional seeded
/// random rotations. Every start exactly superposes the mass centroids.
pub(crate) fn starting_poses(
    query_frame: &MassFrame,
    library_frame: &MassFrame,
    extra_random_starts: usize,
    seed: u64,
) -> Vec<Pose> {
    let flips = [
        Vector3::new(1.0, 1.0, 1.0),
        Vector3::new(1.0, -1.0, -1.0),
        Vector3::new(-1.0, 1.0, -1.0),
        Vector3::new(-1.0, -1.0, 1.0),
    ];
    let mut rotations: Vec<Matrix3<f64>> = flips
        .iter()
        .map(|f| query_frame.axes * Matrix3::from_diagonal(f) * library_frame.axes.transpose())
        .collect();

    if is_linear(query_frame) || is_linear(library_frame) {
        let axis = nalgebra::Unit::new_normalize(query_frame.axes.column(0).into_owned());
        let base = rotations[0];
        for angle in [std::f64::consts::FRAC_PI_2, 3.0 * std::f64::consts::FRAC_PI_2] {
            let roll = nalgebra::Rotation3::from_axis_angle(&axis, angle);
            rotations.push(roll.matrix() * base);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..extra_random_starts {
        rotations.push(random_rotation(&mut rng));
    }

    rotations
        .into_iter()
        .map(|r| Pose {
            quat: matrix_to_quat(&r),
            trans: query_frame.centroid - r * library_frame.centroid,
        })
        .collect()
}

/// Uniform random rotation via the subgroup algorithm.
pub(crate) fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    use std::f64::consts::TAU;
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    let u3: f64 = rng.gen();
    let q = [
        (1.0 - u1).sqrt() * (TAU * u2).sin(),
        (1.0 - u1).sqrt() * (TAU * u2).cos(),
        u1.sqrt() * (TAU * u3).sin(),
        u1.sqrt() * (TAU * u3).cos(),
    ];
    rotation_matrix(&q)
}

fn matrix_to_quat(matrix: &Matrix3<f64>) -> [f64; 4] {
    let rotation = nalgebra::Rotation3::from_matrix_unchecked(*matrix);
    let q = nalgebra::UnitQuaternion::from_rotation_matrix(&rotation);
    [q.w, q.i, q.j, q.k]
}
