//! Alignment losses and evaluation metrics: the grid loss with analytic
//! gradient, the aggregated rotation+translation loss, SO(3) geodesic and
//! plane-wise angular errors, translation errors and the paired t-test.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::planes::PlaneTriple;
use crate::resample::{grid_jacobian, SamplingGrid};
use crate::transform::{invert, rotation_and_jacobian, rotation_from_normals, RigidTransform};

/// Grid loss value and its gradient with respect to the estimated transform
/// parameters `(q0..q3, tx, ty, tz)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLoss {
    pub value: f64,
    pub grad_q: [f64; 4],
    pub grad_t: Vector3<f64>,
}

/// Mean absolute discrepancy between the estimated-transform grid and the
/// inverse-ground-truth grid, averaged over points and coordinates:
///
/// ```text
/// L = mean_i mean_xyz | T_es(g_i) - T_gt^-1(g_i) |
/// ```
///
/// Zero exactly when the estimate equals the inverse ground truth as an
/// affine map on the grid. The gradient uses subgradient 0 at kinks.
pub fn grid_loss(
    estimate: &RigidTransform,
    ground_truth: &RigidTransform,
    grid: &SamplingGrid,
) -> Result<GridLoss> {
    let q = estimate.rotation.components();
    grid_loss_raw(&q, &estimate.translation, ground_truth, grid)
}

/// Same as [`grid_loss`] with raw (possibly non-unit) quaternion components,
/// differentiated through the normalization. This is the form finite
/// differences perturb.
pub fn grid_loss_raw(
    q_raw: &[f64; 4],
    translation: &Vector3<f64>,
    ground_truth: &RigidTransform,
    grid: &SamplingGrid,
) -> Result<GridLoss> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("grid loss needs a nonempty grid".into()));
    }
    let (r_es, _) = rotation_and_jacobian(q_raw);
    let gt_inv = invert(ground_truth);
    let r_gt = gt_inv.rotation.to_rotation();
    let jac = grid_jacobian(grid, q_raw);

    let count = (grid.points.len() * 3) as f64;
    let mut value = 0.0;
    let mut grad = [0.0f64; 7];
    for (i, g) in grid.points.iter().enumerate() {
        let u = r_es * g + translation;
        let v = r_gt * g + gt_inv.translation;
        let diff = u - v;
        for c in 0..3 {
            value += diff[c].abs();
            let s = if diff[c] > 0.0 {
                1.0
            } else if diff[c] < 0.0 {
                -1.0
            } else {
                0.0
            };
            if s != 0.0 {
                for (p, gp) in grad.iter_mut().enumerate() {
                    *gp += s * jac.blocks[i][c][p];
                }
            }
        }
    }
    value /= count;
    for g in &mut grad {
        *g /= count;
    }
    Ok(GridLoss {
        value,
        grad_q: [grad[0], grad[1], grad[2], grad[3]],
        grad_t: Vector3::new(grad[4], grad[5], grad[6]),
    })
}

/// Ablation-style aggregated loss: `alpha * geodesic(R_es, R_gt^-1)` in
/// radians plus `beta * |t_es - t_gt^-1|` in normalized units.
pub fn aggregated_loss(
    estimate: &RigidTransform,
    ground_truth: &RigidTransform,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    if alpha < 0.0 || beta < 0.0 {
        return Err(Error::InvalidArgument("loss weights must be non-negative".into()));
    }
    let gt_inv = invert(ground_truth);
    let rot_rad = so3_geodesic_degrees(
        &estimate.rotation.to_rotation(),
        &gt_inv.rotation.to_rotation(),
    )
    .to_radians();
    let trans = (estimate.translation - gt_inv.translation).norm();
    Ok(alpha * rot_rad + beta * trans)
}

/// Geodesic distance on SO(3): `arccos((trace(R1^T R2) - 1) / 2)` in degrees.
pub fn so3_geodesic_degrees(r1: &Matrix3<f64>, r2: &Matrix3<f64>) -> f64 {
    let m = r1.transpose() * r2;
    let c = (m.trace() - 1.0) / 2.0;
    c.clamp(-1.0, 1.0).acos().to_degrees()
}

/// Angle between plane normals in degrees, sign-invariant (normals compared
/// up to orientation), in `[0, 90]`.
pub fn plane_angle_error_degrees(n1: &Vector3<f64>, n2: &Vector3<f64>) -> f64 {
    let c = n1.dot(n2).abs() / (n1.norm() * n2.norm());
    c.clamp(0.0, 1.0).acos().to_degrees()
}

/// Signed variant of the plane angle in `[0, 180]` degrees.
pub fn plane_angle_signed_degrees(n1: &Vector3<f64>, n2: &Vector3<f64>) -> f64 {
    let c = n1.dot(n2) / (n1.norm() * n2.norm());
    c.clamp(-1.0, 1.0).acos().to_degrees()
}

/// Euclidean distance between plane centers, millimeters.
pub fn translation_error_mm(c1: &Vector3<f64>, c2: &Vector3<f64>) -> f64 {
    (c1 - c2).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    /// Two-sided significance at p <= 0.01.
    pub significant: bool,
}

/// Two-sided paired t-test. `a` and `b` must have equal length >= 2. The
/// degenerate all-zero-difference case returns `t = 0, p = 1`; nonzero
/// differences with zero variance are an error.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least 2 pairs".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n as f64 - 1.0);
    if var == 0.0 {
        if mean == 0.0 {
            return Ok(TTest { t: 0.0, p: 1.0, significant: false });
        }
        return Err(Error::DegenerateInput(
            "paired differences have zero variance".into(),
        ));
    }
    let t = mean / (var.sqrt() / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map_err(|e| Error::InvalidArgument(format!("t distribution: {e}")))?;
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    let p = p.clamp(0.0, 1.0);
    Ok(TTest { t, p, significant: p <= 0.01 })
}

/// Evaluation report comparing two plane triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Geodesic rotation distance between the triple bases, degrees.
    pub so3_deg: f64,
    /// Per-plane normal angle errors (sagittal, coronal, axial), degrees,
    /// sign-invariant.
    pub plane_angle_deg: [f64; 3],
    /// Per-plane center offsets along the reference normals, millimeters.
    pub translation_mm: [f64; 3],
    /// Mean of the per-plane offsets.
    pub translation_mean_mm: f64,
    /// Euclidean distance between the triple centers.
    pub translation_euclidean_mm: f64,
    /// Grid loss between the standardizing transforms, when available.
    pub grid_loss: Option<f64>,
}

/// Builds the report for a predicted triple against a reference triple.
/// `grid_loss` stays empty when either triple is not a valid rotation basis.
pub fn evaluate_triples(
    predicted: &PlaneTriple,
    reference: &PlaneTriple,
    grid_loss_value: Option<f64>,
) -> Result<EvalReport> {
    let r1 = rotation_from_normals(predicted)?;
    let r2 = rotation_from_normals(reference)?;
    let delta = predicted.center - reference.center;
    let per_plane = [
        reference.normal_s.dot(&delta).abs(),
        reference.normal_c.dot(&delta).abs(),
        reference.normal_a.dot(&delta).abs(),
    ];
    Ok(EvalReport {
        so3_deg: so3_geodesic_degrees(&r1, &r2),
        plane_angle_deg: [
            plane_angle_error_degrees(&predicted.normal_s, &reference.normal_s),
            plane_angle_error_degrees(&predicted.normal_c, &reference.normal_c),
            plane_angle_error_degrees(&predicted.normal_a, &reference.normal_a),
        ],
        translation_mm: per_plane,
        translation_mean_mm: per_plane.iter().sum::<f64>() / 3.0,
        translation_euclidean_mm: delta.norm(),
        grid_loss: grid_loss_value,
    })
}
