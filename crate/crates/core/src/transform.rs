//! Rotation and rigid-transform algebra.
//!
//! Rotations are carried as unit quaternions with a canonical sign
//! (non-negative scalar part), translations as 3-vectors in normalized
//! `[-1, 1]` volume coordinates. A [`RigidTransform`] is the affine map a
//! grid sampler consumes: `input = R * output + t` on normalized grid
//! coordinates.

use nalgebra::{Matrix3, Matrix3x4, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::planes::PlaneTriple;
use crate::volume::{self, VolumeMeta};

/// Unit quaternion `(q0, q1, q2, q3) = (w, x, y, z)`, canonical-signed:
/// `q0 >= 0`, and when `q0 == 0` the first nonzero component is positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    q: [f64; 4],
}

impl UnitQuaternion {
    pub fn identity() -> Self {
        UnitQuaternion { q: [1.0, 0.0, 0.0, 0.0] }
    }

    /// Normalizes and canonicalizes the given components.
    pub fn new(q0: f64, q1: f64, q2: f64, q3: f64) -> Result<Self> {
        let norm = (q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3).sqrt();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "cannot normalize quaternion with norm {norm}"
            )));
        }
        Ok(Self::canonicalize([q0 / norm, q1 / norm, q2 / norm, q3 / norm]))
    }

    fn canonicalize(mut q: [f64; 4]) -> Self {
        let flip = if q[0] < 0.0 {
            true
        } else if q[0] == 0.0 {
            match q[1..].iter().find(|&&c| c != 0.0) {
                Some(&c) => c < 0.0,
                None => false,
            }
        } else {
            false
        };
        if flip {
            for c in &mut q {
                *c = -*c;
            }
        }
        // normalize away any -0.0 so canonical forms are bitwise stable
        for c in &mut q {
            if *c == 0.0 {
                *c = 0.0;
            }
        }
        UnitQuaternion { q }
    }

    pub fn components(&self) -> [f64; 4] {
        self.q
    }

    pub fn w(&self) -> f64 {
        self.q[0]
    }

    /// Rotation matrix of this quaternion.
    pub fn to_rotation(&self) -> Matrix3<f64> {
        rotation_of_unit(&self.q)
    }

    /// Robust rotation-matrix to quaternion conversion using the largest
    /// diagonal pivot, valid for all rotations including 180-degree cases.
    pub fn from_rotation(r: &Matrix3<f64>) -> Result<Self> {
        check_rotation(r)?;
        let (m00, m01, m02) = (r[(0, 0)], r[(0, 1)], r[(0, 2)]);
        let (m10, m11, m12) = (r[(1, 0)], r[(1, 1)], r[(1, 2)]);
        let (m20, m21, m22) = (r[(2, 0)], r[(2, 1)], r[(2, 2)]);
        let trace = m00 + m11 + m22;
        let q = if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            [s / 4.0, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s]
        } else if m00 >= m11 && m00 >= m22 {
            let s = (1.0 + m00 - m11 - m22).sqrt() * 2.0;
            [(m21 - m12) / s, s / 4.0, (m01 + m10) / s, (m02 + m20) / s]
        } else if m11 >= m22 {
            let s = (1.0 + m11 - m00 - m22).sqrt() * 2.0;
            [(m02 - m20) / s, (m01 + m10) / s, s / 4.0, (m12 + m21) / s]
        } else {
            let s = (1.0 + m22 - m00 - m11).sqrt() * 2.0;
            [(m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, s / 4.0]
        };
        let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        Ok(Self::canonicalize([q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm]))
    }

    /// Hamilton product; `self * other` rotates by `other` first.
    pub fn mul(&self, other: &UnitQuaternion) -> UnitQuaternion {
        let [aw, ax, ay, az] = self.q;
        let [bw, bx, by, bz] = other.q;
        Self::canonicalize([
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ])
    }

    pub fn inverse(&self) -> UnitQuaternion {
        Self::canonicalize([self.q[0], -self.q[1], -self.q[2], -self.q[3]])
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.to_rotation() * v
    }

    /// Rotation angle between two quaternions, radians in `[0, pi]`.
    pub fn angle_to(&self, other: &UnitQuaternion) -> f64 {
        let dot: f64 = self.q.iter().zip(&other.q).map(|(a, b)| a * b).sum();
        2.0 * dot.abs().clamp(0.0, 1.0).acos()
    }

    /// Spherical linear interpolation from `self` (t=0) to `other` (t=1).
    pub fn slerp(&self, other: &UnitQuaternion, t: f64) -> UnitQuaternion {
        let mut dot: f64 = self.q.iter().zip(&other.q).map(|(a, b)| a * b).sum();
        let mut b = other.q;
        if dot < 0.0 {
            dot = -dot;
            for c in &mut b {
                *c = -*c;
            }
        }
        if dot > 1.0 - 1e-12 {
            // nearly parallel: linear blend
            let q = [
                self.q[0] + t * (b[0] - self.q[0]),
                self.q[1] + t * (b[1] - self.q[1]),
                self.q[2] + t * (b[2] - self.q[2]),
                self.q[3] + t * (b[3] - self.q[3]),
            ];
            return UnitQuaternion::new(q[0], q[1], q[2], q[3]).expect("nonzero blend");
        }
        let theta = dot.clamp(-1.0, 1.0).acos();
        let sin_theta = theta.sin();
        let wa = ((1.0 - t) * theta).sin() / sin_theta;
        let wb = (t * theta).sin() / sin_theta;
        Self::canonicalize([
            wa * self.q[0] + wb * b[0],
            wa * self.q[1] + wb * b[1],
            wa * self.q[2] + wb * b[2],
            wa * self.q[3] + wb * b[3],
        ])
    }

    /// Quaternion for intrinsic rotations about z, then y, then x axes
    /// (`R = Rz(yaw) * Ry(pitch) * Rx(roll)`), angles in radians.
    pub fn from_euler_zyx(roll: f64, pitch: f64, yaw: f64) -> UnitQuaternion {
        let qx = Self::canonicalize([(roll / 2.0).cos(), (roll / 2.0).sin(), 0.0, 0.0]);
        let qy = Self::canonicalize([(pitch / 2.0).cos(), 0.0, (pitch / 2.0).sin(), 0.0]);
        let qz = Self::canonicalize([(yaw / 2.0).cos(), 0.0, 0.0, (yaw / 2.0).sin()]);
        qz.mul(&qy).mul(&qx)
    }

    /// Euler angles `(roll, pitch, yaw)` such that
    /// `R = Rz(yaw) * Ry(pitch) * Rx(roll)` reproduces this rotation.
    pub fn to_euler_zyx(&self) -> (f64, f64, f64) {
        let r = self.to_rotation();
        let pitch = (-r[(2, 0)]).clamp(-1.0, 1.0).asin();
        let roll = r[(2, 1)].atan2(r[(2, 2)]);
        let yaw = r[(1, 0)].atan2(r[(0, 0)]);
        (roll, pitch, yaw)
    }
}

/// Rotation matrix of unit quaternion components `(w, x, y, z)`.
fn rotation_of_unit(q: &[f64; 4]) -> Matrix3<f64> {
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

fn check_rotation(r: &Matrix3<f64>) -> Result<()> {
    let gram = r.transpose() * r;
    let err = (gram - Matrix3::identity()).abs().max();
    if err > 1e-6 {
        return Err(Error::InvariantViolation(format!(
            "matrix is not orthonormal (max |R^T R - I| = {err:.3e})"
        )));
    }
    let det = r.determinant();
    if (det - 1.0).abs() > 1e-6 {
        return Err(Error::InvariantViolation(format!(
            "matrix is not a proper rotation (det = {det})"
        )));
    }
    Ok(())
}

/// Rotation matrix and its derivative with respect to the four raw
/// (not necessarily unit) quaternion components, chained through the
/// normalization `q / |q|`.
pub fn rotation_and_jacobian(q_raw: &[f64; 4]) -> (Matrix3<f64>, [Matrix3<f64>; 4]) {
    let norm = q_raw.iter().map(|c| c * c).sum::<f64>().sqrt();
    let qh = [q_raw[0] / norm, q_raw[1] / norm, q_raw[2] / norm, q_raw[3] / norm];
    let [w, x, y, z] = qh;
    let r = rotation_of_unit(&qh);

    // dR/d(unit components)
    let dr_dw = Matrix3::new(0.0, -z, y, z, 0.0, -x, -y, x, 0.0) * 2.0;
    let dr_dx = Matrix3::new(0.0, y, z, y, -2.0 * x, -w, z, w, -2.0 * x) * 2.0;
    let dr_dy = Matrix3::new(-2.0 * y, x, w, x, 0.0, z, -w, z, -2.0 * y) * 2.0;
    let dr_dz = Matrix3::new(-2.0 * z, -w, x, w, -2.0 * z, y, x, y, 0.0) * 2.0;
    let dr_dunit = [dr_dw, dr_dx, dr_dy, dr_dz];

    // chain: d(unit_m)/d(raw_k) = (delta_mk - qh_m qh_k) / norm
    let mut jac = [Matrix3::zeros(); 4];
    for (k, jk) in jac.iter_mut().enumerate() {
        let mut acc = Matrix3::zeros();
        for (m, dm) in dr_dunit.iter().enumerate() {
            let chain = (if m == k { 1.0 } else { 0.0 }) - qh[m] * qh[k];
            acc += dm * (chain / norm);
        }
        *jk = acc;
    }
    (r, jac)
}

/// Rigid transform on normalized grid coordinates: `p -> R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: UnitQuaternion,
    /// Translation in normalized `[-1, 1]` volume units.
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: UnitQuaternion, translation: Vector3<f64>) -> Self {
        RigidTransform { rotation, translation }
    }

    pub fn theta(&self) -> AffineTheta {
        AffineTheta::from_rigid(self)
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.to_rotation() * p + self.translation
    }
}

/// 3x4 affine matrix `[R | t]` consumed by the grid sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTheta {
    pub matrix: Matrix3x4<f64>,
}

impl AffineTheta {
    /// Single conversion path: the rotation block is exactly
    /// `rotation.to_rotation()`.
    pub fn from_rigid(t: &RigidTransform) -> Self {
        let r = t.rotation.to_rotation();
        let mut m = Matrix3x4::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t.translation);
        AffineTheta { matrix: m }
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.matrix.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.matrix.column(3).into_owned()
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation() * p + self.translation()
    }
}

/// Change-of-basis rotation whose rows are the plane normals
/// `(n_s^T; n_c^T; n_a^T)`. Errors if the triple is not a right-handed
/// orthonormal basis.
pub fn rotation_from_normals(triple: &PlaneTriple) -> Result<Matrix3<f64>> {
    let r = Matrix3::from_rows(&[
        triple.normal_s.transpose(),
        triple.normal_c.transpose(),
        triple.normal_a.transpose(),
    ]);
    check_rotation(&r)?;
    Ok(r)
}

// Axis swap between physical component order (h, w, d) and normalized grid
// component order (x, y, z) = (w, h, d).
fn swap_hw() -> Matrix3<f64> {
    Matrix3::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0)
}

/// Assembles the transform that standardizes a volume to the pose of the
/// given plane triple: sampling with the result places the sagittal, coronal
/// and axial planes on the H-, W- and D-center slices.
///
/// The rotation is the change-of-basis matrix conjugated by the physical/grid
/// component swap; the translation is the plane center in normalized volume
/// coordinates.
pub fn standardizing_transform(triple: &PlaneTriple, meta: &VolumeMeta) -> Result<RigidTransform> {
    let r_gt = rotation_from_normals(triple)?;
    let s = swap_hw();
    let r_theta = s * r_gt.transpose() * s;
    let rotation = UnitQuaternion::from_rotation(&r_theta)?;
    let translation = normalize_translation(&triple.center, meta);
    Ok(RigidTransform::new(rotation, translation))
}

/// Maps a physical millimeter point to normalized `[-1, 1]` coordinates.
/// Out-of-volume points yield values outside the range (never clamped).
pub fn normalize_translation(center_mm: &Vector3<f64>, meta: &VolumeMeta) -> Vector3<f64> {
    volume::normalized_from_phys(meta, *center_mm)
}

/// Exact inverse of [`normalize_translation`].
pub fn denormalize_translation(norm: &Vector3<f64>, meta: &VolumeMeta) -> Vector3<f64> {
    volume::phys_from_normalized(meta, *norm)
}

/// Composition `a ∘ b` (apply `b` first, then `a`).
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    let rotation = a.rotation.mul(&b.rotation);
    let translation = a.rotation.to_rotation() * b.translation + a.translation;
    RigidTransform { rotation, translation }
}

/// Affine inverse: `compose(a, invert(a))` is the identity.
pub fn invert(a: &RigidTransform) -> RigidTransform {
    let inv_rot = a.rotation.inverse();
    let translation = -(inv_rot.to_rotation() * a.translation);
    RigidTransform {
        rotation: inv_rot,
        translation,
    }
}

/// One refinement step of the cumulative estimate and the ground truth
/// expressed relative to it:
///
/// * accumulated: `R_acc' = R_acc * R_step`, `t_acc' = t_acc + t_step`
/// * relative GT: `R_rel' = R_step^-1 * R_rel`,
///   `t_rel' = R_acc^-1 * (t_rel - t_step)`
///
/// As step estimates approach the relative GT, the relative GT converges to
/// the identity.
pub fn cumulative_update(
    accumulated: &RigidTransform,
    step: &RigidTransform,
    relative_gt: &RigidTransform,
) -> (RigidTransform, RigidTransform) {
    let new_acc = RigidTransform {
        rotation: accumulated.rotation.mul(&step.rotation),
        translation: accumulated.translation + step.translation,
    };
    let acc_rot_inv = accumulated.rotation.inverse().to_rotation();
    let new_rel = RigidTransform {
        rotation: step.rotation.inverse().mul(&relative_gt.rotation),
        translation: acc_rot_inv * (relative_gt.translation - step.translation),
    };
    (new_acc, new_rel)
}

/// Random initialization pose: Euler angles uniform in +/-20 degrees,
/// normalized translation components uniform in +/-0.05. Deterministic for a
/// given seed.
pub fn random_init(seed: u64) -> RigidTransform {
    random_pose(seed, 20.0_f64.to_radians(), 0.05)
}

/// Seeded random pose with explicit bounds (angle in radians, translation in
/// normalized units).
pub fn random_pose(seed: u64, max_angle: f64, max_translation: f64) -> RigidTransform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_pose_with(&mut rng, max_angle, max_translation)
}

/// Same as [`random_pose`] but drawing from a caller-provided stream.
pub fn random_pose_with(rng: &mut ChaCha8Rng, max_angle: f64, max_translation: f64) -> RigidTransform {
    let roll = rng.gen_range(-max_angle..=max_angle);
    let pitch = rng.gen_range(-max_angle..=max_angle);
    let yaw = rng.gen_range(-max_angle..=max_angle);
    let t = Vector3::new(
        rng.gen_range(-max_translation..=max_translation),
        rng.gen_range(-max_translation..=max_translation),
        rng.gen_range(-max_translation..=max_translation),
    );
    RigidTransform {
        rotation: UnitQuaternion::from_euler_zyx(roll, pitch, yaw),
        translation: t,
    }
}

/// Uniformly distributed random rotation: a point rejection-sampled from the
/// unit 4-ball and projected to the sphere is uniform on S^3.
pub fn random_rotation_with(rng: &mut ChaCha8Rng) -> UnitQuaternion {
    loop {
        let q: [f64; 4] = [
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
        ];
        let norm2: f64 = q.iter().map(|c| c * c).sum();
        if norm2 > 1e-6 && norm2 <= 1.0 {
            return UnitQuaternion::new(q[0], q[1], q[2], q[3]).expect("nonzero norm");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_quaternion_round_trip() {
        let q = UnitQuaternion::identity();
        assert_eq!(q.components(), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(q.to_rotation(), Matrix3::identity());
        let back = UnitQuaternion::from_rotation(&Matrix3::identity()).unwrap();
        assert_eq!(back.components(), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn half_turn_about_x() {
        let r = Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0);
        let q = UnitQuaternion::from_rotation(&r).unwrap();
        assert_eq!(q.components(), [0.0, 1.0, 0.0, 0.0]);
        assert_relative_eq!(q.to_rotation(), r, epsilon = 1e-15);
    }

    #[test]
    fn canonical_sign_flips_negative_scalar() {
        let q = UnitQuaternion::new(-0.5, 0.5, 0.5, 0.5).unwrap();
        assert!(q.w() > 0.0);
        // q and -q are the same rotation
        let q2 = UnitQuaternion::new(0.5, -0.5, -0.5, -0.5).unwrap();
        assert_eq!(q.components(), q2.components());
    }

    #[test]
    fn canonical_sign_zero_scalar_tie_break() {
        let q = UnitQuaternion::new(0.0, -1.0, 0.0, 0.0).unwrap();
        assert_eq!(q.components(), [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn non_rotation_rejected() {
        let m = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0);
        assert!(UnitQuaternion::from_rotation(&m).is_err());
        assert!(UnitQuaternion::from_rotation(&(Matrix3::identity() * 2.0)).is_err());
    }

    #[test]
    fn mul_matches_matrix_product() {
        let a = UnitQuaternion::from_euler_zyx(0.3, -0.8, 1.2);
        let b = UnitQuaternion::from_euler_zyx(-1.0, 0.2, 0.5);
        let prod = a.mul(&b);
        assert_relative_eq!(
            prod.to_rotation(),
            a.to_rotation() * b.to_rotation(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn compose_and_invert() {
        let a = RigidTransform::new(
            UnitQuaternion::from_euler_zyx(0.4, 0.1, -0.7),
            Vector3::new(0.2, -0.1, 0.05),
        );
        let x = RigidTransform::new(
            UnitQuaternion::from_euler_zyx(-0.2, 0.9, 0.3),
            Vector3::new(-0.3, 0.4, 0.1),
        );
        let id = compose(&RigidTransform::identity(), &x);
        assert_relative_eq!(id.translation, x.translation, epsilon = 1e-15);
        assert_eq!(id.rotation.components(), x.rotation.components());

        let round = invert(&invert(&x));
        assert_relative_eq!(round.translation, x.translation, epsilon = 1e-12);
        assert!(round.rotation.angle_to(&x.rotation) < 1e-12);

        let closed = compose(&invert(&a), &a);
        assert!(closed.rotation.angle_to(&UnitQuaternion::identity()) < 1e-12);
        assert_relative_eq!(closed.translation, Vector3::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn cumulative_update_identity_step_is_noop() {
        let acc = RigidTransform::new(
            UnitQuaternion::from_euler_zyx(0.1, 0.2, 0.3),
            Vector3::new(0.01, 0.02, 0.03),
        );
        let gt = RigidTransform::new(
            UnitQuaternion::from_euler_zyx(-0.4, 0.5, 0.6),
            Vector3::new(0.1, -0.2, 0.3),
        );
        let (new_acc, new_gt) = cumulative_update(&acc, &RigidTransform::identity(), &gt);
        assert_eq!(new_acc.rotation.components(), acc.rotation.components());
        assert_relative_eq!(new_acc.translation, acc.translation, epsilon = 1e-15);
        assert_eq!(new_gt.rotation.components(), gt.rotation.components());
        // translation is re-expressed in the accumulated frame, not identical
        let back = acc.rotation.to_rotation() * new_gt.translation;
        assert_relative_eq!(back, gt.translation, epsilon = 1e-12);
    }

    #[test]
    fn cumulative_update_exact_step_closes_rotation() {
        let acc = RigidTransform::new(
            UnitQuaternion::from_euler_zyx(0.3, -0.1, 0.2),
            Vector3::new(0.02, 0.0, -0.01),
        );
        let gt = RigidTransform::new(
            UnitQuaternion::from_euler_zyx(0.5, 0.4, -0.3),
            Vector3::new(0.07, -0.04, 0.02),
        );
        let step = RigidTransform::new(gt.rotation, gt.translation);
        let (_, new_gt) = cumulative_update(&acc, &step, &gt);
        let err = (new_gt.rotation.to_rotation() - Matrix3::identity()).abs().max();
        assert!(err < 1e-12, "relative GT rotation not closed: {err:e}");
        assert_relative_eq!(new_gt.translation, Vector3::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn slerp_thirds_compose_to_whole() {
        let target = UnitQuaternion::from_euler_zyx(0.9, -0.5, 1.4);
        let third = UnitQuaternion::identity().slerp(&target, 1.0 / 3.0);
        let total = third.mul(&third).mul(&third);
        assert!(total.angle_to(&target) < 1e-10);
    }

    #[test]
    fn random_init_is_deterministic_and_bounded() {
        let a = random_init(7);
        let b = random_init(7);
        assert_eq!(a.rotation.components(), b.rotation.components());
        assert_eq!(a.translation, b.translation);
        assert_ne!(
            random_init(8).rotation.components(),
            a.rotation.components()
        );
        let bound = 20.0_f64.to_radians() + 1e-9;
        for seed in 0..500 {
            let t = random_init(seed);
            let (roll, pitch, yaw) = t.rotation.to_euler_zyx();
            assert!(roll.abs() <= bound && pitch.abs() <= bound && yaw.abs() <= bound);
            assert!(t.translation.amax() <= 0.05);
        }
    }

    #[test]
    fn normalize_translation_conventions() {
        let meta = VolumeMeta::new([9, 5, 3], [1.0; 3], [0.0; 3]).unwrap();
        // volume midpoint index -> all zeros
        let mid = meta.phys_from_index(Vector3::new(4.0, 2.0, 1.0));
        assert_relative_eq!(
            normalize_translation(&mid, &meta),
            Vector3::zeros(),
            epsilon = 1e-15
        );
        // voxel index 0 on the h axis -> -1 on the y component
        let edge = meta.phys_from_index(Vector3::new(0.0, 2.0, 1.0));
        let n = normalize_translation(&edge, &meta);
        assert_relative_eq!(n, Vector3::new(0.0, -1.0, 0.0), epsilon = 1e-15);
        // round trip
        let p = Vector3::new(3.25, 1.5, 0.75);
        let back = denormalize_translation(&normalize_translation(&p, &meta), &meta);
        assert_relative_eq!(back, p, epsilon = 1e-9);
    }

    #[test]
    fn euler_round_trip() {
        for seed in 0..50 {
            let t = random_pose(seed, std::f64::consts::FRAC_PI_2 * 0.9, 0.0);
            let (r, p, y) = t.rotation.to_euler_zyx();
            let back = UnitQuaternion::from_euler_zyx(r, p, y);
            let err = (back.to_rotation() - t.rotation.to_rotation()).abs().max();
            assert!(err < 1e-12, "euler round trip error {err:e}");
        }
    }
}
