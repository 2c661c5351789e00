//! Synthetic ground-truth factory: a canonical landmark phantom with a known
//! plane triple, corruption (pose, noise, occlusion), voxel phantoms with a
//! known standardizing transform, and training-shape generation for the toy
//! shape model.
//!
//! Axis semantics of the canonical frame: +x toward the anatomical right,
//! +y anterior, +z superior. The sagittal, coronal and axial planes are the
//! coordinate planes x=0, y=0, z=0 through the origin.

use nalgebra::{DVector, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::landmarks::{Landmark, LandmarkName, LandmarkSet, MODEL_NAMES};
use crate::planes::{assign_landmarks_lenient, PlaneAssignment, PlaneTriple};
use crate::transform::{standardizing_transform, RigidTransform, UnitQuaternion};
use crate::volume::{Volume, VolumeMeta};

/// Canonical landmark positions at scale 1, millimeters.
///
/// The coordinates are fixed constants constructed so that each plane's
/// assigned landmarks are exactly coplanar on the corresponding coordinate
/// plane and the orientation-fixing sign conventions hold.
pub const CANONICAL_POSITIONS: [(LandmarkName, [f64; 3]); 19] = {
    use LandmarkName::*;
    [
        (ExR, [22.0, -6.0, 14.0]),
        (ExL, [-22.0, -6.0, 14.0]),
        (EnR, [8.0, 0.0, 13.0]),
        (EnL, [-8.0, 0.0, 13.0]),
        (N, [0.0, 2.0, 18.0]),
        (AR, [9.0, 6.0, 0.0]),
        (AL, [-9.0, 6.0, 0.0]),
        (AcR, [7.0, 4.0, 0.0]),
        (AcL, [-7.0, 4.0, 0.0]),
        (Prn, [0.0, 14.0, 0.0]),
        (Sn, [0.0, 9.0, 0.0]),
        (ChR, [10.0, 0.0, -12.0]),
        (ChL, [-10.0, 0.0, -12.0]),
        (CphR, [3.0, 10.0, -8.0]),
        (CphL, [-3.0, 10.0, -8.0]),
        (Ls, [0.0, 11.0, -10.0]),
        (Li, [0.0, 10.0, -16.0]),
        (Sl, [0.0, 7.0, -22.0]),
        (Pg, [0.0, 0.0, -32.0]),
    ]
};

/// Rigid pose in physical millimeter space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseMm {
    pub rotation: UnitQuaternion,
    pub translation_mm: Vector3<f64>,
}

impl PoseMm {
    pub fn identity() -> Self {
        PoseMm {
            rotation: UnitQuaternion::identity(),
            translation_mm: Vector3::zeros(),
        }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.to_rotation() * p + self.translation_mm
    }
}

/// Seeded random pose: Euler angles uniform within `max_angle` radians,
/// translation components uniform within `max_shift_mm`.
pub fn random_pose_mm(seed: u64, max_angle: f64, max_shift_mm: f64) -> PoseMm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_pose_mm_with(&mut rng, max_angle, max_shift_mm)
}

pub fn random_pose_mm_with(rng: &mut ChaCha8Rng, max_angle: f64, max_shift_mm: f64) -> PoseMm {
    let roll = rng.gen_range(-max_angle..=max_angle);
    let pitch = rng.gen_range(-max_angle..=max_angle);
    let yaw = rng.gen_range(-max_angle..=max_angle);
    PoseMm {
        rotation: UnitQuaternion::from_euler_zyx(roll, pitch, yaw),
        translation_mm: Vector3::new(
            rng.gen_range(-max_shift_mm..=max_shift_mm),
            rng.gen_range(-max_shift_mm..=max_shift_mm),
            rng.gen_range(-max_shift_mm..=max_shift_mm),
        ),
    }
}

/// Emits the canonical phantom at the given scale together with its true
/// plane triple (axis-aligned normals, center at `scale * origin = 0`).
pub fn make_canonical_phantom(scale: f64) -> Result<(LandmarkSet, PlaneTriple)> {
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    let entries = CANONICAL_POSITIONS
        .iter()
        .map(|&(name, p)| Landmark {
            name,
            position: Some(Vector3::new(p[0], p[1], p[2]) * scale),
        })
        .collect();
    let set = LandmarkSet::new(entries)?;
    let triple = PlaneTriple::new(Vector3::x(), Vector3::y(), Vector3::z(), Vector3::zeros(), 0.0)?;
    Ok((set, triple))
}

/// Corruption recipe for a landmark phantom.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub seed: u64,
    /// Gestational-size scale factor applied to the canonical phantom.
    pub scale: f64,
    /// Isotropic landmark noise, millimeters.
    pub noise_sigma_mm: f64,
    /// Number of landmarks to hide, at most 15 (keeps >= 4 of 19 visible).
    pub hidden: usize,
    pub pose: PoseMm,
    /// In strict mode, hiding that leaves any plane with fewer than three
    /// points is an error rather than a silent degradation.
    pub strict: bool,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            seed: 0,
            scale: 1.0,
            noise_sigma_mm: 0.0,
            hidden: 0,
            pose: PoseMm::identity(),
            strict: true,
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Applies pose, noise and occlusion to a landmark set; deterministic per
/// seed. Hidden landmarks are chosen uniformly among the visible ones.
pub fn corrupt(set: &LandmarkSet, spec: &PhantomSpec) -> Result<LandmarkSet> {
    if spec.noise_sigma_mm < 0.0 {
        return Err(Error::InvalidArgument("noise sigma must be non-negative".into()));
    }
    if spec.hidden > 15 {
        return Err(Error::InvalidArgument(format!(
            "cannot hide {} landmarks, at most 15",
            spec.hidden
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = set.map_positions(|p| spec.pose.apply(&p));
    if spec.noise_sigma_mm > 0.0 {
        out = out.map_positions(|p| {
            p + Vector3::new(gaussian(&mut rng), gaussian(&mut rng), gaussian(&mut rng))
                * spec.noise_sigma_mm
        });
    }

    if spec.hidden > 0 {
        let mut visible: Vec<LandmarkName> = out.visible().map(|(n, _)| n).collect();
        if spec.hidden >= visible.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot hide {} of {} visible landmarks",
                spec.hidden,
                visible.len()
            )));
        }
        // Fisher-Yates prefix
        for i in 0..spec.hidden {
            let j = rng.gen_range(i..visible.len());
            visible.swap(i, j);
        }
        for name in &visible[..spec.hidden] {
            out.hide(*name);
        }
        if spec.strict {
            let (_, flagged) = assign_landmarks_lenient(&out, &PlaneAssignment::default());
            if !flagged.is_empty() {
                return Err(Error::InsufficientLandmarks {
                    planes: flagged.iter().map(|k| k.as_str().to_string()).collect(),
                });
            }
        }
    }
    Ok(out)
}

// Smooth asymmetric head density in the canonical frame: offset Gaussian
// blobs (head, nose, right cheek, upper-left marker, chin) with distinct
// amplitudes so no nonzero rotation maps the field onto itself.
fn head_density(p: &Vector3<f64>) -> f64 {
    let blob = |center: Vector3<f64>, semi: Vector3<f64>, amp: f64| -> f64 {
        let q = Vector3::new(
            (p.x - center.x) / semi.x,
            (p.y - center.y) / semi.y,
            (p.z - center.z) / semi.z,
        );
        amp * (-q.norm_squared()).exp()
    };
    blob(Vector3::new(0.0, 0.0, 0.0), Vector3::new(30.0, 34.0, 40.0), 100.0)
        + blob(Vector3::new(0.0, 30.0, 0.0), Vector3::new(7.0, 12.0, 7.0), 70.0)
        + blob(Vector3::new(17.0, 12.0, -9.0), Vector3::new(9.0, 9.0, 9.0), 45.0)
        + blob(Vector3::new(-11.0, 7.0, 19.0), Vector3::new(6.0, 6.0, 6.0), 60.0)
        + blob(Vector3::new(0.0, 9.0, -27.0), Vector3::new(8.0, 7.0, 10.0), 35.0)
}

/// Renders the asymmetric head phantom at the given pose into a centered
/// volume and returns it together with the transform that standardizes it.
///
/// The physical extent is fixed at about +/-64 mm regardless of `dims`
/// (spacing scales accordingly).
pub fn make_voxel_phantom(dims: [usize; 3], pose: &PoseMm) -> Result<(Volume, RigidTransform)> {
    if dims.iter().any(|&d| d == 0 || d > 256) {
        return Err(Error::InvalidArgument(format!("phantom dims {dims:?} out of range")));
    }
    let spacing = [
        128.0 / dims[0] as f64,
        128.0 / dims[1] as f64,
        128.0 / dims[2] as f64,
    ];
    let meta = VolumeMeta::centered(dims, spacing)?;
    let mut volume = Volume::zeros(meta.clone());
    let r_inv = pose.rotation.inverse().to_rotation();

    let mut idx = 0;
    for h in 0..dims[0] {
        for w in 0..dims[1] {
            for d in 0..dims[2] {
                let phys = meta.phys_from_index(Vector3::new(h as f64, w as f64, d as f64));
                let canonical = r_inv * (phys - pose.translation_mm);
                volume.samples_mut()[idx] = head_density(&canonical) as f32;
                idx += 1;
            }
        }
    }

    let r = pose.rotation.to_rotation();
    let triple = PlaneTriple::new(
        r * Vector3::x(),
        r * Vector3::y(),
        r * Vector3::z(),
        pose.translation_mm,
        0.0,
    )?;
    let transform = standardizing_transform(&triple, &meta)?;
    Ok((volume, transform))
}

/// Per-mode standard deviations of the training-shape generator, millimeters.
pub const GENERATOR_MODE_SD: [f64; 5] = [3.0, 2.0, 1.2, 0.8, 0.5];

/// Orthonormal deformation directions of the generator (fixed internal seed,
/// independent of the user-facing seed).
pub fn generator_modes(modes: usize) -> Result<Vec<DVector<f64>>> {
    if modes == 0 || modes > GENERATOR_MODE_SD.len() {
        return Err(Error::InvalidArgument(format!(
            "modes must be in 1..={}, got {modes}",
            GENERATOR_MODE_SD.len()
        )));
    }
    let n3 = 3 * MODEL_NAMES.len();
    let mut rng = ChaCha8Rng::seed_from_u64(0xFE7A_11);
    let mut dirs: Vec<DVector<f64>> = Vec::with_capacity(modes);
    while dirs.len() < modes {
        let mut v = DVector::from_fn(n3, |_, _| gaussian(&mut rng));
        for u in &dirs {
            let proj = u.dot(&v);
            v -= u * proj;
        }
        let norm = v.norm();
        if norm > 1e-6 {
            dirs.push(v / norm);
        }
    }
    Ok(dirs)
}

/// The canonical phantom flattened to a 3N-vector in model-name order.
pub fn canonical_shape_vector() -> DVector<f64> {
    let mut v = DVector::zeros(3 * CANONICAL_POSITIONS.len());
    for (i, &(_, p)) in CANONICAL_POSITIONS.iter().enumerate() {
        v[3 * i] = p[0];
        v[3 * i + 1] = p[1];
        v[3 * i + 2] = p[2];
    }
    v
}

/// Generated training set plus the generator's per-mode variances, for
/// validating PCA recovery.
pub struct TrainingShapes {
    pub shapes: Vec<DVector<f64>>,
    pub generator_variances: Vec<f64>,
}

/// Draws `count` aligned training shapes: canonical phantom plus Gaussian
/// coefficients along the fixed generator modes. A zero-coefficient draw is
/// the canonical phantom exactly.
pub fn make_training_shapes(count: usize, modes: usize, seed: u64) -> Result<TrainingShapes> {
    if count < modes + 1 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} shapes for {modes} modes",
            modes + 1
        )));
    }
    let dirs = generator_modes(modes)?;
    let base = canonical_shape_vector();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shapes = Vec::with_capacity(count);
    for _ in 0..count {
        let mut s = base.clone();
        for (k, dir) in dirs.iter().enumerate() {
            s += dir * (gaussian(&mut rng) * GENERATOR_MODE_SD[k]);
        }
        shapes.push(s);
    }
    Ok(TrainingShapes {
        shapes,
        generator_variances: GENERATOR_MODE_SD[..modes].iter().map(|s| s * s).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planes::{assign_landmarks, fit_orthogonal_planes, FitConfig, PlaneAssignment};
    use approx::assert_relative_eq;

    #[test]
    fn phantom_planes_are_exactly_coplanar() {
        let (set, triple) = make_canonical_phantom(1.0).unwrap();
        let points = assign_landmarks(&set, &PlaneAssignment::default()).unwrap();
        assert_eq!(points.counts(), [7, 5, 6]);
        for p in &points.sagittal {
            assert_eq!(p.x, 0.0);
        }
        for p in &points.coronal {
            assert_eq!(p.y, 0.0);
        }
        for p in &points.axial {
            assert_eq!(p.z, 0.0);
        }
        assert_eq!(triple.center, Vector3::zeros());
    }

    #[test]
    fn phantom_orientation_scores_are_positive() {
        use crate::planes::homogenize_normals;
        let (set, triple) = make_canonical_phantom(1.0).unwrap();
        let out = homogenize_normals(&triple, &set).unwrap();
        assert_eq!(out.flipped, [false; 3]);
        assert!(out.ties.is_empty());
        assert!(!out.handedness_repaired);
        assert_eq!(out.triple, triple);
    }

    #[test]
    fn phantom_fit_self_consistency() {
        let (set, truth) = make_canonical_phantom(1.0).unwrap();
        let points = assign_landmarks(&set, &PlaneAssignment::default()).unwrap();
        let fitted = fit_orthogonal_planes(&points, &FitConfig::default()).unwrap();
        assert!(fitted.residual < 1e-8, "residual {}", fitted.residual);
        assert_relative_eq!(fitted.center, truth.center, epsilon = 1e-6);
        for (f, t) in [
            (fitted.normal_s, truth.normal_s),
            (fitted.normal_c, truth.normal_c),
            (fitted.normal_a, truth.normal_a),
        ] {
            assert!(f.dot(&t).abs() > 1.0 - 1e-9);
        }
    }

    #[test]
    fn phantom_scales_similarly() {
        let (s1, _) = make_canonical_phantom(1.0).unwrap();
        let (s2, _) = make_canonical_phantom(2.0).unwrap();
        for (a, b) in s1.visible().zip(s2.visible()) {
            assert_relative_eq!(a.1 * 2.0, b.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn corrupt_is_deterministic_and_identity_safe() {
        let (set, _) = make_canonical_phantom(1.0).unwrap();
        let spec = PhantomSpec::default();
        let out = corrupt(&set, &spec).unwrap();
        assert_eq!(out, set);

        let spec = PhantomSpec {
            seed: 42,
            noise_sigma_mm: 0.7,
            hidden: 3,
            pose: random_pose_mm(42, 0.3, 5.0),
            ..PhantomSpec::default()
        };
        let a = corrupt(&set, &spec).unwrap();
        let b = corrupt(&set, &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.visible_count(), 16);
    }

    #[test]
    fn corrupt_noise_statistics() {
        let (set, _) = make_canonical_phantom(1.0).unwrap();
        let sigma = 0.5;
        let mut sq_sum = 0.0;
        let mut n = 0usize;
        for seed in 0..200 {
            let spec = PhantomSpec {
                seed,
                noise_sigma_mm: sigma,
                ..PhantomSpec::default()
            };
            let noisy = corrupt(&set, &spec).unwrap();
            for (orig, pert) in set.visible().zip(noisy.visible()) {
                let d = pert.1 - orig.1;
                sq_sum += d.norm_squared();
                n += 3;
            }
        }
        let sd = (sq_sum / n as f64).sqrt();
        assert!((sd - sigma).abs() / sigma < 0.05, "sd = {sd}");
    }

    #[test]
    fn corrupt_strict_mode_rejects_overthinned_planes() {
        let (set, _) = make_canonical_phantom(1.0).unwrap();
        // hiding 15 leaves only 4 visible: some plane must drop below 3
        let mut failed = false;
        for seed in 0..10 {
            let spec = PhantomSpec { seed, hidden: 15, ..PhantomSpec::default() };
            if corrupt(&set, &spec).is_err() {
                failed = true;
            }
        }
        assert!(failed);
        let spec = PhantomSpec { hidden: 16, ..PhantomSpec::default() };
        assert!(corrupt(&set, &spec).is_err());
    }

    #[test]
    fn voxel_phantom_identity_round_trip() {
        use crate::resample::standardize_volume;
        let (volume, transform) = make_voxel_phantom([32, 32, 32], &PoseMm::identity()).unwrap();
        let r = transform.rotation.to_rotation();
        assert_relative_eq!(r, nalgebra::Matrix3::identity(), epsilon = 1e-12);
        assert_relative_eq!(transform.translation, Vector3::zeros(), epsilon = 1e-12);
        let (out, _) = standardize_volume(&volume, &transform).unwrap();
        for (a, b) in out.samples().iter().zip(volume.samples()) {
            assert_relative_eq!(*a, *b, epsilon = 1e-4);
        }
    }

    #[test]
    fn training_shapes_zero_draw_is_canonical() {
        let ts = make_training_shapes(10, 3, 1).unwrap();
        assert_eq!(ts.shapes.len(), 10);
        assert_eq!(ts.shapes[0].len(), 57);
        // reconstruct by hand with zero coefficients
        let base = canonical_shape_vector();
        let dirs = generator_modes(3).unwrap();
        let mut zero = base.clone();
        for d in &dirs {
            zero += d * 0.0;
        }
        assert_eq!(zero, base);
        assert!(make_training_shapes(3, 3, 1).is_err());
    }

    #[test]
    fn generator_modes_are_orthonormal() {
        let dirs = generator_modes(4).unwrap();
        for (i, a) in dirs.iter().enumerate() {
            assert_relative_eq!(a.norm(), 1.0, epsilon = 1e-12);
            for b in &dirs[..i] {
                assert!(a.dot(b).abs() < 1e-12);
            }
        }
    }
}
