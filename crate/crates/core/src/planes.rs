//! Fitting three mutually orthogonal anatomical planes with a shared center
//! to assigned landmarks, and sign-fixing the normals to the canonical
//! front-right pose.
//!
//! The objective is the weighted sum over planes of L1 point-plane distances
//!
//! ```text
//! f(k) = sum_j w_j sum_i | n_j . (p_{j,i} - c) |
//! ```
//!
//! subject to the normals forming an orthonormal basis. Instead of explicit
//! constraints, the normals are parameterized as the rows of a rotation
//! matrix from a unit quaternion, leaving an unconstrained 7-parameter
//! problem (quaternion + center). The non-smooth |x| is replaced by
//! `sqrt(x^2 + eps^2)`; a smoothing continuation (large eps first) widens the
//! basin of attraction before the final pass at the configured eps.

use nalgebra::{DVector, Matrix3, Vector3};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::landmarks::{LandmarkName, LandmarkSet};
use crate::optim;
use crate::transform::{random_rotation_with, rotation_and_jacobian};

/// One of the three anatomical planes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneKind {
    Sagittal,
    Coronal,
    Axial,
}

impl PlaneKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlaneKind::Sagittal => "sagittal",
            PlaneKind::Coronal => "coronal",
            PlaneKind::Axial => "axial",
        }
    }
}

/// Landmark names assigned to each plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneAssignment {
    pub sagittal: Vec<LandmarkName>,
    pub coronal: Vec<LandmarkName>,
    pub axial: Vec<LandmarkName>,
}

impl Default for PlaneAssignment {
    fn default() -> Self {
        use LandmarkName::*;
        PlaneAssignment {
            sagittal: vec![N, Prn, Sn, Ls, Li, Sl, Pg],
            coronal: vec![ChR, ChL, EnR, EnL, Pg],
            axial: vec![AR, AL, AcR, AcL, Sn, Prn],
        }
    }
}

/// Visible landmark positions gathered per plane.
#[derive(Debug, Clone)]
pub struct AssignedPoints {
    pub sagittal: Vec<Vector3<f64>>,
    pub coronal: Vec<Vector3<f64>>,
    pub axial: Vec<Vector3<f64>>,
}

impl AssignedPoints {
    pub fn counts(&self) -> [usize; 3] {
        [self.sagittal.len(), self.coronal.len(), self.axial.len()]
    }

    fn plane(&self, kind: PlaneKind) -> &[Vector3<f64>] {
        match kind {
            PlaneKind::Sagittal => &self.sagittal,
            PlaneKind::Coronal => &self.coronal,
            PlaneKind::Axial => &self.axial,
        }
    }
}

/// Three orthonormal plane normals with their shared center.
///
/// Invariants: unit normals, pairwise orthogonal, right-handed
/// (`det [n_s n_c n_a] = +1`). `residual` is the fit objective evaluated
/// with the true absolute value.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneTriple {
    pub normal_s: Vector3<f64>,
    pub normal_c: Vector3<f64>,
    pub normal_a: Vector3<f64>,
    /// Shared plane center, millimeters.
    pub center: Vector3<f64>,
    pub residual: f64,
}

impl PlaneTriple {
    pub fn new(
        normal_s: Vector3<f64>,
        normal_c: Vector3<f64>,
        normal_a: Vector3<f64>,
        center: Vector3<f64>,
        residual: f64,
    ) -> Result<Self> {
        let t = PlaneTriple { normal_s, normal_c, normal_a, center, residual };
        t.validate()?;
        Ok(t)
    }

    /// Builds without checking invariants (e.g. to probe invalid data).
    pub fn new_unchecked(
        normal_s: Vector3<f64>,
        normal_c: Vector3<f64>,
        normal_a: Vector3<f64>,
        center: Vector3<f64>,
        residual: f64,
    ) -> Self {
        PlaneTriple { normal_s, normal_c, normal_a, center, residual }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("sagittal", &self.normal_s),
            ("coronal", &self.normal_c),
            ("axial", &self.normal_a),
        ] {
            if (n.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvariantViolation(format!(
                    "{name} normal is not unit length (|n| = {})",
                    n.norm()
                )));
            }
        }
        for (a, b, what) in [
            (&self.normal_s, &self.normal_c, "sagittal/coronal"),
            (&self.normal_s, &self.normal_a, "sagittal/axial"),
            (&self.normal_c, &self.normal_a, "coronal/axial"),
        ] {
            if a.dot(b).abs() > 1e-8 {
                return Err(Error::InvariantViolation(format!(
                    "{what} normals are not orthogonal (dot = {})",
                    a.dot(b)
                )));
            }
        }
        let det = self.basis().determinant();
        if (det - 1.0).abs() > 1e-8 {
            return Err(Error::InvariantViolation(format!(
                "plane normals are not right-handed (det = {det})"
            )));
        }
        Ok(())
    }

    /// Matrix with the normals as columns `[n_s n_c n_a]`.
    pub fn basis(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&[self.normal_s, self.normal_c, self.normal_a])
    }

    pub fn normal(&self, kind: PlaneKind) -> Vector3<f64> {
        match kind {
            PlaneKind::Sagittal => self.normal_s,
            PlaneKind::Coronal => self.normal_c,
            PlaneKind::Axial => self.normal_a,
        }
    }
}

/// Plane-fit configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Per-plane objective weights `(w_s, w_c, w_a)`.
    pub weights: [f64; 3],
    /// Final smoothing width of the absolute value, millimeters.
    pub epsilon: f64,
    pub restarts: usize,
    /// Iteration cap per optimizer stage.
    pub max_iterations: usize,
    /// Relative gradient tolerance of the optimizer.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            weights: [1.0 / 3.0; 3],
            epsilon: 1e-6,
            restarts: 8,
            max_iterations: 400,
            tolerance: 1e-10,
            seed: 0,
        }
    }
}

fn collinear(points: &[Vector3<f64>]) -> bool {
    if points.len() < 3 {
        return true;
    }
    let centroid = points.iter().sum::<Vector3<f64>>() / points.len() as f64;
    let mut scatter = Matrix3::zeros();
    for p in points {
        let q = p - centroid;
        scatter += q * q.transpose();
    }
    let eig = scatter.symmetric_eigen();
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    // second moment vanishing relative to the first means a line
    ev[1] <= 1e-12 * ev[0].max(1.0)
}

/// Gathers visible assigned landmark positions per plane; errors on any plane
/// with fewer than three non-collinear points.
pub fn assign_landmarks(set: &LandmarkSet, assignment: &PlaneAssignment) -> Result<AssignedPoints> {
    let (points, flagged) = assign_landmarks_lenient(set, assignment);
    if flagged.is_empty() {
        Ok(points)
    } else {
        Err(Error::InsufficientLandmarks {
            planes: flagged.iter().map(|k| k.as_str().to_string()).collect(),
        })
    }
}

/// Lenient variant: returns the gathered points together with the set of
/// planes that cannot be estimated (fewer than three non-collinear points).
pub fn assign_landmarks_lenient(
    set: &LandmarkSet,
    assignment: &PlaneAssignment,
) -> (AssignedPoints, Vec<PlaneKind>) {
    let gather = |names: &[LandmarkName]| -> Vec<Vector3<f64>> {
        names.iter().filter_map(|&n| set.position(n)).collect()
    };
    let points = AssignedPoints {
        sagittal: gather(&assignment.sagittal),
        coronal: gather(&assignment.coronal),
        axial: gather(&assignment.axial),
    };
    let mut flagged = Vec::new();
    for kind in [PlaneKind::Sagittal, PlaneKind::Coronal, PlaneKind::Axial] {
        if collinear(points.plane(kind)) {
            flagged.push(kind);
        }
    }
    (points, flagged)
}

struct FitProblem<'a> {
    points: &'a AssignedPoints,
    weights: [f64; 3],
}

impl FitProblem<'_> {
    /// Smoothed objective and gradient at params `[q0..q3, c0..c2]`.
    fn eval(&self, x: &DVector<f64>, grad: &mut DVector<f64>, eps: f64) -> f64 {
        let q = [x[0], x[1], x[2], x[3]];
        let c = Vector3::new(x[4], x[5], x[6]);
        let (r, dr) = rotation_and_jacobian(&q);
        let mut f = 0.0;
        grad.fill(0.0);
        for (j, kind) in [PlaneKind::Sagittal, PlaneKind::Coronal, PlaneKind::Axial]
            .into_iter()
            .enumerate()
        {
            let w = self.weights[j];
            let n = r.row(j).transpose();
            for p in self.points.plane(kind) {
                let v = p - c;
                let d = n.dot(&v);
                let smooth = (d * d + eps * eps).sqrt();
                f += w * smooth;
                let scale = w * d / smooth;
                for (k, drk) in dr.iter().enumerate() {
                    grad[k] += scale * drk.row(j).transpose().dot(&v);
                }
                let gc = -n * scale;
                grad[4] += gc[0];
                grad[5] += gc[1];
                grad[6] += gc[2];
            }
        }
        f
    }

    /// Objective with the true absolute value (the reported residual).
    fn residual(&self, r: &Matrix3<f64>, c: &Vector3<f64>) -> f64 {
        let mut f = 0.0;
        for (j, kind) in [PlaneKind::Sagittal, PlaneKind::Coronal, PlaneKind::Axial]
            .into_iter()
            .enumerate()
        {
            let n = r.row(j).transpose();
            for p in self.points.plane(kind) {
                f += self.weights[j] * n.dot(&(p - c)).abs();
            }
        }
        f
    }

    /// Gauss-Newton polish of a near-interpolating solution: minimizes the
    /// weighted squared distances, whose minimizer coincides with the L1 one
    /// when all residuals can be driven to zero. Kept only if it does not
    /// increase the true objective.
    fn polish(&self, x: &mut DVector<f64>) {
        let n_res: usize =
            self.points.sagittal.len() + self.points.coronal.len() + self.points.axial.len();
        let mut lambda = 1e-9;
        for _ in 0..25 {
            let q = [x[0], x[1], x[2], x[3]];
            let c = Vector3::new(x[4], x[5], x[6]);
            let (r, dr) = rotation_and_jacobian(&q);
            let mut jt_j = nalgebra::DMatrix::<f64>::zeros(7, 7);
            let mut jt_r = DVector::<f64>::zeros(7);
            let mut sum_sq = 0.0;
            for (j, kind) in [PlaneKind::Sagittal, PlaneKind::Coronal, PlaneKind::Axial]
                .into_iter()
                .enumerate()
            {
                let sw = self.weights[j].sqrt();
                let n = r.row(j).transpose();
                for p in self.points.plane(kind) {
                    let v = p - c;
                    let res = sw * n.dot(&v);
                    sum_sq += res * res;
                    let mut row = DVector::<f64>::zeros(7);
                    for (k, drk) in dr.iter().enumerate() {
                        row[k] = sw * drk.row(j).transpose().dot(&v);
                    }
                    let gc = -n * sw;
                    row[4] = gc[0];
                    row[5] = gc[1];
                    row[6] = gc[2];
                    jt_j += &row * row.transpose();
                    jt_r += &row * res;
                }
            }
            if sum_sq < 1e-28 * n_res as f64 {
                break;
            }
            let mut step = None;
            for _ in 0..12 {
                let damped = &jt_j + nalgebra::DMatrix::identity(7, 7) * lambda;
                if let Some(chol) = damped.cholesky() {
                    let delta = chol.solve(&(-&jt_r));
                    let x_new = &*x + &delta;
                    let q2 = [x_new[0], x_new[1], x_new[2], x_new[3]];
                    let c2 = Vector3::new(x_new[4], x_new[5], x_new[6]);
                    let (r2, _) = rotation_and_jacobian(&q2);
                    let mut s2 = 0.0;
                    for (j, kind) in [PlaneKind::Sagittal, PlaneKind::Coronal, PlaneKind::Axial]
                        .into_iter()
                        .enumerate()
                    {
                        let n2 = r2.row(j).transpose();
                        for p in self.points.plane(kind) {
                            let res = self.weights[j].sqrt() * n2.dot(&(p - c2));
                            s2 += res * res;
                        }
                    }
                    if s2 < sum_sq {
                        step = Some(x_new);
                        lambda = (lambda * 0.1).max(1e-12);
                        break;
                    }
                }
                lambda *= 10.0;
            }
            match step {
                Some(x_new) => *x = x_new,
                None => break,
            }
        }
    }
}

/// Exact orthonormalization by polar projection (nearest rotation in the
/// Frobenius sense), preserving handedness.
fn polar_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let d = (u * v_t).determinant();
    let fix = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d.signum()));
    u * fix * v_t
}

/// Fits the orthonormal plane triple to the assigned points.
///
/// Multi-start local optimization: `config.restarts` uniformly random
/// quaternion initializations, center always initialized at the centroid of
/// all visible landmarks; the lowest objective wins (ties broken by restart
/// index). The returned triple is exactly orthonormalized and carries the
/// true-L1 residual.
pub fn fit_orthogonal_planes(points: &AssignedPoints, config: &FitConfig) -> Result<PlaneTriple> {
    for (kind, pts) in [
        (PlaneKind::Sagittal, &points.sagittal),
        (PlaneKind::Coronal, &points.coronal),
        (PlaneKind::Axial, &points.axial),
    ] {
        if collinear(pts) {
            return Err(Error::InsufficientLandmarks {
                planes: vec![kind.as_str().to_string()],
            });
        }
    }
    if config.weights.iter().any(|&w| w < 0.0) {
        return Err(Error::InvalidArgument("plane weights must be non-negative".into()));
    }

    let all: Vec<Vector3<f64>> = points
        .sagittal
        .iter()
        .chain(&points.coronal)
        .chain(&points.axial)
        .copied()
        .collect();
    let centroid = all.iter().sum::<Vector3<f64>>() / all.len() as f64;
    // geometric scale of the configuration, used to normalize tolerances
    let spread = all
        .iter()
        .map(|p| (p - centroid).norm())
        .fold(0.0_f64, f64::max)
        .max(1.0);

    let problem = FitProblem { points, weights: config.weights };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // smoothing continuation: coarse-to-fine widths ending at the configured one
    let mut stages = vec![spread * 0.1, spread * 1e-3];
    stages.retain(|&e| e > config.epsilon);
    stages.push(config.epsilon);

    let grad_tol = config.tolerance * spread;
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut any_converged = false;
    for _restart in 0..config.restarts.max(1) {
        let q0 = random_rotation_with(&mut rng).components();
        let mut x = DVector::from_vec(vec![
            q0[0], q0[1], q0[2], q0[3], centroid[0], centroid[1], centroid[2],
        ]);
        let mut converged = true;
        for &eps in &stages {
            let out = optim::minimize(
                x,
                |p, g| problem.eval(p, g, eps),
                config.max_iterations,
                grad_tol,
            );
            x = out.x;
            converged = out.converged;
        }
        any_converged |= converged;

        let true_resid = |p: &DVector<f64>| {
            let (r, _) = rotation_and_jacobian(&[p[0], p[1], p[2], p[3]]);
            problem.residual(&r, &Vector3::new(p[4], p[5], p[6]))
        };
        let resid = true_resid(&x);
        // squared-distance polish, kept only when it does not hurt the L1 objective
        let mut x_polished = x.clone();
        problem.polish(&mut x_polished);
        let resid_polished = true_resid(&x_polished);
        let (resid, x) = if resid_polished <= resid {
            (resid_polished, x_polished)
        } else {
            (resid, x)
        };

        // strict < keeps the lowest restart index on ties
        if best.as_ref().map_or(true, |(f, _)| resid < *f) {
            best = Some((resid, x));
        }
    }

    let (resid, x) = best.expect("at least one restart");
    let q = [x[0], x[1], x[2], x[3]];
    let c = Vector3::new(x[4], x[5], x[6]);
    let (r_raw, _) = rotation_and_jacobian(&q);
    let r = polar_rotation(&r_raw);
    let resid = problem.residual(&r, &c).min(resid);

    let triple = PlaneTriple::new(
        r.row(0).transpose(),
        r.row(1).transpose(),
        r.row(2).transpose(),
        c,
        resid,
    )?;
    if !any_converged {
        return Err(Error::FitFailure { best_residual: triple.residual });
    }
    Ok(triple)
}

// Landmarks whose signed offset from each plane fixes the normal orientation
// toward the canonical front-right pose. Offsets of the "positive" names add
// to the orientation score, "negative" names subtract.
const SAGITTAL_POSITIVE: [LandmarkName; 6] = {
    use LandmarkName::*;
    [EnR, ExR, AR, Ls, AcR, ChR]
};
const SAGITTAL_NEGATIVE: [LandmarkName; 5] = {
    use LandmarkName::*;
    [EnL, ExL, AL, AcL, ChL]
};
const CORONAL_POSITIVE: [LandmarkName; 7] = {
    use LandmarkName::*;
    [Li, CphR, CphL, Prn, Sn, AcL, AcR]
};
const CORONAL_NEGATIVE: [LandmarkName; 2] = {
    use LandmarkName::*;
    [ExR, ExL]
};
const AXIAL_POSITIVE: [LandmarkName; 5] = {
    use LandmarkName::*;
    [EnR, ExR, N, EnL, ExL]
};
const AXIAL_NEGATIVE: [LandmarkName; 8] = {
    use LandmarkName::*;
    [Pg, Sl, Li, ChR, ChL, Ls, CphL, CphR]
};

/// Outcome of [`homogenize_normals`]: the sign-fixed triple plus what was
/// changed along the way.
#[derive(Debug, Clone)]
pub struct HomogenizeOutcome {
    pub triple: PlaneTriple,
    /// Which plane normals were flipped by the orientation rule.
    pub flipped: [bool; 3],
    /// Planes whose orientation score was exactly zero (normal kept as-is).
    pub ties: Vec<PlaneKind>,
    /// True when the axial normal had to be flipped to restore a
    /// right-handed basis after sign fixing.
    pub handedness_repaired: bool,
}

/// Fixes normal signs so the anatomy-side conventions hold: for each plane,
/// the score is the sum of signed offsets `(p - c) . n` of the visible
/// positive-list landmarks minus the negative-list ones; a negative score
/// flips the normal. If the sign fixing leaves a left-handed basis the axial
/// normal is flipped back (reported via `handedness_repaired`).
pub fn homogenize_normals(triple: &PlaneTriple, set: &LandmarkSet) -> Result<HomogenizeOutcome> {
    triple.validate()?;
    let mut normals = [triple.normal_s, triple.normal_c, triple.normal_a];
    let mut flipped = [false; 3];
    let mut ties = Vec::new();

    let lists: [(PlaneKind, &[LandmarkName], &[LandmarkName]); 3] = [
        (PlaneKind::Sagittal, &SAGITTAL_POSITIVE, &SAGITTAL_NEGATIVE),
        (PlaneKind::Coronal, &CORONAL_POSITIVE, &CORONAL_NEGATIVE),
        (PlaneKind::Axial, &AXIAL_POSITIVE, &AXIAL_NEGATIVE),
    ];
    for (j, (kind, positive, negative)) in lists.into_iter().enumerate() {
        let mut score = 0.0;
        let mut seen = 0usize;
        for &name in positive {
            if let Some(p) = set.position(name) {
                score += (p - triple.center).dot(&normals[j]);
                seen += 1;
            }
        }
        for &name in negative {
            if let Some(p) = set.position(name) {
                score -= (p - triple.center).dot(&normals[j]);
                seen += 1;
            }
        }
        if seen == 0 {
            return Err(Error::OrientationUndetermined {
                plane: kind.as_str().to_string(),
            });
        }
        if score < 0.0 {
            normals[j] = -normals[j];
            flipped[j] = true;
        } else if score == 0.0 {
            ties.push(kind);
        }
    }

    let mut handedness_repaired = false;
    let det = Matrix3::from_columns(&[normals[0], normals[1], normals[2]]).determinant();
    if det < 0.0 {
        normals[2] = -normals[2];
        handedness_repaired = true;
    }

    let out = PlaneTriple::new(normals[0], normals[1], normals[2], triple.center, triple.residual)?;
    Ok(HomogenizeOutcome { triple: out, flipped, ties, handedness_repaired })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landmarks::Landmark;
    use approx::assert_relative_eq;

    fn axis_points() -> AssignedPoints {
        // sagittal points on x = 0, coronal on y = 0, axial on z = 0
        AssignedPoints {
            sagittal: vec![
                Vector3::new(0.0, 2.0, 18.0),
                Vector3::new(0.0, 14.0, 0.0),
                Vector3::new(0.0, 11.0, -10.0),
                Vector3::new(0.0, 0.0, -32.0),
            ],
            coronal: vec![
                Vector3::new(10.0, 0.0, -12.0),
                Vector3::new(-10.0, 0.0, -12.0),
                Vector3::new(8.0, 0.0, 13.0),
                Vector3::new(0.0, 0.0, -32.0),
            ],
            axial: vec![
                Vector3::new(9.0, 6.0, 0.0),
                Vector3::new(-9.0, 6.0, 0.0),
                Vector3::new(0.0, 14.0, 0.0),
            ],
        }
    }

    #[test]
    fn default_assignment_matches_plane_tables() {
        let a = PlaneAssignment::default();
        assert_eq!(a.sagittal.len(), 7);
        assert_eq!(a.coronal.len(), 5);
        assert_eq!(a.axial.len(), 6);
    }

    #[test]
    fn assign_flags_insufficient_planes() {
        use LandmarkName::*;
        let mut set = LandmarkSet::empty_full();
        set.set_position(N, Vector3::new(0.0, 2.0, 18.0));
        set.set_position(Prn, Vector3::new(0.0, 14.0, 0.0));
        let (_, flagged) = assign_landmarks_lenient(&set, &PlaneAssignment::default());
        assert_eq!(flagged.len(), 3);
        assert!(assign_landmarks(&set, &PlaneAssignment::default()).is_err());
    }

    #[test]
    fn assign_flags_collinear_plane() {
        use LandmarkName::*;
        let mut set = LandmarkSet::empty_full();
        // coronal landmarks on a line
        set.set_position(ChR, Vector3::new(1.0, 0.0, 0.0));
        set.set_position(ChL, Vector3::new(2.0, 0.0, 0.0));
        set.set_position(EnR, Vector3::new(3.0, 0.0, 0.0));
        set.set_position(EnL, Vector3::new(4.0, 0.0, 0.0));
        let (_, flagged) = assign_landmarks_lenient(&set, &PlaneAssignment::default());
        assert!(flagged.contains(&PlaneKind::Coronal));
    }

    #[test]
    fn fit_recovers_axis_aligned_planes() {
        let points = axis_points();
        let triple = fit_orthogonal_planes(&points, &FitConfig::default()).unwrap();
        assert!(triple.residual < 1e-6, "residual = {}", triple.residual);
        assert_relative_eq!(triple.center, Vector3::zeros(), epsilon = 1e-5);
        for (n, axis) in [
            (triple.normal_s, Vector3::x()),
            (triple.normal_c, Vector3::y()),
            (triple.normal_a, Vector3::z()),
        ] {
            assert!(n.dot(&axis).abs() > 1.0 - 1e-8, "normal {n:?} vs axis {axis:?}");
        }
    }

    #[test]
    fn fit_rejects_degenerate_plane() {
        let mut points = axis_points();
        points.axial.truncate(2);
        assert!(matches!(
            fit_orthogonal_planes(&points, &FitConfig::default()),
            Err(Error::InsufficientLandmarks { .. })
        ));
    }

    #[test]
    fn triple_validation_catches_left_handed() {
        let t = PlaneTriple::new_unchecked(
            Vector3::x(),
            Vector3::z(),
            Vector3::y(),
            Vector3::zeros(),
            0.0,
        );
        assert!(t.validate().is_err());
    }

    fn oriented_set() -> LandmarkSet {
        use LandmarkName::*;
        let mut set = LandmarkSet::empty_full();
        let coords = [
            (ExR, (22.0, -6.0, 14.0)),
            (ExL, (-22.0, -6.0, 14.0)),
            (EnR, (8.0, 0.0, 13.0)),
            (EnL, (-8.0, 0.0, 13.0)),
            (N, (0.0, 2.0, 18.0)),
            (Prn, (0.0, 14.0, 0.0)),
            (Sn, (0.0, 9.0, 0.0)),
            (ChR, (10.0, 0.0, -12.0)),
            (ChL, (-10.0, 0.0, -12.0)),
            (Pg, (0.0, 0.0, -32.0)),
        ];
        for (name, (x, y, z)) in coords {
            set.set_position(name, Vector3::new(x, y, z));
        }
        let mut entries = Vec::new();
        for l in set.entries() {
            entries.push(Landmark { name: l.name, position: l.position });
        }
        LandmarkSet::new(entries).unwrap()
    }

    #[test]
    fn homogenize_keeps_canonical_and_flips_negated() {
        let set = oriented_set();
        let canonical =
            PlaneTriple::new(Vector3::x(), Vector3::y(), Vector3::z(), Vector3::zeros(), 0.0)
                .unwrap();
        let out = homogenize_normals(&canonical, &set).unwrap();
        assert_eq!(out.flipped, [false; 3]);
        assert_relative_eq!(out.triple.normal_s, Vector3::x(), epsilon = 1e-12);

        // negate sagittal and coronal: both must be flipped back, handedness intact
        let negated = PlaneTriple::new(
            -Vector3::x(),
            -Vector3::y(),
            Vector3::z(),
            Vector3::zeros(),
            0.0,
        )
        .unwrap();
        let out = homogenize_normals(&negated, &set).unwrap();
        assert_eq!(out.flipped, [true, true, false]);
        assert!(!out.handedness_repaired);
        assert_relative_eq!(out.triple.normal_s, Vector3::x(), epsilon = 1e-12);
        assert_relative_eq!(out.triple.normal_c, Vector3::y(), epsilon = 1e-12);
    }

    #[test]
    fn homogenize_is_idempotent() {
        let set = oriented_set();
        let negated = PlaneTriple::new(
            -Vector3::x(),
            Vector3::y(),
            -Vector3::z(),
            Vector3::zeros(),
            0.0,
        )
        .unwrap();
        let once = homogenize_normals(&negated, &set).unwrap();
        let twice = homogenize_normals(&once.triple, &set).unwrap();
        assert_eq!(once.triple, twice.triple);
        assert_eq!(twice.flipped, [false; 3]);
    }

    #[test]
    fn homogenize_requires_orientation_landmarks() {
        use LandmarkName::*;
        let mut set = LandmarkSet::empty_full();
        // only sagittal-midline landmarks visible: axial lists covered, coronal covered,
        // but hide everything relevant to the sagittal lists
        set.set_position(N, Vector3::new(0.0, 2.0, 18.0));
        set.set_position(Prn, Vector3::new(0.0, 14.0, 0.0));
        set.set_position(Pg, Vector3::new(0.0, 0.0, -32.0));
        let canonical =
            PlaneTriple::new(Vector3::x(), Vector3::y(), Vector3::z(), Vector3::zeros(), 0.0)
                .unwrap();
        let err = homogenize_normals(&canonical, &set).unwrap_err();
        assert!(matches!(err, Error::OrientationUndetermined { .. }));
    }

    #[test]
    fn homogenize_zero_score_keeps_normal_and_reports_tie() {
        use LandmarkName::*;
        let mut set = LandmarkSet::empty_full();
        // symmetric pair across the sagittal plane: score exactly 0
        set.set_position(EnR, Vector3::new(5.0, 0.0, 13.0));
        set.set_position(EnL, Vector3::new(5.0, 0.0, 13.0));
        // give coronal and axial planes a determined orientation
        set.set_position(Prn, Vector3::new(0.0, 14.0, 0.0));
        set.set_position(Pg, Vector3::new(0.0, 0.0, -32.0));
        let canonical =
            PlaneTriple::new(Vector3::x(), Vector3::y(), Vector3::z(), Vector3::zeros(), 0.0)
                .unwrap();
        let out = homogenize_normals(&canonical, &set).unwrap();
        assert!(out.ties.contains(&PlaneKind::Sagittal));
        assert!(!out.flipped[0]);
    }
}
