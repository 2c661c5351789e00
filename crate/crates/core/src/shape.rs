//! PCA landmark shape model: Procrustes alignment, regularized shape-parameter
//! fitting, reconstruction, and completion of missing landmarks.
//!
//! A model holds a mean shape `x_bar` (3N-vector), an orthogonal basis `Phi`
//! (3N x M) and per-mode eigenvalues. Completion aligns the visible landmarks
//! to the model mean with a similarity Procrustes transform, solves the
//! regularized least-squares fit for the shape parameters, reconstructs the
//! full configuration and maps it back with the inverse Procrustes transform.
//! Only invisible slots are filled; visible annotations are never overwritten.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::landmarks::{Landmark, LandmarkName, LandmarkSet};

/// Minimum visible landmarks required for a reliable Procrustes + fit.
pub const MIN_VISIBLE: usize = 4;

/// PCA morphable model over corresponding landmark coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphableModel {
    /// Mean shape, length `3 * names.len()`, millimeters.
    pub mean: DVector<f64>,
    /// Shape basis, `3N x M`, orthogonal columns.
    pub basis: DMatrix<f64>,
    /// Per-mode variances, length `M`.
    pub eigenvalues: DVector<f64>,
    /// Landmark order of the coordinate blocks.
    pub names: Vec<LandmarkName>,
}

impl MorphableModel {
    pub fn landmark_count(&self) -> usize {
        self.names.len()
    }

    pub fn mode_count(&self) -> usize {
        self.basis.ncols()
    }

    /// Checks the dimensional consistency invariants.
    pub fn validate(&self) -> Result<()> {
        let n3 = 3 * self.names.len();
        if self.mean.len() != n3 {
            return Err(Error::ModelFormat(format!(
                "mean has length {}, expected {n3}",
                self.mean.len()
            )));
        }
        if self.basis.nrows() != n3 {
            return Err(Error::ModelFormat(format!(
                "basis has {} rows, expected {n3}",
                self.basis.nrows()
            )));
        }
        if self.basis.ncols() != self.eigenvalues.len() {
            return Err(Error::ModelFormat(format!(
                "basis has {} columns but {} eigenvalues",
                self.basis.ncols(),
                self.eigenvalues.len()
            )));
        }
        for (i, a) in self.names.iter().enumerate() {
            if self.names[..i].contains(a) {
                return Err(Error::ModelFormat(format!("duplicate landmark {a}")));
            }
        }
        // columns must be mutually orthogonal
        let gram = self.basis.transpose() * &self.basis;
        let scale = gram.diagonal().amax().max(1e-300);
        for i in 0..gram.nrows() {
            for j in 0..i {
                if gram[(i, j)].abs() > 1e-6 * scale {
                    return Err(Error::ModelFormat(format!(
                        "basis columns {j} and {i} are not orthogonal"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Validation for persisted models, which additionally requires strictly
    /// positive eigenvalues.
    pub fn validate_strict(&self) -> Result<()> {
        self.validate()?;
        if self.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::ModelFormat(
                "eigenvalues must all be positive".into(),
            ));
        }
        Ok(())
    }

    /// Mean position of one landmark.
    pub fn mean_position(&self, index: usize) -> Vector3<f64> {
        Vector3::new(
            self.mean[3 * index],
            self.mean[3 * index + 1],
            self.mean[3 * index + 2],
        )
    }
}

/// Shape parameters in model coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeParams {
    pub alpha: DVector<f64>,
    /// Plausibility weight the parameters were fitted with.
    pub weight: f64,
}

/// Similarity transform `p -> s R p + t` with `s > 0` and proper rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        SimilarityTransform {
            scale: 1.0,
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.scale * (self.rotation * p) + self.translation
    }

    pub fn inverse_apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        (self.rotation.transpose() * (p - self.translation)) / self.scale
    }
}

fn centroid(points: &[Vector3<f64>]) -> Vector3<f64> {
    points.iter().sum::<Vector3<f64>>() / points.len() as f64
}

/// Closed-form similarity Procrustes alignment (Umeyama/Gower) minimizing
/// `sum_i | s R source_i + t - target_i |^2` with a proper rotation.
///
/// With `with_scale = false` the scale is fixed at 1 (rigid alignment).
pub fn procrustes_align(
    source: &[Vector3<f64>],
    target: &[Vector3<f64>],
    with_scale: bool,
) -> Result<SimilarityTransform> {
    if source.len() != target.len() {
        return Err(Error::InvalidArgument(format!(
            "point count mismatch: {} vs {}",
            source.len(),
            target.len()
        )));
    }
    if source.len() < 3 {
        return Err(Error::DegenerateConfiguration(format!(
            "need at least 3 point pairs, got {}",
            source.len()
        )));
    }
    let mu_s = centroid(source);
    let mu_t = centroid(target);
    let n = source.len() as f64;

    let mut sigma = Matrix3::zeros();
    let mut var_s = 0.0;
    for (s, t) in source.iter().zip(target) {
        let sc = s - mu_s;
        let tc = t - mu_t;
        sigma += tc * sc.transpose();
        var_s += sc.norm_squared();
    }
    sigma /= n;
    var_s /= n;

    let svd = sigma.svd(true, true);
    // collinear sources leave the rotation about the line undetermined
    let line_tol = 1e-9 * svd.singular_values[0].max(1e-300);
    if svd.singular_values[1] <= line_tol {
        return Err(Error::DegenerateConfiguration(
            "points are collinear; rotation is not unique".into(),
        ));
    }
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let det = (u * v_t).determinant();
    let d = Vector3::new(1.0, 1.0, det.signum());
    let rotation = u * Matrix3::from_diagonal(&d) * v_t;

    let scale = if with_scale {
        let trace_ds = svd.singular_values.dot(&d);
        if var_s <= 0.0 {
            return Err(Error::DegenerateConfiguration(
                "source points are coincident".into(),
            ));
        }
        trace_ds / var_s
    } else {
        1.0
    };
    let translation = mu_t - scale * (rotation * mu_s);
    Ok(SimilarityTransform { scale, rotation, translation })
}

/// Solves the regularized shape fit
/// `min_a |Phi_r a + mean_r - x_r|^2 + w_p sum_i a_i^2 / lambda_i`
/// through the normal equations. With `w_p = 0` the visible row-restricted
/// basis must have full column rank.
pub fn fit_shape_params(
    model: &MorphableModel,
    observed: &DVector<f64>,
    visible_rows: &[usize],
    weight: f64,
) -> Result<ShapeParams> {
    if weight < 0.0 {
        return Err(Error::InvalidArgument("w_p must be non-negative".into()));
    }
    if observed.len() != visible_rows.len() {
        return Err(Error::DimensionMismatch(format!(
            "observed vector has {} entries for {} visible rows",
            observed.len(),
            visible_rows.len()
        )));
    }
    if visible_rows.len() / 3 < MIN_VISIBLE {
        return Err(Error::DegenerateConfiguration(format!(
            "need at least {MIN_VISIBLE} visible landmarks, got {}",
            visible_rows.len() / 3
        )));
    }
    if weight > 0.0 && model.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::ModelFormat(
            "eigenvalues must be positive to apply the plausibility prior".into(),
        ));
    }

    let m = model.mode_count();
    let basis_r = model.basis.select_rows(visible_rows.iter());
    let mean_r = model.mean.select_rows(visible_rows.iter());
    let rhs_vec = observed - mean_r;

    let mut normal = basis_r.transpose() * &basis_r;
    for i in 0..m {
        normal[(i, i)] += if weight > 0.0 { weight / model.eigenvalues[i] } else { 0.0 };
    }
    let rhs = basis_r.transpose() * &rhs_vec;

    if weight == 0.0 {
        // rank check via SVD of the restricted basis
        let svd = basis_r.clone().svd(false, false);
        let smax = svd.singular_values.amax();
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > 1e-10 * smax.max(1e-300))
            .count();
        if rank < m {
            return Err(Error::SingularSystem(format!(
                "visible rows give rank {rank} < {m} modes"
            )));
        }
    }
    let chol = normal
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("normal matrix not positive definite".into()))?;
    let mut alpha = chol.solve(&rhs);
    // one step of iterative refinement keeps the residual near machine precision
    let correction = chol.solve(&(&rhs - &normal * &alpha));
    alpha += correction;

    // contract: normal equations solved to < 1e-10 relative residual
    let res = (&normal * &alpha - &rhs).norm();
    let denom = rhs.norm().max(1e-300);
    if res / denom > 1e-10 && res > 1e-12 {
        return Err(Error::SingularSystem(format!(
            "normal-equation residual {:.3e} too large",
            res / denom
        )));
    }

    Ok(ShapeParams { alpha, weight })
}

/// Reconstructs the full landmark vector `Phi a + mean`.
pub fn reconstruct(model: &MorphableModel, alpha: &DVector<f64>) -> Result<DVector<f64>> {
    if alpha.len() != model.mode_count() {
        return Err(Error::InvalidArgument(format!(
            "alpha has length {}, model has {} modes",
            alpha.len(),
            model.mode_count()
        )));
    }
    Ok(&model.basis * alpha + &model.mean)
}

/// Options for [`complete_landmarks`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionConfig {
    /// Plausibility weight `w_p`.
    pub weight: f64,
    /// Alternating pose/shape refinement rounds (>= 1).
    pub rounds: usize,
    /// Procrustes with scale (similarity) or rigid-only.
    pub with_scale: bool,
}

impl Default for CompletionConfig {
    fn default() -> Self {
        CompletionConfig { weight: 1.0, rounds: 2, with_scale: true }
    }
}

/// Completes missing model landmarks: Procrustes to the model mean, shape fit,
/// reconstruction, inverse Procrustes. With more than one round the pose is
/// re-estimated against the current reconstruction (alternating minimization).
///
/// The output contains exactly the model's landmarks, all visible; originally
/// visible positions are preserved verbatim and reconstructions fill only the
/// missing slots.
pub fn complete_landmarks(
    model: &MorphableModel,
    set: &LandmarkSet,
    config: &CompletionConfig,
) -> Result<LandmarkSet> {
    model.validate()?;
    if config.rounds == 0 {
        return Err(Error::InvalidArgument("completion rounds must be >= 1".into()));
    }

    // visible landmarks that the model knows about, in model order
    let mut visible_idx = Vec::new();
    let mut visible_pos = Vec::new();
    for (i, &name) in model.names.iter().enumerate() {
        if let Some(p) = set.position(name) {
            visible_idx.push(i);
            visible_pos.push(p);
        }
    }
    if visible_idx.len() < MIN_VISIBLE {
        return Err(Error::DegenerateConfiguration(format!(
            "need at least {MIN_VISIBLE} visible model landmarks, got {}",
            visible_idx.len()
        )));
    }
    let visible_rows: Vec<usize> = visible_idx
        .iter()
        .flat_map(|&i| [3 * i, 3 * i + 1, 3 * i + 2])
        .collect();

    // round 0 target: the model mean restricted to the visible slots
    let mut target: Vec<Vector3<f64>> =
        visible_idx.iter().map(|&i| model.mean_position(i)).collect();

    let mut pose = SimilarityTransform::identity();
    let mut alpha = DVector::zeros(model.mode_count());
    for _ in 0..config.rounds {
        pose = procrustes_align(&visible_pos, &target, config.with_scale)?;
        let aligned: Vec<Vector3<f64>> = visible_pos.iter().map(|p| pose.apply(p)).collect();
        let mut observed = DVector::zeros(visible_rows.len());
        for (k, p) in aligned.iter().enumerate() {
            observed[3 * k] = p.x;
            observed[3 * k + 1] = p.y;
            observed[3 * k + 2] = p.z;
        }
        let params = fit_shape_params(model, &observed, &visible_rows, config.weight)?;
        alpha = params.alpha;
        let recon = reconstruct(model, &alpha)?;
        target = visible_idx
            .iter()
            .map(|&i| Vector3::new(recon[3 * i], recon[3 * i + 1], recon[3 * i + 2]))
            .collect();
    }

    let recon = reconstruct(model, &alpha)?;
    let mut entries = Vec::with_capacity(model.names.len());
    for (i, &name) in model.names.iter().enumerate() {
        let position = match set.position(name) {
            Some(p) => p, // visible annotations are preserved verbatim
            None => {
                let model_space =
                    Vector3::new(recon[3 * i], recon[3 * i + 1], recon[3 * i + 2]);
                pose.inverse_apply(&model_space)
            }
        };
        entries.push(Landmark { name, position: Some(position) });
    }
    LandmarkSet::new(entries)
}

/// Builds a PCA model from Procrustes-aligned training shapes, each a
/// `3N`-vector in the order of `names`. Retains the smallest mode count
/// covering at least 98% of the variance unless `modes_override` is given.
pub fn build_toy_model(
    shapes: &[DVector<f64>],
    names: &[LandmarkName],
    modes_override: Option<usize>,
) -> Result<MorphableModel> {
    let n3 = 3 * names.len();
    if shapes.iter().any(|s| s.len() != n3) {
        return Err(Error::DimensionMismatch(format!(
            "every training shape must have length {n3}"
        )));
    }
    let min_count = modes_override.unwrap_or(1) + 1;
    if shapes.len() < min_count.max(2) {
        return Err(Error::InvalidArgument(format!(
            "need at least {} training shapes, got {}",
            min_count.max(2),
            shapes.len()
        )));
    }

    let count = shapes.len() as f64;
    let mut mean = DVector::zeros(n3);
    for s in shapes {
        mean += s;
    }
    mean /= count;

    let mut cov = DMatrix::<f64>::zeros(n3, n3);
    for s in shapes {
        let d = s - &mean;
        cov += &d * d.transpose();
    }
    cov /= count - 1.0;

    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..n3).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    let total: f64 = eig.eigenvalues.iter().map(|&l| l.max(0.0)).sum();
    let m = match modes_override {
        Some(m) => {
            if m == 0 || m > n3 {
                return Err(Error::InvalidArgument(format!("invalid mode override {m}")));
            }
            m
        }
        None => {
            let mut acc = 0.0;
            let mut m = n3;
            for (k, &i) in order.iter().enumerate() {
                acc += eig.eigenvalues[i].max(0.0);
                if total <= 0.0 || acc >= 0.98 * total {
                    m = k + 1;
                    break;
                }
            }
            m
        }
    };
    if shapes.len() < m + 1 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} shapes for {m} modes",
            m + 1
        )));
    }

    let mut basis = DMatrix::zeros(n3, m);
    let mut eigenvalues = DVector::zeros(m);
    for (k, &i) in order.iter().take(m).enumerate() {
        basis.set_column(k, &eig.eigenvectors.column(i));
        eigenvalues[k] = eig.eigenvalues[i].max(0.0);
    }

    let model = MorphableModel { mean, basis, eigenvalues, names: names.to_vec() };
    model.validate()?;
    Ok(model)
}
