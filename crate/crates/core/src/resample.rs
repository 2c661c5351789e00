//! Differentiable affine grid sampler: normalized grid generation, affine
//! mapping, trilinear interpolation with zero fill outside the volume, and
//! analytic derivatives of sampled grid points with respect to the transform
//! parameters.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::preprocess::extract_center_planes;
use crate::transform::{rotation_and_jacobian, AffineTheta, RigidTransform};
use crate::volume::{index_coord, norm_coord, PlaneImage, Volume};

/// Ordered normalized output-grid coordinates, layout matching volume
/// indexing (`d` fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingGrid {
    pub dims: [usize; 3],
    pub points: Vec<Vector3<f64>>,
}

impl SamplingGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Regular endpoint-inclusive grid over `[-1, 1]^3` for the given output
/// dims `(H, W, D)`; point components are `(x, y, z) = (w, h, d)`-normalized.
pub fn generate_grid(dims: [usize; 3]) -> SamplingGrid {
    let [nh, nw, nd] = dims;
    let mut points = Vec::with_capacity(nh * nw * nd);
    for h in 0..nh {
        let y = norm_coord(h as f64, nh);
        for w in 0..nw {
            let x = norm_coord(w as f64, nw);
            for d in 0..nd {
                let z = norm_coord(d as f64, nd);
                points.push(Vector3::new(x, y, z));
            }
        }
    }
    SamplingGrid { dims, points }
}

/// Maps every grid point through the affine transform into input-space
/// normalized coordinates (which may leave `[-1, 1]`).
pub fn transform_grid(grid: &SamplingGrid, theta: &AffineTheta) -> SamplingGrid {
    let r = theta.rotation();
    let t = theta.translation();
    SamplingGrid {
        dims: grid.dims,
        points: grid.points.iter().map(|g| r * g + t).collect(),
    }
}

#[inline]
fn tent(u: f64) -> f64 {
    (1.0 - u.abs()).max(0.0)
}

/// Trilinear sample of the volume at one normalized input coordinate.
/// Neighbors outside the volume contribute zero.
#[inline]
pub fn sample_at(volume: &Volume, p: &Vector3<f64>) -> f64 {
    let [nh, nw, nd] = volume.dims();
    let wf = index_coord(p.x, nw);
    let hf = index_coord(p.y, nh);
    let df = index_coord(p.z, nd);

    let h0 = hf.floor() as isize;
    let w0 = wf.floor() as isize;
    let d0 = df.floor() as isize;

    let mut acc = 0.0;
    for hh in [h0, h0 + 1] {
        if hh < 0 || hh >= nh as isize {
            continue;
        }
        let wy = tent(hf - hh as f64);
        for ww in [w0, w0 + 1] {
            if ww < 0 || ww >= nw as isize {
                continue;
            }
            let wx = tent(wf - ww as f64);
            for dd in [d0, d0 + 1] {
                if dd < 0 || dd >= nd as isize {
                    continue;
                }
                let wz = tent(df - dd as f64);
                acc += volume.get(hh as usize, ww as usize, dd as usize) as f64 * wx * wy * wz;
            }
        }
    }
    acc
}

/// Samples the volume at every point of an (already transformed) grid. The
/// output volume reuses the input metadata with the grid's dims.
pub fn trilinear_sample(volume: &Volume, grid: &SamplingGrid) -> Result<Volume> {
    let expected = grid.dims[0] * grid.dims[1] * grid.dims[2];
    if grid.points.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "grid has {} points for dims {:?}",
            grid.points.len(),
            grid.dims
        )));
    }
    let mut meta = volume.meta().clone();
    meta.dims = grid.dims;
    let samples: Vec<f32> = grid.points.iter().map(|p| sample_at(volume, p) as f32).collect();
    Volume::new(meta, samples)
}

/// Applies the standardizing transform to the volume and extracts the three
/// center planes in (sagittal, coronal, axial) order.
///
/// Equivalent to `trilinear_sample(volume, transform_grid(generate_grid(dims),
/// theta))` but fused per voxel to avoid materializing the grids.
pub fn standardize_volume(
    volume: &Volume,
    transform: &RigidTransform,
) -> Result<(Volume, [PlaneImage; 3])> {
    let [nh, nw, nd] = volume.dims();
    let r = transform.rotation.to_rotation();
    let t = transform.translation;

    let mut out = Volume::zeros(volume.meta().clone());
    let mut idx = 0;
    for h in 0..nh {
        let y = norm_coord(h as f64, nh);
        for w in 0..nw {
            let x = norm_coord(w as f64, nw);
            for d in 0..nd {
                let z = norm_coord(d as f64, nd);
                let p = r * Vector3::new(x, y, z) + t;
                out.samples_mut()[idx] = sample_at(volume, &p) as f32;
                idx += 1;
            }
        }
    }
    let planes = extract_center_planes(&out);
    Ok((out, planes))
}

/// Per-point 3x7 derivative blocks of transformed grid points with respect to
/// the raw quaternion and translation `(q0..q3, tx, ty, tz)`.
#[derive(Debug, Clone)]
pub struct GridJacobian {
    /// One 3x7 block per grid point, row-major `[point][coord][param]`.
    pub blocks: Vec<[[f64; 7]; 3]>,
}

/// Analytic Jacobian of `T_theta(g) = R(q/|q|) g + t` at every grid point.
/// The quaternion derivative is taken through the normalization, so finite
/// differences of the raw components match. Translation columns are the
/// identity for every point.
pub fn grid_jacobian(grid: &SamplingGrid, q_raw: &[f64; 4]) -> GridJacobian {
    let (_, dr) = rotation_and_jacobian(q_raw);
    let mut blocks = Vec::with_capacity(grid.points.len());
    for g in &grid.points {
        let mut block = [[0.0; 7]; 3];
        for (k, drk) in dr.iter().enumerate() {
            let col = drk * g;
            block[0][k] = col[0];
            block[1][k] = col[1];
            block[2][k] = col[2];
        }
        block[0][4] = 1.0;
        block[1][5] = 1.0;
        block[2][6] = 1.0;
        blocks.push(block);
    }
    GridJacobian { blocks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::UnitQuaternion;
    use crate::volume::VolumeMeta;
    use approx::assert_relative_eq;

    fn test_volume(dims: [usize; 3]) -> Volume {
        let meta = VolumeMeta::new(dims, [1.0; 3], [0.0; 3]).unwrap();
        let mut v = Volume::zeros(meta);
        let [nh, nw, nd] = dims;
        for h in 0..nh {
            for w in 0..nw {
                for d in 0..nd {
                    v.set(h, w, d, (h * 100 + w * 10 + d) as f32);
                }
            }
        }
        v
    }

    #[test]
    fn grid_corners_and_center() {
        let g = generate_grid([2, 2, 2]);
        assert_eq!(g.points.len(), 8);
        assert_eq!(g.points[0], Vector3::new(-1.0, -1.0, -1.0));
        assert_eq!(g.points[7], Vector3::new(1.0, 1.0, 1.0));

        let g3 = generate_grid([3, 3, 3]);
        assert_eq!(g3.points[13], Vector3::new(0.0, 0.0, 0.0));
    }

    #[test]
    fn transform_grid_identity_and_translation() {
        let g = generate_grid([3, 3, 3]);
        let id = transform_grid(&g, &RigidTransform::identity().theta());
        assert_eq!(id.points, g.points);

        let shift = RigidTransform::new(UnitQuaternion::identity(), Vector3::new(0.5, 0.0, 0.0));
        let moved = transform_grid(&g, &shift.theta());
        for (a, b) in g.points.iter().zip(&moved.points) {
            assert_relative_eq!(b.x, a.x + 0.5, epsilon = 1e-15);
            assert_eq!(b.y, a.y);
            assert_eq!(b.z, a.z);
        }
    }

    #[test]
    fn identity_sampling_reproduces_volume() {
        let v = test_volume([4, 5, 6]);
        let g = generate_grid(v.dims());
        let out = trilinear_sample(&v, &g).unwrap();
        assert_eq!(out.samples(), v.samples());
    }

    #[test]
    fn midpoint_interpolates_linearly() {
        let v = test_volume([1, 1, 2]); // samples 0 and 1 along d
        // halfway between the two voxels along z
        let val = sample_at(&v, &Vector3::new(0.0, 0.0, 0.0));
        assert_relative_eq!(val, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn constant_volume_stays_constant_in_bounds() {
        let meta = VolumeMeta::new([4, 4, 4], [1.0; 3], [0.0; 3]).unwrap();
        let v = Volume::new(meta, vec![7.5; 64]).unwrap();
        for p in [
            Vector3::new(0.1, -0.2, 0.3),
            Vector3::new(0.9, 0.9, -0.9),
            Vector3::new(0.0, 0.0, 0.0),
        ] {
            assert_relative_eq!(sample_at(&v, &p), 7.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn out_of_bounds_fills_zero() {
        let meta = VolumeMeta::new([2, 2, 2], [1.0; 3], [0.0; 3]).unwrap();
        let v = Volume::new(meta, vec![3.0; 8]).unwrap();
        assert_eq!(sample_at(&v, &Vector3::new(5.0, 0.0, 0.0)), 0.0);
        // straddling the border blends toward zero
        let near = sample_at(&v, &Vector3::new(1.5, 0.0, 0.0));
        assert!(near > 0.0 && near < 3.0);
    }

    #[test]
    fn partition_of_unity_for_interior_points() {
        let meta = VolumeMeta::new([5, 5, 5], [1.0; 3], [0.0; 3]).unwrap();
        let ones = Volume::new(meta, vec![1.0; 125]).unwrap();
        for i in 0..50 {
            let f = i as f64 / 50.0;
            let p = Vector3::new(2.0 * f - 1.0, 0.7 * f - 0.3, -0.9 + 1.8 * f);
            assert!((sample_at(&ones, &p) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn standardize_identity_matches_center_planes() {
        let v = test_volume([4, 6, 8]);
        let (out, planes) = standardize_volume(&v, &RigidTransform::identity()).unwrap();
        assert_eq!(out.samples(), v.samples());
        let direct = extract_center_planes(&v);
        for (a, b) in planes.iter().zip(&direct) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn fused_standardize_matches_staged_pipeline() {
        let v = test_volume([6, 5, 4]);
        let t = RigidTransform::new(
            UnitQuaternion::from_euler_zyx(0.3, -0.2, 0.5),
            Vector3::new(0.05, -0.1, 0.02),
        );
        let (fused, _) = standardize_volume(&v, &t).unwrap();
        let staged =
            trilinear_sample(&v, &transform_grid(&generate_grid(v.dims()), &t.theta())).unwrap();
        assert_eq!(fused.samples(), staged.samples());
    }

    #[test]
    fn jacobian_translation_columns_are_identity() {
        let g = generate_grid([2, 3, 2]);
        let j = grid_jacobian(&g, &[1.0, 0.0, 0.0, 0.0]);
        for block in &j.blocks {
            for (row, b) in block.iter().enumerate() {
                for col in 0..3 {
                    let expected = if col == row { 1.0 } else { 0.0 };
                    assert_eq!(b[4 + col], expected);
                }
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let g = generate_grid([3, 3, 3]);
        let q = [0.9, -0.3, 0.2, 0.4]; // deliberately un-normalized
        let t = Vector3::new(0.1, -0.2, 0.05);
        let jac = grid_jacobian(&g, &q);
        let eval = |params: &[f64; 7], i: usize| -> Vector3<f64> {
            let (r, _) = rotation_and_jacobian(&[params[0], params[1], params[2], params[3]]);
            r * g.points[i] + Vector3::new(params[4], params[5], params[6])
        };
        let base = [q[0], q[1], q[2], q[3], t.x, t.y, t.z];
        let h = 1e-6;
        for i in (0..g.points.len()).step_by(5) {
            for k in 0..7 {
                let mut plus = base;
                plus[k] += h;
                let mut minus = base;
                minus[k] -= h;
                let fd = (eval(&plus, i) - eval(&minus, i)) / (2.0 * h);
                for row in 0..3 {
                    assert_relative_eq!(jac.blocks[i][row][k], fd[row], epsilon = 1e-7);
                }
            }
        }
    }
}
