//! Dense scalar volumes, binary masks and 2D plane images.
//!
//! Coordinate conventions, used consistently across the crate:
//!
//! * A volume is indexed `(h, w, d)` with `d` fastest in memory; there is a
//!   single implicit channel.
//! * Physical positions are millimeter 3-vectors whose components follow the
//!   index order: `phys = origin + (h, w, d) * spacing` componentwise.
//! * Normalized grid coordinates `(x, y, z)` span `[-1, 1]` per axis with the
//!   pairing `x <-> w`, `y <-> h`, `z <-> d` (the sampling-kernel pairing of
//!   the interpolation weights). Converting a physical point to normalized
//!   coordinates therefore swaps the first two components.
//! * The normalized range is endpoint-inclusive: -1 and +1 are the first and
//!   last voxel centers, `coord(j) = 2*j/(n-1) - 1`.

use serde::{Deserialize, Serialize};

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Scalar sample kind of a stored volume.
///
/// Every supported kind is exactly representable as `f32`, which is the
/// in-memory sample type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementKind {
    U8,
    I8,
    I16,
    U16,
    F32,
}

impl ElementKind {
    pub fn byte_size(&self) -> usize {
        match self {
            ElementKind::U8 | ElementKind::I8 => 1,
            ElementKind::I16 | ElementKind::U16 => 2,
            ElementKind::F32 => 4,
        }
    }
}

/// Grid geometry: dimensions, spacing and origin, all in `(h, w, d)` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeMeta {
    /// Voxel counts `(H, W, D)`.
    pub dims: [usize; 3],
    /// Millimeters per voxel along each axis.
    pub spacing: [f64; 3],
    /// Physical position of voxel `(0, 0, 0)` in millimeters.
    pub origin: [f64; 3],
    pub element: ElementKind,
}

impl VolumeMeta {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument(format!("dims must be positive, got {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "spacing must be positive and finite, got {spacing:?}"
            )));
        }
        Ok(VolumeMeta {
            dims,
            spacing,
            origin,
            element: ElementKind::F32,
        })
    }

    /// Meta whose physical frame is centered on the volume: the midpoint
    /// index maps to physical (0,0,0). Used by synthetic phantoms.
    pub fn centered(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        let origin = [
            -spacing[0] * (dims[0] as f64 - 1.0) / 2.0,
            -spacing[1] * (dims[1] as f64 - 1.0) / 2.0,
            -spacing[2] * (dims[2] as f64 - 1.0) / 2.0,
        ];
        VolumeMeta::new(dims, spacing, origin)
    }

    pub fn voxel_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// Physical millimeter position of a (possibly fractional) voxel index.
    pub fn phys_from_index(&self, index: Vector3<f64>) -> Vector3<f64> {
        Vector3::new(
            self.origin[0] + index[0] * self.spacing[0],
            self.origin[1] + index[1] * self.spacing[1],
            self.origin[2] + index[2] * self.spacing[2],
        )
    }

    /// Continuous voxel index of a physical millimeter position.
    pub fn index_from_phys(&self, phys: Vector3<f64>) -> Vector3<f64> {
        Vector3::new(
            (phys[0] - self.origin[0]) / self.spacing[0],
            (phys[1] - self.origin[1]) / self.spacing[1],
            (phys[2] - self.origin[2]) / self.spacing[2],
        )
    }
}

/// Normalized coordinate of index `j` on an axis of size `n`
/// (endpoint-inclusive; a size-1 axis maps to 0).
pub fn norm_coord(j: f64, n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        2.0 * j / (n as f64 - 1.0) - 1.0
    }
}

/// Inverse of [`norm_coord`]: continuous index for a normalized coordinate.
pub fn index_coord(x: f64, n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        (x + 1.0) * (n as f64 - 1.0) / 2.0
    }
}

/// Dense scalar volume with grid metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    meta: VolumeMeta,
    samples: Vec<f32>,
}

impl Volume {
    pub fn new(meta: VolumeMeta, samples: Vec<f32>) -> Result<Self> {
        if samples.len() != meta.voxel_count() {
            return Err(Error::SizeMismatch(format!(
                "expected {} samples for dims {:?}, got {}",
                meta.voxel_count(),
                meta.dims,
                samples.len()
            )));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("volume contains non-finite samples".into()));
        }
        Ok(Volume { meta, samples })
    }

    pub fn zeros(meta: VolumeMeta) -> Self {
        let n = meta.voxel_count();
        Volume {
            meta,
            samples: vec![0.0; n],
        }
    }

    pub fn meta(&self) -> &VolumeMeta {
        &self.meta
    }

    pub fn dims(&self) -> [usize; 3] {
        self.meta.dims
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f32] {
        &mut self.samples
    }

    #[inline]
    pub fn linear_index(&self, h: usize, w: usize, d: usize) -> usize {
        (h * self.meta.dims[1] + w) * self.meta.dims[2] + d
    }

    #[inline]
    pub fn get(&self, h: usize, w: usize, d: usize) -> f32 {
        self.samples[self.linear_index(h, w, d)]
    }

    #[inline]
    pub fn set(&mut self, h: usize, w: usize, d: usize, v: f32) {
        let i = self.linear_index(h, w, d);
        self.samples[i] = v;
    }

    /// Normalized grid coordinate `(x, y, z)` of voxel `(h, w, d)`.
    pub fn normalized_of_voxel(&self, h: usize, w: usize, d: usize) -> Vector3<f64> {
        let [nh, nw, nd] = self.meta.dims;
        Vector3::new(
            norm_coord(w as f64, nw),
            norm_coord(h as f64, nh),
            norm_coord(d as f64, nd),
        )
    }
}

/// Converts a physical millimeter point to normalized grid coordinates
/// `(x, y, z)`. Values outside the volume fall outside `[-1, 1]`.
pub fn normalized_from_phys(meta: &VolumeMeta, phys: Vector3<f64>) -> Vector3<f64> {
    let idx = meta.index_from_phys(phys);
    Vector3::new(
        norm_coord(idx[1], meta.dims[1]),
        norm_coord(idx[0], meta.dims[0]),
        norm_coord(idx[2], meta.dims[2]),
    )
}

/// Inverse of [`normalized_from_phys`].
pub fn phys_from_normalized(meta: &VolumeMeta, norm: Vector3<f64>) -> Vector3<f64> {
    let idx = Vector3::new(
        index_coord(norm[1], meta.dims[0]),
        index_coord(norm[0], meta.dims[1]),
        index_coord(norm[2], meta.dims[2]),
    );
    meta.phys_from_index(idx)
}

/// Boolean mask over the same grid layout as a [`Volume`].
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    pub dims: [usize; 3],
    pub data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(dims: [usize; 3], data: Vec<bool>) -> Result<Self> {
        if data.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::SizeMismatch(format!(
                "mask data length {} does not match dims {:?}",
                data.len(),
                dims
            )));
        }
        Ok(BinaryMask { dims, data })
    }

    #[inline]
    pub fn linear_index(&self, h: usize, w: usize, d: usize) -> usize {
        (h * self.dims[1] + w) * self.dims[2] + d
    }

    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Row-major 2D scalar image (a plane extracted from a volume).
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneImage {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl PlaneImage {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::SizeMismatch(format!(
                "image data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(PlaneImage { rows, cols, data })
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.data[r * self.cols + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn meta_rejects_zero_dims_and_nonpositive_spacing() {
        assert!(VolumeMeta::new([0, 4, 4], [1.0; 3], [0.0; 3]).is_err());
        assert!(VolumeMeta::new([4, 4, 4], [1.0, 0.0, 1.0], [0.0; 3]).is_err());
    }

    #[test]
    fn phys_index_round_trip() {
        let meta = VolumeMeta::new([16, 32, 8], [0.5, 0.25, 2.0], [-3.0, 1.0, 7.5]).unwrap();
        let p = Vector3::new(1.25, 4.5, 11.0);
        let back = meta.phys_from_index(meta.index_from_phys(p));
        assert_relative_eq!(back, p, epsilon = 1e-12);
    }

    #[test]
    fn normalized_endpoints() {
        assert_eq!(norm_coord(0.0, 5), -1.0);
        assert_eq!(norm_coord(4.0, 5), 1.0);
        assert_eq!(norm_coord(2.0, 5), 0.0);
        assert_eq!(norm_coord(0.0, 1), 0.0);
    }

    #[test]
    fn normalized_phys_round_trip_swaps_hw() {
        let meta = VolumeMeta::new([11, 21, 31], [1.0, 2.0, 0.5], [5.0, -4.0, 0.0]).unwrap();
        // Voxel (h=0, w=20, d=15): w is the x axis, h is the y axis.
        let phys = meta.phys_from_index(Vector3::new(0.0, 20.0, 15.0));
        let n = normalized_from_phys(&meta, phys);
        assert_relative_eq!(n, Vector3::new(1.0, -1.0, 0.0), epsilon = 1e-12);
        let back = phys_from_normalized(&meta, n);
        assert_relative_eq!(back, phys, epsilon = 1e-12);
    }

    #[test]
    fn volume_rejects_bad_sample_count() {
        let meta = VolumeMeta::new([2, 2, 2], [1.0; 3], [0.0; 3]).unwrap();
        assert!(Volume::new(meta, vec![0.0; 7]).is_err());
    }

    #[test]
    fn centered_meta_maps_midpoint_to_origin() {
        let meta = VolumeMeta::centered([5, 9, 3], [1.0, 2.0, 4.0]).unwrap();
        let mid = meta.phys_from_index(Vector3::new(2.0, 4.0, 1.0));
        assert_relative_eq!(mid, Vector3::zeros(), epsilon = 1e-12);
    }
}
