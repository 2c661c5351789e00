//! Volume preprocessing: Otsu segmentation, connected-component cleanup, and
//! reshaping to the network-ready 256^3 layout.

use crate::error::{Error, Result};
use crate::volume::{BinaryMask, ElementKind, PlaneImage, Volume, VolumeMeta};

/// Target edge length of the standardized layout.
pub const STANDARD_DIM: usize = 256;

const OTSU_BINS: usize = 256;

/// Index of the histogram bin maximizing the between-class variance when the
/// classes split after that bin. Ties break toward the lower bin. `None` when
/// fewer than two bins are populated.
pub fn otsu_bin(histogram: &[u64]) -> Option<usize> {
    let total: u64 = histogram.iter().sum();
    if total == 0 {
        return None;
    }
    let total_f = total as f64;
    let weighted_sum: f64 = histogram
        .iter()
        .enumerate()
        .map(|(i, &c)| i as f64 * c as f64)
        .sum();

    let mut best: Option<(f64, usize)> = None;
    let mut w0 = 0.0;
    let mut sum0 = 0.0;
    for (t, &count) in histogram.iter().enumerate() {
        w0 += count as f64;
        sum0 += t as f64 * count as f64;
        let w1 = total_f - w0;
        if w0 == 0.0 {
            continue;
        }
        if w1 == 0.0 {
            break;
        }
        let mu0 = sum0 / w0;
        let mu1 = (weighted_sum - sum0) / w1;
        let variance = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if best.map_or(true, |(v, _)| variance > v) {
            best = Some((variance, t));
        }
    }
    best.map(|(_, t)| t)
}

/// Histogram of the samples over their observed min-max range.
pub fn sample_histogram(volume: &Volume, bins: usize) -> (Vec<u64>, f32, f32) {
    let mut min = f32::INFINITY;
    let mut max = f32::NEG_INFINITY;
    for &s in volume.samples() {
        min = min.min(s);
        max = max.max(s);
    }
    let mut hist = vec![0u64; bins];
    let range = (max - min) as f64;
    for &s in volume.samples() {
        let idx = if range > 0.0 {
            (((s - min) as f64 / range) * bins as f64) as usize
        } else {
            0
        };
        hist[idx.min(bins - 1)] += 1;
    }
    (hist, min, max)
}

/// Otsu threshold over a 256-bin histogram of the sample range. Samples
/// strictly above the returned value are foreground.
pub fn otsu_threshold(volume: &Volume) -> Result<f64> {
    let (hist, min, max) = sample_histogram(volume, OTSU_BINS);
    if max <= min {
        return Err(Error::DegenerateInput(
            "volume is constant; no threshold separates two classes".into(),
        ));
    }
    let bin = otsu_bin(&hist).ok_or_else(|| Error::DegenerateInput("empty histogram".into()))?;
    let width = (max as f64 - min as f64) / OTSU_BINS as f64;
    Ok(min as f64 + (bin as f64 + 1.0) * width)
}

/// Foreground mask of samples strictly above the threshold.
pub fn threshold_mask(volume: &Volume, threshold: f64) -> BinaryMask {
    BinaryMask {
        dims: volume.dims(),
        data: volume
            .samples()
            .iter()
            .map(|&s| (s as f64) > threshold)
            .collect(),
    }
}

/// Keeps only the largest 6-connected component of the mask. Size ties break
/// toward the component whose seed voxel comes first in (h, w, d) scan order.
pub fn largest_component(mask: &BinaryMask) -> Result<BinaryMask> {
    let [nh, nw, nd] = mask.dims;
    let n = mask.data.len();
    let mut labels: Vec<u32> = vec![0; n];
    let mut sizes: Vec<usize> = vec![0]; // sizes[0] unused (background)
    let mut queue: Vec<usize> = Vec::new();

    for seed in 0..n {
        if !mask.data[seed] || labels[seed] != 0 {
            continue;
        }
        let label = sizes.len() as u32;
        sizes.push(0);
        labels[seed] = label;
        queue.clear();
        queue.push(seed);
        let mut size = 0;
        while let Some(idx) = queue.pop() {
            size += 1;
            let d = idx % nd;
            let w = (idx / nd) % nw;
            let h = idx / (nd * nw);
            let mut visit = |hh: usize, ww: usize, dd: usize| {
                let j = (hh * nw + ww) * nd + dd;
                if mask.data[j] && labels[j] == 0 {
                    labels[j] = label;
                    queue.push(j);
                }
            };
            if h > 0 {
                visit(h - 1, w, d);
            }
            if h + 1 < nh {
                visit(h + 1, w, d);
            }
            if w > 0 {
                visit(h, w - 1, d);
            }
            if w + 1 < nw {
                visit(h, w + 1, d);
            }
            if d > 0 {
                visit(h, w, d - 1);
            }
            if d + 1 < nd {
                visit(h, w, d + 1);
            }
        }
        let li = label as usize;
        sizes[li] = size;
    }

    if sizes.len() == 1 {
        return Err(Error::EmptySegmentation);
    }
    // components were seeded in scan order, so the first maximum wins ties
    let mut best_label = 1;
    for (label, &size) in sizes.iter().enumerate().skip(1) {
        if size > sizes[best_label] {
            best_label = label;
        }
    }
    let best = best_label as u32;
    Ok(BinaryMask {
        dims: mask.dims,
        data: labels.iter().map(|&l| l == best).collect(),
    })
}

/// Downsamples by a factor of two with 2x2x2 mean pooling (odd trailing
/// voxels dropped), then zero-pads symmetrically to 256^3 with any odd pad
/// surplus on the high-index side. Spacing doubles; the origin keeps the
/// retained voxels at their physical positions.
pub fn standardize_layout(volume: &Volume) -> Result<Volume> {
    let [h, w, d] = volume.dims();
    let pooled = [h / 2, w / 2, d / 2];
    if pooled.iter().any(|&p| p == 0) {
        return Err(Error::InvalidArgument(format!(
            "volume dims {:?} too small to downsample",
            volume.dims()
        )));
    }
    if pooled.iter().any(|&p| p > STANDARD_DIM) {
        return Err(Error::SizeMismatch(format!(
            "post-downsample dims {pooled:?} exceed {STANDARD_DIM}"
        )));
    }

    let pad_low = [
        (STANDARD_DIM - pooled[0]) / 2,
        (STANDARD_DIM - pooled[1]) / 2,
        (STANDARD_DIM - pooled[2]) / 2,
    ];

    let meta_in = volume.meta();
    let spacing = [
        meta_in.spacing[0] * 2.0,
        meta_in.spacing[1] * 2.0,
        meta_in.spacing[2] * 2.0,
    ];
    // pooled voxel j covers source voxels 2j and 2j+1: center at origin + (2j + 0.5) s
    let origin = [
        meta_in.origin[0] + 0.5 * meta_in.spacing[0] - pad_low[0] as f64 * spacing[0],
        meta_in.origin[1] + 0.5 * meta_in.spacing[1] - pad_low[1] as f64 * spacing[1],
        meta_in.origin[2] + 0.5 * meta_in.spacing[2] - pad_low[2] as f64 * spacing[2],
    ];
    let mut meta = VolumeMeta::new([STANDARD_DIM; 3], spacing, origin)?;
    meta.element = ElementKind::F32;

    let mut out = Volume::zeros(meta);
    for ph in 0..pooled[0] {
        for pw in 0..pooled[1] {
            for pd in 0..pooled[2] {
                let mut acc = 0.0f64;
                for dh in 0..2 {
                    for dw in 0..2 {
                        for dd in 0..2 {
                            acc += volume.get(2 * ph + dh, 2 * pw + dw, 2 * pd + dd) as f64;
                        }
                    }
                }
                out.set(
                    ph + pad_low[0],
                    pw + pad_low[1],
                    pd + pad_low[2],
                    (acc / 8.0) as f32,
                );
            }
        }
    }
    Ok(out)
}

/// The three orthogonal mid-slices at index `floor(dim/2)`, in fixed
/// (H-slice, W-slice, D-slice) order.
pub fn extract_center_planes(volume: &Volume) -> [PlaneImage; 3] {
    let [h, w, d] = volume.dims();
    let (ch, cw, cd) = (h / 2, w / 2, d / 2);

    let mut i1 = Vec::with_capacity(w * d);
    for ww in 0..w {
        for dd in 0..d {
            i1.push(volume.get(ch, ww, dd));
        }
    }
    let mut i2 = Vec::with_capacity(h * d);
    for hh in 0..h {
        for dd in 0..d {
            i2.push(volume.get(hh, cw, dd));
        }
    }
    let mut i3 = Vec::with_capacity(h * w);
    for hh in 0..h {
        for ww in 0..w {
            i3.push(volume.get(hh, ww, cd));
        }
    }
    [
        PlaneImage { rows: w, cols: d, data: i1 },
        PlaneImage { rows: h, cols: d, data: i2 },
        PlaneImage { rows: h, cols: w, data: i3 },
    ]
}
