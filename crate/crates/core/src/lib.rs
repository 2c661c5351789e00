//! Standardization of fetal-face 3D ultrasound volumes to the canonical
//! front-right pose.
//!
//! The pipeline completes missing anatomical landmarks with a PCA shape
//! model, fits three mutually orthogonal anatomical planes to the landmarks,
//! assembles the standardizing rigid transform, resamples volumes through an
//! affine grid sampler with analytic derivatives, and evaluates alignment
//! with rotation/translation metrics.

pub mod error;
pub mod landmarks;
pub mod metrics;
pub mod optim;
pub mod planes;
pub mod preprocess;
pub mod resample;
pub mod shape;
pub mod synth;
pub mod transform;
pub mod volume;

pub use error::{Error, Result};
pub use landmarks::{Landmark, LandmarkName, LandmarkSet, ALL_NAMES, MODEL_NAMES};
pub use planes::{FitConfig, PlaneAssignment, PlaneKind, PlaneTriple};
pub use transform::{AffineTheta, RigidTransform, UnitQuaternion};
pub use volume::{BinaryMask, ElementKind, PlaneImage, Volume, VolumeMeta};
