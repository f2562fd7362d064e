//! Invariance of image classifiers to geometric transformation groups.
//!
//! The score of an image is the geodesic distance, on the manifold of its
//! transformed versions, from the identity to the nearest transformation
//! that changes the classifier's decision, divided by the image norm. The
//! manifold metric is pulled back from L² onto the group parameters and the
//! geodesic distance is computed with Fast Marching on a lattice of group
//! elements, stopping at the first frozen node the classifier disagrees on.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

pub mod classifier;
pub mod error;
pub mod fast_marching;
pub mod groups;
pub mod image;
mod linalg;
pub mod metric;
pub mod scalar;
pub mod scoring;
pub mod synthetic;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Image64 = image::Image<f64>;
pub type Image32 = image::Image<f32>;
pub type TransformGroup64 = groups::TransformGroup<f64>;
pub type Params64 = groups::Params<f64>;
pub type MetricTensor64 = metric::MetricTensor<f64>;
pub type DistanceMap64 = fast_marching::DistanceMap<f64>;
pub type InvarianceResult64 = scoring::InvarianceResult<f64>;
