//! Keygraph-based object detection.
//!
//! Small directed graphs of keypoints (keygraphs) are detected in a model
//! image and in a scene image, their arcs are described by low-frequency
//! Fourier coefficients of intensity profiles, model and scene graphs are
//! matched through keytuples, and the resulting graph correspondences feed a
//! RANSAC homography estimator that samples whole graphs instead of points.
//!
//! The real-valued parts of the crate are generic over [`Scalar`] (`f32` or
//! `f64`); the aliases at the crate root fix the scalar to `f64`, which is
//! what the command-line front end uses.

pub mod descriptor;
pub mod evaluation;
pub mod format;
pub mod geometry;
pub mod image;
pub mod kdtree;
pub mod keygraph;
pub mod keypoint;
pub mod linalg;
pub mod matching;
pub mod pipeline;
pub mod pose;
pub mod scalar;
pub mod synth;

pub use geometry::{Orientation, Point, Triangulation};
pub use keygraph::{Keygraph, KeygraphCorrespondence, Keytuple, Structure};
pub use keypoint::{KeypointSet, KeypointSource};
pub use scalar::Scalar;

/// Grayscale image with `f64` intensities.
pub type GrayImage = image::Image<f64>;
/// Grayscale image with `f32` intensities.
pub type GrayImage32 = image::Image<f32>;
pub type ArcDescriptor = descriptor::ArcDescriptor<f64>;
pub type ArcDescriptor32 = descriptor::ArcDescriptor<f32>;
pub type IntensityProfile = descriptor::IntensityProfile<f64>;
pub type Homography = pose::Homography<f64>;
pub type Homography32 = pose::Homography<f32>;
pub type RansacConfig = pose::RansacConfig<f64>;
pub type ModelStore = matching::ModelStore<f64>;
pub type SelectionParams = matching::SelectionParams<f64>;
pub type Correspondence = KeygraphCorrespondence<f64>;
pub type GroundTruth = evaluation::GroundTruth<f64>;
pub type CurvePoint = evaluation::CurvePoint<f64>;
pub type Detector = pipeline::Detector<f64>;
pub type RunConfig = pipeline::RunConfig<f64>;
