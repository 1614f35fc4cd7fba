//! Evaluation and post-processing toolkit for segmented shrub detections.
//!
//! The core types are generic over the float type; the aliases below fix
//! it to `f64` (and `f32` where single precision is wanted).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod io;
pub mod mapstats;
pub mod matching;
pub mod metrics;
pub mod pipeline;
pub mod scalar;
pub mod validation;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Point = geometry::Point<f64>;
pub type BBox = geometry::BBox<f64>;
pub type Polygon = geometry::Polygon<f64>;
pub type Region = geometry::Region<f64>;
pub type Detection = matching::Detection<f64>;
pub type GroundTruth = matching::GroundTruth<f64>;
pub type MatchConfig = matching::MatchConfig<f64>;
pub type DissolvedDetection = pipeline::DissolvedDetection<f64>;
pub type PairedSeries = validation::PairedSeries<f64>;
pub type Site = validation::Site<f64>;

pub type Region32 = geometry::Region<f32>;
pub type Detection32 = matching::Detection<f32>;
pub type GroundTruth32 = matching::GroundTruth<f32>;
pub type MatchConfig32 = matching::MatchConfig<f32>;

pub use matching::{evaluate_scene, evaluate_scenes, iou, s_iou_label, s_iou_prediction, ConfusionCounts, Metric, Source};
pub use metrics::{classify_size, precision_recall_f1, SizeClass};
