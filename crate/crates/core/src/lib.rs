//! Weakly-supervised surface crack segmentation.
//!
//! A coarse localisation map (patch classifier scores averaged with a
//! class-activation map) is fused with a patch-local multi-Otsu
//! segmentation of the image. See [`pipeline`] for the stage order.

pub mod backend;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod filters;
pub mod grid;
pub mod io;
pub mod pipeline;
pub mod raster;
pub mod resize;
pub mod scoremap;
pub mod threshold;

pub use backend::{
    load_cam, CamMap, FileBackend, ModelBackend, ModelManifest, PatchClassifier, PatchModel,
    PatchScoreGrid,
};
pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use eval::{classification_f1, confusion_at, macro_f1, ConfusionCounts, PRCurve};
pub use filters::{bilateral_filter, close, dilate, erode, BilateralParams, StructuringElement};
pub use grid::{make_patch_grid, PatchGrid};
pub use pipeline::{
    fuse, gold_standard_localisation, gold_standard_segment, localisation_from_scores,
    merge_localisation, segment, SegmentationStages,
};
pub use raster::{mirror_pad, BinaryMask, Raster, ScoreMap};
pub use resize::lanczos_resize;
pub use scoremap::{decode_scoremap, encode_scoremap, load_scoremap, save_scoremap};
pub use threshold::{otsu2, otsu3, patch_threshold_segment, Histogram256, OtsuMode};
