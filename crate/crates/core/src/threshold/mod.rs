//! Histogram thresholding: global and patch-local Otsu, Niblack and Sauvola.

mod local;
mod otsu;
mod patch;

pub use local::{niblack, sauvola, NIBLACK_K, SAUVOLA_K, SAUVOLA_R};
pub use otsu::{crack_threshold, otsu2, otsu3, quantize, Histogram256, OtsuMode, OtsuResult3, BINS};
pub use patch::{fuse_patch_votes, global_otsu_segment, patch_threshold_segment, patch_thresholds};
