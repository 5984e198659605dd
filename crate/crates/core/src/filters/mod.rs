mod bilateral;
mod morphology;

pub use bilateral::{bilateral_filter, BilateralParams};
pub use morphology::{close, dilate, dilate_mask, erode, erode_mask, StructuringElement};
