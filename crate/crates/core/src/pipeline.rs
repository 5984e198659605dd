//! End-to-end crack segmentation.
//!
//! Coarse localisation: patch scores are averaged per stride block,
//! upsampled, averaged with the activation map, cut at the retention
//! threshold and eroded. Segmentation: the (bilateral-filtered) image is
//! thresholded patch by patch. The two are multiplied, filtered again and
//! closed.

use crate::backend::{CamMap, PatchClassifier, PatchScoreGrid};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::filters::{bilateral_filter, close, dilate, erode};
use crate::raster::{ensure_same_dims, BinaryMask, Raster, ScoreMap};
use crate::resize::lanczos_resize;
use crate::threshold::patch_threshold_segment;

/// Stride-resolution map: one cell per `stride x stride` block holding the
/// mean score of every patch whose clipped footprint overlaps the block.
pub fn block_mean_map(g: &PatchScoreGrid) -> Result<Raster> {
    g.validate()?;
    let s = g.stride;
    let cells_w = g.src_w.div_ceil(s);
    let cells_h = g.src_h.div_ceil(s);
    // grid columns overlapping [b0, b1) along one axis
    let overlapping = |b0: usize, b1: usize, count: usize| -> std::ops::Range<usize> {
        let lo = if b0 + 1 > g.patch_size {
            (b0 + 1 - g.patch_size).div_ceil(s)
        } else {
            0
        };
        let hi = ((b1 - 1) / s + 1).min(count);
        lo..hi
    };
    let mut cells = Vec::with_capacity(cells_w * cells_h);
    for cy in 0..cells_h {
        let rows = overlapping(cy * s, ((cy + 1) * s).min(g.src_h), g.grid_h);
        for cx in 0..cells_w {
            let cols = overlapping(cx * s, ((cx + 1) * s).min(g.src_w), g.grid_w);
            let mut sum = 0.0f64;
            let mut n = 0usize;
            for r in rows.clone() {
                for c in cols.clone() {
                    sum += g.score(c, r) as f64;
                    n += 1;
                }
            }
            cells.push((sum / n as f64) as f32);
        }
    }
    Raster::new(cells_w, cells_h, cells)
}

/// Patch-classification localisation map at full resolution.
///
/// The block map is upsampled by exactly `stride` and cropped, so block
/// boundaries stay aligned with the image when its size is not a multiple
/// of the stride.
pub fn localisation_from_scores(g: &PatchScoreGrid, out_w: usize, out_h: usize) -> Result<ScoreMap> {
    if (g.src_w, g.src_h) != (out_w, out_h) {
        return Err(Error::Config(format!(
            "score grid built for {}x{}, requested {out_w}x{out_h}",
            g.src_w, g.src_h
        )));
    }
    let cells = block_mean_map(g)?;
    let up = lanczos_resize(&cells, cells.width() * g.stride, cells.height() * g.stride)?;
    up.crop(0, 0, out_w, out_h)
}

/// Averages the two localisation maps, zeroes everything at or below the
/// retention cut, and erodes the rest.
pub fn merge_localisation(patch_map: &ScoreMap, cam: &CamMap, cfg: &PipelineConfig) -> Result<ScoreMap> {
    let cut = cfg.retention_cut as f32;
    let merged = patch_map.zip_with(cam, |a, b| {
        let m = (a + b) / 2.0;
        if m > cut {
            m
        } else {
            0.0
        }
    })?;
    Ok(erode(&merged, &cfg.erosion()?))
}

/// Thresholding branch: optional bilateral pre-filter, then patch-local
/// Otsu with unanimous fusion.
pub fn threshold_stage(image: &Raster, cfg: &PipelineConfig) -> Result<BinaryMask> {
    let filtered;
    let src = if cfg.enable_bilateral {
        filtered = bilateral_filter(image, &cfg.bilateral()?);
        &filtered
    } else {
        image
    };
    patch_threshold_segment(src, cfg.loc_patch, cfg.thr_stride, cfg.otsu_mode)
}

/// Multiplies localisation and segmentation, then applies the optional
/// bilateral filter and closing.
pub fn fuse(loc: &ScoreMap, seg: &BinaryMask, cfg: &PipelineConfig) -> Result<ScoreMap> {
    ensure_same_dims(loc.dims(), seg.dims())?;
    let mut out = loc.zip_with(&seg.to_raster(), |l, s| l * s)?;
    if cfg.enable_bilateral {
        out = bilateral_filter(&out, &cfg.bilateral()?);
    }
    if cfg.enable_closing {
        out = close(&out, &cfg.closing()?);
    }
    Ok(out)
}

/// Interim and final maps of one pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationStages {
    pub localisation: ScoreMap,
    pub threshold: BinaryMask,
    pub output: ScoreMap,
}

/// Fuses an externally supplied localisation map with the thresholding
/// branch.
pub fn segment_with_localisation(
    image: &Raster,
    localisation: ScoreMap,
    cfg: &PipelineConfig,
) -> Result<SegmentationStages> {
    cfg.validate()?;
    ensure_same_dims(image.dims(), localisation.dims())?;
    let threshold = threshold_stage(image, cfg)?;
    let output = fuse(&localisation, &threshold, cfg)?;
    Ok(SegmentationStages {
        localisation,
        threshold,
        output,
    })
}

/// Weakly-supervised localisation from classifier scores and activations.
pub fn classifier_localisation(
    image: &Raster,
    backend: &dyn PatchClassifier,
    cam: &CamMap,
    cfg: &PipelineConfig,
) -> Result<ScoreMap> {
    ensure_same_dims(image.dims(), cam.dims())?;
    let grid = backend.score_patches(image, cfg.loc_patch, cfg.loc_stride)?;
    let patch_map = localisation_from_scores(&grid, image.width(), image.height())?;
    merge_localisation(&patch_map, cam, cfg)
}

pub fn segment_stages(
    image: &Raster,
    backend: &dyn PatchClassifier,
    cam: &CamMap,
    cfg: &PipelineConfig,
) -> Result<SegmentationStages> {
    cfg.validate()?;
    let loc = classifier_localisation(image, backend, cam, cfg)?;
    segment_with_localisation(image, loc, cfg)
}

pub fn segment(
    image: &Raster,
    backend: &dyn PatchClassifier,
    cam: &CamMap,
    cfg: &PipelineConfig,
) -> Result<ScoreMap> {
    segment_stages(image, backend, cam, cfg).map(|s| s.output)
}

/// Localisation of a perfect classifier: the ground truth widened by
/// dilation, then eroded like a merged localisation map.
pub fn gold_standard_localisation(gt: &BinaryMask, cfg: &PipelineConfig) -> Result<ScoreMap> {
    let widened = dilate(&gt.to_raster(), &cfg.gold_dilation()?);
    Ok(erode(&widened, &cfg.erosion()?))
}

pub fn gold_standard_segment(
    image: &Raster,
    gt: &BinaryMask,
    cfg: &PipelineConfig,
) -> Result<SegmentationStages> {
    ensure_same_dims(image.dims(), gt.dims())?;
    let loc = gold_standard_localisation(gt, cfg)?;
    segment_with_localisation(image, loc, cfg)
}
