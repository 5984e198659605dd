//! Patch classifiers and class-activation maps.
//!
//! The pipeline only needs one crack probability per localisation patch
//! plus a full-resolution activation map. Scores come either from a stored
//! `.psg` grid ([`FileBackend`]) or from running a model on every patch
//! ([`ModelBackend`]). Activation maps are always read from `.smap` files.

mod model;
mod psg;

use std::path::Path;

pub use model::{
    ChannelOrder, ModelBackend, ModelManifest, Normalization, OutputHead, PatchModel,
};
pub use psg::{
    decode_psg, encode_psg, load_psg, save_psg, PatchScoreGrid, PSG_HEADER_LEN, PSG_MAGIC,
};

use crate::error::{Error, Result};
use crate::raster::{Raster, ScoreMap};
use crate::resize::lanczos_resize;
use crate::scoremap::decode_scoremap_raw;

/// Anything that can turn an image into a grid of patch crack
/// probabilities.
pub trait PatchClassifier: Send + Sync {
    fn score_patches(&self, image: &Raster, patch_size: usize, stride: usize)
        -> Result<PatchScoreGrid>;
}

/// Serves a precomputed score grid.
#[derive(Debug, Clone)]
pub struct FileBackend {
    grid: PatchScoreGrid,
}

impl FileBackend {
    pub fn new(grid: PatchScoreGrid) -> Result<Self> {
        grid.validate()?;
        Ok(Self { grid })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(load_psg(path)?)
    }

    pub fn grid(&self) -> &PatchScoreGrid {
        &self.grid
    }
}

impl PatchClassifier for FileBackend {
    fn score_patches(
        &self,
        image: &Raster,
        patch_size: usize,
        stride: usize,
    ) -> Result<PatchScoreGrid> {
        self.grid
            .ensure_matches(image.width(), image.height(), patch_size, stride)?;
        Ok(self.grid.clone())
    }
}

/// Class-activation map at source resolution, values in `[0, 1]`.
pub type CamMap = ScoreMap;

/// Prepares raw activation values: clamps into `[0, 1]` and resamples to
/// the target size when the stored map has different dimensions.
pub fn cam_from_values(
    width: usize,
    height: usize,
    values: Vec<f32>,
    target_w: usize,
    target_h: usize,
) -> Result<CamMap> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite activation value".into()));
    }
    let cam = Raster::new(
        width,
        height,
        values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
    )?;
    if cam.dims() == (target_w, target_h) {
        Ok(cam)
    } else {
        lanczos_resize(&cam, target_w, target_h)
    }
}

pub fn load_cam(path: impl AsRef<Path>, target_w: usize, target_h: usize) -> Result<CamMap> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (w, h, values) = decode_scoremap_raw(&bytes)?;
    cam_from_values(w, h, values, target_w, target_h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_backend_is_a_passthrough() {
        let grid = PatchScoreGrid::from_fn(64, 64, 32, 16, |_, _| 0.9).unwrap();
        let b = FileBackend::new(grid.clone()).unwrap();
        let img = Raster::filled(64, 64, 0.1).unwrap();
        let other = Raster::filled(64, 64, 0.7).unwrap();
        assert_eq!(b.score_patches(&img, 32, 16).unwrap(), grid);
        assert_eq!(b.score_patches(&other, 32, 16).unwrap(), grid);
    }

    #[test]
    fn file_backend_rejects_mismatched_request() {
        let grid = PatchScoreGrid::from_fn(64, 64, 32, 16, |_, _| 0.9).unwrap();
        let b = FileBackend::new(grid).unwrap();
        let big = Raster::filled(128, 128, 0.1).unwrap();
        assert!(matches!(b.score_patches(&big, 32, 16), Err(Error::Config(_))));
        let same = Raster::filled(64, 64, 0.1).unwrap();
        assert!(matches!(b.score_patches(&same, 32, 8), Err(Error::Config(_))));
    }

    #[test]
    fn cam_passthrough_clamp_and_upsample() {
        let vals: Vec<f32> = (0..16).map(|i| i as f32 / 15.0).collect();
        let cam = cam_from_values(4, 4, vals.clone(), 4, 4).unwrap();
        assert_eq!(cam.data(), vals.as_slice());

        let clamped = cam_from_values(1, 2, vec![1.2, -0.5], 1, 2).unwrap();
        assert_eq!(clamped.data(), &[1.0, 0.0]);

        let up = cam_from_values(8, 8, vec![0.6; 64], 32, 32).unwrap();
        assert_eq!(up.dims(), (32, 32));
        assert!(up.data().iter().all(|v| (v - 0.6).abs() < 1e-5));
    }

    #[test]
    fn cam_nan_is_rejected() {
        assert!(matches!(
            cam_from_values(1, 1, vec![f32::NAN], 1, 1),
            Err(Error::Data(_))
        ));
    }
}
