use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PatchClassifier, PatchScoreGrid};
use crate::error::{Error, Result};
use crate::grid::make_patch_grid;
use crate::raster::Raster;
use crate::resize::lanczos_resize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelOrder {
    Rgb,
    Bgr,
    Gray,
}

impl ChannelOrder {
    pub fn channels(self) -> usize {
        match self {
            ChannelOrder::Gray => 1,
            ChannelOrder::Rgb | ChannelOrder::Bgr => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputHead {
    #[serde(rename = "softmax2")]
    Softmax2,
    #[serde(rename = "sigmoid1")]
    Sigmoid1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalization {
    pub mean: Vec<f32>,
    pub std: Vec<f32>,
}

/// Describes how patches are fed to an exported classifier and how its
/// outputs map to a crack probability. Pixel values are in `[0, 1]` before
/// `(v - mean) / std` is applied per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub input_size: usize,
    pub channel_order: ChannelOrder,
    pub normalization: Normalization,
    pub output_head: OutputHead,
    pub crack_index: usize,
}

impl ModelManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: ModelManifest = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid model manifest: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_size == 0 {
            return Err(Error::Config("manifest input_size must be >= 1".into()));
        }
        let c = self.channel_order.channels();
        if self.normalization.mean.len() != c || self.normalization.std.len() != c {
            return Err(Error::Config(format!(
                "normalization needs {c} mean/std values for {:?}",
                self.channel_order
            )));
        }
        if self.normalization.std.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Config("normalization std must be > 0".into()));
        }
        let outputs = match self.output_head {
            OutputHead::Softmax2 => 2,
            OutputHead::Sigmoid1 => 1,
        };
        if self.crack_index >= outputs {
            return Err(Error::Config(format!(
                "crack_index {} out of range for {:?}",
                self.crack_index, self.output_head
            )));
        }
        Ok(())
    }

    /// Maps one row of model outputs to a crack probability.
    pub fn crack_probability(&self, logits: &[f32]) -> Result<f32> {
        match self.output_head {
            OutputHead::Softmax2 => {
                if logits.len() != 2 {
                    return Err(Error::Backend(format!(
                        "softmax2 head expects 2 logits, model produced {}",
                        logits.len()
                    )));
                }
                let m = logits[0].max(logits[1]) as f64;
                let e: Vec<f64> = logits.iter().map(|&l| (l as f64 - m).exp()).collect();
                Ok((e[self.crack_index] / (e[0] + e[1])) as f32)
            }
            OutputHead::Sigmoid1 => {
                if logits.len() != 1 {
                    return Err(Error::Backend(format!(
                        "sigmoid1 head expects 1 logit, model produced {}",
                        logits.len()
                    )));
                }
                Ok((1.0 / (1.0 + (-(logits[0] as f64)).exp())) as f32)
            }
        }
    }
}

/// A forward pass over a batch of NCHW patches.
pub trait PatchModel: Send + Sync {
    /// `input` has shape `[n, channels, size, size]`; returns `n` rows of
    /// raw outputs.
    fn forward(&self, input: &[f32], shape: [usize; 4]) -> Result<Vec<Vec<f32>>>;
}

impl<M: PatchModel + ?Sized> PatchModel for Box<M> {
    fn forward(&self, input: &[f32], shape: [usize; 4]) -> Result<Vec<Vec<f32>>> {
        (**self).forward(input, shape)
    }
}

/// Scores patches by running a [`PatchModel`] on each mirror-padded patch.
///
/// The grayscale patch is resampled to the manifest's input size and
/// replicated across colour channels.
pub struct ModelBackend<M> {
    model: M,
    manifest: ModelManifest,
    batch_size: usize,
}

impl<M: PatchModel> ModelBackend<M> {
    pub fn new(model: M, manifest: ModelManifest) -> Result<Self> {
        manifest.validate()?;
        Ok(Self {
            model,
            manifest,
            batch_size: 32,
        })
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    pub fn manifest(&self) -> &ModelManifest {
        &self.manifest
    }

    /// Normalized CHW input for the patch at `origin`.
    pub fn prepare_patch(&self, image: &Raster, origin: (usize, usize), patch_size: usize) -> Result<Vec<f32>> {
        let values = image.window(origin.0 as isize, origin.1 as isize, patch_size, patch_size);
        let patch = Raster::new(patch_size, patch_size, values)?;
        let size = self.manifest.input_size;
        let patch = if size == patch_size {
            patch
        } else {
            lanczos_resize(&patch, size, size)?
        };
        let norm = &self.manifest.normalization;
        let mut out = Vec::with_capacity(norm.mean.len() * size * size);
        for (mean, std) in norm.mean.iter().zip(&norm.std) {
            out.extend(patch.data().iter().map(|v| (v - mean) / std));
        }
        Ok(out)
    }
}

impl<M: PatchModel> PatchClassifier for ModelBackend<M> {
    fn score_patches(&self, image: &Raster, patch_size: usize, stride: usize) -> Result<PatchScoreGrid> {
        let grid = make_patch_grid(image.width(), image.height(), patch_size, stride)?;
        let origins: Vec<_> = grid.origins().collect();
        let channels = self.manifest.channel_order.channels();
        let size = self.manifest.input_size;
        let batches: Vec<Vec<f32>> = origins
            .par_chunks(self.batch_size)
            .map(|chunk| -> Result<Vec<f32>> {
                let mut input = Vec::with_capacity(chunk.len() * channels * size * size);
                for &o in chunk {
                    input.extend(self.prepare_patch(image, o, patch_size)?);
                }
                let rows = self
                    .model
                    .forward(&input, [chunk.len(), channels, size, size])?;
                if rows.len() != chunk.len() {
                    return Err(Error::Backend(format!(
                        "model returned {} rows for a batch of {}",
                        rows.len(),
                        chunk.len()
                    )));
                }
                rows.iter()
                    .map(|r| self.manifest.crack_probability(r))
                    .collect()
            })
            .collect::<Result<_>>()?;
        PatchScoreGrid::new(
            image.width(),
            image.height(),
            patch_size,
            stride,
            batches.into_iter().flatten().collect(),
        )
    }
}
