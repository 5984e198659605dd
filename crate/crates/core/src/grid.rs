//! Overlapping square patch enumeration.

use crate::error::{Error, Result};

/// Row-major list of patch origins over a `width` x `height` image.
///
/// Origins run over multiples of `stride` up to and including the first
/// multiple that lets the patch reach the far edge. Patches that extend past
/// the right or bottom border are read through mirror padding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchGrid {
    pub width: usize,
    pub height: usize,
    pub patch_size: usize,
    pub stride: usize,
    pub cols: usize,
    pub rows: usize,
}

fn axis_count(dim: usize, patch: usize, stride: usize) -> usize {
    if dim <= patch {
        1
    } else {
        (dim - patch).div_ceil(stride) + 1
    }
}

pub fn make_patch_grid(
    width: usize,
    height: usize,
    patch_size: usize,
    stride: usize,
) -> Result<PatchGrid> {
    if width == 0 || height == 0 {
        return Err(Error::Shape(format!(
            "cannot tile a {width}x{height} image"
        )));
    }
    if patch_size == 0 {
        return Err(Error::Parameter("patch size must be at least 1".into()));
    }
    if stride == 0 || stride > patch_size {
        return Err(Error::Parameter(format!(
            "stride {stride} must be in [1, {patch_size}]"
        )));
    }
    Ok(PatchGrid {
        width,
        height,
        patch_size,
        stride,
        cols: axis_count(width, patch_size, stride),
        rows: axis_count(height, patch_size, stride),
    })
}

impl PatchGrid {
    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Origin of the patch at grid cell `(col, row)`.
    pub fn origin_at(&self, col: usize, row: usize) -> (usize, usize) {
        (col * self.stride, row * self.stride)
    }

    pub fn x_origins(&self) -> Vec<usize> {
        (0..self.cols).map(|c| c * self.stride).collect()
    }

    pub fn y_origins(&self) -> Vec<usize> {
        (0..self.rows).map(|r| r * self.stride).collect()
    }

    /// All origins, row-major.
    pub fn origins(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| self.origin_at(c, r)))
    }

    /// Footprint of a patch clipped to the image, as half-open ranges.
    pub fn clipped_footprint(
        &self,
        origin: (usize, usize),
    ) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let (x, y) = origin;
        (
            x..(x + self.patch_size).min(self.width),
            y..(y + self.patch_size).min(self.height),
        )
    }

    /// Grid columns whose clipped footprint contains image column `x`.
    pub fn covering_cols(&self, x: usize) -> std::ops::Range<usize> {
        covering(x, self.patch_size, self.stride, self.cols)
    }

    /// Grid rows whose clipped footprint contains image row `y`.
    pub fn covering_rows(&self, y: usize) -> std::ops::Range<usize> {
        covering(y, self.patch_size, self.stride, self.rows)
    }

    /// Number of patches covering pixel `(x, y)`.
    pub fn coverage(&self, x: usize, y: usize) -> usize {
        self.covering_cols(x).len() * self.covering_rows(y).len()
    }

    /// Checks that a stored grid description matches this one.
    pub fn matches(&self, cols: usize, rows: usize) -> bool {
        self.cols == cols && self.rows == rows
    }
}

// origin o = i*stride covers p iff o <= p < o + patch
fn covering(p: usize, patch: usize, stride: usize, count: usize) -> std::ops::Range<usize> {
    let hi = (p / stride + 1).min(count);
    let lo = if p + 1 > patch {
        (p + 1 - patch).div_ceil(stride)
    } else {
        0
    };
    lo.min(hi)..hi
}
