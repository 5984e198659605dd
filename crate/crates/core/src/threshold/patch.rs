//! Patch-local Otsu thresholding with unanimous fusion.
//!
//! Each grid patch (mirror-padded where it runs past the border) gets its
//! own crack threshold from its histogram. A real pixel ends up as crack
//! only when every patch whose footprint contains it marks it as crack,
//! i.e. its quantized intensity is at or below that patch's threshold.
//! Patches holding a single intensity carry no crack evidence and vote 0
//! everywhere.

use rayon::prelude::*;

use super::otsu::{crack_threshold, quantize, Histogram256, OtsuMode};
use crate::error::{Error, Result};
use crate::grid::{make_patch_grid, PatchGrid};
use crate::raster::{BinaryMask, Raster};

/// Per-patch thresholds in grid order; `None` marks a degenerate patch.
pub fn patch_thresholds(r: &Raster, grid: &PatchGrid, mode: OtsuMode) -> Result<Vec<Option<u8>>> {
    let origins: Vec<_> = grid.origins().collect();
    origins
        .par_iter()
        .map(|&(x, y)| {
            let values = r.window(x as isize, y as isize, grid.patch_size, grid.patch_size);
            let hist = Histogram256::from_values(&values);
            if hist.occupied_bins() <= 1 {
                return Ok(None);
            }
            crack_threshold(&hist, mode).map(Some)
        })
        .collect()
}

pub fn patch_threshold_segment(
    r: &Raster,
    patch_size: usize,
    stride: usize,
    mode: OtsuMode,
) -> Result<BinaryMask> {
    let grid = make_patch_grid(r.width(), r.height(), patch_size, stride)?;
    let thresholds = patch_thresholds(r, &grid, mode)?;
    fuse_patch_votes(r, &grid, &thresholds)
}

/// Unanimous fusion of per-patch thresholds given in grid order.
pub fn fuse_patch_votes(r: &Raster, grid: &PatchGrid, thresholds: &[Option<u8>]) -> Result<BinaryMask> {
    let (w, h) = r.dims();
    if (grid.width, grid.height) != (w, h) || thresholds.len() != grid.len() {
        return Err(Error::Shape(format!(
            "{} thresholds on a {}x{} grid for {}x{} image, expected {} on {w}x{h}",
            thresholds.len(),
            grid.width,
            grid.height,
            w,
            h,
            grid.len()
        )));
    }
    let bins: Vec<u8> = r.data().iter().map(|&v| quantize(v)).collect();
    let mut out = vec![0u8; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let rows = grid.covering_rows(y);
        for (x, o) in row.iter_mut().enumerate() {
            let bin = bins[y * w + x];
            let cols = grid.covering_cols(x);
            let unanimous = rows.clone().all(|gr| {
                cols.clone().all(|gc| {
                    matches!(thresholds[gr * grid.cols + gc], Some(k) if bin <= k)
                })
            });
            *o = u8::from(unanimous);
        }
    });
    Ok(BinaryMask::from_raw(w, h, out))
}

/// Single threshold over the whole image (baseline thresholders).
pub fn global_otsu_segment(r: &Raster, mode: OtsuMode) -> Result<BinaryMask> {
    let hist = Histogram256::from_values(r.data());
    let (w, h) = r.dims();
    if hist.occupied_bins() <= 1 {
        return BinaryMask::zeros(w, h);
    }
    let k = crack_threshold(&hist, mode)?;
    Ok(BinaryMask::from_raw(
        w,
        h,
        r.data().iter().map(|&v| u8::from(quantize(v) <= k)).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_gives_empty_mask() {
        let r = Raster::filled(40, 40, 0.6).unwrap();
        for mode in [OtsuMode::Two, OtsuMode::Three] {
            assert_eq!(patch_threshold_segment(&r, 32, 8, mode).unwrap().count_ones(), 0);
        }
        assert_eq!(global_otsu_segment(&r, OtsuMode::Three).unwrap().count_ones(), 0);
    }

    #[test]
    fn dark_line_is_recovered() {
        let (w, h) = (64, 64);
        let data: Vec<f32> = (0..w * h)
            .map(|i| if i / w == 30 { 0.05 } else { 0.8 })
            .collect();
        let r = Raster::new(w, h, data).unwrap();
        let m = patch_threshold_segment(&r, 32, 8, OtsuMode::Three).unwrap();
        for y in 0..h {
            for x in 0..w {
                assert_eq!(m.get(x, y), u8::from(y == 30), "({x},{y})");
            }
        }
    }

    #[test]
    fn one_dissenting_patch_vetoes() {
        // left half dark gradient, right half flat: pixels covered by a flat
        // patch (all-zero votes) are vetoed even if other patches agree
        let (w, h) = (16, 8);
        let data: Vec<f32> = (0..w * h)
            .map(|i| {
                let x = i % w;
                if x < 4 {
                    0.1 + 0.05 * (i / w) as f32
                } else {
                    0.9
                }
            })
            .collect();
        let r = Raster::new(w, h, data).unwrap();
        let grid = make_patch_grid(w, h, 8, 4).unwrap();
        let thr = patch_thresholds(&r, &grid, OtsuMode::Two).unwrap();
        // patch at x=8 sees only 0.9
        assert_eq!(thr[2], None);
        let m = patch_threshold_segment(&r, 8, 4, OtsuMode::Two).unwrap();
        for y in 0..h {
            for x in 8..w {
                assert_eq!(m.get(x, y), 0);
            }
        }
    }
}
