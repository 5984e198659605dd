//! Patch score grids and their `.psg` file format.
//!
//! Layout (little-endian): magic `PSG1`, then `u32` grid_w, grid_h,
//! patch_size, stride, src_w, src_h, then grid_w * grid_h `f32` scores in
//! row-major grid order.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{make_patch_grid, PatchGrid};

pub const PSG_MAGIC: &[u8; 4] = b"PSG1";
pub const PSG_HEADER_LEN: usize = 4 + 6 * 4;

/// One crack probability per localisation patch origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchScoreGrid {
    pub grid_w: usize,
    pub grid_h: usize,
    pub patch_size: usize,
    pub stride: usize,
    pub src_w: usize,
    pub src_h: usize,
    pub scores: Vec<f32>,
}

impl PatchScoreGrid {
    /// Validates the scores against the grid implied by the source size.
    pub fn new(
        src_w: usize,
        src_h: usize,
        patch_size: usize,
        stride: usize,
        scores: Vec<f32>,
    ) -> Result<Self> {
        let grid = make_patch_grid(src_w, src_h, patch_size, stride)?;
        let g = Self {
            grid_w: grid.cols,
            grid_h: grid.rows,
            patch_size,
            stride,
            src_w,
            src_h,
            scores,
        };
        g.validate()?;
        Ok(g)
    }

    /// Builds a grid by evaluating `score` at every origin, row-major.
    pub fn from_fn(
        src_w: usize,
        src_h: usize,
        patch_size: usize,
        stride: usize,
        score: impl Fn(usize, usize) -> f32,
    ) -> Result<Self> {
        let grid = make_patch_grid(src_w, src_h, patch_size, stride)?;
        let scores = grid.origins().map(|(x, y)| score(x, y)).collect();
        Self::new(src_w, src_h, patch_size, stride, scores)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.patch_grid()?;
        if !grid.matches(self.grid_w, self.grid_h) {
            return Err(Error::Config(format!(
                "grid {}x{} inconsistent with {}x{} source at patch {} stride {} (expected {}x{})",
                self.grid_w,
                self.grid_h,
                self.src_w,
                self.src_h,
                self.patch_size,
                self.stride,
                grid.cols,
                grid.rows
            )));
        }
        if self.scores.len() != self.grid_w * self.grid_h {
            return Err(Error::Shape(format!(
                "expected {} scores, got {}",
                self.grid_w * self.grid_h,
                self.scores.len()
            )));
        }
        if let Some(v) = self
            .scores
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::Data(format!("patch score {v} outside [0,1]")));
        }
        Ok(())
    }

    pub fn patch_grid(&self) -> Result<PatchGrid> {
        make_patch_grid(self.src_w, self.src_h, self.patch_size, self.stride)
    }

    #[inline]
    pub fn score(&self, col: usize, row: usize) -> f32 {
        self.scores[row * self.grid_w + col]
    }

    /// Checks that this grid was produced for the requested image and
    /// patch geometry.
    pub fn ensure_matches(&self, w: usize, h: usize, patch_size: usize, stride: usize) -> Result<()> {
        if (self.src_w, self.src_h, self.patch_size, self.stride) != (w, h, patch_size, stride) {
            return Err(Error::Config(format!(
                "stored score grid is for a {}x{} image with patch {} stride {}, requested {}x{} with patch {} stride {}",
                self.src_w, self.src_h, self.patch_size, self.stride, w, h, patch_size, stride
            )));
        }
        Ok(())
    }
}

pub fn encode_psg(g: &PatchScoreGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(PSG_HEADER_LEN + 4 * g.scores.len());
    out.extend_from_slice(PSG_MAGIC);
    for v in [g.grid_w, g.grid_h, g.patch_size, g.stride, g.src_w, g.src_h] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for s in &g.scores {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn decode_psg(bytes: &[u8]) -> Result<PatchScoreGrid> {
    if bytes.len() < PSG_HEADER_LEN {
        return Err(Error::Format(format!(
            "score grid truncated: {} bytes, header needs {PSG_HEADER_LEN}",
            bytes.len()
        )));
    }
    if &bytes[..4] != PSG_MAGIC {
        return Err(Error::Format(format!(
            "bad score grid magic {:?}",
            String::from_utf8_lossy(&bytes[..4])
        )));
    }
    let field = |i: usize| crate::scoremap::read_u32(bytes, 4 + 4 * i) as usize;
    let (grid_w, grid_h) = (field(0), field(1));
    let expected = grid_w
        .checked_mul(grid_h)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format("score grid dimensions overflow".into()))?;
    let payload = &bytes[PSG_HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "score grid {grid_w}x{grid_h} needs {expected} payload bytes, found {}",
            payload.len()
        )));
    }
    let g = PatchScoreGrid {
        grid_w,
        grid_h,
        patch_size: field(2),
        stride: field(3),
        src_w: field(4),
        src_h: field(5),
        scores: payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
            .collect(),
    };
    g.validate()?;
    Ok(g)
}

pub fn save_psg(g: &PatchScoreGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_psg(g)).map_err(|e| Error::io(path, e))
}

pub fn load_psg(path: impl AsRef<Path>) -> Result<PatchScoreGrid> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_psg(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let g = PatchScoreGrid::from_fn(64, 48, 32, 16, |x, y| ((x + y) % 3) as f32 / 2.0).unwrap();
        assert_eq!((g.grid_w, g.grid_h), (3, 2));
        let bytes = encode_psg(&g);
        assert_eq!(bytes.len(), 28 + 6 * 4);
        assert_eq!(&bytes[..4], b"PSG1");
        assert_eq!(&bytes[4..8], &3u32.to_le_bytes());
        assert_eq!(&bytes[24..28], &48u32.to_le_bytes());
        assert_eq!(decode_psg(&bytes).unwrap(), g);
    }

    #[test]
    fn rejects_inconsistent_grid() {
        let mut g = PatchScoreGrid::from_fn(64, 64, 32, 16, |_, _| 0.5).unwrap();
        g.grid_w = 4;
        g.scores.extend([0.5; 3]);
        let bytes = encode_psg(&g);
        assert!(matches!(decode_psg(&bytes), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_bad_magic_and_out_of_range() {
        let g = PatchScoreGrid::from_fn(32, 32, 32, 16, |_, _| 0.5).unwrap();
        let mut bytes = encode_psg(&g);
        bytes[3] = b'2';
        assert!(matches!(decode_psg(&bytes), Err(Error::Format(_))));
        assert!(PatchScoreGrid::new(32, 32, 32, 16, vec![1.5]).is_err());
        assert!(PatchScoreGrid::new(32, 32, 32, 16, vec![0.5, 0.5]).is_err());
    }
}
