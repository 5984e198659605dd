//! Grayscale morphology with rectangular structuring elements.
//!
//! Erosion is a moving minimum and dilation a moving maximum over the same
//! window. The window of a `w x h` element spans offsets
//! `[-(w/2), w - 1 - w/2]` horizontally (likewise vertically), so even-sized
//! elements extend one pixel further left/up than right/down. On `{0, 1}`
//! inputs these reduce to binary erosion and dilation.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::{reflect_index, BinaryMask, Raster};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuringElement {
    pub width: usize,
    pub height: usize,
    pub iterations: usize,
}

impl StructuringElement {
    pub fn new(width: usize, height: usize, iterations: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Parameter(format!(
                "structuring element must be at least 1x1, got {width}x{height}"
            )));
        }
        if iterations == 0 {
            return Err(Error::Parameter("iterations must be >= 1".into()));
        }
        Ok(Self {
            width,
            height,
            iterations,
        })
    }

    pub fn square(size: usize, iterations: usize) -> Result<Self> {
        Self::new(size, size, iterations)
    }

    pub fn anchor(&self) -> (usize, usize) {
        (self.width / 2, self.height / 2)
    }
}

#[derive(Clone, Copy)]
enum Extremum {
    Min,
    Max,
}

impl Extremum {
    #[inline]
    fn pick(self, a: f32, b: f32) -> f32 {
        match self {
            Extremum::Min => a.min(b),
            Extremum::Max => a.max(b),
        }
    }

    fn identity(self) -> f32 {
        match self {
            Extremum::Min => f32::INFINITY,
            Extremum::Max => f32::NEG_INFINITY,
        }
    }
}

// one pass of a 1-D moving extremum along rows (horizontal) or columns
fn pass_1d(
    src: &[f32],
    w: usize,
    h: usize,
    len: usize,
    horizontal: bool,
    op: Extremum,
) -> Vec<f32> {
    let before = (len / 2) as isize;
    let after = (len - 1 - len / 2) as isize;
    let mut out = vec![0.0f32; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = op.identity();
            for k in -before..=after {
                let v = if horizontal {
                    src[y * w + reflect_index(x as isize + k, w)]
                } else {
                    src[reflect_index(y as isize + k, h) * w + x]
                };
                acc = op.pick(acc, v);
            }
            *o = acc;
        }
    });
    out
}

fn extremum_filter(r: &Raster, se: &StructuringElement, op: Extremum) -> Raster {
    let (w, h) = r.dims();
    let mut data = r.data().to_vec();
    for _ in 0..se.iterations {
        data = pass_1d(&data, w, h, se.width, true, op);
        data = pass_1d(&data, w, h, se.height, false, op);
    }
    Raster::from_clamped(w, h, data)
}

pub fn erode(r: &Raster, se: &StructuringElement) -> Raster {
    extremum_filter(r, se, Extremum::Min)
}

pub fn dilate(r: &Raster, se: &StructuringElement) -> Raster {
    extremum_filter(r, se, Extremum::Max)
}

/// `iterations` dilations followed by as many erosions.
pub fn close(r: &Raster, se: &StructuringElement) -> Raster {
    erode(&dilate(r, se), se)
}

pub fn erode_mask(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    BinaryMask::from_raster_threshold(&erode(&m.to_raster(), se), 0.5)
}

pub fn dilate_mask(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    BinaryMask::from_raster_threshold(&dilate(&m.to_raster(), se), 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_raster(w: usize, h: usize, ones: impl Fn(usize, usize) -> bool) -> Raster {
        let data = (0..w * h)
            .map(|i| if ones(i % w, i / w) { 1.0 } else { 0.0 })
            .collect();
        Raster::new(w, h, data).unwrap()
    }

    fn ones_of(r: &Raster) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for y in 0..r.height() {
            for x in 0..r.width() {
                if r.get(x, y) == 1.0 {
                    v.push((x, y));
                }
            }
        }
        v
    }

    #[test]
    fn constant_is_unchanged() {
        let r = Raster::filled(6, 5, 0.3).unwrap();
        let se = StructuringElement::square(3, 2).unwrap();
        assert_eq!(erode(&r, &se), r);
        assert_eq!(dilate(&r, &se), r);
        assert_eq!(close(&r, &se), r);
    }

    #[test]
    fn isolated_point_is_eroded_away() {
        let r = mask_raster(7, 7, |x, y| (x, y) == (3, 3));
        let e = erode(&r, &StructuringElement::square(3, 1).unwrap());
        assert!(e.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn five_square_erodes_to_three_square() {
        let r = mask_raster(9, 9, |x, y| (2..7).contains(&x) && (2..7).contains(&y));
        let e = erode(&r, &StructuringElement::square(3, 1).unwrap());
        let expected = mask_raster(9, 9, |x, y| (3..6).contains(&x) && (3..6).contains(&y));
        assert_eq!(e, expected);
    }

    #[test]
    fn point_dilates_to_block() {
        let r = mask_raster(9, 9, |x, y| (x, y) == (4, 4));
        let d = dilate(&r, &StructuringElement::square(3, 1).unwrap());
        let expected = mask_raster(9, 9, |x, y| (3..6).contains(&x) && (3..6).contains(&y));
        assert_eq!(d, expected);
    }

    #[test]
    fn even_element_dilation_uses_floor_anchor() {
        // window offsets are [-8, 7], so a point at p lights [p-7, p+8]
        let r = mask_raster(40, 40, |x, y| (x, y) == (20, 20));
        let se = StructuringElement::square(16, 1).unwrap();
        assert_eq!(se.anchor(), (8, 8));
        let d = dilate(&r, &se);
        let expected = mask_raster(40, 40, |x, y| (13..29).contains(&x) && (13..29).contains(&y));
        assert_eq!(d, expected);
        assert_eq!(ones_of(&d).len(), 256);
    }

    #[test]
    fn closing_fills_a_gap_in_a_ring() {
        // 7x7 ring, one pixel missing on the top edge
        let ring = |x: usize, y: usize| {
            let on_border = (x == 2 || x == 8 || y == 2 || y == 8)
                && (2..=8).contains(&x)
                && (2..=8).contains(&y);
            on_border && (x, y) != (5, 2)
        };
        let r = mask_raster(11, 11, ring);
        let c = close(&r, &StructuringElement::square(3, 1).unwrap());
        assert_eq!(c.get(5, 2), 1.0);
        for (x, y) in ones_of(&r) {
            assert_eq!(c.get(x, y), 1.0);
        }
    }

    #[test]
    fn closing_a_closed_blob_is_identity() {
        let r = mask_raster(12, 12, |x, y| (3..9).contains(&x) && (4..8).contains(&y));
        let se = StructuringElement::square(3, 1).unwrap();
        assert_eq!(close(&r, &se), r);
    }

    #[test]
    fn iterated_erosion_matches_larger_element() {
        let data: Vec<f32> = (0..144).map(|i| ((i * 37) % 101) as f32 / 100.0).collect();
        let r = Raster::new(12, 12, data).unwrap();
        let twice = erode(&r, &StructuringElement::square(3, 2).unwrap());
        let five = erode(&r, &StructuringElement::square(5, 1).unwrap());
        // identical away from the border, where reflection orders differ
        for y in 2..10 {
            for x in 2..10 {
                assert_eq!(twice.get(x, y), five.get(x, y));
            }
        }
    }

    #[test]
    fn mask_helpers() {
        let m = BinaryMask::new(5, 5, {
            let mut v = vec![0u8; 25];
            v[12] = 1;
            v
        })
        .unwrap();
        let se = StructuringElement::square(3, 1).unwrap();
        assert_eq!(dilate_mask(&m, &se).count_ones(), 9);
        assert_eq!(erode_mask(&m, &se).count_ones(), 0);
    }

    #[test]
    fn invalid_element() {
        assert!(StructuringElement::new(0, 3, 1).is_err());
        assert!(StructuringElement::new(3, 3, 0).is_err());
    }
}
