//! Single-channel rasters, binary masks and border handling.
//!
//! All intensities live in `[0, 1]` as `f32`, row-major. Borders are
//! extended with reflect-101 mirroring (`dcb|abcd|cba`), the edge pixel is
//! never duplicated.

use crate::error::{Error, Result};

/// Single-channel floating-point image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

/// Per-pixel crack confidence, same layout and invariants as [`Raster`].
pub type ScoreMap = Raster;

impl Raster {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!(
                "raster dimensions must be non-zero, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "expected {} values for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some((i, v)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::Data(format!(
                "value {v} at index {i} is not a finite intensity in [0,1]"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Raster filled with a constant value.
    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds a raster from already-validated data. Values are clamped so
    /// the `[0, 1]` invariant survives rounding in filters.
    pub(crate) fn from_clamped(width: usize, height: usize, mut data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Builds from 8-bit intensities, dividing by 255.
    pub fn from_u8(width: usize, height: usize, data: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            data.iter().map(|&v| v as f32 / 255.0).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// Reads a pixel at possibly out-of-bounds coordinates through
    /// reflect-101 mirroring.
    #[inline]
    pub fn get_reflected(&self, x: isize, y: isize) -> f32 {
        let xi = reflect_index(x, self.width);
        let yi = reflect_index(y, self.height);
        self.data[yi * self.width + xi]
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    /// Elementwise map; the result is clamped back into `[0, 1]`.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> Raster {
        Raster::from_clamped(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Elementwise combination of two equally sized rasters.
    pub fn zip_with(&self, other: &Raster, f: impl Fn(f32, f32) -> f32) -> Result<Raster> {
        ensure_same_dims(self.dims(), other.dims())?;
        Ok(Raster::from_clamped(
            self.width,
            self.height,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// Extracts the `w`x`h` window whose top-left corner is `(x0, y0)`.
    /// The window may extend beyond the raster; those pixels are mirrored.
    pub fn window(&self, x0: isize, y0: isize, w: usize, h: usize) -> Vec<f32> {
        let mut out = Vec::with_capacity(w * h);
        for dy in 0..h as isize {
            for dx in 0..w as isize {
                out.push(self.get_reflected(x0 + dx, y0 + dy));
            }
        }
        out
    }

    /// Crops the rectangle `[x0, x0+w) x [y0, y0+h)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Raster> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::Shape(format!(
                "crop {w}x{h}+{x0}+{y0} outside {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + w]);
        }
        Ok(Raster {
            width: w,
            height: h,
            data,
        })
    }
}

pub(crate) fn ensure_same_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!(
            "dimension mismatch: {}x{} vs {}x{}",
            a.0, a.1, b.0, b.1
        )));
    }
    Ok(())
}

/// Maps any integer coordinate onto `[0, n)` by repeated reflect-101
/// mirroring. For `n == 1` every coordinate maps to 0.
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let n = n as isize;
    if (0..n).contains(&i) {
        return i as usize;
    }
    let period = 2 * (n - 1);
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m;
    }
    m as usize
}

/// Pads with reflect-101 margins. Each margin must be smaller than the
/// corresponding dimension so that a single reflection suffices.
pub fn mirror_pad(
    r: &Raster,
    left: usize,
    right: usize,
    top: usize,
    bottom: usize,
) -> Result<Raster> {
    for (margin, dim) in [
        (left, r.width),
        (right, r.width),
        (top, r.height),
        (bottom, r.height),
    ] {
        if margin > 0 && margin >= dim {
            return Err(Error::UnsupportedPadding { margin, dim });
        }
    }
    let w = r.width + left + right;
    let h = r.height + top + bottom;
    let data = r.window(-(left as isize), -(top as isize), w, h);
    Ok(Raster {
        width: w,
        height: h,
        data,
    })
}

/// Pixel-wise `{0, 1}` mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!(
                "mask dimensions must be non-zero, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "expected {} mask values for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|&&v| v > 1) {
            return Err(Error::Data(format!("mask value {v} is not 0 or 1")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0; width * height])
    }

    /// Any non-zero input byte counts as foreground.
    pub fn from_nonzero(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(width, height, bytes.iter().map(|&b| u8::from(b != 0)).collect())
    }

    /// Foreground wherever `r >= threshold`.
    pub fn from_raster_threshold(r: &Raster, threshold: f32) -> Self {
        Self {
            width: r.width,
            height: r.height,
            data: r.data.iter().map(|&v| u8::from(v >= threshold)).collect(),
        }
    }

    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    pub fn to_raster(&self) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v as f32).collect(),
        }
    }
}

/// Interleaved multi-channel image, used as the input to grayscale
/// conversion.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorRaster {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

/// BT.601 luma weights.
pub const LUMA_WEIGHTS: [f32; 3] = [0.299, 0.587, 0.114];

/// Converts an interleaved RGB raster to luma.
pub fn to_grayscale(rgb: &ColorRaster) -> Result<Raster> {
    if rgb.channels != 3 {
        return Err(Error::Shape(format!(
            "grayscale conversion expects 3 channels, got {}",
            rgb.channels
        )));
    }
    if rgb.data.len() != rgb.width * rgb.height * 3 {
        return Err(Error::Shape(format!(
            "expected {} channel values, got {}",
            rgb.width * rgb.height * 3,
            rgb.data.len()
        )));
    }
    let luma = rgb
        .data
        .chunks_exact(3)
        .map(|px| {
            let [r, g, b] = [px[0], px[1], px[2]];
            LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b
        })
        .collect::<Vec<_>>();
    if luma.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite channel value".into()));
    }
    // weights sum to 1 up to rounding
    Raster::new(
        rgb.width,
        rgb.height,
        luma.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb1(r: f32, g: f32, b: f32) -> ColorRaster {
        ColorRaster {
            width: 1,
            height: 1,
            channels: 3,
            data: vec![r, g, b],
        }
    }

    #[test]
    fn luma_of_primaries() {
        assert_eq!(to_grayscale(&rgb1(1.0, 1.0, 1.0)).unwrap().get(0, 0), 1.0);
        assert_eq!(to_grayscale(&rgb1(0.0, 0.0, 0.0)).unwrap().get(0, 0), 0.0);
        let red = to_grayscale(&rgb1(1.0, 0.0, 0.0)).unwrap().get(0, 0);
        assert!((red - 0.299).abs() < 1e-7);
    }

    #[test]
    fn grayscale_rejects_wrong_channel_count() {
        let two = ColorRaster {
            width: 1,
            height: 1,
            channels: 2,
            data: vec![0.0, 0.0],
        };
        assert!(matches!(to_grayscale(&two), Err(Error::Shape(_))));
    }

    #[test]
    fn reflect101_row() {
        let r = Raster::new(3, 1, vec![0.1, 0.2, 0.3]).unwrap();
        let p = mirror_pad(&r, 1, 0, 0, 0).unwrap();
        assert_eq!(p.data(), &[0.2, 0.1, 0.2, 0.3]);
    }

    #[test]
    fn zero_margins_are_identity() {
        let r = Raster::new(2, 3, vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        assert_eq!(mirror_pad(&r, 0, 0, 0, 0).unwrap(), r);
    }

    #[test]
    fn pad_2x2_by_one() {
        // a b      d c d c
        // c d  ->  b a b a
        //          d c d c
        //          b a b a
        let (a, b, c, d) = (0.1, 0.2, 0.3, 0.4);
        let r = Raster::new(2, 2, vec![a, b, c, d]).unwrap();
        let p = mirror_pad(&r, 1, 1, 1, 1).unwrap();
        assert_eq!(p.dims(), (4, 4));
        #[rustfmt::skip]
        let expected = vec![
            d, c, d, c,
            b, a, b, a,
            d, c, d, c,
            b, a, b, a,
        ];
        assert_eq!(p.data(), expected.as_slice());
    }

    #[test]
    fn oversized_margin_is_rejected() {
        let r = Raster::filled(2, 2, 0.5).unwrap();
        assert!(matches!(
            mirror_pad(&r, 2, 0, 0, 0),
            Err(Error::UnsupportedPadding { margin: 2, dim: 2 })
        ));
    }

    #[test]
    fn reflect_index_wraps_repeatedly() {
        // n = 3: ... 2 1 | 0 1 2 | 1 0 1 2 ...
        let got: Vec<usize> = (-4..7).map(|i| reflect_index(i, 3)).collect();
        assert_eq!(got, vec![0, 1, 2, 1, 0, 1, 2, 1, 0, 1, 2]);
        assert_eq!(reflect_index(-5, 1), 0);
    }

    #[test]
    fn raster_validation() {
        assert!(matches!(Raster::new(2, 2, vec![0.0; 3]), Err(Error::Shape(_))));
        assert!(matches!(Raster::new(0, 2, vec![]), Err(Error::Shape(_))));
        assert!(matches!(
            Raster::new(1, 1, vec![f32::NAN]),
            Err(Error::Data(_))
        ));
        assert!(matches!(Raster::new(1, 1, vec![1.5]), Err(Error::Data(_))));
        assert!(matches!(
            BinaryMask::new(1, 1, vec![2]),
            Err(Error::Data(_))
        ));
    }
}
