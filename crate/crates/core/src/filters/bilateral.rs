//! Brute-force bilateral filter.
//!
//! Every output pixel is the normalized weighted mean of its
//! `(2d+1) x (2d+1)` neighborhood, weighting each neighbor by a spatial
//! Gaussian on pixel distance times a range Gaussian on intensity
//! difference. Borders read through reflect-101 mirroring.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::Raster;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilateralParams {
    /// Spatial standard deviation in pixels.
    pub sigma_s: f64,
    /// Range standard deviation in `[0, 1]` intensity units.
    pub sigma_r: f64,
    /// Neighborhood radius in pixels.
    pub d: usize,
}

impl BilateralParams {
    pub fn new(sigma_s: f64, sigma_r: f64, d: usize) -> Result<Self> {
        if !(sigma_s > 0.0 && sigma_s.is_finite()) {
            return Err(Error::Parameter(format!("sigma_s must be > 0, got {sigma_s}")));
        }
        if !(sigma_r > 0.0 && sigma_r.is_finite()) {
            return Err(Error::Parameter(format!("sigma_r must be > 0, got {sigma_r}")));
        }
        if d == 0 {
            return Err(Error::Parameter("bilateral radius d must be >= 1".into()));
        }
        Ok(Self { sigma_s, sigma_r, d })
    }

    /// Takes the range deviation on the 0..255 scale, as 8-bit tooling
    /// quotes it, and rescales to unit intensities.
    pub fn from_8bit_range(sigma_s: f64, sigma_r_8bit: f64, d: usize) -> Result<Self> {
        Self::new(sigma_s, sigma_r_8bit / 255.0, d)
    }
}

pub fn bilateral_filter(r: &Raster, p: &BilateralParams) -> Raster {
    let (w, h) = r.dims();
    let d = p.d as isize;
    let side = 2 * p.d + 1;
    let spatial: Vec<f64> = (-d..=d)
        .flat_map(|dy| (-d..=d).map(move |dx| (dx, dy)))
        .map(|(dx, dy)| (-((dx * dx + dy * dy) as f64) / (2.0 * p.sigma_s * p.sigma_s)).exp())
        .collect();
    let range_denom = 2.0 * p.sigma_r * p.sigma_r;
    let src = r.data();

    let mut out = vec![0.0f32; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let y = y as isize;
        let interior_y = y >= d && y + d < h as isize;
        for (x, o) in row.iter_mut().enumerate() {
            let x = x as isize;
            let interior = interior_y && x >= d && x + d < w as isize;
            let center = src[y as usize * w + x as usize] as f64;
            let mut num = 0.0f64;
            let mut den = 0.0f64;
            for ky in 0..side {
                let sy = y + ky as isize - d;
                for kx in 0..side {
                    let sx = x + kx as isize - d;
                    let v = if interior {
                        src[sy as usize * w + sx as usize]
                    } else {
                        r.get_reflected(sx, sy)
                    } as f64;
                    let diff = center - v;
                    let wgt = spatial[ky * side + kx] * (-(diff * diff) / range_denom).exp();
                    num += wgt * v;
                    den += wgt;
                }
            }
            *o = (num / den) as f32;
        }
    });
    Raster::from_clamped(w, h, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_stays_constant() {
        let r = Raster::filled(9, 7, 0.42).unwrap();
        for p in [
            BilateralParams::new(1.0, 0.1, 1).unwrap(),
            BilateralParams::from_8bit_range(120.0, 120.0, 2).unwrap(),
            BilateralParams::new(3.0, 5.0, 4).unwrap(),
        ] {
            let o = bilateral_filter(&r, &p);
            assert!(o.data().iter().all(|&v| (v - 0.42).abs() < 1e-7));
        }
    }

    #[test]
    fn huge_range_sigma_is_gaussian_blur() {
        let mut data = vec![0.0f32; 11 * 11];
        data[5 * 11 + 5] = 1.0;
        let r = Raster::new(11, 11, data).unwrap();
        let p = BilateralParams::new(1.5, 1e6, 2).unwrap();
        let o = bilateral_filter(&r, &p);

        // direct normalized Gaussian convolution
        let g = |dx: i32, dy: i32| (-((dx * dx + dy * dy) as f64) / (2.0 * 1.5 * 1.5)).exp();
        let norm: f64 = (-2..=2).flat_map(|dy| (-2..=2).map(move |dx| g(dx, dy))).sum();
        for y in 0..11i32 {
            for x in 0..11i32 {
                let (dx, dy) = (x - 5, y - 5);
                let expected = if dx.abs() <= 2 && dy.abs() <= 2 {
                    g(dx, dy) / norm
                } else {
                    0.0
                };
                let got = o.get(x as usize, y as usize) as f64;
                assert!((got - expected).abs() < 1e-4, "({x},{y}) {got} vs {expected}");
            }
        }
    }

    #[test]
    fn edges_are_preserved_with_small_range_sigma() {
        let data: Vec<f32> = (0..64).map(|i| if i % 8 < 4 { 0.0 } else { 1.0 }).collect();
        let r = Raster::new(8, 8, data).unwrap();
        let o = bilateral_filter(&r, &BilateralParams::new(2.0, 0.01, 2).unwrap());
        for (a, b) in r.data().iter().zip(o.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(BilateralParams::new(0.0, 1.0, 1).is_err());
        assert!(BilateralParams::new(1.0, -1.0, 1).is_err());
        assert!(BilateralParams::new(1.0, 1.0, 0).is_err());
    }
}
