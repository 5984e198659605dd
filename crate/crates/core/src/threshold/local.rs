//! Niblack and Sauvola windowed binarization (dark foreground).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, Raster};

pub const NIBLACK_K: f64 = -0.2;
pub const SAUVOLA_K: f64 = 0.5;
pub const SAUVOLA_R: f64 = 0.5;

fn check_window(window: usize) -> Result<()> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::Parameter(format!(
            "window must be odd and >= 3, got {window}"
        )));
    }
    Ok(())
}

/// Marks pixels below a per-pixel threshold computed from the mean and
/// population standard deviation of the mirrored `window x window`
/// neighborhood.
fn local_binarize(r: &Raster, window: usize, thresh: impl Fn(f64, f64) -> f64 + Sync) -> BinaryMask {
    let (w, h) = r.dims();
    let half = (window / 2) as isize;
    let n = (window * window) as f64;
    let mut out = vec![0u8; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let mut buf = Vec::with_capacity(window * window);
        for (x, o) in row.iter_mut().enumerate() {
            buf.clear();
            for dy in -half..=half {
                for dx in -half..=half {
                    buf.push(r.get_reflected(x as isize + dx, y as isize + dy) as f64);
                }
            }
            let mean = buf.iter().sum::<f64>() / n;
            let var = buf.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let t = thresh(mean, var.sqrt());
            *o = u8::from((r.get(x, y) as f64) < t);
        }
    });
    BinaryMask::from_raw(w, h, out)
}

/// `T = mean + k * std`.
pub fn niblack(r: &Raster, window: usize, k: f64) -> Result<BinaryMask> {
    check_window(window)?;
    Ok(local_binarize(r, window, |m, s| m + k * s))
}

/// `T = mean * (1 + k * (std / range - 1))`.
pub fn sauvola(r: &Raster, window: usize, k: f64, range: f64) -> Result<BinaryMask> {
    check_window(window)?;
    if !(range > 0.0) {
        return Err(Error::Parameter(format!("sauvola R must be > 0, got {range}")));
    }
    Ok(local_binarize(r, window, |m, s| m * (1.0 + k * (s / range - 1.0))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_no_foreground() {
        for v in [0.0, 0.3, 0.77, 1.0] {
            let r = Raster::filled(10, 8, v).unwrap();
            assert_eq!(niblack(&r, 5, NIBLACK_K).unwrap().count_ones(), 0);
            assert_eq!(
                sauvola(&r, 5, SAUVOLA_K, SAUVOLA_R).unwrap().count_ones(),
                0,
                "value {v}"
            );
        }
    }

    #[test]
    fn dark_pixel_in_bright_field() {
        let mut data = vec![1.0f32; 41 * 41];
        data[20 * 41 + 20] = 0.0;
        let r = Raster::new(41, 41, data).unwrap();
        let m = niblack(&r, 33, NIBLACK_K).unwrap();
        assert_eq!(m.get(20, 20), 1);
        assert_eq!(m.count_ones(), 1);
        let s = sauvola(&r, 33, SAUVOLA_K, SAUVOLA_R).unwrap();
        assert_eq!(s.get(20, 20), 1);
    }

    #[test]
    fn even_window_rejected() {
        let r = Raster::filled(4, 4, 0.5).unwrap();
        assert!(matches!(niblack(&r, 4, NIBLACK_K), Err(Error::Parameter(_))));
        assert!(matches!(
            sauvola(&r, 1, SAUVOLA_K, SAUVOLA_R),
            Err(Error::Parameter(_))
        ));
    }
}
