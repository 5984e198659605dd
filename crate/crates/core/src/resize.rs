//! Separable Lanczos-3 resampling.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::Raster;

const LOBES: f64 = 3.0;

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let a = x * std::f64::consts::PI;
        a.sin() / a
    }
}

fn lanczos3(x: f64) -> f64 {
    if x.abs() < LOBES {
        sinc(x) * sinc(x / LOBES)
    } else {
        0.0
    }
}

/// Normalized filter taps for one output coordinate.
struct Taps {
    start: usize,
    weights: Vec<f64>,
}

/// Precomputes taps for every output position along one axis. When
/// downscaling the kernel is stretched by the scale factor so it acts as a
/// low-pass filter. Source coordinates outside the input are clamped.
fn axis_taps(src_len: usize, dst_len: usize) -> Vec<Taps> {
    let ratio = src_len as f64 / dst_len as f64;
    let filter_scale = ratio.max(1.0);
    let support = LOBES * filter_scale;
    (0..dst_len)
        .map(|i| {
            let center = (i as f64 + 0.5) * ratio - 0.5;
            let left = (center - support).floor() as isize;
            let right = (center + support).ceil() as isize;
            let last = src_len as isize - 1;
            let lo = left.clamp(0, last) as usize;
            let hi = right.clamp(0, last) as usize;
            let mut weights = vec![0.0; hi - lo + 1];
            for s in left..=right {
                let w = lanczos3((s as f64 - center) / filter_scale);
                let idx = s.clamp(0, last) as usize;
                weights[idx - lo] += w;
            }
            let sum: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= sum;
            }
            Taps { start: lo, weights }
        })
        .collect()
}

/// Resamples `r` to `out_w` x `out_h` with a Lanczos-3 kernel. Output is
/// clamped to `[0, 1]` to absorb ringing.
pub fn lanczos_resize(r: &Raster, out_w: usize, out_h: usize) -> Result<Raster> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::Shape(format!(
            "cannot resize to {out_w}x{out_h}"
        )));
    }
    let (w, h) = r.dims();
    if (w, h) == (out_w, out_h) {
        return Ok(r.clone());
    }
    let src = r.data();

    // horizontal pass: h rows of out_w
    let xt = axis_taps(w, out_w);
    let mut tmp = vec![0.0f64; out_w * h];
    tmp.par_chunks_mut(out_w).enumerate().for_each(|(y, row)| {
        let srow = &src[y * w..(y + 1) * w];
        for (o, t) in row.iter_mut().zip(&xt) {
            *o = t
                .weights
                .iter()
                .zip(&srow[t.start..])
                .map(|(wt, &v)| wt * v as f64)
                .sum();
        }
    });

    // vertical pass
    let yt = axis_taps(h, out_h);
    let mut out = vec![0.0f32; out_w * out_h];
    out.par_chunks_mut(out_w).enumerate().for_each(|(y, row)| {
        let t = &yt[y];
        for (x, o) in row.iter_mut().enumerate() {
            let v: f64 = t
                .weights
                .iter()
                .enumerate()
                .map(|(k, wt)| wt * tmp[(t.start + k) * out_w + x])
                .sum();
            *o = v as f32;
        }
    });
    Ok(Raster::from_clamped(out_w, out_h, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_size_is_exact() {
        let r = Raster::new(3, 2, vec![0.1, 0.9, 0.4, 0.0, 1.0, 0.3]).unwrap();
        let o = lanczos_resize(&r, 3, 2).unwrap();
        for (a, b) in r.data().iter().zip(o.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn taps_identity_scale_are_delta() {
        // integer offsets hit the sinc zeros
        for t in axis_taps(7, 7).iter() {
            let peak = t.weights.iter().cloned().fold(0.0, f64::max);
            assert!((peak - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_is_preserved() {
        let r = Raster::filled(5, 4, 0.37).unwrap();
        for (w, h) in [(1, 1), (13, 3), (40, 31), (2, 9)] {
            let o = lanczos_resize(&r, w, h).unwrap();
            assert!(o.data().iter().all(|v| (v - 0.37).abs() < 1e-5));
        }
    }

    #[test]
    fn checkerboard_round_trip_mean() {
        let r = Raster::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let up = lanczos_resize(&r, 8, 8).unwrap();
        // 4x4 box average back down to 2x2
        let mut down = [0.0f64; 4];
        for y in 0..8 {
            for x in 0..8 {
                down[(y / 4) * 2 + x / 4] += up.get(x, y) as f64 / 16.0;
            }
        }
        let mean = down.iter().sum::<f64>() / 4.0;
        assert!((mean - r.mean()).abs() < 1e-2, "mean {mean}");
    }

    #[test]
    fn rejects_zero_output() {
        let r = Raster::filled(2, 2, 0.5).unwrap();
        assert!(matches!(lanczos_resize(&r, 0, 3), Err(Error::Shape(_))));
    }
}
