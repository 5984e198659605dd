use rayon::prelude::*;

use super::{Attrs, Inputs};
use crate::error::{shape_err, OnnxError, Result};
use crate::tensor::Tensor;

/// Geometry of a 2-D sliding window.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Window {
    pub stride: [usize; 2],
    pub dilation: [usize; 2],
    /// Padding at the start of each axis.
    pub pad_begin: [usize; 2],
    pub pad_end: [usize; 2],
    pub out: [usize; 2],
}

fn pair(op: &str, v: Option<Vec<i64>>, default: usize) -> Result<[usize; 2]> {
    match v {
        None => Ok([default; 2]),
        Some(v) if v.len() == 2 && v.iter().all(|&x| x >= 0) => Ok([v[0] as usize, v[1] as usize]),
        Some(v) => Err(shape_err(op, format!("expected two non-negative values, got {v:?}"))),
    }
}

impl Window {
    pub fn from_attrs(op: &str, a: &Attrs, input: [usize; 2], kernel: [usize; 2], ceil_mode: bool) -> Result<Self> {
        let stride = pair(op, a.ints("strides"), 1)?;
        let dilation = pair(op, a.ints("dilations"), 1)?;
        if stride.contains(&0) || dilation.contains(&0) || kernel.contains(&0) {
            return Err(shape_err(op, "zero kernel, stride or dilation"));
        }
        let extent = [
            (kernel[0] - 1) * dilation[0] + 1,
            (kernel[1] - 1) * dilation[1] + 1,
        ];
        let auto_pad = a.string("auto_pad").unwrap_or_else(|| "NOTSET".into());
        let (pad_begin, pad_end) = match auto_pad.as_str() {
            "NOTSET" | "" => {
                let p = a.ints("pads").unwrap_or_else(|| vec![0; 4]);
                if p.len() != 4 || p.iter().any(|&x| x < 0) {
                    return Err(shape_err(op, format!("bad pads {p:?}")));
                }
                ([p[0] as usize, p[1] as usize], [p[2] as usize, p[3] as usize])
            }
            "VALID" => ([0; 2], [0; 2]),
            "SAME_UPPER" | "SAME_LOWER" => {
                let mut b = [0; 2];
                let mut e = [0; 2];
                for i in 0..2 {
                    let out = input[i].div_ceil(stride[i]);
                    let total = ((out - 1) * stride[i] + extent[i]).saturating_sub(input[i]);
                    let small = total / 2;
                    let (lo, hi) = if auto_pad == "SAME_UPPER" {
                        (small, total - small)
                    } else {
                        (total - small, small)
                    };
                    b[i] = lo;
                    e[i] = hi;
                }
                (b, e)
            }
            other => return Err(OnnxError::Unsupported(format!("{op} auto_pad {other}"))),
        };
        let mut out = [0; 2];
        for i in 0..2 {
            let padded = input[i] + pad_begin[i] + pad_end[i];
            if padded < extent[i] {
                return Err(shape_err(op, format!("kernel larger than padded input on axis {i}")));
            }
            let span = padded - extent[i];
            out[i] = if ceil_mode {
                let mut o = span.div_ceil(stride[i]) + 1;
                // the last window must start inside the input or left padding
                if (o - 1) * stride[i] >= input[i] + pad_begin[i] {
                    o -= 1;
                }
                o
            } else {
                span / stride[i] + 1
            };
        }
        Ok(Self {
            stride,
            dilation,
            pad_begin,
            pad_end,
            out,
        })
    }

    /// Input coordinate of kernel tap `k` for output position `o` on `axis`.
    #[inline]
    pub fn source(&self, axis: usize, o: usize, k: usize) -> isize {
        (o * self.stride[axis] + k * self.dilation[axis]) as isize - self.pad_begin[axis] as isize
    }
}

pub(crate) fn conv(inputs: &Inputs, a: &Attrs) -> Result<Tensor<f32>> {
    let op = "Conv";
    let x = inputs.float(0)?;
    let w = inputs.float(1)?;
    let bias = inputs.opt(2).map(|b| b.as_float(op)).transpose()?;
    if x.rank() != 4 || w.rank() != 4 {
        return Err(OnnxError::Unsupported(format!(
            "Conv on input rank {} with weight rank {} (only 2-D supported)",
            x.rank(),
            w.rank()
        )));
    }
    let [n, c, h, wd] = [x.shape[0], x.shape[1], x.shape[2], x.shape[3]];
    let [m, cg, kh, kw] = [w.shape[0], w.shape[1], w.shape[2], w.shape[3]];
    let group = a.int("group", 1).max(1) as usize;
    if c != cg * group || m % group != 0 {
        return Err(shape_err(
            op,
            format!("input channels {c}, weight {:?}, group {group}", w.shape),
        ));
    }
    if let Some(b) = bias {
        if b.len() != m {
            return Err(shape_err(op, format!("bias has {} values for {m} filters", b.len())));
        }
    }
    if let Some(ks) = a.ints("kernel_shape") {
        if ks != [kh as i64, kw as i64] {
            return Err(shape_err(op, format!("kernel_shape {ks:?} disagrees with weights")));
        }
    }
    let win = Window::from_attrs(op, a, [h, wd], [kh, kw], false)?;
    let [oh, ow] = win.out;
    let p = oh * ow;
    let k_len = cg * kh * kw;
    let mg = m / group;

    let mut out = vec![0.0f32; n * m * p];
    let mut cols = vec![0.0f32; k_len * p];
    for b in 0..n {
        for g in 0..group {
            // im2col for this image and group
            for ci in 0..cg {
                let plane = &x.data[((b * c) + g * cg + ci) * h * wd..][..h * wd];
                for ky in 0..kh {
                    for kx in 0..kw {
                        let row = &mut cols[((ci * kh + ky) * kw + kx) * p..][..p];
                        for oy in 0..oh {
                            let iy = win.source(0, oy, ky);
                            let dst = &mut row[oy * ow..(oy + 1) * ow];
                            if iy < 0 || iy >= h as isize {
                                dst.fill(0.0);
                                continue;
                            }
                            let src = &plane[iy as usize * wd..][..wd];
                            for (ox, d) in dst.iter_mut().enumerate() {
                                let ix = win.source(1, ox, kx);
                                *d = if ix < 0 || ix >= wd as isize { 0.0 } else { src[ix as usize] };
                            }
                        }
                    }
                }
            }
            let out_group = &mut out[(b * m + g * mg) * p..][..mg * p];
            let cols = &cols;
            out_group.par_chunks_mut(p).enumerate().for_each(|(mi, dst)| {
                let f = g * mg + mi;
                let weights = &w.data[f * k_len..][..k_len];
                dst.fill(bias.map_or(0.0, |b| b.data[f]));
                for (k, &wv) in weights.iter().enumerate() {
                    if wv == 0.0 {
                        continue;
                    }
                    let src = &cols[k * p..][..p];
                    for (d, &s) in dst.iter_mut().zip(src) {
                        *d += wv * s;
                    }
                }
            });
        }
    }
    Tensor::new(vec![n, m, oh, ow], out)
}
