use super::conv::Window;
use super::{Attrs, Inputs};
use crate::error::{shape_err, OnnxError, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Max,
    Average,
}

fn nchw(op: &str, x: &Tensor<f32>) -> Result<[usize; 4]> {
    if x.rank() != 4 {
        return Err(OnnxError::Unsupported(format!(
            "{op} on rank {} input (only 2-D supported)",
            x.rank()
        )));
    }
    Ok([x.shape[0], x.shape[1], x.shape[2], x.shape[3]])
}

pub(crate) fn pool(inputs: &Inputs, a: &Attrs, kind: Kind) -> Result<Tensor<f32>> {
    let op = inputs.op;
    let x = inputs.float(0)?;
    let [n, c, h, w] = nchw(op, x)?;
    let ks = a
        .ints("kernel_shape")
        .ok_or_else(|| shape_err(op, "kernel_shape is required"))?;
    if ks.len() != 2 || ks.iter().any(|&k| k <= 0) {
        return Err(shape_err(op, format!("bad kernel_shape {ks:?}")));
    }
    let kernel = [ks[0] as usize, ks[1] as usize];
    let ceil_mode = a.int("ceil_mode", 0) != 0;
    let include_pad = a.int("count_include_pad", 0) != 0;
    let win = Window::from_attrs(op, a, [h, w], kernel, ceil_mode)?;
    let [oh, ow] = win.out;
    let mut out = Vec::with_capacity(n * c * oh * ow);
    for plane in x.data.chunks_exact(h * w) {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = match kind {
                    Kind::Max => f32::NEG_INFINITY,
                    Kind::Average => 0.0,
                };
                let (mut inside, mut padded) = (0usize, 0usize);
                for ky in 0..kernel[0] {
                    let iy = win.source(0, oy, ky);
                    let y_pad = iy >= -(win.pad_begin[0] as isize) && iy < (h + win.pad_end[0]) as isize;
                    for kx in 0..kernel[1] {
                        let ix = win.source(1, ox, kx);
                        let x_pad = ix >= -(win.pad_begin[1] as isize) && ix < (w + win.pad_end[1]) as isize;
                        if y_pad && x_pad {
                            padded += 1;
                        }
                        if iy < 0 || iy >= h as isize || ix < 0 || ix >= w as isize {
                            continue;
                        }
                        inside += 1;
                        let v = plane[iy as usize * w + ix as usize];
                        match kind {
                            Kind::Max => acc = acc.max(v),
                            Kind::Average => acc += v,
                        }
                    }
                }
                if kind == Kind::Average {
                    let count = if include_pad { padded } else { inside };
                    acc /= count.max(1) as f32;
                }
                out.push(acc);
            }
        }
    }
    Tensor::new(vec![n, c, oh, ow], out)
}

pub(crate) fn global(inputs: &Inputs, kind: Kind) -> Result<Tensor<f32>> {
    let x = inputs.float(0)?;
    if x.rank() < 3 {
        return Err(shape_err(inputs.op, format!("input rank {} < 3", x.rank())));
    }
    let spatial: usize = x.shape[2..].iter().product();
    let data = x
        .data
        .chunks_exact(spatial.max(1))
        .map(|plane| match kind {
            Kind::Max => plane.iter().copied().fold(f32::NEG_INFINITY, f32::max),
            Kind::Average => plane.iter().sum::<f32>() / spatial as f32,
        })
        .collect();
    let mut shape = x.shape[..2].to_vec();
    shape.extend(std::iter::repeat(1).take(x.rank() - 2));
    Tensor::new(shape, data)
}
