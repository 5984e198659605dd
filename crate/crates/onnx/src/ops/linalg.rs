use rayon::prelude::*;

use super::{Attrs, Inputs};
use crate::error::{shape_err, Result};
use crate::tensor::{broadcast_binary, Tensor};

/// `out[m, n] = sum_k a[m, k] * b[k, n]` for row-major operands, with
/// element accessors to absorb transposition.
fn matmul_into(
    out: &mut [f32],
    (m, k, n): (usize, usize, usize),
    a: impl Fn(usize, usize) -> f32 + Sync,
    b: impl Fn(usize, usize) -> f32 + Sync,
) {
    out.par_chunks_mut(n.max(1)).take(m).enumerate().for_each(|(i, row)| {
        for kk in 0..k {
            let av = a(i, kk);
            if av == 0.0 {
                continue;
            }
            for (j, o) in row.iter_mut().enumerate() {
                *o += av * b(kk, j);
            }
        }
    });
}

pub(crate) fn gemm(inputs: &Inputs, a: &Attrs) -> Result<Tensor<f32>> {
    let op = inputs.op;
    let ta = a.int("transA", 0) != 0;
    let tb = a.int("transB", 0) != 0;
    let alpha = a.float("alpha", 1.0);
    let beta = a.float("beta", 1.0);
    let x = inputs.float(0)?;
    let y = inputs.float(1)?;
    if x.rank() != 2 || y.rank() != 2 {
        return Err(shape_err(op, "operands must be 2-D"));
    }
    let (m, k) = if ta { (x.shape[1], x.shape[0]) } else { (x.shape[0], x.shape[1]) };
    let (k2, n) = if tb { (y.shape[1], y.shape[0]) } else { (y.shape[0], y.shape[1]) };
    if k != k2 {
        return Err(shape_err(op, format!("inner dims {k} and {k2} differ")));
    }
    let (xs, ys) = (x.shape[1], y.shape[1]);
    let mut out = vec![0.0f32; m * n];
    matmul_into(
        &mut out,
        (m, k, n),
        |i, kk| if ta { x.data[kk * xs + i] } else { x.data[i * xs + kk] },
        |kk, j| if tb { y.data[j * ys + kk] } else { y.data[kk * ys + j] },
    );
    let mut result = Tensor::new(vec![m, n], out)?;
    if alpha != 1.0 {
        result.data.iter_mut().for_each(|v| *v *= alpha);
    }
    if let Some(c) = inputs.opt(2) {
        let c = c.as_float(op)?;
        result = broadcast_binary(op, &result, c, |r, c| r + beta * c)?;
        if result.shape != [m, n] {
            return Err(shape_err(op, format!("C of shape {:?} does not broadcast to [{m}, {n}]", c.shape)));
        }
    }
    Ok(result)
}

/// Matrix product of a rank >= 2 left operand with a 2-D right operand.
pub(crate) fn matmul(inputs: &Inputs) -> Result<Tensor<f32>> {
    let op = inputs.op;
    let x = inputs.float(0)?;
    let y = inputs.float(1)?;
    if x.rank() < 2 || y.rank() != 2 {
        return Err(crate::error::OnnxError::Unsupported(format!(
            "MatMul of ranks {} and {}",
            x.rank(),
            y.rank()
        )));
    }
    let k = x.shape[x.rank() - 1];
    let (k2, n) = (y.shape[0], y.shape[1]);
    if k != k2 {
        return Err(shape_err(op, format!("inner dims {k} and {k2} differ")));
    }
    let m = x.len() / k.max(1);
    let mut out = vec![0.0f32; m * n];
    matmul_into(&mut out, (m, k, n), |i, kk| x.data[i * k + kk], |kk, j| y.data[kk * n + j]);
    let mut shape = x.shape[..x.rank() - 1].to_vec();
    shape.push(n);
    Tensor::new(shape, out)
}
