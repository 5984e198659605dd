use super::{norm_axis, Attrs, Inputs};
use crate::error::{shape_err, Result};
use crate::tensor::{broadcast_binary, Tensor, Value};

pub(crate) fn unary(inputs: &Inputs, f: impl Fn(f32) -> f32) -> Result<Value> {
    let x = inputs.float(0)?;
    Ok(Value::Float(Tensor::new(
        x.shape.clone(),
        x.data.iter().map(|&v| f(v)).collect(),
    )?))
}

pub(crate) fn binary(
    inputs: &Inputs,
    ff: impl Fn(f32, f32) -> f32,
    fi: impl Fn(i64, i64) -> i64,
) -> Result<Value> {
    match (inputs.get(0)?, inputs.get(1)?) {
        (Value::Float(a), Value::Float(b)) => Ok(Value::Float(broadcast_binary(inputs.op, a, b, ff)?)),
        (Value::Int(a), Value::Int(b)) => Ok(Value::Int(broadcast_binary(inputs.op, a, b, fi)?)),
        _ => Err(shape_err(inputs.op, "mixed float and integer operands")),
    }
}

pub(crate) fn clip(inputs: &Inputs, a: &Attrs, opset: i64) -> Result<Tensor<f32>> {
    let (lo, hi) = if opset < 11 {
        (a.float("min", f32::MIN), a.float("max", f32::MAX))
    } else {
        let bound = |i: usize, default: f32| -> Result<f32> {
            match inputs.opt(i) {
                Some(v) => Ok(v.as_float(inputs.op)?.data.first().copied().unwrap_or(default)),
                None => Ok(default),
            }
        };
        (bound(1, f32::MIN)?, bound(2, f32::MAX)?)
    };
    let x = inputs.float(0)?;
    Tensor::new(x.shape.clone(), x.data.iter().map(|&v| v.max(lo).min(hi)).collect())
}

pub(crate) fn batch_norm(inputs: &Inputs, a: &Attrs) -> Result<Tensor<f32>> {
    if a.int("training_mode", 0) != 0 {
        return Err(crate::error::OnnxError::Unsupported(
            "BatchNormalization in training mode".into(),
        ));
    }
    let x = inputs.float(0)?;
    let [scale, bias, mean, var] = [1, 2, 3, 4].map(|i| inputs.float(i));
    let (scale, bias, mean, var) = (scale?, bias?, mean?, var?);
    let eps = a.float("epsilon", 1e-5);
    if x.rank() < 2 {
        return Err(shape_err(inputs.op, "input rank < 2"));
    }
    let c = x.shape[1];
    if [scale, bias, mean, var].iter().any(|t| t.len() != c) {
        return Err(shape_err(inputs.op, format!("parameters must have {c} values")));
    }
    let inner: usize = x.shape[2..].iter().product();
    let mut out = x.data.clone();
    for (i, chunk) in out.chunks_exact_mut(inner.max(1)).enumerate() {
        let ch = i % c;
        let k = scale.data[ch] / (var.data[ch] + eps).sqrt();
        let b = bias.data[ch] - mean.data[ch] * k;
        for v in chunk {
            *v = *v * k + b;
        }
    }
    Tensor::new(x.shape.clone(), out)
}

/// `(outer, axis_len, inner)` split of a shape at `axis`.
fn split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    (
        shape[..axis].iter().product(),
        shape[axis],
        shape[axis + 1..].iter().product(),
    )
}

pub(crate) fn softmax(inputs: &Inputs, a: &Attrs, opset: i64) -> Result<Tensor<f32>> {
    let x = inputs.float(0)?;
    let rank = x.rank();
    let mut out = x.data.clone();
    let softmax_run = |vals: &mut [f32], stride: usize, len: usize| {
        let m = (0..len).map(|i| vals[i * stride]).fold(f32::NEG_INFINITY, f32::max);
        let mut sum = 0.0f32;
        for i in 0..len {
            let e = (vals[i * stride] - m).exp();
            vals[i * stride] = e;
            sum += e;
        }
        for i in 0..len {
            vals[i * stride] /= sum;
        }
    };
    if opset < 13 {
        // coerced to 2-D at axis
        let axis = norm_axis(inputs.op, a.int("axis", 1), rank)?;
        let inner: usize = x.shape[axis..].iter().product();
        for row in out.chunks_exact_mut(inner.max(1)) {
            softmax_run(row, 1, inner);
        }
    } else {
        let axis = norm_axis(inputs.op, a.int("axis", -1), rank)?;
        let (outer, len, inner) = split(&x.shape, axis);
        for o in 0..outer {
            for i in 0..inner {
                let start = o * len * inner + i;
                softmax_run(&mut out[start..], inner, len);
            }
        }
    }
    Tensor::new(x.shape.clone(), out)
}

pub(crate) fn reduce_mean(inputs: &Inputs, a: &Attrs, opset: i64) -> Result<Tensor<f32>> {
    let x = inputs.float(0)?;
    let rank = x.rank();
    let axes = if opset >= 18 {
        inputs.opt(1).map(|v| v.as_int(inputs.op).map(|t| t.data.clone())).transpose()?
    } else {
        a.ints("axes")
    };
    let mut reduce = vec![false; rank];
    match axes {
        Some(axes) if !axes.is_empty() => {
            for ax in axes {
                reduce[norm_axis(inputs.op, ax, rank)?] = true;
            }
        }
        _ => reduce.iter_mut().for_each(|r| *r = true),
    }
    let keep = a.int("keepdims", 1) != 0;
    let out_full: Vec<usize> = x
        .shape
        .iter()
        .zip(&reduce)
        .map(|(&d, &r)| if r { 1 } else { d })
        .collect();
    let n_out: usize = out_full.iter().product();
    let mut sums = vec![0.0f64; n_out];
    let mut idx = vec![0usize; rank];
    for &v in &x.data {
        let mut o = 0;
        for d in 0..rank {
            o = o * out_full[d] + if reduce[d] { 0 } else { idx[d] };
        }
        sums[o] += v as f64;
        for d in (0..rank).rev() {
            idx[d] += 1;
            if idx[d] < x.shape[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    let count = (x.len() / n_out.max(1)) as f64;
    let data = sums.iter().map(|s| (s / count) as f32).collect();
    let shape = if keep {
        out_full
    } else {
        x.shape
            .iter()
            .zip(&reduce)
            .filter(|(_, &r)| !r)
            .map(|(&d, _)| d)
            .collect()
    };
    Tensor::new(shape, data)
}
