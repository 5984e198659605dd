use super::{norm_axis, Attrs, Inputs};
use crate::error::{shape_err, OnnxError, Result};
use crate::tensor::{Tensor, Value};

fn map_value(
    v: &Value,
    shape: Vec<usize>,
    gather: impl Fn(usize) -> usize,
) -> Result<Value> {
    let n: usize = shape.iter().product();
    Ok(match v {
        Value::Float(t) => Value::Float(Tensor::new(shape, (0..n).map(|i| t.data[gather(i)]).collect())?),
        Value::Int(t) => Value::Int(Tensor::new(shape, (0..n).map(|i| t.data[gather(i)]).collect())?),
    })
}

fn with_shape(v: &Value, shape: Vec<usize>) -> Result<Value> {
    Ok(match v.clone() {
        Value::Float(t) => Value::Float(t.reshaped(shape)?),
        Value::Int(t) => Value::Int(t.reshaped(shape)?),
    })
}

pub(crate) fn flatten(inputs: &Inputs, a: &Attrs) -> Result<Value> {
    let v = inputs.get(0)?;
    let s = v.shape();
    let axis = a.int("axis", 1);
    let axis = if axis < 0 { axis + s.len() as i64 } else { axis };
    if axis < 0 || axis as usize > s.len() {
        return Err(shape_err(inputs.op, format!("axis {axis} out of range")));
    }
    let axis = axis as usize;
    let outer = s[..axis].iter().product();
    let inner = s[axis..].iter().product();
    with_shape(v, vec![outer, inner])
}

pub(crate) fn reshape(inputs: &Inputs, a: &Attrs) -> Result<Value> {
    let v = inputs.get(0)?;
    let target = inputs.int(1)?;
    let allow_zero = a.int("allowzero", 0) != 0;
    let src = v.shape();
    let total: usize = src.iter().product();
    let mut shape = Vec::with_capacity(target.len());
    let mut infer = None;
    for (i, &d) in target.data.iter().enumerate() {
        match d {
            -1 => {
                if infer.replace(i).is_some() {
                    return Err(shape_err(inputs.op, "more than one -1"));
                }
                shape.push(1);
            }
            0 if !allow_zero => shape.push(
                *src.get(i)
                    .ok_or_else(|| shape_err(inputs.op, "0 refers past the input rank"))?,
            ),
            d if d >= 0 => shape.push(d as usize),
            d => return Err(shape_err(inputs.op, format!("bad dim {d}"))),
        }
    }
    if let Some(i) = infer {
        let known: usize = shape.iter().product();
        if known == 0 || total % known != 0 {
            return Err(shape_err(inputs.op, format!("cannot infer -1 for {src:?} -> {:?}", target.data)));
        }
        shape[i] = total / known;
    }
    with_shape(v, shape)
}

fn axes_of(inputs: &Inputs, a: &Attrs, opset: i64) -> Result<Option<Vec<i64>>> {
    if opset >= 13 {
        inputs
            .opt(1)
            .map(|v| v.as_int(inputs.op).map(|t| t.data.clone()))
            .transpose()
    } else {
        Ok(a.ints("axes"))
    }
}

pub(crate) fn squeeze(inputs: &Inputs, a: &Attrs, opset: i64) -> Result<Value> {
    let v = inputs.get(0)?;
    let s = v.shape();
    let axes = axes_of(inputs, a, opset)?;
    let drop: Vec<bool> = match axes {
        Some(axes) => {
            let mut d = vec![false; s.len()];
            for ax in axes {
                let ax = norm_axis(inputs.op, ax, s.len())?;
                if s[ax] != 1 {
                    return Err(shape_err(inputs.op, format!("axis {ax} has size {}", s[ax])));
                }
                d[ax] = true;
            }
            d
        }
        None => s.iter().map(|&d| d == 1).collect(),
    };
    let shape = s
        .iter()
        .zip(&drop)
        .filter(|(_, &d)| !d)
        .map(|(&d, _)| d)
        .collect();
    with_shape(v, shape)
}

pub(crate) fn unsqueeze(inputs: &Inputs, a: &Attrs, opset: i64) -> Result<Value> {
    let v = inputs.get(0)?;
    let s = v.shape();
    let axes = axes_of(inputs, a, opset)?.ok_or_else(|| shape_err(inputs.op, "axes required"))?;
    let rank = s.len() + axes.len();
    let mut insert = vec![false; rank];
    for ax in axes {
        insert[norm_axis(inputs.op, ax, rank)?] = true;
    }
    let mut rest = s.iter();
    let shape = insert
        .iter()
        .map(|&ins| if ins { 1 } else { *rest.next().unwrap_or(&1) })
        .collect();
    with_shape(v, shape)
}

pub(crate) fn concat(inputs: &Inputs, a: &Attrs) -> Result<Value> {
    let parts: Vec<&Value> = inputs.values.iter().flatten().copied().collect();
    let first = parts
        .first()
        .ok_or_else(|| shape_err(inputs.op, "no inputs"))?;
    let rank = first.shape().len();
    let axis = norm_axis(inputs.op, a.int("axis", 0), rank)?;
    let outer: usize = first.shape()[..axis].iter().product();
    let mut shape = first.shape().to_vec();
    shape[axis] = 0;
    for p in &parts {
        let s = p.shape();
        if s.len() != rank || s.iter().enumerate().any(|(i, &d)| i != axis && d != first.shape()[i]) {
            return Err(shape_err(inputs.op, format!("incompatible shapes {:?} and {s:?}", first.shape())));
        }
        shape[axis] += s[axis];
    }
    fn join<T: Copy>(parts: &[&Tensor<T>], outer: usize) -> Vec<T> {
        let mut out = Vec::new();
        for o in 0..outer {
            for t in parts {
                let chunk = t.len() / outer.max(1);
                out.extend_from_slice(&t.data[o * chunk..(o + 1) * chunk]);
            }
        }
        out
    }
    Ok(match first {
        Value::Float(_) => {
            let ts = parts.iter().map(|p| p.as_float(inputs.op)).collect::<Result<Vec<_>>>()?;
            Value::Float(Tensor::new(shape, join(&ts, outer))?)
        }
        Value::Int(_) => {
            let ts = parts.iter().map(|p| p.as_int(inputs.op)).collect::<Result<Vec<_>>>()?;
            Value::Int(Tensor::new(shape, join(&ts, outer))?)
        }
    })
}

pub(crate) fn shape(inputs: &Inputs, a: &Attrs) -> Result<Value> {
    let s = inputs.get(0)?.shape();
    let r = s.len() as i64;
    let clampi = |v: i64| (if v < 0 { v + r } else { v }).clamp(0, r) as usize;
    let start = clampi(a.int("start", 0));
    let end = clampi(a.int("end", r));
    let dims: Vec<i64> = s[start..end.max(start)].iter().map(|&d| d as i64).collect();
    Ok(Value::Int(Tensor::new(vec![dims.len()], dims)?))
}

pub(crate) fn gather(inputs: &Inputs, a: &Attrs) -> Result<Value> {
    let data = inputs.get(0)?;
    let idx = inputs.int(1)?;
    let s = data.shape();
    let axis = norm_axis(inputs.op, a.int("axis", 0), s.len())?;
    let (len, inner) = (s[axis], s[axis + 1..].iter().product::<usize>());
    let resolved = idx
        .data
        .iter()
        .map(|&i| {
            let j = if i < 0 { i + len as i64 } else { i };
            if j < 0 || j as usize >= len {
                Err(shape_err(inputs.op, format!("index {i} out of range {len}")))
            } else {
                Ok(j as usize)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut shape = s[..axis].to_vec();
    shape.extend_from_slice(&idx.shape);
    shape.extend_from_slice(&s[axis + 1..]);
    let ni = resolved.len();
    map_value(data, shape, |flat| {
        let i = flat % inner.max(1);
        let rest = flat / inner.max(1);
        let k = rest % ni.max(1);
        let o = rest / ni.max(1);
        (o * len + resolved[k]) * inner + i
    })
}

pub(crate) fn transpose(inputs: &Inputs, a: &Attrs) -> Result<Value> {
    let v = inputs.get(0)?;
    let s = v.shape().to_vec();
    let rank = s.len();
    let perm: Vec<usize> = match a.ints("perm") {
        Some(p) => p.iter().map(|&x| norm_axis(inputs.op, x, rank)).collect::<Result<_>>()?,
        None => (0..rank).rev().collect(),
    };
    let mut seen = vec![false; rank];
    if perm.len() != rank || perm.iter().any(|&p| std::mem::replace(&mut seen[p], true)) {
        return Err(shape_err(inputs.op, format!("bad perm {perm:?}")));
    }
    let shape: Vec<usize> = perm.iter().map(|&p| s[p]).collect();
    let mut in_strides = vec![1usize; rank];
    for i in (0..rank.saturating_sub(1)).rev() {
        in_strides[i] = in_strides[i + 1] * s[i + 1];
    }
    let out_shape = shape.clone();
    map_value(v, shape, |mut flat| {
        let mut src = 0;
        for d in (0..rank).rev() {
            let c = flat % out_shape[d];
            flat /= out_shape[d];
            src += c * in_strides[perm[d]];
        }
        src
    })
}

pub(crate) fn constant(a: &Attrs) -> Result<Value> {
    if let Some(t) = a.tensor("value") {
        return Value::from_proto(t);
    }
    if a.has("value_float") {
        return Ok(Value::Float(Tensor::scalar(a.float("value_float", 0.0))));
    }
    if let Some(v) = a.floats("value_floats") {
        return Ok(Value::Float(Tensor::new(vec![v.len()], v)?));
    }
    if a.has("value_int") {
        return Ok(Value::Int(Tensor::scalar(a.int("value_int", 0))));
    }
    if let Some(v) = a.ints("value_ints") {
        return Ok(Value::Int(Tensor::new(vec![v.len()], v)?));
    }
    Err(OnnxError::Unsupported("Constant without a supported value attribute".into()))
}
