use crate::error::{shape_err, OnnxError, Result};
use crate::proto::{data_type, TensorProto};

/// Dense row-major tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Copy> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(shape_err(
                "tensor",
                format!("shape {shape:?} needs {n} values, got {}", data.len()),
            ));
        }
        Ok(Self { shape, data })
    }

    pub fn scalar(v: T) -> Self {
        Self {
            shape: vec![],
            data: vec![v],
        }
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn reshaped(mut self, shape: Vec<usize>) -> Result<Self> {
        if shape.iter().product::<usize>() != self.data.len() {
            return Err(shape_err(
                "reshape",
                format!("cannot view {:?} as {shape:?}", self.shape),
            ));
        }
        self.shape = shape;
        Ok(self)
    }
}

/// A graph value: float activations/weights or integer shape data.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(Tensor<f32>),
    Int(Tensor<i64>),
}

impl Value {
    pub fn shape(&self) -> &[usize] {
        match self {
            Value::Float(t) => &t.shape,
            Value::Int(t) => &t.shape,
        }
    }

    pub fn as_float(&self, op: &str) -> Result<&Tensor<f32>> {
        match self {
            Value::Float(t) => Ok(t),
            Value::Int(_) => Err(shape_err(op, "expected a float tensor")),
        }
    }

    pub fn as_int(&self, op: &str) -> Result<&Tensor<i64>> {
        match self {
            Value::Int(t) => Ok(t),
            Value::Float(_) => Err(shape_err(op, "expected an integer tensor")),
        }
    }

    pub fn from_proto(t: &TensorProto) -> Result<Value> {
        if t.data_location == 1 {
            return Err(OnnxError::Unsupported(format!(
                "tensor {:?} uses external data",
                t.name
            )));
        }
        let shape = t
            .dims
            .iter()
            .map(|&d| usize::try_from(d).map_err(|_| OnnxError::Decode(format!("negative dim in {:?}", t.name))))
            .collect::<Result<Vec<_>>>()?;
        let raw = &t.raw_data;
        let value = match t.data_type {
            data_type::FLOAT => Value::Float(Tensor::new(
                shape,
                if raw.is_empty() {
                    t.float_data.clone()
                } else {
                    le_chunks::<4>(raw, &t.name)?.map(f32::from_le_bytes).collect()
                },
            )?),
            data_type::DOUBLE => Value::Float(Tensor::new(
                shape,
                if raw.is_empty() {
                    t.double_data.iter().map(|&v| v as f32).collect()
                } else {
                    le_chunks::<8>(raw, &t.name)?
                        .map(|b| f64::from_le_bytes(b) as f32)
                        .collect()
                },
            )?),
            data_type::INT64 => Value::Int(Tensor::new(
                shape,
                if raw.is_empty() {
                    t.int64_data.clone()
                } else {
                    le_chunks::<8>(raw, &t.name)?.map(i64::from_le_bytes).collect()
                },
            )?),
            data_type::INT32 => Value::Int(Tensor::new(
                shape,
                if raw.is_empty() {
                    t.int32_data.iter().map(|&v| v as i64).collect()
                } else {
                    le_chunks::<4>(raw, &t.name)?
                        .map(|b| i32::from_le_bytes(b) as i64)
                        .collect()
                },
            )?),
            other => {
                return Err(OnnxError::Unsupported(format!(
                    "tensor {:?} has data type {other}",
                    t.name
                )))
            }
        };
        Ok(value)
    }
}

fn le_chunks<'a, const N: usize>(
    raw: &'a [u8],
    name: &str,
) -> Result<impl Iterator<Item = [u8; N]> + 'a> {
    if raw.len() % N != 0 {
        return Err(OnnxError::Decode(format!(
            "raw data of {name:?} is not a multiple of {N} bytes"
        )));
    }
    Ok(raw
        .chunks_exact(N)
        .map(|c| c.try_into().expect("exact chunk")))
}

/// Numpy-style broadcast of two shapes.
pub fn broadcast_shape(op: &str, a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for i in 0..rank {
        let da = if i + a.len() >= rank { a[i + a.len() - rank] } else { 1 };
        let db = if i + b.len() >= rank { b[i + b.len() - rank] } else { 1 };
        out[i] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => return Err(shape_err(op, format!("cannot broadcast {a:?} with {b:?}"))),
        };
    }
    Ok(out)
}

/// Element strides of `shape` when viewed as `out` (zero on broadcast axes).
fn broadcast_strides(shape: &[usize], out: &[usize]) -> Vec<usize> {
    let offset = out.len() - shape.len();
    let mut strides = vec![0; out.len()];
    let mut acc = 1;
    for i in (0..shape.len()).rev() {
        strides[offset + i] = if shape[i] == 1 { 0 } else { acc };
        acc *= shape[i];
    }
    strides
}

pub fn broadcast_binary<T: Copy>(
    op: &str,
    a: &Tensor<T>,
    b: &Tensor<T>,
    f: impl Fn(T, T) -> T,
) -> Result<Tensor<T>> {
    if a.shape == b.shape {
        let data = a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect();
        return Tensor::new(a.shape.clone(), data);
    }
    let shape = broadcast_shape(op, &a.shape, &b.shape)?;
    let sa = broadcast_strides(&a.shape, &shape);
    let sb = broadcast_strides(&b.shape, &shape);
    let n: usize = shape.iter().product();
    let mut data = Vec::with_capacity(n);
    let mut idx = vec![0usize; shape.len()];
    let (mut ia, mut ib) = (0usize, 0usize);
    for _ in 0..n {
        data.push(f(a.data[ia], b.data[ib]));
        // odometer increment
        for d in (0..shape.len()).rev() {
            idx[d] += 1;
            ia += sa[d];
            ib += sb[d];
            if idx[d] < shape[d] {
                break;
            }
            ia -= sa[d] * shape[d];
            ib -= sb[d] * shape[d];
            idx[d] = 0;
        }
    }
    Tensor::new(shape, data)
}
