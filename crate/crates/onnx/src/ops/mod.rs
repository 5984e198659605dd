//! Operator kernels. Every kernel takes resolved input values and returns
//! the node outputs in order.

mod conv;
mod elementwise;
mod linalg;
mod pool;
mod shape;

use crate::error::{OnnxError, Result};
use crate::proto::{AttributeProto, NodeProto};
use crate::tensor::{Tensor, Value};

pub(crate) struct Attrs<'a>(pub &'a [AttributeProto]);

impl<'a> Attrs<'a> {
    fn get(&self, name: &str) -> Option<&'a AttributeProto> {
        self.0.iter().find(|a| a.name == name)
    }

    pub fn int(&self, name: &str, default: i64) -> i64 {
        self.get(name).map_or(default, |a| a.i)
    }

    pub fn float(&self, name: &str, default: f32) -> f32 {
        self.get(name).map_or(default, |a| a.f)
    }

    pub fn ints(&self, name: &str) -> Option<Vec<i64>> {
        self.get(name).map(|a| a.ints.clone())
    }

    pub fn floats(&self, name: &str) -> Option<Vec<f32>> {
        self.get(name).map(|a| a.floats.clone())
    }

    pub fn string(&self, name: &str) -> Option<String> {
        self.get(name).map(|a| String::from_utf8_lossy(&a.s).into_owned())
    }

    pub fn has(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn tensor(&self, name: &str) -> Option<&'a crate::proto::TensorProto> {
        self.get(name).and_then(|a| a.t.as_ref())
    }
}

/// Inputs of one node; empty names resolve to `None`.
pub(crate) struct Inputs<'a> {
    pub op: &'a str,
    pub values: Vec<Option<&'a Value>>,
}

impl<'a> Inputs<'a> {
    pub fn get(&self, i: usize) -> Result<&'a Value> {
        self.values.get(i).copied().flatten().ok_or_else(|| {
            OnnxError::Missing(format!("input {i} of {}", self.op))
        })
    }

    pub fn opt(&self, i: usize) -> Option<&'a Value> {
        self.values.get(i).copied().flatten()
    }

    pub fn float(&self, i: usize) -> Result<&'a Tensor<f32>> {
        self.get(i)?.as_float(self.op)
    }

    pub fn int(&self, i: usize) -> Result<&'a Tensor<i64>> {
        self.get(i)?.as_int(self.op)
    }
}

/// Resolves a possibly negative axis against `rank`.
pub(crate) fn norm_axis(op: &str, axis: i64, rank: usize) -> Result<usize> {
    let a = if axis < 0 { axis + rank as i64 } else { axis };
    if a < 0 || a as usize >= rank.max(1) {
        return Err(crate::error::shape_err(
            op,
            format!("axis {axis} out of range for rank {rank}"),
        ));
    }
    Ok(a as usize)
}

pub(crate) fn run_node(node: &NodeProto, inputs: Inputs<'_>, opset: i64) -> Result<Vec<Value>> {
    let a = Attrs(&node.attribute);
    let one = |v: Value| Ok(vec![v]);
    match node.op_type.as_str() {
        "Conv" => one(Value::Float(conv::conv(&inputs, &a)?)),
        "BatchNormalization" => one(Value::Float(elementwise::batch_norm(&inputs, &a)?)),
        "MaxPool" => one(Value::Float(pool::pool(&inputs, &a, pool::Kind::Max)?)),
        "AveragePool" => one(Value::Float(pool::pool(&inputs, &a, pool::Kind::Average)?)),
        "GlobalAveragePool" => one(Value::Float(pool::global(&inputs, pool::Kind::Average)?)),
        "GlobalMaxPool" => one(Value::Float(pool::global(&inputs, pool::Kind::Max)?)),
        "Relu" => one(elementwise::unary(&inputs, |v| v.max(0.0))?),
        "Sigmoid" => one(elementwise::unary(&inputs, |v| 1.0 / (1.0 + (-v).exp()))?),
        "Tanh" => one(elementwise::unary(&inputs, f32::tanh)?),
        "Exp" => one(elementwise::unary(&inputs, f32::exp)?),
        "Sqrt" => one(elementwise::unary(&inputs, f32::sqrt)?),
        "Neg" => one(elementwise::unary(&inputs, |v| -v)?),
        "Abs" => one(elementwise::unary(&inputs, f32::abs)?),
        "LeakyRelu" => {
            let alpha = a.float("alpha", 0.01);
            one(elementwise::unary(&inputs, move |v| if v < 0.0 { alpha * v } else { v })?)
        }
        "Clip" => one(Value::Float(elementwise::clip(&inputs, &a, opset)?)),
        "Add" => one(elementwise::binary(&inputs, |x, y| x + y, |x, y| x + y)?),
        "Sub" => one(elementwise::binary(&inputs, |x, y| x - y, |x, y| x - y)?),
        "Mul" => one(elementwise::binary(&inputs, |x, y| x * y, |x, y| x * y)?),
        "Div" => one(elementwise::binary(&inputs, |x, y| x / y, |x, y| if y == 0 { 0 } else { x / y })?),
        "Softmax" => one(Value::Float(elementwise::softmax(&inputs, &a, opset)?)),
        "ReduceMean" => one(Value::Float(elementwise::reduce_mean(&inputs, &a, opset)?)),
        "Gemm" => one(Value::Float(linalg::gemm(&inputs, &a)?)),
        "MatMul" => one(Value::Float(linalg::matmul(&inputs)?)),
        "Flatten" => one(shape::flatten(&inputs, &a)?),
        "Reshape" => one(shape::reshape(&inputs, &a)?),
        "Squeeze" => one(shape::squeeze(&inputs, &a, opset)?),
        "Unsqueeze" => one(shape::unsqueeze(&inputs, &a, opset)?),
        "Concat" => one(shape::concat(&inputs, &a)?),
        "Shape" => one(shape::shape(&inputs, &a)?),
        "Gather" => one(shape::gather(&inputs, &a)?),
        "Transpose" => one(shape::transpose(&inputs, &a)?),
        "Constant" => one(shape::constant(&a)?),
        "Identity" | "Dropout" => one(inputs.get(0)?.clone()),
        other => Err(OnnxError::Unsupported(format!("operator {other}"))),
    }
}
