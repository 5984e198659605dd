//! A small ONNX interpreter covering the operators used by exported CNN
//! image classifiers (convolutions, pooling, batch norm, dense heads).
//!
//! ```no_run
//! use weakseg_onnx::OnnxModel;
//! let model = OnnxModel::load("classifier.onnx")?;
//! let logits = model.run_f32(&vec![0.0; 3 * 128 * 128], &[1, 3, 128, 128])?;
//! # Ok::<(), weakseg_onnx::OnnxError>(())
//! ```

mod error;
mod ops;
pub mod proto;
mod tensor;

use std::collections::HashMap;
use std::path::Path;

use prost::Message;

pub use error::{OnnxError, Result};
pub use tensor::{Tensor, Value};

use ops::{run_node, Inputs};
use proto::{ModelProto, NodeProto};

/// A loaded inference graph with one float input and one float output.
#[derive(Debug, Clone)]
pub struct OnnxModel {
    nodes: Vec<NodeProto>,
    initializers: HashMap<String, Value>,
    input: String,
    output: String,
    opset: i64,
    /// Index of the last node reading each value, for early release.
    last_use: HashMap<String, usize>,
}

impl OnnxModel {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| OnnxError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let model = ModelProto::decode(bytes).map_err(|e| OnnxError::Decode(e.to_string()))?;
        let graph = model
            .graph
            .ok_or_else(|| OnnxError::Decode("model has no graph".into()))?;
        let opset = model
            .opset_import
            .iter()
            .find(|o| o.domain.is_empty() || o.domain == "ai.onnx")
            .map_or(1, |o| o.version);
        for n in &graph.node {
            if !(n.domain.is_empty() || n.domain == "ai.onnx") {
                return Err(OnnxError::Unsupported(format!(
                    "operator {} from domain {:?}",
                    n.op_type, n.domain
                )));
            }
        }
        let mut initializers = HashMap::new();
        for t in &graph.initializer {
            initializers.insert(t.name.clone(), Value::from_proto(t)?);
        }
        let inputs: Vec<&str> = graph
            .input
            .iter()
            .map(|v| v.name.as_str())
            .filter(|n| !initializers.contains_key(*n))
            .collect();
        let [input] = inputs[..] else {
            return Err(OnnxError::Unsupported(format!(
                "expected one graph input, found {inputs:?}"
            )));
        };
        let output = graph
            .output
            .first()
            .ok_or_else(|| OnnxError::Decode("graph has no output".into()))?
            .name
            .clone();
        let mut last_use = HashMap::new();
        for (i, n) in graph.node.iter().enumerate() {
            for name in &n.input {
                last_use.insert(name.clone(), i);
            }
        }
        Ok(Self {
            input: input.to_string(),
            output,
            nodes: graph.node,
            initializers,
            opset,
            last_use,
        })
    }

    pub fn opset(&self) -> i64 {
        self.opset
    }

    pub fn input_name(&self) -> &str {
        &self.input
    }

    /// Runs the graph on one input tensor and returns the first output.
    pub fn run(&self, input: Tensor<f32>) -> Result<Tensor<f32>> {
        let mut env: HashMap<&str, Value> = HashMap::new();
        env.insert(&self.input, Value::Float(input));
        for (i, node) in self.nodes.iter().enumerate() {
            let outputs = {
                let values = node
                    .input
                    .iter()
                    .map(|name| {
                        if name.is_empty() {
                            return Ok(None);
                        }
                        env.get(name.as_str())
                            .or_else(|| self.initializers.get(name))
                            .map(Some)
                            .ok_or_else(|| OnnxError::Missing(name.clone()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                run_node(
                    node,
                    Inputs {
                        op: &node.op_type,
                        values,
                    },
                    self.opset,
                )?
            };
            for name in &node.input {
                if name != &self.output && self.last_use.get(name) == Some(&i) {
                    env.remove(name.as_str());
                }
            }
            for (name, v) in node.output.iter().zip(outputs) {
                if !name.is_empty() {
                    env.insert(name, v);
                }
            }
        }
        match env.remove(self.output.as_str()) {
            Some(Value::Float(t)) => Ok(t),
            Some(Value::Int(_)) => Err(OnnxError::Unsupported("integer graph output".into())),
            None => Err(OnnxError::Missing(self.output.clone())),
        }
    }

    pub fn run_f32(&self, data: &[f32], shape: &[usize]) -> Result<Tensor<f32>> {
        self.run(Tensor::new(shape.to_vec(), data.to_vec())?)
    }
}

impl weakseg_core::PatchModel for OnnxModel {
    fn forward(&self, input: &[f32], shape: [usize; 4]) -> weakseg_core::Result<Vec<Vec<f32>>> {
        let out = self.run_f32(input, &shape)?;
        let n = shape[0];
        if out.shape.first() != Some(&n) || out.len() % n.max(1) != 0 {
            return Err(weakseg_core::Error::Backend(format!(
                "model output shape {:?} does not match batch {n}",
                out.shape
            )));
        }
        let per = out.len() / n.max(1);
        Ok(out.data.chunks(per.max(1)).map(<[f32]>::to_vec).collect())
    }
}
