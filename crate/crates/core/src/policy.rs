//! Loaded models (fp32 or int8) and the driving policy built on them.

use std::path::Path;

use thiserror::Error;

use crate::format::FormatError;
use crate::nn::checkpoint::FP32_MAGIC;
use crate::nn::{decode_checkpoint, encode_checkpoint, NetParams, NetSpec, Tape};
use crate::quant::{decode_quantized, encode_quantized, Int8Engine, QuantizedNet, INT8_MAGIC};
use crate::scan::{downsample, downsample_factor_for, map_output, ActionPair};
use crate::sim::{Policy, VehicleState};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("unrecognized checkpoint (magic {0:?})")]
    UnknownFormat([u8; 4]),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("input length {0} is not a decimation of the 1081-beam scan")]
    InputLength(usize),
    #[error("inference: {0}")]
    Inference(String),
}

#[derive(Clone, Debug)]
pub enum Model {
    Float(NetParams<f32>),
    Int8(QuantizedNet),
}

impl Model {
    /// Decodes either checkpoint format, chosen by the leading magic bytes.
    pub fn decode(bytes: &[u8]) -> Result<Model, ModelError> {
        let mut magic = [0u8; 4];
        let n = bytes.len().min(4);
        magic[..n].copy_from_slice(&bytes[..n]);
        if &magic == FP32_MAGIC {
            Ok(Model::Float(decode_checkpoint(bytes)?))
        } else if &magic == INT8_MAGIC {
            Ok(Model::Int8(decode_quantized(bytes)?))
        } else {
            Err(ModelError::UnknownFormat(magic))
        }
    }

    pub fn load(path: &Path) -> Result<Model, ModelError> {
        let bytes = std::fs::read(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Model::decode(&bytes)
    }

    pub fn encode(&self) -> Vec<u8> {
        match self {
            Model::Float(p) => encode_checkpoint(p),
            Model::Int8(q) => encode_quantized(q),
        }
    }

    pub fn spec(&self) -> &NetSpec {
        match self {
            Model::Float(p) => p.spec(),
            Model::Int8(q) => &q.spec,
        }
    }

    pub fn format_name(&self) -> &'static str {
        match self {
            Model::Float(_) => "fp32",
            Model::Int8(_) => "int8",
        }
    }

    pub fn runner(&self) -> Result<Runner<'_>, ModelError> {
        Runner::new(self)
    }
}

enum Engine<'a> {
    Float(&'a NetParams<f32>, Tape<f32>),
    Int8(Int8Engine<'a>),
}

/// Single-sample inference on full 1081-beam preprocessed scans.
pub struct Runner<'a> {
    engine: Engine<'a>,
    factor: usize,
    out: Vec<f32>,
}

impl<'a> Runner<'a> {
    pub fn new(model: &'a Model) -> Result<Self, ModelError> {
        let len = model.spec().input_length;
        let factor = downsample_factor_for(len).ok_or(ModelError::InputLength(len))?;
        let engine = match model {
            Model::Float(p) => Engine::Float(p, Tape::new()),
            Model::Int8(q) => Engine::Int8(Int8Engine::new(q)),
        };
        Ok(Runner {
            engine,
            factor,
            out: Vec::with_capacity(2),
        })
    }

    /// Network output for an input already at the model's length.
    pub fn infer(&mut self, input: &[f32]) -> Result<[f32; 2], ModelError> {
        let out: &[f32] = match &mut self.engine {
            Engine::Float(p, tape) => tape
                .forward(p, input)
                .map_err(|e| ModelError::Inference(e.to_string()))?,
            Engine::Int8(e) => {
                e.infer(input, &mut self.out)
                    .map_err(|e| ModelError::Inference(e.to_string()))?;
                &self.out
            }
        };
        match out {
            [a, b] => Ok([*a, *b]),
            _ => Err(ModelError::Inference(format!(
                "model produced {} outputs, expected 2",
                out.len()
            ))),
        }
    }

    /// Decimates a 1081-beam scan to the model input and runs it.
    pub fn predict(&mut self, scan: &[f32]) -> Result<[f32; 2], ModelError> {
        let x = downsample(scan, self.factor).map_err(|e| ModelError::Inference(e.to_string()))?;
        self.infer(&x)
    }
}

/// Drives from the network output alone; any inference failure stops the car.
pub struct NetPolicy<'a> {
    runner: Runner<'a>,
}

impl<'a> NetPolicy<'a> {
    pub fn new(model: &'a Model) -> Result<Self, ModelError> {
        Ok(NetPolicy {
            runner: Runner::new(model)?,
        })
    }
}

impl Policy for NetPolicy<'_> {
    fn act(&mut self, scan: &[f32], _state: &VehicleState) -> ActionPair {
        match self.runner.predict(scan) {
            Ok(out) => map_output(out),
            Err(_) => ActionPair {
                fault: true,
                ..ActionPair::STOP
            },
        }
    }
}
