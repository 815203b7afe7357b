//! Little-endian binary helpers shared by the checkpoint formats.
//!
//! Both checkpoint kinds start with the same header:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic (`TLNF` fp32, `TLNQ` int8)        |
//! | 4      | 2    | format version, u16 (currently 1)       |
//! | 6      | 2    | name length `n`, u16                    |
//! | 8      | n    | model name, UTF-8                       |
//! | 8+n    | 4    | input length, u32                       |
//! | 12+n   | 4    | layer count `m`, u32                    |
//! | 16+n   | ...  | `m` layer records                       |
//!
//! A layer record is a one-byte tag followed by its dimensions as u32:
//! `0` Conv1D (in, out, kernel, stride), `1` Dense (in, out), `2` ReLU, `3` Flatten.

use thiserror::Error;

use crate::nn::{LayerSpec, NetSpec};

pub const FORMAT_VERSION: u16 = 1;

/// Upper bound on any single dimension accepted from a file.
const MAX_DIM: u32 = 1 << 20;
/// Upper bound on the layer count accepted from a file.
const MAX_LAYERS: u32 = 4096;
/// Upper bound on the parameter count accepted from a file.
pub(crate) const MAX_PARAMS: usize = 1 << 28;

#[derive(Debug, Error, PartialEq)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("unsupported format version {0}")]
    Version(u16),
    #[error("truncated input: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("{0} trailing bytes after payload")]
    Trailing(usize),
    #[error("invalid content: {0}")]
    Invalid(String),
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let remaining = self.buf.len() - self.pos;
        if n > remaining {
            return Err(FormatError::Truncated {
                offset: self.pos,
                needed: n - remaining,
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    pub fn i8(&mut self) -> Result<i8, FormatError> {
        Ok(self.take(1)?[0] as i8)
    }

    pub fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("len")))
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("len")))
    }

    pub fn i32(&mut self) -> Result<i32, FormatError> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().expect("len")))
    }

    pub fn f32(&mut self) -> Result<f32, FormatError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("len")))
    }

    pub fn finish(self) -> Result<(), FormatError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(FormatError::Trailing(n)),
        }
    }

    fn dim(&mut self) -> Result<usize, FormatError> {
        let v = self.u32()?;
        if v == 0 || v > MAX_DIM {
            return Err(FormatError::Invalid(format!("dimension {v} out of range")));
        }
        Ok(v as usize)
    }
}

pub(crate) fn write_header(out: &mut Vec<u8>, magic: &[u8; 4], spec: &NetSpec) {
    out.extend_from_slice(magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let name = spec.name.as_bytes();
    let n = name.len().min(u16::MAX as usize);
    out.extend_from_slice(&(n as u16).to_le_bytes());
    out.extend_from_slice(&name[..n]);
    out.extend_from_slice(&(spec.input_length as u32).to_le_bytes());
    out.extend_from_slice(&(spec.layers.len() as u32).to_le_bytes());
    for layer in &spec.layers {
        let dims: &[usize] = match layer {
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
                stride,
            } => {
                out.push(0);
                &[*in_channels, *out_channels, *kernel_size, *stride]
            }
            LayerSpec::Dense {
                in_features,
                out_features,
            } => {
                out.push(1);
                &[*in_features, *out_features]
            }
            LayerSpec::Relu => {
                out.push(2);
                &[]
            }
            LayerSpec::Flatten => {
                out.push(3);
                &[]
            }
        };
        for d in dims {
            out.extend_from_slice(&(*d as u32).to_le_bytes());
        }
    }
}

/// Reads the shared header and returns a validated spec.
pub(crate) fn read_header(
    r: &mut Reader<'_>,
    magic: &'static [u8; 4],
) -> Result<NetSpec, FormatError> {
    if r.take(4)? != magic {
        return Err(FormatError::BadMagic {
            expected: std::str::from_utf8(magic).expect("ascii magic"),
        });
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(FormatError::Version(version));
    }
    let n = r.u16()? as usize;
    let name = std::str::from_utf8(r.take(n)?)
        .map_err(|_| FormatError::Invalid("model name is not UTF-8".into()))?
        .to_string();
    let input_length = r.dim()?;
    let count = r.u32()?;
    if count > MAX_LAYERS {
        return Err(FormatError::Invalid(format!(
            "{count} layers exceeds limit"
        )));
    }
    let mut layers = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let layer = match r.u8()? {
            0 => LayerSpec::Conv1d {
                in_channels: r.dim()?,
                out_channels: r.dim()?,
                kernel_size: r.dim()?,
                stride: r.dim()?,
            },
            1 => LayerSpec::Dense {
                in_features: r.dim()?,
                out_features: r.dim()?,
            },
            2 => LayerSpec::Relu,
            3 => LayerSpec::Flatten,
            t => return Err(FormatError::Invalid(format!("unknown layer tag {t}"))),
        };
        layers.push(layer);
    }
    let spec = NetSpec::new(name, input_length, layers);
    spec.shapes()
        .map_err(|e| FormatError::Invalid(e.to_string()))?;
    let total = spec
        .layers
        .iter()
        .filter_map(|l| {
            let w: Option<usize> = l
                .weight_shape()?
                .iter()
                .try_fold(1usize, |a, d| a.checked_mul(*d));
            Some(w.and_then(|w| w.checked_add(l.bias_len()?)))
        })
        .try_fold(0usize, |a, n| n.and_then(|n| a.checked_add(n)));
    match total {
        Some(t) if t <= MAX_PARAMS => Ok(spec),
        _ => Err(FormatError::Invalid("parameter count exceeds limit".into())),
    }
}
