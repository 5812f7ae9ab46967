//! Versioned binary checkpoint container.
//!
//! ```text
//! "SOCM" | u32 version | u32 len | header JSON (model config, tokenizer,
//! vocabulary hash, step) | u32 tensor count | tensors...
//! tensor: u32 name len | name | u8 element width (4 or 8) | u32 ndim |
//!         u32 dims... | little-endian elements
//! ```
//! All integers are little-endian.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::weights::ModelWeights;
use crate::error::{Result, SocError};
use crate::nncore::{Real, Tensor};
use crate::textprep::TokenizerConfig;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SOCM";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    tokenizer: TokenizerConfig,
    vocab_sha256: String,
    step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<F> {
    pub weights: ModelWeights<F>,
    pub tokenizer: TokenizerConfig,
    /// [`crate::textprep::Vocabulary::fingerprint`] of the vocabulary the
    /// model was trained with.
    pub vocab_sha256: String,
    pub step: u64,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            SocError::Shape(format!(
                "truncated file: needed {n} bytes for {what} at offset {}, {} left",
                self.pos,
                self.bytes.len() - self.pos
            ))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

impl<F: Real> Checkpoint<F> {
    pub fn config(&self) -> &ModelConfig {
        &self.weights.config
    }

    /// Tensors are written at the precision of `F`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let header = Header {
            model: self.weights.config.clone(),
            tokenizer: self.tokenizer,
            vocab_sha256: self.vocab_sha256.clone(),
            step: self.step,
        };
        let json = serde_json::to_vec(&header).expect("header serialises");
        put_u32(&mut out, json.len());
        out.extend_from_slice(&json);

        let names = self.weights.names();
        let params = self.weights.params();
        put_u32(&mut out, params.len());
        for (name, p) in names.iter().zip(params) {
            put_u32(&mut out, name.len());
            out.extend_from_slice(name.as_bytes());
            out.push(F::BYTES);
            put_u32(&mut out, p.value.shape().len());
            for &dim in p.value.shape() {
                put_u32(&mut out, dim);
            }
            for &v in p.value.data() {
                v.write_le(&mut out);
            }
        }
        out
    }

    /// Parses a checkpoint, converting stored elements to `F`.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        let magic: [u8; 4] = match bytes.get(..4) {
            Some(m) => m.try_into().expect("4 bytes"),
            None => {
                let mut found = [0u8; 4];
                found[..bytes.len()].copy_from_slice(bytes);
                return Err(SocError::BadMagic { found });
            }
        };
        if &magic != CHECKPOINT_MAGIC {
            return Err(SocError::BadMagic { found: magic });
        }
        cur.pos = 4;
        let version = cur.u32("format version")?;
        if version != CHECKPOINT_VERSION {
            return Err(SocError::UnsupportedVersion {
                found: version,
                supported: CHECKPOINT_VERSION,
            });
        }
        let header_len = cur.u32("header length")? as usize;
        let header: Header = serde_json::from_slice(cur.take(header_len, "header")?)
            .map_err(|e| SocError::Shape(format!("invalid header: {e}")))?;
        header
            .model
            .validate()
            .map_err(|e| SocError::Shape(format!("invalid model config in header: {e}")))?;

        let expected_names = ModelWeights::<F>::zeros(&header.model)?.names();
        let count = cur.u32("tensor count")? as usize;
        if count != expected_names.len() {
            return Err(SocError::Shape(format!(
                "file holds {count} tensors, config requires {}",
                expected_names.len()
            )));
        }
        let mut tensors = Vec::with_capacity(count);
        for expected in &expected_names {
            let name_len = cur.u32("tensor name length")? as usize;
            let name = String::from_utf8_lossy(cur.take(name_len, "tensor name")?).into_owned();
            if &name != expected {
                return Err(SocError::Shape(format!("expected tensor {expected}, found {name}")));
            }
            let width = cur.u8("element width")?;
            if width != 4 && width != 8 {
                return Err(SocError::Shape(format!("tensor {name}: unknown element width {width}")));
            }
            let ndim = cur.u32("tensor rank")? as usize;
            if ndim > 8 {
                return Err(SocError::Shape(format!("tensor {name}: implausible rank {ndim}")));
            }
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                shape.push(cur.u32("tensor dimension")? as usize);
            }
            let n: usize = shape.iter().product();
            let raw = cur.take(n * width as usize, &format!("tensor {name} data"))?;
            let data: Vec<F> = raw
                .chunks_exact(width as usize)
                .map(|c| {
                    if width == 4 {
                        F::lit(f32::read_le(c) as f64)
                    } else {
                        F::lit(f64::read_le(c))
                    }
                })
                .collect();
            tensors.push(Tensor::new(&shape, data).map_err(|e| SocError::Shape(format!("tensor {name}: {e}")))?);
        }
        if cur.pos != bytes.len() {
            return Err(SocError::Shape(format!(
                "{} unexpected trailing bytes",
                bytes.len() - cur.pos
            )));
        }
        let weights = ModelWeights::from_tensors(&header.model, tensors)?;
        Ok(Self {
            weights,
            tokenizer: header.tokenizer,
            vocab_sha256: header.vocab_sha256,
            step: header.step,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| SocError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| SocError::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
