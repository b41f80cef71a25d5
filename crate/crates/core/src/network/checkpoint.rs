//! Binary checkpoints.
//!
//! Layout (little endian): magic `DIDACKPT`, `u32` version, 32-byte SHA-256 of
//! the model config JSON, `u64` length + config JSON, `u32` block count, then
//! per block: `u32` name length + name, `u32` rank, `u64` dims, `f64` values.

use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::model::Model;
use super::params::{ModelConfig, ModelParams};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"DIDACKPT";
const VERSION: u32 = 1;

pub fn config_hash(config: &ModelConfig) -> [u8; 32] {
    let json = serde_json::to_vec(config).expect("config serializes");
    Sha256::digest(&json).into()
}

pub fn encode_checkpoint(model: &Model) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&config_hash(&model.config));
    let json = serde_json::to_vec(&model.config).expect("config serializes");
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    let blocks = model.params.blocks();
    out.extend_from_slice(&(blocks.len() as u32).to_le_bytes());
    for b in blocks {
        out.extend_from_slice(&(b.name.len() as u32).to_le_bytes());
        out.extend_from_slice(b.name.as_bytes());
        out.extend_from_slice(&(b.shape.len() as u32).to_le_bytes());
        for &dim in &b.shape {
            out.extend_from_slice(&(dim as u64).to_le_bytes());
        }
        for v in b.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_checkpoint(model)).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    buf: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Checkpoint("truncated checkpoint".into()));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Decodes a checkpoint. With `expected`, refuses a checkpoint whose config
/// hash differs.
pub fn decode_checkpoint(bytes: &[u8], expected: Option<&ModelConfig>) -> Result<Model> {
    let mut c = Cursor { buf: bytes };
    if c.take(8)? != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let hash: [u8; 32] = c.take(32)?.try_into().expect("32 bytes");
    let len = c.u64()? as usize;
    let config: ModelConfig = serde_json::from_slice(c.take(len)?)
        .map_err(|e| Error::Checkpoint(format!("bad config: {e}")))?;
    if config_hash(&config) != hash {
        return Err(Error::Checkpoint("config hash does not match stored config".into()));
    }
    if let Some(exp) = expected {
        if config_hash(exp) != hash {
            return Err(Error::Checkpoint(format!(
                "checkpoint was written for a different model config: {config:?}"
            )));
        }
    }
    let mut params = ModelParams::zeros(&config);
    let n = c.u32()? as usize;
    let mut blocks = params.blocks_mut();
    if n != blocks.len() {
        return Err(Error::Checkpoint(format!("{n} parameter blocks, expected {}", blocks.len())));
    }
    for block in blocks.iter_mut() {
        let name_len = c.u32()? as usize;
        let name = std::str::from_utf8(c.take(name_len)?).map_err(|_| Error::Checkpoint("bad block name".into()))?;
        if name != block.name {
            return Err(Error::Checkpoint(format!("found block {name}, expected {}", block.name)));
        }
        let rank = c.u32()? as usize;
        let shape = (0..rank).map(|_| c.u64().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        if shape != block.shape {
            return Err(Error::Checkpoint(format!("{name} has shape {shape:?}, expected {:?}", block.shape)));
        }
        for v in block.data.iter_mut() {
            *v = f64::from_le_bytes(c.take(8)?.try_into().expect("8 bytes"));
        }
    }
    drop(blocks);
    if !c.buf.is_empty() {
        return Err(Error::Checkpoint("trailing bytes after parameters".into()));
    }
    Model::from_params(config, params)
}

pub fn load_checkpoint(path: &Path, expected: Option<&ModelConfig>) -> Result<Model> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ModelConfig {
        ModelConfig {
            vocab_size: 5,
            embedding_dim: 3,
            hidden_dim: 2,
            emotion_dim: 4,
            co_attention: true,
            temporal: true,
        }
    }

    #[test]
    fn round_trip() {
        let m = Model::new(config(), 9).unwrap();
        let bytes = encode_checkpoint(&m);
        assert_eq!(decode_checkpoint(&bytes, Some(&config())).unwrap(), m);
    }

    #[test]
    fn refuses_other_config() {
        let m = Model::new(config(), 9).unwrap();
        let bytes = encode_checkpoint(&m);
        let other = ModelConfig { temporal: false, ..config() };
        assert!(matches!(decode_checkpoint(&bytes, Some(&other)), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn rejects_truncation() {
        let bytes = encode_checkpoint(&Model::new(config(), 1).unwrap());
        assert!(decode_checkpoint(&bytes[..bytes.len() - 3], None).is_err());
    }
}
