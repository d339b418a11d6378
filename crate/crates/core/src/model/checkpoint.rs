//! Binary checkpoint container.
//!
//! Layout: the 7-byte magic `MWPCKPT`, a version byte, a little-endian
//! `u64` header length, a JSON header (config, vocabularies, tensor
//! manifest, metadata), then every tensor as little-endian `f64` in
//! manifest order.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::params::Parameters;
use super::ModelConfig;
use crate::preprocess::{Vocab, VocabError};

const MAGIC: &[u8; 7] = b"MWPCKPT";
const VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint file")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u8),
    #[error("checkpoint truncated")]
    Truncated,
    #[error("checkpoint header: {0}")]
    Header(String),
    #[error("tensor `{name}`: expected {expected:?}, found {found:?}")]
    TensorMismatch {
        name: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    src_vocab: Vec<String>,
    tgt_vocab: Vec<String>,
    tensors: Vec<TensorEntry>,
    metadata: BTreeMap<String, String>,
}

/// Trained weights plus the vocabularies they were trained against.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: Parameters,
    pub src_vocab: Vocab,
    pub tgt_vocab: Vocab,
    pub metadata: BTreeMap<String, String>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let named = self.params.named_tensors();
        let header = Header {
            config: self.params.config.clone(),
            src_vocab: self.src_vocab.tokens().to_vec(),
            tgt_vocab: self.tgt_vocab.tokens().to_vec(),
            tensors: named
                .iter()
                .map(|(name, m)| TensorEntry {
                    name: name.clone(),
                    rows: m.nrows(),
                    cols: m.ncols(),
                })
                .collect(),
            metadata: self.metadata.clone(),
        };
        let header = serde_json::to_vec(&header).expect("header serializes");
        let n_values: usize = named.iter().map(|(_, m)| m.len()).sum();
        let mut out = Vec::with_capacity(16 + header.len() + 8 * n_values);
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for (_, m) in named {
            for v in m.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < 16 || &bytes[..7] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        if bytes[7] != VERSION {
            return Err(CheckpointError::UnsupportedVersion(bytes[7]));
        }
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let header_end = 16usize.checked_add(header_len).ok_or(CheckpointError::Truncated)?;
        let header_bytes = bytes.get(16..header_end).ok_or(CheckpointError::Truncated)?;
        let header: Header =
            serde_json::from_slice(header_bytes).map_err(|e| CheckpointError::Header(e.to_string()))?;
        header
            .config
            .validate()
            .map_err(|e| CheckpointError::Header(e.to_string()))?;
        let vocab = |tokens: &[String]| Vocab::from_text(&(tokens.join("\n") + "\n"));
        let src_vocab = vocab(&header.src_vocab)?;
        let tgt_vocab = vocab(&header.tgt_vocab)?;

        let mut params = Parameters::zeros(&header.config);
        let mut cursor = header_end;
        let targets = params.named_tensors_mut();
        if targets.len() != header.tensors.len() {
            return Err(CheckpointError::Header(format!(
                "expected {} tensors, header lists {}",
                targets.len(),
                header.tensors.len()
            )));
        }
        for ((name, m), entry) in targets.into_iter().zip(&header.tensors) {
            if name != entry.name || m.dim() != (entry.rows, entry.cols) {
                return Err(CheckpointError::TensorMismatch {
                    name: entry.name.clone(),
                    expected: m.dim(),
                    found: (entry.rows, entry.cols),
                });
            }
            for v in m.iter_mut() {
                let chunk = bytes.get(cursor..cursor + 8).ok_or(CheckpointError::Truncated)?;
                *v = f64::from_le_bytes(chunk.try_into().unwrap());
                cursor += 8;
            }
        }
        if cursor != bytes.len() {
            return Err(CheckpointError::Header("trailing bytes after tensors".into()));
        }
        Ok(Checkpoint {
            params,
            src_vocab,
            tgt_vocab,
            metadata: header.metadata,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn sample() -> Checkpoint {
        let src_vocab = Vocab::from_tokens(["রহিম", "৭", "।"]);
        let tgt_vocab = Vocab::from_tokens(["x", "=", "7"]);
        let cfg = ModelConfig::tiny(7);
        let mut metadata = BTreeMap::new();
        metadata.insert("seed".to_string(), "17".to_string());
        Checkpoint {
            params: Parameters::init(&cfg, 17),
            src_vocab,
            tgt_vocab,
            metadata,
        }
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let ck = sample();
        let bytes = ck.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let bytes = sample().to_bytes();
        assert!(matches!(Checkpoint::from_bytes(b"nope"), Err(CheckpointError::BadMagic)));
        assert!(matches!(
            Checkpoint::from_bytes(&bytes[..bytes.len() - 3]),
            Err(CheckpointError::Truncated)
        ));
        let mut wrong_version = bytes.clone();
        wrong_version[7] = 9;
        assert!(matches!(
            Checkpoint::from_bytes(&wrong_version),
            Err(CheckpointError::UnsupportedVersion(9))
        ));
        let mut extra = bytes;
        extra.push(0);
        assert!(Checkpoint::from_bytes(&extra).is_err());
    }
}
