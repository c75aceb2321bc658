//! Checkpoint files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! RELEMBED-CHECKPOINT\n             magic line
//! {json header}\n                   format version, model kind, hyperparameters
//!                                   (including the seed), vocabulary fingerprint,
//!                                   shapes, epochs completed
//! u64                               number of f64 values that follow
//! f64 * count                       entity table (row-major), relation blocks
//!                                   (one row per relation, layout of
//!                                   `RelationParams`), entity AdaGrad
//!                                   accumulator, relation AdaGrad accumulator
//! [u8; 32]                          SHA-256 of the f64 payload bytes
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Vocabulary;
use crate::error::{Error, Result};
use crate::params::{Hyperparams, ModelParams};
use crate::scoring::ModelKind;

const MAGIC: &str = "RELEMBED-CHECKPOINT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub model_kind: ModelKind,
    pub hyperparams: Hyperparams,
    pub vocabulary_fingerprint: String,
    pub num_entities: usize,
    pub num_relations: usize,
    pub relation_param_count: usize,
    pub epochs_completed: usize,
}

/// A loaded checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: ModelParams,
}

impl Checkpoint {
    /// Fails unless the checkpoint was written for `vocab`.
    pub fn require_vocabulary(&self, vocab: &Vocabulary) -> Result<()> {
        let actual = vocab.fingerprint();
        if actual != self.header.vocabulary_fingerprint {
            return Err(Error::checkpoint(
                "vocabulary_fingerprint",
                format!(
                    "checkpoint expects {} but the dataset vocabulary is {actual}",
                    self.header.vocabulary_fingerprint
                ),
            ));
        }
        Ok(())
    }
}

pub fn save_checkpoint(
    params: &ModelParams,
    vocab: &Vocabulary,
    epochs_completed: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    if vocab.num_entities() != params.num_entities() || vocab.num_relations() != params.num_relations() {
        return Err(Error::checkpoint(
            "vocabulary_fingerprint",
            "vocabulary size does not match the parameter tables",
        ));
    }
    let header = CheckpointHeader {
        format_version: FORMAT_VERSION,
        model_kind: params.kind(),
        hyperparams: params.hyper().clone(),
        vocabulary_fingerprint: vocab.fingerprint(),
        num_entities: params.num_entities(),
        num_relations: params.num_relations(),
        relation_param_count: params.relation_table().ncols(),
        epochs_completed,
    };
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(out, "{MAGIC}").map_err(io)?;
    let json = serde_json::to_string(&header).expect("header serializes");
    writeln!(out, "{json}").map_err(io)?;

    let blocks = [
        params.entities(),
        params.relation_table(),
        params.entity_accumulator(),
        params.relation_accumulator(),
    ];
    let count: usize = blocks.iter().map(|b| b.len()).sum();
    out.write_all(&(count as u64).to_le_bytes()).map_err(io)?;
    let mut hasher = Sha256::new();
    for block in blocks {
        for x in block.iter() {
            let bytes = x.to_le_bytes();
            hasher.update(bytes);
            out.write_all(&bytes).map_err(io)?;
        }
    }
    out.write_all(&hasher.finalize()).map_err(io)?;
    out.flush().map_err(io)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut input = BufReader::new(File::open(path).map_err(io)?);

    let mut line = String::new();
    input.read_line(&mut line).map_err(io)?;
    if line.trim_end() != MAGIC {
        return Err(Error::checkpoint("magic", "not a checkpoint file"));
    }
    line.clear();
    input.read_line(&mut line).map_err(io)?;
    let value: serde_json::Value = serde_json::from_str(line.trim_end())
        .map_err(|e| Error::checkpoint("header", format!("unreadable header: {e}")))?;
    let version = value.get("format_version").and_then(|v| v.as_u64());
    if version != Some(FORMAT_VERSION as u64) {
        return Err(Error::checkpoint(
            "format_version",
            format!("expected {FORMAT_VERSION}, found {version:?}"),
        ));
    }
    let header: CheckpointHeader = serde_json::from_value(value)
        .map_err(|e| Error::checkpoint("header", format!("invalid header: {e}")))?;
    header
        .hyperparams
        .validate()
        .map_err(|e| Error::checkpoint("hyperparams", e.to_string()))?;
    let n = header.hyperparams.entity_dim;
    let expected_p = header.model_kind.relation_param_count(n);
    if header.relation_param_count != expected_p {
        return Err(Error::checkpoint(
            "relation_param_count",
            format!("{} for {} at dimension {n}, found {}", expected_p, header.model_kind, header.relation_param_count),
        ));
    }

    let truncated = |what: &str| Error::checkpoint("payload", format!("file truncated in {what}"));
    let mut word = [0u8; 8];
    input.read_exact(&mut word).map_err(|_| truncated("value count"))?;
    let count = u64::from_le_bytes(word) as usize;
    let (ne, nr) = (header.num_entities, header.num_relations);
    let expected = 2 * (ne * n + nr * expected_p);
    if count != expected {
        return Err(Error::checkpoint(
            "payload",
            format!("header shapes need {expected} values, file declares {count}"),
        ));
    }
    let mut hasher = Sha256::new();
    let mut read_block = |rows: usize, cols: usize, what: &str| -> Result<Array2<f64>> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            input.read_exact(&mut word).map_err(|_| truncated(what))?;
            hasher.update(word);
            data.push(f64::from_le_bytes(word));
        }
        Ok(Array2::from_shape_vec((rows, cols), data).expect("sizes checked"))
    };
    let entities = read_block(ne, n, "entity table")?;
    let relations = read_block(nr, expected_p, "relation blocks")?;
    let entity_accum = read_block(ne, n, "entity accumulator")?;
    let relation_accum = read_block(nr, expected_p, "relation accumulator")?;
    let mut digest = [0u8; 32];
    input.read_exact(&mut digest).map_err(|_| truncated("checksum"))?;
    if digest[..] != hasher.finalize()[..] {
        return Err(Error::checkpoint("checksum", "payload checksum mismatch"));
    }
    if input.read(&mut [0u8; 1]).map_err(io)? != 0 {
        return Err(Error::checkpoint("payload", "trailing bytes after checksum"));
    }

    let params = ModelParams {
        kind: header.model_kind,
        hyper: header.hyperparams.clone(),
        entities,
        relations,
        entity_accum,
        relation_accum,
    };
    Ok(Checkpoint { header, params })
}

/// Loads a checkpoint and checks it against `vocab`.
pub fn load_checkpoint_for(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<Checkpoint> {
    let ckpt = load_checkpoint(path)?;
    ckpt.require_vocabulary(vocab)?;
    Ok(ckpt)
}
