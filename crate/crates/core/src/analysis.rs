//! Relation-space neighbours and embedding export.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::data::Vocabulary;
use crate::error::{Error, Result};
use crate::params::{ModelParams, RelationParams};

/// Distance used between two relation blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelationDistanceKind {
    /// Vector parameters (translation vectors, diagonals).
    Euclidean,
    /// Matrix parameters; multi-part blocks use the norm over all parts.
    Frobenius,
}

pub fn distance_kind(params: &ModelParams) -> RelationDistanceKind {
    match params.relation(0) {
        RelationParams::TranslationVector { .. } | RelationParams::DiagonalBilinear { .. } => {
            RelationDistanceKind::Euclidean
        }
        _ => RelationDistanceKind::Frobenius,
    }
}

/// Norm of the difference of two relation blocks.
///
/// The Euclidean and Frobenius norms coincide on the flat storage, so one
/// formula serves every parameter family. Panics on an unknown relation.
pub fn relation_distance(params: &ModelParams, r1: usize, r2: usize) -> f64 {
    params
        .relation_flat(r1)
        .iter()
        .zip(params.relation_flat(r2))
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// The `k` relations closest to `r`, ascending, ties by id.
pub fn nearest_relations(params: &ModelParams, r: usize, k: usize) -> Result<Vec<(usize, f64)>> {
    let nr = params.num_relations();
    if r >= nr {
        return Err(Error::Config(format!("relation id {r} out of range")));
    }
    if k == 0 || k >= nr {
        return Err(Error::Config(format!(
            "k must be in 1..{} for {nr} relations, got {k}",
            nr.max(1) - 1
        )));
    }
    let mut all: Vec<(usize, f64)> = (0..nr)
        .filter(|&other| other != r)
        .map(|other| (other, relation_distance(params, r, other)))
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    Ok(all)
}

/// [`nearest_relations`] with names.
pub fn nearest_relations_named(
    params: &ModelParams,
    vocab: &Vocabulary,
    r: usize,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    Ok(nearest_relations(params, r, k)?
        .into_iter()
        .map(|(id, d)| (vocab.relations.name(id).to_owned(), d))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportTarget {
    Entities,
    Relations,
}

/// Writes a TSV with a header row, then one row per item: the name and the
/// flattened parameters (entity rows as stored, relation blocks in storage
/// order). Values use 17 significant digits so they parse back exactly.
pub fn export_embeddings(params: &ModelParams, vocab: &Vocabulary, what: ExportTarget, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    let (table, names) = match what {
        ExportTarget::Entities => (params.entities(), &vocab.entities),
        ExportTarget::Relations => (params.relation_table(), &vocab.relations),
    };
    if names.len() != table.nrows() {
        return Err(Error::Config("vocabulary does not match the parameter table".into()));
    }
    write!(out, "name").map_err(io)?;
    for j in 0..table.ncols() {
        write!(out, "\tv{j}").map_err(io)?;
    }
    writeln!(out).map_err(io)?;
    for (i, row) in table.rows().into_iter().enumerate() {
        write!(out, "{}", names.name(i)).map_err(io)?;
        for x in row {
            write!(out, "\t{x:.16e}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Reads a file written by [`export_embeddings`].
pub fn read_exported(path: impl AsRef<Path>) -> Result<Vec<(String, Vec<f64>)>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate().skip(1) {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut fields = line.split('\t');
        let name = fields.next().unwrap_or_default().to_owned();
        let values = fields
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_owned(),
                    line: idx + 1,
                    message: format!("`{f}` is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((name, values));
    }
    Ok(rows)
}
