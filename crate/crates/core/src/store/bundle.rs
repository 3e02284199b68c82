use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::npy;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::vecmath;

pub const EMBEDDINGS_FILE: &str = "embeddings.npy";
pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// One manifest line: which matrix row holds which sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub row: usize,
    pub identity: String,
    pub group: String,
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    row: i64,
    identity: String,
    group: String,
}

/// Sample embeddings plus their manifest, validated as a unit.
#[derive(Debug, Clone)]
pub struct EmbeddingBundle {
    embeddings: Matrix,
    records: Vec<ManifestRecord>,
    by_id: HashMap<String, usize>,
}

impl EmbeddingBundle {
    /// Validates and assembles a bundle.
    ///
    /// Rows must be covered exactly once, ids must be unique and non-empty,
    /// groups non-empty, and every row must have a usable norm.
    pub fn new(embeddings: Matrix, records: Vec<ManifestRecord>) -> Result<Self> {
        if embeddings.is_empty() {
            return Err(Error::EmptyMatrix {
                rows: embeddings.rows(),
                cols: embeddings.cols(),
            });
        }
        let rows = embeddings.rows();
        let mut by_id = HashMap::with_capacity(records.len());
        let mut seen_row = vec![false; rows];
        for (i, rec) in records.iter().enumerate() {
            if rec.id.is_empty() {
                return Err(Error::EmptyField { field: "id", line: i + 1 });
            }
            if rec.group.is_empty() {
                return Err(Error::EmptyField { field: "group", line: i + 1 });
            }
            if by_id.insert(rec.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(rec.id.clone()));
            }
            if rec.row >= rows {
                return Err(Error::RowOutOfRange {
                    id: rec.id.clone(),
                    row: rec.row as i64,
                    rows,
                });
            }
            if std::mem::replace(&mut seen_row[rec.row], true) {
                return Err(Error::DuplicateRow(rec.row));
            }
        }
        if let Some(row) = seen_row.iter().position(|&s| !s) {
            return Err(Error::RowUncovered(row));
        }
        for rec in &records {
            let norm = vecmath::l2_norm(embeddings.row(rec.row)).map_err(|e| e.in_sample(&rec.id))?;
            if norm < vecmath::MIN_NORM {
                return Err(Error::ZeroNormEmbedding { norm }.in_sample(&rec.id));
            }
        }
        Ok(EmbeddingBundle {
            embeddings,
            records,
            by_id,
        })
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let embeddings = npy::read_matrix(dir.join(EMBEDDINGS_FILE))?;
        let records = read_manifest(&dir.join(MANIFEST_FILE), embeddings.rows())?;
        Self::new(embeddings, records)
    }

    /// Writes `embeddings.npy` and `manifest.jsonl` into `dir`, creating it.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        npy::write_matrix(&self.embeddings, dir.join(EMBEDDINGS_FILE))?;
        let path = dir.join(MANIFEST_FILE);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        for rec in &self.records {
            let line = serde_json::to_string(rec).expect("record serializes");
            writeln!(out, "{line}").map_err(|e| Error::io(&path, e))?;
        }
        out.flush().map_err(|e| Error::io(&path, e))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.cols()
    }

    pub fn embeddings(&self) -> &Matrix {
        &self.embeddings
    }

    /// Manifest records in file order.
    pub fn records(&self) -> &[ManifestRecord] {
        &self.records
    }

    pub fn record(&self, id: &str) -> Option<&ManifestRecord> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    pub fn embedding_of(&self, id: &str) -> Option<&[f32]> {
        self.record(id).map(|r| self.embeddings.row(r.row))
    }

    pub fn embedding(&self, record: &ManifestRecord) -> &[f32] {
        self.embeddings.row(record.row)
    }

    /// Distinct groups, sorted.
    pub fn groups(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.group.as_str()).collect()
    }

    /// Same manifest, new matrix. The replacement is fully revalidated.
    pub fn with_embeddings(&self, embeddings: Matrix) -> Result<Self> {
        Self::new(embeddings, self.records.clone())
    }
}

fn read_manifest(path: &Path, rows: usize) -> Result<Vec<ManifestRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            what: "manifest",
            line: i + 1,
            message: e.to_string(),
        })?;
        if raw.row < 0 || raw.row as u64 >= rows as u64 {
            return Err(Error::RowOutOfRange {
                id: raw.id,
                row: raw.row,
                rows,
            });
        }
        records.push(ManifestRecord {
            id: raw.id,
            row: raw.row as usize,
            identity: raw.identity,
            group: raw.group,
        });
    }
    Ok(records)
}
