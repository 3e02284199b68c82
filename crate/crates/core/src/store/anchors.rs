use std::collections::HashSet;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::npy;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::vecmath;

pub const ANCHORS_FILE: &str = "anchors.npy";
pub const ANCHORS_META_FILE: &str = "anchors.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AnchorMeta {
    labels: Vec<String>,
    prompt_template: String,
    model_id: String,
}

/// Labeled text anchors, one per demographic class, in classification order.
#[derive(Debug, Clone)]
pub struct AnchorSet {
    anchors: Matrix,
    labels: Vec<String>,
    prompt_template: String,
    model_id: String,
    unit: Vec<Vec<f64>>,
}

impl AnchorSet {
    pub fn new(
        anchors: Matrix,
        labels: Vec<String>,
        prompt_template: impl Into<String>,
        model_id: impl Into<String>,
    ) -> Result<Self> {
        if labels.len() != anchors.rows() {
            return Err(Error::LabelCountMismatch {
                labels: labels.len(),
                rows: anchors.rows(),
            });
        }
        if anchors.rows() < 2 {
            return Err(Error::DegenerateAnchorSet(anchors.rows()));
        }
        if anchors.cols() == 0 {
            return Err(Error::EmptyMatrix {
                rows: anchors.rows(),
                cols: 0,
            });
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        let unit = anchors
            .iter_rows()
            .zip(&labels)
            .map(|(row, label)| vecmath::normalize_f64(row).map_err(|e| e.in_sample(label)))
            .collect::<Result<_>>()?;
        Ok(AnchorSet {
            anchors,
            labels,
            prompt_template: prompt_template.into(),
            model_id: model_id.into(),
            unit,
        })
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let anchors = npy::read_matrix(dir.join(ANCHORS_FILE))?;
        let meta_path = dir.join(ANCHORS_META_FILE);
        let file = File::open(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: AnchorMeta =
            serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Parse {
                what: "anchors.json",
                line: e.line(),
                message: e.to_string(),
            })?;
        Self::new(anchors, meta.labels, meta.prompt_template, meta.model_id)
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        npy::write_matrix(&self.anchors, dir.join(ANCHORS_FILE))?;
        let meta = AnchorMeta {
            labels: self.labels.clone(),
            prompt_template: self.prompt_template.clone(),
            model_id: self.model_id.clone(),
        };
        let path = dir.join(ANCHORS_META_FILE);
        let text = serde_json::to_string_pretty(&meta).expect("meta serializes");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.anchors.cols()
    }

    pub fn anchors(&self) -> &Matrix {
        &self.anchors
    }

    pub fn anchor(&self, i: usize) -> &[f32] {
        self.anchors.row(i)
    }

    /// Unit-normalized anchor `i` in `f64`.
    pub fn unit_anchor(&self, i: usize) -> &[f64] {
        &self.unit[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn prompt_template(&self) -> &str {
        &self.prompt_template
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }
}
