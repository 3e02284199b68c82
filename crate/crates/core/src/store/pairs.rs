use std::collections::BTreeSet;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bundle::EmbeddingBundle;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairLabel {
    Genuine,
    Impostor,
}

impl PairLabel {
    pub fn is_genuine(self) -> bool {
        self == PairLabel::Genuine
    }

    /// CSV encoding: 1 = genuine, 0 = impostor.
    pub fn code(self) -> u8 {
        match self {
            PairLabel::Genuine => 1,
            PairLabel::Impostor => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pair {
    pub id_a: String,
    pub id_b: String,
    pub label: PairLabel,
    pub fold: Option<usize>,
}

impl Pair {
    pub fn new(id_a: impl Into<String>, id_b: impl Into<String>, label: PairLabel, fold: Option<usize>) -> Self {
        Pair {
            id_a: id_a.into(),
            id_b: id_b.into(),
            label,
            fold,
        }
    }
}

/// Verification pairs; either every pair carries a fold or none does.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairSet {
    pairs: Vec<Pair>,
}

impl PairSet {
    pub fn new(pairs: Vec<Pair>) -> Result<Self> {
        for (index, p) in pairs.iter().enumerate() {
            if p.id_a == p.id_b {
                return Err(Error::SelfPair {
                    index,
                    id: p.id_a.clone(),
                });
            }
        }
        let with_fold = pairs.iter().filter(|p| p.fold.is_some()).count();
        if with_fold != 0 && with_fold != pairs.len() {
            return Err(Error::MixedFoldPresence);
        }
        if with_fold > 0 {
            let folds: BTreeSet<usize> = pairs.iter().filter_map(|p| p.fold).collect();
            let k = folds.len();
            if folds.iter().copied().ne(0..k) {
                return Err(Error::NonContiguousFolds {
                    expected: k,
                    found: folds.into_iter().collect(),
                });
            }
        }
        Ok(PairSet { pairs })
    }

    /// Parses a pairs CSV and checks every id against `bundle`.
    pub fn load(path: impl AsRef<Path>, bundle: &EmbeddingBundle) -> Result<Self> {
        let set = Self::read_csv(path)?;
        set.check_ids(bundle)?;
        Ok(set)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(file);

        let parse_err = |line: usize, message: String| Error::Parse {
            what: "pairs csv",
            line,
            message,
        };
        let header = reader
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        let header: Vec<&str> = header.iter().collect();
        let has_fold_column = match header.as_slice() {
            ["id_a", "id_b", "label"] => false,
            ["id_a", "id_b", "label", "fold"] => true,
            other => {
                return Err(parse_err(
                    1,
                    format!("expected header id_a,id_b,label[,fold], got {}", other.join(",")),
                ))
            }
        };

        let mut pairs = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| parse_err(line, e.to_string()))?;
            let max_fields = if has_fold_column { 4 } else { 3 };
            if row.len() < 3 || row.len() > max_fields {
                return Err(parse_err(line, format!("expected 3 or {max_fields} fields, got {}", row.len())));
            }
            let label = match &row[2] {
                "1" => PairLabel::Genuine,
                "0" => PairLabel::Impostor,
                other => {
                    return Err(Error::BadLabel {
                        line,
                        label: other.to_owned(),
                    })
                }
            };
            let fold = match row.get(3) {
                None | Some("") => None,
                Some(f) => Some(f.parse::<usize>().map_err(|_| parse_err(line, format!("bad fold {f:?}")))?),
            };
            pairs.push(Pair::new(&row[0], &row[1], label, fold));
        }
        Self::new(pairs)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e: csv::Error| Error::io(path, e.into());
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        let folded = self.has_folds();
        if folded {
            w.write_record(["id_a", "id_b", "label", "fold"]).map_err(io)?;
        } else {
            w.write_record(["id_a", "id_b", "label"]).map_err(io)?;
        }
        for p in &self.pairs {
            let label = p.label.code().to_string();
            match p.fold {
                Some(f) if folded => w
                    .write_record([p.id_a.as_str(), &p.id_b, &label, &f.to_string()])
                    .map_err(io)?,
                _ => w.write_record([p.id_a.as_str(), &p.id_b, &label]).map_err(io)?,
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn check_ids(&self, bundle: &EmbeddingBundle) -> Result<()> {
        for (index, p) in self.pairs.iter().enumerate() {
            for id in [&p.id_a, &p.id_b] {
                if bundle.record(id).is_none() {
                    return Err(Error::DanglingPairId {
                        index,
                        id: id.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn has_folds(&self) -> bool {
        self.pairs.first().is_some_and(|p| p.fold.is_some())
    }

    /// Number of folds declared in the file, if any.
    pub fn fold_count(&self) -> Option<usize> {
        self.pairs.iter().filter_map(|p| p.fold).max().map(|m| m + 1)
    }
}

impl IntoIterator for PairSet {
    type Item = Pair;
    type IntoIter = std::vec::IntoIter<Pair>;

    fn into_iter(self) -> Self::IntoIter {
        self.pairs.into_iter()
    }
}
