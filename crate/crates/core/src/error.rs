use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report.
///
/// Variants split into two families: format/I-O problems (a file could not be
/// read, parsed or written) and domain problems (the data parsed fine but
/// violates a contract). [`Error::is_format`] tells them apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed npy header: {0}")]
    MalformedHeader(String),

    #[error("unsupported npy descriptor: {0}")]
    UnsupportedDescriptor(String),

    #[error("expected a 2-dimensional array, got shape {0:?}")]
    ShapeError(Vec<usize>),

    #[error("npy payload truncated: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("malformed {what} at line {line}: {message}")]
    Parse {
        what: &'static str,
        line: usize,
        message: String,
    },

    #[error("matrix is empty ({rows}x{cols})")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),

    #[error("manifest row {row} of sample {id:?} is outside a {rows}-row matrix")]
    RowOutOfRange { id: String, row: i64, rows: usize },

    #[error("matrix row {0} is claimed by more than one record")]
    DuplicateRow(usize),

    #[error("matrix row {0} has no manifest record")]
    RowUncovered(usize),

    #[error("manifest record has an empty {field} (line {line})")]
    EmptyField { field: &'static str, line: usize },

    #[error("embedding norm {norm:e} is below 1e-12")]
    ZeroNormEmbedding { norm: f64 },

    #[error("vector contains a non-finite component at index {0}")]
    NonFiniteInput(usize),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("empty set of vectors")]
    EmptySet,

    #[error("{labels} labels for {rows} anchor rows")]
    LabelCountMismatch { labels: usize, rows: usize },

    #[error("duplicate anchor label {0:?}")]
    DuplicateLabel(String),

    #[error("anchor set needs at least 2 anchors, got {0}")]
    DegenerateAnchorSet(usize),

    #[error("pair {index} references unknown id {id:?}")]
    DanglingPairId { index: usize, id: String },

    #[error("pair {index} compares {id:?} with itself")]
    SelfPair { index: usize, id: String },

    #[error("pair label {label:?} at line {line} is not 0 or 1")]
    BadLabel { line: usize, label: String },

    #[error("fold column is present on some pairs but not others")]
    MixedFoldPresence,

    #[error("fold values must cover 0..{expected} without gaps, found {found:?}")]
    NonContiguousFolds { expected: usize, found: Vec<usize> },

    #[error("prompt template has no {{label}} placeholder")]
    MissingPlaceholder,

    #[error("prompt template has {0} {{label}} placeholders, expected exactly one")]
    MultiplePlaceholders(usize),

    #[error("group {0:?} is not one of the anchor labels")]
    UnknownGroupLabel(String),

    #[error("index {index} out of range for {len} anchors")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("anchors required for mode {0}")]
    AnchorsRequired(&'static str),

    #[error("unknown transform mode {0:?} (expected ie, utie or ie_pte)")]
    UnknownMode(String),

    #[error("threshold search needs both genuine and impostor pairs")]
    DegenerateLabels,

    #[error("fold {fold} is unusable: {reason}")]
    FoldTooSmall { fold: usize, reason: String },

    #[error("no accuracies given")]
    EmptyInput,

    #[error("need at least two groups, got {0}")]
    NeedTwoGroups(usize),

    #[error("group {0:?} has 100% accuracy, skewed error ratio is undefined")]
    PerfectGroup(String),

    #[error("accuracy {value} for group {group:?} is outside [0, 100]")]
    AccuracyOutOfRange { group: String, value: f64 },

    #[error("invalid synthetic config: {0}")]
    ConfigInvalid(String),

    #[error("sample {id:?}: {source}")]
    Sample {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("pair {index}: {source}")]
    Pair {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_sample(self, id: &str) -> Self {
        Error::Sample {
            id: id.to_owned(),
            source: Box::new(self),
        }
    }

    pub(crate) fn in_pair(self, index: usize) -> Self {
        Error::Pair {
            index,
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping sample/pair context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Sample { source, .. } | Error::Pair { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for I/O and file-format errors, false for contract violations.
    pub fn is_format(&self) -> bool {
        matches!(
            self.root(),
            Error::Io { .. }
                | Error::MalformedHeader(_)
                | Error::UnsupportedDescriptor(_)
                | Error::ShapeError(_)
                | Error::TruncatedPayload { .. }
                | Error::Parse { .. }
        )
    }

    /// Stable identifier for machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::Io { .. } => "IoError",
            Error::MalformedHeader(_) => "MalformedHeader",
            Error::UnsupportedDescriptor(_) => "UnsupportedDescriptor",
            Error::ShapeError(_) => "ShapeError",
            Error::TruncatedPayload { .. } => "TruncatedPayload",
            Error::Parse { .. } => "ParseError",
            Error::EmptyMatrix { .. } => "EmptyMatrix",
            Error::DuplicateId(_) => "DuplicateId",
            Error::RowOutOfRange { .. } => "RowOutOfRange",
            Error::DuplicateRow(_) => "DuplicateRow",
            Error::RowUncovered(_) => "RowUncovered",
            Error::EmptyField { .. } => "EmptyField",
            Error::ZeroNormEmbedding { .. } => "ZeroNormEmbedding",
            Error::NonFiniteInput(_) => "NonFiniteInput",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EmptySet => "EmptySet",
            Error::LabelCountMismatch { .. } => "LabelCountMismatch",
            Error::DuplicateLabel(_) => "DuplicateLabel",
            Error::DegenerateAnchorSet(_) => "DegenerateAnchorSet",
            Error::DanglingPairId { .. } => "DanglingPairId",
            Error::SelfPair { .. } => "SelfPair",
            Error::BadLabel { .. } => "BadLabel",
            Error::MixedFoldPresence => "MixedFoldPresence",
            Error::NonContiguousFolds { .. } => "NonContiguousFolds",
            Error::MissingPlaceholder => "MissingPlaceholder",
            Error::MultiplePlaceholders(_) => "MultiplePlaceholders",
            Error::UnknownGroupLabel(_) => "UnknownGroupLabel",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::AnchorsRequired(_) => "AnchorsRequired",
            Error::UnknownMode(_) => "UnknownMode",
            Error::DegenerateLabels => "DegenerateLabels",
            Error::FoldTooSmall { .. } => "FoldTooSmall",
            Error::EmptyInput => "EmptyInput",
            Error::NeedTwoGroups(_) => "NeedTwoGroups",
            Error::PerfectGroup(_) => "PerfectGroup",
            Error::AccuracyOutOfRange { .. } => "AccuracyOutOfRange",
            Error::ConfigInvalid(_) => "ConfigInvalid",
            Error::Sample { .. } | Error::Pair { .. } => unreachable!("root() unwraps context"),
        }
    }
}
