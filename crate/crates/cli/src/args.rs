//! Flag definitions. Every subcommand's flags can also come from a TOML file
//! passed with `--config`, one table per subcommand; flags given on the
//! command line win.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "utie", version, about = "Text-anchor fusion and demographic bias evaluation for face embeddings")]
pub struct Cli {
    /// TOML file with per-subcommand defaults, e.g. a `[verify]` table.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build face templates (IE, UTIE or IE+PTE) and write them as a new bundle.
    Transform(TransformArgs),
    /// Zero-shot demographic prediction accuracy per group.
    Classify(ClassifyArgs),
    /// Per-group k-fold verification accuracy.
    Verify(VerifyArgs),
    /// Mean, STD and SER from per-group accuracies.
    Report(ReportArgs),
    /// Similarity profile and ambiguity gap against the anchors.
    Diag(DiagArgs),
    /// Write a deterministic synthetic bundle, anchors and pair lists.
    Synth(SynthArgs),
    /// Run the built-in regression and oracle checks.
    Selftest(SelftestArgs),
}

/// Fills unset fields from a lower-priority source.
pub trait Merge {
    fn merge(&mut self, other: Self);
}

impl<T> Merge for Option<T> {
    fn merge(&mut self, other: Self) {
        if self.is_none() {
            *self = other;
        }
    }
}

impl<T> Merge for Vec<T> {
    fn merge(&mut self, other: Self) {
        if self.is_empty() {
            *self = other;
        }
    }
}

impl Merge for bool {
    fn merge(&mut self, other: Self) {
        *self |= other;
    }
}

macro_rules! mergeable {
    ($ty:ident { $($field:ident),* $(,)? }) => {
        impl Merge for $ty {
            fn merge(&mut self, other: Self) {
                $( self.$field.merge(other.$field); )*
            }
        }
    };
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct TransformArgs {
    #[arg(long, value_name = "DIR")]
    pub bundle: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub anchors: Option<PathBuf>,
    /// ie, utie or ie_pte [default: ie]
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Fuse raw vectors instead of unit-normalizing image and text first.
    #[arg(long)]
    pub no_normalize: bool,
}
mergeable!(TransformArgs { bundle, anchors, mode, out, no_normalize });

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ClassifyArgs {
    #[arg(long, value_name = "DIR")]
    pub bundle: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub anchors: Option<PathBuf>,
    /// Report path; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Also write one JSON line per sample with its similarities.
    #[arg(long, value_name = "FILE")]
    pub predictions: Option<PathBuf>,
}
mergeable!(ClassifyArgs { bundle, anchors, out, predictions });

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct VerifyArgs {
    #[arg(long, value_name = "DIR")]
    pub bundle: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub anchors: Option<PathBuf>,
    /// `PATH` (split by the group of `id_a`) or `GROUP=PATH`; repeatable.
    #[arg(long, value_name = "SPEC")]
    pub pairs: Vec<String>,
    /// ie, utie or ie_pte [default: ie]
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}
mergeable!(VerifyArgs { bundle, anchors, pairs, mode, no_normalize, out });

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Markdown,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ReportArgs {
    /// `GROUP=ACCURACY` in percent; repeatable.
    #[arg(long, value_name = "GROUP=VALUE")]
    pub acc: Vec<String>,
    /// JSON written by `verify`; repeatable, one table row each.
    #[arg(long, value_name = "FILE", conflicts_with = "acc")]
    pub from: Vec<PathBuf>,
    #[arg(long)]
    pub approach: Option<String>,
    /// Embedding column for `--acc` rows; `--from` rows use the file's mode.
    #[arg(long)]
    pub embedding: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Also write the Markdown table here.
    #[arg(long, value_name = "FILE")]
    pub markdown: Option<PathBuf>,
    /// What goes to stdout [default: json]
    #[arg(long, value_enum)]
    pub format: Option<ReportFormat>,
}
mergeable!(ReportArgs { acc, from, approach, embedding, out, markdown, format });

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct DiagArgs {
    #[arg(long, value_name = "DIR")]
    pub bundle: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub anchors: Option<PathBuf>,
    /// ie, utie or ie_pte [default: ie]
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub no_normalize: bool,
    /// Similarity profile CSV.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Ambiguity gap JSON.
    #[arg(long, value_name = "FILE")]
    pub gap: Option<PathBuf>,
}
mergeable!(DiagArgs { bundle, anchors, mode, no_normalize, out, gap });

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SynthArgs {
    #[arg(long)]
    pub groups: Option<usize>,
    #[arg(long)]
    pub ids: Option<usize>,
    #[arg(long)]
    pub per_id: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub group_strength: Option<f64>,
    #[arg(long)]
    pub id_strength: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
    /// Per-group multipliers on `--noise`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub noise_scales: Vec<f64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}
mergeable!(SynthArgs { groups, ids, per_id, dim, seed, group_strength, id_strength, noise, noise_scales, out });

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SelftestArgs {
    /// Print the report as JSON instead of one line per check.
    #[arg(long)]
    pub json: bool,
    #[arg(long, hide = true)]
    pub population_std: bool,
}
mergeable!(SelftestArgs { json, population_std });

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    transform: Option<TransformArgs>,
    classify: Option<ClassifyArgs>,
    verify: Option<VerifyArgs>,
    report: Option<ReportArgs>,
    diag: Option<DiagArgs>,
    synth: Option<SynthArgs>,
    selftest: Option<SelftestArgs>,
}

fn read_config(path: &Path) -> CliResult<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_owned(),
        message: e.message().to_owned(),
    })
}

impl Command {
    /// Applies the matching table of the config file under the parsed flags.
    pub fn with_config(mut self, path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(self);
        };
        let file = read_config(path)?;
        fn apply<T: Merge>(args: &mut T, table: Option<T>) {
            if let Some(t) = table {
                args.merge(t);
            }
        }
        match &mut self {
            Command::Transform(a) => apply(a, file.transform),
            Command::Classify(a) => apply(a, file.classify),
            Command::Verify(a) => apply(a, file.verify),
            Command::Report(a) => apply(a, file.report),
            Command::Diag(a) => apply(a, file.diag),
            Command::Synth(a) => apply(a, file.synth),
            Command::Selftest(a) => apply(a, file.selftest),
        }
        Ok(self)
    }
}

pub fn required<'a, T>(value: &'a Option<T>, flag: &str) -> CliResult<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("missing required --{flag}")))
}
