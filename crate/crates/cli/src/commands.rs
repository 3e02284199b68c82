use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use utie_core::bias::{self, BiasReport, ReportRow};
use utie_core::fusion::{self, FusionOptions, TransformMode};
use utie_core::selftest::{self, SelftestOptions, StdDivisor};
use utie_core::store::{self, AnchorSet, EmbeddingBundle, PairSet};
use utie_core::synth::{self, SynthConfig};
use utie_core::verification::{self, GroupAccuracy};
use utie_core::{diagnostics, zero_shot, Error};

use crate::args::{
    required, ClassifyArgs, DiagArgs, ReportArgs, ReportFormat, SelftestArgs, SynthArgs, TransformArgs, VerifyArgs,
};
use crate::error::{CliError, CliResult};

fn parse_mode(mode: &Option<String>) -> CliResult<TransformMode> {
    Ok(mode.as_deref().unwrap_or("ie").parse()?)
}

fn fusion_options(no_normalize: bool) -> FusionOptions {
    if no_normalize {
        FusionOptions::raw()
    } else {
        FusionOptions::default()
    }
}

/// Anchors for `mode`, failing before any file is touched if they are needed
/// and missing.
fn mode_anchors(mode: TransformMode, path: &Option<PathBuf>) -> CliResult<Option<AnchorSet>> {
    match path {
        Some(p) => Ok(Some(store::load_anchors(p)?)),
        None if mode.needs_anchors() => Err(Error::AnchorsRequired(mode.as_str()).into()),
        None => Ok(None),
    }
}

/// Pretty JSON to `out`, or to stdout when `out` is `None`.
fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    match out {
        Some(path) => fs::write(path, text + "\n").map_err(|e| CliError::io(path, e)),
        None => print_stdout(&(text + "\n")),
    }
}

/// A closed pipe on stdout is not an error.
fn print_stdout(text: &str) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

pub fn transform(args: &TransformArgs) -> CliResult<()> {
    let mode = parse_mode(&args.mode)?;
    if mode.needs_anchors() && args.anchors.is_none() {
        return Err(Error::AnchorsRequired(mode.as_str()).into());
    }
    let input = required(&args.bundle, "bundle")?;
    let out = required(&args.out, "out")?;
    if same_dir(input, out) || args.anchors.as_deref().is_some_and(|a| same_dir(a, out)) {
        return Err(CliError::Usage(format!(
            "--out {} would overwrite an input directory",
            out.display()
        )));
    }
    let bundle = store::load_bundle(input)?;
    let anchors = mode_anchors(mode, &args.anchors)?;
    let opts = fusion_options(args.no_normalize);
    let transformed = fusion::transform_bundle(&bundle, anchors.as_ref(), mode, opts)?;
    transformed.write(out)?;
    log::info!("wrote {} {mode} templates to {}", transformed.len(), out.display());
    emit_json(
        &json!({
            "mode": mode,
            "normalize": opts.normalize,
            "samples": transformed.len(),
            "dim": transformed.dim(),
            "out": out,
        }),
        None,
    )
}

#[derive(Serialize)]
struct SamplePrediction<'a> {
    id: &'a str,
    group: &'a str,
    predicted: &'a str,
    similarities: Vec<f64>,
}

pub fn classify(args: &ClassifyArgs) -> CliResult<()> {
    let bundle = store::load_bundle(required(&args.bundle, "bundle")?)?;
    let anchors = store::load_anchors(required(&args.anchors, "anchors")?)?;
    let report = zero_shot::zero_shot_accuracy(&bundle, &anchors)?;
    if let Some(path) = &args.predictions {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = BufWriter::new(file);
        for rec in bundle.records() {
            let p = zero_shot::predict(bundle.embedding(rec), &anchors)?;
            let line = SamplePrediction {
                id: &rec.id,
                group: &rec.group,
                predicted: &anchors.labels()[p.predicted_index],
                similarities: p.similarities,
            };
            writeln!(w, "{}", serde_json::to_string(&line).expect("serializes")).map_err(|e| CliError::io(path, e))?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    emit_json(&report, args.out.as_deref())
}

/// `GROUP=PATH` or a bare path. A bare path that exists wins over the split.
fn parse_pair_spec(spec: &str) -> (Option<&str>, &Path) {
    if let Some((group, path)) = spec.split_once('=') {
        let plausible = !group.is_empty() && !group.contains(['/', '\\']);
        if plausible && !Path::new(spec).exists() {
            return (Some(group), Path::new(path));
        }
    }
    (None, Path::new(spec))
}

fn pairs_by_group(specs: &[String], bundle: &EmbeddingBundle) -> CliResult<BTreeMap<String, PairSet>> {
    if specs.is_empty() {
        return Err(CliError::Usage("missing required --pairs".into()));
    }
    let mut out: BTreeMap<String, PairSet> = BTreeMap::new();
    let mut insert = |group: String, set: PairSet| {
        if out.insert(group.clone(), set).is_some() {
            return Err(CliError::Usage(format!("pairs for group {group:?} given twice")));
        }
        Ok(())
    };
    for spec in specs {
        let (group, path) = parse_pair_spec(spec);
        let set = store::load_pairs(path, bundle)?;
        if let Some(g) = group {
            insert(g.to_owned(), set)?;
            continue;
        }
        let mut split: BTreeMap<String, Vec<store::Pair>> = BTreeMap::new();
        for p in set.pairs() {
            let group = &bundle.record(&p.id_a).expect("ids checked on load").group;
            if bundle.record(&p.id_b).is_some_and(|r| &r.group != group) {
                log::warn!("cross-group pair {}/{} counted under {group}", p.id_a, p.id_b);
            }
            split.entry(group.clone()).or_default().push(p.clone());
        }
        for (g, pairs) in split {
            insert(g, PairSet::new(pairs)?)?;
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct VerifyReport {
    mode: TransformMode,
    normalize: bool,
    groups: Vec<GroupAccuracy>,
}

#[derive(Deserialize)]
struct VerifyFile {
    mode: TransformMode,
    groups: Vec<VerifyGroup>,
}

#[derive(Deserialize)]
struct VerifyGroup {
    group: String,
    accuracy: f64,
}

pub fn verify(args: &VerifyArgs) -> CliResult<()> {
    let mode = parse_mode(&args.mode)?;
    if mode.needs_anchors() && args.anchors.is_none() {
        return Err(Error::AnchorsRequired(mode.as_str()).into());
    }
    let bundle = store::load_bundle(required(&args.bundle, "bundle")?)?;
    let anchors = mode_anchors(mode, &args.anchors)?;
    let pairs = pairs_by_group(&args.pairs, &bundle)?;
    let opts = fusion_options(args.no_normalize);
    let groups = verification::evaluate_groups(&bundle, anchors.as_ref(), &pairs, mode, opts)?;
    for g in &groups {
        log::info!("{} {}: {:.2}% over {} pairs", mode, g.group, g.accuracy, g.pair_count);
    }
    emit_json(
        &VerifyReport {
            mode,
            normalize: opts.normalize,
            groups,
        },
        args.out.as_deref(),
    )
}

fn parse_acc(specs: &[String]) -> CliResult<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for spec in specs {
        let (group, value) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--acc {spec:?} is not GROUP=VALUE")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("--acc {spec:?}: {value:?} is not a number")))?;
        if out.insert(group.trim().to_owned(), value).is_some() {
            return Err(CliError::Usage(format!("--acc given twice for {group:?}")));
        }
    }
    Ok(out)
}

fn read_verify_file(path: &Path) -> CliResult<VerifyFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

#[derive(Serialize)]
struct RowJson<'a> {
    approach: &'a str,
    embedding: &'a str,
    #[serde(flatten)]
    report: &'a BiasReport,
}

pub fn report(args: &ReportArgs) -> CliResult<()> {
    let approach = args.approach.clone().unwrap_or_else(|| "-".into());
    let mut rows = Vec::new();
    if !args.acc.is_empty() {
        rows.push(ReportRow {
            approach: approach.clone(),
            embedding: args.embedding.clone().unwrap_or_else(|| "-".into()),
            report: bias::bias_report(&parse_acc(&args.acc)?)?,
        });
    }
    for path in &args.from {
        let file = read_verify_file(path)?;
        let per_group = file.groups.into_iter().map(|g| (g.group, g.accuracy)).collect();
        rows.push(ReportRow {
            approach: approach.clone(),
            embedding: file.mode.display_name().to_owned(),
            report: bias::bias_report(&per_group)?,
        });
    }
    if rows.is_empty() {
        return Err(CliError::Usage("report needs --acc or --from".into()));
    }

    let table = bias::markdown_table(&rows);
    if let Some(path) = &args.markdown {
        fs::write(path, &table).map_err(|e| CliError::io(path, e))?;
    }
    let json_rows: Vec<RowJson> = rows
        .iter()
        .map(|r| RowJson {
            approach: &r.approach,
            embedding: &r.embedding,
            report: &r.report,
        })
        .collect();
    // one row reports as an object, several as an array
    let value = match json_rows.as_slice() {
        [one] => serde_json::to_value(one),
        many => serde_json::to_value(many),
    }
    .expect("rows serialize");
    if let Some(path) = &args.out {
        emit_json(&value, Some(path))?;
    }
    match args.format.unwrap_or(ReportFormat::Json) {
        ReportFormat::Markdown => print_stdout(&table)?,
        ReportFormat::Json if args.out.is_none() => emit_json(&value, None)?,
        ReportFormat::Json => {}
    }
    Ok(())
}

pub fn diag(args: &DiagArgs) -> CliResult<()> {
    let mode = parse_mode(&args.mode)?;
    let bundle = store::load_bundle(required(&args.bundle, "bundle")?)?;
    let anchors = store::load_anchors(required(&args.anchors, "anchors")?)?;
    let out = required(&args.out, "out")?;
    let opts = fusion_options(args.no_normalize);
    let profile = diagnostics::similarity_profile(&bundle, &anchors, mode, opts)?;
    diagnostics::emit_profile_csv(&profile, out)?;
    let gap = diagnostics::ambiguity_gap(&bundle, &anchors, mode, opts)?;
    if let Some(path) = &args.gap {
        emit_json(&gap, Some(path))?;
    }
    emit_json(&json!({ "profile": profile, "gap": gap }), None)
}

pub fn synth(args: &SynthArgs) -> CliResult<()> {
    let out = required(&args.out, "out")?;
    let d = SynthConfig::default();
    let config = SynthConfig {
        n_groups: args.groups.unwrap_or(d.n_groups),
        ids_per_group: args.ids.unwrap_or(d.ids_per_group),
        images_per_id: args.per_id.unwrap_or(d.images_per_id),
        dim: args.dim.unwrap_or(d.dim),
        seed: args.seed.unwrap_or(d.seed),
        group_strength: args.group_strength.unwrap_or(d.group_strength),
        identity_strength: args.id_strength.unwrap_or(d.identity_strength),
        noise_sigma: args.noise.unwrap_or(d.noise_sigma),
        noise_scales: args.noise_scales.clone(),
    };
    let data = synth::generate(&config)?;
    data.write(out)?;
    let pair_files: Vec<String> = data.pairs.keys().map(|g| format!("pairs_{g}.csv")).collect();
    emit_json(
        &json!({
            "seed": config.seed,
            "samples": data.bundle.len(),
            "dim": data.bundle.dim(),
            "groups": data.pairs.keys().collect::<Vec<_>>(),
            "pair_counts": data.pairs.values().map(PairSet::len).collect::<Vec<_>>(),
            "pair_files": pair_files,
            "out": out,
        }),
        None,
    )
}

/// Returns the process exit code: 0 when every check passes.
pub fn selftest(args: &SelftestArgs) -> CliResult<i32> {
    let options = SelftestOptions {
        std_divisor: if args.population_std {
            StdDivisor::Population
        } else {
            StdDivisor::Sample
        },
    };
    let report = selftest::run(&options);
    if args.json {
        emit_json(&report, None)?;
    } else {
        let mut text: String = report.checks.iter().map(|c| format!("{c}\n")).collect();
        let failed = report.failures().count();
        text.push_str(&format!("{} checks, {failed} failed\n", report.checks.len()));
        print_stdout(&text)?;
    }
    Ok(if report.all_passed() { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_specs() {
        assert_eq!(parse_pair_spec("Asian=p.csv"), (Some("Asian"), Path::new("p.csv")));
        assert_eq!(parse_pair_spec("dir/p.csv"), (None, Path::new("dir/p.csv")));
        assert_eq!(parse_pair_spec("dir/a=b.csv"), (None, Path::new("dir/a=b.csv")));
        assert_eq!(parse_pair_spec("=p.csv"), (None, Path::new("=p.csv")));
    }

    #[test]
    fn acc_specs() {
        let m = parse_acc(&["a=1.5".into(), " b = 2 ".into()]).unwrap();
        assert_eq!(m["a"], 1.5);
        assert_eq!(m["b"], 2.0);
        assert!(parse_acc(&["a=1".into(), "a=2".into()]).is_err());
        assert!(parse_acc(&["a=x".into()]).is_err());
    }
}
