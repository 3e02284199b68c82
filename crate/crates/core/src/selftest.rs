//! Built-in regression and oracle checks, runnable from the CLI.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::bias;
use crate::diagnostics;
use crate::fusion::{self, FusionOptions, TransformMode};
use crate::matrix::Matrix;
use crate::oracle;
use crate::published::{self, PublishedRow, TOLERANCE};
use crate::store::AnchorSet;
use crate::synth::{self, SynthConfig};
use crate::vecmath::cosine;
use crate::verification::{self, SENTINEL_MARGIN};
use crate::zero_shot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StdDivisor {
    /// `n - 1`, the reporting convention.
    #[default]
    Sample,
    /// `n`; only useful for demonstrating that the regression catches it.
    Population,
}

#[derive(Debug, Clone, Default)]
pub struct SelftestOptions {
    pub std_divisor: StdDivisor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {} ({})", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.0.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }
}

fn table_row(checks: &mut Checks, prefix: &str, row: &PublishedRow, divisor: StdDivisor) {
    let std = match divisor {
        StdDivisor::Sample => bias::std_accuracy(row.accuracies),
        StdDivisor::Population => bias::population_std(row.accuracies),
    };
    let result = bias::mean_accuracy(row.accuracies)
        .and_then(|m| Ok((m, std?, bias::ser(row.accuracies)?)));
    let name = format!("{prefix} {}", row.name());
    match result {
        Ok((mean, std, ser)) => {
            let ok = (mean - row.mean).abs() <= TOLERANCE
                && (std - row.std).abs() <= TOLERANCE
                && (ser - row.ser).abs() <= TOLERANCE;
            checks.push(
                name,
                ok,
                format!(
                    "mean {mean:.4}/{:.2} std {std:.4}/{:.2} ser {ser:.4}/{:.2}",
                    row.mean, row.std, row.ser
                ),
            );
        }
        Err(e) => checks.push(name, false, e.to_string()),
    }
}

fn eye_anchors(n: usize) -> AnchorSet {
    let rows: Vec<Vec<f32>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    AnchorSet::new(
        Matrix::from_rows(&rows).expect("square"),
        (0..n).map(|i| format!("c{i}")).collect(),
        zero_shot::DEFAULT_TEMPLATE,
        "orthonormal",
    )
    .expect("valid anchors")
}

fn fusion_closed_forms(checks: &mut Checks) {
    for n in 2..=8 {
        let anchors = eye_anchors(n);
        let mut worst = 0.0f64;
        let mut star_worst = 0.0f64;
        for hat in 0..n {
            let img = anchors.anchor(hat).to_vec();
            let prime = fusion::utie(&img, &anchors).expect("utie").vector;
            let star = fusion::ie_pte(&img, &anchors).expect("ie_pte").vector;
            for j in 0..n {
                let got = cosine(&prime, anchors.anchor(j)).expect("cosine");
                let want = if j == hat {
                    ((n - 1) as f64 / n as f64).sqrt()
                } else {
                    1.0 / ((n * (n - 1)) as f64).sqrt()
                };
                worst = worst.max((got - want).abs());
            }
            star_worst = star_worst.max((cosine(&star, anchors.anchor(hat)).expect("cosine") - 1.0).abs());
        }
        checks.push(
            format!("fusion closed form N={n}"),
            worst <= 1e-6 && star_worst <= 1e-9,
            format!("max |err| utie {worst:.2e}, ie_pte {star_worst:.2e}"),
        );
    }
}

fn oracle_checks(checks: &mut Checks) -> crate::error::Result<()> {
    let data = synth::generate(&SynthConfig::default())?;
    let (bundle, anchors) = (&data.bundle, &data.anchors);

    let report = zero_shot::zero_shot_accuracy(bundle, anchors)?;
    let naive = oracle::zero_shot_counts(bundle, anchors);
    let same = naive
        .iter()
        .all(|(g, c, t)| report.counts.get(g).is_some_and(|gc| gc.correct == *c && gc.total == *t));
    checks.push("zero-shot vs naive oracle", same, format!("mean {:.2}%", report.mean_accuracy));

    let mut max_diff = 0.0f64;
    for (mode, utie) in [(TransformMode::Utie, true), (TransformMode::IePte, false)] {
        let t = fusion::transform_bundle(bundle, Some(anchors), mode, FusionOptions::default())?;
        for rec in bundle.records() {
            let want = oracle::fuse(bundle.embedding(rec), anchors, utie);
            for (a, b) in t.embedding(rec).iter().zip(&want) {
                max_diff = max_diff.max((a - b).abs() as f64);
            }
        }
    }
    checks.push("transform vs naive oracle", max_diff <= 1e-7, format!("max |diff| {max_diff:.2e}"));

    let group = synth::group_label(0);
    let scored = verification::score_pairs(bundle, &data.pairs[&group])?;
    let fast = verification::best_threshold(&scored.scores, &scored.labels)?;
    let (t, c) = oracle::best_threshold(&scored.scores, &scored.labels, SENTINEL_MARGIN);
    checks.push(
        "best threshold vs naive oracle",
        fast.correct == c && (fast.threshold - t).abs() <= 1e-9,
        format!("threshold {:.6}, accuracy {:.2}%", fast.threshold, fast.accuracy),
    );

    let kf = verification::kfold_accuracy(&scored)?;
    let (acc, ts) = oracle::kfold(&scored.scores, &scored.labels, &scored.folds, SENTINEL_MARGIN);
    let thresholds_match = ts.len() == kf.thresholds.len()
        && ts.iter().zip(&kf.thresholds).all(|(a, b)| (a - b).abs() <= 1e-9);
    checks.push(
        "k-fold vs naive oracle",
        kf.accuracy == acc && thresholds_match,
        format!("{group} accuracy {:.4}%", kf.accuracy),
    );

    let opts = FusionOptions::default();
    let ie = diagnostics::ambiguity_gap(bundle, anchors, TransformMode::Ie, opts)?;
    let utie = diagnostics::ambiguity_gap(bundle, anchors, TransformMode::Utie, opts)?;
    let pte = diagnostics::ambiguity_gap(bundle, anchors, TransformMode::IePte, opts)?;
    let ordered = ie.per_group.iter().all(|(g, &v)| utie.per_group[g] < v && pte.per_group[g] >= v);
    checks.push("ambiguity gap ordering", ordered, describe_gaps(&ie.per_group, &utie.per_group));
    Ok(())
}

fn describe_gaps(ie: &BTreeMap<String, f64>, utie: &BTreeMap<String, f64>) -> String {
    ie.iter()
        .map(|(g, v)| format!("{g} {v:.3}->{:.3}", utie[g]))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Runs every check. Deterministic: two runs produce identical reports.
pub fn run(options: &SelftestOptions) -> SelftestReport {
    let mut checks = Checks(Vec::new());
    for row in &published::RACE_ROWS {
        table_row(&mut checks, "race table", row, options.std_divisor);
    }
    for row in &published::GENDER_ROWS {
        table_row(&mut checks, "gender table", row, options.std_divisor);
    }
    for row in &published::ZERO_SHOT_ROWS {
        let name = format!("zero-shot mean {}/{}", row.approach, row.benchmark);
        match bias::mean_accuracy(row.accuracies) {
            Ok(m) => checks.push(name, (m - row.mean).abs() <= TOLERANCE, format!("{m:.4}/{:.2}", row.mean)),
            Err(e) => checks.push(name, false, e.to_string()),
        }
    }
    fusion_closed_forms(&mut checks);
    if let Err(e) = oracle_checks(&mut checks) {
        checks.push("synthetic oracle suite", false, e.to_string());
    }
    SelftestReport { checks: checks.0 }
}
