//! Summary statistics over per-group accuracies: mean, sample standard
//! deviation and skewed error ratio (largest group error over smallest).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arithmetic mean, summed in the given order.
pub fn mean_accuracy(accs: &[f64]) -> Result<f64> {
    if accs.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(accs.iter().sum::<f64>() / accs.len() as f64)
}

/// Sample standard deviation (divisor `n - 1`).
pub fn std_accuracy(accs: &[f64]) -> Result<f64> {
    if accs.len() < 2 {
        return Err(Error::NeedTwoGroups(accs.len()));
    }
    let mean = mean_accuracy(accs)?;
    let ss: f64 = accs.iter().map(|a| (a - mean) * (a - mean)).sum();
    Ok((ss / (accs.len() - 1) as f64).sqrt())
}

/// Population standard deviation (divisor `n`). Not used for reporting;
/// kept so the self-test can show the sample form is the one that matches.
pub fn population_std(accs: &[f64]) -> Result<f64> {
    if accs.len() < 2 {
        return Err(Error::NeedTwoGroups(accs.len()));
    }
    let mean = mean_accuracy(accs)?;
    let ss: f64 = accs.iter().map(|a| (a - mean) * (a - mean)).sum();
    Ok((ss / accs.len() as f64).sqrt())
}

fn ser_indexed(accs: &[f64], name: impl Fn(usize) -> String) -> Result<f64> {
    if accs.len() < 2 {
        return Err(Error::NeedTwoGroups(accs.len()));
    }
    if let Some(i) = accs.iter().position(|&a| a >= 100.0) {
        return Err(Error::PerfectGroup(name(i)));
    }
    let errors = accs.iter().map(|a| 100.0 - a);
    let max = errors.clone().fold(f64::NEG_INFINITY, f64::max);
    let min = errors.fold(f64::INFINITY, f64::min);
    Ok(max / min)
}

/// Skewed error ratio: `max_g (100 - acc_g) / min_g (100 - acc_g)`.
pub fn ser(accs: &[f64]) -> Result<f64> {
    ser_indexed(accs, |i| format!("#{i}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub per_group: BTreeMap<String, f64>,
    pub mean: f64,
    pub std: f64,
    pub ser: f64,
}

/// Mean, STD and SER over the groups, taken in name order.
pub fn bias_report(per_group: &BTreeMap<String, f64>) -> Result<BiasReport> {
    for (group, &value) in per_group {
        if !(0.0..=100.0).contains(&value) {
            return Err(Error::AccuracyOutOfRange {
                group: group.clone(),
                value,
            });
        }
    }
    let names: Vec<&String> = per_group.keys().collect();
    let accs: Vec<f64> = per_group.values().copied().collect();
    if accs.len() < 2 {
        return Err(Error::NeedTwoGroups(accs.len()));
    }
    Ok(BiasReport {
        mean: mean_accuracy(&accs)?,
        std: std_accuracy(&accs)?,
        ser: ser_indexed(&accs, |i| names[i].clone())?,
        per_group: per_group.clone(),
    })
}

/// A labelled report row, e.g. one model/mode combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub approach: String,
    pub embedding: String,
    pub report: BiasReport,
}

/// Markdown table with the group columns followed by Mean, STD and SER, all
/// to two decimals. Group columns come from the first row.
pub fn markdown_table(rows: &[ReportRow]) -> String {
    let Some(first) = rows.first() else {
        return String::new();
    };
    let groups: Vec<&String> = first.report.per_group.keys().collect();
    let mut out = String::from("| Approach | Feature Embedding |");
    for g in &groups {
        let _ = write!(out, " {g} |");
    }
    out.push_str(" Mean | STD | SER |\n|---|---|");
    out.push_str(&"---:|".repeat(groups.len() + 3));
    out.push('\n');
    for row in rows {
        let _ = write!(out, "| {} | {} |", row.approach, row.embedding);
        for g in &groups {
            match row.report.per_group.get(*g) {
                Some(v) => {
                    let _ = write!(out, " {v:.2} |");
                }
                None => out.push_str(" - |"),
            }
        }
        let r = &row.report;
        let _ = writeln!(out, " {:.2} | {:.2} | {:.2} |", r.mean, r.std, r.ser);
    }
    out
}
