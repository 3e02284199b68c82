//! Reported per-group accuracies and their summary statistics for CLIP,
//! OpenCLIP and SigLIP (ViT-B/16) on RFW and BFW, used as regression fixtures
//! for the metric arithmetic.

#[derive(Debug, Clone, Copy)]
pub struct PublishedRow {
    pub approach: &'static str,
    pub embedding: &'static str,
    pub benchmark: &'static str,
    pub groups: &'static [&'static str],
    pub accuracies: &'static [f64],
    pub mean: f64,
    pub std: f64,
    pub ser: f64,
}

impl PublishedRow {
    pub fn name(&self) -> String {
        format!("{}/{}/{}", self.approach, self.embedding, self.benchmark)
    }
}

/// Zero-shot prediction accuracies per group and their reported mean.
#[derive(Debug, Clone, Copy)]
pub struct PublishedZeroShot {
    pub approach: &'static str,
    pub benchmark: &'static str,
    pub groups: &'static [&'static str],
    pub accuracies: &'static [f64],
    pub mean: f64,
}

pub const RFW_GROUPS: &[&str] = &["African", "Asian", "Caucasian", "Indian"];
pub const BFW_RACE_GROUPS: &[&str] = &["Asian", "Black", "Indian", "White"];
pub const GENDER_GROUPS: &[&str] = &["Female", "Male"];

/// Tolerance for reproducing the reported two-decimal figures.
pub const TOLERANCE: f64 = 0.01;

macro_rules! row {
    ($approach:literal, $emb:literal, $bench:literal, $groups:expr, [$($a:literal),+], $mean:literal, $std:literal, $ser:literal) => {
        PublishedRow {
            approach: $approach,
            embedding: $emb,
            benchmark: $bench,
            groups: $groups,
            accuracies: &[$($a),+],
            mean: $mean,
            std: $std,
            ser: $ser,
        }
    };
}

/// Racial bias: RFW and BFW (race subsets), 18 rows.
pub const RACE_ROWS: [PublishedRow; 18] = [
    row!("CLIP", "IE", "RFW", RFW_GROUPS, [70.75, 69.73, 79.32, 68.98], 72.20, 4.81, 1.50),
    row!("CLIP", "UTIE", "RFW", RFW_GROUPS, [70.85, 69.80, 78.88, 69.48], 72.25, 4.46, 1.45),
    row!("CLIP", "IE+PTE", "RFW", RFW_GROUPS, [68.47, 68.73, 77.90, 66.87], 70.49, 5.01, 1.50),
    row!("OpenCLIP", "IE", "RFW", RFW_GROUPS, [69.37, 68.60, 79.95, 69.72], 71.91, 5.38, 1.57),
    row!("OpenCLIP", "UTIE", "RFW", RFW_GROUPS, [69.35, 68.83, 79.80, 69.85], 71.96, 5.24, 1.54),
    row!("OpenCLIP", "IE+PTE", "RFW", RFW_GROUPS, [67.83, 67.62, 78.93, 65.58], 69.99, 6.05, 1.63),
    row!("SigLIP", "IE", "RFW", RFW_GROUPS, [58.17, 64.17, 71.62, 65.98], 64.98, 5.54, 1.47),
    row!("SigLIP", "UTIE", "RFW", RFW_GROUPS, [58.63, 64.62, 71.63, 65.60], 65.12, 5.32, 1.46),
    row!("SigLIP", "IE+PTE", "RFW", RFW_GROUPS, [56.80, 61.02, 69.86, 63.53], 62.80, 5.46, 1.43),
    row!("CLIP", "IE", "BFW", BFW_RACE_GROUPS, [82.36, 84.49, 84.85, 86.31], 84.50, 1.63, 1.29),
    row!("CLIP", "UTIE", "BFW", BFW_RACE_GROUPS, [82.20, 84.16, 84.68, 85.89], 84.23, 1.54, 1.26),
    row!("CLIP", "IE+PTE", "BFW", BFW_RACE_GROUPS, [82.22, 83.37, 83.96, 86.25], 83.95, 1.70, 1.29),
    row!("OpenCLIP", "IE", "BFW", BFW_RACE_GROUPS, [80.49, 86.01, 83.97, 86.35], 84.20, 2.69, 1.43),
    row!("OpenCLIP", "UTIE", "BFW", BFW_RACE_GROUPS, [80.54, 85.23, 83.79, 84.85], 83.60, 2.13, 1.32),
    row!("OpenCLIP", "IE+PTE", "BFW", BFW_RACE_GROUPS, [80.07, 84.85, 82.63, 86.37], 83.48, 2.74, 1.46),
    row!("SigLIP", "IE", "BFW", BFW_RACE_GROUPS, [78.27, 79.52, 80.57, 80.54], 79.73, 1.09, 1.12),
    row!("SigLIP", "UTIE", "BFW", BFW_RACE_GROUPS, [77.83, 78.91, 79.93, 79.80], 79.12, 0.97, 1.10),
    row!("SigLIP", "IE+PTE", "BFW", BFW_RACE_GROUPS, [77.77, 79.17, 79.93, 80.88], 79.44, 1.31, 1.16),
];

/// Gender bias on BFW, 9 rows.
pub const GENDER_ROWS: [PublishedRow; 9] = [
    row!("CLIP", "IE", "BFW-gender", GENDER_GROUPS, [82.58, 86.43], 84.50, 2.72, 1.28),
    row!("CLIP", "UTIE", "BFW-gender", GENDER_GROUPS, [82.58, 86.23], 84.41, 2.58, 1.27),
    row!("CLIP", "IE+PTE", "BFW-gender", GENDER_GROUPS, [82.65, 86.58], 84.61, 2.78, 1.29),
    row!("OpenCLIP", "IE", "BFW-gender", GENDER_GROUPS, [81.48, 86.93], 84.20, 3.86, 1.42),
    row!("OpenCLIP", "UTIE", "BFW-gender", GENDER_GROUPS, [81.44, 85.76], 83.60, 3.06, 1.30),
    row!("OpenCLIP", "IE+PTE", "BFW-gender", GENDER_GROUPS, [81.25, 86.74], 83.99, 3.88, 1.41),
    row!("SigLIP", "IE", "BFW-gender", GENDER_GROUPS, [78.60, 80.85], 79.73, 1.59, 1.12),
    row!("SigLIP", "UTIE", "BFW-gender", GENDER_GROUPS, [78.13, 80.38], 79.25, 1.59, 1.11),
    row!("SigLIP", "IE+PTE", "BFW-gender", GENDER_GROUPS, [78.29, 80.76], 79.52, 1.75, 1.13),
];

macro_rules! zs {
    ($approach:literal, $bench:literal, $groups:expr, [$($a:literal),+], $mean:literal) => {
        PublishedZeroShot {
            approach: $approach,
            benchmark: $bench,
            groups: $groups,
            accuracies: &[$($a),+],
            mean: $mean,
        }
    };
}

/// Zero-shot demographic prediction accuracy of the text encoders.
pub const ZERO_SHOT_ROWS: [PublishedZeroShot; 9] = [
    zs!("CLIP", "RFW", RFW_GROUPS, [87.72, 96.34, 97.31, 89.74], 92.78),
    zs!("CLIP", "BFW", BFW_RACE_GROUPS, [98.80, 64.00, 90.84, 98.04], 87.92),
    zs!("CLIP", "BFW-gender", GENDER_GROUPS, [97.86, 98.98], 98.42),
    zs!("OpenCLIP", "RFW", RFW_GROUPS, [95.99, 93.74, 97.44, 84.57], 92.94),
    zs!("OpenCLIP", "BFW", BFW_RACE_GROUPS, [95.16, 85.40, 85.88, 99.32], 91.44),
    zs!("OpenCLIP", "BFW-gender", GENDER_GROUPS, [96.78, 98.06], 97.42),
    zs!("SigLIP", "RFW", RFW_GROUPS, [92.68, 82.08, 96.77, 80.75], 88.07),
    zs!("SigLIP", "BFW", BFW_RACE_GROUPS, [83.68, 79.20, 82.82, 98.90], 86.15),
    zs!("SigLIP", "BFW-gender", GENDER_GROUPS, [92.68, 97.54], 95.11),
];
