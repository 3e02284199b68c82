use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use utie_core::oracle;
use utie_core::synth::{self, SynthConfig};
use utie_core::verification;

fn utie(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_utie"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("an error line");
    serde_json::from_str(line).expect("error line is JSON")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth_into(dir: &Path) -> PathBuf {
    let d = dir.join("d");
    stdout_json(&utie(&["synth", "--seed", "7", "--out", s(&d)]));
    d
}

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<(PathBuf, Vec<u8>)> = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            files.extend(snapshot(&path));
        } else {
            files.push((path.clone(), fs::read(&path).unwrap()));
        }
    }
    files.sort();
    files
}

#[test]
fn report_reproduces_published_row() {
    let out = utie(&[
        "report",
        "--acc", "African=70.75",
        "--acc", "Asian=69.73",
        "--acc", "Caucasian=79.32",
        "--acc", "Indian=68.98",
    ]);
    let v = stdout_json(&out);
    for (key, want) in [("mean", 72.20), ("std", 4.81), ("ser", 1.50)] {
        let got = v[key].as_f64().unwrap();
        assert!((got - want).abs() <= 0.01, "{key}: {got}");
    }
    assert_eq!(v["per_group"]["Caucasian"], 79.32);
}

#[test]
fn report_markdown_output() {
    let tmp = tempfile::tempdir().unwrap();
    let md = tmp.path().join("t.md");
    let out = utie(&[
        "report", "--acc", "Female=82.58", "--acc", "Male=86.43",
        "--approach", "CLIP", "--embedding", "IE", "--format", "markdown", "--markdown", s(&md),
    ]);
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table, fs::read_to_string(&md).unwrap());
    assert!(table.starts_with("| Approach | Feature Embedding | Female | Male | Mean | STD | SER |"));
    assert!(table.contains("| CLIP | IE | 82.58 | 86.43 | 84.50 |"));
}

#[test]
fn synth_then_verify_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let d = synth_into(tmp.path());
    let args = [
        "verify",
        "--bundle", &format!("{}/bundle", s(&d)),
        "--anchors", &format!("{}/anchors", s(&d)),
        "--pairs", &format!("{}/pairs_group0.csv", s(&d)),
        "--mode", "ie",
    ];
    let first = utie(&args);
    let second = utie(&args);
    assert_eq!(first.stdout, second.stdout);
    let v = stdout_json(&first);
    let acc = v["groups"][0]["accuracy"].as_f64().unwrap();
    assert_eq!(v["groups"][0]["group"], "group0");
    assert_eq!(acc, 95.5);

    // same number from the naive k-fold on freshly generated data
    let data = synth::generate(&SynthConfig::with_seed(7)).unwrap();
    let scored = verification::score_pairs(&data.bundle, &data.pairs["group0"]).unwrap();
    let (want, _) = oracle::kfold(&scored.scores, &scored.labels, &scored.folds, verification::SENTINEL_MARGIN);
    assert_eq!(acc, want);
}

#[test]
fn verify_splits_a_combined_pair_file_by_group() {
    let tmp = tempfile::tempdir().unwrap();
    let d = synth_into(tmp.path());
    let combined = tmp.path().join("all.csv");
    let mut text = String::new();
    for g in 0..4 {
        let body = fs::read_to_string(d.join(format!("pairs_group{g}.csv"))).unwrap();
        let mut lines = body.lines();
        let header = lines.next().unwrap();
        if g == 0 {
            text.push_str(header);
            text.push('\n');
        }
        for l in lines {
            text.push_str(l);
            text.push('\n');
        }
    }
    fs::write(&combined, text).unwrap();
    let bundle = d.join("bundle");
    let split = stdout_json(&utie(&["verify", "--bundle", s(&bundle), "--pairs", s(&combined)]));
    let named = stdout_json(&utie(&[
        "verify",
        "--bundle", s(&bundle),
        "--pairs", &format!("group0={}", s(&d.join("pairs_group0.csv"))),
    ]));
    assert_eq!(split["groups"].as_array().unwrap().len(), 4);
    assert_eq!(split["groups"][0], named["groups"][0]);
}

#[test]
fn utie_without_anchors_exits_1() {
    let out = utie(&["transform", "--mode", "utie"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["message"], "anchors required for mode utie");
    assert_eq!(err["error"], "AnchorsRequired");
}

#[test]
fn exit_codes_split_format_from_domain_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = utie(&["classify", "--bundle", s(&tmp.path().join("none")), "--anchors", "x"]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(stderr_json(&missing)["error"], "IoError");

    let bad_npy = tmp.path().join("b");
    fs::create_dir_all(&bad_npy).unwrap();
    fs::write(bad_npy.join("embeddings.npy"), b"not an npy file").unwrap();
    fs::write(bad_npy.join("manifest.jsonl"), "").unwrap();
    let out = utie(&["verify", "--bundle", s(&bad_npy), "--pairs", "p.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "MalformedHeader");

    let out = utie(&["report", "--acc", "a=100", "--acc", "b=90"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "PerfectGroup");

    let out = utie(&["verify", "--mode", "sideways"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "UnknownMode");

    let out = utie(&["transform", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "UsageError");
    assert_eq!(String::from_utf8_lossy(&out.stderr).lines().count(), 1);
}

#[test]
fn transform_is_idempotent_and_leaves_inputs_alone() {
    let tmp = tempfile::tempdir().unwrap();
    let d = synth_into(tmp.path());
    let before = snapshot(&d);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        stdout_json(&utie(&[
            "transform",
            "--bundle", s(&d.join("bundle")),
            "--anchors", s(&d.join("anchors")),
            "--mode", "utie",
            "--out", s(out),
        ]));
    }
    assert_eq!(snapshot(&d), before);
    let strip = |files: Vec<(PathBuf, Vec<u8>)>, root: &Path| -> Vec<(PathBuf, Vec<u8>)> {
        files
            .into_iter()
            .map(|(p, bytes)| (p.strip_prefix(root).unwrap().to_owned(), bytes))
            .collect()
    };
    assert_eq!(strip(snapshot(&a), &a), strip(snapshot(&b), &b));
    assert_eq!(
        fs::read(a.join("manifest.jsonl")).unwrap(),
        fs::read(d.join("bundle/manifest.jsonl")).unwrap()
    );

    let clobber = utie(&["transform", "--bundle", s(&d.join("bundle")), "--out", s(&d.join("bundle"))]);
    assert_eq!(clobber.status.code(), Some(1));
    assert_eq!(snapshot(&d), before);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    let d = synth_into(tmp.path());
    let cfg = tmp.path().join("utie.toml");
    fs::write(
        &cfg,
        format!(
            "[verify]\nbundle = {:?}\nanchors = {:?}\npairs = [{:?}]\nmode = \"utie\"\n",
            s(&d.join("bundle")),
            s(&d.join("anchors")),
            s(&d.join("pairs_group1.csv")),
        ),
    )
    .unwrap();
    let from_file = stdout_json(&utie(&["--config", s(&cfg), "verify"]));
    assert_eq!(from_file["mode"], "utie");
    assert_eq!(from_file["groups"][0]["group"], "group1");
    let overridden = stdout_json(&utie(&["verify", "--config", s(&cfg), "--mode", "ie"]));
    assert_eq!(overridden["mode"], "ie");

    fs::write(&cfg, "[verify]\nbogus = 1\n").unwrap();
    let out = utie(&["--config", s(&cfg), "verify"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn diag_writes_profile_and_gap() {
    let tmp = tempfile::tempdir().unwrap();
    let d = synth_into(tmp.path());
    let (csv, gap) = (tmp.path().join("p.csv"), tmp.path().join("g.json"));
    let mut gaps = Vec::new();
    for mode in ["ie", "utie", "ie_pte"] {
        stdout_json(&utie(&[
            "diag",
            "--bundle", s(&d.join("bundle")),
            "--anchors", s(&d.join("anchors")),
            "--mode", mode,
            "--out", s(&csv),
            "--gap", s(&gap),
        ]));
        let text = fs::read_to_string(&csv).unwrap();
        assert_eq!(text.lines().next(), Some("group,anchor,mean_cosine,count"));
        assert_eq!(text.lines().count(), 1 + 16);
        let g: Value = serde_json::from_str(&fs::read_to_string(&gap).unwrap()).unwrap();
        gaps.push(g["per_group"]["group2"].as_f64().unwrap());
    }
    assert!(gaps[1] < gaps[0] && gaps[2] >= gaps[0], "{gaps:?}");
}

#[test]
fn classify_reports_zero_shot_accuracy() {
    let tmp = tempfile::tempdir().unwrap();
    let d = synth_into(tmp.path());
    let preds = tmp.path().join("preds.jsonl");
    let v = stdout_json(&utie(&[
        "classify",
        "--bundle", s(&d.join("bundle")),
        "--anchors", s(&d.join("anchors")),
        "--predictions", s(&preds),
    ]));
    for g in 0..4 {
        assert!(v["per_group_accuracy"][format!("group{g}")].as_f64().unwrap() > 95.0);
    }
    assert_eq!(fs::read_to_string(&preds).unwrap().lines().count(), 400);
}

#[test]
fn selftest_passes_and_catches_wrong_divisor() {
    let ok = utie(&["selftest"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(ok.stdout, utie(&["selftest"]).stdout);
    let text = String::from_utf8(ok.stdout).unwrap();
    assert!(text.lines().all(|l| !l.starts_with("FAIL")));

    let bad = utie(&["selftest", "--population-std"]);
    assert_eq!(bad.status.code(), Some(1));
    let text = String::from_utf8(bad.stdout).unwrap();
    let line = text.lines().find(|l| l.contains("race table CLIP/IE/RFW")).unwrap();
    assert!(line.starts_with("FAIL") && line.contains("std 4.16"), "{line}");
}
