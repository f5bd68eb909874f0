use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{TimeZone, Utc};

use bcepp_core::ordinal::{FlareClass, ThresholdSpec};
use bcepp_core::pipeline::{
    write_dataset, LabeledSample, Partition, Raster, StoredSample, MANIFEST_FILE,
};
use bcepp_core::trainer::{
    Checkpoint, FeatureSpec, LossKind, Model, ModelSpec, Standardizer, TrainConfig,
};

fn bcepp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcepp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bcepp(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    bcepp(args).status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn manifest_rows(dir: &Path) -> usize {
    std::fs::read_to_string(dir.join(MANIFEST_FILE))
        .unwrap()
        .lines()
        .count()
        - 1
}

fn manifest_json(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("run_manifest.json")).unwrap()).unwrap()
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(files(&path));
        } else if path.file_name().unwrap() != "run_manifest.json" {
            out.push(path);
        }
    }
    out.sort();
    out
}

fn same_tree(a: &Path, b: &Path) -> bool {
    let (fa, fb) = (files(a), files(b));
    fa.len() == fb.len()
        && fa.iter().zip(&fb).all(|(x, y)| {
            x.strip_prefix(a).unwrap() == y.strip_prefix(b).unwrap()
                && std::fs::read(x).unwrap() == std::fs::read(y).unwrap()
        })
}

#[test]
fn version_is_library_semver() {
    assert_eq!(
        ok(&["--version"]).trim(),
        format!("bcepp {}", bcepp_core::VERSION)
    );
}

#[test]
fn metrics_reproduce_reference_rows() {
    let out = ok(&[
        "metrics", "--tp", "1057", "--fp", "5102", "--tn", "102059", "--fn", "481",
    ]);
    assert_eq!(
        out,
        "tp=1057\nfp=5102\ntn=102059\nfn=481\ntss=0.6396\nhss=0.2578\ncss=0.4061\n"
    );
    let out = ok(&[
        "metrics", "--tp", "1446", "--fp", "4460", "--tn", "106242", "--fn", "727",
    ]);
    assert!(
        out.contains("tss=0.6252") && out.contains("hss=0.3394") && out.contains("css=0.4606"),
        "{out}"
    );
    assert_eq!(
        code(&["metrics", "--tp", "0", "--fp", "0", "--tn", "1", "--fn", "0"]),
        4
    );
    assert_eq!(
        code(&["metrics", "--tp", "-1", "--fp", "0", "--tn", "1", "--fn", "0"]),
        2
    );
}

#[test]
fn gen_conserves_counts_and_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    ok(&[
        "gen",
        "--counts",
        "FQ=100,C=50,M=20",
        "--seed",
        "3",
        "--out",
        p(&a),
    ]);
    assert_eq!(manifest_rows(&a), 170);
    ok(&[
        "gen",
        "--counts",
        "FQ=100,C=50,M=20",
        "--seed",
        "3",
        "--out",
        p(&b),
    ]);
    assert!(same_tree(&a, &b));
    ok(&[
        "gen",
        "--counts",
        "FQ=100,C=50,M=20",
        "--seed",
        "4",
        "--out",
        p(&c),
    ]);
    assert!(!same_tree(&a, &c));

    let empty = dir.path().join("empty");
    ok(&["gen", "--counts", "FQ=0", "--out", p(&empty)]);
    assert_eq!(manifest_rows(&empty), 0);
    assert_eq!(manifest_json(&a)["config"]["counts"], "FQ=100,C=50,M=20");
}

#[test]
fn io_and_usage_failures_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    std::fs::write(&file, "x").unwrap();
    assert_eq!(
        code(&["gen", "--counts", "FQ=1", "--out", p(&file.join("sub"))]),
        5
    );
    assert_eq!(code(&["gen", "--counts", "Q=1", "--out", p(dir.path())]), 2);
    assert_eq!(
        code(&[
            "prepare",
            "--in",
            p(&dir.path().join("missing")),
            "--out",
            p(dir.path())
        ]),
        5
    );
    assert_eq!(code(&["bogus"]), 2);
}

fn prepared(dir: &Path, balance: bool) -> PathBuf {
    let raw = dir.join("raw");
    let prep = dir.join(if balance { "balanced" } else { "plain" });
    if !raw.exists() {
        ok(&[
            "gen",
            "--counts",
            "FQ=300,B=40,C=60,M=40,X=10",
            "--seed",
            "8",
            "--out",
            p(&raw),
        ]);
    }
    let mut args = vec!["prepare", "--in", p(&raw), "--seed", "5", "--out", p(&prep)];
    if balance {
        args.push("--balance");
    }
    ok(&args);
    prep
}

fn split_counts(stdout: &str) -> Vec<(String, usize, usize)> {
    stdout
        .lines()
        .map(|l| {
            let role = l.split(':').next().unwrap().to_string();
            let get = |k: &str| {
                l.split_whitespace()
                    .find_map(|w| w.strip_prefix(k))
                    .unwrap()
                    .parse::<usize>()
                    .unwrap()
            };
            (role, get("NF="), get("FL="))
        })
        .collect()
}

#[test]
fn prepare_balances_only_training() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    ok(&[
        "gen",
        "--counts",
        "FQ=300,B=40,C=60,M=40,X=10",
        "--seed",
        "8",
        "--out",
        p(&raw),
    ]);
    let plain = split_counts(&ok(&[
        "prepare",
        "--in",
        p(&raw),
        "--out",
        p(&dir.path().join("p")),
    ]));
    let balanced = split_counts(&ok(&[
        "prepare",
        "--in",
        p(&raw),
        "--balance",
        "--out",
        p(&dir.path().join("b")),
    ]));
    assert_eq!(
        plain.iter().map(|r| r.0.as_str()).collect::<Vec<_>>(),
        ["train", "val", "test"]
    );
    assert_eq!(plain[1..], balanced[1..]);
    assert_eq!(balanced[0].2, 6 * plain[0].2);
    assert!(balanced[0].1 < plain[0].1);
    let total: usize = plain.iter().map(|r| r.1 + r.2).sum();
    assert_eq!(total, 450);
    assert_eq!(
        manifest_rows(&dir.path().join("p/train")),
        plain[0].1 + plain[0].2
    );
    assert_eq!(
        code(&[
            "prepare",
            "--in",
            p(&raw),
            "--threshold",
            ">=Q",
            "--out",
            p(dir.path())
        ]),
        2
    );
}

#[test]
fn training_defaults_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let data = prepared(dir.path(), true);
    let pp = dir.path().join("pp");
    ok(&[
        "train",
        "--data",
        p(&data),
        "--loss",
        "bce-pp",
        "--epochs",
        "2",
        "--out",
        p(&pp),
    ]);
    let m = manifest_json(&pp);
    assert_eq!(m["config"]["alpha"], "0.75");
    assert_eq!(m["config"]["lr"], "0.001");
    assert_eq!(m["config"]["weight-decay"], "0.001");
    assert_eq!(m["config"]["batch-size"], "64");
    let log = std::fs::read_to_string(pp.join("epoch_log.csv")).unwrap();
    assert_eq!(
        log.lines().next(),
        Some("epoch,train_loss,val_loss,val_tss,val_hss,val_css,lr")
    );
    assert_eq!(log.lines().count(), 3);

    let b = dir.path().join("b");
    let dry = ok(&[
        "train",
        "--data",
        p(&data),
        "--loss",
        "bce",
        "--out",
        p(&b),
        "--manifest-only",
    ]);
    let m: serde_json::Value = serde_json::from_str(&dry).unwrap();
    assert_eq!(m["config"]["lr"], "0.01");
    assert_eq!(m["config"]["weight-decay"], "0.01");
    assert_eq!(m["config"]["epochs"], "50");
    assert!(!b.exists(), "dry run must not write");

    let cfg = dir.path().join("train.ini");
    std::fs::write(
        &cfg,
        "[train]\nloss = bce\nlr = 0.05\nbatch_size = 16\nepochs = 4\n",
    )
    .unwrap();
    let dry = ok(&[
        "train",
        "--config",
        p(&cfg),
        "--data",
        p(&data),
        "--lr",
        "0.02",
        "--out",
        p(&b),
        "--manifest-only",
    ]);
    let m: serde_json::Value = serde_json::from_str(&dry).unwrap();
    assert_eq!(m["config"]["loss"], "bce");
    assert_eq!(m["config"]["lr"], "0.02");
    assert_eq!(m["config"]["batch-size"], "16");
    assert_eq!(m["config"]["weight-decay"], "0.01");

    std::fs::write(&cfg, "learning_rate = 0.05\n").unwrap();
    assert_eq!(
        code(&[
            "train",
            "--config",
            p(&cfg),
            "--data",
            p(&data),
            "--out",
            p(&b)
        ]),
        2
    );

    let out = bcepp(&[
        "train",
        "--data",
        p(&data),
        "--alpha",
        "2.0",
        "--epochs",
        "1",
        "--out",
        p(&dir.path().join("a2")),
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside the recommended range"));
    assert_eq!(
        code(&["train", "--data", p(&data), "--alpha", "0", "--out", p(&b)]),
        2
    );
    assert_eq!(
        code(&["train", "--data", p(&data), "--lr", "1e300", "--out", p(&b)]),
        3
    );
}

#[test]
fn grid_mode_writes_a_leaderboard() {
    let dir = tempfile::tempdir().unwrap();
    let data = prepared(dir.path(), true);
    let g = dir.path().join("g");
    ok(&[
        "train",
        "--data",
        p(&data),
        "--grid-alpha",
        "0.25,0.5,0.75,1",
        "--epochs",
        "3",
        "--out",
        p(&g),
    ]);
    let board = std::fs::read_to_string(g.join("leaderboard.csv")).unwrap();
    let rows: Vec<&str> = board.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    let css: Vec<f64> = rows
        .iter()
        .map(|r| r.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(css.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(manifest_json(&g)["config"]["grid-alpha"], "0.25,0.5,0.75,1");
}

fn write_separable(dir: &Path) {
    let t0 = Utc.with_ymd_and_hms(2013, 3, 1, 0, 0, 0).unwrap();
    let mut samples = Vec::new();
    for i in 0..20u64 {
        let (class, v) = if i % 4 == 0 {
            (FlareClass::M, 255.0)
        } else {
            (FlareClass::FQ, 127.5)
        };
        let image = Raster::filled(8, 8, v).unwrap();
        samples.push(StoredSample {
            sample: LabeledSample::new(i, i, t0, class, ThresholdSpec::default(), image).unwrap(),
            partition: Partition::new(4).unwrap(),
        });
    }
    write_dataset(&dir.join("test"), MANIFEST_FILE, &samples).unwrap();
}

fn write_checkpoint(path: &Path, bias: f64, weight: f64) {
    let features = FeatureSpec { pool: 1 };
    // features: [cell mean, global mean]; 0 for mid-grey, 1 for saturated
    let model =
        Model::from_params(ModelSpec::linear(features.dim()), vec![0.0, weight, bias]).unwrap();
    Checkpoint {
        model,
        features,
        scaler: Standardizer::default(),
        config: TrainConfig::defaults(LossKind::BcePp),
    }
    .write(path)
    .unwrap();
}

#[test]
fn eval_reports_fixed_fields() {
    let dir = tempfile::tempdir().unwrap();
    write_separable(dir.path());
    let oracle = dir.path().join("oracle.ckpt");
    write_checkpoint(&oracle, -10.0, 20.0);
    let out = ok(&[
        "eval",
        "--checkpoint",
        p(&oracle),
        "--data",
        p(dir.path()),
        "--split",
        "test",
    ]);
    let keys: Vec<&str> = out.lines().map(|l| l.split('=').next().unwrap()).collect();
    assert_eq!(keys, ["tp", "fp", "tn", "fn", "tss", "hss", "css"]);
    assert!(
        out.contains("tp=5\n") && out.ends_with("css=1.0000\n"),
        "{out}"
    );

    let never = dir.path().join("never.ckpt");
    write_checkpoint(&never, -50.0, 0.0);
    let out = ok(&[
        "eval",
        "--checkpoint",
        p(&never),
        "--data",
        p(dir.path()),
        "--split",
        "test",
    ]);
    assert!(
        out.contains("tp=0\n") && out.ends_with("css=0.0000\n"),
        "{out}"
    );

    let report = dir.path().join("report");
    ok(&[
        "eval",
        "--checkpoint",
        p(&oracle),
        "--data",
        p(dir.path()),
        "--out",
        p(&report),
    ]);
    assert!(report.join("metrics_test.txt").exists() && report.join("run_manifest.json").exists());
    assert_eq!(
        code(&[
            "eval",
            "--checkpoint",
            p(&oracle),
            "--data",
            p(dir.path()),
            "--split",
            "val"
        ]),
        5
    );
}

#[test]
fn curve_files_per_alpha_and_subclass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curves");
    ok(&[
        "curves",
        "--alpha",
        "0.25,1",
        "--grid",
        "101",
        "--out",
        p(&out),
    ]);
    assert_eq!(files(&out).len(), 12);
    let m = std::fs::read_to_string(out.join("curve_M_fl_alpha0.25.csv")).unwrap();
    let mut lines = m.lines();
    assert_eq!(lines.next(), Some("p,loss_bce,loss_bce_pp"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 101);
    assert!(rows.iter().all(|r| r[1] == r[2]));
    let c = std::fs::read_to_string(out.join("curve_C_nf_alpha0.25.csv")).unwrap();
    assert!(c.lines().skip(1).all(|l| {
        let r: Vec<&str> = l.split(',').collect();
        r[1] == r[2]
    }));
    let fq = std::fs::read_to_string(out.join("curve_FQ_nf_alpha1.csv")).unwrap();
    assert!(fq.lines().skip(1).all(|l| {
        let r: Vec<&str> = l.split(',').collect();
        r[1] == r[2]
    }));
    assert_eq!(code(&["curves", "--grid", "1", "--out", p(&out)]), 2);
    assert_eq!(code(&["curves", "--alpha", "-1", "--out", p(&out)]), 2);
}

#[test]
fn manifests_replay_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let data = prepared(dir.path(), true);
    let first = dir.path().join("first");
    ok(&[
        "train",
        "--data",
        p(&data),
        "--epochs",
        "3",
        "--model",
        "mlp",
        "--hidden",
        "8,4",
        "--out",
        p(&first),
    ]);
    let again = dir.path().join("again");
    ok(&[
        "replay",
        p(&first.join("run_manifest.json")),
        "--out",
        p(&again),
    ]);
    assert!(same_tree(&first, &again));
    assert_eq!(manifest_json(&again)["config"]["hidden"], "8,4");

    let prep_again = dir.path().join("prep_again");
    ok(&[
        "replay",
        p(&data.join("run_manifest.json")),
        "--out",
        p(&prep_again),
    ]);
    assert!(same_tree(&data, &prep_again));

    let dry = ok(&[
        "replay",
        p(&first.join("run_manifest.json")),
        "--out",
        p(&dir.path().join("x")),
        "--manifest-only",
    ]);
    assert!(dry.contains("\"command\": \"train\""));
    assert!(!dir.path().join("x").exists());
}

#[test]
fn every_command_supports_dry_runs() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("o");
    let o = p(&o);
    for args in [
        vec!["gen", "--counts", "FQ=5", "--out", o],
        vec!["prepare", "--in", "nowhere", "--out", o],
        vec!["train", "--data", "nowhere", "--out", o],
        vec!["eval", "--checkpoint", "nowhere", "--data", "nowhere"],
        vec![
            "metrics", "--tp", "0", "--fp", "0", "--tn", "0", "--fn", "0",
        ],
        vec!["curves", "--out", o],
        vec!["bench", "--out", o],
    ] {
        let mut full = args.clone();
        full.push("--manifest-only");
        let out = ok(&full);
        let m: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(m["command"], args[0]);
        assert_eq!(m["version"], bcepp_core::VERSION);
    }
    assert!(!dir.path().join("o").exists());
}

#[test]
fn small_benchmark_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let stdout = ok(&["bench", "--scale", "400", "--epochs", "3", "--out", p(&out)]);
    assert!(stdout.contains("bce-pp: epochs=3"));
    for f in [
        "report.txt",
        "bce_epoch_log.csv",
        "bce_pp_epoch_log.csv",
        "run_manifest.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
}
