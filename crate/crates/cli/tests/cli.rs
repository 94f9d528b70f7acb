use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_forensic-eval");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("FORENSIC_EVAL_WORKERS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Small synthetic corpus with reference predictions under `dir/corpus`.
fn synth(dir: &Path, count: &str) -> PathBuf {
    let out = dir.join("corpus");
    ok(&[
        "synth",
        "--count",
        count,
        "--size",
        "48x40",
        "--seed",
        "7",
        "--out",
        s(&out),
    ]);
    out
}

fn write_png(path: &Path, w: u32, h: u32, f: impl Fn(u32, u32) -> u8) {
    image::GrayImage::from_fn(w, h, |x, y| image::Luma([f(x, y)]))
        .save(path)
        .unwrap();
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["no-such-command"]), 1);
    assert_eq!(code(&["synth", "--out", s(dir.path())]), 1, "missing --seed");
    assert_eq!(
        code(&[
            "perturb",
            "--manifest",
            "m.json",
            "--kind",
            "smear",
            "--seed",
            "1",
            "--out",
            "o"
        ]),
        1
    );
    let missing = dir.path().join("absent.json");
    assert_eq!(code(&["manifest", "validate", "--manifest", s(&missing)]), 2);
    assert_eq!(code(&["cleanse", "--manifest", s(&missing), "--out", s(dir.path())]), 2);
}

#[test]
fn missing_prediction_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "3");
    let preds = corpus.join("preds/perfect");
    std::fs::remove_file(preds.join("synth_0001.png")).unwrap();
    let out = dir.path().join("eval");
    let manifest = corpus.join("manifest.json");
    assert_eq!(
        code(&[
            "eval",
            "pixel",
            "--manifest",
            s(&manifest),
            "--preds",
            s(&preds),
            "--out",
            s(&out)
        ]),
        2
    );
}

#[test]
fn reference_predictions_and_worker_independence() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "20");
    let manifest = corpus.join("manifest.json");
    let eval = |set: &str, workers: &str, extra: &[&str]| {
        let out = dir.path().join(format!("eval_{set}_{workers}"));
        let preds = corpus.join("preds").join(set);
        let mut args = vec!["--workers", workers, "eval", "pixel", "--manifest", s(&manifest)];
        args.extend(["--preds", s(&preds), "--out", s(&out)]);
        args.extend(extra);
        let stdout = ok(&args);
        (stdout, out)
    };

    let (stdout, one) = eval("perfect", "1", &[]);
    assert!(stdout.contains("1.0000"), "{stdout}");
    let (_, eight) = eval("perfect", "8", &[]);
    for file in ["pixel_report.json", "pixel_per_sample.csv"] {
        assert_eq!(
            std::fs::read(one.join(file)).unwrap(),
            std::fs::read(eight.join(file)).unwrap(),
            "{file}"
        );
    }

    let (stdout, out) = eval("complement", "2", &["--variants", "permute"]);
    assert!(stdout.contains("permute"), "{stdout}");
    let report = read_json(&out.join("pixel_report.json"));
    let agg = &report["report"]["aggregate"];
    assert_eq!(agg["f1"], 0.0);
    assert_eq!(agg["permute_f1"], 1.0);
    assert_eq!(report["run"]["command"], "eval pixel");
    assert!(report["run"]["config"].get("workers").is_none());
}

#[test]
fn manifest_build_labels_and_orphans() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    std::fs::create_dir_all(data.join("images")).unwrap();
    std::fs::create_dir_all(data.join("masks")).unwrap();
    for id in ["a", "b", "c", "d"] {
        write_png(&data.join("images").join(format!("{id}.png")), 16, 16, |x, y| {
            (x * 9 + y) as u8
        });
    }
    for id in ["a", "b", "c"] {
        write_png(&data.join("masks").join(format!("{id}.png")), 16, 16, |x, _| {
            if x < 8 {
                255
            } else {
                0
            }
        });
    }
    let out = dir.path().join("m1");
    ok(&[
        "manifest",
        "build",
        "--dir",
        s(&data),
        "--dataset",
        "toy",
        "--out",
        s(&out),
    ]);
    let m = read_json(&out.join("manifest.json"));
    let labels: Vec<u64> = m["samples"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["label"].as_u64().unwrap())
        .collect();
    assert_eq!(labels, vec![1, 1, 1, 0]);
    assert!(m["samples"][3].get("mask").is_none());
    ok(&["manifest", "validate", "--manifest", s(&out.join("manifest.json"))]);

    let again = dir.path().join("m2");
    ok(&[
        "manifest",
        "build",
        "--dir",
        s(&data),
        "--dataset",
        "toy",
        "--out",
        s(&again),
    ]);
    assert_eq!(
        std::fs::read(out.join("manifest.json")).unwrap(),
        std::fs::read(again.join("manifest.json")).unwrap()
    );

    write_png(&data.join("masks/e.png"), 16, 16, |_, _| 0);
    let orphan = dir.path().join("m3");
    assert_eq!(code(&["manifest", "build", "--dir", s(&data), "--out", s(&orphan)]), 2);
}

#[test]
fn cleanse_keeps_one_of_each_duplicate_group() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("dups");
    ok(&[
        "synth",
        "--duplicates",
        "3",
        "--count",
        "2",
        "--size",
        "96x96",
        "--seed",
        "4",
        "--out",
        s(&corpus),
    ]);
    let out = dir.path().join("clean");
    let stdout = ok(&[
        "cleanse",
        "--manifest",
        s(&corpus.join("manifest.json")),
        "--out",
        s(&out),
    ]);
    assert!(stdout.contains("kept 3 of 5"), "{stdout}");
    let kept = out.join("manifest.json");
    ok(&["manifest", "validate", "--manifest", s(&kept)]);
    let csv = std::fs::read_to_string(out.join("similarity.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(out.join("groups.json").exists());
}

#[test]
fn perturb_identity_level_is_byte_exact() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "3");
    let out = dir.path().join("blur");
    let manifest = corpus.join("manifest.json");
    ok(&[
        "perturb",
        "--manifest",
        s(&manifest),
        "--kind",
        "blur",
        "--levels",
        "0,5",
        "--seed",
        "1",
        "--out",
        s(&out),
    ]);
    for id in ["synth_0000", "synth_0001", "synth_0002"] {
        let original = std::fs::read(corpus.join("images").join(format!("{id}.png"))).unwrap();
        let level0 = std::fs::read(out.join("gaussian_blur/0").join(format!("{id}.png"))).unwrap();
        let level5 = std::fs::read(out.join("gaussian_blur/5").join(format!("{id}.png"))).unwrap();
        assert_eq!(original, level0);
        assert_ne!(original, level5);
    }
    ok(&[
        "manifest",
        "validate",
        "--manifest",
        s(&out.join("gaussian_blur/5/manifest.json")),
    ]);
}

#[test]
fn report_merges_levels_into_curve() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "3");
    let manifest = corpus.join("manifest.json");
    let mut reports = Vec::new();
    for set in ["perfect", "empty", "complement"] {
        let out = dir.path().join(set);
        let preds = corpus.join("preds").join(set);
        ok(&[
            "eval",
            "pixel",
            "--manifest",
            s(&manifest),
            "--preds",
            s(&preds),
            "--out",
            s(&out),
        ]);
        reports.push(out.join("pixel_report.json").to_str().unwrap().to_string());
    }
    let out = dir.path().join("curve");
    let joined = reports.join(",");
    let stdout = ok(&[
        "report",
        "--reports",
        &joined,
        "--kind",
        "jpeg",
        "--levels",
        "100,90,80",
        "--out",
        s(&out),
    ]);
    let csv = std::fs::read_to_string(out.join("robustness_curve.csv")).unwrap();
    assert_eq!(stdout, csv);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "kind,level,metric,value");
    assert_eq!(lines[1], "jpeg_compress,100,f1,1");
    assert_eq!(
        code(&[
            "report",
            "--reports",
            &joined,
            "--kind",
            "jpeg",
            "--levels",
            "100,90",
            "--out",
            s(&out)
        ]),
        1
    );
}

#[test]
fn config_file_fills_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "3");
    let config = dir.path().join("config.json");
    let body = serde_json::json!({
        "manifest": corpus.join("manifest.json"),
        "preds": corpus.join("preds/perfect"),
        "threshold": 0.7,
        "mask-threshold": 0.4,
    });
    std::fs::write(&config, body.to_string()).unwrap();

    let out = dir.path().join("a");
    ok(&["--config", s(&config), "eval", "pixel", "--out", s(&out)]);
    let opts = &read_json(&out.join("pixel_report.json"))["report"]["options"];
    assert_eq!(opts["threshold"], 0.7);
    assert_eq!(opts["mask_threshold"], 0.4);

    let out = dir.path().join("b");
    ok(&[
        "--config",
        s(&config),
        "eval",
        "pixel",
        "--threshold",
        "0.3",
        "--out",
        s(&out),
    ]);
    assert_eq!(
        read_json(&out.join("pixel_report.json"))["report"]["options"]["threshold"],
        0.3
    );

    let mut typo = body.clone();
    typo["treshold"] = typo["threshold"].take();
    typo.as_object_mut().unwrap().remove("threshold");
    std::fs::write(&config, typo.to_string()).unwrap();
    assert_eq!(code(&["--config", s(&config), "eval", "pixel", "--out", s(&out)]), 1);
}
