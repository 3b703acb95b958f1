use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ice_cli::{run, EXIT_DATA, EXIT_OK, EXIT_USAGE};

fn ice(args: &[&str]) -> i32 {
    run(std::iter::once("ice").chain(args.iter().copied()))
}

fn toy_csv(path: &Path, rows: usize, offset: usize) {
    let mut s = String::from("a,b,color,label\n");
    for i in offset..offset + rows {
        let a = (i as f64 * 0.731).sin() * 3.0;
        let b = (i as f64 * 1.37).cos() * 2.0;
        let color = ["red", "green", "blue"][i % 3];
        let label = if a + 0.4 * b + if color == "red" { 0.8 } else { 0.0 } > 0.3 {
            "yes"
        } else {
            "no"
        };
        let _ = writeln!(s, "{a},{b},{color},{label}");
    }
    fs::write(path, s).unwrap();
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn unknown_flag_is_usage_error() {
    assert_eq!(ice(&["train", "--bogus"]), EXIT_USAGE);
    assert_eq!(ice(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(ice(&["--help"]), EXIT_OK);
}

#[test]
fn bad_values_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    toy_csv(&csv, 40, 0);
    let out = dir.path().join("r.csv");
    assert_eq!(
        ice(&[
            "bench",
            "--data",
            p(&csv),
            "--methods",
            "svm",
            "--out",
            p(&out)
        ]),
        EXIT_USAGE
    );
    assert_eq!(
        ice(&[
            "train",
            "--data",
            p(&csv),
            "--out",
            p(&out),
            "--clusters",
            "1"
        ]),
        EXIT_USAGE
    );
    assert_eq!(
        ice(&[
            "train",
            "--data",
            p(&csv),
            "--out",
            p(&out),
            "--nominal",
            "keep"
        ]),
        EXIT_USAGE
    );
}

#[test]
fn data_problems_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = dir.path().join("m");
    assert_eq!(
        ice(&["train", "--data", p(&missing), "--out", p(&out)]),
        EXIT_DATA
    );
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a,label\n1,x\n2,y\n3,z\n").unwrap();
    assert_eq!(
        ice(&["train", "--data", p(&bad), "--out", p(&out)]),
        EXIT_DATA
    );
    let csv = dir.path().join("d.csv");
    toy_csv(&csv, 40, 0);
    assert_eq!(
        ice(&[
            "train",
            "--data",
            p(&csv),
            "--label-col",
            "nope",
            "--out",
            p(&out)
        ]),
        EXIT_DATA
    );
}

#[test]
fn train_predict_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    let test = dir.path().join("test.csv");
    toy_csv(&train, 80, 0);
    toy_csv(&test, 15, 500);
    let model = dir.path().join("model");
    assert_eq!(
        ice(&[
            "train",
            "--data",
            p(&train),
            "--out",
            p(&model),
            "--clusters",
            "12",
            "--seed",
            "3"
        ]),
        EXIT_OK
    );
    for f in [
        "manifest.json",
        "schema.json",
        "metadata.json",
        "model_000.json",
        "model_011.json",
    ] {
        assert!(model.join(f).exists(), "{f}");
    }
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(model.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["run"]["params"]["clusters"], 12);
    assert_eq!(meta["run"]["seed"], 3);

    let preds = dir.path().join("preds.csv");
    assert_eq!(
        ice(&[
            "predict",
            "--model",
            p(&model),
            "--data",
            p(&test),
            "--out",
            p(&preds)
        ]),
        EXIT_OK
    );
    let text = fs::read_to_string(&preds).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,probability,label,M,unique_models");
    assert_eq!(lines.len(), 16);
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        let prob: f64 = f[1].parse().unwrap();
        assert!((0.0..=1.0).contains(&prob));
        assert_eq!(f[2], if prob >= 0.5 { "1" } else { "0" });
        assert!(f[4].parse::<usize>().unwrap() <= 11);
    }

    let report = dir.path().join("inspect.json");
    assert_eq!(
        ice(&["inspect", "--model", p(&model), "--out", p(&report)]),
        EXIT_OK
    );
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(
        v["column_density"]
            .as_array()
            .unwrap()
            .last()
            .unwrap()
            .as_f64(),
        Some(1.0)
    );
    let hist: u64 = v["association_histogram"]
        .as_object()
        .unwrap()
        .values()
        .map(|c| c.as_u64().unwrap())
        .sum();
    assert_eq!(hist, 80);
    assert!(v["consistency"].as_f64().unwrap().abs() <= 1.0);

    let corrupt = dir.path().join("corrupt");
    fs::create_dir_all(&corrupt).unwrap();
    fs::write(corrupt.join("manifest.json"), "{").unwrap();
    assert_eq!(ice(&["inspect", "--model", p(&corrupt)]), EXIT_DATA);
}

#[test]
fn bench_writes_paired_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    fs::create_dir_all(&data).unwrap();
    toy_csv(&data.join("one.csv"), 60, 0);
    toy_csv(&data.join("two.csv"), 50, 100);
    let out = dir.path().join("report.csv");
    let args = [
        "bench",
        "--data",
        p(&data),
        "--methods",
        "ice,bagging",
        "--folds",
        "5",
        "--seed",
        "42",
        "--clusters",
        "10",
        "--n-bags",
        "10",
        "--out",
        p(&out),
    ];
    assert_eq!(ice(&args), EXIT_OK);
    let first = fs::read(&out).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "dataset,method,fold,auc,mean_models,seconds");
    assert_eq!(lines.len(), 1 + 2 * 2 * 5);
    assert!(lines[1].starts_with("one,bagging,0,"));
    assert!(dir.path().join("report.summary.json").exists());
    assert!(dir.path().join("report.meta.json").exists());
    assert_eq!(ice(&args), EXIT_OK);
    assert_eq!(fs::read(&out).unwrap(), first);
}

#[test]
fn ablate_evidence_sweep_run() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    toy_csv(&csv, 90, 0);
    let abl = dir.path().join("abl.csv");
    let small = ["--folds", "3", "--clusters", "8", "--n-bags", "5"];
    let mut args = vec![
        "ablate",
        "--data",
        p(&csv),
        "--variants",
        "none,c2,all",
        "--out",
        p(&abl),
    ];
    args.extend(small);
    assert_eq!(ice(&args), EXIT_OK);
    let text = fs::read_to_string(&abl).unwrap();
    for m in ["bagging", "ablate-none", "ablate-c2", "ablate-c1+c2+c3"] {
        assert_eq!(
            text.lines()
                .filter(|l| l.split(',').nth(1) == Some(m))
                .count(),
            3,
            "{m}"
        );
    }
    let mut bad = vec![
        "ablate",
        "--data",
        p(&csv),
        "--variants",
        "c4",
        "--out",
        p(&abl),
    ];
    bad.extend(small);
    assert_eq!(ice(&bad), EXIT_USAGE);

    let ev = dir.path().join("ev.json");
    assert_eq!(
        ice(&["evidence", "--data", p(&csv), "--out", p(&ev)]),
        EXIT_OK
    );
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&ev).unwrap()).unwrap();
    assert_eq!(v["gain"].as_array().unwrap().len(), 3);

    let sw = dir.path().join("sweep.csv");
    let mut args = vec![
        "sweep",
        "--data",
        p(&csv),
        "--w-grid",
        "0,0.4",
        "--s-grid",
        "0.5",
        "--out",
        p(&sw),
    ];
    args.extend(small);
    assert_eq!(ice(&args), EXIT_OK);
    assert_eq!(fs::read_to_string(&sw).unwrap().lines().count(), 1 + 3 * 2);
}
