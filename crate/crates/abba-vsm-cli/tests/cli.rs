//! End-to-end tests of the command-line interface: flows, outputs, and exit
//! codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_abba-vsm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should run")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Separable toy data: ascending ramps labeled `up`, descending labeled
/// `down`, with small per-sample slope variation.
fn write_ramp_dataset(path: &Path, per_class: usize, len: usize) {
    let mut text = String::new();
    for i in 0..per_class {
        let slope = 1.0 + i as f64 * 0.002;
        text.push_str("up");
        for t in 0..len {
            text.push_str(&format!("\t{}", t as f64 * slope));
        }
        text.push('\n');
    }
    for i in 0..per_class {
        let slope = 1.0 + i as f64 * 0.002;
        text.push_str("down");
        for t in 0..len {
            text.push_str(&format!("\t{}", -(t as f64) * slope));
        }
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

struct Workdir {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

fn workdir() -> Workdir {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    Workdir { _dir: dir, root }
}

#[test]
fn compress_writes_one_record_per_row() {
    let w = workdir();
    let data = w.root.join("ramps.tsv");
    write_ramp_dataset(&data, 5, 40);
    let out_path = w.root.join("ramps.abbaseg");

    let out = run(&[
        "compress",
        "--input",
        data.to_str().unwrap(),
        "--rt",
        "0.1",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("samples: 10"));

    let text = std::fs::read_to_string(&out_path).unwrap();
    // header line + one record per input row
    assert_eq!(text.lines().count(), 11);
    // ramps are exactly linear: every record carries a single segment
    for line in text.lines().skip(1) {
        assert_eq!(
            line.matches('[').count(),
            2,
            "expected one segment in {line}"
        );
    }
}

#[test]
fn zero_tolerance_is_an_infeasible_configuration() {
    let w = workdir();
    let data = w.root.join("ramps.tsv");
    write_ramp_dataset(&data, 3, 20);
    let out = run(&[
        "compress",
        "--input",
        data.to_str().unwrap(),
        "--rt",
        "0",
        "--output",
        w.root.join("x.abbaseg").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));
}

#[test]
fn missing_input_is_an_input_error() {
    let w = workdir();
    let out = run(&[
        "compress",
        "--input",
        w.root.join("nope.tsv").to_str().unwrap(),
        "--rt",
        "0.1",
        "--output",
        w.root.join("x.abbaseg").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
}

#[test]
fn train_predict_flow_recovers_labels() {
    let w = workdir();
    let data = w.root.join("ramps.tsv");
    write_ramp_dataset(&data, 8, 50);
    let model = w.root.join("model.json");
    let preds = w.root.join("preds.csv");

    let out = run(&[
        "train",
        "--input",
        data.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--wsize",
        "1",
        "--allow-any-params",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("alphabet_size: 2"), "stdout: {text}");
    assert!(text.contains("class down:") && text.contains("class up:"));

    let out = run(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--input",
        data.to_str().unwrap(),
        "--output",
        preds.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let csv = std::fs::read_to_string(&preds).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sample_id,predicted,score_down,score_up"
    );
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], i.to_string());
        let expected = if i < 8 { "up" } else { "down" };
        assert_eq!(fields[1], expected, "row {i} of {csv}");
        rows += 1;
    }
    assert_eq!(rows, 16);
}

#[test]
fn train_from_segment_stream_warns_on_rt_mismatch() {
    let w = workdir();
    let data = w.root.join("ramps.tsv");
    write_ramp_dataset(&data, 6, 40);
    let stream = w.root.join("ramps.abbaseg");
    let model = w.root.join("model.json");

    let out = run(&[
        "compress",
        "--input",
        data.to_str().unwrap(),
        "--rt",
        "0.1",
        "--output",
        stream.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let out = run(&[
        "train",
        "--input",
        stream.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--rt",
        "0.3",
        "--wsize",
        "1",
        "--allow-any-params",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(
        stderr(&out).contains("warning:") && stderr(&out).contains("rt=0.1"),
        "stderr: {}",
        stderr(&out)
    );
    assert!(model.exists());

    // predicting from the same stream warns the same way and still works
    let preds = w.root.join("preds.csv");
    let out = run(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--input",
        stream.to_str().unwrap(),
        "--output",
        preds.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("warning:"), "stderr: {}", stderr(&out));
    assert_eq!(std::fs::read_to_string(&preds).unwrap().lines().count(), 13);
}

#[test]
fn repeated_evaluate_runs_write_identical_predictions() {
    let w = workdir();
    let data = w.root.join("ramps.tsv");
    write_ramp_dataset(&data, 10, 60);
    let run_once = |tag: &str| {
        let preds = w.root.join(format!("preds_{tag}.csv"));
        let out = run(&[
            "evaluate",
            "--input",
            data.to_str().unwrap(),
            "--wsize",
            "1",
            "--allow-any-params",
            "--seed",
            "99",
            "--predictions",
            preds.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", stderr(&out));
        std::fs::read(&preds).unwrap()
    };
    assert_eq!(run_once("a"), run_once("b"), "separate processes must agree byte-for-byte");
}

#[test]
fn evaluate_reports_perfect_accuracy_on_separable_data() {
    let w = workdir();
    let data = w.root.join("ramps.tsv");
    write_ramp_dataset(&data, 10, 60);
    let report = w.root.join("report.json");

    let out = run(&[
        "evaluate",
        "--input",
        data.to_str().unwrap(),
        "--wsize",
        "1",
        "--allow-any-params",
        "--report",
        report.to_str().unwrap(),
        "--rt-sweep",
        "--sweep-values",
        "0.01,0.1,0.5",
        "--sweep-output",
        w.root.join("sweep.tsv").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(
        stdout(&out).contains("accuracy: 1.0000"),
        "stdout: {}",
        stdout(&out)
    );

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["accuracy"], 1.0);
    assert_eq!(json["dataset"], "ramps");

    let sweep = std::fs::read_to_string(w.root.join("sweep.tsv")).unwrap();
    assert_eq!(sweep.lines().count(), 4);
    assert!(sweep.starts_with("rt\tmean_cr\tmean_segment_fraction\n"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let w = workdir();
    let data = w.root.join("ramps.tsv");
    write_ramp_dataset(&data, 6, 40);
    let config = w.root.join("run.toml");
    std::fs::write(&config, "rt = 0.5\nwsize = 2\nseed = 9\n").unwrap();
    let report = w.root.join("report.json");

    let out = run(&[
        "evaluate",
        "--input",
        data.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--rt",
        "0.3",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    // flag wins over file, file wins over default
    assert_eq!(json["config"]["rt"], 0.3);
    assert_eq!(json["config"]["wsize"], 2);
    assert_eq!(json["config"]["seed"], 9);
}

#[test]
fn grid_search_honors_budget_and_writes_outputs() {
    let w = workdir();
    let data = w.root.join("ramps.tsv");
    write_ramp_dataset(&data, 6, 40);
    let results = w.root.join("results.csv");
    let best = w.root.join("best.json");

    let out = run(&[
        "grid-search",
        "--input",
        data.to_str().unwrap(),
        "--ctype",
        "sorting_based",
        "--rt-values",
        "0.1,0.3",
        "--ct-values",
        "0.1",
        "--wsize-values",
        "2,3",
        "--wstep-values",
        "1",
        "--tsize-values",
        "0.2",
        "--budget",
        "3",
        "--results",
        results.to_str().unwrap(),
        "--best",
        best.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("configs_evaluated: 3"));

    let csv = std::fs::read_to_string(&results).unwrap();
    assert_eq!(csv.lines().count(), 4); // header + 3 rows
    let best_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&best).unwrap()).unwrap();
    assert!(best_json["accuracy"].as_f64().unwrap() >= 0.0);
}

#[test]
fn zero_budget_exits_with_code_3() {
    let w = workdir();
    let data = w.root.join("ramps.tsv");
    write_ramp_dataset(&data, 4, 30);
    let out = run(&[
        "grid-search",
        "--input",
        data.to_str().unwrap(),
        "--budget",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));
}

#[test]
fn corrupted_model_is_an_input_error() {
    let w = workdir();
    let data = w.root.join("ramps.tsv");
    write_ramp_dataset(&data, 4, 30);
    let model = w.root.join("model.json");
    std::fs::write(&model, "{ not json").unwrap();
    let out = run(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--input",
        data.to_str().unwrap(),
        "--output",
        w.root.join("p.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
}
