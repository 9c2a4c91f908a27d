//! End-to-end checks of the `nsvm` binary: exit codes, file outputs, and
//! determinism of generated artifacts.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nsvm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsvm"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Report lines that legitimately differ between runs.
fn strip_timing(report: &str) -> String {
    report
        .lines()
        .filter(|l| !l.contains("wall_time"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn gen_xor_writes_four_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = nsvm(&["gen", "--dataset", "xor", "--out", "xor.csv"], dir.path());
    assert_exit(&out, 0);
    let content = fs::read_to_string(dir.path().join("xor.csv")).unwrap();
    assert_eq!(content.lines().count(), 4);
}

#[test]
fn gen_cross_planes_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "gen",
        "--dataset",
        "cross-planes",
        "--per-class",
        "100",
        "--noise",
        "0.05",
        "--outliers",
        "0.05",
        "--seed",
        "7",
        "--out",
        "a.csv",
    ];
    assert_exit(&nsvm(&args, dir.path()), 0);
    let mut args2 = args;
    args2[args.len() - 1] = "b.csv";
    assert_exit(&nsvm(&args2, dir.path()), 0);
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 400);
}

#[test]
fn gen_rejects_bad_outlier_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let out = nsvm(
        &[
            "gen",
            "--dataset",
            "cross-planes",
            "--outliers",
            "0.9",
            "--out",
            "x.csv",
        ],
        dir.path(),
    );
    assert_exit(&out, 2);
}

#[test]
fn train_gepsvm_on_xor_reports_perfect_fit() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &nsvm(&["gen", "--dataset", "xor", "--out", "xor.csv"], dir.path()),
        0,
    );
    let out = nsvm(
        &[
            "train", "--data", "xor.csv", "--algo", "gepsvm", "--delta", "0.01", "--out", "m.nsvm",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("train_accuracy=1.0000"), "{stdout}");
    assert!(dir.path().join("m.nsvm").exists());
}

#[test]
fn train_missing_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = nsvm(
        &[
            "train",
            "--data",
            "absent.csv",
            "--algo",
            "nsvm",
            "--out",
            "m.nsvm",
        ],
        dir.path(),
    );
    assert_exit(&out, 2);
}

#[test]
fn train_nsvm_writes_solver_summary() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &nsvm(
            &[
                "gen",
                "--dataset",
                "cross-planes",
                "--per-class",
                "25",
                "--seed",
                "7",
                "--out",
                "cp.csv",
            ],
            dir.path(),
        ),
        0,
    );
    let out = nsvm(
        &[
            "train",
            "--data",
            "cp.csv",
            "--algo",
            "nsvm",
            "--c1",
            "0.0625",
            "--c2",
            "0.015625",
            "--L",
            "16",
            "--max-iter",
            "200",
            "--seed",
            "7",
            "--out",
            "m.nsvm",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("iterations="), "{stdout}");
    assert!(stdout.contains("final_step_norm="), "{stdout}");
}

#[test]
fn predict_round_trips_labels() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &nsvm(&["gen", "--dataset", "xor", "--out", "xor.csv"], dir.path()),
        0,
    );
    assert_exit(
        &nsvm(
            &[
                "train",
                "--data",
                "xor.csv",
                "--algo",
                "nsvm-kernel",
                "--kernel",
                "rbf",
                "--sigma",
                "1",
                "--out",
                "m.nsvm",
            ],
            dir.path(),
        ),
        0,
    );
    assert_exit(
        &nsvm(
            &[
                "predict", "--model", "m.nsvm", "--data", "xor.csv", "--out", "pred.csv",
            ],
            dir.path(),
        ),
        0,
    );
    let pred = fs::read_to_string(dir.path().join("pred.csv")).unwrap();
    let mut lines = pred.lines();
    assert_eq!(lines.next(), Some("index,predicted_label"));
    let got: Vec<&str> = lines.collect();
    assert_eq!(got, vec!["0,1", "1,1", "2,2", "3,2"]);

    // saved model predicts identically on a second run
    assert_exit(
        &nsvm(
            &[
                "predict",
                "--model",
                "m.nsvm",
                "--data",
                "xor.csv",
                "--out",
                "pred2.csv",
            ],
            dir.path(),
        ),
        0,
    );
    assert_eq!(
        fs::read(dir.path().join("pred.csv")).unwrap(),
        fs::read(dir.path().join("pred2.csv")).unwrap()
    );
}

#[test]
fn predict_dimension_mismatch_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &nsvm(&["gen", "--dataset", "xor", "--out", "xor.csv"], dir.path()),
        0,
    );
    assert_exit(
        &nsvm(
            &[
                "train", "--data", "xor.csv", "--algo", "pcc", "--out", "m.nsvm",
            ],
            dir.path(),
        ),
        0,
    );
    fs::write(dir.path().join("wide.csv"), "1,2,3,a\n4,5,6,b\n").unwrap();
    let out = nsvm(
        &[
            "predict", "--model", "m.nsvm", "--data", "wide.csv", "--out", "p.csv",
        ],
        dir.path(),
    );
    assert_exit(&out, 2);
}

#[test]
fn cv_rejects_single_fold() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &nsvm(&["gen", "--dataset", "xor", "--out", "xor.csv"], dir.path()),
        0,
    );
    let out = nsvm(
        &[
            "cv", "--data", "xor.csv", "--algo", "pcc", "--folds", "1", "--out", "r.txt",
        ],
        dir.path(),
    );
    assert_exit(&out, 2);
}

#[test]
fn cv_report_is_deterministic_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &nsvm(
            &[
                "gen",
                "--dataset",
                "cross-planes",
                "--per-class",
                "25",
                "--seed",
                "3",
                "--out",
                "cp.csv",
            ],
            dir.path(),
        ),
        0,
    );
    let args = [
        "cv",
        "--data",
        "cp.csv",
        "--algo",
        "lstsvm",
        "--folds",
        "5",
        "--seed",
        "11",
        "--grid",
        "lambda:0.25,1,4;delta:0.25,1,4",
        "--out",
        "r1.txt",
    ];
    assert_exit(&nsvm(&args, dir.path()), 0);
    let mut args2 = args;
    args2[args.len() - 1] = "r2.txt";
    assert_exit(&nsvm(&args2, dir.path()), 0);
    let r1 = fs::read_to_string(dir.path().join("r1.txt")).unwrap();
    let r2 = fs::read_to_string(dir.path().join("r2.txt")).unwrap();
    assert_eq!(strip_timing(&r1), strip_timing(&r2));
    assert!(r1.contains("best lambda"));
    assert!(r1.contains("mean_accuracy"));
    assert!(r1.contains("fold_accuracy"));
}

#[test]
fn cv_unknown_grid_axis_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &nsvm(&["gen", "--dataset", "xor", "--out", "xor.csv"], dir.path()),
        0,
    );
    let out = nsvm(
        &[
            "cv",
            "--data",
            "xor.csv",
            "--algo",
            "pcc",
            "--folds",
            "2",
            "--grid",
            "delta:1,2",
            "--out",
            "r.txt",
        ],
        dir.path(),
    );
    assert_exit(&out, 2);
}

#[test]
fn libsvm_input_format_works() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("data.libsvm"),
        "1 1:1 2:1\n1 1:-1 2:-1\n2 1:1 2:-1\n2 1:-1 2:1\n",
    )
    .unwrap();
    let out = nsvm(
        &[
            "train",
            "--data",
            "data.libsvm",
            "--format",
            "libsvm",
            "--algo",
            "gepsvm",
            "--delta",
            "0.01",
            "--out",
            "m.nsvm",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("train_accuracy=1.0000"));
}
