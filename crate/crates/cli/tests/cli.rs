use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CORRIDOR: &str = "#####\n#@$.#\n#####\n";

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn sokorl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sokorl"))
        .arg("--data-dir")
        .arg(data_dir())
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Trains on the first few Microban levels with short settings.
fn quick_train(out: &Path, extra: &[&str]) -> Output {
    let train = out.join("train.xsb");
    let text = fs::read_to_string(data_dir().join("microban.xsb")).unwrap();
    let levels: Vec<&str> = text.split("\n\n").take(12).collect();
    fs::write(&train, levels.join("\n\n")).unwrap();
    let mut args = vec![
        "train",
        "--levels",
        train.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "--iterations",
        "3",
        "--seed",
        "4",
    ];
    args.extend_from_slice(extra);
    sokorl(&args)
}

#[test]
fn train_is_deterministic_and_solve_prints_lurd() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(quick_train(a.path(), &[]).status.success());
    assert!(quick_train(b.path(), &[]).status.success());
    for name in ["backward.weights", "forward.weights", "forward_report.csv"] {
        let x = fs::read_to_string(a.path().join(name)).unwrap();
        let y = fs::read_to_string(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between identical runs");
    }
    let report = fs::read_to_string(a.path().join("forward_report.csv")).unwrap();
    assert!(report.starts_with("iteration,alpha,solved,expansions,Targets,Distance"));
    assert_eq!(report.lines().count(), 4);

    let level = a.path().join("corridor.xsb");
    fs::write(&level, CORRIDOR).unwrap();
    let dir = a.path().to_str().unwrap();
    let out = sokorl(&["solve", "--level", level.to_str().unwrap(), "--weights-dir", dir]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "R");

    let far = a.path().join("far.xsb");
    fs::write(&far, "#######\n#@$  .#\n#######\n").unwrap();
    let out = sokorl(&["solve", "--level", far.to_str().unwrap(), "--weights-dir", dir, "--forward-cap", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout(&out).trim(), "FAILED");
}

#[test]
fn no_hints_weights_omit_hint_features() {
    let dir = tempfile::tempdir().unwrap();
    assert!(quick_train(dir.path(), &["--no-hints"]).status.success());
    let fw = fs::read_to_string(dir.path().join("forward.weights")).unwrap();
    assert!(!fw.contains("Overlap") && !fw.contains("Perm"));
    assert!(fw.contains("Connectivity"));
    let bw = fs::read_to_string(dir.path().join("backward.weights")).unwrap();
    assert!(!bw.contains("Overlap"));
}

#[test]
fn mismatched_weights_are_rejected() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(quick_train(a.path(), &[]).status.success());
    assert!(quick_train(b.path(), &["--no-connectivity"]).status.success());
    let out = sokorl(&[
        "solve",
        "--level",
        "microban",
        "--backward",
        a.path().join("backward.weights").to_str().unwrap(),
        "--forward",
        b.path().join("forward.weights").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn replay_shows_frames() {
    let dir = tempfile::tempdir().unwrap();
    let level = dir.path().join("corridor.xsb");
    fs::write(&level, CORRIDOR).unwrap();
    let out = sokorl(&["replay", "--level", level.to_str().unwrap(), "--lurd", "R"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("step 1\n#####\n# @*#"));
    assert!(text.trim_end().ends_with("1 pushes, solved"));

    let out = sokorl(&["replay", "--level", level.to_str().unwrap(), "--lurd", "r"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("runs into a box"));
}

#[test]
fn benchmark_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    assert!(quick_train(dir.path(), &[]).status.success());
    let d = dir.path().to_str().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = sokorl(&[
            "benchmark",
            "--levels",
            "microban",
            "--subset",
            "6",
            "--weights-dir",
            d,
            "--forward-cap",
            "300",
            "--backward-cap",
            "300",
            "--no-timing",
            "--cap-sweep",
            "100,300",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        assert!(String::from_utf8_lossy(&o.stderr).contains("cap 100: solved"));
        fs::read_to_string(out).unwrap()
    };
    let (x, y) = (run("a.csv"), run("b.csv"));
    assert_eq!(x, y);
    assert_eq!(x.lines().count(), 7);
}
