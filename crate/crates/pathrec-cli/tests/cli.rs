//! End-to-end checks of the `pathrec` binary: every subcommand runs against a
//! small synthetic dataset written into a temp directory, and the on-disk
//! contracts (bundle, config echo, history, checkpoint, CSV shapes,
//! determinism) are asserted on the real files.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn pathrec() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pathrec"))
}

fn run(args: &[&str]) -> Output {
    pathrec().args(args).output().expect("spawning the pathrec binary")
}

/// Runs the binary and panics with its stderr if it fails.
fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "`pathrec {}` failed:\n{}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Runs the binary expecting failure and returns stderr.
fn err(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        !out.status.success(),
        "`pathrec {}` unexpectedly succeeded:\n{}",
        args.join(" "),
        String::from_utf8_lossy(&out.stdout)
    );
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> String {
    p.to_str().expect("temp paths are valid UTF-8").to_string()
}

/// Writes a deterministic two-type dataset: 30 users, 20 items, five distinct
/// items per user, and a one-directed friendship chain over odd users.
fn write_dataset(dir: &Path, n_users: usize) {
    fs::create_dir_all(dir).unwrap();
    fs::write(
        dir.join("schema.txt"),
        "node user U\nnode item I\nrelation friendship user user friendship.dat\nrelation buys user item buys.dat\nuser_item buys\n",
    )
    .unwrap();
    let mut buys = String::new();
    for u in 1..=n_users {
        let items: BTreeSet<usize> = [1, 3, 7, 11, 13].iter().map(|m| (u * m) % 20 + 1).collect();
        for i in items {
            buys.push_str(&format!("{u}\t{i}\n"));
        }
    }
    fs::write(dir.join("buys.dat"), buys).unwrap();
    let mut friends = String::new();
    for u in (1..n_users).step_by(2) {
        friends.push_str(&format!("{u}\t{}\n", u + 1));
    }
    fs::write(dir.join("friendship.dat"), friends).unwrap();
}

/// Ingests the synthetic dataset and returns the bundle path.
fn ingest_dataset(tmp: &TempDir) -> PathBuf {
    let data = tmp.path().join("data");
    write_dataset(&data, 30);
    let bundle = tmp.path().join("synthetic.bundle");
    ok(&[
        "ingest",
        "--data-dir",
        &s(&data),
        "--out",
        &s(&bundle),
        "--min-interactions",
        "2",
    ]);
    bundle
}

const FAST: &[&str] = &[
    "--meta-path",
    "UUI",
    "--dim",
    "8",
    "--batch-size",
    "16",
    "--n-neg",
    "4",
    "--eval-k",
    "5",
    "--threads",
    "1",
];

fn train_fast(bundle: &Path, out: &Path, extra: &[&str]) -> String {
    let mut args_owned: Vec<String> = ["train", "--bundle", &s(bundle), "--out", &s(out)]
        .iter()
        .map(|a| a.to_string())
        .chain(FAST.iter().map(|a| a.to_string()))
        .chain(extra.iter().map(|a| a.to_string()))
        .collect();
    if !extra.contains(&"--epochs") {
        args_owned.extend(["--epochs".to_string(), "2".to_string()]);
    }
    let refs: Vec<&str> = args_owned.iter().map(String::as_str).collect();
    ok(&refs)
}

fn csv_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn ingest_writes_bundle_and_stats_report() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    write_dataset(&data, 30);
    let bundle = tmp.path().join("out.bundle");
    let stdout = ok(&[
        "ingest",
        "--data-dir",
        &s(&data),
        "--out",
        &s(&bundle),
        "--min-interactions",
        "2",
    ]);
    assert!(bundle.exists(), "bundle file missing");
    let report_path = tmp.path().join("out.bundle.stats.txt");
    assert!(report_path.exists(), "default stats report missing");
    let report = fs::read_to_string(&report_path).unwrap();
    for needle in [
        "raw graph",
        "filtered graph (min interactions 2, iterated)",
        "interaction density",
        "[interactions]",
        "split 80/10/10",
    ] {
        assert!(report.contains(needle), "report lacks `{needle}`:\n{report}");
    }
    assert!(stdout.contains("bundle written to"), "stdout: {stdout}");
}

#[test]
fn ingest_rejects_a_missing_data_dir() {
    let tmp = TempDir::new().unwrap();
    let stderr = err(&[
        "ingest",
        "--data-dir",
        &s(&tmp.path().join("nowhere")),
        "--out",
        &s(&tmp.path().join("x.bundle")),
    ]);
    assert!(stderr.contains("schema"), "stderr: {stderr}");
}

#[test]
fn ingest_subsample_reports_the_kept_fraction() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    write_dataset(&data, 30);
    let bundle = tmp.path().join("half.bundle");
    let stdout = ok(&[
        "ingest",
        "--data-dir",
        &s(&data),
        "--out",
        &s(&bundle),
        "--min-interactions",
        "1",
        "--subsample",
        "0.5",
    ]);
    assert!(stdout.contains("subsample: kept 50.0%"), "stdout: {stdout}");
    let stderr = err(&[
        "ingest",
        "--data-dir",
        &s(&data),
        "--out",
        &s(&bundle),
        "--subsample",
        "1.5",
    ]);
    assert!(stderr.contains("subsample"), "stderr: {stderr}");
}

#[test]
fn analyze_emits_one_csv_row_per_requested_bin() {
    let tmp = TempDir::new().unwrap();
    let bundle = ingest_dataset(&tmp);
    let table = tmp.path().join("corr.csv");
    let stdout = ok(&[
        "analyze",
        "--bundle",
        &s(&bundle),
        "--meta-path",
        "UUI",
        "--bins",
        "3",
        "--out",
        &s(&table),
    ]);
    assert!(stdout.contains("score 0 (no path)"), "stdout: {stdout}");
    let lines = csv_lines(&table);
    assert_eq!(lines[0], "bin_lo,bin_hi,probability,support");
    assert_eq!(lines.len(), 1 + 3, "expected 3 data rows:\n{}", lines.join("\n"));
}

#[test]
fn train_writes_config_history_and_checkpoint() {
    let tmp = TempDir::new().unwrap();
    let bundle = ingest_dataset(&tmp);
    let out = tmp.path().join("run");
    let stdout = train_fast(&bundle, &out, &[]);
    assert!(stdout.contains("best epoch"), "stdout: {stdout}");

    let resolved = fs::read_to_string(out.join("config.resolved")).unwrap();
    for needle in ["meta_path = UUI", "dim = 8", "max_epochs = 2", "eval_k = 5"] {
        assert!(resolved.contains(needle), "config.resolved lacks `{needle}`:\n{resolved}");
    }

    let lines = csv_lines(&out.join("history.csv"));
    assert_eq!(lines[0], "epoch,loss_rec,loss_pre,loss_con,val_recall5,val_ndcg5");
    assert_eq!(lines.len(), 1 + 2, "one row per epoch:\n{}", lines.join("\n"));
    assert!(lines[1].starts_with("0,") && lines[2].starts_with("1,"));

    let ckpt = fs::metadata(out.join("checkpoint.bin")).unwrap();
    assert!(ckpt.len() > 0, "checkpoint.bin is empty");
}

#[test]
fn train_with_zero_epochs_still_writes_a_usable_checkpoint() {
    let tmp = TempDir::new().unwrap();
    let bundle = ingest_dataset(&tmp);
    let out = tmp.path().join("untrained");
    let stdout = train_fast(&bundle, &out, &["--epochs", "0"]);
    assert!(stdout.contains("no epochs to run"), "stdout: {stdout}");

    let metrics = tmp.path().join("untrained.csv");
    let stdout = ok(&[
        "eval",
        "--checkpoint",
        &s(&out.join("checkpoint.bin")),
        "--bundle",
        &s(&bundle),
        "--ks",
        "5",
        "--out",
        &s(&metrics),
    ]);
    assert!(stdout.contains("recall@5"), "stdout: {stdout}");
    let lines = csv_lines(&metrics);
    assert_eq!(lines[0], "metric,k,value");
    assert_eq!(lines.len(), 1 + 2);
}

#[test]
fn resume_extends_the_history_without_a_second_header() {
    let tmp = TempDir::new().unwrap();
    let bundle = ingest_dataset(&tmp);
    let out = tmp.path().join("resumable");
    train_fast(&bundle, &out, &[]);
    let stdout = train_fast(
        &bundle,
        &out,
        &["--resume", &s(&out.join("checkpoint.bin")), "--epochs", "4"],
    );
    assert!(stdout.contains("epochs 2..4"), "stdout: {stdout}");

    let lines = csv_lines(&out.join("history.csv"));
    assert_eq!(lines.len(), 1 + 4, "header plus four epochs:\n{}", lines.join("\n"));
    for (i, line) in lines[1..].iter().enumerate() {
        assert!(line.starts_with(&format!("{i},")), "row {i} is `{line}`");
    }
}

#[test]
fn identical_invocations_produce_byte_identical_outputs() {
    let tmp = TempDir::new().unwrap();
    let bundle = ingest_dataset(&tmp);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    train_fast(&bundle, &a, &[]);
    train_fast(&bundle, &b, &[]);
    for file in ["history.csv", "checkpoint.bin", "config.resolved"] {
        let left = fs::read(a.join(file)).unwrap();
        let right = fs::read(b.join(file)).unwrap();
        assert_eq!(left, right, "{file} differs between identical runs");
    }

    let (ma, mb) = (tmp.path().join("a.csv"), tmp.path().join("b.csv"));
    for (dir, csv) in [(&a, &ma), (&b, &mb)] {
        ok(&[
            "eval",
            "--checkpoint",
            &s(&dir.join("checkpoint.bin")),
            "--bundle",
            &s(&bundle),
            "--out",
            &s(csv),
        ]);
    }
    assert_eq!(fs::read(&ma).unwrap(), fs::read(&mb).unwrap(), "metrics differ");
}

#[test]
fn the_resolved_config_reproduces_the_flag_run() {
    let tmp = TempDir::new().unwrap();
    let bundle = ingest_dataset(&tmp);
    let flags = tmp.path().join("flags");
    train_fast(&bundle, &flags, &["--learning-rate", "0.005", "--seed", "7"]);

    let echoed = tmp.path().join("echoed");
    ok(&[
        "train",
        "--bundle",
        &s(&bundle),
        "--out",
        &s(&echoed),
        "--config",
        &s(&flags.join("config.resolved")),
        "--threads",
        "1",
    ]);
    for file in ["history.csv", "checkpoint.bin", "config.resolved"] {
        assert_eq!(
            fs::read(flags.join(file)).unwrap(),
            fs::read(echoed.join(file)).unwrap(),
            "{file} differs between the flag run and its config echo"
        );
    }
}

#[test]
fn config_files_reject_unknown_and_duplicate_keys() {
    let tmp = TempDir::new().unwrap();
    let bundle = ingest_dataset(&tmp);

    let unknown = tmp.path().join("unknown.conf");
    fs::write(&unknown, "meta_path = UUI\nmomentum = 0.9\n").unwrap();
    let stderr = err(&[
        "train",
        "--bundle",
        &s(&bundle),
        "--out",
        &s(&tmp.path().join("x")),
        "--config",
        &s(&unknown),
    ]);
    assert!(stderr.contains("momentum"), "stderr: {stderr}");

    let duplicate = tmp.path().join("dup.conf");
    fs::write(&duplicate, "meta_path = UUI\ndim = 8\ndim = 16\n").unwrap();
    let stderr = err(&[
        "train",
        "--bundle",
        &s(&bundle),
        "--out",
        &s(&tmp.path().join("y")),
        "--config",
        &s(&duplicate),
    ]);
    assert!(stderr.contains("dim"), "stderr: {stderr}");
}

#[test]
fn train_rejects_an_unknown_meta_path_code() {
    let tmp = TempDir::new().unwrap();
    let bundle = ingest_dataset(&tmp);
    let stderr = err(&[
        "train",
        "--bundle",
        &s(&bundle),
        "--out",
        &s(&tmp.path().join("x")),
        "--meta-path",
        "UQI",
    ]);
    assert!(stderr.contains('Q'), "stderr: {stderr}");
}

#[test]
fn eval_rejects_a_bundle_with_different_shapes() {
    let tmp = TempDir::new().unwrap();
    let bundle = ingest_dataset(&tmp);
    let out = tmp.path().join("run");
    train_fast(&bundle, &out, &[]);

    let other_data = tmp.path().join("other");
    write_dataset(&other_data, 24);
    let other = tmp.path().join("other.bundle");
    ok(&[
        "ingest",
        "--data-dir",
        &s(&other_data),
        "--out",
        &s(&other),
        "--min-interactions",
        "2",
    ]);
    let stderr = err(&[
        "eval",
        "--checkpoint",
        &s(&out.join("checkpoint.bin")),
        "--bundle",
        &s(&other),
        "--out",
        &s(&tmp.path().join("m.csv")),
    ]);
    assert!(stderr.contains("checkpoint is for"), "stderr: {stderr}");
}

#[test]
fn sweep_emits_the_full_metric_grid_and_validates_the_axis() {
    let tmp = TempDir::new().unwrap();
    let bundle = ingest_dataset(&tmp);
    let table = tmp.path().join("sweep.csv");
    let mut args: Vec<String> = [
        "sweep",
        "--bundle",
        &s(&bundle),
        "--out",
        &s(&table),
        "--axis",
        "layers",
        "--values",
        "1,2",
        "--ks",
        "5,10",
        "--epochs",
        "2",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    args.extend(FAST.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    ok(&refs);
    let lines = csv_lines(&table);
    assert_eq!(lines[0], "axis,setting,metric,k,value");
    assert_eq!(lines.len(), 1 + 2 * 2 * 2, "two values x two depths x two metrics");
    assert!(lines[1..].iter().all(|l| l.starts_with("layers,")));

    let stderr = err(&[
        "sweep",
        "--bundle",
        &s(&bundle),
        "--out",
        &s(&table),
        "--axis",
        "temperature",
        "--values",
        "0.1",
        "--meta-path",
        "UUI",
    ]);
    assert!(stderr.contains("temperature"), "stderr: {stderr}");
}

#[test]
fn ablate_reports_every_variant_seed_cell() {
    let tmp = TempDir::new().unwrap();
    let bundle = ingest_dataset(&tmp);
    let table = tmp.path().join("ablation.csv");
    let mut args: Vec<String> = [
        "ablate",
        "--bundle",
        &s(&bundle),
        "--out",
        &s(&table),
        "--seeds",
        "0,1",
        "--variants",
        "full,rec-only",
        "--ks",
        "5",
        "--epochs",
        "2",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    args.extend(FAST.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let stdout = ok(&refs);
    assert!(stdout.contains("mean"), "stdout: {stdout}");
    let lines = csv_lines(&table);
    assert_eq!(lines[0], "variant,seed,metric,k,value");
    assert_eq!(lines.len(), 1 + 2 * 2 * 2, "two variants x two seeds x two metrics");
    let variants: BTreeSet<&str> =
        lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(variants, BTreeSet::from(["full", "rec-only"]));
}

#[test]
fn a_zero_thread_count_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let bundle = ingest_dataset(&tmp);
    let stderr = err(&[
        "train",
        "--bundle",
        &s(&bundle),
        "--out",
        &s(&tmp.path().join("x")),
        "--meta-path",
        "UUI",
        "--threads",
        "0",
    ]);
    assert!(stderr.contains("thread"), "stderr: {stderr}");
}
