//! End-to-end tests of the driver binary: exit-status contract, report
//! artifacts, and byte-level determinism of seeded runs.

use std::path::Path;
use std::process::{Command, Output};

fn riproj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riproj"))
        .args(args)
        .output()
        .expect("failed to spawn the driver binary")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn no_command_and_unknown_command_are_usage_errors() {
    let out = riproj(&[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("no command"), "stderr: {err}");

    let out = riproj(&["dance"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dance"), "stderr: {err}");
}

#[test]
fn gain_without_family_exits_1_naming_the_missing_family() {
    let out = riproj(&["gain"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("family"), "stderr: {err}");
    // With a family the same defaulted config runs: the hull gain of the
    // family's own uniform mixture is zero.
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("g");
    let out = riproj(&[
        "gain",
        "--family",
        "bernoulli:0.25:0.75:21",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = read(&out_dir.join("gain.csv"));
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "gain_value,gain_status,gain_upper,gain_upper_status,gap,iterations"
    );
    let row = lines.next().unwrap();
    let value: f64 = row.split(',').next().unwrap().parse().unwrap();
    assert!(value.abs() < 1e-9, "gain of the hull against itself: {row}");
}

#[test]
fn unknown_family_and_unknown_experiment_are_usage_errors() {
    let out = riproj(&["project", "--family", "klingon"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("klingon"));

    let out = riproj(&["rate", "--experiment", "weibull"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("weibull"));
}

#[test]
fn project_emits_trace_weights_summary_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("p");
    let out = riproj(&[
        "project",
        "--grid",
        "-20:20:2001",
        "--kmax",
        "50",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let trace = read(&out_dir.join("trace.csv"));
    let mut lines = trace.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("k,member,alpha,gain_value,gain_status"));
    assert!(header.ends_with("final_weight"));
    assert_eq!(lines.count(), 50, "one row per iteration");

    // The balanced two-member mixture: both final weights near one half.
    let weights = read(&out_dir.join("weights.csv"));
    let mut members = 0;
    for line in weights.lines().skip(1) {
        let w: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.4..=0.6).contains(&w), "final weight {w}");
        members += 1;
    }
    assert_eq!(members, 2);

    let manifest = read(&out_dir.join("MANIFEST"));
    assert!(manifest.contains("command = project"));
    assert!(manifest.contains("config_sha256 = "));
    assert!(manifest.contains("seed = 0"));
    assert!(manifest.contains(&format!("library_version = {}", env!("CARGO_PKG_VERSION"))));

    let summary = read(&out_dir.join("summary.jsonl"));
    assert!(summary.lines().last().unwrap().contains("\"ok\":true"));
}

#[test]
fn identical_config_and_seed_give_byte_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("s");
    let args = [
        "sequential",
        "--kmax",
        "500",
        "--seed",
        "11",
        "--out",
        out_dir.to_str().unwrap(),
    ];
    assert_eq!(riproj(&args).status.code(), Some(0));
    let runs1 = std::fs::read(out_dir.join("runs.csv")).unwrap();
    let summary1 = std::fs::read(out_dir.join("summary.jsonl")).unwrap();
    let manifest1 = std::fs::read(out_dir.join("MANIFEST")).unwrap();

    assert_eq!(riproj(&args).status.code(), Some(0));
    assert_eq!(runs1, std::fs::read(out_dir.join("runs.csv")).unwrap());
    assert_eq!(summary1, std::fs::read(out_dir.join("summary.jsonl")).unwrap());
    assert_eq!(manifest1, std::fs::read(out_dir.join("MANIFEST")).unwrap());

    // A different seed must actually reach the sampler.
    let mut other = args;
    other[4] = "12";
    assert_eq!(riproj(&other).status.code(), Some(0));
    assert_ne!(runs1, std::fs::read(out_dir.join("runs.csv")).unwrap());
}

#[test]
fn config_file_matches_flags_and_positional_command_overrides_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    let by_file = dir.path().join("file");
    let by_flags = dir.path().join("flags");
    std::fs::write(
        &cfg_path,
        "command = project\ngrid = -20:20:2001\nkmax = 50\nseed = 7\n# comment\n",
    )
    .unwrap();

    let out = riproj(&[
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        by_file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = riproj(&[
        "project",
        "--grid",
        "-20:20:2001",
        "--kmax",
        "50",
        "--seed",
        "7",
        "--out",
        by_flags.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        std::fs::read(by_file.join("trace.csv")).unwrap(),
        std::fs::read(by_flags.join("trace.csv")).unwrap(),
        "config file and equivalent flags disagree"
    );

    // A positional command overrides the config file's command.
    let override_dir = dir.path().join("override");
    let out = riproj(&[
        "rate",
        "--config",
        cfg_path.to_str().unwrap(),
        "--experiment",
        "geometric",
        "--out",
        override_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(read(&override_dir.join("MANIFEST")).contains("command = rate"));
}

#[test]
fn estat_verification_failure_exits_2_and_names_the_invariant() {
    // A crude projection (few iterations, narrow window) yields a ratio
    // statistic that genuinely fails e-statistic verification.
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("e");
    let out = riproj(&[
        "estat",
        "--grid",
        "-20:20:2001",
        "--kmax",
        "50",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("invariant violated"), "stderr: {err}");
    assert!(err.contains("generator integral"), "stderr: {err}");
    // The violation is also named in the report, which is still complete.
    let summary = read(&out_dir.join("summary.jsonl"));
    assert!(summary.contains("\"record\":\"violation\""));
    assert!(summary.contains("generator integral"));
    assert!(summary.lines().last().unwrap().contains("\"ok\":false"));
    assert!(out_dir.join("members.csv").exists());
    assert!(out_dir.join("MANIFEST").exists());
}

#[test]
fn rate_bernoulli_reports_rows_and_slope() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("r");
    let out = riproj(&["rate", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("fitted slope"), "stdout: {stdout}");

    let csv = read(&out_dir.join("rate.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "epsilon,delta,slack,bound,c_beta,status");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 7);
    for row in rows {
        assert!(row.ends_with(",exact"), "row: {row}");
        let cells: Vec<&str> = row.split(',').collect();
        let slack: f64 = cells[2].parse().unwrap();
        let bound: f64 = cells[3].parse().unwrap();
        assert!(slack <= bound + 1e-12, "row: {row}");
    }
    let summary = read(&out_dir.join("summary.jsonl"));
    assert!(summary.contains("\"record\":\"slope\""));
}

#[test]
fn subprob_epower_and_geometric_rate_run_clean() {
    let dir = tempfile::tempdir().unwrap();

    let sub = dir.path().join("sub");
    let out = riproj(&["subprob", "--support", "2000", "--out", sub.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let cap = read(&sub.join("cap.csv"));
    let row = cap.lines().nth(1).unwrap();
    let mass: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!(mass < 1.0, "cap row: {row}");
    assert!(row.contains("truncated"));
    let escape = read(&sub.join("escape.csv"));
    assert_eq!(escape.lines().count(), 2000, "header plus n = 2..=2000");
    assert!(escape.lines().nth(1).unwrap().starts_with("2,inf,diverged"));

    let ep = dir.path().join("ep");
    let out = riproj(&["epower", "--out", ep.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    for line in read(&ep.join("epower.csv")).lines().skip(1) {
        assert!(line.ends_with(",true"), "row: {line}");
    }

    let rg = dir.path().join("rg");
    let out = riproj(&["rate", "--experiment", "geometric", "--out", rg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = read(&rg.join("rate.csv"));
    assert_eq!(csv.lines().count(), 5, "header plus four members");
    for line in csv.lines().skip(1) {
        assert!(line.contains(",diverged,"), "row: {line}");
    }
}
