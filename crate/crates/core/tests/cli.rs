//! End-to-end tests of the `ruinprob` binary: exit codes, output routing,
//! and byte-level determinism of the emitted CSV.

use std::path::Path;
use std::process::{Command, Output};

fn ruinprob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ruinprob"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).expect("output should be UTF-8")
}

#[test]
fn help_and_version_exit_zero() {
    let h = ruinprob(&["--help"]);
    assert_eq!(h.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&h.stdout).contains("compute"));
    let v = ruinprob(&["--version"]);
    assert_eq!(v.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&v.stdout).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn usage_errors_exit_two() {
    // Unknown flag.
    let out = ruinprob(&["compute", "--nonsense"]);
    assert_eq!(out.status.code(), Some(2));
    // Missing required settings.
    let out = ruinprob(&["compute", "--case", "exp-exp"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda"));
    // Empty reserve grid.
    let out = ruinprob(&[
        "compute", "--case", "exp-exp", "--lambda", "1", "--mu", "2", "--premium", "const:1",
        "--u", "0:10:0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // Bad premium grammar.
    let out = ruinprob(&[
        "compute", "--case", "exp-exp", "--lambda", "1", "--mu", "2", "--premium", "cubic:1",
        "--u", "0:10:11",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // simulate with zero paths.
    let out = ruinprob(&[
        "simulate", "--case", "exp-exp", "--lambda", "1", "--mu", "2", "--premium", "const:1",
        "--u", "0:2:2", "--paths", "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_three() {
    // Safe-load boundary λ = μc/2 is degenerate for the root report.
    let out = ruinprob(&[
        "roots", "--case", "exp-erlang2", "--lambda", "1", "--mu", "2", "--premium", "const:1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn unsafe_load_is_reported_not_fatal() {
    let out = ruinprob(&[
        "check", "--case", "exp-exp", "--lambda", "3", "--mu", "1", "--premium", "const:1",
    ]);
    let text = stdout_of(&out);
    assert!(text.lines().any(|l| l == "safe_load,false"), "missing verdict in:\n{text}");
}

#[test]
fn compute_output_is_identical_across_reruns() {
    let args = [
        "compute", "--case", "erlang2-exp", "--lambda", "1", "--mu", "2", "--premium",
        "linear:1,0.5", "--u", "0:8:9",
    ];
    let a = stdout_of(&ruinprob(&args));
    let b = stdout_of(&ruinprob(&args));
    assert_eq!(a, b);
    assert!(a.starts_with("# ruinprob "));
    assert!(a.lines().any(|l| l == "u,psi,err,method"));
    assert_eq!(a.lines().filter(|l| !l.starts_with('#')).count(), 10); // header + 9 rows
    assert!(!a.to_lowercase().contains("time"), "no timestamps in provenance");
}

#[test]
fn output_flag_writes_file_instead_of_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let args = [
        "compute", "--case", "exp-exp", "--lambda", "1", "--mu", "2", "--premium", "const:1",
        "--u", "0:5:6",
    ];
    let piped = stdout_of(&ruinprob(&args));
    let out = ruinprob(
        &[&args[..], &["--output", path.to_str().unwrap()]].concat(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty(), "file mode must not also print");
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written, piped, "file and stdout bytes must agree");
}

#[test]
fn simulate_same_seed_same_bytes_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "simulate", "--case", "exp-erlang2", "--lambda", "1", "--mu", "1", "--premium", "const:3",
        "--u", "0:3:3", "--paths", "3000", "--horizon", "50", "--seed", "4242",
    ];
    let mut files: Vec<Vec<u8>> = Vec::new();
    for workers in ["1", "4", "16"] {
        let path = dir.path().join(format!("sim{workers}.csv"));
        let out = ruinprob(
            &[&base[..], &["--workers", workers, "--output", path.to_str().unwrap()]].concat(),
        );
        assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        files.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(files[0], files[1], "1 vs 4 workers");
    assert_eq!(files[0], files[2], "1 vs 16 workers");
    let text = String::from_utf8(files[0].clone()).unwrap();
    assert!(
        text.lines().any(|l| l.starts_with('#') && l.contains("seed=4242")),
        "seed must be recorded in the header:\n{text}"
    );
    // Different seed, different estimates.
    let other = stdout_of(&ruinprob(&[&base[..15], &["--seed", "4243"]].concat()));
    let grab = |t: &str| -> Vec<String> {
        t.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.to_string()).collect()
    };
    assert_ne!(grab(&text), grab(&other), "seed must actually steer the RNG");
}

#[test]
fn dump_config_round_trips_through_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    let args = [
        "compute", "--case", "erlang2-exp", "--lambda", "1", "--mu", "2", "--premium",
        "linear:1,0.5", "--u", "0:6:7", "--spacing", "geometric:1.3", "--method", "exact",
        "--tol", "1e-9", "--seed", "7",
    ];
    let dump = ruinprob(&[&args[..], &["--dump-config", conf.to_str().unwrap()]].concat());
    assert_eq!(dump.status.code(), Some(0));
    assert!(dump.stdout.is_empty(), "--dump-config must not run the command");
    let direct = stdout_of(&ruinprob(&args));
    let via_file = stdout_of(&ruinprob(&["compute", "--config", conf.to_str().unwrap()]));
    assert_eq!(via_file, direct, "config file must reproduce the flag run");
    // And the dump itself parses as key = value lines only.
    let text = std::fs::read_to_string(&conf).unwrap();
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        assert!(line.contains(" = "), "bad dump line {line:?}");
    }
    assert!(text.contains("command = compute"));
}

#[test]
fn compare_table_has_expected_shape() {
    let out = ruinprob(&[
        "compare", "--case", "erlang2-exp", "--lambda", "1", "--mu", "2", "--premium",
        "linear:1,0.5", "--u", "4:40:10",
    ]);
    let text = stdout_of(&out);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 10);
    for w in rows.windows(2) {
        assert!(w[1][3] < w[0][3], "ratio must fall with u: {w:?}");
    }
    for r in &rows {
        assert!(r[1] <= r[2], "linear premium cannot raise the ruin probability: {r:?}");
    }
}

/// The worked example from the interface contract: classical model,
/// c = 1, λ = 1, μ = 2 on 0:10:11 — ψ(0) = λ/(cμ) = 1/2.
#[test]
fn contract_example_classical_curve() {
    let text = stdout_of(&ruinprob(&[
        "compute", "--case", "exp-exp", "--lambda", "1", "--mu", "2", "--premium", "const:1",
        "--u", "0:10:11",
    ]));
    let rows: Vec<Vec<String>> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][0], "0");
    assert_eq!(rows[10][0], "10");
    let psi0: f64 = rows[0][1].parse().unwrap();
    assert!((psi0 - 0.5).abs() < 1e-12);
    for r in &rows {
        assert_eq!(r[3], "exact");
    }
}

#[test]
fn config_file_grammar_accepts_comments_and_blanks() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("job.conf");
    std::fs::write(
        &conf,
        "# ruin job\n\ncase = exp-erlang2\nlambda = 1\nmu = 1\n\
         premium = const:3   # generous margin\nu = 0:4:5\n",
    )
    .unwrap();
    let text = stdout_of(&ruinprob(&["compute", "--config", conf.to_str().unwrap()]));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 6);
    assert!(Path::new(conf.to_str().unwrap()).exists());
}
