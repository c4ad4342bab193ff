use std::io::Write;
use std::process::{Command, Output, Stdio};

fn qstat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qstat"))
        .args(args)
        .env_remove("QSTAT_SEED")
        .output()
        .expect("run qstat")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = qstat(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

#[test]
fn eval_examples() {
    assert_eq!(ok(&["eval", "--q", "1", "--m", "0", "--sigma2", "1", "--x", "0", "--what", "pdf"]), "0.398942280401433\n");
    assert_eq!(ok(&["eval", "--q", "2", "--m", "0", "--sigma2", "1", "--x", "1", "--what", "cdf"]), "0.75\n");
    let u: f64 = ok(&["eval", "--q", "1.5", "--x", "0.3", "--what", "quantile"]).trim().parse().unwrap();
    let back: f64 = ok(&["eval", "--q", "1.5", "--x", &u.to_string(), "--what", "cdf"]).trim().parse().unwrap();
    assert!((back - 0.3).abs() < 1e-13);
}

#[test]
fn domain_errors_exit_2() {
    let o = qstat(&["eval", "--q", "3", "--m", "0", "--sigma2", "1", "--x", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("q must be < 3"), "{err}");
    assert_eq!(err.lines().count(), 1);

    assert_eq!(qstat(&["eval", "--q", "1", "--sigma2", "-1", "--x", "0"]).status.code(), Some(2));
    assert_eq!(qstat(&["eval", "--q", "1"]).status.code(), Some(2));
}

#[test]
fn divergent_moment_exits_3() {
    let o = qstat(&["moments", "--q", "1.5", "--order", "4"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn moments_example() {
    let out = ok(&["moments", "--q", "1.5", "--order", "2", "--kind", "raw", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["closed"].as_f64(), Some(3.0));
    assert!((v["oracle"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert!(v["oracle_error"].as_f64().unwrap() < 1e-9);

    let text = ok(&["moments", "--q", "1.5", "--order", "2"]);
    assert!(text.contains("closed        3.0"), "{text}");
}

#[test]
fn laplace_example() {
    assert_eq!(ok(&["laplace", "--q", "1", "--m", "0", "--sigma2", "1", "--theta", "1"]), "1.64872127070013\n");
    let oracle: f64 = ok(&["laplace", "--q", "1.2", "--theta", "0.1", "--method", "oracle"]).trim().parse().unwrap();
    let closed: f64 = ok(&["laplace", "--q", "1.2", "--theta", "0.1"]).trim().parse().unwrap();
    assert!(((oracle - closed) / oracle).abs() < 1e-7);
}

#[test]
fn sample_is_reproducible() {
    let a = ok(&["sample", "--q", "1", "--n", "3", "--seed", "42"]);
    assert_eq!(a.lines().count(), 3);
    assert_eq!(a, ok(&["sample", "--q", "1", "--n", "3", "--seed", "42"]));
    assert_ne!(a, ok(&["sample", "--q", "1", "--n", "3", "--seed", "43"]));

    let env = Command::new(env!("CARGO_BIN_EXE_qstat"))
        .args(["sample", "--q", "1", "--n", "3"])
        .env("QSTAT_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(stdout(&env), a);
}

#[test]
fn estimate_reads_stdin() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_qstat"))
        .args(["estimate", "--q", "1", "--sigma2-known", "4", "--format", "json"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"1\n-1\n\n3\n-3\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["stats"]["n"], 4);
    assert_eq!(v["stats"]["mean"].as_f64(), Some(0.0));
    assert_eq!(v["stats"]["s2"].as_f64(), Some(5.0));
    let hw = v["interval"]["hi"].as_f64().unwrap();
    assert!((hw - 1.959963984540054).abs() < 1e-12, "{hw}");
}

#[test]
fn estimate_rejects_garbage() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_qstat"))
        .args(["estimate", "--q", "1"])
        .stdin(Stdio::piped())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"1\nabc\n").unwrap();
    assert_eq!(child.wait().unwrap().code(), Some(2));
}

#[test]
fn verify_grid_and_formats() {
    let o = qstat(&["verify", "--no-monte-carlo", "--q-grid", "1.9", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let entries = v["entries"].as_array().unwrap();
    let status = |name: &str| entries.iter().find(|e| e["name"] == name).unwrap()["status"].clone();
    assert_eq!(status("kurtosis q=1.9"), "SKIPPED-divergent");
    assert_eq!(status("variance q=1.9"), "SKIPPED-divergent");
    assert_eq!(status("laplace-sign"), "PASS");
    let failed = v["summary"]["fail"].as_u64().unwrap();
    assert_eq!(o.status.code(), Some(if failed == 0 { 0 } else { 1 }));

    let csv = qstat(&["verify", "--no-monte-carlo", "--q-grid", "1", "--format", "csv"]);
    let json = qstat(&["verify", "--no-monte-carlo", "--q-grid", "1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    let csv = stdout(&csv);
    assert_eq!(csv.lines().next(), Some("name,locus,closed,oracle,abs_err,rel_err,status"));
    assert_eq!(csv.lines().count(), 1 + v["entries"].as_array().unwrap().len());
}

#[test]
fn looser_tolerance_never_adds_failures() {
    let count = |scale: &str| {
        let o = qstat(&["verify", "--no-monte-carlo", "--tol-scale", scale, "--format", "json"]);
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v["summary"]["fail"].as_u64().unwrap()
    };
    assert!(count("1e-3") <= count("1"));
}

#[test]
fn json_round_trips() {
    let out = ok(&["laplace", "--q", "1.3", "--theta", "0.05", "--format", "json"]);
    let eval: qstat_core::LaplaceEval = serde_json::from_str(&out).unwrap();
    assert_eq!(serde_json::to_string_pretty(&eval).unwrap() + "\n", out);

    let out = qstat(&["verify", "--no-monte-carlo", "--q-grid", "1.9,1.2", "--format", "json"]);
    let text = stdout(&out);
    let report: qstat_core::VerifyReport = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&report).unwrap() + "\n", text);
}
