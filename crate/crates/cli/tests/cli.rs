use std::process::Command;

fn vilenkin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_vilenkin"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn counterexample_csv_header_and_rows() {
    let out = vilenkin(&[
        "counterexample",
        "--radix",
        "2",
        "--resolution",
        "12",
        "--p",
        "0.5",
        "--format",
        "csv",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,alpha_k,M_alpha_k,phi,sum2a,sum2b,sum2c,env_half,env_34,ratio2a,ratio2b,ratio2c"
    );
    assert!(lines.count() >= 2);
}

#[test]
fn json_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json").to_string_lossy().into_owned();
    let mut runs = Vec::new();
    for _ in 0..2 {
        let out = vilenkin(&[
            "hardy",
            "--radix",
            "2,3,2",
            "--resolution",
            "5",
            "--trials",
            "40",
            "--seed",
            "5",
            "--out",
            &path,
        ]);
        assert!(out.status.success());
        runs.push(std::fs::read(&path).unwrap());
    }
    let (a, b) = (&runs[0], &runs[1]);
    assert_eq!(a, b);
    let json: serde_json::Value = serde_json::from_slice(a).unwrap();
    assert_eq!(json["config"]["seed"], 5);
    assert_eq!(json["config"]["radix"], "2,3,2");
    assert_eq!(json["trials"].as_array().unwrap().len(), 40);
}

#[test]
fn bounded_weight_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phi.csv");
    std::fs::write(&path, "n,phi\n1,2.0\n100,2.0\n").unwrap();
    let phi = format!("file:{}", path.display());
    let out = vilenkin(&["counterexample", "--resolution", "10", "--phi", &phi]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("weight"));
}

#[test]
fn exponent_outside_range_fails() {
    let out = vilenkin(&["paley", "--p", "1.5", "--resolution", "4"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("1.5"));
}

#[test]
fn identities_and_bench_pass() {
    let out = vilenkin(&[
        "identities",
        "--radix",
        "2,3,4",
        "--resolution",
        "4",
        "--trials",
        "5",
        "--format",
        "csv",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("check,value,passed"));
    assert!(text.contains("band_1_count"));
    let out = vilenkin(&[
        "bench",
        "--radix",
        "2",
        "--resolution",
        "6",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 8);
}

#[test]
fn strong_log_average_json() {
    let out = vilenkin(&["strong", "--p", "1", "--resolution", "6", "--trials", "3"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["log_averages"].as_array().unwrap().len(), 3);
}
