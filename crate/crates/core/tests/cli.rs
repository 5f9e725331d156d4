use std::path::Path;
use std::process::Command;

fn kplab(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_kplab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("KPLAB_THREADS")
        .output()
        .unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn verify_passes_and_reports() {
    let d = tempfile::tempdir().unwrap();
    let o = kplab(&["verify", "resonance", "--samples", "500"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("PASS resonance"));
    let m: serde_json::Value = serde_json::from_str(&read(&d.path().join("manifest.json"))).unwrap();
    assert_eq!(m["status"], "pass");
    assert_eq!(m["seed"], 2024);
}

#[test]
fn unknown_check_exits_2() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(kplab(&["verify", "nope"], d.path()).status.code(), Some(2));
}

#[test]
fn unknown_config_field_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    std::fs::write(&cfg, r#"{"dt": 0.01, "bogus": 1}"#).unwrap();
    let o = kplab(&["--config", cfg.to_str().unwrap(), "run", "sim"], &d.path().join("o"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn zero_threads_rejected() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(kplab(&["--threads", "0", "verify", "resonance"], d.path()).status.code(), Some(2));
}

#[test]
fn sim_run_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"grid": {"modes": [16, 16, 16], "lengths": [12.566370614359172, 12.566370614359172, 12.566370614359172]},
            "dt": 0.02, "horizon": 0.2, "samples_per_unit": 10}"#,
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    for (o, t) in [(&a, "1"), (&b, "3")] {
        let r = kplab(&["--config", c, "--threads", t, "--format", "csv", "run", "sim"], o);
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    }
    for f in ["series.csv", "summary.json"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f} differs between runs");
    }
    assert_eq!(std::fs::read(a.join("final.kp3f")).unwrap(), std::fs::read(b.join("final.kp3f")).unwrap());
    let m: serde_json::Value = serde_json::from_str(&read(&a.join("manifest.json"))).unwrap();
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(m["threads"], 1);
}

#[test]
fn make_data_and_norms_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let o = kplab(&["make-data", "gaussian", "--modes", "16", "--width", "1.2"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let made: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let snap = d.path().join("datum.kp3f");
    let n = kplab(&["norms", "--input", snap.to_str().unwrap()], &d.path().join("n"));
    assert_eq!(n.status.code(), Some(0), "{}", String::from_utf8_lossy(&n.stderr));
    let got: serde_json::Value = serde_json::from_slice(&n.stdout).unwrap();
    assert_eq!(made["l2"], got["l2"]);
}

#[test]
fn make_data_illposed_writes_boxes() {
    let d = tempfile::tempdir().unwrap();
    let o = kplab(&["make-data", "illposed", "--mu", "0.0625", "--lam", "4", "--p", "3"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&read(&d.path().join("illposed.json"))).unwrap();
    assert!(v["norms"]["phi1"].as_f64().unwrap() > 0.0);
    assert_eq!(v["phi2"]["xi"][1], 4.0625);
}

#[test]
fn oversized_picard_datum_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"sim": {"grid": {"modes": [16, 16, 16], "lengths": [12.566370614359172, 12.566370614359172, 12.566370614359172]},
                    "dt": 0.03125, "horizon": 0.25, "samples_per_unit": 32, "eps": 10.0}}"#,
    )
    .unwrap();
    let o = kplab(&["--config", cfg.to_str().unwrap(), "run", "picard"], &d.path().join("o"));
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}
