use std::path::Path;
use std::process::{Command, Output};

fn msqed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msqed")).args(args).env_remove("MSQED_WORKERS").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn malformed_config_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seed = 0\n\n[box]\nn = = 16\n").unwrap();
    let o = msqed(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn missing_config_exits_2() {
    let o = msqed(&["run", "--config", "/nonexistent/msqed.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_override_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = msqed(&["run", "--set", "model.bogus=1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn unknown_suite_exits_2() {
    let o = msqed(&["verify", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn odd_potential_is_gated_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let n = 8usize;
    let values: Vec<String> = (0..n * n * n).map(|i| if i == 1 { "1.0".into() } else { "0.0".into() }).collect();
    let cfg = dir.path().join("odd.toml");
    std::fs::write(
        &cfg,
        format!(
            "seed = 0\nout = {:?}\n\n[box]\nl = 6.0\nn = {n}\n\n[model]\ng = 0.05\npotential = {{ kind = \"custom\", values = [{}] }}\ncutoff = {{ kind = \"sharp\", lambda = 2.0 }}\n\n[experiment]\nkind = \"minimize\"\n",
            dir.path().join("out").to_str().unwrap(),
            values.join(", ")
        ),
    )
    .unwrap();
    let o = msqed(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("not even"), "{}", stderr(&o));
    assert!(!dir.path().join("out").join("run.json").exists());
}

#[test]
fn free_harmonic_run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let o = msqed(&[
            "run",
            "minimize",
            "--g",
            "0",
            "--potential",
            "harmonic",
            "--set",
            "box.n=16",
            "--set",
            "box.l=10.0",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(out.join("plotdata").join("energy_history.csv").exists());
        outputs.push(std::fs::read(out.join("run.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "run.json differs between identical runs");
    let v: serde_json::Value = serde_json::from_slice(&outputs[0]).unwrap();
    let r = &v["result"]["minimizer"];
    let (e, mu) = (r["energy"].as_f64().unwrap(), r["mu_v"].as_f64().unwrap());
    assert!((e - mu).abs() <= 1e-10 * mu.abs(), "E_V {e} vs μ_V {mu}");
    assert!((e - 3.0).abs() < 0.05, "E_V {e}");
    assert_eq!(v["forced"], serde_json::Value::Bool(false));
    assert_eq!(v["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn small_uv_sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = msqed(&[
        "run",
        "uv-sweep",
        "--set",
        "box.n=16",
        "--set",
        "box.l=8.0",
        "--g",
        "0.05",
        "--ladder",
        "1,2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = std::fs::read_to_string(dir.path().join("tables").join("uv_sweep.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("lambda,energy,iterations,error"));
    assert_eq!(lines.count(), 2);
    let v = read_json(&dir.path().join("run.json"));
    assert_eq!(v["experiment"], "uv-sweep");
}

#[test]
fn verify_identities_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = msqed(&["verify", "identities", "--out", dir.path().to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}\n{}", stderr(&o));
    assert!(stdout.contains("PASS criterion 1"), "{stdout}");
    let v = read_json(&dir.path().join("verify.json"));
    assert_eq!(v["pass"], serde_json::Value::Bool(true));
}

#[test]
fn default_config_round_trips() {
    let o = msqed(&["default-config"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("[experiment]"));
}
