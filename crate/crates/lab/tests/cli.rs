use std::fs;
use std::path::Path;
use std::process::Command;

fn lab(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hartree-blowup"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

#[test]
fn ground_state_profile_and_law_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["ground-state", "profile", "law"] {
        let o = lab(&[cmd], dir.path());
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["ground_state.csv", "rho.csv", "ground_state.json", "p_plus_0_0.csv", "p_minus_1_0.csv", "profile.json", "law.csv", "law.json"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let csv = fs::read_to_string(dir.path().join("ground_state.csv")).unwrap();
    assert!(csv.starts_with("r,value_real\n"));
    let p = fs::read_to_string(dir.path().join("p_minus_0_0.csv")).unwrap();
    assert!(p.starts_with("r,value_real\n"));
    let law: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("law.json")).unwrap()).unwrap();
    let l1 = law["lambda1"].as_f64().unwrap();
    assert!((l1 / 4.934e-3 - 1.0).abs() < 1e-3, "{l1}");
}

#[test]
fn json_keys_keep_declaration_order() {
    let dir = tempfile::tempdir().unwrap();
    assert!(lab(&["ground-state"], dir.path()).status.success());
    let text = fs::read_to_string(dir.path().join("ground_state.json")).unwrap();
    let pos: Vec<usize> = ["\"dim\"", "\"q0\"", "\"mass\"", "\"variance\"", "\"intervals\""]
        .iter()
        .map(|k| text.find(k).unwrap())
        .collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "{text}");
}

#[test]
fn bad_config_and_missing_directory_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "sigma = 0.3\nsgima = 0.2\n").unwrap();
    let o = lab(&["law", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("sgima") && err.contains("line 2"), "{err}");

    let missing = dir.path().join("absent");
    let o = lab(&["ground-state"], &missing);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent"));
}

#[test]
fn out_of_range_sigma_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.cfg");
    fs::write(&cfg, "sigma = 0.7\n").unwrap();
    let o = lab(&["profile", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigma"));
}

#[test]
fn simulate_then_decompose_a_profile_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.cfg");
    fs::write(&cfg, "cells = 4096\nmax_steps = 200\ncadence = 100\ntracking = false\n").unwrap();
    let o = lab(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let diag = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("t,mass,energy,lambda,b,gamma,eps_h1,grad_norm\n"));
    assert_eq!(diag.lines().count(), 4);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("snapshot_last.json")).unwrap()).unwrap();
    assert_eq!(meta["N"], 1);
    assert_eq!(meta["n"], 4096);
    assert_eq!(fs::metadata(dir.path().join("snapshot_last.bin")).unwrap().len(), 8 * 4096);

    let stem = dir.path().join("snapshot_last");
    let dcfg = dir.path().join("dec.cfg");
    fs::write(&dcfg, format!("snapshot = {}\n", stem.display())).unwrap();
    let o = lab(&["decompose", "--config", dcfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let d: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("decomposition.json")).unwrap()).unwrap();
    let law: serde_json::Value = {
        assert!(lab(&["law"], dir.path()).status.success());
        serde_json::from_str(&fs::read_to_string(dir.path().join("law.json")).unwrap()).unwrap()
    };
    let (l, l1) = (d["lambda"].as_f64().unwrap(), law["lambda1"].as_f64().unwrap());
    assert!(l < l1 && l > 0.9 * l1, "{l} {l1}");
    assert!(d["eps_h1"].as_f64().unwrap() < 1e-3);
}
