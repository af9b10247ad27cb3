// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn effitest(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_effitest"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

#[test]
fn generate_run_replay_report() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out = effitest(&["generate", "--paths", "30", "--seed", "4", "-o", "bench.json"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    fs::write(d.join("cfg.json"), r#"{"chips": 20, "ablation_chips": 5, "log_chips": 1}"#).unwrap();
    let out = effitest(&["run", "--config", "cfg.json", "--benchmark", "bench.json", "-o", "r1"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.join("r1/iterations.jsonl").exists());

    let out = effitest(&["replay", "--manifest", "r1/manifest.json", "-o", "r2"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = effitest(&["report", "--results", "r1/results.json", "-o", "r3"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["metrics.csv", "yield.csv", "ablation.csv", "verdicts_p1.csv"] {
        let a = fs::read(d.join("r1").join(f)).unwrap();
        assert_eq!(a, fs::read(d.join("r2").join(f)).unwrap(), "{f}");
        assert_eq!(a, fs::read(d.join("r3").join(f)).unwrap(), "{f}");
    }
    let metrics = fs::read_to_string(d.join("r1/metrics.csv")).unwrap();
    assert!(metrics.starts_with("circuit,n_s,n_g,n_b,n_p,n_pt,t_a,t_v,t_a_prime,t_v_prime,r_a,r_v"));
}

#[test]
fn mode_flag_and_bad_input() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("cfg.json"), r#"{"chips": 5, "ablation_chips": 0}"#).unwrap();
    let out = effitest(
        &["run", "--config", "cfg.json", "--mode", "baseline-pathwise", "--chips", "3", "-o", "r"],
        d,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let verdicts = fs::read_to_string(d.join("r/verdicts_p1.csv")).unwrap();
    assert_eq!(verdicts.lines().count(), 4);

    fs::write(d.join("bad.json"), r#"{"chips": 5, "unknown": 1}"#).unwrap();
    assert!(!effitest(&["run", "--config", "bad.json", "-o", "x"], d).status.success());
    fs::write(d.join("bad2.json"), r#"{"period_quantiles": [0.5, 0.5]}"#).unwrap();
    assert!(!effitest(&["run", "--config", "bad2.json", "-o", "x"], d).status.success());
    assert!(!effitest(&["run", "--mode", "nonsense", "-o", "x"], d).status.success());
}
