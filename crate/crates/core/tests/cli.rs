use std::path::Path;
use std::process::{Command, Output};

use maskrgg::gaussmodel::BitMatrix;

fn maskrgg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maskrgg"))
        .args(args)
        .env_remove(maskrgg::cli::THREADS_ENV)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn calibrate_tau_at_half_density() {
    let o = maskrgg(&["calibrate-tau", "--p", "0.5", "--d", "17"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "0.0");
}

#[test]
fn stat_on_all_ones() {
    let dir = tempfile::tempdir().unwrap();
    let bits = dir.path().join("m.bits");
    BitMatrix::ones(3, 3).write_binary(&bits).unwrap();
    let o = maskrgg(&["stat", "--statistic", "c4", "--input", path_str(&bits), "--p", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 0.5625);

    let csv = dir.path().join("m.csv");
    std::fs::write(&csv, BitMatrix::ones(3, 3).to_csv_string()).unwrap();
    let o = maskrgg(&["stat", "--statistic", "c4", "--input", path_str(&csv), "--p", "0.5"]);
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 0.5625);
}

#[test]
fn sample_then_test_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.bits");
    let mask = dir.path().join("mask.bits");
    let args = ["sample", "--n", "30", "--m", "20", "--p", "0.3", "--q", "0.5", "--d", "8", "--seed", "4"];
    let o = maskrgg(&[&args[..], &["--out", path_str(&m), "--mask-out", path_str(&mask)]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(BitMatrix::read_binary(&m).unwrap().shape(), (30, 20));

    let o = maskrgg(&[
        "test", "--statistic", "c4-masked", "--input", path_str(&m), "--mask", path_str(&mask), "--p", "0.3", "--q",
        "0.5", "--seed", "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["statistic", "lower", "upper", "reject", "alpha", "trials", "seed"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["trials"], 2000);
}

#[test]
fn sweep_output_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"n":40,"m":40,"p":0.3,"d":[10,1000],"q":[1.0],"statistics":["c4","wedge"],"trials":50,"seed":3}"#,
    )
    .unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = maskrgg(&["sweep", "--config", path_str(&cfg), "--out", path_str(&out), "--threads", threads]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(out.with_extension("json").exists());
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "3");
    assert_eq!(a, b);
    assert!(String::from_utf8(a).unwrap().starts_with("d,q,stat,power,power_se,null_lo,null_hi,h1_mean,seed\n"));
}

#[test]
fn usage_errors_exit_one() {
    let o = maskrgg(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(maskrgg(&["calibrate-tau", "--p", "0.5"]).status.code(), Some(1));
    assert_eq!(maskrgg(&["calibrate-tau", "--p", "1.5", "--d", "3"]).status.code(), Some(1));
    assert_eq!(maskrgg(&["--help"]).status.code(), Some(0));
}

#[test]
fn star_verification_exit_status() {
    let o = maskrgg(&["verify-stars", "--p", "0.3", "--d", "100,400", "--samples", "200000", "--seed", "2"]);
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let expected = match report["status"].as_str().unwrap() {
        "pass" => 0,
        "inconclusive" => 2,
        _ => 3,
    };
    assert_eq!(o.status.code(), Some(expected));
}
