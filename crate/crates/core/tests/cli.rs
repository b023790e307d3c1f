use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lsmlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsmlab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_mf(dir: &Path, theta: f64, i: f64, t_ref: f64) -> PathBuf {
    let p = dir.join("mf.json");
    let json = format!(r#"{{"theta": {theta}, "input_amplitude": {i}, "t_ref": {t_ref}, "beta": 0.2, "n_neurons": 1000}}"#);
    fs::write(&p, json).unwrap();
    p
}

#[test]
fn meanfield_prints_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_mf(dir.path(), 2.0, 2.0, 3.0);
    let o = lsmlab(&["meanfield", "--config", cfg.to_str().unwrap(), "--w-min", "0", "--w-max", "0.02", "--points", "2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "w,isi,rate\n0,1,1\n0.02,2,0.5\n");
}

#[test]
fn equiv_reports_matching_critical_weights() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_mf(dir.path(), 2.0, 0.1, 3.0);
    let o = lsmlab(&["equiv", "--config", cfg.to_str().unwrap(), "--beta-alt", "0.4"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    let theta_eq: f64 = row[0].parse().unwrap();
    assert!((theta_eq - 1.3).abs() < 1e-12);
    assert_eq!(row[1], row[2]);
    assert_eq!(row[3], "true");
}

#[test]
fn topology_stats_is_json() {
    let o = lsmlab(&["topology-stats", "--n", "200", "--beta", "0.2", "--family", "erdos-renyi", "--seed", "3"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n_neurons"], 200);
    let mean = v["in_degree"]["mean"].as_f64().unwrap();
    assert!((mean - 40.0).abs() < 2.0);
}

#[test]
fn exit_codes() {
    assert_eq!(lsmlab(&["--help"]).status.code(), Some(0));
    assert_eq!(lsmlab(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(lsmlab(&["sweep", "--param", "gamma", "--config", "x", "--out", "y"]).status.code(), Some(1));
    assert_eq!(lsmlab(&["topology-stats", "--n", "100", "--beta", "0.7"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let o = lsmlab(&["sweep", "--param", "beta", "--config", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"task": "Mnist", "surprise": 1}"#).unwrap();
    let o = lsmlab(&["sweep", "--param", "beta", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    let cfg = write_mf(dir.path(), 2.0, 2.0, 3.0);
    let o = lsmlab(&["meanfield", "--config", cfg.to_str().unwrap(), "--w-min", "1", "--w-max", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

const CURVES: &str = "trial_id,task,reset,feature_family,readout,metric,swept_param,level,w,mean,std
t1,mnist,fixed,trace,slp,accuracy,beta,0.2,0.1,0.2,0
t1,mnist,fixed,trace,slp,accuracy,beta,0.2,0.2,0.9,0
t1,mnist,fixed,trace,slp,accuracy,beta,0.2,0.3,1,0
t1,mnist,fixed,trace,slp,accuracy,beta,0.2,0.4,0.5,0
";

#[test]
fn robustness_recomputes_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let curves = dir.path().join("curves.csv");
    fs::write(&curves, CURVES).unwrap();
    let o = lsmlab(&["robustness", "--curves", curves.to_str().unwrap(), "--w-crit", "0.27"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[8..], ["0.84999999999999998", "0.84999999999999998", "0.20000000000000001", "0.29999999999999999", "0.099999999999999978", "0.27000000000000002", "true", "true"]);

    fs::write(dir.path().join("run.json"), r#"{"trials": [{"trial_id": "t1", "w_crit": 0.35}]}"#).unwrap();
    let o = lsmlab(&["robustness", "--curves", curves.to_str().unwrap()]);
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[13..], ["0.34999999999999998", "false", "true"]);

    fs::write(&curves, "not,a,header\n").unwrap();
    assert_eq!(lsmlab(&["robustness", "--curves", curves.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn gen_balls_writes_cache() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"n_videos": 14, "size": 8, "n_frames": 10, "radius_range": [1, 2], "speed_range": [0.5, 1],
            "orbit_radius_range": [2, 3], "position_noise_sd": 0.5, "jitter_halfwidth": 0.5,
            "background_flip_prob": 0.005, "seed": 0}"#,
    )
    .unwrap();
    let out = dir.path().join("balls.bin");
    let run = || lsmlab(&["gen-balls", "--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "4"]);
    let o = run();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("14 videos"));
    let first = fs::read(&out).unwrap();
    assert!(run().status.success());
    assert_eq!(first, fs::read(&out).unwrap());
}
