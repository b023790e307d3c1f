use std::fs;
use std::path::PathBuf;

use lsmlab::datasets::BallGenSpec;
use lsmlab::experiment::*;
use lsmlab::features::FeatureSpec;
use lsmlab::meanfield::linspace;
use lsmlab::readout::{Metric, ReadoutKind};

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

/// MNIST at toy scale: 7x7 pooled images, 100 examples, light readouts.
fn small_config(points: usize) -> ExperimentConfig {
    let d = data_dir();
    let mut cfg = ExperimentConfig::mnist_reference(
        d.join("mnist-subset-images.idx3-ubyte"),
        d.join("mnist-subset-labels.idx1-ubyte"),
        120,
        100,
    );
    cfg.data.mnist.as_mut().unwrap().pool = 4;
    cfg.encoding.duration = 40;
    cfg.encoding.spike_prob = 1.0;
    cfg.features.statistical = FeatureSpec::statistical_mnist(10);
    cfg.features.trace = FeatureSpec::trace(20, 30.0);
    for r in [&mut cfg.readouts.slp, &mut cfg.readouts.forest] {
        r.folds = 3;
        r.slp.epochs = 5;
        r.forest.n_trees = 5;
    }
    cfg.w_grid = WGrid::CritAnchored { points };
    cfg.master_seed = 9;
    cfg
}

fn same_curves(a: &TrialResult, b: &TrialResult) -> bool {
    a.curves == b.curves && a.graph_digest == b.graph_digest && a.w_grid == b.w_grid
}

#[test]
fn one_point_grid_gives_twelve_curves() {
    let cfg = small_config(1);
    let data = prepare_data(&cfg).unwrap();
    let grid = cfg.resolve_w_grid().unwrap();
    let t = run_trial(&cfg, &data, &grid, 3, "single").unwrap();
    assert_eq!(t.curves.len(), 12);
    for c in t.curves.values() {
        assert_eq!(c.w_grid, grid);
        assert!(c.mean.iter().all(|m| (-1.0..=1.0).contains(m)));
        assert!(c.std.iter().all(|s| *s >= 0.0));
    }
    assert!(t.curve(ReadoutKind::Slp, true, Metric::Mcc).mean.len() == 1);
}

#[test]
fn trial_is_deterministic_and_seed_sensitive() {
    let cfg = small_config(2);
    let data = prepare_data(&cfg).unwrap();
    let grid = cfg.resolve_w_grid().unwrap();
    let a = run_trial(&cfg, &data, &grid, 4, "a").unwrap();
    let b = run_trial(&cfg, &data, &grid, 4, "a").unwrap();
    assert!(same_curves(&a, &b));
    let c = run_trial(&cfg, &data, &grid, 5, "a").unwrap();
    assert_ne!(a.graph_digest, c.graph_digest);
}

#[test]
fn encoding_seed_leaves_topology_stream_alone() {
    let mut cfg = small_config(1);
    cfg.encoding.spike_prob = 0.5;
    let mut other = cfg.clone();
    other.encoding.seed = 77;
    let d1 = prepare_data(&cfg).unwrap();
    let d2 = prepare_data(&other).unwrap();
    assert_eq!(d1.digest, d2.digest);
    assert_ne!(d1.batch.examples, d2.batch.examples);
    let grid = cfg.resolve_w_grid().unwrap();
    let a = run_trial(&cfg, &d1, &grid, 6, "x").unwrap();
    let b = run_trial(&other, &d2, &grid, 6, "x").unwrap();
    assert_eq!(a.graph_digest, b.graph_digest);
}

#[test]
fn sweep_levels_are_isolated_and_tagged() {
    let mut cfg = small_config(2);
    cfg.sweep_levels.beta = vec![0.2, 0.3, 0.4];
    let data = prepare_data(&cfg).unwrap();
    let plan = SweepPlan::from_config(&cfg, SweptParam::Beta);
    let mut reordered = plan.clone();
    reordered.levels = vec![0.35, 0.3, 0.25];
    let r1 = run_sweep(&plan, &data, &[1]).unwrap();
    let r2 = run_sweep(&reordered, &data, &[1]).unwrap();
    assert_eq!(r1.failures().count(), 0);
    let at = |r: &SweepResult, l: f64| r.trials().find(|t| t.level == Some(l)).unwrap().clone();
    assert!(same_curves(&at(&r1, 0.3), &at(&r2, 0.3)));
    for t in r1.trials() {
        assert_eq!(t.swept_param.as_deref(), Some("beta"));
        assert!(t.trial_id.starts_with("beta="));
        assert!(t.w_grid.last().unwrap() / t.w_crit - 2.0 < 1e-12);
    }
    assert_eq!(trial_reports(&at(&r1, 0.2), cfg.gamma).unwrap().len(), 12);
}

#[test]
fn sweep_rejects_wrong_level_count() {
    let mut cfg = small_config(2);
    cfg.sweep_levels.theta = vec![2.0, 1.5];
    assert!(SweepPlan::from_config(&cfg, SweptParam::Theta).validate().is_err());
    cfg.sweep_levels.theta = vec![2.0, 1.5, 2.0];
    assert!(SweepPlan::from_config(&cfg, SweptParam::Theta).validate().is_err());
}

#[test]
fn emitted_files_have_one_row_per_point_and_are_reproducible() {
    let mut cfg = small_config(15);
    cfg.w_grid = WGrid::Explicit { values: linspace(0.001, 0.05, 15) };
    let data = prepare_data(&cfg).unwrap();
    let grid = cfg.resolve_w_grid().unwrap();
    let t = run_trial(&cfg, &data, &grid, 8, "emit").unwrap();
    let record = RunRecord::new("test", &cfg, &[8], &data.digest, &data.provenance);
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        emit_results(std::slice::from_ref(&t), &record, cfg.gamma, d.path()).unwrap();
    }
    let curves = fs::read_to_string(dirs[0].path().join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 180);
    let robustness = fs::read_to_string(dirs[0].path().join("robustness.csv")).unwrap();
    assert_eq!(robustness.lines().count(), 1 + 12);
    for f in ["curves.csv", "robustness.csv", "run.json"] {
        assert_eq!(fs::read(dirs[0].path().join(f)).unwrap(), fs::read(dirs[1].path().join(f)).unwrap(), "{f}");
    }
    let run: serde_json::Value = serde_json::from_str(&fs::read_to_string(dirs[0].path().join("run.json")).unwrap()).unwrap();
    assert_eq!(run["dataset_digest"], serde_json::json!(data.digest));
    assert_eq!(run["trials"][0]["w_grid"].as_array().unwrap().len(), 15);
}

#[test]
fn equivalence_experiment_pairs_arms() {
    let cfg = small_config(3);
    let data = prepare_data(&cfg).unwrap();
    let report = equivalence_experiment(&cfg, 0.3, &data, &[1]).unwrap();
    assert!((report.w_crit_alt - report.w_crit_eq).abs() < 1e-15);
    assert_eq!(report.trials.len(), 4);
    let count = |k: PairKind| report.distances.iter().filter(|p| p.kind == k).count();
    assert_eq!(count(PairKind::Equivalent), 24);
    assert_eq!(count(PairKind::Repeat), 24);
    assert!(report.distances.iter().all(|p| p.d_norm >= 0.0));
}

#[test]
fn ball_task_runs_end_to_end() {
    let generate = BallGenSpec { n_videos: 70, size: 8, n_frames: 20, radius_range: [1.0, 2.0], orbit_radius_range: [2.0, 3.0], ..BallGenSpec::default() };
    let mut cfg = ExperimentConfig::balls_reference(150, generate);
    cfg.features.statistical = FeatureSpec::statistical_balls(10);
    cfg.features.trace = FeatureSpec::trace(20, 10.0);
    for r in [&mut cfg.readouts.slp, &mut cfg.readouts.forest] {
        r.folds = 3;
        r.slp.epochs = 5;
        r.forest.n_trees = 5;
    }
    cfg.w_grid = WGrid::CritAnchored { points: 2 };
    cfg.validate().unwrap();
    let cache = tempfile::tempdir().unwrap();
    cfg.data.balls.as_mut().unwrap().cache = Some(cache.path().join("balls.bin"));
    let first = prepare_data(&cfg).unwrap();
    let second = prepare_data(&cfg).unwrap();
    assert_eq!(first.digest, second.digest);
    assert_eq!(first.batch.len(), 70);
    let grid = cfg.resolve_w_grid().unwrap();
    let t = run_trial(&cfg, &first, &grid, 2, "balls").unwrap();
    assert_eq!(t.curves.len(), 12);
    assert_eq!(t.task, Task::BallTrajectories);
}
