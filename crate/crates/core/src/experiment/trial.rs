use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{reset_name, ExperimentConfig, Task};
use crate::datasets::{self, generate_ball_videos, load_mnist, read_video_cache, DatasetDigest};
use crate::dynamics::{run_example_batch, ReservoirLayout, SynapseSpec};
use crate::encoding::{encode_frames, encode_rate, EncodingSpec, SpikeTrainBatch};
use crate::error::{Error, Result};
use crate::features::{extract, FeatureFamily};
use crate::readout::{cross_validate, CvReport, Metric, ReadoutKind};
use crate::robustness::PerformanceCurve;
use crate::seeds;
use crate::topology::{generate, DirectedGraph, TopologySpec};

/// Encoded dataset shared by every trial of an experiment.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub batch: SpikeTrainBatch,
    pub labels: Vec<usize>,
    pub digest: String,
    pub provenance: Vec<datasets::FileDigest>,
}

/// Load (or generate) and encode the dataset named by `cfg`. The encoding
/// stream is derived from the master seed, so every trial and every grid
/// point sees the same spike trains.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData> {
    match cfg.task {
        Task::Mnist => {
            let m = cfg.data.mnist.as_ref().ok_or_else(|| Error::invalid("data", "missing data.mnist"))?;
            let set = load_mnist(&m.images, &m.labels, m.n_examples, m.threshold, seeds::derive(cfg.master_seed, "mnist"))?
                .pooled(m.pool);
            let spec = EncodingSpec {
                seed: seeds::derive_indexed(cfg.master_seed, "encoding", cfg.encoding.seed),
                ..cfg.encoding.clone()
            };
            Ok(PreparedData {
                batch: encode_rate(&set.images, &spec)?,
                labels: set.labels.iter().map(|&l| usize::from(l)).collect(),
                digest: set.digest(),
                provenance: set.provenance.clone(),
            })
        }
        Task::BallTrajectories => {
            let b = cfg.data.balls.as_ref().ok_or_else(|| Error::invalid("data", "missing data.balls"))?;
            let set = match &b.cache {
                Some(path) if path.exists() => {
                    let set = read_video_cache(path)?;
                    if set.spec != b.generate {
                        return Err(Error::invalid("data", format!("cache {} was generated from a different spec", path.display())));
                    }
                    set
                }
                _ => generate_ball_videos(&b.generate)?,
            };
            Ok(PreparedData {
                batch: encode_frames(&set.videos, &cfg.encoding)?,
                labels: set.labels.iter().map(|&l| usize::from(l)).collect(),
                digest: set.digest(),
                provenance: Vec::new(),
            })
        }
    }
}

/// Identifies one of the twelve curves of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CurveKey {
    pub readout: ReadoutKind,
    pub feature: FeatureFamily,
    pub metric: Metric,
}

pub fn feature_name(f: FeatureFamily) -> &'static str {
    if f.is_statistical() {
        "statistical"
    } else {
        "trace"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_id: String,
    pub seed: u64,
    pub task: Task,
    pub reset: String,
    pub swept_param: Option<String>,
    pub level: Option<f64>,
    pub w_crit: f64,
    pub graph_digest: String,
    pub w_grid: Vec<f64>,
    pub curves: BTreeMap<CurveKey, PerformanceCurve>,
    /// Wall-clock seconds; not part of any emitted file.
    #[serde(skip)]
    pub runtime_secs: f64,
}

impl TrialResult {
    pub fn curve(&self, readout: ReadoutKind, statistical: bool, metric: Metric) -> &PerformanceCurve {
        self.curves
            .iter()
            .find(|(k, _)| k.readout == readout && k.feature.is_statistical() == statistical && k.metric == metric)
            .map(|(_, c)| c)
            .expect("every trial holds all twelve curves")
    }
}

struct PointResult {
    cv: Vec<((ReadoutKind, FeatureFamily), CvReport)>,
}

fn stage<T>(trial: &str, stage: &'static str, w: Option<f64>, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Trial { trial: trial.to_string(), stage, w, source: Box::new(e) })
}

fn run_point(
    cfg: &ExperimentConfig,
    data: &PreparedData,
    layout: &ReservoirLayout,
    trial_id: &str,
    seed: u64,
    k: usize,
    w: f64,
) -> Result<PointResult> {
    let synapse = SynapseSpec { mean_weight: w, weight_cv: cfg.weight_cv };
    let inst = stage(trial_id, "weights", Some(w), layout.with_sampled_weights(&synapse, seeds::derive_indexed(seed, "weights", k as u64)))?;
    let recs = stage(trial_id, "simulation", Some(w), run_example_batch(&inst, &data.batch, cfg.reset, seeds::derive(seed, "reset")))?;
    let mut cv = Vec::with_capacity(4);
    for fspec in [&cfg.features.statistical, &cfg.features.trace] {
        let fm = stage(trial_id, "features", Some(w), extract(&recs, fspec))?;
        for rspec in cfg.readouts.both() {
            let cv_seed = seeds::derive_indexed(seed, "cross-validation", rspec.seed);
            let report = stage(trial_id, "readout", Some(w), cross_validate(&fm, &data.labels, rspec, cv_seed))?;
            cv.push(((rspec.kind, fspec.family), report));
        }
    }
    Ok(PointResult { cv })
}

/// Build the fixed part of a trial's network: graph, leaks, input and output sets.
pub fn trial_layout(cfg: &ExperimentConfig, n_inputs: usize, seed: u64) -> Result<ReservoirLayout> {
    let topo = TopologySpec { seed: seeds::derive(seed, "topology"), ..cfg.topology.clone() };
    let graph: DirectedGraph = generate(&topo)?;
    ReservoirLayout::new(graph, &cfg.leak, cfg.neuron, n_inputs, cfg.n_outputs(), seeds::derive(seed, "layout"))
}

/// One network instance swept over `w_grid`: fixed connectivity, weights
/// resampled at every grid point, twelve curves out.
pub fn run_trial(
    cfg: &ExperimentConfig,
    data: &PreparedData,
    w_grid: &[f64],
    seed: u64,
    trial_id: &str,
) -> Result<TrialResult> {
    let start = Instant::now();
    stage(trial_id, "config", None, cfg.validate())?;
    if w_grid.is_empty() {
        return Err(Error::invalid("w_grid", "empty"));
    }
    let layout = stage(trial_id, "topology", None, trial_layout(cfg, data.batch.n_channels, seed))?;

    let points = w_grid
        .par_iter()
        .enumerate()
        .map(|(k, &w)| run_point(cfg, data, &layout, trial_id, seed, k, w))
        .collect::<Result<Vec<_>>>()?;

    let mut curves = BTreeMap::new();
    for (j, &(readout, feature)) in points[0].cv.iter().map(|(key, _)| key).enumerate() {
        for metric in Metric::ALL {
            let (mean, std) = points.iter().map(|p| {
                let s = p.cv[j].1.summary(metric);
                (s.mean, s.std)
            }).unzip();
            let mut curve = PerformanceCurve::new(w_grid.to_vec(), mean, std, metric)?;
            curve.provenance = BTreeMap::from([
                ("trial_id".to_string(), trial_id.to_string()),
                ("readout".to_string(), readout.name().to_string()),
                ("feature_family".to_string(), feature_name(feature).to_string()),
            ]);
            curves.insert(CurveKey { readout, feature, metric }, curve);
        }
    }
    Ok(TrialResult {
        trial_id: trial_id.to_string(),
        seed,
        task: cfg.task,
        reset: reset_name(cfg.reset).to_string(),
        swept_param: None,
        level: None,
        w_crit: cfg.w_crit(),
        graph_digest: layout.graph().digest(),
        w_grid: w_grid.to_vec(),
        curves,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}
