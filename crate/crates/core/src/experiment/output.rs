use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::equivalence::{EquivalenceReport, PairKind};
use super::trial::{feature_name, TrialResult};
use crate::datasets::FileDigest;
use crate::error::{Error, Result};
use crate::robustness::robustness_interval;

/// Decimal rendering with 17 significant digits, trailing zeros trimmed;
/// scientific notation outside `1e-5 ..= 1e17`.
pub fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = mantissa.strip_prefix('-').map_or(("", mantissa), |m| ("-", m));
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (0..17).contains(&exp) {
        let split = exp as usize + 1;
        trim(format!("{sign}{}.{}", &digits[..split], &digits[split..]))
    } else if (-5..0).contains(&exp) {
        trim(format!("{sign}0.{}{}", "0".repeat((-exp - 1) as usize), digits))
    } else {
        format!("{sign}{}e{exp}", trim(format!("{}.{}", &digits[..1], &digits[1..])))
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

fn opt_bool(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

pub const CURVES_HEADER: &str = "trial_id,task,reset,feature_family,readout,metric,swept_param,level,w,mean,std";
pub const ROBUSTNESS_HEADER: &str = "trial_id,task,reset,feature_family,readout,metric,swept_param,level,gamma,threshold,w_min,w_max,delta,w_crit,contains_crit,midpoint_below_crit";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trial_id: String,
    pub seed: u64,
    pub swept_param: Option<String>,
    pub level: Option<f64>,
    pub w_crit: f64,
    pub graph_digest: String,
    pub w_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub code_version: String,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub seeds: Vec<u64>,
    pub dataset_digest: String,
    pub dataset_files: Vec<FileDigest>,
    pub trials: Vec<TrialSummary>,
    pub failures: Vec<String>,
}

impl RunRecord {
    pub fn new(command: &str, config: &ExperimentConfig, seeds: &[u64], dataset_digest: &str, files: &[FileDigest]) -> Self {
        Self {
            command: command.to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            master_seed: config.master_seed,
            seeds: seeds.to_vec(),
            dataset_digest: dataset_digest.to_string(),
            dataset_files: files.to_vec(),
            trials: Vec::new(),
            failures: Vec::new(),
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn curves_csv(trials: &[TrialResult]) -> String {
    let mut out = format!("{CURVES_HEADER}\n");
    for t in trials {
        for (key, c) in &t.curves {
            for i in 0..c.w_grid.len() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    t.trial_id,
                    t.task.name(),
                    t.reset,
                    feature_name(key.feature),
                    key.readout.name(),
                    key.metric.name(),
                    t.swept_param.as_deref().unwrap_or(""),
                    opt_num(t.level),
                    fmt_num(c.w_grid[i]),
                    fmt_num(c.mean[i]),
                    fmt_num(c.std[i]),
                );
            }
        }
    }
    out
}

pub fn robustness_csv(trials: &[TrialResult], gamma: f64) -> Result<String> {
    let mut out = format!("{ROBUSTNESS_HEADER}\n");
    for t in trials {
        for (key, c) in &t.curves {
            let r = robustness_interval(c, gamma, Some(t.w_crit))?;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                t.trial_id,
                t.task.name(),
                t.reset,
                feature_name(key.feature),
                key.readout.name(),
                key.metric.name(),
                t.swept_param.as_deref().unwrap_or(""),
                opt_num(t.level),
                fmt_num(r.gamma),
                fmt_num(r.threshold),
                fmt_num(r.w_min),
                fmt_num(r.w_max),
                fmt_num(r.delta),
                fmt_num(t.w_crit),
                opt_bool(r.contains_crit),
                opt_bool(r.midpoint_below_crit),
            );
        }
    }
    Ok(out)
}

/// Write `curves.csv`, `robustness.csv` and `run.json` into `out_dir`.
pub fn emit_results(trials: &[TrialResult], record: &RunRecord, gamma: f64, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    let mut record = record.clone();
    record.trials = trials
        .iter()
        .map(|t| TrialSummary {
            trial_id: t.trial_id.clone(),
            seed: t.seed,
            swept_param: t.swept_param.clone(),
            level: t.level,
            w_crit: t.w_crit,
            graph_digest: t.graph_digest.clone(),
            w_grid: t.w_grid.clone(),
        })
        .collect();
    write(&out_dir.join("curves.csv"), &curves_csv(trials))?;
    write(&out_dir.join("robustness.csv"), &robustness_csv(trials, gamma)?)?;
    let mut json = serde_json::to_string_pretty(&record)?;
    json.push('\n');
    write(&out_dir.join("run.json"), &json)
}

/// `equivalence.csv`: one row per (pair, curve) distance.
pub fn emit_equivalence(report: &EquivalenceReport, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    let mut out = String::from("kind,seed,trial_a,trial_b,feature_family,readout,metric,d_norm\n");
    for p in &report.distances {
        let kind = match p.kind {
            PairKind::Equivalent => "equivalent",
            PairKind::Repeat => "repeat",
        };
        let _ = writeln!(
            out,
            "{kind},{},{},{},{},{},{},{}",
            p.seed,
            p.a,
            p.b,
            feature_name(p.key.feature),
            p.key.readout.name(),
            p.key.metric.name(),
            fmt_num(p.d_norm)
        );
    }
    write(&out_dir.join("equivalence.csv"), &out)?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    write(&out_dir.join("equivalence.json"), &json)
}
