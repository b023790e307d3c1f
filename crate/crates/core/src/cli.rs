//! Command-line front end. Exit codes: 0 success, 1 invalid input, 2 runtime failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::datasets::{generate_ball_videos, write_video_cache, BallGenSpec, DatasetDigest};
use crate::error::{Error, Result};
use crate::experiment::{
    emit_equivalence, emit_results, equivalence_experiment, fmt_num, prepare_data, run_sweep, ExperimentConfig,
    RunRecord, SweepPlan, SweptParam,
};
use crate::meanfield::{self, MeanFieldConfig};
use crate::readout::Metric;
use crate::robustness::{robustness_interval, PerformanceCurve};
use crate::topology::{degree_stats, generate, GraphFamily, TopologySpec};

#[derive(Debug, Parser)]
#[command(name = "lsmlab", version, about = "Spiking reservoir sweeps and robustness analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ParamArg {
    Beta,
    Theta,
    Input,
}

impl From<ParamArg> for SweptParam {
    fn from(p: ParamArg) -> Self {
        match p {
            ParamArg::Beta => SweptParam::Beta,
            ParamArg::Theta => SweptParam::Theta,
            ParamArg::Input => SweptParam::InputI,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    WattsStrogatz,
    ErdosRenyi,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the ball-trajectory videos and write a cache file.
    GenBalls {
        #[arg(long)]
        out: PathBuf,
        /// JSON generator spec; defaults are used when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Sweep one hyperparameter over its three levels.
    Sweep {
        #[arg(long, value_enum)]
        param: ParamArg,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of trial seeds, `seed, seed + 1, ...`.
        #[arg(long, default_value_t = 1)]
        n_seeds: u64,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Compare (beta_alt, theta_ref) with (beta_ref, theta_eq) trials.
    EquivExp {
        #[arg(long)]
        beta_alt: f64,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        n_seeds: u64,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Robustness intervals of every curve in a curves.csv.
    Robustness {
        #[arg(long)]
        curves: PathBuf,
        #[arg(long, default_value_t = 0.85)]
        gamma: f64,
        /// run.json holding per-trial critical weights; defaults to the
        /// run.json next to the curves file when present.
        #[arg(long)]
        run_json: Option<PathBuf>,
        /// Critical weight applied to every curve (overrides run.json).
        #[arg(long)]
        w_crit: Option<f64>,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean ISI and theoretical rate on a weight grid, as CSV.
    Meanfield {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        w_min: f64,
        #[arg(long)]
        w_max: f64,
        #[arg(long, default_value_t = 40)]
        points: usize,
    },
    /// Equivalent threshold for an alternative density.
    Equiv {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        beta_alt: f64,
    },
    /// Degree statistics of a generated graph, as JSON.
    TopologyStats {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long, value_enum, default_value = "watts-strogatz")]
        family: FamilyArg,
        #[arg(long, default_value_t = 0.2)]
        rewiring: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(serde_json::from_str(&text)?)
}

fn with_jobs<T>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    match jobs {
        None => f(),
        Some(0) => Err(Error::invalid("jobs", "must be >= 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid("jobs", e.to_string()))?
            .install(f),
    }
}

fn seed_list(seed: u64, n: u64) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::invalid("n_seeds", "must be >= 1"));
    }
    Ok((0..n).map(|i| seed.wrapping_add(i)).collect())
}

fn load_config(path: &Path, seed: u64) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    cfg.master_seed = seed;
    cfg.validate()?;
    Ok(cfg)
}

/// Parse the curves CSV into curves keyed by their identifying columns.
pub fn read_curves_csv(path: &Path) -> Result<Vec<(Vec<String>, PerformanceCurve)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != crate::experiment::CURVES_HEADER {
        return Err(Error::Parse { path: path.to_path_buf(), offset: 0, reason: "unexpected header".into() });
    }
    let mut order: Vec<Vec<String>> = Vec::new();
    let mut points: BTreeMap<Vec<String>, Vec<[f64; 3]>> = BTreeMap::new();
    let mut offset = header.len() as u64 + 1;
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        let bad = |reason: String| Error::Parse { path: path.to_path_buf(), offset, reason };
        if cells.len() != 11 {
            return Err(bad(format!("expected 11 columns, found {}", cells.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number {s:?}")));
        let key: Vec<String> = cells[..8].iter().map(|s| s.to_string()).collect();
        let p = [num(cells[8])?, num(cells[9])?, num(cells[10])?];
        if !points.contains_key(&key) {
            order.push(key.clone());
        }
        points.entry(key).or_default().push(p);
        offset += line.len() as u64 + 1;
    }
    order
        .into_iter()
        .map(|key| {
            let pts = &points[&key];
            let metric = Metric::parse(&key[5])
                .ok_or_else(|| Error::Parse { path: path.to_path_buf(), offset: 0, reason: format!("unknown metric {}", key[5]) })?;
            let curve = PerformanceCurve::new(
                pts.iter().map(|p| p[0]).collect(),
                pts.iter().map(|p| p[1]).collect(),
                pts.iter().map(|p| p[2]).collect(),
                metric,
            )?;
            Ok((key, curve))
        })
        .collect()
}

fn trial_w_crits(path: &Path) -> Result<BTreeMap<String, f64>> {
    let v: serde_json::Value = read_json(path)?;
    let mut out = BTreeMap::new();
    for t in v["trials"].as_array().into_iter().flatten() {
        if let (Some(id), Some(w)) = (t["trial_id"].as_str(), t["w_crit"].as_f64()) {
            out.insert(id.to_string(), w);
        }
    }
    Ok(out)
}

fn robustness_report(curves: &Path, gamma: f64, run_json: Option<&Path>, w_crit: Option<f64>) -> Result<String> {
    let parsed = read_curves_csv(curves)?;
    let sibling = curves.with_file_name("run.json");
    let crit_map = match run_json {
        Some(p) => trial_w_crits(p)?,
        None if sibling.exists() => trial_w_crits(&sibling)?,
        None => BTreeMap::new(),
    };
    let mut out = String::from(crate::experiment::ROBUSTNESS_HEADER);
    out.push('\n');
    for (key, curve) in parsed {
        let wc = w_crit.or_else(|| crit_map.get(&key[0]).copied());
        let r = robustness_interval(&curve, gamma, wc)?;
        let opt = |b: Option<bool>| b.map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            key.join(","),
            fmt_num(r.gamma),
            fmt_num(r.threshold),
            fmt_num(r.w_min),
            fmt_num(r.w_max),
            fmt_num(r.delta),
            wc.map(fmt_num).unwrap_or_default(),
            opt(r.contains_crit),
            opt(r.midpoint_below_crit),
        );
    }
    Ok(out)
}

pub fn execute(command: Command) -> Result<String> {
    match command {
        Command::GenBalls { out, spec, seed, jobs } => {
            let mut spec: BallGenSpec = match spec {
                Some(p) => read_json(&p)?,
                None => BallGenSpec::default(),
            };
            if let Some(s) = seed {
                spec.seed = s;
            }
            let set = with_jobs(jobs, || generate_ball_videos(&spec))?;
            write_video_cache(&set, &out)?;
            Ok(format!("{} videos, digest {}\n", set.videos.len(), set.digest()))
        }
        Command::Sweep { param, config, out, seed, n_seeds, jobs } => {
            let cfg = load_config(&config, seed)?;
            let seeds = seed_list(seed, n_seeds)?;
            let plan = SweepPlan::from_config(&cfg, param.into());
            plan.validate()?;
            let (data, result) = with_jobs(jobs, || {
                let data = prepare_data(&cfg)?;
                let result = run_sweep(&plan, &data, &seeds)?;
                Ok((data, result))
            })?;
            let mut record = RunRecord::new("sweep", &cfg, &seeds, &data.digest, &data.provenance);
            record.failures = result.failures().map(|(c, e)| format!("seed {} level {}: {e}", c.seed, c.level)).collect();
            let trials: Vec<_> = result.trials().cloned().collect();
            emit_results(&trials, &record, cfg.gamma, &out)?;
            if !record.failures.is_empty() {
                return Err(Error::Failed(format!(
                    "{} of {} trials failed: {}",
                    record.failures.len(),
                    result.cells.len(),
                    record.failures.join("; ")
                )));
            }
            Ok(format!("{} trials written to {}\n", trials.len(), out.display()))
        }
        Command::EquivExp { beta_alt, config, out, seed, n_seeds, jobs } => {
            let cfg = load_config(&config, seed)?;
            let seeds = seed_list(seed, n_seeds)?;
            let (data, report) = with_jobs(jobs, || {
                let data = prepare_data(&cfg)?;
                let report = equivalence_experiment(&cfg, beta_alt, &data, &seeds)?;
                Ok((data, report))
            })?;
            let record = RunRecord::new("equiv-exp", &cfg, &seeds, &data.digest, &data.provenance);
            emit_results(&report.trials, &record, cfg.gamma, &out)?;
            emit_equivalence(&report, &out)?;
            Ok(format!(
                "theta_eq {}, mean d_norm equivalent {}, repeat {}\n",
                fmt_num(report.theta_eq),
                fmt_num(report.mean_distance(crate::experiment::PairKind::Equivalent)),
                fmt_num(report.mean_distance(crate::experiment::PairKind::Repeat)),
            ))
        }
        Command::Robustness { curves, gamma, run_json, w_crit, out } => {
            let text = robustness_report(&curves, gamma, run_json.as_deref(), w_crit)?;
            match out {
                Some(p) => {
                    fs::write(&p, &text).map_err(|e| Error::io(format!("writing {}", p.display()), e))?;
                    Ok(String::new())
                }
                None => Ok(text),
            }
        }
        Command::Meanfield { config, w_min, w_max, points } => {
            let cfg: MeanFieldConfig = read_json(&config)?;
            if !(w_max > w_min) || points < 2 {
                return Err(Error::invalid("meanfield", "need w_max > w_min and points >= 2"));
            }
            let grid = meanfield::linspace(w_min, w_max, points);
            let rates = meanfield::rate_theoretical(&cfg, &grid)?;
            let mut out = String::from("w,isi,rate\n");
            for (w, r) in grid.iter().zip(&rates.values) {
                let _ = writeln!(out, "{},{},{}", fmt_num(*w), fmt_num(1.0 / r), fmt_num(*r));
            }
            Ok(out)
        }
        Command::Equiv { config, beta_alt } => {
            let cfg: MeanFieldConfig = read_json(&config)?;
            cfg.validate()?;
            let theta_eq = meanfield::theta_equivalent(&cfg, beta_alt)?;
            let w_alt = meanfield::w_critical(&MeanFieldConfig { beta: beta_alt, ..cfg });
            let w_eq = meanfield::w_critical(&MeanFieldConfig { theta: theta_eq, ..cfg });
            Ok(format!(
                "theta_eq,w_crit_alt,w_crit_eq,physical\n{},{},{},{}\n",
                fmt_num(theta_eq),
                fmt_num(w_alt),
                fmt_num(w_eq),
                meanfield::is_physical(w_alt)
            ))
        }
        Command::TopologyStats { n, beta, family, rewiring, seed } => {
            let family = match family {
                FamilyArg::WattsStrogatz => GraphFamily::WattsStrogatz,
                FamilyArg::ErdosRenyi => GraphFamily::ErdosRenyi,
            };
            let spec = TopologySpec { n_neurons: n, beta, rewiring_prob: rewiring, family, seed };
            let stats = degree_stats(&generate(&spec)?);
            let mut s = serde_json::to_string_pretty(&stats)?;
            s.push('\n');
            Ok(s)
        }
    }
}

/// Parse `args`, run, print, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}
