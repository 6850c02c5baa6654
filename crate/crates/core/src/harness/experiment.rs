use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generators::{gen_synthetic_data, gen_workload, SyntheticKind, SyntheticParams, WorkloadKind, WorkloadParams};
use crate::domain::{average_workload_error, DataVector, PrivacyBudget};
use crate::error::{Error, Result};
use crate::estimation::DEFAULT_BRANCHING;
use crate::mechanisms::{MechanismConfig, MechanismName};
use crate::partition::CostMode;
use crate::rng::{derive_seed, label, RngStream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub n: usize,
    #[serde(default)]
    pub params: SyntheticParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// Text file with one count per line.
    File(PathBuf),
    Synthetic(SyntheticSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    #[serde(default)]
    pub params: WorkloadParams,
}

fn default_trials() -> usize {
    3
}
fn default_replicates() -> usize {
    5
}
fn default_branching() -> usize {
    DEFAULT_BRANCHING
}
fn default_share() -> f64 {
    PrivacyBudget::DEFAULT_PARTITION_SHARE
}
fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mechanisms: Vec<MechanismName>,
    pub epsilons: Vec<f64>,
    pub data: DataSource,
    pub workload: WorkloadSpec,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub mode: CostMode,
    #[serde(default = "default_branching")]
    pub branching: usize,
    #[serde(default = "default_share")]
    pub partition_share: f64,
    /// When false every `wall_ms` is written as 0, making the report a pure
    /// function of the configuration.
    #[serde(default = "default_true")]
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mechanisms.is_empty() || self.epsilons.is_empty() {
            return Err(Error::Parameter("need at least one mechanism and one epsilon".into()));
        }
        if self.trials == 0 || self.replicates == 0 {
            return Err(Error::Parameter("trials and replicates must be positive".into()));
        }
        for &eps in &self.epsilons {
            PrivacyBudget::with_share(eps, self.partition_share)?;
        }
        if self.branching < 2 {
            return Err(Error::Parameter("branching must be at least 2".into()));
        }
        Ok(())
    }

    /// Seed of trial `trial` on workload replicate `replicate`.
    pub fn trial_seed(&self, replicate: usize, trial: usize) -> u64 {
        derive_seed(self.seed, &[label("trial"), replicate as u64, trial as u64])
    }

    pub fn workload_seed(&self, replicate: usize) -> u64 {
        derive_seed(self.seed, &[label("workload"), replicate as u64])
    }

    pub fn data_seed(&self) -> u64 {
        derive_seed(self.seed, &[label("data")])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub mechanism: MechanismName,
    pub epsilon: f64,
    pub workload_id: usize,
    pub trial: usize,
    pub seed: u64,
    pub avg_l1_error: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mechanism: MechanismName,
    pub epsilon: f64,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single row.
    pub std: f64,
    pub mean_wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: Option<ExperimentConfig>,
    pub results: Vec<TrialResult>,
    pub aggregates: Vec<Aggregate>,
}

impl Report {
    /// Report over `results` with aggregates per (mechanism, epsilon) in
    /// order of first appearance.
    pub fn from_results(config: Option<ExperimentConfig>, results: Vec<TrialResult>) -> Self {
        let mut keys: Vec<(MechanismName, f64)> = Vec::new();
        for r in &results {
            if !keys.iter().any(|&(m, e)| m == r.mechanism && e == r.epsilon) {
                keys.push((r.mechanism, r.epsilon));
            }
        }
        let aggregates = keys
            .into_iter()
            .map(|(m, e)| {
                let rows: Vec<&TrialResult> = results.iter().filter(|r| r.mechanism == m && r.epsilon == e).collect();
                let count = rows.len();
                let mean = rows.iter().map(|r| r.avg_l1_error).sum::<f64>() / count as f64;
                let std = if count > 1 {
                    (rows.iter().map(|r| (r.avg_l1_error - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
                } else {
                    0.0
                };
                let mean_wall_ms = rows.iter().map(|r| r.wall_ms).sum::<f64>() / count as f64;
                Aggregate {
                    mechanism: m,
                    epsilon: e,
                    count,
                    mean,
                    std,
                    mean_wall_ms,
                }
            })
            .collect();
        Report {
            config,
            results,
            aggregates,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn report_emit(report: &Report, path: &Path) -> Result<()> {
    std::fs::write(path, report.to_json()?)?;
    Ok(())
}

pub fn load_data(source: &DataSource, seed: u64) -> Result<DataVector> {
    match source {
        DataSource::File(path) => crate::io::read_data(path),
        DataSource::Synthetic(spec) => gen_synthetic_data(spec.kind, spec.n, &spec.params, seed),
    }
}

/// Runs every (mechanism, epsilon, workload replicate, trial) cell.
///
/// Trials run in parallel. Each trial's noise comes from a stream keyed by
/// the master seed, the replicate and the trial index only.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let x = load_data(&cfg.data, cfg.data_seed())?;
    let workloads = (0..cfg.replicates)
        .map(|r| gen_workload(cfg.workload.kind, x.len(), &cfg.workload.params, cfg.workload_seed(r)))
        .collect::<Result<Vec<_>>>()?;

    let mut jobs = Vec::new();
    for &m in &cfg.mechanisms {
        for &eps in &cfg.epsilons {
            for r in 0..cfg.replicates {
                for trial in 0..cfg.trials {
                    jobs.push((m, eps, r, trial));
                }
            }
        }
    }
    let results = jobs
        .into_par_iter()
        .map(|(m, eps, r, trial)| {
            let mech = MechanismConfig {
                name: m,
                budget: PrivacyBudget::with_share(eps, cfg.partition_share)?,
                mode: cfg.mode,
                branching: cfg.branching,
            };
            let seed = cfg.trial_seed(r, trial);
            let w = &workloads[r];
            let start = Instant::now();
            let est = mech.run(&x, w, &mut RngStream::new(seed))?;
            let wall_ms = if cfg.record_timing {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            Ok(TrialResult {
                mechanism: m,
                epsilon: eps,
                workload_id: r,
                trial,
                seed,
                avg_l1_error: average_workload_error(w, &x, &est)?,
                wall_ms,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Report::from_results(Some(cfg.clone()), results))
}
