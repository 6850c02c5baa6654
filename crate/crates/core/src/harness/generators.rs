use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Pareto};
use serde::{Deserialize, Serialize};

use crate::domain::{DataVector, Interval, Workload};
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorkloadKind {
    Identity,
    Uniform,
    Clustered,
    LargeClustered,
}

impl WorkloadKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WorkloadKind::Identity => "identity",
            WorkloadKind::Uniform => "uniform",
            WorkloadKind::Clustered => "clustered",
            WorkloadKind::LargeClustered => "large-clustered",
        }
    }

    fn default_sigma(self) -> f64 {
        match self {
            WorkloadKind::LargeClustered => 1024.0,
            _ => 256.0,
        }
    }
}

impl fmt::Display for WorkloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WorkloadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            WorkloadKind::Identity,
            WorkloadKind::Uniform,
            WorkloadKind::Clustered,
            WorkloadKind::LargeClustered,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| Error::Parse(format!("unknown workload kind '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadParams {
    /// Query count of the uniform workload.
    pub queries: usize,
    pub clusters: usize,
    pub per_cluster: usize,
    /// Endpoint spread of clustered workloads; defaults to 256, or 1024 for
    /// the large variant.
    pub sigma: Option<f64>,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        Self {
            queries: 2000,
            clusters: 5,
            per_cluster: 400,
            sigma: None,
        }
    }
}

fn clamp_round(v: f64, n: usize) -> usize {
    v.round().clamp(1.0, n as f64) as usize
}

pub fn gen_workload(kind: WorkloadKind, n: usize, params: &WorkloadParams, seed: u64) -> Result<Workload> {
    if n == 0 {
        return Err(Error::Parameter("domain size must be positive".into()));
    }
    let mut rng = RngStream::new(seed);
    let queries = match kind {
        WorkloadKind::Identity => return Workload::identity(n),
        WorkloadKind::Uniform => (0..params.queries)
            .map(|_| {
                let a = rng.uniform_usize(1, n);
                let b = rng.uniform_usize(1, n);
                Interval { lo: a.min(b), hi: a.max(b) }
            })
            .collect(),
        WorkloadKind::Clustered | WorkloadKind::LargeClustered => {
            let sigma = params.sigma.unwrap_or(kind.default_sigma());
            let mut qs = Vec::with_capacity(params.clusters * params.per_cluster);
            for _ in 0..params.clusters {
                let c = 1.0 + (n - 1) as f64 * rng.random::<f64>();
                for _ in 0..params.per_cluster {
                    let left = rng.normal(0.0, sigma)?.abs();
                    let right = rng.normal(0.0, sigma)?.abs();
                    let lo = clamp_round(c - left, n);
                    let hi = clamp_round(c + right, n);
                    qs.push(Interval { lo: lo.min(hi), hi: lo.max(hi) });
                }
            }
            qs
        }
    };
    Workload::new(queries, n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    Constant,
    PiecewiseConstant,
    HeavyTail,
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(SyntheticKind::Constant),
            "piecewise_constant" => Ok(SyntheticKind::PiecewiseConstant),
            "heavy_tail" => Ok(SyntheticKind::HeavyTail),
            _ => Err(Error::Parse(format!("unknown data kind '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticParams {
    /// Per-cell count of constant data.
    pub value: u64,
    /// Number of uniform runs of piecewise-constant data.
    pub segments: usize,
    /// Target total count of piecewise-constant and heavy-tail data.
    pub scale: u64,
    /// Pareto shape of heavy-tail cells.
    pub tail_index: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            value: 5,
            segments: 8,
            scale: 100_000,
            tail_index: 1.5,
        }
    }
}

pub fn gen_synthetic_data(kind: SyntheticKind, n: usize, params: &SyntheticParams, seed: u64) -> Result<DataVector> {
    if n == 0 {
        return Err(Error::Parameter("domain size must be positive".into()));
    }
    let mut rng = RngStream::new(seed);
    let scale = params.scale as f64;
    let counts = match kind {
        SyntheticKind::Constant => vec![params.value; n],
        SyntheticKind::PiecewiseConstant => {
            let s = params.segments;
            if s == 0 || s > n {
                return Err(Error::Parameter(format!("need 1 <= segments <= n, got {s} for n = {n}")));
            }
            let mut cuts: Vec<usize> = sample(&mut rng, n - 1, s - 1).into_iter().map(|c| c + 1).collect();
            cuts.sort_unstable();
            let bounds: Vec<usize> = std::iter::once(0).chain(cuts).chain(std::iter::once(n)).collect();
            let weights: Vec<f64> = (0..s).map(|_| rng.random_range(0.05..1.0)).collect();
            let mass: f64 = weights.iter().zip(bounds.windows(2)).map(|(w, b)| w * (b[1] - b[0]) as f64).sum();
            let mut counts = Vec::with_capacity(n);
            let mut prev = None;
            for (w, b) in weights.iter().zip(bounds.windows(2)) {
                let mut level = (scale * w / mass).round() as u64;
                if prev == Some(level) {
                    level += 1;
                }
                prev = Some(level);
                counts.extend(std::iter::repeat_n(level, b[1] - b[0]));
            }
            counts
        }
        SyntheticKind::HeavyTail => {
            let dist = Pareto::new(1.0, params.tail_index)
                .map_err(|e| Error::Parameter(format!("pareto distribution: {e}")))?;
            let raw: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
            let total: f64 = raw.iter().sum();
            raw.iter().map(|r| (scale * r / total).round() as u64).collect()
        }
    };
    DataVector::new(counts)
}
