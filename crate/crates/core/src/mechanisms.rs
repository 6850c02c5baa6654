//! The full two-stage mechanism and the baselines it is compared against.
//! Every mechanism returns a length-`n` estimate of the data vector.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{uniform_expand, DataVector, EstimateVector, Histogram, Partition, PrivacyBudget, Workload};
use crate::error::{Error, Result};
use crate::estimation::{
    build_query_tree, estimate_buckets, estimate_buckets_traced, measure, ols_infer, QueryTree, ScaledStrategy,
    DEFAULT_BRANCHING,
};
use crate::partition::{private_partition, CostMode, PartitionParams};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismName {
    Dawa,
    Identity,
    PartitionLaplace,
    HierUniform,
    HierGeometric,
    GreedyNoPartition,
}

impl MechanismName {
    pub const ALL: [MechanismName; 6] = [
        MechanismName::Dawa,
        MechanismName::Identity,
        MechanismName::PartitionLaplace,
        MechanismName::HierUniform,
        MechanismName::HierGeometric,
        MechanismName::GreedyNoPartition,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MechanismName::Dawa => "dawa",
            MechanismName::Identity => "identity",
            MechanismName::PartitionLaplace => "partition_laplace",
            MechanismName::HierUniform => "hier_uniform",
            MechanismName::HierGeometric => "hier_geometric",
            MechanismName::GreedyNoPartition => "greedy_no_partition",
        }
    }
}

impl fmt::Display for MechanismName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MechanismName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown mechanism '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismConfig {
    pub name: MechanismName,
    pub budget: PrivacyBudget,
    pub mode: CostMode,
    pub branching: usize,
}

impl MechanismConfig {
    /// Default split, pow2 candidates and binary trees.
    pub fn new(name: MechanismName, epsilon: f64) -> Result<Self> {
        Ok(Self {
            name,
            budget: PrivacyBudget::new(epsilon)?,
            mode: CostMode::Pow2,
            branching: DEFAULT_BRANCHING,
        })
    }

    /// Runs the mechanism. Single-stage mechanisms spend the whole epsilon.
    pub fn run(&self, x: &DataVector, w: &Workload, rng: &mut RngStream) -> Result<EstimateVector> {
        let eps = self.budget.epsilon;
        let t = self.branching;
        match self.name {
            MechanismName::Dawa => run_dawa(x, w, &self.budget, self.mode, t, rng),
            MechanismName::Identity => run_identity(x, eps, rng),
            MechanismName::PartitionLaplace => run_partition_laplace(x, &self.budget, self.mode, rng),
            MechanismName::HierUniform => run_hier_uniform(x, eps, t, rng),
            MechanismName::HierGeometric => run_hier_geometric(x, eps, t, rng),
            MechanismName::GreedyNoPartition => run_greedy_no_partition(x, w, eps, t, rng),
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("epsilon must be positive and finite, got {eps}")))
    }
}

/// Private partition with `eps1`, workload-adaptive bucket estimates with
/// `eps2`, then uniform expansion.
pub fn run_dawa(
    x: &DataVector,
    w: &Workload,
    budget: &PrivacyBudget,
    mode: CostMode,
    t: usize,
    rng: &mut RngStream,
) -> Result<EstimateVector> {
    run_dawa_traced(x, w, budget, mode, t, rng).map(|trace| trace.estimate)
}

/// Intermediate results of one DAWA run.
#[derive(Clone, Debug)]
pub struct DawaTrace {
    pub partition: Partition,
    pub strategy: ScaledStrategy,
    pub histogram: Histogram,
    pub estimate: EstimateVector,
}

pub fn run_dawa_traced(
    x: &DataVector,
    w: &Workload,
    budget: &PrivacyBudget,
    mode: CostMode,
    t: usize,
    rng: &mut RngStream,
) -> Result<DawaTrace> {
    let params = PartitionParams::new(budget.eps1, budget.eps2, mode);
    let partition = private_partition(x, &params, rng)?;
    let (histogram, strategy) = estimate_buckets_traced(&partition, w, x, budget.eps2, t, rng)?;
    let estimate = uniform_expand(&histogram, x.len())?;
    Ok(DawaTrace {
        partition,
        strategy,
        histogram,
        estimate,
    })
}

/// Laplace(1/eps) noise on every entry.
pub fn run_identity(x: &DataVector, eps: f64, rng: &mut RngStream) -> Result<EstimateVector> {
    check_eps(eps)?;
    let values = x
        .counts()
        .iter()
        .map(|&c| Ok(c as f64 + rng.laplace(1.0 / eps)?))
        .collect::<Result<Vec<_>>>()?;
    EstimateVector::new(values)
}

/// Laplace(1/eps2) noise on every bucket count of a given partition.
pub fn laplace_on_partition(x: &DataVector, b: &Partition, eps2: f64, rng: &mut RngStream) -> Result<EstimateVector> {
    check_eps(eps2)?;
    let stats = x
        .bucket_counts(b)?
        .into_iter()
        .map(|c| Ok(c + rng.laplace(1.0 / eps2)?))
        .collect::<Result<Vec<_>>>()?;
    uniform_expand(&Histogram::new(b.clone(), stats)?, x.len())
}

/// Private partition followed by plain Laplace bucket counts.
pub fn run_partition_laplace(
    x: &DataVector,
    budget: &PrivacyBudget,
    mode: CostMode,
    rng: &mut RngStream,
) -> Result<EstimateVector> {
    let params = PartitionParams::new(budget.eps1, budget.eps2, mode);
    let b = private_partition(x, &params, rng)?;
    laplace_on_partition(x, &b, budget.eps2, rng)
}

/// Every node gets the same scaling, `1 / (max number of nodes covering a leaf)`.
pub fn uniform_scalings(tree: &QueryTree) -> Vec<f64> {
    let mut ones = tree.clone();
    ones.set_scalings(&vec![1.0; tree.len()]).expect("length matches");
    let max_cover = ones.sensitivity();
    vec![1.0 / max_cover; tree.len()]
}

/// Scalings shrinking by `t^(1/3)` per level from the leaves up, normalized
/// so the largest leaf cover sum is 1.
pub fn geometric_scalings(tree: &QueryTree) -> Vec<f64> {
    let r = (tree.branching() as f64).cbrt();
    let h = tree.height() as i32;
    let raw: Vec<f64> = tree.nodes().iter().map(|n| r.powi(-(h - n.depth as i32))).collect();
    let mut probe = tree.clone();
    probe.set_scalings(&raw).expect("length matches");
    let max_cover = probe.sensitivity();
    raw.into_iter().map(|c| c / max_cover).collect()
}

fn run_hier(x: &DataVector, eps: f64, t: usize, scalings: fn(&QueryTree) -> Vec<f64>, rng: &mut RngStream) -> Result<EstimateVector> {
    check_eps(eps)?;
    let mut tree = build_query_tree(x.len(), t)?;
    tree.set_scalings(&scalings(&tree))?;
    let counts: Vec<f64> = x.counts().iter().map(|&c| c as f64).collect();
    let ms = measure(&counts, &tree, eps, rng)?;
    EstimateVector::new(ols_infer(&tree, &ms)?)
}

/// Hierarchy over the raw domain with equal scaling on every level.
pub fn run_hier_uniform(x: &DataVector, eps: f64, t: usize, rng: &mut RngStream) -> Result<EstimateVector> {
    run_hier(x, eps, t, uniform_scalings, rng)
}

/// Hierarchy over the raw domain with leaf-heavy geometric scaling.
pub fn run_hier_geometric(x: &DataVector, eps: f64, t: usize, rng: &mut RngStream) -> Result<EstimateVector> {
    run_hier(x, eps, t, geometric_scalings, rng)
}

/// Second stage alone on unit buckets with the full budget.
pub fn run_greedy_no_partition(
    x: &DataVector,
    w: &Workload,
    eps: f64,
    t: usize,
    rng: &mut RngStream,
) -> Result<EstimateVector> {
    check_eps(eps)?;
    let b = Partition::unit(x.len());
    let h = estimate_buckets(&b, w, x, eps, t, rng)?;
    uniform_expand(&h, x.len())
}
