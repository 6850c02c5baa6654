//! Private partition selection: score every candidate bucket by its L1
//! cost, perturb the scores with Laplace noise, and keep the partition with
//! the smallest noisy total.

mod costs;
mod dev_tree;
mod dp;

pub use costs::{
    all_costs, all_costs_sequential, bucket_cost, bucket_dev, costs_size_k, partition_cost,
    perturb_costs, CostMode, CostTable,
};
pub use dev_tree::{dev_tree_above, dev_tree_insert, dev_tree_remove, DeviationTree};
pub use dp::least_cost_partition;

use serde::{Deserialize, Serialize};

use crate::domain::{DataVector, Partition};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Sensitivity bound of a single bucket cost under a one-record change.
pub const BUCKET_COST_SENSITIVITY: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionParams {
    pub eps1: f64,
    pub eps2: f64,
    pub mode: CostMode,
    pub sensitivity: f64,
    /// Per-bucket noise reduction. No calibration for it is available, so
    /// enabling it is rejected by [`private_partition`].
    pub per_bucket_refinement: bool,
}

impl PartitionParams {
    pub fn new(eps1: f64, eps2: f64, mode: CostMode) -> Self {
        Self {
            eps1,
            eps2,
            mode,
            sensitivity: BUCKET_COST_SENSITIVITY,
            per_bucket_refinement: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps1", self.eps1), ("eps2", self.eps2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.per_bucket_refinement {
            return Err(Error::Parameter(
                "per-bucket cost sensitivity refinement has no defined calibration".into(),
            ));
        }
        if self.sensitivity != BUCKET_COST_SENSITIVITY {
            return Err(Error::Parameter(format!(
                "bucket cost sensitivity is fixed at {BUCKET_COST_SENSITIVITY}, got {}",
                self.sensitivity
            )));
        }
        Ok(())
    }
}

/// eps1-differentially private partition of `[1,n]`.
pub fn private_partition(x: &DataVector, params: &PartitionParams, rng: &mut RngStream) -> Result<Partition> {
    params.validate()?;
    let exact = all_costs(x, params.eps2, params.mode)?;
    let noisy = perturb_costs(&exact, params.eps1, params.sensitivity, rng)?;
    least_cost_partition(&noisy, x.len())
}

/// Noise-free least-cost partition. Not private.
pub fn exact_partition(x: &DataVector, eps2: f64, mode: CostMode) -> Result<Partition> {
    least_cost_partition(&all_costs(x, eps2, mode)?, x.len())
}

/// Additive slack `t = 4 * sensitivity * n * ln(|B| / delta) / eps1` such that the
/// private partition costs at most `OPT + t` with probability `1 - delta`.
pub fn utility_bound(n: usize, num_buckets: usize, delta: f64, eps1: f64, sensitivity: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("delta must lie in (0,1), got {delta}")));
    }
    if !(eps1 > 0.0) || !(sensitivity > 0.0) || num_buckets == 0 || n == 0 {
        return Err(Error::Parameter("n, |B|, eps1 and sensitivity must be positive".into()));
    }
    Ok(4.0 * sensitivity * n as f64 * (num_buckets as f64 / delta).ln() / eps1)
}
