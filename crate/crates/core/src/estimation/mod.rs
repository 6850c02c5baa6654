//! Workload-adaptive estimation of bucket counts.
//!
//! A fixed hierarchy of interval queries over the buckets is scaled greedily
//! from the leaves up, each scaled query is answered with Laplace noise, and
//! the noisy answers are reconciled by least squares.

mod dense;
mod greedy;
mod ols;
mod tree;

pub use dense::{dense_objective, direct_inverse, local_scalings, strategy_error, woodbury_inverse};
pub use greedy::{
    child_stats, combine, decay, final_scalings, greedy_scale, leaf_cache, objective_at_lambda, optimize_lambda,
    ChildStats, NodeCache, ScaledStrategy, LAMBDA_CAP,
};
pub use ols::{measure, ols_infer, Measurement, MeasurementSet};
pub use tree::{build_query_tree, QueryTree, TreeNode};

use crate::domain::{DataVector, Histogram, Partition, Workload};
use crate::error::Result;
use crate::rng::RngStream;
use crate::transform::transform_workload;

/// Default branching factor of the query tree.
pub const DEFAULT_BRANCHING: usize = 2;

/// eps2-differentially private bucket statistics for partition `b`, tuned to
/// workload `w`.
pub fn estimate_buckets(
    b: &Partition,
    w: &Workload,
    x: &DataVector,
    eps2: f64,
    t: usize,
    rng: &mut RngStream,
) -> Result<Histogram> {
    estimate_buckets_traced(b, w, x, eps2, t, rng).map(|(h, _)| h)
}

/// [`estimate_buckets`] that also returns the scaled strategy.
pub fn estimate_buckets_traced(
    b: &Partition,
    w: &Workload,
    x: &DataVector,
    eps2: f64,
    t: usize,
    rng: &mut RngStream,
) -> Result<(Histogram, ScaledStrategy)> {
    let what = transform_workload(w, b)?;
    let tree = build_query_tree(b.len(), t)?;
    let scaled = greedy_scale(&what, &tree)?;
    let counts = x.bucket_counts(b)?;
    let ms = measure(&counts, &scaled.tree, eps2, rng)?;
    let s = ols_infer(&scaled.tree, &ms)?;
    Ok((Histogram::new(b.clone(), s)?, scaled))
}
