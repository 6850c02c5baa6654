use crate::domain::{DataVector, Interval, Partition};
use crate::error::{Error, Result};
use crate::estimation::{strategy_error, QueryTree};
use crate::partition::partition_cost;
use crate::transform::TransformedWorkload;

/// Largest domain accepted by [`oracle_brute_partition`].
pub const BRUTE_FORCE_MAX_N: usize = 12;

/// Least-cost partition by enumerating all `2^(n-1)` partitions.
pub fn oracle_brute_partition(x: &DataVector, eps2: f64) -> Result<(Partition, f64)> {
    let n = x.len();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::Parameter(format!(
            "brute-force partition supports n <= {BRUTE_FORCE_MAX_N}, got {n}"
        )));
    }
    let mut best: Option<(Partition, f64)> = None;
    for mask in 0u32..1 << (n - 1) {
        // bit i set: a bucket ends at position i + 1
        let mut buckets = Vec::new();
        let mut lo = 1;
        for pos in 1..=n {
            if pos == n || mask >> (pos - 1) & 1 == 1 {
                buckets.push(Interval { lo, hi: pos });
                lo = pos + 1;
            }
        }
        let p = Partition::new(buckets, n)?;
        let cost = partition_cost(x, &p, eps2)?;
        if best.as_ref().is_none_or(|(_, c)| cost < *c) {
            best = Some((p, cost));
        }
    }
    Ok(best.expect("at least one partition"))
}

/// Dense evaluation of the expected total squared error of a scaled tree.
pub fn oracle_dense_stage2(what: &TransformedWorkload, tree: &QueryTree, eps2: f64) -> Result<f64> {
    if tree.k() > 64 {
        return Err(Error::Parameter(format!("dense oracle supports k <= 64, got {}", tree.k())));
    }
    strategy_error(what, tree, eps2)
}
