use super::costs::CostTable;
use crate::domain::{Interval, Partition};
use crate::error::{Error, Result};

/// Minimum-total-cost partition over the candidates in `costs`.
///
/// Dynamic program over prefixes: `c_j = min_i c_{i-1} + cost[[i,j]]` with
/// `c_0 = 0`. Candidate last buckets are tried longest first and only a
/// strictly smaller total replaces the incumbent, so ties go to the longer
/// last bucket. Runs in O(|candidates| + n).
pub fn least_cost_partition(costs: &CostTable, n: usize) -> Result<Partition> {
    if n != costs.n() || n == 0 {
        return Err(Error::Dimension {
            expected: costs.n(),
            got: n,
        });
    }
    let lengths = costs.lengths();
    if lengths.first() != Some(&1) {
        return Err(Error::Parameter("cost table lacks unit buckets".into()));
    }
    let mut best = vec![f64::INFINITY; n + 1];
    let mut last_len = vec![0usize; n + 1];
    best[0] = 0.0;
    for j in 1..=n {
        for (k, &len) in lengths.iter().enumerate().rev() {
            if len > j {
                continue;
            }
            let start = j - len;
            let cand = best[start] + costs.by_length(k)[start];
            if cand < best[j] {
                best[j] = cand;
                last_len[j] = len;
            }
        }
        if last_len[j] == 0 {
            // every candidate was NaN
            return Err(Error::Parameter(format!("no finite cost covers position {j}")));
        }
    }
    let mut buckets = Vec::new();
    let mut j = n;
    while j > 0 {
        let len = last_len[j];
        buckets.push(Interval { lo: j - len + 1, hi: j });
        j -= len;
    }
    buckets.reverse();
    Partition::new(buckets, n)
}
