//! Data model shared by every stage: count vectors, range queries, partitions
//! and histograms.
//!
//! All public indices are 1-based and intervals are inclusive, so the range
//! query `[2,6]` sums `x_2 + ... + x_6`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vector of nonnegative integral counts over an ordered domain of size `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataVector {
    counts: Vec<u64>,
}

impl DataVector {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Parameter("data vector must have n >= 1".into()));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Count at 1-based position `j`.
    pub fn get(&self, j: usize) -> Option<u64> {
        j.checked_sub(1).and_then(|i| self.counts.get(i).copied())
    }

    pub fn total(&self) -> u128 {
        self.counts.iter().map(|&c| c as u128).sum()
    }

    /// Exact count of the interval `b` (no bounds check beyond slicing).
    pub fn interval_sum(&self, b: Interval) -> u128 {
        self.counts[b.lo - 1..b.hi].iter().map(|&c| c as u128).sum()
    }

    /// True bucket counts `B(x)`.
    pub fn bucket_counts(&self, partition: &Partition) -> Result<Vec<f64>> {
        check_len(partition.n(), self.len())?;
        Ok(partition
            .buckets()
            .iter()
            .map(|&b| self.interval_sum(b) as f64)
            .collect())
    }

    pub fn to_estimate(&self) -> EstimateVector {
        EstimateVector {
            values: self.counts.iter().map(|&c| c as f64).collect(),
        }
    }
}

/// A real-valued estimate of a data vector. Values are never rounded or clamped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateVector {
    values: Vec<f64>,
}

impl EstimateVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Parameter("estimate vector must have n >= 1".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, j: usize) -> Option<f64> {
        j.checked_sub(1).and_then(|i| self.values.get(i).copied())
    }
}

/// Anything a range query can be evaluated against.
pub trait RangeSum {
    fn domain_size(&self) -> usize;
    /// Sum over the 0-based half-open slice `[start, end)`.
    fn slice_sum(&self, start: usize, end: usize) -> f64;
}

impl RangeSum for DataVector {
    fn domain_size(&self) -> usize {
        self.len()
    }

    fn slice_sum(&self, start: usize, end: usize) -> f64 {
        self.counts[start..end].iter().map(|&c| c as u128).sum::<u128>() as f64
    }
}

impl RangeSum for EstimateVector {
    fn domain_size(&self) -> usize {
        self.len()
    }

    fn slice_sum(&self, start: usize, end: usize) -> f64 {
        self.values[start..end].iter().sum()
    }
}

impl RangeSum for [f64] {
    fn domain_size(&self) -> usize {
        self.len()
    }

    fn slice_sum(&self, start: usize, end: usize) -> f64 {
        self[start..end].iter().sum()
    }
}

/// An inclusive 1-based interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Interval {
    pub lo: usize,
    pub hi: usize,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo == 0 || lo > hi {
            return Err(Error::InvalidInterval { lo, hi, n: 0 });
        }
        Ok(Self { lo, hi })
    }

    pub fn unit(j: usize) -> Self {
        Self { lo: j, hi: j }
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_valid_for(&self, n: usize) -> bool {
        self.lo >= 1 && self.lo <= self.hi && self.hi <= n
    }

    pub fn check(&self, n: usize) -> Result<()> {
        if self.is_valid_for(n) {
            Ok(())
        } else {
            Err(Error::InvalidInterval {
                lo: self.lo,
                hi: self.hi,
                n,
            })
        }
    }

    pub fn contains(&self, j: usize) -> bool {
        self.lo <= j && j <= self.hi
    }

    /// Number of positions shared with `other`.
    pub fn overlap(&self, other: &Interval) -> usize {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo > hi {
            0
        } else {
            hi - lo + 1
        }
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// A batch of range queries over a domain of size `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    queries: Vec<Interval>,
    n: usize,
}

impl Workload {
    pub fn new(queries: Vec<Interval>, n: usize) -> Result<Self> {
        if queries.is_empty() {
            return Err(Error::Parameter("workload must contain at least one query".into()));
        }
        for q in &queries {
            q.check(n)?;
        }
        Ok(Self { queries, n })
    }

    /// All unit-length intervals `[1,1] .. [n,n]`.
    pub fn identity(n: usize) -> Result<Self> {
        Self::new((1..=n).map(Interval::unit).collect(), n)
    }

    pub fn queries(&self) -> &[Interval] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `W(x)`, one direct summation per query.
    pub fn answers<X: RangeSum + ?Sized>(&self, x: &X) -> Result<Vec<f64>> {
        check_len(self.n, x.domain_size())?;
        Ok(self
            .queries
            .iter()
            .map(|q| x.slice_sum(q.lo - 1, q.hi))
            .collect())
    }
}

/// A partition of `[1,n]` into adjacent, sorted, disjoint buckets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    buckets: Vec<Interval>,
    n: usize,
}

impl Partition {
    pub fn new(buckets: Vec<Interval>, n: usize) -> Result<Self> {
        if !validate_partition(&buckets, n) {
            return Err(Error::InvalidPartition(format!(
                "{} buckets do not tile [1,{n}]",
                buckets.len()
            )));
        }
        Ok(Self { buckets, n })
    }

    /// One bucket per position.
    pub fn unit(n: usize) -> Self {
        Self {
            buckets: (1..=n).map(Interval::unit).collect(),
            n,
        }
    }

    /// The whole domain as a single bucket.
    pub fn single(n: usize) -> Self {
        Self {
            buckets: vec![Interval { lo: 1, hi: n }],
            n,
        }
    }

    /// Builds a partition from the bucket lengths, left to right.
    pub fn from_lengths(lengths: &[usize]) -> Result<Self> {
        let mut buckets = Vec::with_capacity(lengths.len());
        let mut lo = 1;
        for &len in lengths {
            if len == 0 {
                return Err(Error::InvalidPartition("zero-length bucket".into()));
            }
            buckets.push(Interval { lo, hi: lo + len - 1 });
            lo += len;
        }
        Self::new(buckets, lo - 1)
    }

    pub fn buckets(&self) -> &[Interval] {
        &self.buckets
    }

    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// 0-based index of the bucket containing 1-based position `j`.
    pub fn bucket_of(&self, j: usize) -> Option<usize> {
        if j == 0 || j > self.n {
            return None;
        }
        let idx = self.buckets.partition_point(|b| b.hi < j);
        Some(idx)
    }
}

/// A partition paired with one real statistic per bucket.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    partition: Partition,
    stats: Vec<f64>,
}

impl Histogram {
    pub fn new(partition: Partition, stats: Vec<f64>) -> Result<Self> {
        check_len(partition.len(), stats.len())?;
        Ok(Self { partition, stats })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn stats(&self) -> &[f64] {
        &self.stats
    }
}

/// Split of a total budget `epsilon` between partitioning and estimation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub eps1: f64,
    pub eps2: f64,
}

impl PrivacyBudget {
    pub const DEFAULT_PARTITION_SHARE: f64 = 0.25;

    /// Default split: a quarter for partitioning, the rest for estimation.
    pub fn new(epsilon: f64) -> Result<Self> {
        Self::with_share(epsilon, Self::DEFAULT_PARTITION_SHARE)
    }

    pub fn with_share(epsilon: f64, partition_share: f64) -> Result<Self> {
        if !(partition_share > 0.0 && partition_share < 1.0) {
            return Err(Error::Parameter(format!(
                "partition share must lie in (0,1), got {partition_share}"
            )));
        }
        let eps1 = partition_share * epsilon;
        Self::split(epsilon, eps1, epsilon - eps1)
    }

    pub fn split(epsilon: f64, eps1: f64, eps2: f64) -> Result<Self> {
        for (name, v) in [("epsilon", epsilon), ("eps1", eps1), ("eps2", eps2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if (eps1 + eps2 - epsilon).abs() > 1e-12 * epsilon.max(1.0) {
            return Err(Error::Parameter(format!(
                "eps1 + eps2 = {} does not equal epsilon = {epsilon}",
                eps1 + eps2
            )));
        }
        Ok(Self { epsilon, eps1, eps2 })
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

/// `q(x) = sum_{j=lo..hi} x_j`.
pub fn evaluate_query<X: RangeSum + ?Sized>(q: Interval, x: &X) -> Result<f64> {
    q.check(x.domain_size())?;
    Ok(x.slice_sum(q.lo - 1, q.hi))
}

/// True iff the buckets are sorted, adjacent, and tile exactly `[1,n]`.
pub fn validate_partition(buckets: &[Interval], n: usize) -> bool {
    if n == 0 || buckets.is_empty() {
        return false;
    }
    let mut next = 1;
    for b in buckets {
        if b.lo != next || b.hi < b.lo {
            return false;
        }
        next = b.hi + 1;
    }
    next == n + 1
}

/// Spreads each bucket statistic evenly over the bucket's positions.
pub fn uniform_expand(h: &Histogram, n: usize) -> Result<EstimateVector> {
    let p = h.partition();
    if p.n() != n || !validate_partition(p.buckets(), n) {
        return Err(Error::InvalidPartition(format!(
            "histogram partition does not cover [1,{n}]"
        )));
    }
    let mut values = Vec::with_capacity(n);
    for (b, &s) in p.buckets().iter().zip(h.stats()) {
        let share = s / b.len() as f64;
        values.extend(std::iter::repeat_n(share, b.len()));
    }
    EstimateVector::new(values)
}

/// `(1/m) * sum_i |w_i(x) - w_i(xhat)|`.
pub fn average_workload_error<X, Y>(w: &Workload, x: &X, xhat: &Y) -> Result<f64>
where
    X: RangeSum + ?Sized,
    Y: RangeSum + ?Sized,
{
    check_len(x.domain_size(), xhat.domain_size())?;
    let truth = w.answers(x)?;
    let est = w.answers(xhat)?;
    let total: f64 = truth.iter().zip(&est).map(|(a, b)| (a - b).abs()).sum();
    Ok(total / w.len() as f64)
}
