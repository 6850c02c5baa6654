//! L1 bucket costs: `bcost(x, b) = dev(x, b) + 1/eps2`.
//!
//! Deviations are carried as exact integers. For a bucket of length `L`
//! with total `S`, `dev = 2 * (L * S_plus - c_plus * S) / L`, where `S_plus`
//! and `c_plus` are the sum and count of entries with `x_j * L >= S`. The
//! numerator is the same integer however it is computed, so the sliding-tree
//! path and a direct scan agree bit for bit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dev_tree::DeviationTree;
use crate::domain::{DataVector, Interval, Partition};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Which candidate buckets the partition search may use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMode {
    /// Every interval `[i,j]`.
    All,
    /// Intervals whose length is a power of two.
    #[default]
    Pow2,
}

impl CostMode {
    /// Candidate bucket lengths, ascending.
    pub fn lengths(self, n: usize) -> Vec<usize> {
        match self {
            CostMode::All => (1..=n).collect(),
            CostMode::Pow2 => std::iter::successors(Some(1usize), |&l| l.checked_mul(2))
                .take_while(|&l| l <= n)
                .collect(),
        }
    }
}

impl std::str::FromStr for CostMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(CostMode::All),
            "pow2" => Ok(CostMode::Pow2),
            other => Err(Error::Parameter(format!("unknown cost mode `{other}`"))),
        }
    }
}

/// Cost of every candidate bucket, grouped by length.
#[derive(Clone, Debug, PartialEq)]
pub struct CostTable {
    mode: CostMode,
    n: usize,
    lengths: Vec<usize>,
    /// `costs[k][s]` is the cost of the bucket of length `lengths[k]` starting
    /// at 0-based offset `s`.
    costs: Vec<Vec<f64>>,
}

impl CostTable {
    /// Builds a table by evaluating `f` on every candidate bucket.
    pub fn from_fn(n: usize, mode: CostMode, mut f: impl FnMut(Interval) -> f64) -> Self {
        let lengths = mode.lengths(n);
        let costs = lengths
            .iter()
            .map(|&len| {
                (1..=n + 1 - len)
                    .map(|lo| f(Interval { lo, hi: lo + len - 1 }))
                    .collect()
            })
            .collect();
        Self { mode, n, lengths, costs }
    }

    pub fn mode(&self) -> CostMode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    /// Number of candidate buckets.
    pub fn len(&self) -> usize {
        self.costs.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, b: Interval) -> Option<f64> {
        if !b.is_valid_for(self.n) {
            return None;
        }
        let k = self.lengths.binary_search(&b.len()).ok()?;
        Some(self.costs[k][b.lo - 1])
    }

    /// Costs of the buckets with the `k`-th candidate length, by start offset.
    pub(crate) fn by_length(&self, k: usize) -> &[f64] {
        &self.costs[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Interval, f64)> + '_ {
        self.lengths.iter().zip(&self.costs).flat_map(|(&len, row)| {
            row.iter()
                .enumerate()
                .map(move |(s, &c)| (Interval { lo: s + 1, hi: s + len }, c))
        })
    }

    /// Total table cost of a partition, or `None` if it uses a bucket
    /// outside the candidate set.
    pub fn partition_cost(&self, p: &Partition) -> Option<f64> {
        p.buckets().iter().try_fold(0.0, |acc, &b| Some(acc + self.get(b)?))
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            mode: self.mode,
            n: self.n,
            lengths: self.lengths.clone(),
            costs: self
                .costs
                .iter()
                .map(|row| row.iter().map(|&c| f(c)).collect())
                .collect(),
        }
    }
}

fn check_eps2(eps2: f64) -> Result<()> {
    if eps2 > 0.0 && eps2.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("eps2 must be positive and finite, got {eps2}")))
    }
}

/// `2 * (L * S_plus - c_plus * S)` as an exact integer.
fn dev_numerator(len: u128, total: u128, upper_sum: u128, upper_count: u64) -> u128 {
    2 * (len * upper_sum - upper_count as u128 * total)
}

fn dev_from_numerator(numerator: u128, len: usize) -> f64 {
    numerator as f64 / len as f64
}

/// `sum_{j in b} |x_j - b(x)/|b||`, via the sum of deviations above the mean.
pub fn bucket_dev(x: &DataVector, b: Interval) -> Result<f64> {
    b.check(x.len())?;
    let slice = &x.counts()[b.lo - 1..b.hi];
    let len = slice.len() as u128;
    let total: u128 = slice.iter().map(|&v| v as u128).sum();
    let (mut upper_sum, mut upper_count) = (0u128, 0u64);
    for &v in slice {
        if v as u128 * len >= total {
            upper_sum += v as u128;
            upper_count += 1;
        }
    }
    Ok(dev_from_numerator(
        dev_numerator(len, total, upper_sum, upper_count),
        slice.len(),
    ))
}

pub fn bucket_cost(x: &DataVector, b: Interval, eps2: f64) -> Result<f64> {
    check_eps2(eps2)?;
    Ok(bucket_dev(x, b)? + 1.0 / eps2)
}

/// `pcost(x, B) = sum_i dev(x, b_i) + k / eps2`, summed bucket by bucket.
pub fn partition_cost(x: &DataVector, p: &Partition, eps2: f64) -> Result<f64> {
    check_eps2(eps2)?;
    if p.n() != x.len() {
        return Err(Error::InvalidPartition(format!(
            "partition covers [1,{}] but data has n = {}",
            p.n(),
            x.len()
        )));
    }
    p.buckets()
        .iter()
        .try_fold(0.0, |acc, &b| Ok(acc + bucket_cost(x, b, eps2)?))
}

/// Costs of every bucket of length `len`, indexed by 0-based start, using a
/// sliding window over a [`DeviationTree`].
fn costs_of_length(counts: &[u64], eps2: f64, len: usize) -> Vec<f64> {
    let n = counts.len();
    let noise = 1.0 / eps2;
    if len == 1 {
        return vec![0.0 + noise; n];
    }
    let mut tree = DeviationTree::new();
    let mut total: u128 = 0;
    for &v in &counts[..len] {
        tree.insert(v);
        total += v as u128;
    }
    let l = len as u128;
    let mut out = Vec::with_capacity(n + 1 - len);
    for start in 0..=n - len {
        let (upper_sum, upper_count) = tree.upper_stats(total, l);
        out.push(dev_from_numerator(dev_numerator(l, total, upper_sum, upper_count), len) + noise);
        if start + len < n {
            let leaving = counts[start];
            let entering = counts[start + len];
            tree.remove(leaving).expect("window value present in tree");
            tree.insert(entering);
            total = total - leaving as u128 + entering as u128;
        }
    }
    out
}

/// Cost of every interval of exactly `len` positions.
pub fn costs_size_k(x: &DataVector, eps2: f64, len: usize) -> Result<Vec<(Interval, f64)>> {
    check_eps2(eps2)?;
    if len == 0 || len > x.len() {
        return Err(Error::Parameter(format!(
            "bucket length {len} outside [1,{}]",
            x.len()
        )));
    }
    Ok(costs_of_length(x.counts(), eps2, len)
        .into_iter()
        .enumerate()
        .map(|(s, c)| (Interval { lo: s + 1, hi: s + len }, c))
        .collect())
}

/// Costs of every candidate bucket; lengths are processed in parallel.
pub fn all_costs(x: &DataVector, eps2: f64, mode: CostMode) -> Result<CostTable> {
    check_eps2(eps2)?;
    let lengths = mode.lengths(x.len());
    let costs = lengths
        .par_iter()
        .map(|&len| costs_of_length(x.counts(), eps2, len))
        .collect();
    Ok(CostTable {
        mode,
        n: x.len(),
        lengths,
        costs,
    })
}

/// Single-threaded [`all_costs`], for timing measurements.
pub fn all_costs_sequential(x: &DataVector, eps2: f64, mode: CostMode) -> Result<CostTable> {
    check_eps2(eps2)?;
    let lengths = mode.lengths(x.len());
    let costs = lengths
        .iter()
        .map(|&len| costs_of_length(x.counts(), eps2, len))
        .collect();
    Ok(CostTable {
        mode,
        n: x.len(),
        lengths,
        costs,
    })
}

/// Adds independent Laplace(2 * sensitivity / eps1) noise to every entry.
/// Entries are visited by length, then by start, so a seed fixes the result.
pub fn perturb_costs(
    table: &CostTable,
    eps1: f64,
    sensitivity: f64,
    rng: &mut RngStream,
) -> Result<CostTable> {
    if !(eps1 > 0.0 && eps1.is_finite()) {
        return Err(Error::Parameter(format!("eps1 must be positive and finite, got {eps1}")));
    }
    if !(sensitivity > 0.0 && sensitivity.is_finite()) {
        return Err(Error::Parameter(format!(
            "cost sensitivity must be positive, got {sensitivity}"
        )));
    }
    let scale = 2.0 * sensitivity / eps1;
    let mut costs = Vec::with_capacity(table.costs.len());
    for row in &table.costs {
        let mut noisy = Vec::with_capacity(row.len());
        for &c in row {
            noisy.push(c + rng.laplace(scale)?);
        }
        costs.push(noisy);
    }
    Ok(CostTable {
        mode: table.mode,
        n: table.n,
        lengths: table.lengths.clone(),
        costs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_data() -> DataVector {
        DataVector::new(vec![2, 3, 8, 1, 0, 2, 0, 4, 2, 4]).unwrap()
    }

    fn iv(lo: usize, hi: usize) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn example_deviations() {
        let x = sample_data();
        assert_eq!(bucket_dev(&x, iv(1, 2)).unwrap(), 1.0);
        assert_eq!(bucket_dev(&x, iv(3, 3)).unwrap(), 0.0);
        assert_eq!(bucket_dev(&x, iv(4, 7)).unwrap(), 3.0);
        assert!((bucket_dev(&x, iv(8, 10)).unwrap() - 8.0 / 3.0).abs() < 1e-12);
        assert!((bucket_dev(&x, iv(1, 10)).unwrap() - 17.2).abs() < 1e-12);
    }

    #[test]
    fn constant_bucket_has_no_deviation() {
        let x = DataVector::new(vec![6; 9]).unwrap();
        assert_eq!(bucket_dev(&x, iv(2, 8)).unwrap(), 0.0);
    }

    #[test]
    fn example_costs() {
        let x = sample_data();
        assert_eq!(bucket_cost(&x, iv(3, 3), 1.0).unwrap(), 1.0);
        assert!((bucket_cost(&x, iv(1, 10), 1.0).unwrap() - 18.2).abs() < 1e-12);
        assert!((bucket_cost(&x, iv(1, 10), 0.1).unwrap() - 27.2).abs() < 1e-12);
        for j in 1..=10 {
            assert_eq!(bucket_cost(&x, iv(j, j), 0.3).unwrap(), 1.0 / 0.3);
        }
        assert!(bucket_cost(&x, iv(1, 2), 0.0).is_err());
        assert!(bucket_cost(&x, iv(1, 2), -1.0).is_err());
    }

    #[test]
    fn example_partition_costs() {
        let x = sample_data();
        let p = Partition::from_lengths(&[2, 1, 4, 3]).unwrap();
        assert!((partition_cost(&x, &p, 1.0).unwrap() - (10.0 + 2.0 / 3.0)).abs() < 1e-12);
        assert!((partition_cost(&x, &p, 0.1).unwrap() - (46.0 + 2.0 / 3.0)).abs() < 1e-12);
        let flat = DataVector::new(vec![3; 12]).unwrap();
        assert_eq!(partition_cost(&flat, &Partition::unit(12), 1.0).unwrap(), 12.0);
        assert!(partition_cost(&x, &Partition::unit(9), 1.0).is_err());
    }

    #[test]
    fn sliding_costs_examples() {
        let x = sample_data();
        let ones = costs_size_k(&x, 0.5, 1).unwrap();
        assert!(ones.iter().all(|&(_, c)| c == 2.0));
        let fours = costs_size_k(&x, 1.0, 4).unwrap();
        let (b, c) = fours[3];
        assert_eq!(b, iv(4, 7));
        assert_eq!(c, 1.0 + 3.0);
        assert!(costs_size_k(&x, 1.0, 11).is_err());
    }

    #[test]
    fn table_sizes() {
        let x = sample_data();
        assert_eq!(all_costs(&x, 1.0, CostMode::All).unwrap().len(), 55);
        let x8 = DataVector::new(vec![1; 8]).unwrap();
        let t = all_costs(&x8, 1.0, CostMode::Pow2).unwrap();
        assert_eq!(t.lengths(), &[1, 2, 4, 8]);
        assert_eq!(t.len(), 21);
        assert!(t.get(iv(2, 4)).is_none());
        assert!(t.get(iv(3, 6)).is_some());
    }

    #[test]
    fn vanishing_noise_keeps_costs() {
        let x = sample_data();
        let t = all_costs(&x, 1.0, CostMode::All).unwrap();
        let noisy = perturb_costs(&t, 1e9, 2.0, &mut RngStream::new(1)).unwrap();
        for ((b, a), (_, c)) in t.iter().zip(noisy.iter()) {
            assert!((a - c).abs() < 1e-6, "{b}");
        }
        assert!(perturb_costs(&t, 0.0, 2.0, &mut RngStream::new(1)).is_err());
    }

    #[test]
    fn perturbation_spread() {
        let x = DataVector::new(vec![0; 447]).unwrap();
        let t = all_costs(&x, 1.0, CostMode::All).unwrap();
        assert!(t.len() > 100_000);
        let noisy = perturb_costs(&t, 1.0, 2.0, &mut RngStream::new(8)).unwrap();
        let diffs: Vec<f64> = t.iter().zip(noisy.iter()).map(|((_, a), (_, b))| b - a).collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / diffs.len() as f64).sqrt();
        let want = 2f64.sqrt() * 4.0;
        assert!((sd - want).abs() < 0.05 * want, "sd {sd}");
    }

    #[test]
    fn perturbation_is_seeded() {
        let t = all_costs(&sample_data(), 1.0, CostMode::All).unwrap();
        let a = perturb_costs(&t, 0.5, 2.0, &mut RngStream::new(4)).unwrap();
        let b = perturb_costs(&t, 0.5, 2.0, &mut RngStream::new(4)).unwrap();
        assert_eq!(a, b);
    }
}
