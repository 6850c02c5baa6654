//! Re-expresses a workload over the bucket domain of a partition.
//!
//! Entry `(i, j)` of the transformed workload is the fraction of bucket `j`
//! covered by query `i`, so answering the transformed workload on bucket
//! statistics `s` equals answering the original workload on the uniform
//! expansion of `(B, s)`.

use std::io::Write;

use nalgebra::DMatrix;

use crate::domain::{check_len, Interval, Partition, Workload};
use crate::error::{Error, Result};

/// Support of one transformed query: buckets `first..=last` (0-based).
/// Interior buckets have weight 1; the end buckets carry fractional weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RowSpan {
    pub first: usize,
    pub last: usize,
    pub first_weight: f64,
    pub last_weight: f64,
}

impl RowSpan {
    pub fn weight(&self, j: usize) -> f64 {
        if j < self.first || j > self.last {
            0.0
        } else if j == self.first {
            self.first_weight
        } else if j == self.last {
            self.last_weight
        } else {
            1.0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransformedWorkload {
    rows: Vec<RowSpan>,
    k: usize,
    source: Workload,
    partition: Partition,
}

fn span(q: Interval, p: &Partition) -> RowSpan {
    let first = p.bucket_of(q.lo).expect("query checked against domain");
    let last = p.bucket_of(q.hi).expect("query checked against domain");
    let b = p.buckets();
    let frac = |j: usize| q.overlap(&b[j]) as f64 / b[j].len() as f64;
    RowSpan {
        first,
        last,
        first_weight: frac(first),
        last_weight: frac(last),
    }
}

/// Fractional overlap of `q` with every bucket of `p`.
pub fn transform_query(q: Interval, p: &Partition) -> Result<Vec<f64>> {
    q.check(p.n())?;
    let row = span(q, p);
    Ok((0..p.len()).map(|j| row.weight(j)).collect())
}

pub fn transform_workload(w: &Workload, p: &Partition) -> Result<TransformedWorkload> {
    if w.n() != p.n() {
        return Err(Error::Dimension {
            expected: p.n(),
            got: w.n(),
        });
    }
    Ok(TransformedWorkload {
        rows: w.queries().iter().map(|&q| span(q, p)).collect(),
        k: p.len(),
        source: w.clone(),
        partition: p.clone(),
    })
}

impl TransformedWorkload {
    /// Number of queries `m`.
    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    /// Number of buckets `k`.
    pub fn cols(&self) -> usize {
        self.k
    }

    pub fn spans(&self) -> &[RowSpan] {
        &self.rows
    }

    pub fn source(&self) -> &Workload {
        &self.source
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].weight(j)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), self.k, |i, j| self.rows[i].weight(j))
    }

    /// `What * s`.
    pub fn apply(&self, s: &[f64]) -> Result<Vec<f64>> {
        check_len(self.k, s.len())?;
        Ok(self
            .rows
            .iter()
            .map(|r| (r.first..=r.last).map(|j| r.weight(j) * s[j]).sum())
            .collect())
    }

    /// Squared Euclidean norm of every column.
    pub fn column_sq_norms(&self) -> Vec<f64> {
        let mut interior = vec![0i64; self.k + 1];
        let mut ends = vec![0.0; self.k];
        for r in &self.rows {
            if r.first == r.last {
                ends[r.first] += r.first_weight * r.first_weight;
                continue;
            }
            ends[r.first] += r.first_weight * r.first_weight;
            ends[r.last] += r.last_weight * r.last_weight;
            if r.last > r.first + 1 {
                interior[r.first + 1] += 1;
                interior[r.last] -= 1;
            }
        }
        let mut running = 0i64;
        ends.iter()
            .zip(&interior)
            .map(|(&e, &d)| {
                running += d;
                e + running as f64
            })
            .collect()
    }

    /// `What[:, start..start+v.len()] * v`: the workload restricted to a block
    /// of consecutive buckets, applied to `v`. O(m + |v|).
    pub fn project_block(&self, start: usize, v: &[f64]) -> Vec<f64> {
        let end = start + v.len(); // exclusive
        let mut prefix = Vec::with_capacity(v.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &vi in v {
            acc += vi;
            prefix.push(acc);
        }
        self.rows
            .iter()
            .map(|r| {
                let a = r.first.max(start);
                let b = r.last.min(end.saturating_sub(1));
                if v.is_empty() || a > b || r.last < start || r.first >= end {
                    return 0.0;
                }
                let mut s = prefix[b + 1 - start] - prefix[a - start];
                if a == r.first {
                    s += (r.first_weight - 1.0) * v[a - start];
                }
                if b == r.last && r.last != r.first {
                    s += (r.last_weight - 1.0) * v[b - start];
                }
                s
            })
            .collect()
    }

    /// Debug dump of the dense matrix, one row per query.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.rows {
            let line: Vec<String> = (0..self.k).map(|j| r.weight(j).to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_partition() -> Partition {
        Partition::from_lengths(&[2, 1, 4, 3]).unwrap()
    }

    #[test]
    fn example_query() {
        let q = Interval::new(2, 6).unwrap();
        assert_eq!(transform_query(q, &example_partition()).unwrap(), vec![0.5, 1.0, 0.75, 0.0]);
    }

    #[test]
    fn bucket_query_is_unit_vector() {
        let p = example_partition();
        for (j, &b) in p.buckets().iter().enumerate() {
            let row = transform_query(b, &p).unwrap();
            for (i, &v) in row.iter().enumerate() {
                assert_eq!(v, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn identity_workload_on_unit_partition() {
        let n = 6;
        let t = transform_workload(&Workload::identity(n).unwrap(), &Partition::unit(n)).unwrap();
        assert_eq!(t.to_dense(), DMatrix::identity(n, n));
    }

    #[test]
    fn total_query_is_all_ones() {
        let p = example_partition();
        let w = Workload::new(vec![Interval::new(1, 10).unwrap()], 10).unwrap();
        let t = transform_workload(&w, &p).unwrap();
        assert!(t.to_dense().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn mismatched_domains() {
        let w = Workload::identity(9).unwrap();
        assert!(transform_workload(&w, &example_partition()).is_err());
        assert!(transform_query(Interval::new(1, 11).unwrap(), &example_partition()).is_err());
    }

    #[test]
    fn column_norms_and_projection_match_dense() {
        let p = Partition::from_lengths(&[3, 1, 2, 5, 1, 4]).unwrap();
        let qs = [(1, 16), (2, 2), (3, 9), (5, 5), (4, 11), (12, 16), (7, 13)];
        let w = Workload::new(
            qs.iter().map(|&(lo, hi)| Interval::new(lo, hi).unwrap()).collect(),
            16,
        )
        .unwrap();
        let t = transform_workload(&w, &p).unwrap();
        let d = t.to_dense();
        for (j, norm) in t.column_sq_norms().into_iter().enumerate() {
            assert!((norm - d.column(j).norm_squared()).abs() < 1e-12);
        }
        let v = [0.5, -1.0, 2.0];
        let got = t.project_block(2, &v);
        for i in 0..t.rows() {
            let want: f64 = (0..3).map(|c| d[(i, 2 + c)] * v[c]).sum();
            assert!((got[i] - want).abs() < 1e-12);
        }
    }
}
