use serde::{Deserialize, Serialize};

use super::tree::QueryTree;
use crate::domain::{check_len, Interval};
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub node: usize,
    pub interval: Interval,
    pub scaling: f64,
    /// `scaling * true answer + Laplace(1/eps2)`.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub eps2: f64,
    pub entries: Vec<Measurement>,
}

/// Noisy answers to every positively scaled query of the tree, in node order.
pub fn measure(bucket_counts: &[f64], tree: &QueryTree, eps2: f64, rng: &mut RngStream) -> Result<MeasurementSet> {
    check_len(tree.k(), bucket_counts.len())?;
    if !(eps2 > 0.0) {
        return Err(Error::Parameter(format!("eps2 must be positive, got {eps2}")));
    }
    let mut prefix = vec![0.0; bucket_counts.len() + 1];
    for (i, &c) in bucket_counts.iter().enumerate() {
        prefix[i + 1] = prefix[i] + c;
    }
    let mut entries = Vec::new();
    for (q, node) in tree.nodes().iter().enumerate() {
        if node.scaling <= 0.0 {
            continue;
        }
        let iv = node.interval;
        let truth = if iv.len() == 1 {
            bucket_counts[iv.lo - 1]
        } else {
            prefix[iv.hi] - prefix[iv.lo - 1]
        };
        entries.push(Measurement {
            node: q,
            interval: iv,
            scaling: node.scaling,
            value: node.scaling * truth + rng.laplace(1.0 / eps2)?,
        });
    }
    Ok(MeasurementSet { eps2, entries })
}

/// Least-squares bucket statistics `(Y'D^2Y)^-1 (DY)' y`.
///
/// The inverse Gram matrix of every subtree is a block-diagonal matrix of
/// the children's inverses minus a rank-one term, so it is applied
/// recursively in O(k log k) without being formed.
pub fn ols_infer(tree: &QueryTree, ms: &MeasurementSet) -> Result<Vec<f64>> {
    let k = tree.k();
    let mut diff = vec![0.0; k + 1];
    for e in &ms.entries {
        if e.node >= tree.len() || tree.node(e.node).interval != e.interval {
            return Err(Error::Logic(format!("measurement for node {} does not match the tree", e.node)));
        }
        diff[e.interval.lo - 1] += e.scaling * e.value;
        diff[e.interval.hi] -= e.scaling * e.value;
    }
    let mut acc = 0.0;
    let z: Vec<f64> = diff[..k]
        .iter()
        .map(|d| {
            acc += d;
            acc
        })
        .collect();

    let mut v: Vec<Vec<f64>> = Vec::with_capacity(tree.len());
    let mut m = Vec::with_capacity(tree.len());
    let mut beta = vec![0.0; tree.len()];
    for (q, node) in tree.nodes().iter().enumerate() {
        let w = node.scaling * node.scaling;
        if node.is_leaf() {
            if w <= 0.0 {
                return Err(Error::Singular(format!("leaf {} has no measurement budget", node.interval.lo)));
            }
            v.push(vec![1.0 / w]);
            m.push(1.0 / w);
            continue;
        }
        let s: f64 = node.children.iter().map(|&c| m[c]).sum();
        let d = 1.0 + w * s;
        beta[q] = w / d;
        v.push(node.children.iter().flat_map(|&c| v[c].iter().map(|x| x / d)).collect());
        m.push(s / d);
    }

    let mut s: Vec<f64> = z.iter().zip(&v[..k]).map(|(zi, vi)| zi * vi[0]).collect();
    for (q, node) in tree.nodes().iter().enumerate().skip(k) {
        if beta[q] == 0.0 {
            continue;
        }
        let lo = node.interval.lo - 1;
        let vc: Vec<f64> = node.children.iter().flat_map(|&c| v[c].iter().copied()).collect();
        let dot: f64 = vc.iter().zip(&z[lo..]).map(|(a, b)| a * b).sum();
        for (si, vi) in s[lo..].iter_mut().zip(&vc) {
            *si -= beta[q] * dot * vi;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::build_query_tree;

    #[test]
    fn leaves_only_is_identity() {
        let tree = build_query_tree(4, 2).unwrap();
        let ms = measure(&[5.0, 8.0, 3.0, 10.0], &tree, 1e9, &mut RngStream::new(1)).unwrap();
        assert_eq!(ms.entries.len(), 4);
        let s = ols_infer(&tree, &ms).unwrap();
        for (a, b) in s.iter().zip([5.0, 8.0, 3.0, 10.0]) {
            assert!((a - b).abs() < 1e-6);
        }
        for e in &ms.entries {
            assert_eq!(s[e.node], e.value);
        }
    }

    #[test]
    fn unmeasured_leaf_is_singular() {
        let mut tree = build_query_tree(2, 2).unwrap();
        tree.set_scalings(&[1.0, 0.0, 1.0]).unwrap();
        let ms = measure(&[1.0, 2.0], &tree, 1.0, &mut RngStream::new(0)).unwrap();
        assert!(matches!(ols_infer(&tree, &ms), Err(Error::Singular(_))));
    }
}
