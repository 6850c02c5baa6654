//! Dense reference computations. Cubic in the number of buckets; used to
//! check the incremental path.

use nalgebra::{Cholesky, DMatrix};

use super::greedy::ScaledStrategy;
use super::tree::QueryTree;
use crate::error::{Error, Result};
use crate::transform::TransformedWorkload;

fn invert_spd(g: DMatrix<f64>) -> Result<DMatrix<f64>> {
    Cholesky::new(g)
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Singular("Gram matrix is not positive definite".into()))
}

fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(&b.transpose()).sum()
}

/// `Y' D^2 Y` over buckets `offset .. offset + size` for the given
/// `(node, scaling)` pairs.
fn gram(tree: &QueryTree, scaled: &[(usize, f64)], offset: usize, size: usize) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(size, size);
    for &(q, c) in scaled {
        let iv = tree.node(q).interval;
        let (a, b) = (iv.lo - 1 - offset, iv.hi - offset);
        let w = c * c;
        for i in a..b {
            for j in a..b {
                g[(i, j)] += w;
            }
        }
    }
    g
}

/// Total expected squared error `(2/eps2^2) tr(W'W (Y'D^2Y)^-1)` of answering
/// the transformed workload with the scaled tree.
pub fn strategy_error(what: &TransformedWorkload, tree: &QueryTree, eps2: f64) -> Result<f64> {
    if what.cols() != tree.k() {
        return Err(Error::Dimension {
            expected: tree.k(),
            got: what.cols(),
        });
    }
    if !(eps2 > 0.0) {
        return Err(Error::Parameter(format!("eps2 must be positive, got {eps2}")));
    }
    let scaled: Vec<(usize, f64)> = tree.nodes().iter().enumerate().map(|(q, n)| (q, n.scaling)).collect();
    let inv = invert_spd(gram(tree, &scaled, 0, tree.k()))?;
    let w = what.to_dense();
    let wtw = w.transpose() * w;
    Ok(2.0 / (eps2 * eps2) * trace_product(&wtw, &inv))
}

/// Scalings of the subtree of `q` relative to that subtree. With
/// `lambda = Some(l)`, `q` is (re)assigned `l` on top of its children's
/// state; with `None` the recorded choice of `q` is used.
pub fn local_scalings(strategy: &ScaledStrategy, q: usize, lambda: Option<f64>) -> Vec<(usize, f64)> {
    let tree = &strategy.tree;
    let mut out = Vec::new();
    let mut stack = vec![(q, 1.0)];
    while let Some((node, factor)) = stack.pop() {
        let l = match lambda {
            Some(l) if node == q && !tree.node(q).is_leaf() => l,
            _ => strategy.lambdas[node],
        };
        out.push((node, l * factor));
        for &c in &tree.node(node).children {
            stack.push((c, factor * (1.0 - l)));
        }
    }
    out
}

/// Decayed local objective of node `q` at `lambda`, by explicit inversion.
pub fn dense_objective(what: &TransformedWorkload, strategy: &ScaledStrategy, q: usize, lambda: f64, mu: f64) -> Result<f64> {
    let tree = &strategy.tree;
    let iv = tree.node(q).interval;
    let (offset, size) = (iv.lo - 1, iv.len());
    let w = what.to_dense();
    let wq = w.columns(offset, size).into_owned();
    let mut a = (wq.transpose() * &wq) * mu;
    for &c in &tree.node(q).children {
        let civ = tree.node(c).interval;
        let wc = w.columns(civ.lo - 1, civ.len()).into_owned();
        let block = (wc.transpose() * &wc) * (1.0 - mu);
        let s = civ.lo - 1 - offset;
        let mut view = a.view_mut((s, s), (civ.len(), civ.len()));
        view += block;
    }
    let inv = invert_spd(gram(tree, &local_scalings(strategy, q, Some(lambda)), offset, size))?;
    Ok(trace_product(&a, &inv))
}

/// Inverse of the subtree Gram matrix of `q`, inverted directly.
pub fn direct_inverse(strategy: &ScaledStrategy, q: usize) -> Result<DMatrix<f64>> {
    let iv = strategy.tree.node(q).interval;
    invert_spd(gram(&strategy.tree, &local_scalings(strategy, q, None), iv.lo - 1, iv.len()))
}

/// Inverse of the subtree Gram matrix of `q`, assembled from the children's
/// inverses by the rank-one update.
pub fn woodbury_inverse(strategy: &ScaledStrategy, q: usize) -> DMatrix<f64> {
    let tree = &strategy.tree;
    let node = tree.node(q);
    if node.is_leaf() {
        return DMatrix::from_element(1, 1, 1.0);
    }
    let size = node.interval.len();
    let mut mb = DMatrix::zeros(size, size);
    let mut v = Vec::with_capacity(size);
    let mut s = 0.0;
    for &c in &node.children {
        let civ = tree.node(c).interval;
        let off = civ.lo - node.interval.lo;
        mb.view_mut((off, off), (civ.len(), civ.len())).copy_from(&woodbury_inverse(strategy, c));
        v.extend_from_slice(&strategy.caches[c].v);
        s += strategy.caches[c].m;
    }
    let lambda = strategy.lambdas[q];
    let a2 = (1.0 - lambda) * (1.0 - lambda);
    let beta = lambda * lambda / (a2 + lambda * lambda * s);
    let v = nalgebra::DVector::from_vec(v);
    (mb - (&v * v.transpose()) * beta) / a2
}
