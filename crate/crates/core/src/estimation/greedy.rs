use rayon::prelude::*;

use super::tree::QueryTree;
use crate::error::{Error, Result};
use crate::transform::TransformedWorkload;

/// Largest admissible `lambda`. At 1 every descendant loses its budget and
/// the Gram matrix becomes singular.
pub const LAMBDA_CAP: f64 = 1.0 - 1e-6;

const GRID_STEPS: usize = 1000;
const GOLDEN_TOL: f64 = 1e-6;

/// Per-node summary of the inverse Gram matrix `M_q` of the subtree at `q`
/// under the subtree's current scalings.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeCache {
    /// `M_q * 1`, one entry per bucket under `q`.
    pub v: Vec<f64>,
    /// `1' M_q 1`.
    pub m: f64,
    /// `tr(W_q' W_q M_q)` where `W_q` is the column block of the transformed workload.
    pub trace: f64,
}

/// Children quantities entering the objective of their parent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChildStats {
    /// Sum of the children's traces.
    pub trace_sum: f64,
    /// Sum of the children's `m`.
    pub s: f64,
    /// `||sum_i u_i||^2` with `u_i = W_i v_i`.
    pub u_joint: f64,
    /// `sum_i ||u_i||^2`.
    pub u_split: f64,
}

impl ChildStats {
    fn u_eff(&self, mu: f64) -> f64 {
        mu * self.u_joint + (1.0 - mu) * self.u_split
    }
}

/// Decay weight `t^(-l/2)` for a node at depth `l`.
pub fn decay(t: usize, depth: usize) -> f64 {
    (t as f64).powf(-(depth as f64) / 2.0)
}

pub fn leaf_cache(column_sq_norm: f64) -> NodeCache {
    NodeCache {
        v: vec![1.0],
        m: 1.0,
        trace: column_sq_norm,
    }
}

pub fn child_stats(what: &TransformedWorkload, tree: &QueryTree, caches: &[NodeCache], q: usize) -> ChildStats {
    let mut joint = vec![0.0; what.rows()];
    let mut stats = ChildStats {
        trace_sum: 0.0,
        s: 0.0,
        u_joint: 0.0,
        u_split: 0.0,
    };
    for &c in &tree.node(q).children {
        let cache = &caches[c];
        let u = what.project_block(tree.node(c).interval.lo - 1, &cache.v);
        stats.trace_sum += cache.trace;
        stats.s += cache.m;
        stats.u_split += u.iter().map(|x| x * x).sum::<f64>();
        for (j, x) in joint.iter_mut().zip(&u) {
            *j += x;
        }
    }
    stats.u_joint = joint.iter().map(|x| x * x).sum();
    stats
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=LAMBDA_CAP).contains(&lambda) {
        return Err(Error::Parameter(format!("lambda must lie in [0, {LAMBDA_CAP}], got {lambda}")));
    }
    Ok(())
}

fn trace_form(trace_sum: f64, s: f64, u: f64, lambda: f64) -> f64 {
    let a2 = (1.0 - lambda) * (1.0 - lambda);
    let d = a2 + lambda * lambda * s;
    (trace_sum - u / s) / a2 + u / (s * d)
}

/// Decayed local objective of a node when its own query gets scaling
/// `lambda` and its subtree is scaled by `1 - lambda`. O(1).
pub fn objective_at_lambda(stats: &ChildStats, lambda: f64, mu: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(trace_form(stats.trace_sum, stats.s, stats.u_eff(mu), lambda))
}

/// Minimizer of [`objective_at_lambda`] over `[0, LAMBDA_CAP]`.
///
/// A uniform grid brackets the best region, golden-section search refines
/// it, and `lambda = 0` is kept unless the refined point is strictly better.
pub fn optimize_lambda(stats: &ChildStats, mu: f64) -> f64 {
    let u = stats.u_eff(mu);
    let f = |l: f64| trace_form(stats.trace_sum, stats.s, u, l);
    let grid = |i: usize| LAMBDA_CAP * i as f64 / GRID_STEPS as f64;
    let (best_i, _) = (0..=GRID_STEPS)
        .map(|i| (i, f(grid(i))))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let mut lo = grid(best_i.saturating_sub(1));
    let mut hi = grid((best_i + 1).min(GRID_STEPS));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > GOLDEN_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let mut best = grid(best_i);
    for cand in [x1, x2, lo, hi] {
        if f(cand) < f(best) {
            best = cand;
        }
    }
    // treat rounding-level gains as ties in favour of no reallocation
    let f0 = f(0.0);
    if f(best) < f0 - 1e-12 * f0.abs() {
        best
    } else {
        0.0
    }
}

/// Cache of a node after its query receives scaling `lambda`.
pub fn combine(children: &[&NodeCache], stats: &ChildStats, lambda: f64) -> NodeCache {
    let a2 = (1.0 - lambda) * (1.0 - lambda);
    let d = a2 + lambda * lambda * stats.s;
    NodeCache {
        v: children.iter().flat_map(|c| c.v.iter().map(|x| x / d)).collect(),
        m: stats.s / d,
        trace: trace_form(stats.trace_sum, stats.s, stats.u_joint, lambda),
    }
}

/// Result of greedy scaling: the tree with final scalings plus the per-node
/// choices and caches.
#[derive(Clone, Debug)]
pub struct ScaledStrategy {
    pub tree: QueryTree,
    /// Chosen `lambda` per node; leaves hold their initial scaling 1.
    pub lambdas: Vec<f64>,
    pub caches: Vec<NodeCache>,
}

/// Bottom-up greedy reallocation of the unit scaling budget.
pub fn greedy_scale(what: &TransformedWorkload, tree: &QueryTree) -> Result<ScaledStrategy> {
    if what.cols() != tree.k() {
        return Err(Error::Dimension {
            expected: tree.k(),
            got: what.cols(),
        });
    }
    let t = tree.branching();
    let mut caches: Vec<NodeCache> = what.column_sq_norms().into_iter().map(leaf_cache).collect();
    let mut lambdas = vec![1.0; tree.k()];
    for range in &tree.levels()[1..] {
        let level: Vec<(f64, NodeCache)> = range
            .clone()
            .into_par_iter()
            .map(|q| {
                let node = tree.node(q);
                if node.children.len() == 1 {
                    return (0.0, caches[node.children[0]].clone());
                }
                let stats = child_stats(what, tree, &caches, q);
                let lambda = optimize_lambda(&stats, decay(t, node.depth));
                let kids: Vec<&NodeCache> = node.children.iter().map(|&c| &caches[c]).collect();
                (lambda, combine(&kids, &stats, lambda))
            })
            .collect();
        for (lambda, cache) in level {
            lambdas.push(lambda);
            caches.push(cache);
        }
    }
    let mut scaled = tree.clone();
    scaled.set_scalings(&final_scalings(tree, &lambdas))?;
    Ok(ScaledStrategy {
        tree: scaled,
        lambdas,
        caches,
    })
}

/// `c_q = lambda_q * prod over ancestors a of (1 - lambda_a)`.
pub fn final_scalings(tree: &QueryTree, lambdas: &[f64]) -> Vec<f64> {
    let mut factor = vec![1.0; tree.len()];
    let mut c = vec![0.0; tree.len()];
    for q in (0..tree.len()).rev() {
        c[q] = lambdas[q] * factor[q];
        for &ch in &tree.node(q).children {
            factor[ch] = factor[q] * (1.0 - lambdas[q]);
        }
    }
    c
}
