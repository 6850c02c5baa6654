use std::io::Write;
use std::ops::Range;

use crate::domain::Interval;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    /// Covered bucket indices, 1-based and inclusive.
    pub interval: Interval,
    pub children: Vec<usize>,
    /// Distance from the root; the root has depth 0.
    pub depth: usize,
    pub scaling: f64,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Hierarchy of interval queries over `k` buckets with branching factor `t`.
///
/// Nodes are stored level by level starting from the leaves, left to right,
/// so increasing index order is a valid bottom-up order and node `j` for
/// `j < k` is the leaf over bucket `j + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryTree {
    nodes: Vec<TreeNode>,
    levels: Vec<std::ops::Range<usize>>,
    k: usize,
    t: usize,
}

/// Aggregates `t` consecutive nodes per level until a single node is left.
/// Leaves start with scaling 1 and every other node with scaling 0.
pub fn build_query_tree(k: usize, t: usize) -> Result<QueryTree> {
    if k == 0 {
        return Err(Error::Parameter("tree needs at least one bucket".into()));
    }
    if t < 2 {
        return Err(Error::Parameter(format!("branching factor must be at least 2, got {t}")));
    }
    let mut nodes: Vec<TreeNode> = (1..=k)
        .map(|j| TreeNode {
            interval: Interval::unit(j),
            children: Vec::new(),
            depth: 0,
            scaling: 1.0,
        })
        .collect();
    let mut levels: Vec<Range<usize>> = Vec::new();
    levels.push(0..k);
    while levels.last().unwrap().len() > 1 {
        let prev = levels.last().unwrap().clone();
        let start = nodes.len();
        let members: Vec<usize> = prev.collect();
        for group in members.chunks(t) {
            let lo = nodes[group[0]].interval.lo;
            let hi = nodes[*group.last().unwrap()].interval.hi;
            nodes.push(TreeNode {
                interval: Interval { lo, hi },
                children: group.to_vec(),
                depth: 0,
                scaling: 0.0,
            });
        }
        levels.push(start..nodes.len());
    }
    let height = levels.len() - 1;
    for (h, range) in levels.iter().enumerate() {
        for node in &mut nodes[range.clone()] {
            node.depth = height - h;
        }
    }
    Ok(QueryTree { nodes, levels, k, t })
}

impl QueryTree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, q: usize) -> &TreeNode {
        &self.nodes[q]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Number of leaves.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn branching(&self) -> usize {
        self.t
    }

    /// Node index ranges per level, leaves first.
    pub fn levels(&self) -> &[std::ops::Range<usize>] {
        &self.levels
    }

    pub fn height(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn scalings(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.scaling).collect()
    }

    pub fn set_scalings(&mut self, c: &[f64]) -> Result<()> {
        crate::domain::check_len(self.nodes.len(), c.len())?;
        for (node, &v) in self.nodes.iter_mut().zip(c) {
            node.scaling = v;
        }
        Ok(())
    }

    /// Sum of the scalings of all nodes covering each leaf.
    pub fn cover_sums(&self) -> Vec<f64> {
        let mut diff = vec![0.0; self.k + 1];
        for n in &self.nodes {
            diff[n.interval.lo - 1] += n.scaling;
            diff[n.interval.hi] -= n.scaling;
        }
        let mut acc = 0.0;
        diff[..self.k]
            .iter()
            .map(|d| {
                acc += d;
                acc
            })
            .collect()
    }

    /// Maximum leaf cover sum, the L1 sensitivity of the scaled strategy.
    pub fn sensitivity(&self) -> f64 {
        self.cover_sums().into_iter().fold(0.0, f64::max)
    }

    /// Nodes of the subtree rooted at `q`, `q` first.
    pub fn subtree(&self, q: usize) -> Vec<usize> {
        let mut out = vec![q];
        let mut i = 0;
        while i < out.len() {
            out.extend_from_slice(&self.nodes[out[i]].children);
            i += 1;
        }
        out
    }

    /// Dump as CSV with header `lo,hi,depth,c_q`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "lo,hi,depth,c_q")?;
        for n in &self.nodes {
            writeln!(out, "{},{},{},{}", n.interval.lo, n.interval.hi, n.depth, n.scaling)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level_sizes(t: &QueryTree) -> Vec<usize> {
        t.levels().iter().map(|r| r.len()).collect()
    }

    #[test]
    fn single_bucket() {
        let t = build_query_tree(1, 2).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.node(t.root()).is_leaf());
        assert_eq!(t.node(0).scaling, 1.0);
    }

    #[test]
    fn complete_binary() {
        let t = build_query_tree(4, 2).unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(level_sizes(&t), vec![4, 2, 1]);
        assert_eq!(t.node(t.root()).interval, Interval::new(1, 4).unwrap());
    }

    #[test]
    fn ragged_five() {
        let t = build_query_tree(5, 2).unwrap();
        assert_eq!(level_sizes(&t), vec![5, 3, 2, 1]);
        let last_of_level2 = t.levels()[1].end - 1;
        let n = t.node(last_of_level2);
        assert_eq!(n.interval, Interval::unit(5));
        assert_eq!(n.children, vec![4]);
        assert_eq!(n.depth, 2);
    }

    #[test]
    fn leaves_only_cover_is_one() {
        let t = build_query_tree(9, 3).unwrap();
        assert_eq!(t.cover_sums(), vec![1.0; 9]);
        assert_eq!(t.subtree(t.root()).len(), t.len());
    }

    #[test]
    fn csv_dump() {
        let t = build_query_tree(2, 2).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "lo,hi,depth,c_q\n1,1,1,1\n2,2,1,1\n1,2,0,0\n");
    }

    #[test]
    fn bad_parameters() {
        assert!(build_query_tree(0, 2).is_err());
        assert!(build_query_tree(4, 1).is_err());
    }
}
