//! Augmented AVL multiset used to evaluate bucket deviations in O(log n).
//!
//! Each node stores a distinct value with a multiplicity, plus the sum and
//! size of its subtree (multiplicities included).

use crate::error::{Error, Result};

type Link = Option<usize>;

#[derive(Clone, Debug)]
struct Node {
    value: u64,
    mult: u64,
    sum: u128,
    count: u64,
    height: u32,
    left: Link,
    right: Link,
}

#[derive(Clone, Debug, Default)]
pub struct DeviationTree {
    nodes: Vec<Node>,
    free: Vec<usize>,
    root: Link,
}

impl DeviationTree {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sum of all stored values.
    pub fn sum(&self) -> u128 {
        self.root.map_or(0, |r| self.nodes[r].sum)
    }

    /// Number of stored values, counting duplicates.
    pub fn count(&self) -> u64 {
        self.root.map_or(0, |r| self.nodes[r].count)
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    pub fn height(&self) -> u32 {
        self.h(self.root)
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
        self.free.clear();
        self.root = None;
    }

    pub fn insert(&mut self, value: u64) {
        self.root = Some(self.insert_at(self.root, value));
    }

    pub fn remove(&mut self, value: u64) -> Result<()> {
        let (root, found) = self.remove_at(self.root, value);
        if !found {
            return Err(Error::Logic(format!("value {value} is not in the tree")));
        }
        self.root = root;
        Ok(())
    }

    /// `sum_{v >= a} (v - a)` by a single root-to-leaf descent.
    pub fn above(&self, a: f64) -> f64 {
        let mut acc = 0.0;
        let mut cur = self.root;
        while let Some(i) = cur {
            let node = &self.nodes[i];
            if (node.value as f64) < a {
                cur = node.right;
            } else {
                let (rs, rc) = self.stats(node.right);
                let upper = rs as f64 + (node.mult as u128 * node.value as u128) as f64;
                acc += upper - (rc + node.mult) as f64 * a;
                cur = node.left;
            }
        }
        acc
    }

    /// Sum and count of stored values `v` with `v * den >= num`, i.e.
    /// `v >= num / den`, evaluated without rounding.
    pub fn upper_stats(&self, num: u128, den: u128) -> (u128, u64) {
        let mut sum = 0u128;
        let mut count = 0u64;
        let mut cur = self.root;
        while let Some(i) = cur {
            let node = &self.nodes[i];
            if (node.value as u128) * den < num {
                cur = node.right;
            } else {
                let (rs, rc) = self.stats(node.right);
                sum += rs + node.mult as u128 * node.value as u128;
                count += rc + node.mult;
                cur = node.left;
            }
        }
        (sum, count)
    }

    /// Stored values in ascending order, duplicates expanded.
    pub fn values(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.count() as usize);
        let mut stack = Vec::new();
        let mut cur = self.root;
        while cur.is_some() || !stack.is_empty() {
            while let Some(i) = cur {
                stack.push(i);
                cur = self.nodes[i].left;
            }
            let i = stack.pop().expect("stack non-empty");
            let node = &self.nodes[i];
            out.extend(std::iter::repeat_n(node.value, node.mult as usize));
            cur = node.right;
        }
        out
    }

    /// Verifies ordering, augmentation and balance on every node.
    pub fn check_invariants(&self) -> bool {
        fn walk(t: &DeviationTree, link: Link, lo: Option<u64>, hi: Option<u64>) -> Option<(u128, u64, u32)> {
            let Some(i) = link else {
                return Some((0, 0, 0));
            };
            let n = &t.nodes[i];
            if lo.is_some_and(|lo| n.value <= lo) || hi.is_some_and(|hi| n.value >= hi) || n.mult == 0 {
                return None;
            }
            let (ls, lc, lh) = walk(t, n.left, lo, Some(n.value))?;
            let (rs, rc, rh) = walk(t, n.right, Some(n.value), hi)?;
            let sum = ls + rs + n.mult as u128 * n.value as u128;
            let count = lc + rc + n.mult;
            let height = 1 + lh.max(rh);
            let ok = sum == n.sum && count == n.count && height == n.height && lh.abs_diff(rh) <= 1;
            ok.then_some((sum, count, height))
        }
        walk(self, self.root, None, None).is_some()
    }

    fn stats(&self, link: Link) -> (u128, u64) {
        link.map_or((0, 0), |i| (self.nodes[i].sum, self.nodes[i].count))
    }

    fn h(&self, link: Link) -> u32 {
        link.map_or(0, |i| self.nodes[i].height)
    }

    fn alloc(&mut self, value: u64) -> usize {
        let node = Node {
            value,
            mult: 1,
            sum: value as u128,
            count: 1,
            height: 1,
            left: None,
            right: None,
        };
        match self.free.pop() {
            Some(i) => {
                self.nodes[i] = node;
                i
            }
            None => {
                self.nodes.push(node);
                self.nodes.len() - 1
            }
        }
    }

    fn update(&mut self, i: usize) {
        let (l, r) = (self.nodes[i].left, self.nodes[i].right);
        let (ls, lc) = self.stats(l);
        let (rs, rc) = self.stats(r);
        let height = 1 + self.h(l).max(self.h(r));
        let node = &mut self.nodes[i];
        node.sum = ls + rs + node.mult as u128 * node.value as u128;
        node.count = lc + rc + node.mult;
        node.height = height;
    }

    fn rotate_right(&mut self, i: usize) -> usize {
        let l = self.nodes[i].left.expect("rotate_right needs a left child");
        self.nodes[i].left = self.nodes[l].right;
        self.nodes[l].right = Some(i);
        self.update(i);
        self.update(l);
        l
    }

    fn rotate_left(&mut self, i: usize) -> usize {
        let r = self.nodes[i].right.expect("rotate_left needs a right child");
        self.nodes[i].right = self.nodes[r].left;
        self.nodes[r].left = Some(i);
        self.update(i);
        self.update(r);
        r
    }

    fn rebalance(&mut self, i: usize) -> usize {
        self.update(i);
        let (l, r) = (self.nodes[i].left, self.nodes[i].right);
        let balance = self.h(l) as i64 - self.h(r) as i64;
        if balance > 1 {
            let l = l.expect("left-heavy node has a left child");
            if self.h(self.nodes[l].left) < self.h(self.nodes[l].right) {
                let nl = self.rotate_left(l);
                self.nodes[i].left = Some(nl);
            }
            self.rotate_right(i)
        } else if balance < -1 {
            let r = r.expect("right-heavy node has a right child");
            if self.h(self.nodes[r].right) < self.h(self.nodes[r].left) {
                let nr = self.rotate_right(r);
                self.nodes[i].right = Some(nr);
            }
            self.rotate_left(i)
        } else {
            i
        }
    }

    fn insert_at(&mut self, link: Link, value: u64) -> usize {
        let Some(i) = link else {
            return self.alloc(value);
        };
        let v = self.nodes[i].value;
        if value == v {
            self.nodes[i].mult += 1;
            self.update(i);
            return i;
        }
        if value < v {
            let child = self.insert_at(self.nodes[i].left, value);
            self.nodes[i].left = Some(child);
        } else {
            let child = self.insert_at(self.nodes[i].right, value);
            self.nodes[i].right = Some(child);
        }
        self.rebalance(i)
    }

    fn remove_at(&mut self, link: Link, value: u64) -> (Link, bool) {
        let Some(i) = link else {
            return (None, false);
        };
        let v = self.nodes[i].value;
        if value < v {
            let (child, found) = self.remove_at(self.nodes[i].left, value);
            self.nodes[i].left = child;
            return (Some(self.rebalance(i)), found);
        }
        if value > v {
            let (child, found) = self.remove_at(self.nodes[i].right, value);
            self.nodes[i].right = child;
            return (Some(self.rebalance(i)), found);
        }
        if self.nodes[i].mult > 1 {
            self.nodes[i].mult -= 1;
            self.update(i);
            return (Some(i), true);
        }
        let (l, r) = (self.nodes[i].left, self.nodes[i].right);
        match (l, r) {
            (None, None) => {
                self.free.push(i);
                (None, true)
            }
            (Some(c), None) | (None, Some(c)) => {
                self.free.push(i);
                (Some(c), true)
            }
            (Some(_), Some(r)) => {
                let (rest, min) = self.detach_min(r);
                self.nodes[i].right = rest;
                self.nodes[i].value = self.nodes[min].value;
                self.nodes[i].mult = self.nodes[min].mult;
                self.free.push(min);
                (Some(self.rebalance(i)), true)
            }
        }
    }

    /// Unlinks the minimum node of the subtree; returns (new subtree, detached node).
    fn detach_min(&mut self, i: usize) -> (Link, usize) {
        match self.nodes[i].left {
            None => (self.nodes[i].right, i),
            Some(l) => {
                let (rest, min) = self.detach_min(l);
                self.nodes[i].left = rest;
                (Some(self.rebalance(i)), min)
            }
        }
    }
}

pub fn dev_tree_insert(t: &mut DeviationTree, v: u64) {
    t.insert(v);
}

pub fn dev_tree_remove(t: &mut DeviationTree, v: u64) -> Result<()> {
    t.remove(v)
}

pub fn dev_tree_above(t: &DeviationTree, a: f64) -> f64 {
    t.above(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    #[test]
    fn sum_after_inserts() {
        let mut t = DeviationTree::new();
        for v in [2, 3, 8] {
            t.insert(v);
        }
        assert_eq!(t.sum(), 13);
        assert_eq!(t.count(), 3);
    }

    #[test]
    fn insert_then_remove_restores_multiset() {
        let mut t = DeviationTree::new();
        for v in [5, 1, 9, 1, 4] {
            t.insert(v);
        }
        let before = t.values();
        t.insert(7);
        t.remove(7).unwrap();
        assert_eq!(t.values(), before);
        assert!(t.check_invariants());
    }

    #[test]
    fn removing_absent_value_fails() {
        let mut t = DeviationTree::new();
        t.insert(3);
        assert!(matches!(t.remove(4), Err(Error::Logic(_))));
        t.remove(3).unwrap();
        assert!(t.remove(3).is_err());
        assert!(t.is_empty());
    }

    #[test]
    fn above_matches_direct_sum() {
        let mut t = DeviationTree::new();
        assert_eq!(t.above(1.0), 0.0);
        for v in [2, 3, 8, 1] {
            t.insert(v);
        }
        assert!((t.above(3.5) - 4.5).abs() < 1e-12);
        // a below every value counts everything
        assert!((t.above(0.5) - (14.0 - 4.0 * 0.5)).abs() < 1e-12);
        assert_eq!(t.upper_stats(7, 2), (8, 1));
        assert_eq!(t.upper_stats(3, 1), (11, 2));
    }

    #[test]
    fn random_ops_against_btreemap() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut t = DeviationTree::new();
        let mut oracle: BTreeMap<u64, u64> = BTreeMap::new();
        for step in 0..1000 {
            let v = rng.random_range(0..40u64);
            if rng.random_bool(0.6) || oracle.is_empty() {
                t.insert(v);
                *oracle.entry(v).or_default() += 1;
            } else {
                let present = oracle.contains_key(&v);
                assert_eq!(t.remove(v).is_ok(), present, "step {step}");
                if present {
                    let e = oracle.get_mut(&v).unwrap();
                    *e -= 1;
                    if *e == 0 {
                        oracle.remove(&v);
                    }
                }
            }
            let want: Vec<u64> = oracle
                .iter()
                .flat_map(|(&v, &c)| std::iter::repeat_n(v, c as usize))
                .collect();
            assert_eq!(t.values(), want);
            assert_eq!(t.sum(), want.iter().map(|&v| v as u128).sum::<u128>());
            assert_eq!(t.count(), want.len() as u64);
            let a = rng.random_range(0.0..45.0);
            let direct: f64 = want.iter().map(|&v| (v as f64 - a).max(0.0)).sum();
            assert!((t.above(a) - direct).abs() < 1e-9);
            assert!(t.check_invariants(), "step {step}");
        }
    }

    #[test]
    fn height_stays_logarithmic() {
        let mut t = DeviationTree::new();
        for v in 0..4096u64 {
            t.insert(v);
        }
        // AVL bound: h < 1.45 log2(n + 2)
        assert!(t.height() <= 18, "height {}", t.height());
        for v in 0..2048u64 {
            t.remove(v * 2).unwrap();
        }
        assert!(t.height() <= 17);
        assert!(t.check_invariants());
    }
}
