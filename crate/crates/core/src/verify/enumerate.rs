//! Exact shape laws for small `p`.
//!
//! Two independent routes: summing Marchal transition probabilities over all
//! growth paths, and evaluating the closed-form product over every
//! leaf-labelled tree (generated by recursive set partitions).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chain::AlphaParam;
use crate::error::{ensure, Result};
use crate::rtree::{labelled_signature, signature_from_parents, ShapeSignature};

/// Largest `p` accepted by the enumerators.
pub const MAX_ENUMERATION_P: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeTable {
    pub alpha: f64,
    pub p: usize,
    pub probs: BTreeMap<ShapeSignature, f64>,
}

impl ShapeTable {
    pub fn get(&self, s: &ShapeSignature) -> f64 {
        self.probs.get(s).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ShapeSignature, &f64)> {
        self.probs.iter()
    }

    /// Largest relative difference over the union of supports. Entries that
    /// are zero (or absent) in both tables are ignored.
    pub fn max_rel_diff(&self, other: &ShapeTable) -> f64 {
        let mut worst: f64 = 0.0;
        for key in self.probs.keys().chain(other.probs.keys()) {
            let (a, b) = (self.get(key), other.get(key));
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                worst = worst.max((a - b).abs() / scale);
            }
        }
        worst
    }

    /// Counts of `samples` per table entry, in table order, plus the number
    /// of samples that fall outside the table.
    pub fn tally<'a>(&self, samples: impl IntoIterator<Item = &'a ShapeSignature>) -> (Vec<u64>, u64) {
        let index: BTreeMap<&ShapeSignature, usize> = self.probs.keys().enumerate().map(|(i, k)| (k, i)).collect();
        let mut counts = vec![0u64; self.probs.len()];
        let mut outside = 0;
        for s in samples {
            match index.get(s) {
                Some(&i) => counts[i] += 1,
                None => outside += 1,
            }
        }
        (counts, outside)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.probs.values().copied().collect()
    }
}

#[derive(Clone)]
struct PathTree {
    parent: Vec<Option<usize>>,
    children: Vec<u32>,
    label: Vec<Option<u32>>,
    leaves: u32,
}

impl PathTree {
    fn new() -> Self {
        Self { parent: vec![None, Some(0)], children: vec![1, 0], label: vec![None, Some(1)], leaves: 1 }
    }

    fn add_leaf(&mut self, parent: usize) {
        self.leaves += 1;
        self.parent.push(Some(parent));
        self.children.push(0);
        self.label.push(Some(self.leaves));
        self.children[parent] += 1;
    }

    fn split(&mut self, v: usize) {
        let up = self.parent[v].unwrap();
        let mid = self.parent.len();
        self.parent.push(Some(up));
        self.children.push(1);
        self.label.push(None);
        self.parent[v] = Some(mid);
        self.add_leaf(mid);
    }
}

fn walk(t: &PathTree, a: f64, p: usize, prob: f64, labelled: bool, out: &mut BTreeMap<ShapeSignature, f64>) {
    if t.leaves as usize == p {
        let sig =
            if labelled { labelled_signature(&t.parent, 0, &t.label) } else { signature_from_parents(&t.parent, 0) };
        *out.entry(sig).or_insert(0.0) += prob;
        return;
    }
    let total = t.leaves as f64 * a - 1.0;
    for v in 1..t.parent.len() {
        let mut next = t.clone();
        next.split(v);
        walk(&next, a, p, prob * (a - 1.0) / total, labelled, out);
        // Internal non-root vertices have at least two children: degree = children + 1.
        if t.children[v] >= 2 {
            let w = t.children[v] as f64 - a;
            if w > 0.0 {
                let mut next = t.clone();
                next.add_leaf(v);
                walk(&next, a, p, prob * w / total, labelled, out);
            }
        }
    }
}

fn enumerate(alpha: AlphaParam, p: usize, labelled: bool) -> Result<ShapeTable> {
    ensure!(p >= 1, Parameter, "p must be >= 1");
    ensure!(p <= MAX_ENUMERATION_P, Range, "shape enumeration is capped at p <= {MAX_ENUMERATION_P}, got {p}");
    let mut probs = BTreeMap::new();
    walk(&PathTree::new(), alpha.value(), p, 1.0, labelled, &mut probs);
    Ok(ShapeTable { alpha: alpha.value(), p, probs })
}

/// Law of the unlabelled shape `T_p` under Marchal's algorithm.
pub fn enumerate_shape_law(alpha: AlphaParam, p: usize) -> Result<ShapeTable> {
    enumerate(alpha, p, false)
}

/// Law of the leaf-labelled shape (leaf `k` is the `k`-th inserted).
pub fn enumerate_labelled_shape_law(alpha: AlphaParam, p: usize) -> Result<ShapeTable> {
    enumerate(alpha, p, true)
}

/// Closed-form weight of a branch point of degree `d`:
/// `(α-1)(2-α)(3-α)…(d-2-α)`.
pub fn vertex_factor(alpha: f64, d: u32) -> f64 {
    (2..d.saturating_sub(1)).fold(alpha - 1.0, |acc, k| acc * (k as f64 - alpha))
}

/// Every rooted tree on the leaf set `set` (a bit mask) whose internal
/// vertices have at least two children, as `(signature, product of factors)`.
fn subtrees(set: u32, alpha: f64, memo: &mut BTreeMap<u32, Vec<(String, f64)>>) -> Vec<(String, f64)> {
    if let Some(v) = memo.get(&set) {
        return v.clone();
    }
    let out = if set.count_ones() == 1 {
        vec![("()".to_string(), 1.0)]
    } else {
        let mut out = Vec::new();
        for blocks in set_partitions(set) {
            if blocks.len() < 2 {
                continue;
            }
            let factor = vertex_factor(alpha, blocks.len() as u32 + 1);
            let options: Vec<Vec<(String, f64)>> = blocks.iter().map(|&b| subtrees(b, alpha, memo)).collect();
            let mut choice = vec![0usize; options.len()];
            loop {
                let mut parts: Vec<&str> = Vec::with_capacity(choice.len());
                let mut w = factor;
                for (o, &c) in options.iter().zip(&choice) {
                    parts.push(&o[c].0);
                    w *= o[c].1;
                }
                parts.sort_unstable();
                out.push((format!("({})", parts.concat()), w));
                // Odometer over the children's alternatives.
                let mut i = 0;
                while i < choice.len() {
                    choice[i] += 1;
                    if choice[i] < options[i].len() {
                        break;
                    }
                    choice[i] = 0;
                    i += 1;
                }
                if i == choice.len() {
                    break;
                }
            }
        }
        out
    };
    memo.insert(set, out.clone());
    out
}

/// All set partitions of the bits of `set`.
fn set_partitions(set: u32) -> Vec<Vec<u32>> {
    if set == 0 {
        return vec![Vec::new()];
    }
    let first = set & set.wrapping_neg();
    let rest = set ^ first;
    let mut out = Vec::new();
    // The block containing the lowest element: `first` plus any subset of `rest`.
    let mut sub = rest;
    loop {
        let block = first | sub;
        for mut tail in set_partitions(rest ^ sub) {
            tail.insert(0, block);
            out.push(tail);
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & rest;
    }
    out
}

/// The closed-form shape law: each leaf-labelled tree `t` has probability
/// `∏_v (α-1)(2-α)…(d_v-2-α) / ∏_{j=1}^{p-1} (jα-1)`, aggregated over labels.
pub fn shape_formula_table(alpha: AlphaParam, p: usize) -> Result<ShapeTable> {
    ensure!(p >= 1, Parameter, "p must be >= 1");
    ensure!(p <= MAX_ENUMERATION_P, Range, "shape enumeration is capped at p <= {MAX_ENUMERATION_P}, got {p}");
    let a = alpha.value();
    let denom: f64 = (1..p).map(|j| j as f64 * a - 1.0).product();
    let mut memo = BTreeMap::new();
    let mut probs = BTreeMap::new();
    for (sig, w) in subtrees((1u32 << p) - 1, a, &mut memo) {
        if w == 0.0 {
            continue;
        }
        let planted = ShapeSignature::parse(&format!("({sig})"))?;
        *probs.entry(planted).or_insert(0.0) += w / denom;
    }
    Ok(ShapeTable { alpha: a, p, probs })
}

/// Number of leaf-labelled trees with `p` leaves and no unary vertices.
pub fn labelled_tree_count(p: usize) -> Result<usize> {
    ensure!((1..=MAX_ENUMERATION_P).contains(&p), Range, "p must be in 1..={MAX_ENUMERATION_P}");
    let mut memo = BTreeMap::new();
    Ok(subtrees((1u32 << p) - 1, 1.5, &mut memo).len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha(a: f64) -> AlphaParam {
        AlphaParam::new(a).unwrap()
    }

    #[test]
    fn small_cases() {
        for a in [1.2, 1.5, 2.0] {
            for p in [1, 2] {
                let t = enumerate_shape_law(alpha(a), p).unwrap();
                assert_eq!(t.len(), 1);
                assert!((t.total() - 1.0).abs() < 1e-15);
            }
        }
        let t = enumerate_shape_law(alpha(1.5), 3).unwrap();
        let star = ShapeSignature::parse("((()()()))").unwrap();
        let binary = ShapeSignature::parse("((()(()())))").unwrap();
        assert!((t.get(&star) - 0.25).abs() < 1e-15);
        assert!((t.get(&binary) - 0.75).abs() < 1e-15);
        let t = enumerate_shape_law(alpha(2.0), 3).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get(&binary), 1.0);
    }

    #[test]
    fn tables_sum_to_one() {
        for a in [1.1, 1.2, 1.5, 1.8, 2.0] {
            for p in 1..=MAX_ENUMERATION_P {
                let t = enumerate_shape_law(alpha(a), p).unwrap();
                assert!((t.total() - 1.0).abs() < 1e-12, "alpha={a} p={p}");
                let f = shape_formula_table(alpha(a), p).unwrap();
                assert!((f.total() - 1.0).abs() < 1e-12, "alpha={a} p={p}");
                assert!(t.max_rel_diff(&f) < 1e-10, "alpha={a} p={p}");
            }
        }
    }

    #[test]
    fn labelled_counts() {
        let counts: Vec<usize> = (1..=6).map(|p| labelled_tree_count(p).unwrap()).collect();
        assert_eq!(counts, vec![1, 1, 4, 26, 236, 2752]);
    }

    #[test]
    fn remy_is_uniform_on_labelled_binary_trees() {
        let t = enumerate_labelled_shape_law(alpha(2.0), 4).unwrap();
        assert_eq!(t.len(), 15);
        for (_, &p) in t.iter() {
            assert!((p - 1.0 / 15.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(enumerate_shape_law(alpha(1.5), 7), Err(crate::Error::Range(_))));
        assert!(matches!(shape_formula_table(alpha(1.5), 7), Err(crate::Error::Range(_))));
    }

    #[test]
    fn vertex_factors() {
        assert_eq!(vertex_factor(1.5, 3), 0.5);
        assert_eq!(vertex_factor(1.5, 4), 0.25);
        assert!((vertex_factor(1.5, 5) - 0.25 * 1.5).abs() < 1e-15);
        assert_eq!(vertex_factor(2.0, 4), 0.0);
    }
}
