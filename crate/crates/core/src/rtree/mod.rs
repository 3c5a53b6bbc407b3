//! Rooted trees with edge lengths on which branches are glued.
//!
//! The root has degree 1, edges have positive lengths, leaves carry labels
//! `1..=p` in order of appearance and internal vertices (degree ≥ 3) may
//! carry non-negative weights. Two prefix-sum indexes give O(log n) draws of
//! a uniform skeleton point and of a vertex chosen by degree or by weight.
//!
//! Edge ids follow the labelling used for the edge-length vectors: when an
//! edge is split, the rootward fragment keeps the host id, the other fragment
//! is appended, then the new branch.

mod io;
mod shape;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chain::AlphaParam;
use crate::error::{ensure, Error, Result};
use crate::fenwick::Fenwick;
use crate::rng::RngStream;

pub use io::{DistanceMatrix, TreeDocument, VertexRecord};
pub use shape::{labelled_signature, signature_from_parents, ShapeSignature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A point in the interior of an edge, `offset` measured from the rootward end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonPoint {
    pub edge: EdgeId,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Vertex {
    parent_edge: Option<EdgeId>,
    degree: u32,
    leaf_label: Option<u32>,
    internal_slot: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Edge {
    upper: VertexId,
    lower: VertexId,
    length: f64,
}

#[derive(Debug, Clone)]
pub struct WeightedRTree {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    leaves: Vec<VertexId>,
    internals: Vec<VertexId>,
    length_index: Fenwick<f64>,
    total_length: f64,
    // d - 3 per internal slot; together with the internal count this gives
    // the selection weights d - 1 - α without storing α.
    surplus_index: Fenwick<u64>,
    weights: Option<Fenwick<f64>>,
    weight_sum: f64,
}

/// Splits `length` at `offset` so that both fragments are positive and sum
/// to `length` exactly. `None` when the offset is not strictly interior.
fn split_lengths(length: f64, offset: f64) -> Option<(f64, f64)> {
    if !(offset > 0.0 && offset < length) {
        return None;
    }
    // ℓ - (ℓ - x) is exact by Sterbenz once ℓ - x ≥ ℓ/2; the other order is
    // exact when x ≥ ℓ/2. Either way upper + lower reproduces ℓ.
    let (upper, lower) = if offset >= length / 2.0 {
        (offset, length - offset)
    } else {
        let lower = length - offset;
        (length - lower, lower)
    };
    (upper > 0.0 && lower > 0.0 && upper + lower == length).then_some((upper, lower))
}

impl WeightedRTree {
    /// A root joined to leaf 1 by a segment of the given length.
    pub fn new_segment(length: f64, weight_tracking: bool) -> Result<Self> {
        ensure!(length.is_finite() && length > 0.0, Parameter, "segment length must be > 0, got {length}");
        let root = Vertex { parent_edge: None, degree: 1, leaf_label: None, internal_slot: None };
        let leaf = Vertex { parent_edge: Some(EdgeId(0)), degree: 1, leaf_label: Some(1), internal_slot: None };
        let mut length_index = Fenwick::new();
        length_index.push(length);
        Ok(Self {
            vertices: vec![root, leaf],
            edges: vec![Edge { upper: VertexId(0), lower: VertexId(1), length }],
            leaves: vec![VertexId(1)],
            internals: Vec::new(),
            length_index,
            total_length: length,
            surplus_index: Fenwick::new(),
            weights: weight_tracking.then(Fenwick::new),
            weight_sum: 0.0,
        })
    }

    pub fn root(&self) -> VertexId {
        VertexId(0)
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// `|T|`, the number of non-root vertices (equal to the number of edges).
    pub fn size(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn internal_count(&self) -> usize {
        self.internals.len()
    }

    /// Running total of edge lengths, updated on every gluing.
    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Total held by the prefix-sum index.
    pub fn indexed_length(&self) -> f64 {
        self.length_index.total()
    }

    pub fn weight_tracking(&self) -> bool {
        self.weights.is_some()
    }

    /// Running sum of internal vertex weights.
    pub fn weight_sum(&self) -> f64 {
        self.weight_sum
    }

    pub fn edge_length(&self, e: EdgeId) -> f64 {
        self.edges[e.index()].length
    }

    /// Edge lengths in edge-id order.
    pub fn edge_lengths(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.length).collect()
    }

    /// `(upper, lower)` endpoints of an edge.
    pub fn edge_endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        let ed = &self.edges[e.index()];
        (ed.upper, ed.lower)
    }

    pub fn degree(&self, v: VertexId) -> u32 {
        self.vertices[v.index()].degree
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.vertices[v.index()].parent_edge.map(|e| self.edges[e.index()].upper)
    }

    pub fn parent_edge(&self, v: VertexId) -> Option<EdgeId> {
        self.vertices[v.index()].parent_edge
    }

    pub fn leaf_label(&self, v: VertexId) -> Option<u32> {
        self.vertices[v.index()].leaf_label
    }

    /// Leaf vertex carrying label `k` (1-based).
    pub fn leaf(&self, k: usize) -> Option<VertexId> {
        k.checked_sub(1).and_then(|i| self.leaves.get(i)).copied()
    }

    pub fn leaves(&self) -> &[VertexId] {
        &self.leaves
    }

    /// Internal vertices in order of appearance.
    pub fn internals(&self) -> &[VertexId] {
        &self.internals
    }

    pub fn is_internal(&self, v: VertexId) -> bool {
        v.index() < self.vertices.len() && self.vertices[v.index()].internal_slot.is_some()
    }

    /// Weight of an internal vertex (0 when tracking is off).
    pub fn vertex_weight(&self, v: VertexId) -> f64 {
        match (&self.weights, self.vertices[v.index()].internal_slot) {
            (Some(w), Some(slot)) => w.get(slot as usize),
            _ => 0.0,
        }
    }

    /// Internal vertex weights in order of appearance.
    pub fn weights(&self) -> Option<Vec<f64>> {
        self.weights.as_ref().map(|w| w.values().to_vec())
    }

    /// Parent vertex of every vertex (`None` for the root).
    pub fn parents(&self) -> Vec<Option<usize>> {
        self.vertices.iter().map(|v| v.parent_edge.map(|e| self.edges[e.index()].upper.index())).collect()
    }

    /// Children lists for every vertex, ordered by vertex id.
    pub fn children(&self) -> Vec<Vec<VertexId>> {
        let mut ch = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            ch[e.upper.index()].push(e.lower);
        }
        for c in &mut ch {
            c.sort_unstable();
        }
        ch
    }

    /// Distance of every vertex from the root.
    pub fn depths(&self) -> Vec<f64> {
        let children = self.children();
        let mut depth = vec![0.0; self.vertices.len()];
        let mut stack = vec![self.root()];
        while let Some(v) = stack.pop() {
            for &c in &children[v.index()] {
                let e = self.vertices[c.index()].parent_edge.expect("child has a parent edge");
                depth[c.index()] = depth[v.index()] + self.edges[e.index()].length;
                stack.push(c);
            }
        }
        depth
    }

    /// Distance from `v` to the root, by walking parent edges.
    pub fn distance_to_root(&self, v: VertexId) -> f64 {
        let mut d = 0.0;
        let mut cur = v;
        while let Some(e) = self.vertices[cur.index()].parent_edge {
            let ed = &self.edges[e.index()];
            d += ed.length;
            cur = ed.upper;
        }
        d
    }

    fn hops_to_root(&self, v: VertexId) -> usize {
        let mut n = 0;
        let mut cur = v;
        while let Some(p) = self.parent(cur) {
            n += 1;
            cur = p;
        }
        n
    }

    /// Geodesic distance between two vertices, in time linear in their heights.
    pub fn distance(&self, a: VertexId, b: VertexId) -> f64 {
        let (mut x, mut y) = (a, b);
        let (mut hx, mut hy) = (self.hops_to_root(x), self.hops_to_root(y));
        let mut d = 0.0;
        let mut climb = |v: &mut VertexId| {
            let e = self.vertices[v.index()].parent_edge.expect("non-root vertex");
            d += self.edges[e.index()].length;
            *v = self.edges[e.index()].upper;
        };
        while hx > hy {
            climb(&mut x);
            hx -= 1;
        }
        while hy > hx {
            climb(&mut y);
            hy -= 1;
        }
        while x != y {
            climb(&mut x);
            climb(&mut y);
        }
        d
    }

    /// Uniform point on the skeleton: edge by length through the prefix-sum
    /// index, then a uniform interior offset. Boundary offsets are resampled.
    pub fn sample_skeleton_point(&self, rng: &mut RngStream) -> SkeletonPoint {
        let total = self.length_index.total();
        let edge = self.length_index.find(rng.open01() * total).expect("tree has positive length");
        let length = self.edges[edge].length;
        loop {
            let offset = rng.open01() * length;
            if split_lengths(length, offset).is_some() {
                return SkeletonPoint { edge: EdgeId(edge as u32), offset };
            }
        }
    }

    fn push_vertex(&mut self, parent_edge: EdgeId, degree: u32, leaf_label: Option<u32>) -> VertexId {
        let id = VertexId(self.vertices.len() as u32);
        let internal_slot = (degree >= 3).then(|| {
            let slot = self.internals.len() as u32;
            self.internals.push(id);
            self.surplus_index.push(u64::from(degree - 3));
            if let Some(w) = self.weights.as_mut() {
                w.push(0.0);
            }
            slot
        });
        self.vertices.push(Vertex { parent_edge: Some(parent_edge), degree, leaf_label, internal_slot });
        id
    }

    fn push_edge(&mut self, upper: VertexId, lower: VertexId, length: f64) -> EdgeId {
        let id = EdgeId(self.edges.len() as u32);
        self.edges.push(Edge { upper, lower, length });
        self.length_index.push(length);
        id
    }

    fn check_branch(branch_length: f64) -> Result<()> {
        ensure!(
            branch_length.is_finite() && branch_length > 0.0,
            Parameter,
            "branch length must be > 0, got {branch_length}"
        );
        Ok(())
    }

    /// Splits the host edge at `point` and hangs a new leaf from the new
    /// degree-3 vertex. Returns `(new internal vertex, new leaf)`.
    pub fn glue_at_point(&mut self, point: SkeletonPoint, branch_length: f64) -> Result<(VertexId, VertexId)> {
        Self::check_branch(branch_length)?;
        let ei = point.edge.index();
        ensure!(ei < self.edges.len(), Structure, "edge {} does not exist", point.edge.0);
        let host = self.edges[ei];
        let (upper_len, lower_len) = split_lengths(host.length, point.offset).ok_or_else(|| {
            Error::Domain(format!("offset {} is not interior to edge of length {}", point.offset, host.length))
        })?;

        let mid_id = VertexId(self.vertices.len() as u32);
        let lower_edge = EdgeId(self.edges.len() as u32);
        let branch_edge = EdgeId(lower_edge.0 + 1);
        let mid = self.push_vertex(point.edge, 3, None);
        debug_assert_eq!(mid, mid_id);
        let label = self.leaves.len() as u32 + 1;
        let leaf = self.push_vertex(branch_edge, 1, Some(label));
        self.leaves.push(leaf);

        self.edges[ei].lower = mid;
        self.edges[ei].length = upper_len;
        self.length_index.set(ei, upper_len);
        self.push_edge(mid, host.lower, lower_len);
        self.vertices[host.lower.index()].parent_edge = Some(lower_edge);
        self.push_edge(mid, leaf, branch_length);

        self.total_length += branch_length;
        Ok((mid, leaf))
    }

    /// Attaches a new leaf directly to an internal vertex.
    pub fn glue_at_vertex(&mut self, v: VertexId, branch_length: f64) -> Result<VertexId> {
        Self::check_branch(branch_length)?;
        ensure!(v.index() < self.vertices.len(), Structure, "vertex {} does not exist", v.0);
        let slot = self.vertices[v.index()].internal_slot.ok_or_else(|| {
            Error::Domain(format!("vertex {} has degree {} and cannot be selected", v.0, self.degree(v)))
        })?;
        let edge = EdgeId(self.edges.len() as u32);
        let label = self.leaves.len() as u32 + 1;
        let leaf = self.push_vertex(edge, 1, Some(label));
        self.leaves.push(leaf);
        self.push_edge(v, leaf, branch_length);
        self.vertices[v.index()].degree += 1;
        self.surplus_index.add(slot as usize, 1);
        self.total_length += branch_length;
        Ok(leaf)
    }

    /// Adds `delta ≥ 0` to the weight of an internal vertex.
    pub fn add_vertex_weight(&mut self, v: VertexId, delta: f64) -> Result<()> {
        ensure!(delta.is_finite() && delta >= 0.0, Parameter, "weight increment must be >= 0, got {delta}");
        ensure!(v.index() < self.vertices.len(), Structure, "vertex {} does not exist", v.0);
        let slot = self.vertices[v.index()]
            .internal_slot
            .ok_or_else(|| Error::Domain(format!("vertex {} is not internal", v.0)))?;
        let w = self.weights.as_mut().ok_or_else(|| Error::State("weight tracking is disabled".into()))?;
        w.add(slot as usize, delta);
        self.weight_sum += delta;
        Ok(())
    }

    /// Internal vertex drawn with probability `W_v / Σ W`. `None` when all
    /// weights are zero or tracking is off.
    pub fn sample_vertex_by_weight(&self, rng: &mut RngStream) -> Option<VertexId> {
        let w = self.weights.as_ref()?;
        let total = w.total();
        if total <= 0.0 {
            return None;
        }
        w.find(rng.open01() * total).map(|slot| self.internals[slot])
    }

    /// Internal vertex drawn with probability proportional to `d_v - 1 - α`.
    pub fn sample_vertex_by_degree(&self, alpha: AlphaParam, rng: &mut RngStream) -> Option<VertexId> {
        let base = 2.0 - alpha.value();
        let n_int = self.internals.len() as f64;
        let surplus = self.surplus_index.total() as f64;
        let total = n_int * base + surplus;
        if self.internals.is_empty() || total <= 0.0 {
            return None;
        }
        let target = rng.open01() * total;
        if target < n_int * base {
            let slot = ((target / base) as usize).min(self.internals.len() - 1);
            Some(self.internals[slot])
        } else {
            let ticket = ((target - n_int * base) as u64).min(self.surplus_index.total() - 1);
            self.surplus_index.find(ticket).map(|slot| self.internals[slot])
        }
    }

    /// Per-internal-vertex selection weights `d_v - 1 - α` and their sum.
    /// All zero at α = 2.
    pub fn vertex_selection_weights(&self, alpha: AlphaParam) -> (Vec<(VertexId, f64)>, f64) {
        let a = alpha.value();
        let ws: Vec<(VertexId, f64)> = self
            .internals
            .iter()
            .map(|&v| {
                let w = if alpha.is_brownian() { 0.0 } else { self.degree(v) as f64 - 1.0 - a };
                (v, w)
            })
            .collect();
        let sum = ws.iter().map(|(_, w)| w).sum();
        (ws, sum)
    }

    /// Multiset of degrees of internal vertices.
    pub fn degree_census(&self) -> BTreeMap<u32, usize> {
        let mut m = BTreeMap::new();
        for &v in &self.internals {
            *m.entry(self.degree(v)).or_insert(0) += 1;
        }
        m
    }

    /// Canonical signature of the unlabelled shape.
    pub fn shape(&self) -> ShapeSignature {
        signature_from_parents(&self.parents(), 0)
    }

    /// Canonical signature keeping leaf labels.
    pub fn labelled_shape(&self) -> ShapeSignature {
        let labels: Vec<Option<u32>> = self.vertices.iter().map(|v| v.leaf_label).collect();
        labelled_signature(&self.parents(), 0, &labels)
    }

    /// Geodesic distances between the root and leaves `1..=p` (in that order).
    pub fn distance_matrix(&self) -> DistanceMatrix {
        let depth = self.depths();
        let mut hops = vec![0u32; self.vertices.len()];
        let children = self.children();
        let mut stack = vec![self.root()];
        while let Some(v) = stack.pop() {
            for &c in &children[v.index()] {
                hops[c.index()] = hops[v.index()] + 1;
                stack.push(c);
            }
        }
        let parent = self.parents();
        let lca = |mut a: usize, mut b: usize| -> usize {
            while hops[a] > hops[b] {
                a = parent[a].unwrap();
            }
            while hops[b] > hops[a] {
                b = parent[b].unwrap();
            }
            while a != b {
                a = parent[a].unwrap();
                b = parent[b].unwrap();
            }
            a
        };
        let nodes: Vec<usize> = std::iter::once(0).chain(self.leaves.iter().map(|v| v.index())).collect();
        let n = nodes.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (nodes[i], nodes[j]);
                let d = depth[a] + depth[b] - 2.0 * depth[lca(a, b)];
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        DistanceMatrix::new(self.leaves.len(), data)
    }

    /// The subtree spanned by the root and leaves `1..=p`, with degree-2
    /// vertices suppressed (their two edges merged).
    pub fn restrict_to_leaves(&self, p: usize) -> Result<WeightedRTree> {
        ensure!(p >= 1 && p <= self.leaves.len(), Parameter, "cannot restrict {} leaves to {p}", self.leaves.len());
        let n = self.vertices.len();
        let parent = self.parents();
        let mut keep = vec![false; n];
        keep[0] = true;
        for &leaf in &self.leaves[..p] {
            let mut v = leaf.index();
            while !keep[v] {
                keep[v] = true;
                v = parent[v].unwrap();
            }
        }
        let mut kept_children = vec![0u32; n];
        for v in 1..n {
            if keep[v] {
                kept_children[parent[v].unwrap()] += 1;
            }
        }
        // Surviving vertices: root, kept leaves, and kept vertices with ≥ 2 kept children.
        let survives =
            |v: usize| v == 0 || (keep[v] && (self.vertices[v].leaf_label.is_some() || kept_children[v] >= 2));
        let mut new_id = vec![u32::MAX; n];
        let mut order: Vec<usize> = (0..n).filter(|&v| survives(v)).collect();
        order.sort_unstable();
        for (i, &v) in order.iter().enumerate() {
            new_id[v] = i as u32;
        }
        let mut records = Vec::with_capacity(order.len());
        for &v in &order {
            let (up, len) = if v == 0 {
                (None, None)
            } else {
                let mut len = 0.0;
                let mut cur = v;
                loop {
                    len += self.edges[self.vertices[cur].parent_edge.unwrap().index()].length;
                    cur = parent[cur].unwrap();
                    if survives(cur) {
                        break;
                    }
                }
                (Some(new_id[cur]), Some(len))
            };
            let weight = self.vertices[v]
                .internal_slot
                .and_then(|_| self.weights.as_ref().map(|_| self.vertex_weight(VertexId(v as u32))));
            records.push(VertexRecord { id: new_id[v], parent: up, length: len, weight });
        }
        let leaf_order: Vec<u32> = self.leaves[..p].iter().map(|l| new_id[l.index()]).collect();
        WeightedRTree::from_records(&records, &leaf_order, false)
    }

    /// Builds a tree from per-vertex records (parent, length to parent).
    pub(crate) fn from_records(records: &[VertexRecord], leaf_order: &[u32], weight_tracking: bool) -> Result<Self> {
        let n = records.len();
        ensure!(n >= 2, Structure, "a tree needs a root and at least one leaf");
        let mut by_id = vec![usize::MAX; n];
        for (i, r) in records.iter().enumerate() {
            let id = r.id as usize;
            ensure!(id < n && by_id[id] == usize::MAX, Structure, "vertex ids must be a permutation of 0..{n}");
            by_id[id] = i;
        }
        let roots: Vec<u32> = records.iter().filter(|r| r.parent.is_none()).map(|r| r.id).collect();
        ensure!(roots == [0], Structure, "exactly one root with id 0 is required, found {roots:?}");

        let mut degree = vec![0u32; n];
        for r in records {
            if let Some(p) = r.parent {
                ensure!((p as usize) < n, Structure, "vertex {} has unknown parent {p}", r.id);
                degree[p as usize] += 1;
                degree[r.id as usize] += 1;
            }
        }
        ensure!(degree[0] == 1, Structure, "root must have degree 1, has {}", degree[0]);
        let mut label = vec![None; n];
        for (k, &v) in leaf_order.iter().enumerate() {
            ensure!((v as usize) < n && label[v as usize].is_none(), Structure, "bad leaf order entry {v}");
            label[v as usize] = Some(k as u32 + 1);
        }
        for v in 1..n {
            match degree[v] {
                1 => ensure!(label[v].is_some(), Structure, "leaf vertex {v} has no label"),
                2 => return Err(Error::Structure(format!("vertex {v} has degree 2"))),
                _ => ensure!(label[v].is_none(), Structure, "labelled vertex {v} is not a leaf"),
            }
        }
        // Every vertex must reach the root.
        let parent_of = |v: usize| records[by_id[v]].parent.map(|p| p as usize);
        for v in 0..n {
            let mut cur = v;
            let mut steps = 0;
            while let Some(p) = parent_of(cur) {
                cur = p;
                steps += 1;
                ensure!(steps <= n, Structure, "parent links contain a cycle");
            }
        }

        let mut tree = WeightedRTree {
            vertices: Vec::with_capacity(n),
            edges: Vec::with_capacity(n - 1),
            leaves: vec![VertexId(0); leaf_order.len()],
            internals: Vec::new(),
            length_index: Fenwick::with_capacity(n - 1),
            total_length: 0.0,
            surplus_index: Fenwick::new(),
            weights: weight_tracking.then(Fenwick::new),
            weight_sum: 0.0,
        };
        for v in 0..n {
            let r = &records[by_id[v]];
            let internal_slot = (v != 0 && degree[v] >= 3).then(|| {
                let slot = tree.internals.len() as u32;
                tree.internals.push(VertexId(v as u32));
                tree.surplus_index.push(u64::from(degree[v] - 3));
                if let Some(w) = tree.weights.as_mut() {
                    let wv = r.weight.unwrap_or(0.0);
                    w.push(wv);
                    tree.weight_sum += wv;
                }
                slot
            });
            tree.vertices.push(Vertex { parent_edge: None, degree: degree[v], leaf_label: label[v], internal_slot });
        }
        for v in 1..n {
            let r = &records[by_id[v]];
            let len = r.length.ok_or_else(|| Error::Structure(format!("vertex {v} has no edge length")))?;
            ensure!(len.is_finite() && len > 0.0, Structure, "edge above vertex {v} has non-positive length {len}");
            let e = tree.push_edge(VertexId(r.parent.unwrap()), VertexId(v as u32), len);
            tree.vertices[v].parent_edge = Some(e);
            tree.total_length += len;
        }
        for (k, &v) in leaf_order.iter().enumerate() {
            tree.leaves[k] = VertexId(v);
        }
        for w in tree.weights.iter().flat_map(|w| w.values()) {
            ensure!(*w >= 0.0, Structure, "negative vertex weight {w}");
        }
        Ok(tree)
    }

    /// Structural invariants; returns a description of the first violation.
    pub fn check_invariants(&self) -> Result<()> {
        ensure!(self.vertices[0].degree == 1, Structure, "root degree is {}", self.vertices[0].degree);
        ensure!(self.edges.len() == self.vertices.len() - 1, Structure, "edge/vertex count mismatch");
        let mut degree = vec![0u32; self.vertices.len()];
        let mut sum = 0.0;
        for (i, e) in self.edges.iter().enumerate() {
            ensure!(e.length > 0.0 && e.length.is_finite(), Structure, "edge {i} has length {}", e.length);
            ensure!(
                self.vertices[e.lower.index()].parent_edge == Some(EdgeId(i as u32)),
                Structure,
                "edge {i} is not the parent edge of its lower end"
            );
            degree[e.upper.index()] += 1;
            degree[e.lower.index()] += 1;
            sum += e.length;
        }
        for (i, v) in self.vertices.iter().enumerate() {
            ensure!(
                v.degree == degree[i],
                Structure,
                "vertex {i} degree {} but {} incident edges",
                v.degree,
                degree[i]
            );
            ensure!(i == 0 || v.degree != 2, Structure, "vertex {i} has degree 2");
            ensure!((v.degree >= 3) == v.internal_slot.is_some(), Structure, "vertex {i} internal flag mismatch");
        }
        for (k, leaf) in self.leaves.iter().enumerate() {
            ensure!(self.vertices[leaf.index()].leaf_label == Some(k as u32 + 1), Structure, "leaf {k} label mismatch");
        }
        // Naive summation of n terms drifts by at most about n ulps.
        let tol = (self.edges.len() as f64 * f64::EPSILON).max(1e-12);
        let rel = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        ensure!(rel(sum, self.total_length), Structure, "running total {} vs sum {}", self.total_length, sum);
        ensure!(
            rel(self.length_index.total(), sum),
            Structure,
            "index total {} vs sum {}",
            self.length_index.total(),
            sum
        );
        for (i, e) in self.edges.iter().enumerate() {
            ensure!(self.length_index.get(i) == e.length, Structure, "index entry {i} is stale");
        }
        let surplus: u64 = self.internals.iter().map(|&v| u64::from(self.degree(v) - 3)).sum();
        ensure!(surplus == self.surplus_index.total(), Structure, "degree index out of sync");
        if let Some(w) = &self.weights {
            let ws: f64 = w.values().iter().sum();
            ensure!(w.values().iter().all(|&x| x >= 0.0), Structure, "negative vertex weight");
            ensure!(
                (ws - self.weight_sum).abs() <= 1e-10 * ws.abs().max(1e-300) + 1e-300,
                Structure,
                "weight ledger {} vs sum {}",
                self.weight_sum,
                ws
            );
        }
        Ok(())
    }
}
