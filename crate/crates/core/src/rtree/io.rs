//! JSON, Newick and distance-matrix CSV serializers.
//!
//! Newick output writes the degree-1 root as the top node named `root`, with
//! leaves named `L1..Lp` and internal vertices unnamed. Lengths use Rust's
//! shortest round-trip formatting, so parsing reproduces them bit for bit.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::WeightedRTree;
use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub id: u32,
    pub parent: Option<u32>,
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub vertices: Vec<VertexRecord>,
    pub leaf_order: Vec<u32>,
}

/// Distances between the root (index 0) and leaves `1..=p`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    p: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub(crate) fn new(p: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), (p + 1) * (p + 1));
        Self { p, data }
    }

    pub fn leaves(&self) -> usize {
        self.p
    }

    /// Side length `p + 1`.
    pub fn dim(&self) -> usize {
        self.p + 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.dim();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn max_abs_diff(&self, other: &DistanceMatrix) -> f64 {
        if self.p != other.p {
            return f64::INFINITY;
        }
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Largest violation of the four-point condition over all quadruples:
    /// the two largest of the three pair sums must coincide.
    pub fn four_point_violation(&self) -> f64 {
        let n = self.dim();
        let d = |i, j| self.get(i, j);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    for l in k + 1..n {
                        let mut s = [d(i, j) + d(k, l), d(i, k) + d(j, l), d(i, l) + d(j, k)];
                        s.sort_by(f64::total_cmp);
                        worst = worst.max(s[2] - s[1]);
                    }
                }
            }
        }
        worst
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("root");
        for k in 1..=self.p {
            write!(out, ",L{k}").unwrap();
        }
        out.push('\n');
        for i in 0..self.dim() {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(s: &str) -> Result<Self> {
        let mut lines = s.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> =
            lines.next().ok_or_else(|| Error::Parse("empty distance matrix".into()))?.split(',').collect();
        ensure!(header.first() == Some(&"root"), Parse, "distance matrix header must start with root");
        for (k, h) in header.iter().enumerate().skip(1) {
            ensure!(*h == format!("L{k}"), Parse, "unexpected header column {h:?}");
        }
        let n = header.len();
        let mut data = Vec::with_capacity(n * n);
        for line in lines {
            let row: Vec<f64> = line
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad entry {x:?}: {e}"))))
                .collect::<Result<_>>()?;
            ensure!(row.len() == n, Parse, "row has {} entries, expected {n}", row.len());
            data.extend(row);
        }
        ensure!(data.len() == n * n, Parse, "expected {n} rows, got {}", data.len() / n);
        Ok(Self { p: n - 1, data })
    }
}

impl WeightedRTree {
    pub fn to_document(&self, alpha: Option<f64>, seed: Option<u64>) -> TreeDocument {
        let vertices = (0..self.vertices.len())
            .map(|v| {
                let vx = &self.vertices[v];
                VertexRecord {
                    id: v as u32,
                    parent: vx.parent_edge.map(|e| self.edges[e.index()].upper.0),
                    length: vx.parent_edge.map(|e| self.edges[e.index()].length),
                    weight: vx
                        .internal_slot
                        .and(self.weights.as_ref())
                        .map(|_| self.vertex_weight(super::VertexId(v as u32))),
                }
            })
            .collect();
        TreeDocument { alpha, seed, vertices, leaf_order: self.leaves.iter().map(|v| v.0).collect() }
    }

    pub fn from_document(doc: &TreeDocument) -> Result<Self> {
        let tracking = doc.vertices.iter().any(|r| r.weight.is_some());
        WeightedRTree::from_records(&doc.vertices, &doc.leaf_order, tracking)
    }

    pub fn to_json(&self, alpha: Option<f64>, seed: Option<u64>) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document(alpha, seed))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: TreeDocument = serde_json::from_str(s)?;
        Self::from_document(&doc)
    }

    pub fn to_newick(&self) -> String {
        let children = self.children();
        let mut out = String::with_capacity(self.vertices.len() * 24);
        // (vertex, next child index)
        let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
        while let Some(&(v, next)) = stack.last() {
            let ch = &children[v];
            if next < ch.len() {
                out.push(if next == 0 { '(' } else { ',' });
                stack.last_mut().unwrap().1 += 1;
                stack.push((ch[next].index(), 0));
            } else {
                if !ch.is_empty() {
                    out.push(')');
                }
                stack.pop();
                self.write_label(&mut out, v);
            }
        }
        out.push(';');
        out
    }

    fn write_label(&self, out: &mut String, v: usize) {
        let vx = &self.vertices[v];
        match (v, vx.leaf_label) {
            (0, _) => out.push_str("root"),
            (_, Some(k)) => write!(out, "L{k}").unwrap(),
            _ => {}
        }
        if let Some(e) = vx.parent_edge {
            write!(out, ":{}", self.edges[e.index()].length).unwrap();
        }
    }

    /// Parses Newick text whose top node is the degree-1 root. Leaves named
    /// `Lk` take label `k`; other leaves are labelled in order of appearance.
    pub fn from_newick(s: &str) -> Result<Self> {
        let text = s.trim();
        let text = text.strip_suffix(';').ok_or_else(|| Error::Parse("Newick string must end with ';'".into()))?;
        let bytes = text.as_bytes();
        let mut parent: Vec<Option<u32>> = vec![None];
        let mut length: Vec<Option<f64>> = vec![None];
        let mut name: Vec<String> = vec![String::new()];
        let mut n_children: Vec<usize> = vec![0];
        let mut open: Vec<usize> = Vec::new();
        // Vertex receiving the next name or length; `None` right after '(' or ','.
        let mut cur: Option<usize> = None;
        let mut started = false;
        let mut child_of = |par: usize, parent: &mut Vec<Option<u32>>| {
            parent.push(Some(par as u32));
            length.push(None);
            name.push(String::new());
            n_children.push(0);
            n_children[par] += 1;
            parent.len() - 1
        };
        let mut i = 0;
        let mut lengths: Vec<(usize, f64)> = Vec::new();
        let mut names: Vec<(usize, String)> = Vec::new();
        while i < bytes.len() {
            match bytes[i] {
                b'(' => {
                    ensure!(cur.is_none(), Parse, "unexpected '(' at byte {i}");
                    let v = match open.last() {
                        None if !started => 0,
                        None => return Err(Error::Parse("more than one top-level node".into())),
                        Some(&top) => child_of(top, &mut parent),
                    };
                    started = true;
                    open.push(v);
                    i += 1;
                }
                b',' | b')' => {
                    ensure!(cur.is_some(), Parse, "empty node at byte {i}");
                    cur = if bytes[i] == b')' {
                        Some(open.pop().ok_or_else(|| Error::Parse("unbalanced ')'".into()))?)
                    } else {
                        None
                    };
                    ensure!(!open.is_empty() || bytes[i] == b')', Parse, "',' outside parentheses");
                    i += 1;
                }
                c if c.is_ascii_whitespace() => i += 1,
                c => {
                    let stop = |b: &u8| matches!(b, b',' | b')' | b'(' | b':');
                    let v = match cur {
                        Some(v) => v,
                        None => {
                            let top = *open.last().ok_or_else(|| Error::Parse("label outside parentheses".into()))?;
                            child_of(top, &mut parent)
                        }
                    };
                    cur = Some(v);
                    if c == b':' {
                        let end = bytes[i + 1..].iter().position(stop).map_or(bytes.len(), |k| k + i + 1);
                        let raw = text[i + 1..end].trim();
                        let x: f64 =
                            raw.parse().map_err(|e| Error::Parse(format!("bad branch length {raw:?}: {e}")))?;
                        lengths.push((v, x));
                        i = end;
                    } else {
                        let end = bytes[i..].iter().position(stop).map_or(bytes.len(), |k| k + i);
                        names.push((v, text[i..end].trim().to_string()));
                        i = end;
                    }
                }
            }
        }
        for (v, x) in lengths {
            length[v] = Some(x);
        }
        for (v, s) in names {
            name[v] = s;
        }
        ensure!(open.is_empty(), Parse, "unbalanced '('");
        ensure!(started, Parse, "Newick string has no root");

        let n = parent.len();
        let mut leaf_order: Vec<Option<u32>> = Vec::new();
        let mut unnamed = Vec::new();
        for v in 1..n {
            if n_children[v] == 0 {
                match name[v].strip_prefix('L').and_then(|k| k.parse::<usize>().ok()) {
                    Some(k) if k >= 1 => {
                        if leaf_order.len() < k {
                            leaf_order.resize(k, None);
                        }
                        ensure!(leaf_order[k - 1].is_none(), Parse, "duplicate leaf name L{k}");
                        leaf_order[k - 1] = Some(v as u32);
                    }
                    _ => unnamed.push(v as u32),
                }
            }
        }
        let mut order: Vec<u32> = Vec::new();
        let mut holes = unnamed.into_iter();
        for slot in leaf_order {
            match slot {
                Some(v) => order.push(v),
                None => {
                    order.push(holes.next().ok_or_else(|| Error::Parse("leaf names L1..Lp are not contiguous".into()))?)
                }
            }
        }
        order.extend(holes);
        let records: Vec<VertexRecord> =
            (0..n).map(|v| VertexRecord { id: v as u32, parent: parent[v], length: length[v], weight: None }).collect();
        WeightedRTree::from_records(&records, &order, false)
    }
}
