//! Canonical signatures of rooted shapes.
//!
//! A vertex encodes as `(` followed by the sorted encodings of its children
//! and `)`, so two trees share a signature exactly when they are isomorphic as
//! rooted trees. The labelled variant writes leaf `k` as `[k]`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ShapeSignature(String);

impl ShapeSignature {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Parses and re-canonicalises a signature string.
    pub fn parse(s: &str) -> Result<Self> {
        let (parents, labels) = parse_parents(s)?;
        let labelled = labels.iter().any(Option::is_some);
        Ok(if labelled { labelled_signature(&parents, 0, &labels) } else { signature_from_parents(&parents, 0) })
    }

    /// Number of leaves (vertices other than the root with no children).
    pub fn leaf_count(&self) -> usize {
        let b = self.0.as_bytes();
        let mut n = 0;
        for i in 1..b.len() {
            if (b[i - 1] == b'(' && b[i] == b')') || b[i] == b'[' {
                n += 1;
            }
        }
        n
    }

    /// Number of non-root vertices, which is also the number of edges.
    pub fn size(&self) -> usize {
        self.0.bytes().filter(|&c| c == b'(' || c == b'[').count() - 1
    }

    /// Multiset of internal degrees (children + 1), sorted.
    pub fn degrees(&self) -> Vec<u32> {
        let (parents, _) = parse_parents(&self.0).expect("signature is canonical");
        let mut kids = vec![0u32; parents.len()];
        for p in parents.iter().flatten() {
            kids[*p] += 1;
        }
        let mut d: Vec<u32> = kids.iter().skip(1).filter(|&&k| k >= 2).map(|k| k + 1).collect();
        d.sort_unstable();
        d
    }
}

impl fmt::Display for ShapeSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn children_of(parents: &[Option<usize>]) -> Vec<Vec<usize>> {
    let mut ch = vec![Vec::new(); parents.len()];
    for (v, p) in parents.iter().enumerate() {
        if let Some(p) = p {
            ch[*p].push(v);
        }
    }
    ch
}

fn encode(parents: &[Option<usize>], root: usize, leaf: impl Fn(usize) -> Option<String>) -> ShapeSignature {
    let children = children_of(parents);
    let mut code: Vec<Option<String>> = vec![None; parents.len()];
    // Post-order without recursion.
    let mut stack = vec![(root, false)];
    while let Some((v, done)) = stack.pop() {
        if done || children[v].is_empty() {
            if children[v].is_empty() {
                code[v] = Some(leaf(v).unwrap_or_else(|| "()".to_string()));
                continue;
            }
            let mut parts: Vec<String> = children[v].iter().map(|&c| code[c].take().unwrap()).collect();
            parts.sort_unstable();
            let mut s = String::with_capacity(2 + parts.iter().map(String::len).sum::<usize>());
            s.push('(');
            for p in parts {
                s.push_str(&p);
            }
            s.push(')');
            code[v] = Some(s);
        } else {
            stack.push((v, true));
            stack.extend(children[v].iter().map(|&c| (c, false)));
        }
    }
    ShapeSignature(code[root].take().unwrap())
}

/// Unlabelled signature of the tree given by a parent array.
pub fn signature_from_parents(parents: &[Option<usize>], root: usize) -> ShapeSignature {
    encode(parents, root, |_| None)
}

/// Signature keeping leaf labels; `labels[v]` is `Some(k)` for leaf `k`.
pub fn labelled_signature(parents: &[Option<usize>], root: usize, labels: &[Option<u32>]) -> ShapeSignature {
    encode(parents, root, |v| labels[v].map(|k| format!("[{k}]")))
}

type ParsedShape = (Vec<Option<usize>>, Vec<Option<u32>>);

fn parse_parents(s: &str) -> Result<ParsedShape> {
    let bad = |msg: &str| Error::Parse(format!("invalid shape signature {s:?}: {msg}"));
    let b = s.as_bytes();
    let mut parents = Vec::new();
    let mut labels = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            b'(' => {
                if !parents.is_empty() && open.is_empty() {
                    return Err(bad("more than one top-level vertex"));
                }
                parents.push(open.last().copied());
                labels.push(None);
                open.push(parents.len() - 1);
                i += 1;
            }
            b')' => {
                open.pop().ok_or_else(|| bad("unbalanced ')'"))?;
                i += 1;
            }
            b'[' => {
                let end = s[i..].find(']').ok_or_else(|| bad("unterminated label"))? + i;
                let k: u32 = s[i + 1..end].parse().map_err(|_| bad("label is not an integer"))?;
                let parent = *open.last().ok_or_else(|| bad("label outside any vertex"))?;
                parents.push(Some(parent));
                labels.push(Some(k));
                i = end + 1;
            }
            _ => return Err(bad("unexpected character")),
        }
    }
    if !open.is_empty() || parents.is_empty() {
        return Err(bad("unbalanced '('"));
    }
    Ok((parents, labels))
}
