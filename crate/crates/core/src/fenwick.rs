//! Growable binary indexed tree over non-negative weights.

use std::ops::{Add, Sub};

pub(crate) trait Weight: Copy + Default + PartialOrd + Add<Output = Self> + Sub<Output = Self> {}

impl Weight for f64 {}
impl Weight for u64 {}

#[derive(Debug, Clone, Default)]
pub(crate) struct Fenwick<T: Weight> {
    // 1-based implicit tree; tree[0] unused.
    tree: Vec<T>,
    values: Vec<T>,
}

#[inline]
fn lsb(i: usize) -> usize {
    i & i.wrapping_neg()
}

impl<T: Weight> Fenwick<T> {
    pub fn new() -> Self {
        Self { tree: vec![T::default()], values: Vec::new() }
    }

    pub fn with_capacity(n: usize) -> Self {
        let mut tree = Vec::with_capacity(n + 1);
        tree.push(T::default());
        Self { tree, values: Vec::with_capacity(n) }
    }

    pub fn get(&self, i: usize) -> T {
        self.values[i]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Appends a value in O(log n).
    pub fn push(&mut self, v: T) {
        let k = self.values.len() + 1;
        // node k covers values (k - lsb(k), k]; all but the last are already present.
        let covered = self.prefix(k - 1) - self.prefix(k - lsb(k));
        self.values.push(v);
        self.tree.push(covered + v);
    }

    pub fn set(&mut self, i: usize, v: T) {
        let old = self.values[i];
        self.values[i] = v;
        let mut k = i + 1;
        if v >= old {
            let d = v - old;
            while k < self.tree.len() {
                self.tree[k] = self.tree[k] + d;
                k += lsb(k);
            }
        } else {
            let d = old - v;
            while k < self.tree.len() {
                self.tree[k] = self.tree[k] - d;
                k += lsb(k);
            }
        }
    }

    pub fn add(&mut self, i: usize, d: T) {
        let v = self.values[i] + d;
        self.set(i, v);
    }

    /// Sum of the first `n` values.
    pub fn prefix(&self, n: usize) -> T {
        let mut k = n;
        let mut s = T::default();
        while k > 0 {
            s = s + self.tree[k];
            k -= lsb(k);
        }
        s
    }

    pub fn total(&self) -> T {
        self.prefix(self.values.len())
    }

    /// Index `i` with `prefix(i) <= target < prefix(i + 1)`, skipping zero
    /// weights. Targets at or beyond the total (rounding) land on the last
    /// positive entry. `None` when every weight is zero.
    pub fn find(&self, target: T) -> Option<usize> {
        let n = self.values.len();
        if n == 0 {
            return None;
        }
        let mut pos = 0usize;
        let mut rem = target;
        let mut step = 1usize << (usize::BITS - 1 - n.leading_zeros());
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= rem {
                pos = next;
                rem = rem - self.tree[next];
            }
            step >>= 1;
        }
        if pos < n && self.values[pos] > T::default() {
            return Some(pos);
        }
        self.values.iter().rposition(|&v| v > T::default())
    }
}
