//! Undirected binary graphs, community label vectors and block statistics.
//!
//! A [`Graph`] stores only the strict upper triangle of its adjacency matrix
//! as a packed bit set, so symmetry and the zero diagonal hold by
//! construction. Edge-flipped graphs are dense (roughly half of all pairs are
//! present for small privacy budgets), which is why no sparse format is used.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

/// Symmetric zero-diagonal adjacency structure on `n` nodes.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    /// Word offset of row `i`; row `i` holds columns `i+1..n`.
    row_offsets: Vec<usize>,
    words: Vec<u64>,
}

impl Graph {
    /// Graph with no edges.
    pub fn empty(n: usize) -> Self {
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut total = 0;
        for i in 0..n {
            row_offsets.push(total);
            total += (n - i - 1).div_ceil(WORD_BITS);
        }
        row_offsets.push(total);
        Graph {
            n,
            row_offsets,
            words: vec![0; total],
        }
    }

    pub fn complete(n: usize) -> Self {
        Self::from_upper_fn(n, |_, _| true)
    }

    /// Builds a graph by evaluating `edge(i, j)` for every pair `i < j` in
    /// row-major order. Samplers rely on this order for reproducibility.
    pub fn from_upper_fn(n: usize, mut edge: impl FnMut(usize, usize) -> bool) -> Self {
        let mut g = Self::empty(n);
        for i in 0..n {
            let base = g.row_offsets[i];
            for j in (i + 1)..n {
                if edge(i, j) {
                    let pos = j - i - 1;
                    g.words[base + pos / WORD_BITS] |= 1u64 << (pos % WORD_BITS);
                }
            }
        }
        g
    }

    /// Builds a graph from 0-based node pairs. Self-loops are ignored and
    /// duplicates collapse.
    ///
    /// Panics if an endpoint is `>= n`.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = Self::empty(n);
        for (i, j) in edges {
            assert!(i < n && j < n, "edge ({i}, {j}) out of range for n = {n}");
            if i != j {
                g.set(i, j, true);
            }
        }
        g
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, value: bool) {
        let (word, bit) = self.locate(i, j);
        if value {
            self.words[word] |= 1u64 << bit;
        } else {
            self.words[word] &= !(1u64 << bit);
        }
    }

    fn locate(&self, i: usize, j: usize) -> (usize, usize) {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let pos = b - a - 1;
        (self.row_offsets[a] + pos / WORD_BITS, pos % WORD_BITS)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Number of unordered pairs `i < j`.
    pub fn pair_count(&self) -> usize {
        self.n * self.n.saturating_sub(1) / 2
    }

    /// Logical entry `Y_ij`.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (word, bit) = self.locate(i, j);
        self.words[word] >> bit & 1 == 1
    }

    pub fn edge_count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn density(&self) -> f64 {
        match self.pair_count() {
            0 => 0.0,
            m => self.edge_count() as f64 / m as f64,
        }
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.has_edge(i, j)).count()
    }

    /// Neighbours `j > i` of node `i`, ascending.
    pub fn upper_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let words = &self.words[self.row_offsets[i]..self.row_offsets[i + 1]];
        words.iter().enumerate().flat_map(move |(w, &bits)| {
            BitIter(bits).map(move |b| i + 1 + w * WORD_BITS + b)
        })
    }

    /// All edges `(i, j)` with `i < j` in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.upper_neighbors(i).map(move |j| (i, j)))
    }

    /// `y = Y x` using only the stored upper triangle.
    pub fn adjacency_matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let xi = x[i];
            let mut acc = 0.0;
            let words = &self.words[self.row_offsets[i]..self.row_offsets[i + 1]];
            for (w, &bits) in words.iter().enumerate() {
                let base = i + 1 + w * WORD_BITS;
                for b in BitIter(bits) {
                    let j = base + b;
                    acc += x[j];
                    y[j] += xi;
                }
            }
            y[i] += acc;
        }
    }

    /// Dense 0/1 adjacency matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j) in self.edges() {
            m[(i, j)] = 1.0;
            m[(j, i)] = 1.0;
        }
        m
    }

    /// Writes the graph as a 1-based edge list, one `i j` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.edges() {
            out.push_str(&format!("{} {}\n", i + 1, j + 1));
        }
        out
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("edges", &self.edge_count())
            .finish()
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(b)
    }
}

/// Community assignment of `n` nodes to `k` blocks.
///
/// Labels are stored 0-based (`0..k`); files and reports use 1-based labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    k: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("label vector needs k >= 1"));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::invalid(format!("label {bad} outside 0..{k}")));
        }
        Ok(LabelVector { labels, k })
    }

    /// Infers `k` as one more than the largest label.
    pub fn from_labels(labels: Vec<usize>) -> Self {
        let k = labels.iter().copied().max().map_or(1, |m| m + 1);
        LabelVector { labels, k }
    }

    /// `k` equal contiguous blocks: nodes `0..n/k` in block 0 and so on.
    pub fn contiguous_blocks(n: usize, k: usize) -> Result<Self> {
        if k == 0 || n % k != 0 {
            return Err(Error::invalid(format!("k = {k} does not divide n = {n}")));
        }
        let size = n / k;
        Ok(LabelVector {
            labels: (0..n).map(|i| i / size).collect(),
            k,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn get(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// Node indices of each block.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            blocks[l].push(i);
        }
        blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Applies `perm` to every label; `perm` must be a permutation of `0..k`.
    pub fn relabel(&self, perm: &[usize]) -> LabelVector {
        LabelVector {
            labels: self.labels.iter().map(|&l| perm[l]).collect(),
            k: self.k,
        }
    }
}

/// Block sizes and the order statistics used by the misclassification bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunityStats {
    pub block_sizes: Vec<usize>,
    pub n_min: usize,
    pub n_max: usize,
    /// Second-largest block size; equal to `n_max` when `k = 1`.
    pub n_max_prime: usize,
    /// Set when `k = 1` forced `n_max_prime = n_max`.
    pub single_block: bool,
}

pub fn community_stats(labels: &LabelVector) -> CommunityStats {
    let block_sizes = labels.block_sizes();
    let mut sorted = block_sizes.clone();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let n_max = sorted[0];
    let n_min = *sorted.last().unwrap();
    let single_block = sorted.len() == 1;
    let n_max_prime = if single_block { n_max } else { sorted[1] };
    CommunityStats {
        block_sizes,
        n_min,
        n_max,
        n_max_prime,
        single_block,
    }
}
