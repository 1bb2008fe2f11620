//! Undirected binary networks and node attributes.
//!
//! Adjacency is stored as one packed bit row per node, so edge tests are O(1)
//! and shared-partner counts reduce to a popcount over `ceil(N/64)` words.

use crate::error::{Error, Result};

/// An unordered node pair `{i, j}` with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dyad {
    i: usize,
    j: usize,
}

impl Dyad {
    /// Builds a dyad from two distinct nodes in either order.
    pub fn new(a: usize, b: usize) -> Result<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(Dyad { i: a, j: b }),
            std::cmp::Ordering::Greater => Ok(Dyad { i: b, j: a }),
            std::cmp::Ordering::Equal => Err(Error::Usage(format!("self-loop dyad ({a}, {a})"))),
        }
    }

    pub fn i(&self) -> usize {
        self.i
    }

    pub fn j(&self) -> usize {
        self.j
    }

    /// Linear index in `[0, N(N-1)/2)`, row-major over the upper triangle.
    pub fn index(&self, n: usize) -> usize {
        self.i * (2 * n - self.i - 1) / 2 + (self.j - self.i - 1)
    }

    /// Inverse of [`Dyad::index`].
    pub fn from_index(k: usize, n: usize) -> Result<Self> {
        let d = dyad_count(n);
        if k >= d {
            return Err(Error::Usage(format!(
                "dyad index {k} out of range for {n} nodes ({d} dyads)"
            )));
        }
        let mut i = 0;
        let mut start = 0;
        loop {
            let row = n - i - 1;
            if k < start + row {
                return Ok(Dyad {
                    i,
                    j: i + 1 + (k - start),
                });
            }
            start += row;
            i += 1;
        }
    }
}

/// Number of unordered node pairs, `N(N-1)/2`.
pub fn dyad_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// An undirected simple graph on `N` labelled nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    n: usize,
    words: usize,
    rows: Vec<u64>,
    edge_count: usize,
    labels: Vec<String>,
}

impl Network {
    /// Empty network with labels `"0".."N-1"`.
    pub fn empty(n: usize) -> Self {
        Self::with_labels((0..n).map(|i| i.to_string()).collect())
    }

    /// Empty network on the given node labels, in order.
    pub fn with_labels(labels: Vec<String>) -> Self {
        let n = labels.len();
        let words = n.div_ceil(64).max(1);
        Network {
            n,
            words,
            rows: vec![0; n * words],
            edge_count: 0,
            labels,
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut net = Self::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                net.set_edge(i, j, true);
            }
        }
        net
    }

    /// Builds a network from `(i, j)` pairs; duplicates are ignored.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut net = Self::empty(n);
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Usage(format!("edge ({a}, {b}) out of range for {n} nodes")));
            }
            let d = Dyad::new(a, b)?;
            net.set_edge(d.i, d.j, true);
        }
        Ok(net)
    }

    /// Network whose dyad `k` is present iff bit `k` of `mask` is set.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        let mut net = Self::empty(n);
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if mask >> k & 1 == 1 {
                    net.set_edge(i, j, true);
                }
                k += 1;
            }
        }
        net
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn n_dyads(&self) -> usize {
        dyad_count(self.n)
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Edge count divided by the number of dyads (0 for fewer than two nodes).
    pub fn density(&self) -> f64 {
        let d = self.n_dyads();
        if d == 0 {
            0.0
        } else {
            self.edge_count as f64 / d as f64
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    #[inline]
    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.rows[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    fn flip_bits(&mut self, i: usize, j: usize) {
        self.rows[i * self.words + j / 64] ^= 1 << (j % 64);
        self.rows[j * self.words + i / 64] ^= 1 << (i % 64);
    }

    fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        if self.has_edge(i, j) != present {
            self.flip_bits(i, j);
            if present {
                self.edge_count += 1;
            } else {
                self.edge_count -= 1;
            }
        }
    }

    /// Flips dyad `d`; returns the new edge state.
    pub fn toggle(&mut self, d: Dyad) -> Result<bool> {
        if d.j >= self.n {
            return Err(Error::Usage(format!(
                "dyad ({}, {}) out of range for {} nodes",
                d.i, d.j, self.n
            )));
        }
        Ok(self.toggle_unchecked(d.i, d.j))
    }

    /// Flips the dyad `{i, j}` without range checks; returns the new edge state.
    #[inline]
    pub(crate) fn toggle_unchecked(&mut self, i: usize, j: usize) -> bool {
        let now = !self.has_edge(i, j);
        self.flip_bits(i, j);
        if now {
            self.edge_count += 1;
        } else {
            self.edge_count -= 1;
        }
        now
    }

    /// Adds edge `{i, j}` if absent.
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        let d = Dyad::new(i, j)?;
        if d.j >= self.n {
            return Err(Error::Usage(format!("edge ({i}, {j}) out of range")));
        }
        self.set_edge(d.i, d.j, true);
        Ok(())
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    /// Iterator over the neighbours of `i` in increasing order.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        BitIter::new(self.row(i).iter().copied())
    }

    /// Nodes adjacent to `a` but not to `b` (and not `b` itself).
    pub(crate) fn neighbors_minus(&self, a: usize, b: usize) -> impl Iterator<Item = usize> + '_ {
        let bw = b / 64;
        let bb = 1u64 << (b % 64);
        let ra = self.row(a);
        let rb = self.row(b);
        BitIter::new(
            ra.iter()
                .zip(rb)
                .enumerate()
                .map(move |(w, (x, y))| x & !y & if w == bw { !bb } else { !0 }),
        )
    }

    /// Common neighbours of `a` and `b`.
    pub(crate) fn common_neighbors(&self, a: usize, b: usize) -> impl Iterator<Item = usize> + '_ {
        BitIter::new(self.row(a).iter().zip(self.row(b)).map(|(x, y)| x & y))
    }

    #[inline]
    pub(crate) fn shared_partners_unchecked(&self, i: usize, j: usize) -> usize {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(x, y)| (x & y).count_ones() as usize)
            .sum()
    }

    /// Number of nodes adjacent to both `i` and `j`.
    pub fn shared_partner_count(&self, i: usize, j: usize) -> Result<usize> {
        if i == j {
            return Err(Error::Usage(format!("shared partners of node {i} with itself")));
        }
        if i >= self.n || j >= self.n {
            return Err(Error::Usage(format!("node pair ({i}, {j}) out of range")));
        }
        Ok(self.shared_partners_unchecked(i, j))
    }

    /// Present edges as `(i, j)` with `i < j`, in dyad-index order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for i in 0..self.n {
            for j in self.neighbors(i) {
                if j > i {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

struct BitIter<I: Iterator<Item = u64>> {
    words: I,
    base: usize,
    current: u64,
    started: bool,
}

impl<I: Iterator<Item = u64>> BitIter<I> {
    fn new(words: I) -> Self {
        BitIter {
            words,
            base: 0,
            current: 0,
            started: false,
        }
    }
}

impl<I: Iterator<Item = u64>> Iterator for BitIter<I> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let tz = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.base + tz);
            }
            let w = self.words.next()?;
            if self.started {
                self.base += 64;
            }
            self.started = true;
            self.current = w;
        }
    }
}

/// Values of one node attribute column.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnValues {
    Numeric(Vec<f64>),
    Categorical {
        /// Ordered level set.
        levels: Vec<String>,
        /// Index into `levels` of the reference level.
        reference: usize,
        /// Per-node index into `levels`.
        codes: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: ColumnValues,
}

impl Column {
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column {
            name: name.into(),
            values: ColumnValues::Numeric(values),
        }
    }

    /// Categorical column from per-node level strings. Levels are taken in
    /// sorted order unless `levels` is given.
    pub fn categorical(
        name: impl Into<String>,
        raw: &[String],
        levels: Option<Vec<String>>,
        reference: Option<&str>,
    ) -> Result<Self> {
        let name = name.into();
        let levels = match levels {
            Some(l) => l,
            None => {
                let mut l: Vec<String> = raw.to_vec();
                l.sort();
                l.dedup();
                l
            }
        };
        let codes = raw
            .iter()
            .map(|v| {
                levels.iter().position(|l| l == v).ok_or_else(|| {
                    Error::Spec(format!("column '{name}': value '{v}' is not a declared level"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let reference = match reference {
            Some(r) => levels.iter().position(|l| l == r).ok_or_else(|| {
                Error::Spec(format!("column '{name}': reference level '{r}' not among levels"))
            })?,
            None => 0,
        };
        if levels.is_empty() && !raw.is_empty() {
            return Err(Error::Spec(format!("column '{name}' has no levels")));
        }
        Ok(Column {
            name,
            values: ColumnValues::Categorical {
                levels,
                reference,
                codes,
            },
        })
    }

    pub fn len(&self) -> usize {
        match &self.values {
            ColumnValues::Numeric(v) => v.len(),
            ColumnValues::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-node attribute columns; every column has one value per node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttributeTable {
    n_rows: usize,
    columns: Vec<Column>,
}

impl AttributeTable {
    pub fn new(n_rows: usize) -> Self {
        AttributeTable {
            n_rows,
            columns: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn push(&mut self, column: Column) -> Result<()> {
        if column.len() != self.n_rows {
            return Err(Error::Spec(format!(
                "column '{}' has {} values, expected {}",
                column.name,
                column.len(),
                self.n_rows
            )));
        }
        if self.get(&column.name).is_some() {
            return Err(Error::Spec(format!("duplicate column '{}'", column.name)));
        }
        self.columns.push(column);
        Ok(())
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn get(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }
}
