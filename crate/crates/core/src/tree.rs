// SPDX-License-Identifier: MIT OR Apache-2.0

//! Tree generation and degree statistics.
//!
//! Vertices are labelled `1..=n` in order of arrival; vertex 1 is the root.
//! The total degree of a vertex is its out-degree plus one, except for the
//! root whose degree is its out-degree.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::leaves::{LeafConvention, LeafTrajectory};
use crate::schedule::{ChangePointSchedule, SegmentCursor};

/// Sentinel parent of the root.
pub const ROOT_PARENT: usize = 0;

/// Constant-time sampler for the attachment law
/// `P(v) = (out_degree(v) + 1 + offset) / ((2 + offset) m - 1)`.
///
/// The law splits into an edge part (mass `m - 1`, one unit per child) and a
/// vertex part (mass `1 + offset` per vertex). The first is sampled by picking
/// a uniform child and returning its parent, the second by picking a uniform
/// vertex. No per-vertex weights are stored, so the offset can change freely
/// between draws.
#[derive(Debug, Clone)]
pub struct AttachmentSampler {
    // parent[0] unused, parent[1] = ROOT_PARENT
    parent: Vec<usize>,
}

impl AttachmentSampler {
    /// Sampler over the single-vertex tree.
    pub fn new() -> Self {
        Self::with_capacity(1)
    }

    pub fn with_capacity(n: usize) -> Self {
        let mut parent = Vec::with_capacity(n + 1);
        parent.push(ROOT_PARENT);
        parent.push(ROOT_PARENT);
        Self { parent }
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len() - 1
    }

    /// `sum_v (out_degree(v) + 1 + offset)`.
    pub fn total_weight(&self, offset: f64) -> f64 {
        (2.0 + offset) * self.vertex_count() as f64 - 1.0
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, offset: f64, rng: &mut R) -> usize {
        let m = self.vertex_count();
        let edges = (m - 1) as f64;
        let u = rng.random::<f64>() * self.total_weight(offset);
        if u < edges {
            self.parent[rng.random_range(2..=m)]
        } else {
            rng.random_range(1..=m)
        }
    }

    /// Adds vertex `m + 1` as a child of `parent`.
    #[inline]
    pub fn attach(&mut self, parent: usize) {
        debug_assert!(parent >= 1 && parent < self.parent.len());
        self.parent.push(parent);
    }

    fn into_parents(self) -> Vec<usize> {
        self.parent
    }
}

impl Default for AttachmentSampler {
    fn default() -> Self {
        Self::new()
    }
}

/// What [`grow_tree`] records while it runs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordOptions {
    /// Record the leaf count after every step, under this convention.
    pub leaves: Option<LeafConvention>,
    /// Sizes at which to snapshot the degree histogram.
    pub degree_checkpoints: Vec<usize>,
}

impl RecordOptions {
    pub fn leaves() -> Self {
        Self {
            leaves: Some(LeafConvention::IncludeRoot),
            degree_checkpoints: Vec::new(),
        }
    }

    pub fn leaves_with(convention: LeafConvention) -> Self {
        Self {
            leaves: Some(convention),
            degree_checkpoints: Vec::new(),
        }
    }
}

/// Number of vertices of each total degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeHistogram {
    // counts[k] = N(k); counts[0] is only ever the lone root of a 1-vertex tree
    counts: Vec<u64>,
    n: usize,
}

impl DegreeHistogram {
    pub fn from_counts(mut counts: Vec<u64>) -> Self {
        while counts.len() > 1 && counts.last() == Some(&0) {
            counts.pop();
        }
        let n = counts.iter().sum::<u64>() as usize;
        Self { counts, n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self, k: usize) -> u64 {
        self.counts.get(k).copied().unwrap_or(0)
    }

    pub fn proportion(&self, k: usize) -> f64 {
        self.count(k) as f64 / self.n as f64
    }

    pub fn max_degree(&self) -> usize {
        self.counts.len() - 1
    }

    /// Raw counts indexed by degree.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `(k, N(k))` for every degree that occurs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| (k, c))
    }

    /// Empirical pmf `N(k)/n` for `k = 0..=k_max`.
    pub fn pmf(&self, k_max: usize) -> Vec<f64> {
        (0..=k_max).map(|k| self.proportion(k)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct GrowingTree {
    parent: Vec<usize>,
    out_degree: Vec<usize>,
    leaves: Option<LeafTrajectory>,
    snapshots: Vec<(usize, DegreeHistogram)>,
}

impl GrowingTree {
    /// Builds a tree from its parent array (`parents[0]` is the parent of
    /// vertex 1 and must be the sentinel 0).
    pub fn from_parents(parents: &[usize]) -> Result<Self> {
        let n = parents.len();
        if n == 0 {
            return Err(Error::SizeTooSmall { n, min: 1 });
        }
        if parents[0] != ROOT_PARENT {
            return Err(Error::InvalidConfig("root must carry the sentinel parent 0"));
        }
        let mut parent = Vec::with_capacity(n + 1);
        parent.push(ROOT_PARENT);
        parent.extend_from_slice(parents);
        for (v, &p) in parent.iter().enumerate().skip(2) {
            if p == 0 || p >= v {
                return Err(Error::InvalidConfig("parent must precede its child"));
            }
        }
        Ok(Self::from_parent_vec(parent))
    }

    fn from_parent_vec(parent: Vec<usize>) -> Self {
        let mut out_degree = vec![0usize; parent.len()];
        for &p in &parent[2..] {
            out_degree[p] += 1;
        }
        Self {
            parent,
            out_degree,
            leaves: None,
            snapshots: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.parent.len() - 1
    }

    /// Parent of vertex `v` (0 for the root).
    pub fn parent(&self, v: usize) -> usize {
        self.parent[v]
    }

    /// Parents of vertices `1..=n`, root first.
    pub fn parents(&self) -> &[usize] {
        &self.parent[1..]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_degree[v]
    }

    pub fn total_degree(&self, v: usize) -> usize {
        self.out_degree[v] + usize::from(v != 1)
    }

    pub fn leaf_trajectory(&self) -> Option<&LeafTrajectory> {
        self.leaves.as_ref()
    }

    pub fn take_leaf_trajectory(&mut self) -> Option<LeafTrajectory> {
        self.leaves.take()
    }

    /// Degree histograms captured at the requested checkpoints.
    pub fn snapshots(&self) -> &[(usize, DegreeHistogram)] {
        &self.snapshots
    }

    /// The tree formed by the first `m` vertices.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.n() {
            return Err(Error::IndexOutOfRange {
                index: m,
                lo: 1,
                hi: self.n(),
            });
        }
        Ok(Self::from_parent_vec(self.parent[..=m].to_vec()))
    }

    /// Structural invariants: parents precede children, out-degrees match the
    /// parent array, and there are `n - 1` edges.
    pub fn is_consistent(&self) -> bool {
        let n = self.n();
        if self.parent[1] != ROOT_PARENT {
            return false;
        }
        let mut counted = vec![0usize; n + 1];
        for v in 2..=n {
            let p = self.parent[v];
            if p == 0 || p >= v {
                return false;
            }
            counted[p] += 1;
        }
        counted[1..] == self.out_degree[1..] && self.out_degree.iter().sum::<usize>() == n - 1
    }
}

/// Grows a tree of `n` vertices. Vertex `m + 1` attaches with the offset of
/// the segment that contains step `m + 1`.
pub fn grow_tree<R: Rng + ?Sized>(
    schedule: &ChangePointSchedule,
    n: usize,
    rng: &mut R,
    record: &RecordOptions,
) -> Result<GrowingTree> {
    if n < 2 {
        return Err(Error::SizeTooSmall { n, min: 2 });
    }
    let mut checkpoints = record.degree_checkpoints.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    if let Some(&bad) = checkpoints.iter().find(|&&c| c == 0 || c > n) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            lo: 1,
            hi: n,
        });
    }
    let mut next_checkpoint = checkpoints.iter().copied().peekable();

    let mut sampler = AttachmentSampler::with_capacity(n);
    let mut out_degree = vec![0usize; n + 1];
    // hist[d] = number of vertices of total degree d
    let mut hist: Vec<u64> = vec![1, 0];
    let mut leaf_counts = record.leaves.map(|_| {
        let mut v = Vec::with_capacity(n + 1);
        v.extend_from_slice(&[0, 0]);
        v
    });
    let mut snapshots = Vec::with_capacity(checkpoints.len());
    if next_checkpoint.peek() == Some(&1) {
        snapshots.push((1, DegreeHistogram::from_counts(hist.clone())));
        next_checkpoint.next();
    }
    let mut cursor = SegmentCursor::new(schedule, n);

    for m in 1..n {
        let offset = cursor.offset_at(m + 1);
        let v = sampler.sample(offset, rng);
        sampler.attach(v);

        let old = out_degree[v] + usize::from(v != 1);
        out_degree[v] += 1;
        if hist.len() <= old + 1 {
            hist.resize(old + 2, 0);
        }
        hist[old] -= 1;
        hist[old + 1] += 1;
        hist[1] += 1;

        let size = m + 1;
        if let (Some(counts), Some(conv)) = (leaf_counts.as_mut(), record.leaves) {
            let root_leaf = out_degree[1] == 1;
            let leaves = match conv {
                LeafConvention::IncludeRoot => hist[1],
                LeafConvention::ExcludeRoot => hist[1] - u64::from(root_leaf),
            };
            counts.push(leaves);
        }
        if next_checkpoint.peek() == Some(&size) {
            snapshots.push((size, DegreeHistogram::from_counts(hist.clone())));
            next_checkpoint.next();
        }
    }

    Ok(GrowingTree {
        parent: sampler.into_parents(),
        out_degree,
        leaves: leaf_counts
            .zip(record.leaves)
            .map(|(c, conv)| LeafTrajectory::from_counts_unchecked(c, conv)),
        snapshots,
    })
}

pub fn degree_histogram(tree: &GrowingTree) -> DegreeHistogram {
    let mut counts = vec![0u64; 2];
    for v in 1..=tree.n() {
        let d = tree.total_degree(v);
        if counts.len() <= d {
            counts.resize(d + 1, 0);
        }
        counts[d] += 1;
    }
    DegreeHistogram::from_counts(counts)
}

/// The `k` largest total degrees, non-increasing.
pub fn top_k_degrees(tree: &GrowingTree, k: usize) -> Result<Vec<usize>> {
    let n = tree.n();
    if k == 0 || k > n {
        return Err(Error::KTooLarge { k, n });
    }
    let mut degrees: Vec<usize> = (1..=n).map(|v| tree.total_degree(v)).collect();
    degrees.select_nth_unstable_by(k - 1, |a, b| b.cmp(a));
    degrees.truncate(k);
    degrees.sort_unstable_by(|a, b| b.cmp(a));
    Ok(degrees)
}
