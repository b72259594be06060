//! Dependency graphs on event indices, independent sets and stable set sequences.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Subsets of a small vertex set, bit `i` set iff vertex `i` is a member.
pub type Mask = u64;

/// Largest vertex count for which independent sets are enumerated by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 25;

/// Hard limit imposed by the `u64` mask representation.
pub const MAX_MASK_VERTICES: usize = 63;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {index} out of range for graph on {n} vertices")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("enumeration over {n} vertices exceeds the cap of {cap}")]
    CapExceeded { n: usize, cap: usize },
}

/// Undirected, irreflexive graph on `[n]`.
///
/// Adjacency lists are kept sorted and deduplicated. For graphs with at most
/// [`MAX_MASK_VERTICES`] vertices a bitmask copy of each closed neighborhood is
/// maintained as well, which is what the polynomial machinery works with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    n: usize,
    adj: Vec<Vec<usize>>,
    closed_masks: Option<Vec<Mask>>,
}

/// JSON form: `{"n": 3, "edges": [[0, 1], [1, 2]]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n: usize,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
}

impl DependencyGraph {
    pub fn empty(n: usize) -> Self {
        Self::from_edges(n, std::iter::empty()).expect("no edges")
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        Self::from_edges(n, edges).expect("valid edges")
    }

    pub fn path(n: usize) -> Self {
        Self::from_edges(n, (1..n).map(|i| (i - 1, i))).expect("valid edges")
    }

    pub fn cycle(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n > 2 {
            edges.push((n - 1, 0));
        }
        Self::from_edges(n, edges).expect("valid edges")
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adj = vec![Vec::new(); n];
        for (a, b) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(GraphError::IndexOutOfRange { index: v, n });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        let closed_masks = (n <= MAX_MASK_VERTICES).then(|| {
            adj.iter()
                .enumerate()
                .map(|(i, list)| list.iter().fold(1u64 << i, |m, &j| m | (1u64 << j)))
                .collect()
        });
        Ok(Self { n, adj, closed_masks })
    }

    /// Builds the graph induced by a symmetric adjacency predicate.
    pub fn from_predicate(n: usize, mut adjacent: impl FnMut(usize, usize) -> bool) -> Self {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if adjacent(i, j) {
                    edges.push((i, j));
                }
            }
        }
        Self::from_edges(n, edges).expect("predicate edges are in range")
    }

    pub fn from_spec(spec: &GraphSpec) -> Result<Self, GraphError> {
        Self::from_edges(spec.n, spec.edges.iter().map(|e| (e[0], e[1])))
    }

    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec { n: self.n, edges: self.edges().map(|(a, b)| [a, b]).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Open neighborhood Γ(i), sorted.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        a < self.n && self.adj[a].binary_search(&b).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    fn check(&self, i: usize) -> Result<(), GraphError> {
        if i < self.n {
            Ok(())
        } else {
            Err(GraphError::IndexOutOfRange { index: i, n: self.n })
        }
    }

    /// Γ⁺(I) = ∪_{i∈I} Γ(i) ∪ {i}, sorted.
    pub fn closed_neighborhood(&self, set: &[usize]) -> Result<Vec<usize>, GraphError> {
        let mut mark = vec![false; self.n];
        for &i in set {
            self.check(i)?;
            mark[i] = true;
            for &j in &self.adj[i] {
                mark[j] = true;
            }
        }
        Ok(mark.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect())
    }

    pub fn is_independent(&self, set: &[usize]) -> Result<bool, GraphError> {
        for &i in set {
            self.check(i)?;
        }
        for (k, &a) in set.iter().enumerate() {
            if set[k + 1..].iter().any(|&b| b == a || self.adjacent(a, b)) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Closed neighborhood masks, available when `n <= 63`.
    pub fn closed_masks(&self) -> Option<&[Mask]> {
        self.closed_masks.as_deref()
    }

    /// Mask of Γ⁺(set). Panics if the graph is too large for masks.
    pub fn closed_neighborhood_mask(&self, set: Mask) -> Mask {
        let masks = self.closed_masks.as_ref().expect("graph too large for masks");
        iter_bits(set).fold(0, |acc, i| acc | masks[i])
    }

    pub fn is_independent_mask(&self, set: Mask) -> bool {
        let masks = self.closed_masks.as_ref().expect("graph too large for masks");
        iter_bits(set).all(|i| masks[i] & set == 1u64 << i)
    }

    pub fn full_mask(&self) -> Mask {
        full_mask(self.n)
    }

    /// All independent sets (including ∅) in increasing bitmask order.
    pub fn enumerate_independent_sets(&self) -> Result<Vec<Vec<usize>>, GraphError> {
        self.enumerate_independent_sets_with_cap(DEFAULT_ENUMERATION_CAP)
    }

    pub fn enumerate_independent_sets_with_cap(
        &self,
        cap: usize,
    ) -> Result<Vec<Vec<usize>>, GraphError> {
        Ok(self
            .independent_masks_with_cap(cap)?
            .into_iter()
            .map(|m| iter_bits(m).collect())
            .collect())
    }

    pub fn independent_masks(&self) -> Result<Vec<Mask>, GraphError> {
        self.independent_masks_with_cap(DEFAULT_ENUMERATION_CAP)
    }

    /// Independent sets as masks, increasing. Uses the recursion
    /// `ind(S) = ind(S - a) && S ∩ Γ(a) = ∅` for `a` the lowest bit of `S`.
    pub fn independent_masks_with_cap(&self, cap: usize) -> Result<Vec<Mask>, GraphError> {
        let cap = cap.min(MAX_MASK_VERTICES);
        if self.n > cap {
            return Err(GraphError::CapExceeded { n: self.n, cap });
        }
        let masks = self.closed_masks.as_ref().expect("n within mask range");
        let total = 1usize << self.n;
        let mut ind = vec![false; total];
        ind[0] = true;
        let mut out = vec![0];
        for s in 1..total {
            let a = s.trailing_zeros() as usize;
            let rest = s & (s - 1);
            if ind[rest] && (masks[a] as usize & rest) == 0 {
                ind[s] = true;
                out.push(s as Mask);
            }
        }
        Ok(out)
    }

    /// Checks every invariant of a stable set sequence against this graph.
    pub fn validate_sequence(&self, seq: &StableSetSequence) -> bool {
        let mut seen_empty = false;
        let mut prev: Option<Vec<usize>> = None;
        for set in &seq.sets {
            if set.iter().any(|&i| i >= self.n) {
                return false;
            }
            if !self.is_independent(set).unwrap_or(false) {
                return false;
            }
            if seen_empty && !set.is_empty() {
                return false;
            }
            seen_empty |= set.is_empty();
            if let Some(prev) = &prev {
                let hood = self.closed_neighborhood(prev).expect("checked indices");
                if set.iter().any(|i| hood.binary_search(i).is_err()) {
                    return false;
                }
            }
            prev = Some(set.clone());
        }
        true
    }
}

/// Sequence I_1, I_2, ... of vertex sets.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StableSetSequence {
    pub sets: Vec<Vec<usize>>,
}

impl StableSetSequence {
    pub fn new(sets: Vec<Vec<usize>>) -> Self {
        Self { sets }
    }

    /// Proper sequences have every set nonempty.
    pub fn is_proper(&self) -> bool {
        self.sets.iter().all(|s| !s.is_empty())
    }

    /// σ(𝓘) = Σ |I_s|.
    pub fn total_size(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    /// p_𝓘 = ∏_s ∏_{i∈I_s} p_i.
    pub fn weight(&self, p: &[f64]) -> f64 {
        self.sets.iter().flatten().map(|&i| p[i]).product()
    }
}

pub fn full_mask(n: usize) -> Mask {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub fn mask_of(set: &[usize]) -> Mask {
    set.iter().fold(0, |m, &i| m | (1u64 << i))
}

/// Set bits of `mask` in increasing order.
pub fn iter_bits(mut mask: Mask) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let i = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(i)
        }
    })
}
