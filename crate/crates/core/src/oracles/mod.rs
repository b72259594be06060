//! Resampling oracles for the variable model, permutations, perfect matchings
//! of K_{2n} and spanning trees of K_n.

mod matching;
mod permutation;
mod tree;
mod variable;

pub use matching::{
    all_perfect_matchings, matching_resample, MatchingDependency, MatchingSpace, PerfectMatching,
};
pub use permutation::{all_permutations, permutation_resample, PatternEvent, Permutation, PermutationSpace};
pub use tree::{
    all_spanning_trees, forest_containment_probability, tree_resample, uniform_spanning_tree, Multigraph,
    SpanningTree, TreeSpace,
};
pub use variable::{variable_resample, Marginal, VariableEvent, VariableSpace};

use thiserror::Error;

/// Edge `(u, v)` of a complete graph, stored with `u < v`.
pub type Edge = (usize, usize);

pub fn normalize_edge(u: usize, v: usize) -> Edge {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// An edge-set event E_A: occurs iff every edge of `A` is in the structure.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeSetEvent {
    edges: Vec<Edge>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("edge set is not a matching")]
    NotAMatching,
    #[error("edge set contains a cycle")]
    NotAForest,
    #[error("pattern repeats domain or range value")]
    BadPattern,
    #[error("not a bijection")]
    NotAPermutation,
    #[error("odd vertex count {0}")]
    OddVertexCount(usize),
    #[error("edges do not form a spanning tree")]
    NotASpanningTree,
    #[error("graph is disconnected")]
    Disconnected,
}

impl EdgeSetEvent {
    pub fn new(edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, StructureError> {
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|(u, v)| if u == v { Err(StructureError::SelfLoop(u, v)) } else { Ok(normalize_edge(u, v)) })
            .collect::<Result<_, _>>()?;
        edges.sort_unstable();
        edges.dedup();
        Ok(Self { edges })
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// V(A), sorted.
    pub fn vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn shares_vertex(&self, other: &Self) -> bool {
        let mine = self.vertices();
        other.edges.iter().any(|&(a, b)| mine.binary_search(&a).is_ok() || mine.binary_search(&b).is_ok())
    }

    pub fn is_matching(&self) -> bool {
        let v = self.vertices();
        v.len() == 2 * self.edges.len()
    }
}
