//! Uniform spanning trees of K_n with edge-set events, and Wilson's
//! algorithm on multigraphs.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{normalize_edge, Edge, EdgeSetEvent, StructureError};
use crate::engine::OracleError;
use crate::space::ResampleSpace;

/// A spanning tree of K_n; edges normalized and sorted. JSON form is the edge list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Edge>", into = "Vec<Edge>")]
pub struct SpanningTree {
    n: usize,
    edges: Vec<Edge>,
}

impl SpanningTree {
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self, StructureError> {
        let mut edges: Vec<Edge> = edges.into_iter().map(|(u, v)| normalize_edge(u, v)).collect();
        edges.sort_unstable();
        let tree = Self { n, edges };
        if tree.is_spanning_tree() {
            Ok(tree)
        } else {
            Err(StructureError::NotASpanningTree)
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn contains(&self, e: Edge) -> bool {
        self.edges.binary_search(&normalize_edge(e.0, e.1)).is_ok()
    }

    pub fn is_spanning_tree(&self) -> bool {
        if self.n == 0 || self.edges.len() + 1 != self.n {
            return false;
        }
        let mut uf = UnionFind::new(self.n);
        self.edges.iter().all(|&(u, v)| u != v && v < self.n && uf.union(u, v))
    }
}

impl TryFrom<Vec<Edge>> for SpanningTree {
    type Error = StructureError;
    fn try_from(edges: Vec<Edge>) -> Result<Self, Self::Error> {
        Self::new(edges.len() + 1, edges)
    }
}

impl From<SpanningTree> for Vec<Edge> {
    fn from(t: SpanningTree) -> Self {
        t.edges
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// False if already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }
}

/// Undirected multigraph; each entry `(u, v, m)` stands for `m` parallel edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multigraph {
    pub n: usize,
    pub edges: Vec<(usize, usize, u64)>,
}

impl Multigraph {
    pub fn new(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    /// Loops and zero multiplicities are dropped.
    pub fn add_edge(&mut self, u: usize, v: usize, multiplicity: u64) -> &mut Self {
        if u != v && multiplicity > 0 {
            self.edges.push((u, v, multiplicity));
        }
        self
    }

    pub fn is_connected(&self) -> bool {
        let mut uf = UnionFind::new(self.n);
        let mut parts = self.n;
        for &(u, v, _) in &self.edges {
            if uf.union(u, v) {
                parts -= 1;
            }
        }
        parts <= 1
    }
}

/// Wilson's loop-erased walk rooted at vertex 0. Returns indices into
/// `g.edges`, sorted; a tree is drawn with probability proportional to the
/// product of its multiplicities.
pub fn uniform_spanning_tree<R: Rng + ?Sized>(g: &Multigraph, rng: &mut R) -> Result<Vec<usize>, StructureError> {
    for &(u, v, _) in &g.edges {
        for w in [u, v] {
            if w >= g.n {
                return Err(StructureError::VertexOutOfRange { vertex: w, n: g.n });
            }
        }
    }
    if !g.is_connected() {
        return Err(StructureError::Disconnected);
    }
    if g.n <= 1 {
        return Ok(Vec::new());
    }
    let mut incident: Vec<Vec<(usize, usize, u64)>> = vec![Vec::new(); g.n];
    let mut total = vec![0u64; g.n];
    for (idx, &(u, v, m)) in g.edges.iter().enumerate() {
        incident[u].push((idx, v, m));
        incident[v].push((idx, u, m));
        total[u] += m;
        total[v] += m;
    }
    let mut in_tree = vec![false; g.n];
    in_tree[0] = true;
    let mut next: Vec<(usize, usize)> = vec![(usize::MAX, usize::MAX); g.n];
    let mut chosen = Vec::with_capacity(g.n - 1);
    for start in 0..g.n {
        let mut u = start;
        while !in_tree[u] {
            let mut r = rng.random_range(0..total[u]);
            let mut step = None;
            for &(idx, w, m) in &incident[u] {
                if r < m {
                    step = Some((idx, w));
                    break;
                }
                r -= m;
            }
            next[u] = step.expect("weights sum to total");
            u = next[u].1;
        }
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            chosen.push(next[u].0);
            u = next[u].1;
        }
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Keeps tree edges avoiding W = V(A), contracts them, and redraws the rest
/// as a uniform spanning tree of the contracted multigraph with F_1 deleted.
pub fn tree_resample<R: Rng + ?Sized>(t: &mut SpanningTree, a: &EdgeSetEvent, rng: &mut R) -> Result<(), OracleError> {
    if !a.edges().iter().all(|&e| t.contains(e)) {
        return Err(OracleError::EventNotSatisfied(0));
    }
    let n = t.n;
    let mut in_w = vec![false; n];
    for v in a.vertices() {
        in_w[v] = true;
    }
    let mut uf = UnionFind::new(n);
    let mut kept = Vec::new();
    for &(u, v) in &t.edges {
        if !in_w[u] && !in_w[v] {
            uf.union(u, v);
            kept.push((u, v));
        }
    }
    // super-nodes: each w in W, then each component of V∖W
    let mut node_of = vec![usize::MAX; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut w_nodes = Vec::new();
    for v in 0..n {
        if in_w[v] {
            node_of[v] = members.len();
            members.push(vec![v]);
            w_nodes.push(node_of[v]);
        }
    }
    let mut comp_nodes = Vec::new();
    for v in 0..n {
        if !in_w[v] {
            let r = uf.find(v);
            if node_of[r] == usize::MAX {
                node_of[r] = members.len();
                comp_nodes.push(members.len());
                members.push(Vec::new());
            }
            node_of[v] = node_of[r];
            members[node_of[r]].push(v);
        }
    }
    let mut g2 = Multigraph::new(members.len());
    for (i, &a_node) in w_nodes.iter().enumerate() {
        for &b_node in &w_nodes[i + 1..] {
            g2.add_edge(a_node, b_node, 1);
        }
        for &c in &comp_nodes {
            g2.add_edge(a_node, c, members[c].len() as u64);
        }
    }
    let picked = uniform_spanning_tree(&g2, rng).expect("contracted graph is connected");
    let mut edges = kept;
    for idx in picked {
        let (x, y, _) = g2.edges[idx];
        // x is always a W node
        let u = members[x][0];
        let group = &members[y];
        let v = if group.len() == 1 { group[0] } else { group[rng.random_range(0..group.len())] };
        edges.push(normalize_edge(u, v));
    }
    edges.sort_unstable();
    t.edges = edges;
    debug_assert!(t.is_spanning_tree());
    Ok(())
}

/// Decodes a Prüfer sequence over `[n]`, `n ≥ 2`.
fn prufer_decode(n: usize, seq: &[usize]) -> Vec<Edge> {
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut leaves: BinaryHeap<Reverse<usize>> = (0..n).filter(|&v| degree[v] == 1).map(Reverse).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let Reverse(leaf) = leaves.pop().expect("a leaf remains");
        edges.push(normalize_edge(leaf, s));
        degree[s] -= 1;
        if degree[s] == 1 {
            leaves.push(Reverse(s));
        }
    }
    let Reverse(a) = leaves.pop().expect("two leaves remain");
    let Reverse(b) = leaves.pop().expect("two leaves remain");
    edges.push(normalize_edge(a, b));
    edges.sort_unstable();
    edges
}

/// Uniform measure on spanning trees of K_n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeSpace {
    pub n: usize,
}

impl TreeSpace {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "K_n needs at least one vertex");
        Self { n }
    }
}

impl ResampleSpace for TreeSpace {
    type State = SpanningTree;
    type Event = EdgeSetEvent;

    /// Uniform Prüfer sequence.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SpanningTree {
        let n = self.n;
        if n == 1 {
            return SpanningTree { n, edges: Vec::new() };
        }
        let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
        SpanningTree { n, edges: prufer_decode(n, &seq) }
    }

    fn holds(&self, event: &EdgeSetEvent, state: &SpanningTree) -> bool {
        event.edges().iter().all(|&e| state.contains(e))
    }

    fn resample<R: Rng + ?Sized>(
        &self,
        event: &EdgeSetEvent,
        state: &mut SpanningTree,
        rng: &mut R,
    ) -> Result<(), OracleError> {
        tree_resample(state, event, rng)
    }

    fn conflicts(&self, a: &EdgeSetEvent, b: &EdgeSetEvent) -> bool {
        a == b || a.shares_vertex(b)
    }
}

/// All n^{n−2} spanning trees of K_n, in Prüfer order.
pub fn all_spanning_trees(n: usize) -> Vec<SpanningTree> {
    if n <= 1 {
        return vec![SpanningTree { n: n.max(1), edges: Vec::new() }];
    }
    let len = n - 2;
    let total = n.pow(len as u32);
    (0..total)
        .map(|mut code| {
            let seq: Vec<usize> = (0..len)
                .map(|_| {
                    let d = code % n;
                    code /= n;
                    d
                })
                .collect();
            SpanningTree { n, edges: prufer_decode(n, &seq) }
        })
        .collect()
}

/// `Pr[F ⊆ T] = ∏ f_i / n^{f_i − 1}` over the components of the forest `F`;
/// zero if `F` has a cycle.
pub fn forest_containment_probability(n: usize, forest: &[Edge]) -> f64 {
    let mut uf = UnionFind::new(n);
    for &(u, v) in forest {
        if !uf.union(u, v) {
            return 0.0;
        }
    }
    let mut p = 1.0;
    for v in 0..n {
        if uf.find(v) == v {
            let f = uf.size[v] as f64;
            p *= f / (n as f64).powf(f - 1.0);
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::seeded_rng;
    use proptest::prelude::*;
    use rand::Rng;

    /// Matrix-Tree theorem: weighted spanning tree count via the reduced Laplacian.
    fn matrix_tree(g: &Multigraph, drop: Option<usize>) -> f64 {
        let n = g.n;
        let mut lap = vec![vec![0.0f64; n]; n];
        for (i, &(u, v, m)) in g.edges.iter().enumerate() {
            if Some(i) == drop {
                continue;
            }
            let m = m as f64;
            lap[u][u] += m;
            lap[v][v] += m;
            lap[u][v] -= m;
            lap[v][u] -= m;
        }
        let mut a: Vec<Vec<f64>> = lap[1..].iter().map(|r| r[1..].to_vec()).collect();
        let k = a.len();
        let mut det = 1.0;
        for c in 0..k {
            let p = (c..k).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
            if a[p][c] == 0.0 {
                return 0.0;
            }
            if p != c {
                a.swap(p, c);
                det = -det;
            }
            det *= a[c][c];
            for r in c + 1..k {
                let f = a[r][c] / a[c][c];
                for j in c..k {
                    a[r][j] -= f * a[c][j];
                }
            }
        }
        det
    }

    #[test]
    fn cayley_counts() {
        assert_eq!(all_spanning_trees(1).len(), 1);
        assert_eq!(all_spanning_trees(2).len(), 1);
        assert_eq!(all_spanning_trees(4).len(), 16);
        let all5 = all_spanning_trees(5);
        assert_eq!(all5.len(), 125);
        let mut dedup = all5.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 125);
        assert!(all5.iter().all(|t| t.is_spanning_tree()));
    }

    #[test]
    fn single_vertex_gives_empty_tree() {
        let mut rng = seeded_rng(0);
        assert!(uniform_spanning_tree(&Multigraph::new(1), &mut rng).unwrap().is_empty());
    }

    #[test]
    fn disconnected_rejected() {
        let mut rng = seeded_rng(0);
        let mut g = Multigraph::new(3);
        g.add_edge(0, 1, 1);
        assert_eq!(uniform_spanning_tree(&g, &mut rng), Err(StructureError::Disconnected));
    }

    #[test]
    fn triangle_with_doubled_edge_matches_matrix_tree() {
        let mut g = Multigraph::new(3);
        g.add_edge(0, 1, 2).add_edge(1, 2, 1).add_edge(0, 2, 1);
        let total = matrix_tree(&g, None);
        assert_eq!(total, 5.0);
        // tree omitting edge i: weight = product of the other two multiplicities
        let expected: Vec<f64> = (0..3).map(|i| matrix_tree(&g, Some(i)) / total).collect();
        assert_eq!(expected, vec![0.2, 0.4, 0.4]);
        let mut rng = seeded_rng(21);
        let trials = 1_000_000;
        let mut counts = [0usize; 3];
        for _ in 0..trials {
            let t = uniform_spanning_tree(&g, &mut rng).unwrap();
            let missing = (0..3).find(|i| !t.contains(i)).unwrap();
            counts[missing] += 1;
        }
        for i in 0..3 {
            let sd = (trials as f64 * expected[i] * (1.0 - expected[i])).sqrt();
            assert!((counts[i] as f64 - trials as f64 * expected[i]).abs() < 4.0 * sd, "{counts:?}");
        }
    }

    fn tally_uniform(samples: impl Iterator<Item = SpanningTree>, n: usize, trials: usize) {
        let all = all_spanning_trees(n);
        let mut counts = vec![0usize; all.len()];
        for t in samples.take(trials) {
            counts[all.iter().position(|x| *x == t).unwrap()] += 1;
        }
        let p = 1.0 / all.len() as f64;
        let sd = (trials as f64 * p * (1.0 - p)).sqrt();
        for c in &counts {
            assert!((*c as f64 - trials as f64 * p).abs() < 4.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn wilson_on_k4_is_uniform() {
        let mut g = Multigraph::new(4);
        for u in 0..4 {
            for v in u + 1..4 {
                g.add_edge(u, v, 1);
            }
        }
        let mut rng = seeded_rng(8);
        let trials = 400_000;
        let samples = std::iter::repeat_with(|| {
            let idx = uniform_spanning_tree(&g, &mut rng).unwrap();
            SpanningTree::new(4, idx.iter().map(|&i| (g.edges[i].0, g.edges[i].1))).unwrap()
        });
        tally_uniform(samples, 4, trials);
    }

    #[test]
    fn k4_single_edge_resample_uniform() {
        let a = EdgeSetEvent::new([(0, 1)]).unwrap();
        let cond: Vec<SpanningTree> = all_spanning_trees(4).into_iter().filter(|t| t.contains((0, 1))).collect();
        assert_eq!(cond.len(), 8);
        let mut rng = seeded_rng(31);
        let trials = 1_000_000;
        let samples = std::iter::repeat_with(|| {
            let mut t = cond[rng.random_range(0..cond.len())].clone();
            tree_resample(&mut t, &a, &mut rng).unwrap();
            t
        });
        tally_uniform(samples, 4, trials);
    }

    #[test]
    fn k5_path_resample_uniform() {
        let a = EdgeSetEvent::new([(0, 1), (1, 2)]).unwrap();
        let cond: Vec<SpanningTree> = all_spanning_trees(5).into_iter().filter(|t| t.contains((0, 1)) && t.contains((1, 2))).collect();
        let mut rng = seeded_rng(32);
        let samples = std::iter::repeat_with(|| {
            let mut t = cond[rng.random_range(0..cond.len())].clone();
            tree_resample(&mut t, &a, &mut rng).unwrap();
            t
        });
        tally_uniform(samples, 5, 500_000);
    }

    #[test]
    fn edge_marginal_and_forest_containment() {
        for n in [4usize, 5] {
            let all = all_spanning_trees(n);
            let count = all.len() as f64;
            let with_e = all.iter().filter(|t| t.contains((0, 1))).count() as f64;
            assert!((with_e / count - 2.0 / n as f64).abs() < 1e-12);
            for forest in [vec![(0, 1)], vec![(0, 1), (1, 2)], vec![(0, 1), (2, 3)], vec![(0, 1), (1, 2), (2, 3)]] {
                let hit = all.iter().filter(|t| forest.iter().all(|&e| t.contains(e))).count() as f64;
                assert!((hit / count - forest_containment_probability(n, &forest)).abs() < 1e-12, "{n} {forest:?}");
            }
        }
        assert_eq!(forest_containment_probability(4, &[(0, 1), (1, 2), (0, 2)]), 0.0);
    }

    #[test]
    fn new_edges_touch_resampled_vertices() {
        let space = TreeSpace::new(9);
        let mut rng = seeded_rng(4);
        for _ in 0..20_000 {
            let mut t = space.sample(&mut rng);
            let before = t.clone();
            let k = rng.random_range(1..=3);
            let a = EdgeSetEvent::new(before.edges()[..k].iter().copied()).unwrap();
            let verts = a.vertices();
            tree_resample(&mut t, &a, &mut rng).unwrap();
            for &e in t.edges() {
                if !before.contains(e) {
                    assert!(verts.contains(&e.0) || verts.contains(&e.1));
                }
            }
        }
    }

    #[test]
    fn json_is_edge_list() {
        let t = SpanningTree::new(3, [(1, 0), (1, 2)]).unwrap();
        assert_eq!(serde_json::to_string(&t).unwrap(), "[[0,1],[1,2]]");
        assert!(serde_json::from_str::<SpanningTree>("[[0,1],[0,1]]").is_err());
    }

    proptest! {
        #[test]
        fn resample_output_is_tree(seed in any::<u64>(), n in 2usize..14, k in 1usize..5) {
            let space = TreeSpace::new(n);
            let mut rng = seeded_rng(seed);
            let mut t = space.sample(&mut rng);
            prop_assert!(t.is_spanning_tree());
            let a = EdgeSetEvent::new(t.edges()[..k.min(n - 1)].iter().copied()).unwrap();
            tree_resample(&mut t, &a, &mut rng).unwrap();
            prop_assert!(t.is_spanning_tree());
        }
    }
}
