use rand::Rng;

use super::latin::push_color_pairs;
use super::table::{AppEvent, EventTable};
use super::{edge_id, edge_list, AppError, Application, ColoredCompleteGraph};
use crate::engine::{OracleBundle, OracleError};
use crate::oracles::{tree_resample, EdgeSetEvent, SpanningTree, TreeSpace};
use crate::space::ResampleSpace;

/// `t` uniform spanning trees of an edge-colored K_n; bad events are two
/// same-colored edges in one tree and one edge shared by two trees.
#[derive(Debug, Clone)]
pub struct RainbowTreeInstance {
    graph: ColoredCompleteGraph,
    t: usize,
    edges: Vec<(usize, usize)>,
    table: EventTable,
}

pub fn build_rainbow_tree_instance(graph: ColoredCompleteGraph, t: usize) -> Result<RainbowTreeInstance, AppError> {
    let n = graph.n;
    if n < 2 {
        return Err(AppError::BadSize(format!("need at least 2 vertices, got {n}")));
    }
    let edges = edge_list(n);
    let iv = edges.iter().map(|&(u, v)| [u as u32, v as u32]).collect();
    let table = EventTable::new(t, n, iv, &graph.colors, |_, _| true);
    Ok(RainbowTreeInstance { graph, t, edges, table })
}

impl RainbowTreeInstance {
    pub fn graph(&self) -> &ColoredCompleteGraph {
        &self.graph
    }

    fn edge_event(&self, items: &[usize]) -> Result<EdgeSetEvent, OracleError> {
        EdgeSetEvent::new(items.iter().map(|&i| self.edges[i])).map_err(|e| OracleError::Other(e.to_string()))
    }
}

impl OracleBundle for RainbowTreeInstance {
    type State = Vec<SpanningTree>;

    fn num_events(&self) -> usize {
        self.table.len()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<SpanningTree> {
        let space = TreeSpace::new(self.graph.n);
        (0..self.t).map(|_| space.sample(rng)).collect()
    }

    fn holds(&self, e: usize, s: &Vec<SpanningTree>) -> bool {
        match self.table.decode(e) {
            AppEvent::Pair { structure, a, b } => s[structure].contains(self.edges[a]) && s[structure].contains(self.edges[b]),
            AppEvent::Shared { i, j, item } => s[i].contains(self.edges[item]) && s[j].contains(self.edges[item]),
        }
    }

    fn resample<R: Rng + ?Sized>(&self, e: usize, s: &mut Vec<SpanningTree>, rng: &mut R) -> Result<(), OracleError> {
        if e >= self.num_events() {
            return Err(OracleError::UnknownEvent { index: e, n: self.num_events() });
        }
        if !self.holds(e, s) {
            return Err(OracleError::EventNotSatisfied(e));
        }
        match self.table.decode(e) {
            AppEvent::Pair { structure, a, b } => tree_resample(&mut s[structure], &self.edge_event(&[a, b])?, rng),
            AppEvent::Shared { i, j, item } => {
                let event = self.edge_event(&[item])?;
                tree_resample(&mut s[i], &event, rng)?;
                tree_resample(&mut s[j], &event, rng)
            }
        }
    }

    fn adjacent(&self, a: usize, b: usize) -> bool {
        self.table.adjacent(a, b)
    }

    fn occurring(&self, s: &Vec<SpanningTree>) -> Vec<usize> {
        let n = self.graph.n;
        let ids: Vec<Vec<usize>> = s.iter().map(|t| t.edges().iter().map(|&(u, v)| edge_id(n, u, v)).collect()).collect();
        let mut out = Vec::new();
        for (i, tree) in ids.iter().enumerate() {
            let mut by_color: Vec<(u32, usize)> = tree.iter().map(|&id| (self.graph.colors[id], id)).collect();
            by_color.sort_unstable();
            push_color_pairs(&by_color, |a, b| self.table.pair_index(i, a, b), &mut out);
        }
        // Sorted edges map to increasing ids, so a merge finds common edges.
        for i in 0..self.t {
            for j in i + 1..self.t {
                let (x, y) = (&ids[i], &ids[j]);
                let (mut p, mut q) = (0, 0);
                while p < x.len() && q < y.len() {
                    match x[p].cmp(&y[q]) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            out.push(self.table.shared_index(i, j, x[p]));
                            p += 1;
                            q += 1;
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

impl Application for RainbowTreeInstance {
    fn name(&self) -> &'static str {
        "rainbow-tree"
    }

    fn size(&self) -> usize {
        self.graph.n
    }

    fn count(&self) -> usize {
        self.t
    }

    fn max_multiplicity(&self) -> usize {
        self.graph.max_color_multiplicity()
    }

    fn table(&self) -> &EventTable {
        &self.table
    }

    /// A forest with component sizes f_k lies in a uniform tree with
    /// probability ∏ f_k / n^{f_k − 1}: 3/n² for a path of two edges, 4/n² for
    /// two disjoint edges; a shared edge costs (2/n)².
    fn event_probability(&self, e: usize) -> f64 {
        let n2 = (self.graph.n * self.graph.n) as f64;
        match self.table.decode(e) {
            AppEvent::Pair { a, b, .. } => {
                let (e, f) = (self.edges[a], self.edges[b]);
                let touching = e.0 == f.0 || e.0 == f.1 || e.1 == f.0 || e.1 == f.1;
                if touching {
                    3.0 / n2
                } else {
                    4.0 / n2
                }
            }
            AppEvent::Shared { .. } => 4.0 / n2,
        }
    }

    fn p_bound(&self) -> f64 {
        4.0 / (self.graph.n * self.graph.n) as f64
    }

    fn y(&self) -> f64 {
        (8.0f64 / 7.0).powi(8) * self.p_bound()
    }

    fn validate(&self, s: &Vec<SpanningTree>) -> Result<(), String> {
        validate_rainbow_trees(&self.graph, s)
    }

    fn solution_json(&self, s: &Vec<SpanningTree>) -> serde_json::Value {
        serde_json::to_value(s).expect("trees serialize")
    }
}

/// Each tree spans K_n with distinct colors, and the trees are edge-disjoint.
pub fn validate_rainbow_trees(graph: &ColoredCompleteGraph, trees: &[SpanningTree]) -> Result<(), String> {
    let mut used = std::collections::HashSet::new();
    for (i, t) in trees.iter().enumerate() {
        if t.n() != graph.n || !t.is_spanning_tree() {
            return Err(format!("tree {i} does not span K_{}", graph.n));
        }
        let mut colors: Vec<u32> = t.edges().iter().map(|&(u, v)| graph.color(u, v)).collect();
        colors.sort_unstable();
        if colors.windows(2).any(|w| w[0] == w[1]) {
            return Err(format!("tree {i} repeats a color"));
        }
        for &e in t.edges() {
            if !used.insert(e) {
                return Err(format!("edge {e:?} appears in two trees"));
            }
        }
    }
    Ok(())
}
