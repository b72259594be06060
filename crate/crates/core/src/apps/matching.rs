use rand::Rng;

use super::latin::push_color_pairs;
use super::table::{AppEvent, EventTable};
use super::{edge_id, edge_list, AppError, Application, ColoredCompleteGraph};
use crate::engine::{OracleBundle, OracleError};
use crate::oracles::{matching_resample, EdgeSetEvent, MatchingSpace, PerfectMatching};
use crate::space::ResampleSpace;

/// A uniform perfect matching of an edge-colored K_{2n}; bad events are two
/// same-colored disjoint edges both in the matching.
#[derive(Debug, Clone)]
pub struct RainbowMatchingInstance {
    graph: ColoredCompleteGraph,
    space: MatchingSpace,
    edges: Vec<(usize, usize)>,
    table: EventTable,
}

pub fn build_rainbow_matching_instance(graph: ColoredCompleteGraph) -> Result<RainbowMatchingInstance, AppError> {
    let n = graph.n;
    let space = MatchingSpace::new(n).map_err(|e| AppError::BadSize(e.to_string()))?;
    if n < 4 {
        return Err(AppError::BadSize(format!("need at least 4 vertices, got {n}")));
    }
    let edges = edge_list(n);
    let iv = edges.iter().map(|&(u, v)| [u as u32, v as u32]).collect();
    let table = EventTable::new(1, n, iv, &graph.colors, |a, b| {
        let (e, f) = (edges[a], edges[b]);
        e.0 != f.0 && e.0 != f.1 && e.1 != f.0 && e.1 != f.1
    });
    Ok(RainbowMatchingInstance { graph, space, edges, table })
}

impl RainbowMatchingInstance {
    pub fn graph(&self) -> &ColoredCompleteGraph {
        &self.graph
    }

    fn pair(&self, e: usize) -> ((usize, usize), (usize, usize)) {
        match self.table.decode(e) {
            AppEvent::Pair { a, b, .. } => (self.edges[a], self.edges[b]),
            AppEvent::Shared { .. } => unreachable!("one structure has no shared events"),
        }
    }
}

impl OracleBundle for RainbowMatchingInstance {
    type State = PerfectMatching;

    fn num_events(&self) -> usize {
        self.table.len()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PerfectMatching {
        self.space.sample(rng)
    }

    fn holds(&self, e: usize, m: &PerfectMatching) -> bool {
        let (a, b) = self.pair(e);
        m.contains(a) && m.contains(b)
    }

    fn resample<R: Rng + ?Sized>(&self, e: usize, m: &mut PerfectMatching, rng: &mut R) -> Result<(), OracleError> {
        if e >= self.num_events() {
            return Err(OracleError::UnknownEvent { index: e, n: self.num_events() });
        }
        if !self.holds(e, m) {
            return Err(OracleError::EventNotSatisfied(e));
        }
        let (a, b) = self.pair(e);
        let event = EdgeSetEvent::new([a, b]).map_err(|err| OracleError::Other(err.to_string()))?;
        matching_resample(m, &event, rng)
    }

    fn adjacent(&self, a: usize, b: usize) -> bool {
        self.table.adjacent(a, b)
    }

    fn occurring(&self, m: &PerfectMatching) -> Vec<usize> {
        let n = self.graph.n;
        let mut by_color: Vec<(u32, usize)> = m
            .edges()
            .into_iter()
            .map(|(u, v)| {
                let id = edge_id(n, u, v);
                (self.graph.colors[id], id)
            })
            .collect();
        by_color.sort_unstable();
        let mut out = Vec::new();
        push_color_pairs(&by_color, |a, b| self.table.pair_index(0, a, b), &mut out);
        out.sort_unstable();
        out
    }
}

impl Application for RainbowMatchingInstance {
    fn name(&self) -> &'static str {
        "rainbow-matching"
    }

    fn size(&self) -> usize {
        self.graph.n
    }

    fn count(&self) -> usize {
        1
    }

    fn max_multiplicity(&self) -> usize {
        self.graph.max_color_multiplicity()
    }

    fn table(&self) -> &EventTable {
        &self.table
    }

    fn event_probability(&self, _: usize) -> f64 {
        self.p_bound()
    }

    /// Two fixed disjoint edges lie in a uniform perfect matching of K_{2n}
    /// with probability 1/((2n−1)(2n−3)).
    fn p_bound(&self) -> f64 {
        let m = self.graph.n as f64;
        1.0 / ((m - 1.0) * (m - 3.0))
    }

    fn y(&self) -> f64 {
        (4.0f64 / 3.0).powi(4) * self.p_bound()
    }

    fn validate(&self, m: &PerfectMatching) -> Result<(), String> {
        validate_rainbow_matching(&self.graph, m)
    }

    fn solution_json(&self, m: &PerfectMatching) -> serde_json::Value {
        serde_json::to_value(m).expect("matching serializes")
    }
}

/// Perfect on all vertices, and no two edges share a color.
pub fn validate_rainbow_matching(graph: &ColoredCompleteGraph, m: &PerfectMatching) -> Result<(), String> {
    if m.vertex_count() != graph.n || !m.is_perfect() {
        return Err(format!("not a perfect matching of K_{}", graph.n));
    }
    let mut colors: Vec<u32> = m.edges().into_iter().map(|(u, v)| graph.color(u, v)).collect();
    colors.sort_unstable();
    if let Some(w) = colors.windows(2).find(|w| w[0] == w[1]) {
        return Err(format!("color {} appears twice", w[0]));
    }
    Ok(())
}
