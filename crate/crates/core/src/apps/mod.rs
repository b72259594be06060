//! Latin transversals, rainbow perfect matchings and rainbow spanning trees.
//!
//! Every application has the same event shape. Type-1 events say that two
//! same-colored items (cells or edges) both lie in structure `i`. Type-2
//! events say that one item lies in two structures `i < j`. Type-1 events come
//! first; both families are lexicographic. Two events are adjacent iff they
//! share a structure and their items share a vertex. For Latin squares, rows
//! and columns are distinct vertices.

mod latin;
mod matching;
mod table;
mod trees;

pub use latin::{build_latin_instance, validate_latin, ColorMatrix, LatinInstance};
pub use matching::{build_rainbow_matching_instance, validate_rainbow_matching, RainbowMatchingInstance};
pub use table::{AppEvent, EventTable};
pub use trees::{build_rainbow_tree_instance, validate_rainbow_trees, RainbowTreeInstance};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{run_seeded, EngineError, OracleBundle, RunConfig, RunLog};
use crate::polynomials::{predicted_bound, CriterionParams};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AppError {
    #[error("expected {expected} colors, got {got}")]
    ColorCount { expected: usize, got: usize },
    #[error("matrix is not square")]
    NotSquare,
    #[error("invalid size: {0}")]
    BadSize(String),
}

/// Multiplicity-capped coloring of `items` items: a random equipartition into
/// classes of size `cap` (the last class may be smaller).
pub fn random_capped_coloring<R: Rng + ?Sized>(items: usize, cap: usize, rng: &mut R) -> Vec<u32> {
    assert!(cap > 0, "cap must be positive");
    let mut order: Vec<usize> = (0..items).collect();
    order.shuffle(rng);
    let mut colors = vec![0u32; items];
    for (pos, item) in order.into_iter().enumerate() {
        colors[item] = (pos / cap) as u32;
    }
    colors
}

/// Largest number of items sharing one color.
pub fn max_multiplicity(colors: &[u32]) -> usize {
    let mut counts = std::collections::HashMap::new();
    for &c in colors {
        *counts.entry(c).or_insert(0usize) += 1;
    }
    counts.values().copied().max().unwrap_or(0)
}

/// An edge coloring of K_n; `colors[edge_id(u, v)]` for `u < v`, lexicographic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoredCompleteGraph {
    pub n: usize,
    pub colors: Vec<u32>,
}

pub fn edge_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Lexicographic index of `{u, v}` among the edges of K_n.
pub fn edge_id(n: usize, u: usize, v: usize) -> usize {
    let (u, v) = if u < v { (u, v) } else { (v, u) };
    u * (2 * n - u - 1) / 2 + (v - u - 1)
}

/// All edges of K_n in `edge_id` order.
pub fn edge_list(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
}

impl ColoredCompleteGraph {
    pub fn new(n: usize, colors: Vec<u32>) -> Result<Self, AppError> {
        if colors.len() != edge_count(n) {
            return Err(AppError::ColorCount { expected: edge_count(n), got: colors.len() });
        }
        Ok(Self { n, colors })
    }

    pub fn random_capped<R: Rng + ?Sized>(n: usize, cap: usize, rng: &mut R) -> Self {
        Self { n, colors: random_capped_coloring(edge_count(n), cap, rng) }
    }

    /// Every edge its own color.
    pub fn rainbow(n: usize) -> Self {
        Self { n, colors: (0..edge_count(n) as u32).collect() }
    }

    /// Round-robin 1-factorization of K_n for even `n`: `n − 1` colors, each a
    /// perfect matching.
    pub fn round_robin(n: usize) -> Result<Self, AppError> {
        if n < 2 || n % 2 == 1 {
            return Err(AppError::BadSize(format!("round robin needs an even n ≥ 2, got {n}")));
        }
        let m = n - 1;
        let mut colors = vec![0u32; edge_count(n)];
        for r in 0..m {
            colors[edge_id(n, r, m)] = r as u32;
            for k in 1..n / 2 {
                let a = (r + k) % m;
                let b = (r + m - k) % m;
                colors[edge_id(n, a, b)] = r as u32;
            }
        }
        Ok(Self { n, colors })
    }

    pub fn color(&self, u: usize, v: usize) -> u32 {
        self.colors[edge_id(self.n, u, v)]
    }

    pub fn max_color_multiplicity(&self) -> usize {
        max_multiplicity(&self.colors)
    }
}

/// Outcome of one solver run with independent validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub application: String,
    pub n: usize,
    pub count: usize,
    pub max_multiplicity: usize,
    pub events: usize,
    pub seed: u64,
    pub terminated: bool,
    pub valid: bool,
    pub validation_error: Option<String>,
    pub resamples: u64,
    pub iterations: usize,
    /// Whether every event passes the clique-cover cluster-expansion check.
    pub cll_holds: bool,
    pub tail: f64,
    pub predicted_bound: f64,
    pub within_bound: bool,
    pub solution: serde_json::Value,
    pub log: RunLog,
}

/// Shared behavior of the three application bundles.
pub trait Application: OracleBundle {
    fn name(&self) -> &'static str;

    /// Side length or vertex count of the instance.
    fn size(&self) -> usize;

    /// Number of structures sought.
    fn count(&self) -> usize;

    fn max_multiplicity(&self) -> usize;

    fn table(&self) -> &EventTable;

    /// Exact Pr[E] for event `e`.
    fn event_probability(&self, e: usize) -> f64;

    /// The common upper bound `p` on all event probabilities.
    fn p_bound(&self) -> f64;

    /// The cluster-expansion weight `y` assigned to every event.
    fn y(&self) -> f64;

    /// Checks the solution from raw structures, without event predicates.
    fn validate(&self, state: &Self::State) -> Result<(), String>;

    fn solution_json(&self, state: &Self::State) -> serde_json::Value;

    fn criterion_params(&self) -> CriterionParams {
        CriterionParams::cll(vec![self.y(); self.num_events()], 0.0)
    }

    /// Pr[E] · ∏_cliques (1 + Σ y) ≤ y for every event, the product bounding Y_{Γ⁺(E)}.
    fn cll_holds(&self) -> bool {
        let y = self.y();
        (0..self.num_events()).all(|e| self.event_probability(e) * self.table().clique_bound(e, y) <= y)
    }

    /// Resample threshold exceeded with probability at most e^{−tail}.
    fn predicted_bound(&self, tail: f64) -> f64 {
        predicted_bound(&self.criterion_params(), None, tail).expect("CLL parameters are complete")
    }
}

/// Runs the engine and validates the result independently.
pub fn solve<A: Application>(app: &A, seed: u64, budget: u64, tail: f64) -> Result<SolutionReport, EngineError> {
    let out = run_seeded(app, seed, RunConfig::with_budget(budget))?;
    let validation = if out.log.terminated { app.validate(&out.state) } else { Err("budget exhausted".into()) };
    let bound = app.predicted_bound(tail);
    Ok(SolutionReport {
        application: app.name().into(),
        n: app.size(),
        count: app.count(),
        max_multiplicity: app.max_multiplicity(),
        events: app.num_events(),
        seed,
        terminated: out.log.terminated,
        valid: validation.is_ok(),
        validation_error: validation.err(),
        resamples: out.log.total_resamples,
        iterations: out.log.iteration_count(),
        cll_holds: app.cll_holds(),
        tail,
        predicted_bound: bound,
        within_bound: out.log.total_resamples as f64 <= bound,
        solution: app.solution_json(&out.state),
        log: out.log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::seeded_rng;

    #[test]
    fn edge_ids_are_lexicographic() {
        for n in 1..9 {
            for (k, (u, v)) in edge_list(n).into_iter().enumerate() {
                assert_eq!(edge_id(n, u, v), k);
                assert_eq!(edge_id(n, v, u), k);
            }
        }
    }

    #[test]
    fn capped_coloring_respects_cap() {
        let mut rng = seeded_rng(1);
        let c = random_capped_coloring(1000, 13, &mut rng);
        assert_eq!(max_multiplicity(&c), 13);
    }

    #[test]
    fn round_robin_is_proper() {
        for n in [2usize, 4, 6, 10] {
            let g = ColoredCompleteGraph::round_robin(n).unwrap();
            for color in 0..(n - 1) as u32 {
                let mut seen = vec![0; n];
                for (u, v) in edge_list(n) {
                    if g.color(u, v) == color {
                        seen[u] += 1;
                        seen[v] += 1;
                    }
                }
                assert!(seen.iter().all(|&s| s == 1), "n={n} color={color}");
            }
        }
        assert!(ColoredCompleteGraph::round_robin(5).is_err());
    }
}
