//! The MaximalSetResample algorithm over an abstract resampling-oracle interface.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DependencyGraph, StableSetSequence};

/// Default cap on resampling-oracle calls per run.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// The generator every seeded run uses.
pub type RunRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> RunRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    /// The oracle was invoked on a state where its event does not occur.
    #[error("event {0} does not hold in the current state")]
    EventNotSatisfied(usize),
    #[error("event index {index} out of range ({n} events)")]
    UnknownEvent { index: usize, n: usize },
    #[error("oracle failure: {0}")]
    Other(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("resample budget must be positive")]
    ZeroBudget,
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// A probability space with events, their resampling oracles and the
/// dependency graph the oracles respect.
///
/// Implementations must be shareable across threads for concurrent runs; all
/// per-run mutation lives in `State`.
pub trait OracleBundle: Sync {
    type State: Clone;

    fn num_events(&self) -> usize;

    /// Draws a state from μ.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    fn holds(&self, event: usize, state: &Self::State) -> bool;

    /// Applies the resampling oracle r_event in place. The state must satisfy
    /// the event.
    fn resample<R: Rng + ?Sized>(
        &self,
        event: usize,
        state: &mut Self::State,
        rng: &mut R,
    ) -> Result<(), OracleError>;

    /// Symmetric, irreflexive dependency relation.
    fn adjacent(&self, a: usize, b: usize) -> bool;

    /// Events occurring in `state`, ascending.
    fn occurring(&self, state: &Self::State) -> Vec<usize> {
        (0..self.num_events()).filter(|&i| self.holds(i, state)).collect()
    }

    /// Materializes the dependency graph. Quadratic in the event count.
    fn dependency_graph(&self) -> DependencyGraph {
        DependencyGraph::from_predicate(self.num_events(), |a, b| self.adjacent(a, b))
    }
}

/// How each iteration locates the next event to resample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScanMode {
    /// Walks the events occurring at the start of the iteration in ascending
    /// order. Exact whenever the oracles satisfy (R2): an unblocked event
    /// that did not occur cannot start occurring within the iteration.
    #[default]
    Incremental,
    /// Rescans every event from index 0 after each resampling. Literal form
    /// of the greedy loop; does not depend on (R2).
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub max_resamples: u64,
    pub scan: ScanMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { max_resamples: DEFAULT_BUDGET, scan: ScanMode::Incremental }
    }
}

impl RunConfig {
    pub fn with_budget(max_resamples: u64) -> Self {
        Self { max_resamples, ..Self::default() }
    }
}

/// Trace of one run: the events resampled in each iteration, in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLog {
    pub seed: Option<u64>,
    pub iterations: Vec<Vec<usize>>,
    pub total_resamples: u64,
    pub terminated: bool,
}

impl RunLog {
    pub fn as_sequence(&self) -> StableSetSequence {
        StableSetSequence::new(self.iterations.clone())
    }

    /// Number of outer-loop passes, counting the final empty one.
    pub fn iteration_count(&self) -> usize {
        self.iterations.len()
    }

    /// True iff the run followed `seq`: iterations 1..t-1 resampled exactly the
    /// sets of `seq`, and the last set of `seq` is a prefix of iteration t.
    pub fn follows(&self, seq: &StableSetSequence) -> bool {
        log_follows(self, seq)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("RunLog serializes")
    }
}

pub fn log_follows(log: &RunLog, seq: &StableSetSequence) -> bool {
    let Some((last, head)) = seq.sets.split_last() else {
        return true;
    };
    if log.iterations.len() < seq.sets.len() {
        return false;
    }
    let same_set = |a: &[usize], b: &[usize]| {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    };
    for (it, set) in log.iterations.iter().zip(head) {
        if !same_set(it, set) {
            return false;
        }
    }
    let it = &log.iterations[head.len()];
    last.len() <= it.len() && same_set(&it[..last.len()], last)
}

#[derive(Debug, Clone)]
pub struct RunOutcome<S> {
    pub state: S,
    pub log: RunLog,
}

/// Runs MaximalSetResample from a fresh sample.
///
/// Each iteration greedily builds a maximal independent set of occurring
/// events, always taking the minimum eligible index and resampling it at
/// once; the run ends after an iteration that selects nothing. Exhausting the
/// budget yields `terminated = false` with the partial log.
pub fn maximal_set_resample<B, R>(
    bundle: &B,
    rng: &mut R,
    config: RunConfig,
) -> Result<RunOutcome<B::State>, EngineError>
where
    B: OracleBundle,
    R: Rng + ?Sized,
{
    let state = bundle.sample(rng);
    resample_from(bundle, state, rng, config)
}

/// Same as [`maximal_set_resample`] but starting from a given state.
pub fn resample_from<B, R>(
    bundle: &B,
    mut state: B::State,
    rng: &mut R,
    config: RunConfig,
) -> Result<RunOutcome<B::State>, EngineError>
where
    B: OracleBundle,
    R: Rng + ?Sized,
{
    if config.max_resamples == 0 {
        return Err(EngineError::ZeroBudget);
    }
    let n = bundle.num_events();
    let mut log = RunLog { seed: None, iterations: Vec::new(), total_resamples: 0, terminated: false };
    loop {
        let mut chosen: Vec<usize> = Vec::new();
        let blocked = |c: usize, chosen: &[usize]| chosen.iter().any(|&j| j == c || bundle.adjacent(c, j));
        match config.scan {
            ScanMode::Incremental => {
                for c in bundle.occurring(&state) {
                    if blocked(c, &chosen) || !bundle.holds(c, &state) {
                        continue;
                    }
                    if log.total_resamples == config.max_resamples {
                        log.iterations.push(chosen);
                        return Ok(RunOutcome { state, log });
                    }
                    bundle.resample(c, &mut state, rng)?;
                    log.total_resamples += 1;
                    chosen.push(c);
                }
            }
            ScanMode::Exhaustive => loop {
                let next = (0..n).find(|&c| !blocked(c, &chosen) && bundle.holds(c, &state));
                let Some(c) = next else { break };
                if log.total_resamples == config.max_resamples {
                    log.iterations.push(chosen);
                    return Ok(RunOutcome { state, log });
                }
                bundle.resample(c, &mut state, rng)?;
                log.total_resamples += 1;
                chosen.push(c);
            },
        }
        let done = chosen.is_empty();
        log.iterations.push(chosen);
        if done {
            log.terminated = true;
            return Ok(RunOutcome { state, log });
        }
    }
}

/// Seeded run with a [`RunRng`]; the seed is recorded in the log.
pub fn run_seeded<B: OracleBundle>(
    bundle: &B,
    seed: u64,
    config: RunConfig,
) -> Result<RunOutcome<B::State>, EngineError> {
    let mut rng = seeded_rng(seed);
    let mut out = maximal_set_resample(bundle, &mut rng, config)?;
    out.log.seed = Some(seed);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{VariableEvent, VariableSpace};
    use crate::space::EventBundle;

    /// Events that never occur.
    struct Quiet;

    impl OracleBundle for Quiet {
        type State = ();
        fn num_events(&self) -> usize {
            3
        }
        fn sample<R: Rng + ?Sized>(&self, _: &mut R) {}
        fn holds(&self, _: usize, _: &()) -> bool {
            false
        }
        fn resample<R: Rng + ?Sized>(&self, e: usize, _: &mut (), _: &mut R) -> Result<(), OracleError> {
            Err(OracleError::EventNotSatisfied(e))
        }
        fn adjacent(&self, _: usize, _: usize) -> bool {
            false
        }
    }

    fn fair_bits(bits: usize, events: Vec<Vec<(usize, u32)>>) -> EventBundle<VariableSpace> {
        let space = VariableSpace::uniform(bits, 2);
        let events = events.into_iter().map(VariableEvent::new).collect();
        EventBundle::new(space, events)
    }

    #[test]
    fn quiet_bundle_terminates_immediately() {
        let out = run_seeded(&Quiet, 7, RunConfig::default()).unwrap();
        assert_eq!(out.log.total_resamples, 0);
        assert_eq!(out.log.iterations, vec![Vec::<usize>::new()]);
        assert!(out.log.terminated);
        assert_eq!(out.log.seed, Some(7));
    }

    #[test]
    fn zero_budget_rejected() {
        assert_eq!(run_seeded(&Quiet, 0, RunConfig::with_budget(0)).unwrap_err(), EngineError::ZeroBudget);
    }

    #[test]
    fn single_event_is_geometric_with_mean_one() {
        // one fair bit, event X = 0: resample count ~ Geometric(1/2) on {0,1,...}, mean 1
        let bundle = fair_bits(1, vec![vec![(0, 0)]]);
        let runs = 100_000u64;
        let mut rng = seeded_rng(11);
        let mut total = 0u64;
        for _ in 0..runs {
            let out = maximal_set_resample(&bundle, &mut rng, RunConfig::default()).unwrap();
            assert!(out.log.terminated);
            total += out.log.total_resamples;
        }
        let mean = total as f64 / runs as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn budget_exhaustion_returns_partial_log() {
        // X0 = 0 always reachable; budget 1 with an event that is hard to clear
        let bundle = fair_bits(4, vec![vec![(0, 0)], vec![(1, 0)], vec![(2, 0)], vec![(3, 0)]]);
        let mut hit = false;
        for seed in 0..50 {
            let out = run_seeded(&bundle, seed, RunConfig::with_budget(1)).unwrap();
            assert!(out.log.total_resamples <= 1);
            let sum: usize = out.log.iterations.iter().map(Vec::len).sum();
            assert_eq!(sum as u64, out.log.total_resamples);
            if !out.log.terminated {
                hit = true;
            }
        }
        assert!(hit);
    }

    #[test]
    fn iterations_are_greedy_independent_and_stable() {
        // path-shaped dependencies through shared variables
        let bundle = fair_bits(
            6,
            vec![
                vec![(0, 0), (1, 0)],
                vec![(1, 1), (2, 0)],
                vec![(2, 1), (3, 0)],
                vec![(3, 1), (4, 0)],
                vec![(4, 1), (5, 1)],
            ],
        );
        let g = bundle.dependency_graph();
        for seed in 0..200 {
            let out = run_seeded(&bundle, seed, RunConfig::default()).unwrap();
            assert!(out.log.terminated);
            assert!(g.validate_sequence(&out.log.as_sequence()));
            for it in &out.log.iterations {
                assert!(it.windows(2).all(|w| w[0] < w[1]));
                assert!(g.is_independent(it).unwrap());
            }
            for e in 0..bundle.num_events() {
                assert!(!bundle.holds(e, &out.state));
            }
        }
    }

    #[test]
    fn incremental_and_exhaustive_schedules_agree() {
        let bundle = fair_bits(
            5,
            vec![vec![(0, 0)], vec![(0, 1), (1, 1)], vec![(1, 0), (2, 0)], vec![(3, 0), (4, 0)], vec![(2, 1), (4, 1)]],
        );
        for seed in 0..300 {
            let a = run_seeded(&bundle, seed, RunConfig::default()).unwrap();
            let b = run_seeded(&bundle, seed, RunConfig { scan: ScanMode::Exhaustive, ..RunConfig::default() }).unwrap();
            assert_eq!(a.log, b.log);
        }
    }

    #[test]
    fn follows_examples() {
        let log = RunLog { seed: None, iterations: vec![vec![0], vec![1], vec![]], total_resamples: 2, terminated: true };
        assert!(log_follows(&log, &StableSetSequence::default()));
        assert!(log_follows(&log, &StableSetSequence::new(vec![vec![0], vec![1]])));
        assert!(!log_follows(&log, &StableSetSequence::new(vec![vec![1]])));
        let log2 = RunLog { seed: None, iterations: vec![vec![0, 2], vec![]], total_resamples: 2, terminated: true };
        assert!(!log_follows(&log2, &StableSetSequence::new(vec![vec![0, 1]])));
        assert!(log_follows(&log2, &StableSetSequence::new(vec![vec![0]])));
        assert!(!log_follows(&log2, &StableSetSequence::new(vec![vec![2]])));
        assert!(log_follows(&log2, &StableSetSequence::new(vec![vec![0, 2]])));
    }

    #[test]
    fn run_log_json_shape() {
        let log = RunLog { seed: Some(3), iterations: vec![vec![1, 4], vec![]], total_resamples: 2, terminated: true };
        assert_eq!(log.to_json(), r#"{"seed":3,"iterations":[[1,4],[]],"total_resamples":2,"terminated":true}"#);
    }
}
