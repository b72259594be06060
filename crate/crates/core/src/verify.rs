//! Statistical and exhaustive checks of the oracle axioms, the sequence
//! coupling bound, and the consecutive-resampling streak construction.
//!
//! Trial `t` of a run seeded `s` draws from `seeded_rng(derive_seed(s, t))`,
//! so results do not depend on the thread count.

use std::collections::HashMap;
use std::hash::Hash;

use num_traits::ToPrimitive;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::engine::{maximal_set_resample, seeded_rng, EngineError, OracleBundle, OracleError, RunConfig};
use crate::graph::{DependencyGraph, StableSetSequence};
use crate::oracles::{
    all_perfect_matchings, all_permutations, all_spanning_trees, EdgeSetEvent, MatchingSpace, PatternEvent,
    PermutationSpace, TreeSpace, VariableEvent, VariableSpace,
};
use crate::space::EventBundle;
use crate::synth::{ExplicitSpace, SynthError, SynthesizedBundle};

/// Chi-square significance for distribution tests.
pub const SIGNIFICANCE: f64 = 1e-6;

/// Total rejection attempts allowed when conditioning on an event.
pub const REJECTION_BUDGET: u64 = 100_000_000;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("event {0} was never sampled within the rejection budget")]
    EventNotSampled(usize),
    #[error("event index {index} out of range ({n} events)")]
    UnknownEvent { index: usize, n: usize },
    #[error("sample count must be positive")]
    NoSamples,
    #[error("resampled state lies outside the enumerated support")]
    OutsideSupport,
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

/// SplitMix64 finalizer applied to `master ⊕ mix(index)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(master ^ mix(index))
}

/// A bundle whose measure μ can be listed exhaustively.
pub trait FiniteBundle: OracleBundle
where
    Self::State: Eq + Hash + Send + Sync,
{
    /// Every state with μ(state) > 0, in a fixed order.
    fn support(&self) -> Vec<(Self::State, f64)>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTestReport {
    pub support: usize,
    pub samples: u64,
    pub max_abs_deviation: f64,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub threshold: f64,
    pub significance: f64,
    pub pass: bool,
}

/// Compares `counts` over `support` to μ by Pearson's statistic.
pub fn chi_square_report(probs: &[f64], counts: &[u64], outside: u64) -> DistributionTestReport {
    let samples: u64 = counts.iter().sum::<u64>() + outside;
    let n = samples as f64;
    let mut stat = 0.0;
    let mut dev: f64 = outside as f64 / n;
    for (&p, &c) in probs.iter().zip(counts) {
        let expected = n * p;
        stat += (c as f64 - expected).powi(2) / expected;
        dev = dev.max((c as f64 / n - p).abs());
    }
    let dof = probs.len().saturating_sub(1);
    let threshold = if dof == 0 {
        0.0
    } else {
        ChiSquared::new(dof as f64).expect("positive dof").inverse_cdf(1.0 - SIGNIFICANCE)
    };
    let pass = outside == 0 && (dof == 0 || stat < threshold);
    DistributionTestReport {
        support: probs.len(),
        samples,
        max_abs_deviation: dev,
        chi_square: stat,
        degrees_of_freedom: dof,
        threshold,
        significance: SIGNIFICANCE,
        pass,
    }
}

/// Draws from μ conditioned on `event` by rejection.
pub fn sample_conditioned<B: OracleBundle, R: Rng + ?Sized>(
    bundle: &B,
    event: usize,
    max_tries: u64,
    rng: &mut R,
) -> Result<B::State, VerifyError> {
    for _ in 0..max_tries {
        let s = bundle.sample(rng);
        if bundle.holds(event, &s) {
            return Ok(s);
        }
    }
    Err(VerifyError::EventNotSampled(event))
}

fn per_trial_tries(trials: u64) -> u64 {
    (REJECTION_BUDGET / trials.max(1)).max(10_000)
}

fn check_event<B: OracleBundle>(bundle: &B, event: usize) -> Result<(), VerifyError> {
    if event >= bundle.num_events() {
        return Err(VerifyError::UnknownEvent { index: event, n: bundle.num_events() });
    }
    Ok(())
}

/// Empirical distribution of r_event(ω) for ω ~ μ|E_event, indexed like
/// `support`; the last entry counts states outside it.
pub fn resampled_histogram<B>(
    bundle: &B,
    event: usize,
    support: &[B::State],
    samples: u64,
    seed: u64,
) -> Result<(Vec<u64>, u64), VerifyError>
where
    B: OracleBundle,
    B::State: Eq + Hash + Send + Sync,
{
    check_event(bundle, event)?;
    if samples == 0 {
        return Err(VerifyError::NoSamples);
    }
    let index: HashMap<&B::State, usize> = support.iter().enumerate().map(|(k, s)| (s, k)).collect();
    let tries = per_trial_tries(samples);
    let m = support.len();
    let counts = (0..samples)
        .into_par_iter()
        .try_fold(
            || vec![0u64; m + 1],
            |mut acc, t| {
                let mut rng = seeded_rng(derive_seed(seed, t));
                let mut s = sample_conditioned(bundle, event, tries, &mut rng)?;
                bundle.resample(event, &mut s, &mut rng)?;
                acc[index.get(&s).copied().unwrap_or(m)] += 1;
                Ok::<_, VerifyError>(acc)
            },
        )
        .try_reduce(
            || vec![0u64; m + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    let outside = counts[m];
    Ok((counts[..m].to_vec(), outside))
}

/// (R1): r_event maps μ|E_event to μ, judged by chi-square at [`SIGNIFICANCE`].
pub fn test_r1<B>(bundle: &B, event: usize, samples: u64, seed: u64) -> Result<DistributionTestReport, VerifyError>
where
    B: FiniteBundle,
    B::State: Eq + Hash + Send + Sync,
{
    let support = bundle.support();
    let (states, probs): (Vec<_>, Vec<_>) = support.into_iter().unzip();
    let (counts, outside) = resampled_histogram(bundle, event, &states, samples, seed)?;
    Ok(chi_square_report(&probs, &counts, outside))
}

/// (R2): counts non-neighbors of `event` that start occurring across one
/// resampling, over `trials` conditioned draws.
pub fn test_r2<B>(bundle: &B, event: usize, trials: u64, seed: u64) -> Result<u64, VerifyError>
where
    B: OracleBundle,
{
    check_event(bundle, event)?;
    let outside: Vec<usize> =
        (0..bundle.num_events()).filter(|&j| j != event && !bundle.adjacent(event, j)).collect();
    let tries = per_trial_tries(trials);
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded_rng(derive_seed(seed, t));
            let mut s = sample_conditioned(bundle, event, tries, &mut rng)?;
            let before: Vec<bool> = outside.iter().map(|&j| bundle.holds(j, &s)).collect();
            bundle.resample(event, &mut s, &mut rng)?;
            Ok(outside.iter().zip(before).filter(|&(&j, b)| !b && bundle.holds(j, &s)).count() as u64)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Exhaustive (R2) over every positive-probability transition of every kernel.
pub fn test_r2_exhaustive(bundle: &SynthesizedBundle) -> u64 {
    let space = &bundle.space;
    let mut violations = 0;
    for oracle in &bundle.oracles {
        let outside = space.outside_events(oracle.event);
        for (u, row) in oracle.rows() {
            for (w, q) in row {
                if q.to_f64().unwrap_or(0.0) > 0.0 {
                    violations +=
                        outside.iter().filter(|&&j| space.holds(j, *w) && !space.holds(j, u)).count() as u64;
                }
            }
        }
    }
    violations
}

/// Exact Pr[∩_{i∈S} E_i] = ∏ Pr[E_i] for every subset S of at most 16 events.
pub fn check_mutual_independence<B>(bundle: &B) -> Result<bool, VerifyError>
where
    B: FiniteBundle,
    B::State: Eq + Hash + Send + Sync,
{
    let n = bundle.num_events();
    if n > 16 {
        return Err(VerifyError::BadParameter(format!("{n} events is too many to enumerate subsets")));
    }
    let support = bundle.support();
    let mut joint = vec![0.0; 1 << n];
    for (s, p) in &support {
        let mask = (0..n).filter(|&i| bundle.holds(i, s)).fold(0usize, |m, i| m | (1 << i));
        // Every subset of the occurring set gains this state's mass.
        let mut sub = mask;
        loop {
            joint[sub] += p;
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & mask;
        }
    }
    let single: Vec<f64> = (0..n).map(|i| joint[1 << i]).collect();
    Ok((0..1usize << n).all(|m| {
        let prod: f64 = (0..n).filter(|i| m >> i & 1 == 1).map(|i| single[i]).product();
        (joint[m] - prod).abs() <= 1e-12
    }))
}

// ---------------------------------------------------------------------------
// Standard verification bundles.

fn enumerate_assignments(space: &VariableSpace) -> Vec<(Vec<u32>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for m in &space.marginals {
        out = out
            .into_iter()
            .flat_map(|(a, p)| {
                (0..m.support() as u32).filter(|&v| m.probability(v) > 0.0).map(move |v| {
                    let mut a = a.clone();
                    a.push(v);
                    (a, p * m.probability(v))
                })
            })
            .collect();
    }
    out
}

impl FiniteBundle for EventBundle<VariableSpace> {
    fn support(&self) -> Vec<(Vec<u32>, f64)> {
        enumerate_assignments(&self.space)
    }
}

impl FiniteBundle for EventBundle<PermutationSpace> {
    fn support(&self) -> Vec<(crate::oracles::Permutation, f64)> {
        let all = all_permutations(self.space.n);
        let p = 1.0 / all.len() as f64;
        all.into_iter().map(|s| (s, p)).collect()
    }
}

impl FiniteBundle for EventBundle<MatchingSpace> {
    fn support(&self) -> Vec<(crate::oracles::PerfectMatching, f64)> {
        let all = all_perfect_matchings(self.space.vertices);
        let p = 1.0 / all.len() as f64;
        all.into_iter().map(|s| (s, p)).collect()
    }
}

impl FiniteBundle for EventBundle<TreeSpace> {
    fn support(&self) -> Vec<(crate::oracles::SpanningTree, f64)> {
        let all = all_spanning_trees(self.space.n);
        let p = 1.0 / all.len() as f64;
        all.into_iter().map(|s| (s, p)).collect()
    }
}

impl FiniteBundle for SynthesizedBundle {
    fn support(&self) -> Vec<(usize, f64)> {
        (0..self.space.state_count())
            .map(|s| (s, self.space.prob(s).to_f64().unwrap_or(0.0)))
            .filter(|&(_, p)| p > 0.0)
            .collect()
    }
}

/// `bits` fair bits; events `X_v = 0` for each v, then `X_v = X_{v+1} = 1`.
pub fn variable_family(bits: usize) -> EventBundle<VariableSpace> {
    let mut events: Vec<VariableEvent> = (0..bits).map(|v| VariableEvent::new(vec![(v, 0)])).collect();
    events.extend((0..bits.saturating_sub(1)).map(|v| VariableEvent::new(vec![(v, 1), (v + 1, 1)])));
    EventBundle::new(VariableSpace::uniform(bits, 2), events)
}

/// Uniform permutations of `[n]`; all one-pair patterns, then all two-pair
/// patterns, lexicographic. Event 0 is `π(0) = 0`.
pub fn permutation_family(n: usize) -> EventBundle<PermutationSpace> {
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).collect();
    let mut events: Vec<PatternEvent> =
        cells.iter().map(|&c| PatternEvent::new(vec![c]).expect("one pair")).collect();
    for (k, &a) in cells.iter().enumerate() {
        for &b in &cells[k + 1..] {
            if a.0 != b.0 && a.1 != b.1 {
                events.push(PatternEvent::new(vec![a, b]).expect("distinct rows and columns"));
            }
        }
    }
    EventBundle::new(PermutationSpace::new(n), events)
}

fn edge_events(n: usize, pair_ok: impl Fn((usize, usize), (usize, usize)) -> bool) -> Vec<EdgeSetEvent> {
    let edges = crate::apps::edge_list(n);
    let mut events: Vec<EdgeSetEvent> = edges.iter().map(|&e| EdgeSetEvent::new([e]).expect("no loops")).collect();
    for (k, &a) in edges.iter().enumerate() {
        for &b in &edges[k + 1..] {
            if pair_ok(a, b) {
                events.push(EdgeSetEvent::new([a, b]).expect("no loops"));
            }
        }
    }
    events
}

/// Uniform perfect matchings of K_vertices; single edges, then disjoint edge
/// pairs. Event 0 is edge {0, 1}.
pub fn matching_family(vertices: usize) -> Result<EventBundle<MatchingSpace>, VerifyError> {
    let space = MatchingSpace::new(vertices).map_err(|e| VerifyError::BadParameter(e.to_string()))?;
    let events = edge_events(vertices, |a, b| a.0 != b.0 && a.0 != b.1 && a.1 != b.0 && a.1 != b.1);
    Ok(EventBundle::new(space, events))
}

/// Uniform spanning trees of K_n; single edges, then all edge pairs.
/// Event 0 is edge {0, 1}.
pub fn tree_family(n: usize) -> EventBundle<TreeSpace> {
    EventBundle::new(TreeSpace::new(n), edge_events(n, |_, _| true))
}

/// Four fair bits; E_0 = {x0 = x1 = 1}, E_1 = {x1 = x2 = 1}, E_2 = {x3 = 1}
/// with the single edge 0–1, and synthesized oracles.
pub fn synth_family() -> Result<SynthesizedBundle, VerifyError> {
    let states = 16usize;
    let bit = |s: usize, b: usize| s >> b & 1 == 1;
    let events = vec![
        (0..states).filter(|&s| bit(s, 0) && bit(s, 1)).collect(),
        (0..states).filter(|&s| bit(s, 1) && bit(s, 2)).collect(),
        (0..states).filter(|&s| bit(s, 3)).collect(),
    ];
    let prob = vec![num_rational::BigRational::new(1.into(), 16.into()); states];
    let graph = DependencyGraph::from_edges(3, [(0, 1)]).expect("valid edge");
    let space = ExplicitSpace::new(prob, events, graph)?;
    SynthesizedBundle::synthesize_all(space)?
        .map_err(|c| VerifyError::BadParameter(format!("event {} has no oracle", c.event)))
}

// ---------------------------------------------------------------------------
// Coupling bound.

/// All proper stable set sequences of `graph` with total size at most
/// `max_total`, shortest first, then lexicographic.
pub fn enumerate_proper_sequences(graph: &DependencyGraph, max_total: usize) -> Vec<StableSetSequence> {
    let n = graph.n();
    let sets: Vec<Vec<usize>> = (1u64..1 << n)
        .filter(|&m| graph.is_independent_mask(m))
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect();
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<Vec<usize>>> = sets.iter().filter(|s| s.len() <= max_total).map(|s| vec![s.clone()]).collect();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for seq in frontier {
            let used: usize = seq.iter().map(Vec::len).sum();
            let last = seq.last().expect("nonempty");
            let nb = graph.closed_neighborhood(last).expect("indices in range");
            for s in &sets {
                if used + s.len() <= max_total && s.iter().all(|i| nb.contains(i)) {
                    let mut longer = seq.clone();
                    longer.push(s.clone());
                    next.push(longer);
                }
            }
            out.push(StableSetSequence::new(seq));
        }
        frontier = next;
    }
    out.sort_by(|a, b| a.sets.len().cmp(&b.sets.len()).then_with(|| a.sets.cmp(&b.sets)));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingRow {
    pub sequence: Vec<Vec<usize>>,
    /// p_𝓘 = ∏_t ∏_{i ∈ I_t} Pr[E_i].
    pub weight: f64,
    pub frequency: f64,
    /// Binomial standard error at `weight`.
    pub std_error: f64,
    pub pass: bool,
}

/// Frequency with which seeded runs follow each sequence, against p_𝓘 + 3σ.
pub fn coupling_check<B: OracleBundle>(
    bundle: &B,
    p: &[f64],
    sequences: &[StableSetSequence],
    runs: u64,
    seed: u64,
) -> Result<Vec<CouplingRow>, VerifyError> {
    if runs == 0 {
        return Err(VerifyError::NoSamples);
    }
    let hits = (0..runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = seeded_rng(derive_seed(seed, r));
            let log = maximal_set_resample(bundle, &mut rng, RunConfig::default())?.log;
            Ok(sequences.iter().map(|s| log.follows(s) as u64).collect::<Vec<_>>())
        })
        .try_reduce(
            || vec![0; sequences.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok::<_, VerifyError>(a)
            },
        )?;
    Ok(sequences
        .iter()
        .zip(hits)
        .map(|(s, h)| {
            let weight = s.weight(p);
            let std_error = (weight * (1.0 - weight) / runs as f64).sqrt();
            let frequency = h as f64 / runs as f64;
            CouplingRow { sequence: s.sets.clone(), weight, frequency, std_error, pass: frequency <= weight + 3.0 * std_error }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Streak counterexample: long witness sequences with constant probability.

/// Fair bits X_i, Y_i^j, Z_i, W with E_i = {X_i = 0}, E_i^j = {Y_i^j = 0},
/// E′ = {W = 1}; E_i ∼ E_i^j and E′ isolated. Event order: E_1..E_k, then
/// E_i^j row by row, then E′.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreakBundle {
    pub k: usize,
    pub l: usize,
}

/// Bits: X at `0..k`, Y_i^j at `k + i·l + j`, Z at `k + kl + i`, W last.
pub type StreakState = Vec<bool>;

pub fn streak_bundle(k: usize, l: usize) -> Result<StreakBundle, VerifyError> {
    if k == 0 || l == 0 {
        return Err(VerifyError::BadParameter("k and l must be at least 1".into()));
    }
    Ok(StreakBundle { k, l })
}

impl StreakBundle {
    pub fn bits(&self) -> usize {
        2 * self.k + self.k * self.l + 1
    }

    fn z(&self, i: usize) -> usize {
        self.k + self.k * self.l + i
    }

    fn w(&self) -> usize {
        self.bits() - 1
    }

    /// Index of E′.
    pub fn prime_event(&self) -> usize {
        self.k + self.k * self.l
    }
}

impl OracleBundle for StreakBundle {
    type State = StreakState;

    fn num_events(&self) -> usize {
        self.k + self.k * self.l + 1
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> StreakState {
        (0..self.bits()).map(|_| rng.random()).collect()
    }

    fn holds(&self, e: usize, s: &StreakState) -> bool {
        if e == self.prime_event() {
            s[self.w()]
        } else {
            !s[e]
        }
    }

    fn resample<R: Rng + ?Sized>(&self, e: usize, s: &mut StreakState, rng: &mut R) -> Result<(), OracleError> {
        if e >= self.num_events() {
            return Err(OracleError::UnknownEvent { index: e, n: self.num_events() });
        }
        if !self.holds(e, s) {
            return Err(OracleError::EventNotSatisfied(e));
        }
        if e < self.k {
            s[e] = rng.random();
        } else if e < self.prime_event() {
            // (X_i, Y_i^j, Z_i) ← (Z_i, Q, X_i)
            let i = (e - self.k) / self.l;
            let z = self.z(i);
            s.swap(i, z);
            s[e] = rng.random();
        } else {
            // (W, Z_1, …, Z_k) ← (Z_1, …, Z_k, Q)
            s[self.w()] = s[self.z(0)];
            for i in 0..self.k - 1 {
                s[self.z(i)] = s[self.z(i + 1)];
            }
            s[self.z(self.k - 1)] = rng.random();
        }
        Ok(())
    }

    fn adjacent(&self, a: usize, b: usize) -> bool {
        let (a, b) = (a.min(b), a.max(b));
        a < self.k && b >= self.k && b < self.prime_event() && (b - self.k) / self.l == a
    }
}

impl FiniteBundle for StreakBundle {
    fn support(&self) -> Vec<(StreakState, f64)> {
        let bits = self.bits();
        assert!(bits <= 20, "support too large to enumerate");
        let p = 0.5f64.powi(bits as i32);
        (0..1u32 << bits).map(|m| ((0..bits).map(|b| m >> b & 1 == 1).collect(), p)).collect()
    }
}

/// ¼(1 − 2^{−(l+1)})^{k−2}: lower bound on Pr[E′ resampled in ≥ k consecutive
/// iterations] as claimed for MaximalSetResample.
pub fn streak_bound(k: usize, l: usize) -> f64 {
    0.25 * (1.0 - 0.5f64.powi(l as i32 + 1)).powi(k as i32 - 2)
}

/// ½(1 − 2^{−(l+1)})^{k−1}: the corresponding bound for the one-event-at-a-time
/// minimum-index schedule.
pub fn sequential_streak_bound(k: usize, l: usize) -> f64 {
    0.5 * (1.0 - 0.5f64.powi(l as i32 + 1)).powi(k as i32 - 1)
}

/// Resampling schedule for the streak experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreakSchedule {
    /// MaximalSetResample; a streak counts consecutive iterations.
    MaximalSet,
    /// Resample only the minimum-index occurring event; a streak counts
    /// consecutive single resamplings.
    Sequential,
}

impl StreakSchedule {
    pub fn bound(self, k: usize, l: usize) -> f64 {
        match self {
            StreakSchedule::MaximalSet => streak_bound(k, l),
            StreakSchedule::Sequential => sequential_streak_bound(k, l),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreakReport {
    pub k: usize,
    pub l: usize,
    pub schedule: StreakSchedule,
    pub runs: u64,
    /// Runs that exhausted the budget; excluded from the histogram.
    pub exhausted: u64,
    /// `histogram[s]` = runs whose longest E′ streak is exactly `s`.
    pub histogram: Vec<u64>,
    /// Fraction of completed runs with streak ≥ k.
    pub frequency_at_least_k: f64,
    pub claimed_bound: f64,
}

impl StreakReport {
    pub fn frequency_at_least(&self, s: usize) -> f64 {
        let done = self.runs - self.exhausted;
        if done == 0 {
            return 0.0;
        }
        self.histogram.iter().skip(s).sum::<u64>() as f64 / done as f64
    }
}

/// Longest run of consecutive iterations that each resampled `event`.
pub fn longest_streak(iterations: &[Vec<usize>], event: usize) -> usize {
    let mut best = 0;
    let mut cur = 0;
    for it in iterations {
        if it.contains(&event) {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    best
}

/// Minimum-index sequential schedule; `None` when the budget runs out.
/// Each resampling is logged as a singleton iteration.
pub fn sequential_resample_log<B: OracleBundle, R: Rng + ?Sized>(
    bundle: &B,
    rng: &mut R,
    budget: u64,
) -> Result<Option<Vec<Vec<usize>>>, VerifyError> {
    let mut state = bundle.sample(rng);
    let mut log = Vec::new();
    while let Some(e) = (0..bundle.num_events()).find(|&e| bundle.holds(e, &state)) {
        if log.len() as u64 >= budget {
            return Ok(None);
        }
        bundle.resample(e, &mut state, rng)?;
        log.push(vec![e]);
    }
    Ok(Some(log))
}

/// Streak distribution under MaximalSetResample.
pub fn measure_consecutive_runs(
    bundle: &StreakBundle,
    runs: u64,
    budget: u64,
    seed: u64,
) -> Result<StreakReport, VerifyError> {
    measure_consecutive_runs_with(bundle, StreakSchedule::MaximalSet, runs, budget, seed)
}

pub fn measure_consecutive_runs_with(
    bundle: &StreakBundle,
    schedule: StreakSchedule,
    runs: u64,
    budget: u64,
    seed: u64,
) -> Result<StreakReport, VerifyError> {
    if runs == 0 {
        return Err(VerifyError::NoSamples);
    }
    let prime = bundle.prime_event();
    let streaks: Vec<Option<usize>> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = seeded_rng(derive_seed(seed, r));
            let iterations = match schedule {
                StreakSchedule::MaximalSet => {
                    let log = maximal_set_resample(bundle, &mut rng, RunConfig::with_budget(budget))?.log;
                    log.terminated.then_some(log.iterations)
                }
                StreakSchedule::Sequential => sequential_resample_log(bundle, &mut rng, budget)?,
            };
            Ok(iterations.map(|its| longest_streak(&its, prime)))
        })
        .collect::<Result<_, VerifyError>>()?;
    let exhausted = streaks.iter().filter(|s| s.is_none()).count() as u64;
    let max = streaks.iter().flatten().copied().max().unwrap_or(0);
    let mut histogram = vec![0u64; max + 1];
    for s in streaks.into_iter().flatten() {
        histogram[s] += 1;
    }
    let mut report = StreakReport {
        k: bundle.k,
        l: bundle.l,
        schedule,
        runs,
        exhausted,
        histogram,
        frequency_at_least_k: 0.0,
        claimed_bound: schedule.bound(bundle.k, bundle.l),
    };
    report.frequency_at_least_k = report.frequency_at_least(bundle.k);
    Ok(report)
}
