//! Resampling oracles for explicit finite spaces via the transportation
//! problem, and exact checks of lopsided association and lopsidependency.

use std::collections::{BTreeMap, VecDeque};

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{OracleBundle, OracleError};
use crate::graph::{DependencyGraph, GraphError, GraphSpec};
use crate::polynomials::{parse_rational, Scalar};

/// Largest explicit space accepted.
pub const MAX_STATES: usize = 4096;

/// Largest number of non-neighbor events for subset enumeration.
pub const MAX_OUTSIDE_EVENTS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("{0} states exceed the cap of {MAX_STATES}")]
    TooManyStates(usize),
    #[error("probability {0:?} is not a nonnegative rational")]
    BadProbability(String),
    #[error("probabilities sum to {0}, not 1")]
    BadTotal(String),
    #[error("state {state} out of range for {states} states")]
    StateOutOfRange { state: usize, states: usize },
    #[error("graph has {graph} vertices but there are {events} events")]
    GraphSize { graph: usize, events: usize },
    #[error("event {0} has probability zero")]
    ZeroProbability(usize),
    #[error("event {index} out of range for {n} events")]
    UnknownEvent { index: usize, n: usize },
    #[error("{0} non-neighbor events exceed the enumeration cap")]
    TooManyOutsideEvents(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// JSON form of an explicit space; probabilities are decimal or `a/b` strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplicitSpaceSpec {
    pub states: usize,
    pub prob: Vec<String>,
    pub events: Vec<Vec<usize>>,
    pub graph: GraphSpec,
}

/// A finite probability space with events given as state sets.
#[derive(Debug, Clone)]
pub struct ExplicitSpace {
    prob: Vec<BigRational>,
    prob_f64: Vec<f64>,
    events: Vec<Vec<usize>>,
    member: Vec<Vec<bool>>,
    graph: DependencyGraph,
}

impl ExplicitSpace {
    pub fn new(prob: Vec<BigRational>, events: Vec<Vec<usize>>, graph: DependencyGraph) -> Result<Self, SynthError> {
        let k = prob.len();
        if k > MAX_STATES {
            return Err(SynthError::TooManyStates(k));
        }
        if let Some(bad) = prob.iter().find(|p| **p < BigRational::zero()) {
            return Err(SynthError::BadProbability(bad.to_string()));
        }
        let total = prob.iter().fold(BigRational::zero(), |a, b| a + b);
        if total != BigRational::one() {
            return Err(SynthError::BadTotal(total.to_string()));
        }
        if graph.n() != events.len() {
            return Err(SynthError::GraphSize { graph: graph.n(), events: events.len() });
        }
        let mut member = vec![vec![false; k]; events.len()];
        let mut sorted = Vec::with_capacity(events.len());
        for (e, states) in events.into_iter().enumerate() {
            let mut states = states;
            states.sort_unstable();
            states.dedup();
            for &s in &states {
                if s >= k {
                    return Err(SynthError::StateOutOfRange { state: s, states: k });
                }
                member[e][s] = true;
            }
            sorted.push(states);
        }
        let prob_f64 = prob.iter().map(Scalar::to_f64).collect();
        Ok(Self { prob, prob_f64, events: sorted, member, graph })
    }

    pub fn from_spec(spec: &ExplicitSpaceSpec) -> Result<Self, SynthError> {
        if spec.prob.len() != spec.states {
            return Err(SynthError::BadTotal(format!("{} probabilities for {} states", spec.prob.len(), spec.states)));
        }
        let prob = spec
            .prob
            .iter()
            .map(|s| parse_rational(s).ok_or_else(|| SynthError::BadProbability(s.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(prob, spec.events.clone(), DependencyGraph::from_spec(&spec.graph)?)
    }

    pub fn to_spec(&self) -> ExplicitSpaceSpec {
        ExplicitSpaceSpec {
            states: self.prob.len(),
            prob: self.prob.iter().map(|p| p.to_string()).collect(),
            events: self.events.clone(),
            graph: self.graph.to_spec(),
        }
    }

    pub fn state_count(&self) -> usize {
        self.prob.len()
    }

    pub fn event_count(&self) -> usize {
        self.events.len()
    }

    pub fn prob(&self, state: usize) -> &BigRational {
        &self.prob[state]
    }

    pub fn probabilities(&self) -> &[BigRational] {
        &self.prob
    }

    pub fn graph(&self) -> &DependencyGraph {
        &self.graph
    }

    pub fn event(&self, i: usize) -> &[usize] {
        &self.events[i]
    }

    pub fn holds(&self, i: usize, state: usize) -> bool {
        self.member[i][state]
    }

    pub fn event_probability(&self, i: usize) -> BigRational {
        self.events[i].iter().fold(BigRational::zero(), |a, &s| a + &self.prob[s])
    }

    /// Events `j ∉ Γ⁺(i)`, ascending.
    pub fn outside_events(&self, i: usize) -> Vec<usize> {
        (0..self.events.len()).filter(|&j| j != i && !self.graph.adjacent(i, j)).collect()
    }

    /// Bit `k` set iff the `k`-th listed event holds at `state`.
    fn signature(&self, outside: &[usize], state: usize) -> u64 {
        outside.iter().enumerate().fold(0, |m, (k, &j)| if self.member[j][state] { m | 1 << k } else { m })
    }

    fn check_event(&self, i: usize) -> Result<BigRational, SynthError> {
        if i >= self.events.len() {
            return Err(SynthError::UnknownEvent { index: i, n: self.events.len() });
        }
        let p = self.event_probability(i);
        if p.is_zero() {
            return Err(SynthError::ZeroProbability(i));
        }
        Ok(p)
    }
}

/// Per-event transition kernel: `rows[u]` is the output law from state `u ∈ E_i`.
#[derive(Debug, Clone)]
pub struct SynthesizedOracle {
    pub event: usize,
    rows: BTreeMap<usize, Vec<(usize, BigRational)>>,
    samplers: BTreeMap<usize, (Vec<usize>, WeightedIndex<f64>)>,
}

impl SynthesizedOracle {
    fn new(event: usize, rows: BTreeMap<usize, Vec<(usize, BigRational)>>) -> Self {
        let samplers = rows
            .iter()
            .map(|(&u, row)| {
                let targets = row.iter().map(|(w, _)| *w).collect();
                let weights: Vec<f64> = row.iter().map(|(_, q)| Scalar::to_f64(q)).collect();
                (u, (targets, WeightedIndex::new(&weights).expect("row has positive mass")))
            })
            .collect();
        Self { event, rows, samplers }
    }

    /// Transition probabilities out of `u`, positive entries only.
    pub fn row(&self, u: usize) -> Option<&[(usize, BigRational)]> {
        self.rows.get(&u).map(|r| r.as_slice())
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, &[(usize, BigRational)])> {
        self.rows.iter().map(|(&u, r)| (u, r.as_slice()))
    }

    pub fn apply<R: Rng + ?Sized>(&self, u: usize, rng: &mut R) -> Option<usize> {
        let (targets, dist) = self.samplers.get(&u)?;
        Some(targets[dist.sample(rng)])
    }
}

/// Hall violation: `Σ_{u∈A} p_u > Σ_{w∈Γ(A)} p_w`, with `p_u` conditioned on E_i.
#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibilityCertificate {
    pub event: usize,
    pub violating_set: Vec<usize>,
    pub neighborhood: Vec<usize>,
    pub set_mass: BigRational,
    pub neighborhood_mass: BigRational,
}

#[derive(Debug, Clone)]
pub enum Synthesis {
    Feasible(SynthesizedOracle),
    Infeasible(InfeasibilityCertificate),
}

struct FlowEdge {
    to: usize,
    cap: BigRational,
    rev: usize,
}

/// Edmonds–Karp on exact rational capacities.
struct FlowNetwork {
    adj: Vec<Vec<FlowEdge>>,
}

impl FlowNetwork {
    fn new(n: usize) -> Self {
        Self { adj: (0..n).map(|_| Vec::new()).collect() }
    }

    /// Returns the index of the forward edge in `adj[from]`.
    fn add_edge(&mut self, from: usize, to: usize, cap: BigRational) -> usize {
        let rf = self.adj[to].len() + usize::from(from == to);
        let rt = self.adj[from].len();
        self.adj[from].push(FlowEdge { to, cap, rev: rf });
        self.adj[to].push(FlowEdge { to: from, cap: BigRational::zero(), rev: rt });
        rt
    }

    fn max_flow(&mut self, s: usize, t: usize) -> BigRational {
        let mut total = BigRational::zero();
        loop {
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.adj.len()];
            let mut seen = vec![false; self.adj.len()];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                if v == t {
                    break;
                }
                for (k, e) in self.adj[v].iter().enumerate() {
                    if !seen[e.to] && e.cap > BigRational::zero() {
                        seen[e.to] = true;
                        prev[e.to] = Some((v, k));
                        queue.push_back(e.to);
                    }
                }
            }
            if !seen[t] {
                return total;
            }
            let mut bottleneck: Option<BigRational> = None;
            let mut v = t;
            while let Some((u, k)) = prev[v] {
                let c = &self.adj[u][k].cap;
                if bottleneck.as_ref().is_none_or(|b| c < b) {
                    bottleneck = Some(c.clone());
                }
                v = u;
            }
            let b = bottleneck.expect("path has an edge");
            let mut v = t;
            while let Some((u, k)) = prev[v] {
                self.adj[u][k].cap -= &b;
                let rev = self.adj[u][k].rev;
                self.adj[v][rev].cap += &b;
                v = u;
            }
            total += b;
        }
    }

    fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for e in &self.adj[v] {
                if !seen[e.to] && e.cap > BigRational::zero() {
                    seen[e.to] = true;
                    stack.push(e.to);
                }
            }
        }
        seen
    }
}

/// Solves the transportation problem for event `i`.
///
/// States are grouped by which non-neighbor events they satisfy; the flow is
/// solved between groups and split inside each group in proportion to μ.
pub fn synthesize(space: &ExplicitSpace, i: usize) -> Result<Synthesis, SynthError> {
    let pe = space.check_event(i)?;
    let outside = space.outside_events(i);
    if outside.len() > 63 {
        return Err(SynthError::TooManyOutsideEvents(outside.len()));
    }
    let k = space.state_count();
    let sig: Vec<u64> = (0..k).map(|s| space.signature(&outside, s)).collect();

    // classes of positive-probability states
    let mut u_class: BTreeMap<u64, (BigRational, Vec<usize>)> = BTreeMap::new();
    let mut w_class: BTreeMap<u64, (BigRational, Vec<usize>)> = BTreeMap::new();
    for s in 0..k {
        if space.prob(s).is_zero() {
            continue;
        }
        let w = w_class.entry(sig[s]).or_insert_with(|| (BigRational::zero(), Vec::new()));
        w.0 += space.prob(s);
        w.1.push(s);
        if space.holds(i, s) {
            let u = u_class.entry(sig[s]).or_insert_with(|| (BigRational::zero(), Vec::new()));
            u.0 += space.prob(s) / &pe;
            u.1.push(s);
        }
    }
    let us: Vec<(u64, BigRational, Vec<usize>)> = u_class.into_iter().map(|(s, (m, v))| (s, m, v)).collect();
    let ws: Vec<(u64, BigRational, Vec<usize>)> = w_class.into_iter().map(|(s, (m, v))| (s, m, v)).collect();
    let (src, sink) = (0, 1);
    let u_node = |a: usize| 2 + a;
    let w_node = |b: usize| 2 + us.len() + b;
    let mut net = FlowNetwork::new(2 + us.len() + ws.len());
    for (a, (_, m, _)) in us.iter().enumerate() {
        net.add_edge(src, u_node(a), m.clone());
    }
    for (b, (_, m, _)) in ws.iter().enumerate() {
        net.add_edge(w_node(b), sink, m.clone());
    }
    let unbounded = BigRational::from_integer(2.into());
    let mut middle: Vec<(usize, usize, usize)> = Vec::new();
    for (a, (su, _, _)) in us.iter().enumerate() {
        for (b, (sw, _, _)) in ws.iter().enumerate() {
            // w may satisfy only events that u satisfies
            if sw & !su == 0 {
                let k = net.add_edge(u_node(a), w_node(b), unbounded.clone());
                middle.push((a, b, k));
            }
        }
    }
    let flow = net.max_flow(src, sink);
    if flow == BigRational::one() {
        let mut rows: BTreeMap<usize, Vec<(usize, BigRational)>> = BTreeMap::new();
        for &(a, b, k) in &middle {
            let f = &unbounded - &net.adj[u_node(a)][k].cap;
            if f.is_zero() {
                continue;
            }
            let (_, pa, members_u) = &us[a];
            let (_, qb, members_w) = &ws[b];
            // f_uw / p_u = F_ab · p_w / (P_a · Q_b), independent of u within the class
            let scale = &f / (pa * qb);
            for &u in members_u {
                let row = rows.entry(u).or_default();
                for &w in members_w {
                    row.push((w, &scale * space.prob(w)));
                }
            }
        }
        for &u in space.event(i) {
            rows.entry(u).or_insert_with(|| vec![(u, BigRational::one())]);
        }
        for row in rows.values_mut() {
            row.sort_by_key(|(w, _)| *w);
        }
        return Ok(Synthesis::Feasible(SynthesizedOracle::new(i, rows)));
    }
    let reach = net.residual_reachable(src);
    let violating: Vec<usize> = (0..us.len()).filter(|&a| reach[u_node(a)]).collect();
    let mut violating_set: Vec<usize> = violating.iter().flat_map(|&a| us[a].2.iter().copied()).collect();
    violating_set.sort_unstable();
    let mut neighborhood: Vec<usize> = (0..ws.len())
        .filter(|&b| violating.iter().any(|&a| ws[b].0 & !us[a].0 == 0))
        .flat_map(|b| ws[b].2.iter().copied())
        .collect();
    neighborhood.sort_unstable();
    let set_mass = violating.iter().fold(BigRational::zero(), |acc, &a| acc + &us[a].1);
    let neighborhood_mass = neighborhood.iter().fold(BigRational::zero(), |acc, &w| acc + space.prob(w));
    Ok(Synthesis::Infeasible(InfeasibilityCertificate { event: i, violating_set, neighborhood, set_mass, neighborhood_mass }))
}

/// True iff a resampling oracle for event `i` exists.
pub fn check_lopsided_association(space: &ExplicitSpace, i: usize) -> Result<bool, SynthError> {
    Ok(matches!(synthesize(space, i)?, Synthesis::Feasible(_)))
}

/// `Pr[E_i ∩ C_J] ≤ Pr[E_i] Pr[C_J]` with `C_J = ∩_{j∈J} Ē_j`, for every
/// `J ⊆ [n]∖Γ⁺(i)` with `Pr[C_J] > 0`.
pub fn check_lopsidependency(space: &ExplicitSpace, i: usize) -> Result<bool, SynthError> {
    let pe = space.check_event(i)?;
    let outside = space.outside_events(i);
    if outside.len() > MAX_OUTSIDE_EVENTS {
        return Err(SynthError::TooManyOutsideEvents(outside.len()));
    }
    let sig: Vec<u64> = (0..space.state_count()).map(|s| space.signature(&outside, s)).collect();
    for j in 0..(1u64 << outside.len()) {
        let (mut avoid, mut both) = (BigRational::zero(), BigRational::zero());
        for s in (0..space.state_count()).filter(|&s| sig[s] & j == 0) {
            avoid += space.prob(s);
            if space.holds(i, s) {
                both += space.prob(s);
            }
        }
        if avoid > BigRational::zero() && both > &pe * &avoid {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Event `i` is mutually independent of the events outside Γ⁺(i).
pub fn check_dependency(space: &ExplicitSpace, i: usize) -> Result<bool, SynthError> {
    let pe = space.check_event(i)?;
    let outside = space.outside_events(i);
    if outside.len() > MAX_OUTSIDE_EVENTS {
        return Err(SynthError::TooManyOutsideEvents(outside.len()));
    }
    let mut atoms: BTreeMap<u64, (BigRational, BigRational)> = BTreeMap::new();
    for s in 0..space.state_count() {
        let e = atoms.entry(space.signature(&outside, s)).or_insert_with(|| (BigRational::zero(), BigRational::zero()));
        e.0 += space.prob(s);
        if space.holds(i, s) {
            e.1 += space.prob(s);
        }
    }
    Ok(atoms.values().all(|(atom, joint)| *joint == &pe * atom))
}

/// μ|E_i pushed through the kernel equals μ, exactly.
pub fn check_r1_exact(space: &ExplicitSpace, oracle: &SynthesizedOracle) -> bool {
    let pe = space.event_probability(oracle.event);
    let mut out = vec![BigRational::zero(); space.state_count()];
    for &u in space.event(oracle.event) {
        let Some(row) = oracle.row(u) else { return false };
        let total = row.iter().fold(BigRational::zero(), |a, (_, q)| a + q);
        if total != BigRational::one() {
            return false;
        }
        let pu = space.prob(u) / &pe;
        for (w, q) in row {
            out[*w] += &pu * q;
        }
    }
    out.iter().zip(space.probabilities()).all(|(a, b)| a == b)
}

/// No support edge moves from a state where some `E_j`, `j ∉ Γ⁺(i)`, fails
/// to one where it holds.
pub fn check_r2_exact(space: &ExplicitSpace, oracle: &SynthesizedOracle) -> bool {
    let outside = space.outside_events(oracle.event);
    oracle.rows().all(|(u, row)| {
        row.iter().all(|(w, q)| q.is_zero() || outside.iter().all(|&j| !space.holds(j, *w) || space.holds(j, u)))
    })
}

/// Oracles for every event of a space, usable by the engine. States are indices.
#[derive(Debug, Clone)]
pub struct SynthesizedBundle {
    pub space: ExplicitSpace,
    pub oracles: Vec<SynthesizedOracle>,
    mu: WeightedIndex<f64>,
}

impl SynthesizedBundle {
    /// Fails with the first infeasible event's certificate.
    pub fn synthesize_all(space: ExplicitSpace) -> Result<Result<Self, InfeasibilityCertificate>, SynthError> {
        let mut oracles = Vec::with_capacity(space.event_count());
        for i in 0..space.event_count() {
            match synthesize(&space, i)? {
                Synthesis::Feasible(o) => oracles.push(o),
                Synthesis::Infeasible(c) => return Ok(Err(c)),
            }
        }
        let mu = WeightedIndex::new(&space.prob_f64).expect("probabilities sum to one");
        Ok(Ok(Self { space, oracles, mu }))
    }
}

impl OracleBundle for SynthesizedBundle {
    type State = usize;

    fn num_events(&self) -> usize {
        self.space.event_count()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.mu.sample(rng)
    }

    fn holds(&self, event: usize, state: &usize) -> bool {
        self.space.holds(event, *state)
    }

    fn resample<R: Rng + ?Sized>(&self, event: usize, state: &mut usize, rng: &mut R) -> Result<(), OracleError> {
        let oracle =
            self.oracles.get(event).ok_or(OracleError::UnknownEvent { index: event, n: self.oracles.len() })?;
        if !self.space.holds(event, *state) {
            return Err(OracleError::EventNotSatisfied(event));
        }
        *state = oracle.apply(*state, rng).expect("row exists for every state of the event");
        Ok(())
    }

    fn adjacent(&self, a: usize, b: usize) -> bool {
        a != b && self.space.graph().adjacent(a, b)
    }
}

/// Random space on `2..=max_states` states with integer weights 1..=4 and
/// `events` random nonempty events, each containing at most half the states.
pub fn random_space<R: Rng + ?Sized>(
    rng: &mut R,
    max_states: usize,
    events: usize,
    edge_prob: f64,
) -> ExplicitSpace {
    let k = rng.random_range(2..=max_states.max(2));
    let weights: Vec<u64> = (0..k).map(|_| rng.random_range(1..=4)).collect();
    let total: u64 = weights.iter().sum();
    let prob = weights.iter().map(|&w| BigRational::new(w.into(), total.into())).collect();
    let evs = (0..events)
        .map(|_| {
            let size = rng.random_range(1..=(k / 2).max(1));
            rand::seq::index::sample(rng, k, size).into_vec()
        })
        .collect();
    let graph = DependencyGraph::from_predicate(events, |_, _| rng.random_bool(edge_prob));
    ExplicitSpace::new(prob, evs, graph).expect("well-formed by construction")
}

/// Randomized search for a space and event where (Lop) holds but (LopA) fails.
pub fn search_lop_without_lopa<R: Rng + ?Sized>(rng: &mut R, attempts: usize) -> Option<(ExplicitSpace, usize)> {
    for _ in 0..attempts {
        let space = random_space(rng, 6, 3, 0.0);
        for i in 0..3 {
            if check_lopsidependency(&space, i).ok()? && !check_lopsided_association(&space, i).ok()? {
                return Some((space, i));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::seeded_rng;
    use proptest::prelude::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn uniform(k: usize) -> Vec<BigRational> {
        vec![q(1, k as i64); k]
    }

    /// Enumerates every monotone non-decreasing F of the outside indicators.
    fn lopa_direct(space: &ExplicitSpace, i: usize) -> bool {
        let outside = space.outside_events(i);
        let m = outside.len();
        assert!(m <= 4);
        let pe = space.event_probability(i);
        let sig: Vec<u64> = (0..space.state_count()).map(|s| space.signature(&outside, s)).collect();
        let points = 1usize << m;
        for table in 0u64..(1u64 << points) {
            let value = |x: usize| table >> x & 1 == 1;
            let monotone = (0..points).all(|x| (0..points).all(|y| x & !y != 0 || !value(x) || value(y)));
            if !monotone {
                continue;
            }
            let (mut pf, mut pef) = (BigRational::zero(), BigRational::zero());
            for s in 0..space.state_count() {
                if value(sig[s] as usize) {
                    pf += space.prob(s);
                    if space.holds(i, s) {
                        pef += space.prob(s);
                    }
                }
            }
            if pef < &pe * &pf {
                return false;
            }
        }
        true
    }

    fn two_bits() -> ExplicitSpace {
        // state = 2*x0 + x1; E0 = {x0 = 0}, E1 = {x1 = 0}
        ExplicitSpace::new(uniform(4), vec![vec![0, 1], vec![0, 2]], DependencyGraph::empty(2)).unwrap()
    }

    #[test]
    fn no_outside_events_gives_mu() {
        let space = ExplicitSpace::new(vec![q(1, 2), q(1, 3), q(1, 6)], vec![vec![0]], DependencyGraph::empty(1)).unwrap();
        let Synthesis::Feasible(o) = synthesize(&space, 0).unwrap() else { panic!() };
        assert_eq!(o.row(0).unwrap(), &[(0, q(1, 2)), (1, q(1, 3)), (2, q(1, 6))]);
    }

    #[test]
    fn variable_model_kernel_is_resample_x0() {
        let space = two_bits();
        let Synthesis::Feasible(o) = synthesize(&space, 0).unwrap() else { panic!() };
        // from (0, x1) the only legal targets keep x1, each with probability 1/2
        assert_eq!(o.row(0).unwrap(), &[(0, q(1, 2)), (2, q(1, 2))]);
        assert_eq!(o.row(1).unwrap(), &[(1, q(1, 2)), (3, q(1, 2))]);
        assert!(check_r1_exact(&space, &o));
        assert!(check_r2_exact(&space, &o));
        assert!(check_dependency(&space, 0).unwrap());
    }

    #[test]
    fn correlation_examples() {
        let pos = ExplicitSpace::new(uniform(2), vec![vec![0], vec![0]], DependencyGraph::empty(2)).unwrap();
        assert!(check_lopsided_association(&pos, 0).unwrap());
        let neg = ExplicitSpace::new(uniform(2), vec![vec![0], vec![1]], DependencyGraph::empty(2)).unwrap();
        assert!(!check_lopsided_association(&neg, 0).unwrap());
        let Synthesis::Infeasible(c) = synthesize(&neg, 0).unwrap() else { panic!() };
        assert!(c.set_mass > c.neighborhood_mass);
        assert_eq!(c.violating_set, vec![0]);
    }

    #[test]
    fn lop_without_lopa_hand_instance() {
        // s0 ∈ E1∩E2, s1 ∈ E0∩E1, s2 ∈ E0∩E2, s3 in none
        let space = ExplicitSpace::new(uniform(4), vec![vec![1, 2], vec![0, 1], vec![0, 2]], DependencyGraph::empty(3)).unwrap();
        assert!(check_lopsidependency(&space, 0).unwrap());
        assert!(!check_lopsided_association(&space, 0).unwrap());
        assert!(!lopa_direct(&space, 0));
    }

    #[test]
    fn random_search_finds_lop_without_lopa() {
        let mut rng = seeded_rng(7);
        let (space, i) = search_lop_without_lopa(&mut rng, 20_000).expect("instance exists");
        assert!(check_lopsidependency(&space, i).unwrap());
        assert!(!lopa_direct(&space, i));
    }

    #[test]
    fn zero_probability_event_rejected() {
        let space = ExplicitSpace::new(vec![q(1, 1), q(0, 1)], vec![vec![1]], DependencyGraph::empty(1)).unwrap();
        assert_eq!(synthesize(&space, 0).unwrap_err(), SynthError::ZeroProbability(0));
    }

    #[test]
    fn spec_json_round_trip() {
        let json = r#"{"states":3,"prob":["1/4","0.5","1/4"],"events":[[0],[1,2]],"graph":{"n":2,"edges":[[0,1]]}}"#;
        let spec: ExplicitSpaceSpec = serde_json::from_str(json).unwrap();
        let space = ExplicitSpace::from_spec(&spec).unwrap();
        assert_eq!(*space.prob(1), q(1, 2));
        let back = ExplicitSpace::from_spec(&space.to_spec()).unwrap();
        assert_eq!(back.probabilities(), space.probabilities());
        let bad: ExplicitSpaceSpec = serde_json::from_str(r#"{"states":2,"prob":["1/2","1/3"],"events":[],"graph":{"n":0}}"#).unwrap();
        assert!(matches!(ExplicitSpace::from_spec(&bad), Err(SynthError::BadTotal(_))));
    }

    #[test]
    fn bundle_runs_in_engine() {
        let bundle = SynthesizedBundle::synthesize_all(two_bits()).unwrap().unwrap();
        let out = crate::engine::run_seeded(&bundle, 4, crate::engine::RunConfig::default()).unwrap();
        assert!(out.log.terminated);
        assert!(!bundle.holds(0, &out.state) && !bundle.holds(1, &out.state));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn implication_chain_and_exact_kernels(seed in any::<u64>()) {
            let mut rng = seeded_rng(seed);
            let space = random_space(&mut rng, 7, 3, 0.3);
            for i in 0..3 {
                let dep = check_dependency(&space, i).unwrap();
                let lopa = check_lopsided_association(&space, i).unwrap();
                let lop = check_lopsidependency(&space, i).unwrap();
                prop_assert!(!dep || lopa);
                prop_assert!(!lopa || lop);
                prop_assert_eq!(lopa, lopa_direct(&space, i));
                match synthesize(&space, i).unwrap() {
                    Synthesis::Feasible(o) => {
                        prop_assert!(check_r1_exact(&space, &o));
                        prop_assert!(check_r2_exact(&space, &o));
                    }
                    Synthesis::Infeasible(c) => {
                        prop_assert!(c.set_mass > c.neighborhood_mass);
                    }
                }
            }
        }
    }
}
