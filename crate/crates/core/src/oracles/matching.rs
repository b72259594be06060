//! Uniform perfect matchings of K_{2n} with edge-set events.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{normalize_edge, Edge, EdgeSetEvent, StructureError};
use crate::engine::OracleError;
use crate::space::ResampleSpace;

/// `mate[v]` is the partner of `v`. JSON form is the sorted pair list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Edge>", into = "Vec<Edge>")]
pub struct PerfectMatching {
    mate: Vec<usize>,
}

impl PerfectMatching {
    pub fn from_edges(edges: &[Edge]) -> Result<Self, StructureError> {
        let n = 2 * edges.len();
        let mut mate = vec![usize::MAX; n];
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(StructureError::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(StructureError::SelfLoop(u, v));
            }
            if mate[u] != usize::MAX || mate[v] != usize::MAX {
                return Err(StructureError::NotAMatching);
            }
            mate[u] = v;
            mate[v] = u;
        }
        Ok(Self { mate })
    }

    pub fn vertex_count(&self) -> usize {
        self.mate.len()
    }

    pub fn mate(&self, v: usize) -> usize {
        self.mate[v]
    }

    pub fn contains(&self, (u, v): Edge) -> bool {
        u < self.mate.len() && self.mate[u] == v
    }

    pub fn edges(&self) -> Vec<Edge> {
        (0..self.mate.len()).filter(|&u| u < self.mate[u]).map(|u| (u, self.mate[u])).collect()
    }

    pub fn is_perfect(&self) -> bool {
        self.mate.iter().enumerate().all(|(u, &v)| v < self.mate.len() && v != u && self.mate[v] == u)
    }
}

impl TryFrom<Vec<Edge>> for PerfectMatching {
    type Error = StructureError;
    fn try_from(v: Vec<Edge>) -> Result<Self, Self::Error> {
        Self::from_edges(&v)
    }
}

impl From<PerfectMatching> for Vec<Edge> {
    fn from(m: PerfectMatching) -> Self {
        m.edges()
    }
}

/// Which lopsidependency rule the space reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchingDependency {
    /// `A ∼ B` iff `A ∪ B` is not a matching.
    #[default]
    NonMatchingUnion,
    /// `A ∼ B` iff `A` and `B` share a vertex; a supergraph of the above.
    VertexSharing,
}

/// Uniform measure on perfect matchings of K_{2n}; `vertices = 2n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchingSpace {
    pub vertices: usize,
    pub rule: MatchingDependency,
}

impl MatchingSpace {
    pub fn new(vertices: usize) -> Result<Self, StructureError> {
        if vertices % 2 == 1 {
            return Err(StructureError::OddVertexCount(vertices));
        }
        Ok(Self { vertices, rule: MatchingDependency::default() })
    }

    pub fn with_rule(mut self, rule: MatchingDependency) -> Self {
        self.rule = rule;
        self
    }
}

/// Rewires the edges of `a` one at a time, smallest first; each is kept with
/// probability 1/(2m+1) where `m = |M' ∖ A'|`, otherwise swapped with a random
/// ordered partner edge from `M' ∖ A'`.
pub fn matching_resample<R: Rng + ?Sized>(
    m: &mut PerfectMatching,
    a: &EdgeSetEvent,
    rng: &mut R,
) -> Result<(), OracleError> {
    if !a.edges().iter().all(|&e| m.contains(e)) {
        return Err(OracleError::EventNotSatisfied(0));
    }
    let mut free: Vec<Edge> = m.edges().into_iter().filter(|e| a.edges().binary_search(e).is_err()).collect();
    for &(u, v) in a.edges() {
        if free.is_empty() {
            free.push((u, v));
            continue;
        }
        let idx = rng.random_range(0..free.len());
        let (x, y) = if rng.random::<bool>() { free[idx] } else { (free[idx].1, free[idx].0) };
        let keep = rng.random_range(0..2 * free.len() + 1) == 0;
        if keep {
            free.push((u, v));
        } else {
            m.mate[u] = y;
            m.mate[y] = u;
            m.mate[v] = x;
            m.mate[x] = v;
            free[idx] = normalize_edge(u, y);
            free.push(normalize_edge(v, x));
        }
    }
    debug_assert!(m.is_perfect());
    Ok(())
}

impl ResampleSpace for MatchingSpace {
    type State = PerfectMatching;
    type Event = EdgeSetEvent;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PerfectMatching {
        let mut order: Vec<usize> = (0..self.vertices).collect();
        order.shuffle(rng);
        let mut mate = vec![0; self.vertices];
        for pair in order.chunks_exact(2) {
            mate[pair[0]] = pair[1];
            mate[pair[1]] = pair[0];
        }
        PerfectMatching { mate }
    }

    fn holds(&self, event: &EdgeSetEvent, state: &PerfectMatching) -> bool {
        event.edges().iter().all(|&e| state.contains(e))
    }

    fn resample<R: Rng + ?Sized>(
        &self,
        event: &EdgeSetEvent,
        state: &mut PerfectMatching,
        rng: &mut R,
    ) -> Result<(), OracleError> {
        matching_resample(state, event, rng)
    }

    fn conflicts(&self, a: &EdgeSetEvent, b: &EdgeSetEvent) -> bool {
        if a == b {
            return true;
        }
        match self.rule {
            MatchingDependency::VertexSharing => a.shares_vertex(b),
            MatchingDependency::NonMatchingUnion => {
                let union = EdgeSetEvent::new(a.edges().iter().chain(b.edges()).copied())
                    .expect("edges of events are not loops");
                !union.is_matching()
            }
        }
    }
}

/// All perfect matchings of K_{vertices}, each as a sorted edge list.
pub fn all_perfect_matchings(vertices: usize) -> Vec<PerfectMatching> {
    fn rec(left: &mut Vec<usize>, cur: &mut Vec<Edge>, out: &mut Vec<PerfectMatching>) {
        if left.is_empty() {
            let mut edges = cur.clone();
            edges.sort_unstable();
            out.push(PerfectMatching::from_edges(&edges).expect("pairing is a matching"));
            return;
        }
        let u = left.remove(0);
        for i in 0..left.len() {
            let v = left.remove(i);
            cur.push((u, v));
            rec(left, cur, out);
            cur.pop();
            left.insert(i, v);
        }
        left.insert(0, u);
    }
    let mut out = Vec::new();
    if vertices % 2 == 0 {
        rec(&mut (0..vertices).collect(), &mut Vec::new(), &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::seeded_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn index_of(all: &[PerfectMatching], m: &PerfectMatching) -> usize {
        all.iter().position(|x| x == m).unwrap()
    }

    #[test]
    fn enumeration_counts_are_double_factorials() {
        assert_eq!(all_perfect_matchings(2).len(), 1);
        assert_eq!(all_perfect_matchings(4).len(), 3);
        assert_eq!(all_perfect_matchings(6).len(), 15);
        assert_eq!(all_perfect_matchings(8).len(), 105);
    }

    #[test]
    fn empty_event_leaves_matching() {
        let space = MatchingSpace::new(6).unwrap();
        let mut rng = seeded_rng(3);
        let m0 = space.sample(&mut rng);
        let mut m = m0.clone();
        matching_resample(&mut m, &EdgeSetEvent::new([]).unwrap(), &mut rng).unwrap();
        assert_eq!(m, m0);
    }

    #[test]
    fn json_is_pair_list() {
        let m = PerfectMatching::from_edges(&[(0, 3), (1, 2)]).unwrap();
        assert_eq!(serde_json::to_string(&m).unwrap(), "[[0,3],[1,2]]");
        assert!(serde_json::from_str::<PerfectMatching>("[[0,1],[1,2]]").is_err());
    }

    fn uniformity(vertices: usize, a: EdgeSetEvent, trials: usize, seed: u64) {
        let all = all_perfect_matchings(vertices);
        let cond: Vec<&PerfectMatching> = all.iter().filter(|m| a.edges().iter().all(|&e| m.contains(e))).collect();
        let mut rng = seeded_rng(seed);
        let mut counts = vec![0usize; all.len()];
        for _ in 0..trials {
            let mut m = cond[rng.random_range(0..cond.len())].clone();
            matching_resample(&mut m, &a, &mut rng).unwrap();
            counts[index_of(&all, &m)] += 1;
        }
        let p = 1.0 / all.len() as f64;
        let sd = (trials as f64 * p * (1.0 - p)).sqrt();
        for c in &counts {
            assert!((*c as f64 - trials as f64 * p).abs() < 4.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn k4_single_edge_uniform() {
        uniformity(4, EdgeSetEvent::new([(0, 1)]).unwrap(), 1_000_000, 11);
    }

    #[test]
    fn k6_two_edges_uniform() {
        uniformity(6, EdgeSetEvent::new([(0, 1), (2, 3)]).unwrap(), 300_000, 12);
    }

    #[test]
    fn new_edges_touch_resampled_vertices() {
        let space = MatchingSpace::new(8).unwrap();
        let mut rng = seeded_rng(5);
        for _ in 0..20_000 {
            let mut m = space.sample(&mut rng);
            let before = m.clone();
            let es = before.edges();
            let k = rng.random_range(1..=3);
            let a = EdgeSetEvent::new(es[..k].iter().copied()).unwrap();
            let verts = a.vertices();
            matching_resample(&mut m, &a, &mut rng).unwrap();
            for e in m.edges() {
                if !before.contains(e) {
                    assert!(verts.contains(&e.0) || verts.contains(&e.1));
                }
            }
        }
    }

    #[test]
    fn dependency_rules() {
        let s = MatchingSpace::new(8).unwrap();
        let a = EdgeSetEvent::new([(0, 1)]).unwrap();
        let b = EdgeSetEvent::new([(0, 1), (2, 3)]).unwrap();
        let c = EdgeSetEvent::new([(1, 2)]).unwrap();
        assert!(!s.conflicts(&a, &b));
        assert!(s.conflicts(&a, &c));
        assert!(s.conflicts(&a, &a));
        let v = s.with_rule(MatchingDependency::VertexSharing);
        assert!(v.conflicts(&a, &b));
    }

    proptest! {
        #[test]
        fn output_is_perfect(seed in any::<u64>(), half in 1usize..10, k in 0usize..5) {
            let space = MatchingSpace::new(2 * half).unwrap();
            let mut rng = seeded_rng(seed);
            let mut m = space.sample(&mut rng);
            let es = m.edges();
            let a = EdgeSetEvent::new(es[..k.min(es.len())].iter().copied()).unwrap();
            matching_resample(&mut m, &a, &mut rng).unwrap();
            prop_assert!(m.is_perfect());
        }
    }
}
