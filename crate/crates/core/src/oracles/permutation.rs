//! Uniform random permutations of [n] with pattern events.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::StructureError;
use crate::engine::OracleError;
use crate::space::ResampleSpace;

/// A bijection on `[n]`; `map[x] = π(x)`. JSON form is the index array.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self { map: (0..n).collect() }
    }

    pub fn new(map: Vec<usize>) -> Result<Self, StructureError> {
        let mut seen = vec![false; map.len()];
        for &y in &map {
            if y >= map.len() || std::mem::replace(&mut seen[y], true) {
                return Err(StructureError::NotAPermutation);
            }
        }
        Ok(Self { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn is_bijection(&self) -> bool {
        Self::new(self.map.clone()).is_ok()
    }

    /// Rank in lexicographic order, for tallying small cases.
    pub fn lex_rank(&self) -> usize {
        let n = self.map.len();
        let mut rank = 0;
        for i in 0..n {
            let smaller = self.map[i + 1..].iter().filter(|&&y| y < self.map[i]).count();
            rank = rank * (n - i) + smaller;
        }
        rank
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = StructureError;
    fn try_from(v: Vec<usize>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.map
    }
}

/// Event π(x_k) = y_k for all pairs. Pairs are sorted by `x`; x's and y's are distinct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatternEvent {
    pairs: Vec<(usize, usize)>,
}

impl PatternEvent {
    pub fn new(mut pairs: Vec<(usize, usize)>) -> Result<Self, StructureError> {
        pairs.sort_unstable();
        pairs.dedup();
        let mut ys: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        ys.sort_unstable();
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) || ys.windows(2).any(|w| w[0] == w[1]) {
            return Err(StructureError::BadPattern);
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn holds(&self, pi: &Permutation) -> bool {
        self.pairs.iter().all(|&(x, y)| x < pi.len() && pi.map[x] == y)
    }

    /// Shares a domain or a range value.
    pub fn overlaps(&self, other: &Self) -> bool {
        self.pairs.iter().any(|&(x, y)| other.pairs.iter().any(|&(x2, y2)| x == x2 || y == y2))
    }
}

/// Partial Fisher–Yates over vbl(event), with x_1 < ... < x_t processed from x_t down.
pub fn permutation_resample<R: Rng + ?Sized>(
    pi: &mut Permutation,
    event: &PatternEvent,
    rng: &mut R,
) -> Result<(), OracleError> {
    if !event.holds(pi) {
        return Err(OracleError::EventNotSatisfied(0));
    }
    let n = pi.len();
    let xs: Vec<usize> = event.pairs.iter().map(|p| p.0).collect();
    let mut excluded = vec![false; n];
    for &x in &xs {
        excluded[x] = true;
    }
    // free positions are [n] minus {x_1..x_{i-1}}; x_i itself is allowed
    let mut free: Vec<usize> = (0..n).filter(|&z| !excluded[z]).collect();
    for &x in xs.iter().rev() {
        free.push(x);
        let z = free[rng.random_range(0..free.len())];
        pi.map.swap(x, z);
    }
    debug_assert!(pi.is_bijection());
    Ok(())
}

/// Uniform measure on permutations of `[n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PermutationSpace {
    pub n: usize,
}

impl PermutationSpace {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl ResampleSpace for PermutationSpace {
    type State = Permutation;
    type Event = PatternEvent;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Permutation {
        let mut map: Vec<usize> = (0..self.n).collect();
        map.shuffle(rng);
        Permutation { map }
    }

    fn holds(&self, event: &PatternEvent, state: &Permutation) -> bool {
        event.holds(state)
    }

    fn resample<R: Rng + ?Sized>(
        &self,
        event: &PatternEvent,
        state: &mut Permutation,
        rng: &mut R,
    ) -> Result<(), OracleError> {
        permutation_resample(state, event, rng)
    }

    fn conflicts(&self, a: &PatternEvent, b: &PatternEvent) -> bool {
        a == b || a.overlaps(b)
    }
}

/// All permutations of `[n]` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Permutation>) {
        if prefix.len() == used.len() {
            out.push(Permutation { map: prefix.clone() });
            return;
        }
        for y in 0..used.len() {
            if !used[y] {
                used[y] = true;
                prefix.push(y);
                rec(prefix, used, out);
                prefix.pop();
                used[y] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}
