//! Independent random variables with the Moser–Tardos resampling oracle.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::engine::OracleError;
use crate::space::ResampleSpace;

/// A finite marginal distribution over values `0..weights.len()`.
#[derive(Debug, Clone)]
pub struct Marginal {
    weights: Vec<f64>,
    dist: WeightedIndex<f64>,
}

impl Marginal {
    pub fn new(weights: Vec<f64>) -> Option<Self> {
        let dist = WeightedIndex::new(&weights).ok()?;
        Some(Self { weights, dist })
    }

    pub fn uniform(k: usize) -> Self {
        Self::new(vec![1.0; k]).expect("k > 0")
    }

    pub fn probability(&self, value: u32) -> f64 {
        let total: f64 = self.weights.iter().sum();
        self.weights.get(value as usize).map_or(0.0, |w| w / total)
    }

    pub fn support(&self) -> usize {
        self.weights.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.dist.sample(rng) as u32
    }
}

/// Product space of independent finite variables.
#[derive(Debug, Clone)]
pub struct VariableSpace {
    pub marginals: Vec<Marginal>,
}

impl VariableSpace {
    pub fn new(marginals: Vec<Marginal>) -> Self {
        Self { marginals }
    }

    /// `count` variables, each uniform on `0..k`.
    pub fn uniform(count: usize, k: usize) -> Self {
        Self::new(vec![Marginal::uniform(k); count])
    }

    pub fn probability(&self, event: &VariableEvent) -> f64 {
        event.assignment.iter().map(|&(v, x)| self.marginals[v].probability(x)).product()
    }
}

/// Event `X_a = v_a` for every listed pair; A_i is the set of listed variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableEvent {
    assignment: Vec<(usize, u32)>,
}

impl VariableEvent {
    /// Pairs are sorted by variable. A repeated variable makes the event
    /// impossible unless the values agree; duplicates are collapsed.
    pub fn new(mut assignment: Vec<(usize, u32)>) -> Self {
        assignment.sort_unstable();
        assignment.dedup();
        Self { assignment }
    }

    pub fn assignment(&self) -> &[(usize, u32)] {
        &self.assignment
    }

    pub fn variables(&self) -> impl Iterator<Item = usize> + '_ {
        self.assignment.iter().map(|&(v, _)| v)
    }
}

/// Replaces the listed variables by fresh samples, in the given order.
pub fn variable_resample<R: Rng + ?Sized>(
    space: &VariableSpace,
    state: &mut [u32],
    vars: impl IntoIterator<Item = usize>,
    rng: &mut R,
) {
    for v in vars {
        state[v] = space.marginals[v].sample(rng);
    }
}

impl ResampleSpace for VariableSpace {
    type State = Vec<u32>;
    type Event = VariableEvent;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u32> {
        self.marginals.iter().map(|m| m.sample(rng)).collect()
    }

    fn holds(&self, event: &VariableEvent, state: &Vec<u32>) -> bool {
        event.assignment.iter().all(|&(v, x)| state[v] == x)
    }

    fn resample<R: Rng + ?Sized>(
        &self,
        event: &VariableEvent,
        state: &mut Vec<u32>,
        rng: &mut R,
    ) -> Result<(), OracleError> {
        if !self.holds(event, state) {
            return Err(OracleError::EventNotSatisfied(0));
        }
        let mut vars: Vec<usize> = event.variables().collect();
        vars.dedup();
        variable_resample(self, state, vars, rng);
        Ok(())
    }

    fn conflicts(&self, a: &VariableEvent, b: &VariableEvent) -> bool {
        a.variables().any(|v| b.variables().any(|w| w == v))
    }
}
