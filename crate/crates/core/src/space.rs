//! Event-indexed bundles built from a resampling space, and product composition.

use rand::Rng;
use thiserror::Error;

use crate::engine::{OracleBundle, OracleError};
use crate::graph::DependencyGraph;

/// A probability space whose events are described by values of `Event`,
/// each with its own resampling oracle.
pub trait ResampleSpace: Sync {
    type State: Clone;
    type Event: Sync;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    fn holds(&self, event: &Self::Event, state: &Self::State) -> bool;

    /// Resampling oracle for `event`. Errors with `EventNotSatisfied(0)`
    /// when the event does not hold; bundles rewrite the index.
    fn resample<R: Rng + ?Sized>(
        &self,
        event: &Self::Event,
        state: &mut Self::State,
        rng: &mut R,
    ) -> Result<(), OracleError>;

    /// `b ∈ Γ⁺(a)`: equal events or adjacent in the space's dependency graph.
    fn conflicts(&self, a: &Self::Event, b: &Self::Event) -> bool;
}

/// A space together with an indexed list of its events.
#[derive(Debug, Clone)]
pub struct EventBundle<S: ResampleSpace> {
    pub space: S,
    pub events: Vec<S::Event>,
    graph: Option<DependencyGraph>,
}

impl<S: ResampleSpace> EventBundle<S> {
    /// Dependencies follow the space's conflict rule.
    pub fn new(space: S, events: Vec<S::Event>) -> Self {
        Self { space, events, graph: None }
    }

    /// Dependencies given explicitly. The graph must be a valid dependency
    /// graph for the space's oracles.
    pub fn with_graph(space: S, events: Vec<S::Event>, graph: DependencyGraph) -> Self {
        assert_eq!(graph.n(), events.len(), "graph size must match event count");
        Self { space, events, graph: Some(graph) }
    }

    pub fn event(&self, i: usize) -> &S::Event {
        &self.events[i]
    }
}

impl<S: ResampleSpace> OracleBundle for EventBundle<S> {
    type State = S::State;

    fn num_events(&self) -> usize {
        self.events.len()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> S::State {
        self.space.sample(rng)
    }

    fn holds(&self, event: usize, state: &S::State) -> bool {
        self.space.holds(&self.events[event], state)
    }

    fn resample<R: Rng + ?Sized>(
        &self,
        event: usize,
        state: &mut S::State,
        rng: &mut R,
    ) -> Result<(), OracleError> {
        let ev = self.events.get(event).ok_or(OracleError::UnknownEvent { index: event, n: self.events.len() })?;
        self.space.resample(ev, state, rng).map_err(|e| match e {
            OracleError::EventNotSatisfied(_) => OracleError::EventNotSatisfied(event),
            other => other,
        })
    }

    fn adjacent(&self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        match &self.graph {
            Some(g) => g.adjacent(a, b),
            None => self.space.conflicts(&self.events[a], &self.events[b]),
        }
    }
}

/// Joint event on a product space: each listed component event must occur.
/// Component indices are distinct and kept ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointEvent<E> {
    parts: Vec<(usize, E)>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProductError {
    #[error("joint event uses component {0} more than once")]
    RepeatedComponent(usize),
    #[error("component {component} out of range ({count} components)")]
    UnknownComponent { component: usize, count: usize },
    #[error("event {event} out of range for component {component}")]
    UnknownEvent { component: usize, event: usize },
    #[error("joint event is empty")]
    Empty,
}

impl<E> JointEvent<E> {
    pub fn new(mut parts: Vec<(usize, E)>) -> Result<Self, ProductError> {
        if parts.is_empty() {
            return Err(ProductError::Empty);
        }
        parts.sort_by_key(|(c, _)| *c);
        for w in parts.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(ProductError::RepeatedComponent(w[0].0));
            }
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[(usize, E)] {
        &self.parts
    }
}

/// Ω_1 × ... × Ω_N with the product measure.
#[derive(Debug, Clone)]
pub struct ProductSpace<S> {
    pub components: Vec<S>,
}

impl<S> ProductSpace<S> {
    pub fn new(components: Vec<S>) -> Self {
        Self { components }
    }
}

impl<S: ResampleSpace> ResampleSpace for ProductSpace<S> {
    type State = Vec<S::State>;
    type Event = JointEvent<S::Event>;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State {
        self.components.iter().map(|c| c.sample(rng)).collect()
    }

    fn holds(&self, event: &Self::Event, state: &Self::State) -> bool {
        event.parts.iter().all(|(c, e)| self.components[*c].holds(e, &state[*c]))
    }

    /// Calls each constituent oracle in succession, in component order.
    fn resample<R: Rng + ?Sized>(
        &self,
        event: &Self::Event,
        state: &mut Self::State,
        rng: &mut R,
    ) -> Result<(), OracleError> {
        if !self.holds(event, state) {
            return Err(OracleError::EventNotSatisfied(0));
        }
        for (c, e) in &event.parts {
            self.components[*c].resample(e, &mut state[*c], rng)?;
        }
        Ok(())
    }

    fn conflicts(&self, a: &Self::Event, b: &Self::Event) -> bool {
        // both part lists are sorted by component
        let (mut i, mut j) = (0, 0);
        while i < a.parts.len() && j < b.parts.len() {
            let (ca, ea) = &a.parts[i];
            let (cb, eb) = &b.parts[j];
            match ca.cmp(cb) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    if self.components[*ca].conflicts(ea, eb) {
                        return true;
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        false
    }
}

/// Combines per-space bundles into one bundle over the product space.
///
/// Joint event `J` occurs iff every `(space, event)` in it occurs; its oracle
/// applies the constituent oracles with independent randomness; `J ∼ J'` iff
/// they share a space whose events are equal or adjacent there.
pub fn product_compose<S>(
    bundles: Vec<EventBundle<S>>,
    joint_events: &[Vec<(usize, usize)>],
) -> Result<EventBundle<ProductSpace<S>>, ProductError>
where
    S: ResampleSpace,
    S::Event: Clone,
{
    let count = bundles.len();
    let mut events = Vec::with_capacity(joint_events.len());
    for joint in joint_events {
        let mut parts = Vec::with_capacity(joint.len());
        for &(component, event) in joint {
            let b = bundles.get(component).ok_or(ProductError::UnknownComponent { component, count })?;
            let ev = b.events.get(event).ok_or(ProductError::UnknownEvent { component, event })?;
            parts.push((component, ev.clone()));
        }
        events.push(JointEvent::new(parts)?);
    }
    let graph = bundles.iter().any(|b| b.graph.is_some()).then(|| {
        // explicit component graphs: derive the joint graph by component index
        let index_of: Vec<Vec<(usize, usize)>> = joint_events
            .iter()
            .map(|j| {
                let mut v = j.clone();
                v.sort_unstable();
                v
            })
            .collect();
        DependencyGraph::from_predicate(events.len(), |a, b| {
            index_of[a].iter().any(|&(ca, xa)| {
                index_of[b]
                    .iter()
                    .any(|&(cb, xb)| ca == cb && (xa == xb || bundles[ca].adjacent(xa, xb)))
            })
        })
    });
    let space = ProductSpace::new(bundles.into_iter().map(|b| b.space).collect());
    Ok(match graph {
        Some(g) => EventBundle::with_graph(space, events, g),
        None => EventBundle::new(space, events),
    })
}
