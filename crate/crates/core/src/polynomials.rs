//! Shearer's independence polynomials, the GLL / cluster-expansion / Shearer
//! criteria, automatic slack, resample-count bounds and stable-sequence mass.

use std::collections::HashMap;
use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{full_mask, iter_bits, DependencyGraph, GraphError, Mask, DEFAULT_ENUMERATION_CAP};

/// Absolute tolerance for float identity checks and boundary diagnostics.
pub const TOLERANCE: f64 = 1e-12;

/// Largest `n` accepted by [`sequence_mass`].
pub const SEQUENCE_MASS_MAX_N: usize = 16;

/// Largest total-size budget accepted by [`sequence_mass`].
pub const SEQUENCE_MASS_MAX_BUDGET: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("value {value} at index {index} outside {range}")]
    OutOfRange { index: usize, value: f64, range: &'static str },
    #[error("criterion mismatch: {0}")]
    CriterionMismatch(String),
    #[error("point is not in the Shearer region")]
    OutsideRegion,
    #[error("set is not independent")]
    NotIndependent,
    #[error("enumeration too large: {0}")]
    TooLarge(String),
}

/// Ordered field used by the tables: `f64` or exact `BigRational`.
pub trait Scalar: Clone + Num + PartialOrd + Debug + Send + Sync {
    fn to_f64(&self) -> f64;
    fn from_f64(x: f64) -> Option<Self>;
}

impl Scalar for f64 {
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_f64(x: f64) -> Option<Self> {
        x.is_finite().then_some(x)
    }
}

impl Scalar for BigRational {
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x)
    }
}

/// Parses `"3/7"`, `"0.25"` or `"1"` into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().ok()?;
        let b: BigInt = b.trim().parse().ok()?;
        return (!b.is_zero()).then(|| BigRational::new(a, b));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let digits = format!("{int}{frac}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let num: BigInt = digits.parse().ok()?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(num, den);
    Some(if neg { -r } else { r })
}

/// `T_S = T_{S−a} + sign · w_a · T_{S∖Γ⁺(a)}` over all masks, with `a` the lowest bit of `S`.
fn independence_table<T: Scalar>(closed: &[Mask], w: &[T], negate: bool) -> Vec<T> {
    let n = closed.len();
    let total = 1usize << n;
    let mut t: Vec<T> = Vec::with_capacity(total);
    t.push(T::one());
    for s in 1..total {
        let a = s.trailing_zeros() as usize;
        let without = s & (s - 1);
        let outside = s & !(closed[a] as usize);
        let term = w[a].clone() * t[outside].clone();
        let v = if negate { t[without].clone() - term } else { t[without].clone() + term };
        t.push(v);
    }
    t
}

/// Where a probability vector sits relative to the Shearer region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionStatus {
    Inside,
    /// Some `|q̆_S|` is within tolerance of zero.
    Boundary,
    Outside,
}

/// q̆_S for every `S ⊆ [n]` and q_I for every independent `I`.
#[derive(Debug, Clone)]
pub struct PolynomialTable<T: Scalar = f64> {
    graph: DependencyGraph,
    p: Vec<T>,
    breve: Vec<T>,
    independent: Vec<Mask>,
    q: Vec<T>,
}

impl<T: Scalar> PolynomialTable<T> {
    pub fn build(graph: &DependencyGraph, p: &[T]) -> Result<Self, PolyError> {
        Self::build_with_cap(graph, p, DEFAULT_ENUMERATION_CAP)
    }

    pub fn build_with_cap(graph: &DependencyGraph, p: &[T], cap: usize) -> Result<Self, PolyError> {
        let n = graph.n();
        if p.len() != n {
            return Err(PolyError::LengthMismatch { expected: n, got: p.len() });
        }
        for (i, v) in p.iter().enumerate() {
            if *v < T::zero() || *v > T::one() {
                return Err(PolyError::OutOfRange { index: i, value: v.to_f64(), range: "[0, 1]" });
            }
        }
        let independent = graph.independent_masks_with_cap(cap)?;
        let closed = graph.closed_masks().expect("n within cap");
        let breve = independence_table(closed, p, true);
        let full = full_mask(n);
        let q = independent
            .iter()
            .map(|&i| {
                let pi = iter_bits(i).fold(T::one(), |acc, j| acc * p[j].clone());
                pi * breve[(full & !graph.closed_neighborhood_mask(i)) as usize].clone()
            })
            .collect();
        Ok(Self { graph: graph.clone(), p: p.to_vec(), breve, independent, q })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn graph(&self) -> &DependencyGraph {
        &self.graph
    }

    pub fn p(&self) -> &[T] {
        &self.p
    }

    /// q̆_S.
    pub fn breve(&self, s: Mask) -> &T {
        &self.breve[s as usize]
    }

    pub fn breve_values(&self) -> &[T] {
        &self.breve
    }

    /// Independent sets in increasing mask order.
    pub fn independent_sets(&self) -> &[Mask] {
        &self.independent
    }

    /// q_S; zero for dependent `S`.
    pub fn q(&self, s: Mask) -> T {
        match self.independent.binary_search(&s) {
            Ok(k) => self.q[k].clone(),
            Err(_) => T::zero(),
        }
    }

    pub fn q_values(&self) -> impl Iterator<Item = (Mask, &T)> {
        self.independent.iter().copied().zip(&self.q)
    }

    pub fn q_empty(&self) -> T {
        self.q[0].clone()
    }

    /// Strict membership: every q̆_S > 0.
    pub fn in_shearer_region(&self) -> bool {
        self.breve.iter().all(|v| *v > T::zero())
    }

    pub fn min_breve(&self) -> T {
        self.breve.iter().fold(T::one(), |m, v| if *v < m { v.clone() } else { m })
    }

    pub fn region_status(&self) -> RegionStatus {
        let min = self.min_breve().to_f64();
        if min.abs() <= TOLERANCE {
            RegionStatus::Boundary
        } else if self.in_shearer_region() {
            RegionStatus::Inside
        } else {
            RegionStatus::Outside
        }
    }

    /// q_{i} / q_∅.
    pub fn singleton_ratio(&self, i: usize) -> T {
        self.q(1 << i) / self.q_empty()
    }

    /// ε = q_∅ / (2 Σ_i q_{i}).
    pub fn shearer_slack(&self) -> T {
        let sum = (0..self.n()).fold(T::zero(), |acc, i| acc + self.q(1 << i));
        let two = T::one() + T::one();
        self.q_empty() / (two * sum)
    }

    /// Rebuilds the table at `factor · p`.
    pub fn scaled(&self, factor: &T) -> Result<Self, PolyError> {
        let p: Vec<T> = self.p.iter().map(|v| v.clone() * factor.clone()).collect();
        Self::build(&self.graph, &p)
    }
}

impl PolynomialTable<f64> {
    /// Exact table at the same probabilities, converted from their binary values.
    pub fn to_exact(&self) -> PolynomialTable<BigRational> {
        let p: Vec<BigRational> = self.p.iter().map(|&v| BigRational::from_float(v).expect("finite")).collect();
        PolynomialTable::build(&self.graph, &p).expect("same shape")
    }
}

fn check_len(n: usize, v: &[f64]) -> Result<(), PolyError> {
    if v.len() == n {
        Ok(())
    } else {
        Err(PolyError::LengthMismatch { expected: n, got: v.len() })
    }
}

/// p_i ≤ (1 − ε) x_i ∏_{j∈Γ(i)} (1 − x_j) for all `i`.
pub fn check_gll_with_slack(g: &DependencyGraph, p: &[f64], x: &[f64], epsilon: f64) -> Result<bool, PolyError> {
    check_len(g.n(), p)?;
    check_len(g.n(), x)?;
    for (i, &v) in x.iter().enumerate() {
        if !(v > 0.0 && v < 1.0) {
            return Err(PolyError::OutOfRange { index: i, value: v, range: "(0, 1)" });
        }
    }
    Ok((0..g.n()).all(|i| {
        let rhs = x[i] * g.neighbors(i).iter().map(|&j| 1.0 - x[j]).product::<f64>();
        p[i] <= (1.0 - epsilon) * rhs
    }))
}

/// p_i ≤ x_i ∏_{j∈Γ(i)} (1 − x_j) for all `i`.
pub fn check_gll(g: &DependencyGraph, p: &[f64], x: &[f64]) -> Result<bool, PolyError> {
    check_gll_with_slack(g, p, x, 0.0)
}

/// Y_S = Σ_{I⊆S, I∈Ind} y^I by the recursion `Y_A = Y_{A−a} + y_a Y_{A∖Γ⁺(a)}`
/// on the subgraph induced by `set`.
pub fn independent_weight(g: &DependencyGraph, y: &[f64], set: &[usize]) -> Result<f64, PolyError> {
    let mut set = set.to_vec();
    set.sort_unstable();
    set.dedup();
    let k = set.len();
    if k > DEFAULT_ENUMERATION_CAP {
        return Err(GraphError::CapExceeded { n: k, cap: DEFAULT_ENUMERATION_CAP }.into());
    }
    let closed: Vec<Mask> = set
        .iter()
        .enumerate()
        .map(|(a, &u)| {
            set.iter().enumerate().filter(|&(b, &v)| a == b || g.adjacent(u, v)).fold(0, |m, (b, _)| m | 1 << b)
        })
        .collect();
    let w: Vec<f64> = set.iter().map(|&u| y[u]).collect();
    Ok(*independence_table(&closed, &w, false).last().expect("non-empty table"))
}

/// Y_S for every mask `S` (requires `n` within the enumeration cap).
pub fn y_table(g: &DependencyGraph, y: &[f64]) -> Result<Vec<f64>, PolyError> {
    check_len(g.n(), y)?;
    if g.n() > DEFAULT_ENUMERATION_CAP {
        return Err(GraphError::CapExceeded { n: g.n(), cap: DEFAULT_ENUMERATION_CAP }.into());
    }
    Ok(independence_table(g.closed_masks().expect("within cap"), y, false))
}

/// (1 + ε) p_i · Y_{Γ⁺(i)} ≤ y_i for all `i`.
pub fn check_cll_with_slack(g: &DependencyGraph, p: &[f64], y: &[f64], epsilon: f64) -> Result<bool, PolyError> {
    check_len(g.n(), p)?;
    check_len(g.n(), y)?;
    for (i, &v) in y.iter().enumerate() {
        if !(v > 0.0) {
            return Err(PolyError::OutOfRange { index: i, value: v, range: "(0, ∞)" });
        }
    }
    for i in 0..g.n() {
        let mut nb = g.neighbors(i).to_vec();
        nb.push(i);
        if (1.0 + epsilon) * p[i] * independent_weight(g, y, &nb)? > y[i] {
            return Ok(false);
        }
    }
    Ok(true)
}

/// p_i · Y_{Γ⁺(i)} ≤ y_i for all `i`.
pub fn check_cll(g: &DependencyGraph, p: &[f64], y: &[f64]) -> Result<bool, PolyError> {
    check_cll_with_slack(g, p, y, 0.0)
}

/// Upper bound `∏_C (1 + Σ_{j∈C} y_j)` on Y_S when the cliques cover `S`;
/// an independent set meets each clique at most once.
pub fn clique_cover_bound<'a>(y: impl Fn(usize) -> f64, cliques: impl IntoIterator<Item = &'a [usize]>) -> f64 {
    cliques.into_iter().map(|c| 1.0 + c.iter().map(|&j| y(j)).sum::<f64>()).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriterionKind {
    Gll,
    Cll,
    Shearer,
}

/// Parameters selecting one of the resample-count theorems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionParams {
    pub kind: CriterionKind,
    #[serde(default)]
    pub x: Option<Vec<f64>>,
    #[serde(default)]
    pub y: Option<Vec<f64>>,
    #[serde(default)]
    pub epsilon: f64,
}

impl CriterionParams {
    pub fn gll(x: Vec<f64>, epsilon: f64) -> Self {
        Self { kind: CriterionKind::Gll, x: Some(x), y: None, epsilon }
    }

    pub fn cll(y: Vec<f64>, epsilon: f64) -> Self {
        Self { kind: CriterionKind::Cll, x: None, y: Some(y), epsilon }
    }

    pub fn shearer(epsilon: f64) -> Self {
        Self { kind: CriterionKind::Shearer, x: None, y: None, epsilon }
    }
}

/// Resample count `s` with Pr[more than `s` resamples] ≤ e^{−t}.
///
/// GLL and CLL use only the parameter vectors; Shearer needs the table at `p`.
/// With `epsilon > 0` the slack form of the theorem is used.
pub fn predicted_bound(params: &CriterionParams, table: Option<&PolynomialTable>, t: f64) -> Result<f64, PolyError> {
    // `+ 0.0` turns the −0.0 of an empty sum into 0.0
    bound_formula(params, table, t).map(|b| b + 0.0)
}

fn bound_formula(params: &CriterionParams, table: Option<&PolynomialTable>, t: f64) -> Result<f64, PolyError> {
    let eps = params.epsilon;
    if !(0.0..1.0).contains(&eps) {
        return Err(PolyError::OutOfRange { index: 0, value: eps, range: "[0, 1)" });
    }
    match params.kind {
        CriterionKind::Gll => {
            let x = params.x.as_ref().ok_or_else(|| PolyError::CriterionMismatch("GLL needs x".into()))?;
            let log_sum: f64 = x.iter().map(|&v| (1.0 / (1.0 - v)).ln()).sum();
            if eps > 0.0 {
                Ok((t + log_sum) / eps)
            } else {
                let ratio: f64 = x.iter().map(|&v| v / (1.0 - v)).sum();
                Ok(4.0 * ratio * (log_sum + 1.0 + t))
            }
        }
        CriterionKind::Cll => {
            let y = params.y.as_ref().ok_or_else(|| PolyError::CriterionMismatch("CLL needs y".into()))?;
            let log_sum: f64 = y.iter().map(|&v| v.ln_1p()).sum();
            if eps > 0.0 {
                Ok(2.0 / eps * (log_sum + t))
            } else {
                Ok(4.0 * y.iter().sum::<f64>() * (log_sum + 1.0 + t))
            }
        }
        CriterionKind::Shearer => {
            let table = table.ok_or_else(|| PolyError::CriterionMismatch("Shearer needs a table".into()))?;
            if eps > 0.0 {
                let shifted = table.scaled(&(1.0 + eps))?;
                if !shifted.in_shearer_region() {
                    return Err(PolyError::OutsideRegion);
                }
                Ok(2.0 / eps * ((1.0 / shifted.q_empty()).ln() + t))
            } else {
                if !table.in_shearer_region() {
                    return Err(PolyError::OutsideRegion);
                }
                let r: Vec<f64> = (0..table.n()).map(|i| table.singleton_ratio(i)).collect();
                let log_sum: f64 = r.iter().map(|v| v.ln_1p()).sum();
                Ok(4.0 * r.iter().sum::<f64>() * (log_sum + 1.0 + t))
            }
        }
    }
}

/// Σ p_𝓘 over proper stable set sequences starting at `j` with total size ≤ `budget`.
pub fn sequence_mass(g: &DependencyGraph, p: &[f64], j: Mask, budget: usize) -> Result<f64, PolyError> {
    check_len(g.n(), p)?;
    if g.n() > SEQUENCE_MASS_MAX_N {
        return Err(PolyError::TooLarge(format!("n = {} exceeds {}", g.n(), SEQUENCE_MASS_MAX_N)));
    }
    if budget > SEQUENCE_MASS_MAX_BUDGET {
        return Err(PolyError::TooLarge(format!("budget {budget} exceeds {SEQUENCE_MASS_MAX_BUDGET}")));
    }
    if j & !g.full_mask() != 0 || !g.is_independent_mask(j) {
        return Err(PolyError::NotIndependent);
    }
    let mut memo = HashMap::new();
    Ok(mass(g, p, j, budget, &mut memo))
}

fn mass(g: &DependencyGraph, p: &[f64], j: Mask, budget: usize, memo: &mut HashMap<(Mask, usize), f64>) -> f64 {
    let size = j.count_ones() as usize;
    if j == 0 || size > budget {
        return 0.0;
    }
    if let Some(&v) = memo.get(&(j, budget)) {
        return v;
    }
    let weight: f64 = iter_bits(j).map(|i| p[i]).product();
    let hood = g.closed_neighborhood_mask(j);
    let rest = budget - size;
    let mut tail = 0.0;
    if rest > 0 {
        // nonempty submasks of Γ⁺(J)
        let mut sub = hood;
        while sub != 0 {
            if g.is_independent_mask(sub) {
                tail += mass(g, p, sub, rest, memo);
            }
            sub = (sub - 1) & hood;
        }
    }
    let v = weight * (1.0 + tail);
    memo.insert((j, budget), v);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() <= TOLERANCE
    }

    /// q̆_S straight from the alternating sum over independent subsets.
    fn breve_direct(g: &DependencyGraph, p: &[f64], s: Mask) -> f64 {
        g.independent_masks()
            .unwrap()
            .into_iter()
            .filter(|&i| i & !s == 0)
            .map(|i| {
                let sign = if i.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                sign * iter_bits(i).map(|k| p[k]).product::<f64>()
            })
            .sum()
    }

    /// q_S from its defining alternating sum over independent supersets.
    fn q_direct(g: &DependencyGraph, p: &[f64], s: Mask) -> f64 {
        g.independent_masks()
            .unwrap()
            .into_iter()
            .filter(|&i| s & !i == 0)
            .map(|i| {
                let sign = if (i & !s).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                sign * iter_bits(i).map(|k| p[k]).product::<f64>()
            })
            .sum()
    }

    fn triangle() -> DependencyGraph {
        DependencyGraph::complete(3)
    }

    fn edge() -> DependencyGraph {
        DependencyGraph::path(2)
    }

    #[test]
    fn spec_table_values() {
        let t = PolynomialTable::build(&DependencyGraph::empty(2), &[0.5, 0.5]).unwrap();
        assert!(approx(*t.breve(0b11), 0.25));
        assert!(approx(t.q_empty(), 0.25));
        assert!(approx(t.q(0b01), 0.25));
        let t = PolynomialTable::build(&triangle(), &[0.1, 0.1, 0.1]).unwrap();
        assert!(approx(*t.breve(0b111), 0.7));
        assert_eq!(*t.breve(0), 1.0);
    }

    #[test]
    fn region_examples() {
        let single = DependencyGraph::empty(1);
        assert!(PolynomialTable::build(&single, &[0.999]).unwrap().in_shearer_region());
        let t = PolynomialTable::build(&edge(), &[0.25, 0.25]).unwrap();
        assert!(t.in_shearer_region());
        assert!(approx(*t.breve(0b11), 0.5));
        let t = PolynomialTable::build(&edge(), &[0.5, 0.5]).unwrap();
        assert!(!t.in_shearer_region());
        assert_eq!(t.region_status(), RegionStatus::Boundary);
        let t = PolynomialTable::build(&edge(), &[0.6, 0.5]).unwrap();
        assert_eq!(t.region_status(), RegionStatus::Outside);
    }

    #[test]
    fn empty_instance() {
        let t = PolynomialTable::<f64>::build(&DependencyGraph::empty(0), &[]).unwrap();
        assert!(t.in_shearer_region());
        assert_eq!(t.q_empty(), 1.0);
        let b = predicted_bound(&CriterionParams::cll(vec![], 0.0), None, 1.0).unwrap();
        assert!(b == 0.0 && b.is_sign_positive());
    }

    #[test]
    fn gll_examples() {
        assert!(check_gll(&DependencyGraph::empty(2), &[0.2, 0.3], &[0.2, 0.3]).unwrap());
        assert!(check_gll(&DependencyGraph::empty(1), &[0.5], &[0.5]).unwrap());
        assert!(!check_gll(&edge(), &[0.3, 0.3], &[0.5, 0.5]).unwrap());
        assert!(check_gll(&edge(), &[0.3], &[0.5]).is_err());
    }

    #[test]
    fn cll_examples() {
        let g = DependencyGraph::empty(1);
        let y = 0.5;
        assert!(check_cll(&g, &[y / (1.0 + y)], &[y]).unwrap());
        assert!(!check_cll(&g, &[y / (1.0 + y) + 1e-9], &[y]).unwrap());
    }

    #[test]
    fn slack_and_singleton_examples() {
        let t = PolynomialTable::build(&DependencyGraph::empty(1), &[0.5]).unwrap();
        assert!(approx(t.shearer_slack(), 0.5));
        assert!(approx(t.singleton_ratio(0), 1.0));
        let t = PolynomialTable::build(&DependencyGraph::empty(2), &[0.5, 0.5]).unwrap();
        assert!(approx(t.shearer_slack(), 0.25));
    }

    #[test]
    fn bound_formulas() {
        let t = 2.0;
        let lovasz = predicted_bound(&CriterionParams::gll(vec![0.5], 0.0), None, t).unwrap();
        assert!(approx(lovasz, 4.0 * (2f64.ln() + 1.0 + t)));
        let slack = predicted_bound(&CriterionParams::gll(vec![0.5, 0.25], 0.1), None, t).unwrap();
        assert!(approx(slack, 10.0 * (t + 2f64.ln() + (4.0f64 / 3.0).ln())));
        let cll = predicted_bound(&CriterionParams::cll(vec![1.0, 1.0], 0.0), None, t).unwrap();
        assert!(approx(cll, 8.0 * (2.0 * 2f64.ln() + 1.0 + t)));
        let cll_s = predicted_bound(&CriterionParams::cll(vec![1.0], 0.5), None, t).unwrap();
        assert!(approx(cll_s, 4.0 * (2f64.ln() + t)));
        let table = PolynomialTable::build(&DependencyGraph::empty(1), &[0.25]).unwrap();
        let sh = predicted_bound(&CriterionParams::shearer(0.0), Some(&table), t).unwrap();
        let r: f64 = 1.0 / 3.0;
        assert!(approx(sh, 4.0 * r * (r.ln_1p() + 1.0 + t)));
        let sh_s = predicted_bound(&CriterionParams::shearer(0.5), Some(&table), t).unwrap();
        assert!(approx(sh_s, 4.0 * ((1.0 / 0.625f64).ln() + t)));
        assert!(predicted_bound(&CriterionParams::shearer(0.0), None, t).is_err());
        assert!(predicted_bound(&CriterionParams { kind: CriterionKind::Gll, x: None, y: None, epsilon: 0.0 }, None, t).is_err());
    }

    #[test]
    fn sequence_mass_examples() {
        let g = DependencyGraph::path(3);
        let p = [0.1, 0.2, 0.3];
        assert!(approx(sequence_mass(&g, &p, 0b001, 1).unwrap(), 0.1));
        let single = DependencyGraph::empty(1);
        let m = sequence_mass(&single, &[0.2], 1, 400).unwrap();
        assert!((m - 0.25).abs() < 1e-12);
        assert!(sequence_mass(&g, &p, 0b011, 5).is_err());
    }

    /// Every sequence explicitly, as an oracle for the memoized recursion.
    fn sequence_mass_brute(g: &DependencyGraph, p: &[f64], j: Mask, budget: usize) -> f64 {
        let size = j.count_ones() as usize;
        if j == 0 || size > budget {
            return 0.0;
        }
        let w: f64 = iter_bits(j).map(|i| p[i]).product();
        let hood = g.closed_neighborhood_mask(j);
        let mut total = w;
        for sub in 1..=hood {
            if sub & !hood == 0 && g.is_independent_mask(sub) {
                total += w * sequence_mass_brute(g, p, sub, budget - size);
            }
        }
        total
    }

    #[test]
    fn sequence_mass_matches_brute_force() {
        let g = DependencyGraph::cycle(4);
        let p = [0.1, 0.15, 0.2, 0.05];
        for j in g.independent_masks().unwrap().into_iter().skip(1) {
            for b in 0..7 {
                let a = sequence_mass(&g, &p, j, b).unwrap();
                let c = sequence_mass_brute(&g, &p, j, b);
                assert!((a - c).abs() < 1e-14, "{j} {b}");
            }
        }
    }

    fn random_instance(seed: u64, n: usize, density: f64, scale: f64) -> (DependencyGraph, Vec<f64>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = DependencyGraph::from_predicate(n, |_, _| rng.random_bool(density));
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..scale)).collect();
        (g, p)
    }

    fn in_region_instance(seed: u64, n: usize) -> (DependencyGraph, Vec<f64>, PolynomialTable) {
        let (g, mut p) = random_instance(seed, n, 0.4, 0.4);
        loop {
            let t = PolynomialTable::build(&g, &p).unwrap();
            if t.in_shearer_region() && t.min_breve() > 1e-6 {
                return (g, p, t);
            }
            p.iter_mut().for_each(|v| *v *= 0.5);
        }
    }

    #[test]
    fn rational_mode_agrees_and_identities_are_exact() {
        let (_, _, t) = in_region_instance(3, 7);
        let ex = t.to_exact();
        let full = full_mask(7);
        let sum = ex.q_values().fold(BigRational::zero(), |acc, (_, v)| acc + v.clone());
        assert_eq!(sum, BigRational::one());
        for s in 0..=full {
            assert!((Scalar::to_f64(ex.breve(s)) - t.breve(s)).abs() < TOLERANCE);
            for a in iter_bits(s) {
                let rhs = ex.breve(s & !(1 << a)).clone()
                    - ex.p()[a].clone() * ex.breve(s & !ex.graph().closed_neighborhood_mask(1 << a)).clone();
                assert_eq!(*ex.breve(s), rhs);
            }
        }
    }

    #[test]
    fn parse_rational_forms() {
        let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(parse_rational("3/7"), Some(r(3, 7)));
        assert_eq!(parse_rational("0.25"), Some(r(1, 4)));
        assert_eq!(parse_rational("-1.5"), Some(r(-3, 2)));
        assert_eq!(parse_rational("2"), Some(r(2, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn fundamental_identity_and_direct_sums(seed in any::<u64>(), n in 1usize..8) {
            let (g, p) = random_instance(seed, n, 0.4, 0.3);
            let t = PolynomialTable::build(&g, &p).unwrap();
            for s in 0..=g.full_mask() {
                prop_assert!(approx(*t.breve(s), breve_direct(&g, &p, s)));
                for a in iter_bits(s) {
                    let rhs = t.breve(s & !(1 << a)) - p[a] * t.breve(s & !g.closed_neighborhood_mask(1 << a));
                    prop_assert!(approx(*t.breve(s), rhs));
                }
            }
            for &i in t.independent_sets() {
                prop_assert!(approx(t.q(i), q_direct(&g, &p, i)));
            }
        }

        #[test]
        fn breve_is_sum_of_q_outside(seed in any::<u64>(), n in 1usize..8) {
            let (g, _, t) = in_region_instance(seed, n);
            let full = g.full_mask();
            for s in 0..=full {
                let sum: f64 = t.q_values().filter(|(y, _)| y & s == 0).map(|(_, v)| *v).sum();
                prop_assert!(approx(*t.breve(s), sum));
            }
            let total: f64 = t.q_values().map(|(_, v)| *v).sum();
            prop_assert!(approx(total, 1.0));
        }

        #[test]
        fn q_expansion(seed in any::<u64>(), n in 1usize..8) {
            let (g, p, t) = in_region_instance(seed, n);
            for &i in t.independent_sets() {
                let hood = g.closed_neighborhood_mask(i);
                let sum: f64 = t.q_values().filter(|(s, _)| s & !hood == 0).map(|(_, v)| *v).sum();
                let pi: f64 = iter_bits(i).map(|k| p[k]).product();
                prop_assert!(approx(t.q(i), pi * sum));
            }
        }

        #[test]
        fn monotone_under_decrease(seed in any::<u64>(), n in 1usize..8, shrink in 0.0f64..1.0) {
            let (g, p, t) = in_region_instance(seed, n);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let lower: Vec<f64> = p.iter().map(|v| v * rng.random_range(shrink..=1.0)).collect();
            let t2 = PolynomialTable::build(&g, &lower).unwrap();
            prop_assert!(t2.in_shearer_region());
            for s in 0..=g.full_mask() {
                prop_assert!(*t2.breve(s) >= *t.breve(s) - TOLERANCE);
            }
        }

        #[test]
        fn log_submodular(seed in any::<u64>(), n in 1usize..8) {
            let (g, _, t) = in_region_instance(seed, n);
            for a in 0..=g.full_mask() {
                for b in 0..=g.full_mask() {
                    prop_assert!(t.q(a) * t.q(b) >= t.q(a | b) * t.q(a & b) - TOLERANCE);
                }
            }
        }

        #[test]
        fn singleton_ratio_and_sum_bound(seed in any::<u64>(), n in 1usize..8) {
            let (g, _, t) = in_region_instance(seed, n);
            let full = g.full_mask();
            for i in 0..n {
                let alt = t.breve(full & !(1 << i)) / t.breve(full) - 1.0;
                prop_assert!((t.singleton_ratio(i) - alt).abs() <= 1e-9 * alt.abs().max(1.0));
            }
            for s in 0..=full {
                let lhs: f64 = t.q_values().filter(|(j, _)| j & !s == 0).map(|(_, v)| v / t.q_empty()).sum();
                let rhs: f64 = iter_bits(s).map(|j| 1.0 + t.singleton_ratio(j)).product();
                prop_assert!(lhs <= rhs + 1e-9 * rhs);
            }
        }

        #[test]
        fn automatic_slack(seed in any::<u64>(), n in 1usize..8) {
            let (_, _, t) = in_region_instance(seed, n);
            let eps = t.shearer_slack();
            let t2 = t.scaled(&(1.0 + eps)).unwrap();
            prop_assert!(t2.in_shearer_region());
            prop_assert!(t2.q_empty() >= t.q_empty() / 2.0 - TOLERANCE);
            // any ε' with (1+ε')p in region bounds the singleton ratios
            for i in 0..n {
                prop_assert!(t.singleton_ratio(i) <= 1.0 / eps + 1e-9);
            }
        }

        #[test]
        fn gll_implies_shearer(seed in any::<u64>(), n in 1usize..8) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = DependencyGraph::from_predicate(n, |_, _| rng.random_bool(0.4));
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..0.6)).collect();
            let p: Vec<f64> = (0..n)
                .map(|i| x[i] * g.neighbors(i).iter().map(|&j| 1.0 - x[j]).product::<f64>() * rng.random_range(0.5..=1.0))
                .collect();
            prop_assert!(check_gll(&g, &p, &x).unwrap());
            let t = PolynomialTable::build(&g, &p).unwrap();
            prop_assert!(t.in_shearer_region());
            for s in 0..=g.full_mask() {
                for a in iter_bits(s) {
                    prop_assert!(t.breve(s) / t.breve(s & !(1 << a)) >= 1.0 - x[a] - TOLERANCE);
                }
            }
            for a in 0..n {
                prop_assert!(t.singleton_ratio(a) <= x[a] / (1.0 - x[a]) + TOLERANCE);
            }
            // y = x/(1−x) satisfies the cluster expansion criterion
            let y: Vec<f64> = x.iter().map(|v| v / (1.0 - v)).collect();
            prop_assert!(check_cll_with_slack(&g, &p, &y, -1e-12).unwrap());
        }

        #[test]
        fn cll_implies_shearer(seed in any::<u64>(), n in 1usize..8) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = DependencyGraph::from_predicate(n, |_, _| rng.random_bool(0.4));
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.5)).collect();
            let p: Vec<f64> = (0..n)
                .map(|i| {
                    let mut nb = g.neighbors(i).to_vec();
                    nb.push(i);
                    y[i] / independent_weight(&g, &y, &nb).unwrap() * rng.random_range(0.5..=1.0)
                })
                .collect();
            prop_assert!(check_cll(&g, &p, &y).unwrap());
            let t = PolynomialTable::build(&g, &p).unwrap();
            prop_assert!(t.in_shearer_region());
            let yt = y_table(&g, &y).unwrap();
            let full = g.full_mask();
            for s in 0..=full {
                for a in iter_bits(s) {
                    let lhs = t.breve(s) / t.breve(s & !(1 << a));
                    let rhs = yt[(full & !s) as usize] / yt[(full & !(s & !(1 << a))) as usize];
                    prop_assert!(lhs >= rhs - 1e-9);
                }
            }
            for a in 0..n {
                prop_assert!(t.singleton_ratio(a) <= y[a] + TOLERANCE);
            }
            // truncated sequence mass stays below y^J
            for &j in t.independent_sets().iter().skip(1).take(6) {
                let yj: f64 = iter_bits(j).map(|k| y[k]).product();
                prop_assert!(sequence_mass(&g, &p, j, 8).unwrap() <= yj + TOLERANCE);
            }
        }

        #[test]
        fn y_identities(seed in any::<u64>(), n in 1usize..8) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = DependencyGraph::from_predicate(n, |_, _| rng.random_bool(0.4));
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
            let yt = y_table(&g, &y).unwrap();
            let full = g.full_mask();
            for a_set in 0..=full {
                let direct: f64 = g.independent_masks().unwrap().into_iter()
                    .filter(|i| i & !a_set == 0)
                    .map(|i| iter_bits(i).map(|k| y[k]).product::<f64>())
                    .sum();
                prop_assert!((yt[a_set as usize] - direct).abs() < 1e-9);
                let members: Vec<usize> = iter_bits(a_set).collect();
                prop_assert!((independent_weight(&g, &y, &members).unwrap() - direct).abs() < 1e-9);
                for a in iter_bits(a_set) {
                    let rhs = yt[(a_set & !(1 << a)) as usize] + y[a] * yt[(a_set & !g.closed_neighborhood_mask(1 << a)) as usize];
                    prop_assert!((yt[a_set as usize] - rhs).abs() < 1e-9);
                }
                for b_set in 0..=full {
                    prop_assert!(yt[(a_set | b_set) as usize] <= yt[a_set as usize] * yt[b_set as usize] + 1e-9);
                }
            }
        }

        #[test]
        fn sequence_mass_monotone_and_bounded(seed in any::<u64>(), n in 1usize..5) {
            let (g, p, t) = in_region_instance(seed, n);
            for &j in t.independent_sets().iter().skip(1) {
                let limit = t.q(j) / t.q_empty();
                let mut prev = 0.0;
                for b in 0..20 {
                    let m = sequence_mass(&g, &p, j, b).unwrap();
                    prop_assert!(m >= prev - 1e-15);
                    prop_assert!(m <= limit + TOLERANCE);
                    prev = m;
                }
            }
        }

        #[test]
        fn clique_cover_bounds_y(seed in any::<u64>(), n in 1usize..8) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = DependencyGraph::from_predicate(n, |_, _| rng.random_bool(0.5));
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            // each edge and each isolated vertex is a clique; together they cover [n]
            let mut cliques: Vec<Vec<usize>> = g.edges().map(|(a, b)| vec![a, b]).collect();
            cliques.extend((0..n).filter(|&i| g.neighbors(i).is_empty()).map(|i| vec![i]));
            let all: Vec<usize> = (0..n).collect();
            let exact = independent_weight(&g, &y, &all).unwrap();
            let bound = clique_cover_bound(|j| y[j], cliques.iter().map(|c| c.as_slice()));
            prop_assert!(exact <= bound + 1e-12);
        }
    }
}
