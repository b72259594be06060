use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::table::{AppEvent, EventTable};
use super::{max_multiplicity, random_capped_coloring, AppError, Application};
use crate::engine::{OracleBundle, OracleError};
use crate::oracles::{permutation_resample, PatternEvent, Permutation};

/// An `n × n` matrix of colors, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorMatrix {
    pub rows: Vec<Vec<u32>>,
}

impl ColorMatrix {
    pub fn new(rows: Vec<Vec<u32>>) -> Result<Self, AppError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(AppError::NotSquare);
        }
        Ok(Self { rows })
    }

    pub fn from_flat(n: usize, colors: Vec<u32>) -> Result<Self, AppError> {
        if colors.len() != n * n {
            return Err(AppError::ColorCount { expected: n * n, got: colors.len() });
        }
        Ok(Self { rows: colors.chunks(n.max(1)).map(<[u32]>::to_vec).collect() })
    }

    pub fn random_capped<R: Rng + ?Sized>(n: usize, cap: usize, rng: &mut R) -> Self {
        Self::from_flat(n, random_capped_coloring(n * n, cap, rng)).expect("sizes agree")
    }

    /// All `n²` colors distinct.
    pub fn distinct(n: usize) -> Self {
        Self::from_flat(n, (0..(n * n) as u32).collect()).expect("sizes agree")
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn color(&self, u: usize, v: usize) -> u32 {
        self.rows[u][v]
    }

    pub fn flat(&self) -> Vec<u32> {
        self.rows.concat()
    }

    pub fn max_color_multiplicity(&self) -> usize {
        max_multiplicity(&self.flat())
    }
}

/// `t` random permutations of `[n]`; the bad events are monochromatic pairs of
/// selected cells within one permutation and a cell shared by two.
#[derive(Debug, Clone)]
pub struct LatinInstance {
    matrix: ColorMatrix,
    t: usize,
    table: EventTable,
}

/// Cells are items `u·n + v`; row `u` is vertex `u`, column `v` is vertex `n + v`.
pub fn build_latin_instance(matrix: ColorMatrix, t: usize) -> LatinInstance {
    let n = matrix.n();
    let iv = (0..n * n).map(|c| [(c / n) as u32, (n + c % n) as u32]).collect();
    let table = EventTable::new(t, 2 * n, iv, &matrix.flat(), |a, b| a / n != b / n && a % n != b % n);
    LatinInstance { matrix, t, table }
}

impl LatinInstance {
    pub fn matrix(&self) -> &ColorMatrix {
        &self.matrix
    }

    fn cell(&self, c: usize) -> (usize, usize) {
        (c / self.matrix.n(), c % self.matrix.n())
    }
}

impl OracleBundle for LatinInstance {
    type State = Vec<Permutation>;

    fn num_events(&self) -> usize {
        self.table.len()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Permutation> {
        (0..self.t)
            .map(|_| {
                let mut map: Vec<usize> = (0..self.matrix.n()).collect();
                map.shuffle(rng);
                Permutation::new(map).expect("shuffle is a bijection")
            })
            .collect()
    }

    fn holds(&self, e: usize, s: &Vec<Permutation>) -> bool {
        match self.table.decode(e) {
            AppEvent::Pair { structure, a, b } => {
                let ((u, v), (x, y)) = (self.cell(a), self.cell(b));
                s[structure].apply(u) == v && s[structure].apply(x) == y
            }
            AppEvent::Shared { i, j, item } => {
                let (u, v) = self.cell(item);
                s[i].apply(u) == v && s[j].apply(u) == v
            }
        }
    }

    fn resample<R: Rng + ?Sized>(&self, e: usize, s: &mut Vec<Permutation>, rng: &mut R) -> Result<(), OracleError> {
        if e >= self.num_events() {
            return Err(OracleError::UnknownEvent { index: e, n: self.num_events() });
        }
        if !self.holds(e, s) {
            return Err(OracleError::EventNotSatisfied(e));
        }
        let bad = |err: crate::oracles::StructureError| OracleError::Other(err.to_string());
        match self.table.decode(e) {
            AppEvent::Pair { structure, a, b } => {
                let pattern = PatternEvent::new(vec![self.cell(a), self.cell(b)]).map_err(bad)?;
                permutation_resample(&mut s[structure], &pattern, rng)
            }
            AppEvent::Shared { i, j, item } => {
                let pattern = PatternEvent::new(vec![self.cell(item)]).map_err(bad)?;
                permutation_resample(&mut s[i], &pattern, rng)?;
                permutation_resample(&mut s[j], &pattern, rng)
            }
        }
    }

    fn adjacent(&self, a: usize, b: usize) -> bool {
        self.table.adjacent(a, b)
    }

    fn occurring(&self, s: &Vec<Permutation>) -> Vec<usize> {
        let n = self.matrix.n();
        let mut out = Vec::new();
        let mut by_color: Vec<(u32, usize)> = Vec::with_capacity(n);
        for (i, pi) in s.iter().enumerate() {
            by_color.clear();
            by_color.extend((0..n).map(|u| (self.matrix.color(u, pi.apply(u)), u * n + pi.apply(u))));
            by_color.sort_unstable();
            push_color_pairs(&by_color, |a, b| self.table.pair_index(i, a, b), &mut out);
        }
        for u in 0..n {
            for i in 0..self.t {
                for j in i + 1..self.t {
                    if s[i].apply(u) == s[j].apply(u) {
                        out.push(self.table.shared_index(i, j, u * n + s[i].apply(u)));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Pushes the indices of all pairs within runs of equal color.
pub(super) fn push_color_pairs(
    sorted: &[(u32, usize)],
    index: impl Fn(usize, usize) -> Option<usize>,
    out: &mut Vec<usize>,
) {
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end].0 == sorted[start].0 {
            end += 1;
        }
        for x in start..end {
            for y in x + 1..end {
                if let Some(e) = index(sorted[x].1, sorted[y].1) {
                    out.push(e);
                }
            }
        }
        start = end;
    }
}

impl Application for LatinInstance {
    fn name(&self) -> &'static str {
        "latin"
    }

    fn size(&self) -> usize {
        self.matrix.n()
    }

    fn count(&self) -> usize {
        self.t
    }

    fn max_multiplicity(&self) -> usize {
        self.matrix.max_color_multiplicity()
    }

    fn table(&self) -> &EventTable {
        &self.table
    }

    fn event_probability(&self, e: usize) -> f64 {
        let n = self.matrix.n() as f64;
        match self.table.decode(e) {
            AppEvent::Pair { .. } => 1.0 / (n * (n - 1.0)),
            AppEvent::Shared { .. } => 1.0 / (n * n),
        }
    }

    fn p_bound(&self) -> f64 {
        let n = self.matrix.n() as f64;
        1.0 / (n * (n - 1.0))
    }

    fn y(&self) -> f64 {
        (8.0f64 / 7.0).powi(8) * self.p_bound()
    }

    fn validate(&self, s: &Vec<Permutation>) -> Result<(), String> {
        validate_latin(&self.matrix, s)
    }

    fn solution_json(&self, s: &Vec<Permutation>) -> serde_json::Value {
        serde_json::to_value(s).expect("permutations serialize")
    }
}

/// Each permutation is a bijection hitting distinct colors, and no two agree anywhere.
pub fn validate_latin(matrix: &ColorMatrix, perms: &[Permutation]) -> Result<(), String> {
    let n = matrix.n();
    for (i, pi) in perms.iter().enumerate() {
        if pi.len() != n || !pi.is_bijection() {
            return Err(format!("permutation {i} is not a bijection of [{n}]"));
        }
        let mut colors: Vec<u32> = (0..n).map(|u| matrix.color(u, pi.apply(u))).collect();
        colors.sort_unstable();
        if colors.windows(2).any(|w| w[0] == w[1]) {
            return Err(format!("permutation {i} repeats a color"));
        }
    }
    for i in 0..perms.len() {
        for j in i + 1..perms.len() {
            if let Some(u) = (0..n).find(|&u| perms[i].apply(u) == perms[j].apply(u)) {
                return Err(format!("permutations {i} and {j} share cell ({u}, {})", perms[i].apply(u)));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{resample_from, run_seeded, seeded_rng, RunConfig, ScanMode};
    use crate::oracles::all_permutations;

    #[test]
    fn distinct_colors_single_transversal_is_immediate() {
        let inst = build_latin_instance(ColorMatrix::distinct(32), 1);
        assert_eq!(inst.num_events(), 0);
        let out = run_seeded(&inst, 3, RunConfig::default()).unwrap();
        assert!(out.log.terminated);
        assert_eq!(out.log.total_resamples, 0);
        assert!(validate_latin(inst.matrix(), &out.state).is_ok());
    }

    #[test]
    fn event_probabilities_match_enumeration() {
        let mut rng = seeded_rng(5);
        let inst = build_latin_instance(ColorMatrix::random_capped(4, 3, &mut rng), 2);
        let perms = all_permutations(4);
        for e in 0..inst.num_events() {
            let hits = match inst.table.decode(e) {
                AppEvent::Pair { .. } => {
                    perms.iter().filter(|p| inst.holds(e, &vec![(*p).clone(), (*p).clone()])).count() as f64
                        / perms.len() as f64
                }
                AppEvent::Shared { .. } => {
                    let mut c = 0;
                    for p in &perms {
                        for q in &perms {
                            c += inst.holds(e, &vec![p.clone(), q.clone()]) as usize;
                        }
                    }
                    c as f64 / (perms.len() * perms.len()) as f64
                }
            };
            assert!((hits - inst.event_probability(e)).abs() < 1e-12, "event {e}");
        }
    }

    #[test]
    fn occurring_matches_filter() {
        let mut rng = seeded_rng(9);
        let inst = build_latin_instance(ColorMatrix::random_capped(7, 4, &mut rng), 3);
        for _ in 0..200 {
            let s = inst.sample(&mut rng);
            let slow: Vec<usize> = (0..inst.num_events()).filter(|&e| inst.holds(e, &s)).collect();
            assert_eq!(inst.occurring(&s), slow);
        }
    }

    #[test]
    fn new_events_after_resampling_are_neighbors() {
        let mut rng = seeded_rng(11);
        let inst = build_latin_instance(ColorMatrix::random_capped(6, 4, &mut rng), 3);
        let mut checked = 0;
        for _ in 0..2000 {
            let mut s = inst.sample(&mut rng);
            let before = inst.occurring(&s);
            let Some(&e) = before.first() else { continue };
            inst.resample(e, &mut s, &mut rng).unwrap();
            for f in inst.occurring(&s) {
                if before.binary_search(&f).is_err() {
                    assert!(f == e || inst.adjacent(e, f), "event {f} appeared outside Γ⁺({e})");
                }
            }
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn clique_sizes_respect_multiplicity() {
        let mut rng = seeded_rng(2);
        let (n, q, t) = (16, 3, 4);
        let inst = build_latin_instance(ColorMatrix::random_capped(n, q, &mut rng), t);
        assert!(inst.table.max_pair_degree() <= n * (q - 1));
        assert_eq!(inst.table.max_shared_clique(), n * (t - 1));
    }

    #[test]
    fn scan_modes_agree() {
        let mut rng = seeded_rng(4);
        let inst = build_latin_instance(ColorMatrix::random_capped(10, 2, &mut rng), 2);
        for seed in 0..5 {
            let mut r = seeded_rng(seed);
            let s0 = inst.sample(&mut r);
            let a = resample_from(&inst, s0.clone(), &mut r.clone(), RunConfig::default()).unwrap();
            let cfg = RunConfig { scan: ScanMode::Exhaustive, ..RunConfig::default() };
            let b = resample_from(&inst, s0, &mut r, cfg).unwrap();
            assert_eq!(a.log, b.log);
        }
    }

    #[test]
    fn solves_small_instance() {
        let mut rng = seeded_rng(8);
        let n = 32;
        let inst = build_latin_instance(ColorMatrix::random_capped(n, 2, &mut rng), 2);
        assert!(inst.cll_holds());
        let report = super::super::solve(&inst, 17, 1_000_000, 100f64.ln()).unwrap();
        assert!(report.valid, "{:?}", report.validation_error);
        assert!(report.within_bound);
    }

    #[test]
    fn validator_rejects_collisions() {
        let m = ColorMatrix::distinct(3);
        let id = Permutation::identity(3);
        assert!(validate_latin(&m, &[id.clone()]).is_ok());
        assert!(validate_latin(&m, &[id.clone(), id]).is_err());
        let mono = ColorMatrix::from_flat(2, vec![0, 0, 0, 0]).unwrap();
        assert!(validate_latin(&mono, &[Permutation::identity(2)]).is_err());
    }
}
