//! Fixed benchmark inputs shared by the `benches/` targets.

use lll_core::apps::{build_latin_instance, build_rainbow_matching_instance, ColorMatrix, ColoredCompleteGraph};
use lll_core::apps::{LatinInstance, RainbowMatchingInstance};
use lll_core::oracles::Multigraph;
use lll_core::DependencyGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// G(n, 1/3) with probabilities scaled into the Shearer region.
pub fn random_instance(n: usize, seed: u64) -> (DependencyGraph, Vec<f64>) {
    let mut r = rng(seed);
    let g = DependencyGraph::from_predicate(n, |_, _| r.random_bool(1.0 / 3.0));
    let p = (0..n).map(|_| r.random_range(0.0..0.05)).collect();
    (g, p)
}

/// K_n with every edge of multiplicity 1..=3.
pub fn complete_multigraph(n: usize, seed: u64) -> Multigraph {
    let mut r = rng(seed);
    let mut g = Multigraph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            g.add_edge(u, v, r.random_range(1..=3));
        }
    }
    g
}

/// Latin instance at multiplicity cap, `t = cap`.
pub fn latin(n: usize, cap: usize, seed: u64) -> LatinInstance {
    build_latin_instance(ColorMatrix::random_capped(n, cap, &mut rng(seed)), cap)
}

/// Rainbow matching of K_{2n} at multiplicity cap `cap`.
pub fn matching(n: usize, cap: usize, seed: u64) -> RainbowMatchingInstance {
    build_rainbow_matching_instance(ColoredCompleteGraph::random_capped(2 * n, cap, &mut rng(seed)))
        .expect("even vertex count")
}
