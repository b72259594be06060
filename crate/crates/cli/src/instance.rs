//! Instance files: a `kind` tag plus a kind-specific payload.

use std::path::Path;

use lll_core::apps::{ColorMatrix, ColoredCompleteGraph};
use lll_core::polynomials::parse_rational;
use lll_core::synth::ExplicitSpaceSpec;
use lll_core::GraphSpec;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A probability or weight: a JSON number, or a decimal or `a/b` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Prob {
    Num(f64),
    Text(String),
}

impl Prob {
    pub fn exact(&self) -> Result<BigRational, CliError> {
        match self {
            Prob::Num(v) => BigRational::from_float(*v).ok_or_else(|| CliError::Input(format!("non-finite value {v}"))),
            Prob::Text(s) => parse_rational(s).ok_or_else(|| CliError::Input(format!("cannot parse {s:?}"))),
        }
    }

    pub fn value(&self) -> Result<f64, CliError> {
        match self {
            Prob::Num(v) => Ok(*v),
            Prob::Text(_) => Ok(self.exact()?.to_f64().unwrap_or(f64::NAN)),
        }
    }
}

pub fn values(v: &[Prob]) -> Result<Vec<f64>, CliError> {
    v.iter().map(Prob::value).collect()
}

pub fn exact_values(v: &[Prob]) -> Result<Vec<BigRational>, CliError> {
    v.iter().map(Prob::exact).collect()
}

/// Optional criterion parameters attached to an instance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionInput {
    #[serde(default)]
    pub x: Option<Vec<Prob>>,
    #[serde(default)]
    pub y: Option<Vec<Prob>>,
    #[serde(default)]
    pub epsilon: f64,
}

/// Random coloring request. For rainbow matchings `n` is half the vertex count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generate {
    pub n: usize,
    /// Multiplicity cap; ignored when `proper` is set.
    #[serde(default)]
    pub cap: Option<usize>,
    /// Round-robin proper coloring (rainbow matchings only).
    #[serde(default)]
    pub proper: bool,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InstanceFile {
    ExplicitSpace {
        space: ExplicitSpaceSpec,
        #[serde(default)]
        criterion: Option<CriterionInput>,
        #[serde(default)]
        seed: Option<u64>,
    },
    Latin {
        #[serde(default)]
        matrix: Option<ColorMatrix>,
        #[serde(default)]
        generate: Option<Generate>,
        #[serde(default)]
        t: Option<usize>,
        #[serde(default)]
        seed: Option<u64>,
    },
    RainbowMatching {
        #[serde(default)]
        graph: Option<ColoredCompleteGraph>,
        #[serde(default)]
        generate: Option<Generate>,
        #[serde(default)]
        seed: Option<u64>,
    },
    RainbowTree {
        #[serde(default)]
        graph: Option<ColoredCompleteGraph>,
        #[serde(default)]
        generate: Option<Generate>,
        #[serde(default)]
        t: Option<usize>,
        #[serde(default)]
        seed: Option<u64>,
    },
    CustomGraph {
        graph: GraphSpec,
        p: Vec<Prob>,
        #[serde(default)]
        criterion: Option<CriterionInput>,
        #[serde(default)]
        seed: Option<u64>,
    },
}

impl InstanceFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            InstanceFile::ExplicitSpace { seed, .. }
            | InstanceFile::Latin { seed, .. }
            | InstanceFile::RainbowMatching { seed, .. }
            | InstanceFile::RainbowTree { seed, .. }
            | InstanceFile::CustomGraph { seed, .. } => *seed,
        }
    }
}

fn generator_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// ⌊7⁷ n / 8⁸⌋, at least 1.
pub fn latin_default(n: usize) -> usize {
    (823_543 * n / 16_777_216).max(1)
}

/// ⌊27 n / 128⌋ for K_{2n}, at least 1.
pub fn matching_default_cap(n: usize) -> usize {
    (27 * n / 128).max(1)
}

/// ⌊(1/32)(7/8)⁷ n⌋, at least 1.
pub fn tree_default(n: usize) -> usize {
    ((n as f64 * (7.0f64 / 8.0).powi(7) / 32.0).floor() as usize).max(1)
}

fn exactly_one<T>(given: Option<T>, generate: Option<&Generate>, what: &str) -> Result<Option<T>, CliError> {
    match (given.is_some(), generate.is_some()) {
        (true, false) | (false, true) => Ok(given),
        _ => Err(CliError::Input(format!("give exactly one of `{what}` and `generate`"))),
    }
}

pub fn latin_matrix(matrix: Option<ColorMatrix>, generate: Option<&Generate>) -> Result<ColorMatrix, CliError> {
    match exactly_one(matrix, generate, "matrix")? {
        Some(m) => {
            ColorMatrix::new(m.rows).map_err(|e| CliError::Input(e.to_string()))
        }
        None => {
            let g = generate.expect("checked");
            if g.n == 0 {
                return Err(CliError::Input("n must be positive".into()));
            }
            let cap = g.cap.unwrap_or_else(|| latin_default(g.n));
            if cap == 0 {
                return Err(CliError::Input("cap must be positive".into()));
            }
            Ok(ColorMatrix::random_capped(g.n, cap, &mut generator_rng(g.seed)))
        }
    }
}

pub fn matching_graph(
    graph: Option<ColoredCompleteGraph>,
    generate: Option<&Generate>,
) -> Result<ColoredCompleteGraph, CliError> {
    match exactly_one(graph, generate, "graph")? {
        Some(g) => ColoredCompleteGraph::new(g.n, g.colors).map_err(|e| CliError::Input(e.to_string())),
        None => {
            let g = generate.expect("checked");
            if g.n < 2 {
                return Err(CliError::Input("rainbow matching needs n ≥ 2".into()));
            }
            if g.proper {
                return ColoredCompleteGraph::round_robin(2 * g.n).map_err(|e| CliError::Input(e.to_string()));
            }
            let cap = g.cap.unwrap_or_else(|| matching_default_cap(g.n));
            if cap == 0 {
                return Err(CliError::Input("cap must be positive".into()));
            }
            Ok(ColoredCompleteGraph::random_capped(2 * g.n, cap, &mut generator_rng(g.seed)))
        }
    }
}

pub fn tree_graph(graph: Option<ColoredCompleteGraph>, generate: Option<&Generate>) -> Result<ColoredCompleteGraph, CliError> {
    match exactly_one(graph, generate, "graph")? {
        Some(g) => ColoredCompleteGraph::new(g.n, g.colors).map_err(|e| CliError::Input(e.to_string())),
        None => {
            let g = generate.expect("checked");
            if g.n < 2 {
                return Err(CliError::Input("rainbow trees need n ≥ 2".into()));
            }
            let cap = g.cap.unwrap_or_else(|| tree_default(g.n));
            if cap == 0 {
                return Err(CliError::Input("cap must be positive".into()));
            }
            Ok(ColoredCompleteGraph::random_capped(g.n, cap, &mut generator_rng(g.seed)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_density_thresholds() {
        assert_eq!(latin_default(128), 6);
        assert_eq!(latin_default(32), 1);
        assert_eq!(matching_default_cap(64), 13);
        assert_eq!(tree_default(256), 3);
    }

    #[test]
    fn parses_each_kind() {
        let cases = [
            r#"{"kind":"custom-graph","graph":{"n":2,"edges":[[0,1]]},"p":["1/2",0.5]}"#,
            r#"{"kind":"latin","generate":{"n":8,"cap":2},"t":2}"#,
            r#"{"kind":"rainbow-matching","generate":{"n":4,"proper":true}}"#,
            r#"{"kind":"rainbow-tree","graph":{"n":3,"colors":[0,1,2]},"t":1,"seed":4}"#,
            r#"{"kind":"explicit-space","space":{"states":2,"prob":["1/2","1/2"],"events":[[0]],"graph":{"n":1}}}"#,
        ];
        for c in cases {
            serde_json::from_str::<InstanceFile>(c).unwrap();
        }
        assert!(serde_json::from_str::<InstanceFile>(r#"{"kind":"nope"}"#).is_err());
    }

    #[test]
    fn probabilities_parse_exactly() {
        let p = Prob::Text("3/8".into());
        assert_eq!(p.value().unwrap(), 0.375);
        assert!(Prob::Text("x".into()).exact().is_err());
    }

    #[test]
    fn coloring_source_must_be_unique() {
        let g = Generate { n: 4, cap: Some(2), proper: false, seed: 0 };
        assert!(latin_matrix(None, None).is_err());
        assert!(latin_matrix(Some(ColorMatrix::distinct(2)), Some(&g)).is_err());
        assert_eq!(latin_matrix(None, Some(&g)).unwrap().n(), 4);
    }
}
