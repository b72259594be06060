//! Algorithmic Lovász Local Lemma via resampling oracles.
//!
//! The engine runs maximal-independent-set resampling over any
//! [`OracleBundle`]; concrete spaces live in [`oracles`], criterion machinery
//! in [`polynomials`], finite-space oracle synthesis in [`synth`], the
//! combinatorial applications in [`apps`] and statistical checks in [`verify`].

pub mod apps;
pub mod engine;
pub mod graph;
pub mod oracles;
pub mod polynomials;
pub mod space;
pub mod synth;
pub mod verify;

pub use engine::{
    maximal_set_resample, resample_from, run_seeded, seeded_rng, EngineError, OracleBundle, OracleError,
    RunConfig, RunLog, RunOutcome, ScanMode, DEFAULT_BUDGET,
};
pub use graph::{DependencyGraph, GraphError, GraphSpec, Mask, StableSetSequence};
pub use space::{product_compose, EventBundle, JointEvent, ProductError, ProductSpace, ResampleSpace};
pub use apps::{solve, Application, SolutionReport};
