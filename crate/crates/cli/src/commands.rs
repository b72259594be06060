use lll_core::apps::{
    build_latin_instance, build_rainbow_matching_instance, build_rainbow_tree_instance, solve, Application,
    SolutionReport,
};
use lll_core::polynomials::{
    check_cll_with_slack, check_gll_with_slack, predicted_bound, CriterionParams, PolynomialTable, RegionStatus,
};
use lll_core::synth::{
    check_dependency, check_lopsidependency, check_r1_exact, check_r2_exact, synthesize, ExplicitSpace,
    ExplicitSpaceSpec, Synthesis, SynthesizedBundle,
};
use lll_core::verify::{
    streak_bundle, matching_family, measure_consecutive_runs_with, permutation_family, synth_family, test_r1,
    test_r2, test_r2_exhaustive, tree_family, variable_family, DistributionTestReport, FiniteBundle, StreakReport,
    StreakSchedule,
};
use lll_core::{run_seeded, DependencyGraph, OracleBundle, RunConfig, RunLog};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::instance::{exact_values, latin_matrix, matching_graph, tree_graph, values, CriterionInput, InstanceFile};
use crate::CliError;

/// Exit status of a command that produced output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Success = 0,
    ValidationFailure = 1,
    BudgetExhausted = 2,
}

pub struct Output {
    pub json: Value,
    pub text: String,
    pub status: Status,
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

/// Tail parameters reported by `criteria`: 1 and ln 10⁴.
pub fn standard_tails() -> [f64; 2] {
    [1.0, 1e4f64.ln()]
}

// ---------------------------------------------------------------------------
// criteria

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub criterion: String,
    pub epsilon: f64,
    pub t: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub kind: String,
    pub n: usize,
    pub exact: bool,
    pub gll: Option<bool>,
    pub cll: Option<bool>,
    pub shearer: Option<bool>,
    pub region: Option<RegionStatus>,
    /// q_∅.
    #[serde(rename = "q0")]
    pub q_empty: Option<f64>,
    #[serde(rename = "q0_exact")]
    pub q_empty_exact: Option<String>,
    pub min_breve: Option<f64>,
    pub slack: Option<f64>,
    pub slack_exact: Option<String>,
    pub singleton_ratios: Option<Vec<f64>>,
    pub predicted_bounds: Vec<BoundEntry>,
}

fn bounds_for(params: &CriterionParams, table: Option<&PolynomialTable>, name: &str) -> Vec<BoundEntry> {
    standard_tails()
        .into_iter()
        .filter_map(|t| {
            predicted_bound(params, table, t).ok().map(|bound| BoundEntry {
                criterion: name.into(),
                epsilon: params.epsilon,
                t,
                bound,
            })
        })
        .collect()
}

fn graph_criteria(
    kind: &str,
    g: &DependencyGraph,
    p: &[f64],
    exact_p: Option<Vec<BigRational>>,
    criterion: Option<&CriterionInput>,
) -> Result<CriteriaReport, CliError> {
    let n = g.n();
    let input_err = |e: lll_core::polynomials::PolyError| CliError::Input(e.to_string());
    let table = PolynomialTable::build(g, p).map_err(input_err)?;
    let eps = criterion.map_or(0.0, |c| c.epsilon);
    let empty = || (n == 0).then(Vec::new);
    let x = criterion.and_then(|c| c.x.as_deref()).map(values).transpose()?.or_else(empty);
    let y = criterion.and_then(|c| c.y.as_deref()).map(values).transpose()?.or_else(empty);
    let gll = x.as_ref().map(|x| check_gll_with_slack(g, p, x, eps)).transpose().map_err(input_err)?;
    let cll = y.as_ref().map(|y| check_cll_with_slack(g, p, y, eps)).transpose().map_err(input_err)?;

    let mut report = CriteriaReport { kind: kind.into(), n, cll, gll, ..Default::default() };
    if let Some(ex) = exact_p {
        let t = PolynomialTable::<BigRational>::build(g, &ex).map_err(input_err)?;
        let inside = t.in_shearer_region();
        report.exact = true;
        report.shearer = Some(inside);
        report.region = Some(if inside {
            RegionStatus::Inside
        } else if t.min_breve().is_zero() {
            RegionStatus::Boundary
        } else {
            RegionStatus::Outside
        });
        report.q_empty_exact = Some(t.q_empty().to_string());
        if inside && n > 0 {
            report.slack_exact = Some(t.shearer_slack().to_string());
        }
    } else {
        report.shearer = Some(table.in_shearer_region());
        report.region = Some(table.region_status());
    }
    let inside = report.shearer == Some(true);
    report.q_empty = Some(table.q_empty());
    report.min_breve = Some(table.min_breve());
    if inside {
        report.singleton_ratios = Some((0..n).map(|i| table.singleton_ratio(i)).collect());
        if n > 0 {
            report.slack = Some(table.shearer_slack());
        }
    }
    if let (Some(true), Some(x)) = (gll, x) {
        report.predicted_bounds.extend(bounds_for(&CriterionParams::gll(x, eps), None, "gll"));
    }
    if let (Some(true), Some(y)) = (cll, y) {
        report.predicted_bounds.extend(bounds_for(&CriterionParams::cll(y, eps), None, "cll"));
    }
    if inside {
        report.predicted_bounds.extend(bounds_for(&CriterionParams::shearer(eps), Some(&table), "shearer"));
    }
    Ok(report)
}

fn app_criteria<A: Application>(app: &A) -> CriteriaReport {
    let cll = app.cll_holds();
    let mut report =
        CriteriaReport { kind: app.name().into(), n: app.num_events(), cll: Some(cll), ..Default::default() };
    if cll {
        let params = app.criterion_params();
        report.predicted_bounds = bounds_for(&params, None, "cll");
    }
    report
}

fn explicit_space(spec: &ExplicitSpaceSpec) -> Result<ExplicitSpace, CliError> {
    ExplicitSpace::from_spec(spec).map_err(|e| CliError::Input(e.to_string()))
}

pub fn criteria(inst: &InstanceFile, exact: bool) -> Result<Output, CliError> {
    let report = match inst {
        InstanceFile::CustomGraph { graph, p, criterion, .. } => {
            let g = DependencyGraph::from_spec(graph).map_err(|e| CliError::Input(e.to_string()))?;
            let exact_p = if exact { Some(exact_values(p)?) } else { None };
            graph_criteria("custom-graph", &g, &values(p)?, exact_p, criterion.as_ref())?
        }
        InstanceFile::ExplicitSpace { space, criterion, .. } => {
            let s = explicit_space(space)?;
            let exact_p: Vec<BigRational> = (0..s.event_count()).map(|i| s.event_probability(i)).collect();
            let p: Vec<f64> = exact_p.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
            graph_criteria("explicit-space", s.graph(), &p, exact.then_some(exact_p), criterion.as_ref())?
        }
        InstanceFile::Latin { matrix, generate, t, .. } => {
            let m = latin_matrix(matrix.clone(), generate.as_ref())?;
            let t = t.unwrap_or_else(|| crate::instance::latin_default(m.n()));
            app_criteria(&build_latin_instance(m, t))
        }
        InstanceFile::RainbowMatching { graph, generate, .. } => {
            let g = matching_graph(graph.clone(), generate.as_ref())?;
            app_criteria(&build_rainbow_matching_instance(g).map_err(|e| CliError::Input(e.to_string()))?)
        }
        InstanceFile::RainbowTree { graph, generate, t, .. } => {
            let g = tree_graph(graph.clone(), generate.as_ref())?;
            let t = t.unwrap_or_else(|| crate::instance::tree_default(g.n));
            app_criteria(&build_rainbow_tree_instance(g, t).map_err(|e| CliError::Input(e.to_string()))?)
        }
    };
    let verdict = |v: Option<bool>| v.map_or("n/a".to_string(), |b| b.to_string());
    let text = format!(
        "{} n={}: gll={} cll={} shearer={}{}",
        report.kind,
        report.n,
        verdict(report.gll),
        verdict(report.cll),
        verdict(report.shearer),
        report.slack.map_or(String::new(), |e| format!(" slack={e:.6}")),
    );
    Ok(Output { json: to_json(&report), text, status: Status::Success })
}

// ---------------------------------------------------------------------------
// run

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplicitRunReport {
    pub kind: String,
    pub seed: u64,
    pub terminated: bool,
    pub valid: bool,
    pub final_state: usize,
    pub resamples: u64,
    pub iterations: usize,
    pub log: RunLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatSummary {
    pub runs: usize,
    pub terminated: usize,
    pub valid: usize,
    pub within_bound: usize,
    pub max_resamples: u64,
    pub predicted_bound: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub seed: u64,
    pub budget: u64,
    pub repeat: usize,
    pub tail: Option<f64>,
}

fn report_status(r: &SolutionReport) -> Status {
    if !r.terminated {
        Status::BudgetExhausted
    } else if !r.valid {
        Status::ValidationFailure
    } else {
        Status::Success
    }
}

/// Runs seeds `seed, seed + 1, …` and reports each.
pub fn solve_app<A: Application>(app: &A, opts: RunOptions) -> Result<Output, CliError> {
    if opts.repeat == 0 {
        return Err(CliError::Input("repeat must be positive".into()));
    }
    let tail = opts.tail.unwrap_or_else(|| (opts.repeat.max(2) as f64).ln());
    let reports: Vec<SolutionReport> = (0..opts.repeat)
        .into_par_iter()
        .map(|r| solve(app, opts.seed.wrapping_add(r as u64), opts.budget, tail))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let status = reports.iter().map(report_status).max().unwrap_or(Status::Success);
    let line = |r: &SolutionReport| {
        format!(
            "{} n={} seed={}: {} after {} resamples (bound {:.1}, {} iterations)",
            r.application,
            r.n,
            r.seed,
            if !r.terminated {
                "budget exhausted".to_string()
            } else if r.valid {
                "valid".to_string()
            } else {
                format!("INVALID ({})", r.validation_error.as_deref().unwrap_or("?"))
            },
            r.resamples,
            r.predicted_bound,
            r.iterations,
        )
    };
    let text = reports.iter().map(line).collect::<Vec<_>>().join("\n");
    if reports.len() == 1 {
        return Ok(Output { json: to_json(&reports[0]), text, status });
    }
    let summary = RepeatSummary {
        runs: reports.len(),
        terminated: reports.iter().filter(|r| r.terminated).count(),
        valid: reports.iter().filter(|r| r.valid).count(),
        within_bound: reports.iter().filter(|r| r.within_bound).count(),
        max_resamples: reports.iter().map(|r| r.resamples).max().unwrap_or(0),
        predicted_bound: reports[0].predicted_bound,
    };
    let json = serde_json::json!({ "summary": summary, "runs": reports });
    Ok(Output { json, text, status })
}

fn run_explicit(spec: &ExplicitSpaceSpec, opts: RunOptions) -> Result<Output, CliError> {
    let space = explicit_space(spec)?;
    let bundle = match SynthesizedBundle::synthesize_all(space).map_err(|e| CliError::Input(e.to_string()))? {
        Ok(b) => b,
        Err(cert) => {
            let json = serde_json::json!({ "kind": "explicit-space", "feasible": false, "certificate": certificate_json(&cert) });
            let text = format!("event {} admits no resampling oracle", cert.event);
            return Ok(Output { json, text, status: Status::ValidationFailure });
        }
    };
    let mut reports = Vec::with_capacity(opts.repeat);
    for r in 0..opts.repeat.max(1) {
        let seed = opts.seed.wrapping_add(r as u64);
        let out = run_seeded(&bundle, seed, RunConfig::with_budget(opts.budget))
            .map_err(|e| CliError::Internal(e.to_string()))?;
        let valid = out.log.terminated && (0..bundle.num_events()).all(|i| !bundle.holds(i, &out.state));
        reports.push(ExplicitRunReport {
            kind: "explicit-space".into(),
            seed,
            terminated: out.log.terminated,
            valid,
            final_state: out.state,
            resamples: out.log.total_resamples,
            iterations: out.log.iteration_count(),
            log: out.log,
        });
    }
    let status = reports
        .iter()
        .map(|r| {
            if !r.terminated {
                Status::BudgetExhausted
            } else if !r.valid {
                Status::ValidationFailure
            } else {
                Status::Success
            }
        })
        .max()
        .unwrap_or(Status::Success);
    let text = reports
        .iter()
        .map(|r| format!("explicit-space seed={}: state {} after {} resamples", r.seed, r.final_state, r.resamples))
        .collect::<Vec<_>>()
        .join("\n");
    let json = if reports.len() == 1 { to_json(&reports[0]) } else { to_json(&reports) };
    Ok(Output { json, text, status })
}

pub fn run(inst: &InstanceFile, opts: RunOptions) -> Result<Output, CliError> {
    match inst {
        InstanceFile::ExplicitSpace { space, .. } => run_explicit(space, opts),
        InstanceFile::Latin { matrix, generate, t, .. } => {
            let m = latin_matrix(matrix.clone(), generate.as_ref())?;
            let t = t.unwrap_or_else(|| crate::instance::latin_default(m.n()));
            solve_app(&build_latin_instance(m, t), opts)
        }
        InstanceFile::RainbowMatching { graph, generate, .. } => {
            let g = matching_graph(graph.clone(), generate.as_ref())?;
            solve_app(&build_rainbow_matching_instance(g).map_err(|e| CliError::Input(e.to_string()))?, opts)
        }
        InstanceFile::RainbowTree { graph, generate, t, .. } => {
            let g = tree_graph(graph.clone(), generate.as_ref())?;
            let t = t.unwrap_or_else(|| crate::instance::tree_default(g.n));
            solve_app(&build_rainbow_tree_instance(g, t).map_err(|e| CliError::Input(e.to_string()))?, opts)
        }
        InstanceFile::CustomGraph { .. } => {
            Err(CliError::Input("custom-graph instances carry no probability space; use `criteria`".into()))
        }
    }
}

// ---------------------------------------------------------------------------
// verify-oracle

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Family {
    Permutation,
    Matching,
    Tree,
    Variable,
    Synth,
    Streak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2Summary {
    pub trials: u64,
    pub violations: u64,
    /// Violations over every kernel transition, for synthesized oracles.
    pub exhaustive_violations: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub family: String,
    pub size: usize,
    pub event: usize,
    pub seed: u64,
    pub r1: DistributionTestReport,
    pub r2: R2Summary,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub family: Family,
    pub size: Option<usize>,
    pub event: usize,
    pub samples: u64,
    pub r2_trials: Option<u64>,
    pub seed: u64,
    pub k: usize,
    pub l: usize,
    pub runs: u64,
    pub schedule: StreakSchedule,
    pub budget: u64,
}

fn family_report<B>(name: &str, size: usize, b: &B, o: &VerifyOptions, exhaustive: Option<u64>) -> Result<FamilyReport, CliError>
where
    B: FiniteBundle,
    B::State: Eq + std::hash::Hash + Send + Sync,
{
    let err = |e: lll_core::verify::VerifyError| CliError::Input(e.to_string());
    let r1 = test_r1(b, o.event, o.samples, o.seed).map_err(err)?;
    let trials = o.r2_trials.unwrap_or(o.samples);
    let violations = test_r2(b, o.event, trials, o.seed ^ 0x5232).map_err(err)?;
    let pass = r1.pass && violations == 0 && exhaustive.unwrap_or(0) == 0;
    Ok(FamilyReport {
        family: name.into(),
        size,
        event: o.event,
        seed: o.seed,
        r1,
        r2: R2Summary { trials, violations, exhaustive_violations: exhaustive },
        pass,
    })
}

pub fn verify(o: VerifyOptions) -> Result<Output, CliError> {
    let input = |e: lll_core::verify::VerifyError| CliError::Input(e.to_string());
    let report = match o.family {
        Family::Permutation => {
            let n = o.size.unwrap_or(4);
            family_report("permutation", n, &permutation_family(n), &o, None)?
        }
        Family::Matching => {
            let n = o.size.unwrap_or(6);
            family_report("matching", n, &matching_family(n).map_err(input)?, &o, None)?
        }
        Family::Tree => {
            let n = o.size.unwrap_or(5);
            family_report("tree", n, &tree_family(n), &o, None)?
        }
        Family::Variable => {
            let n = o.size.unwrap_or(2);
            family_report("variable", n, &variable_family(n), &o, None)?
        }
        Family::Synth => {
            let b = synth_family().map_err(input)?;
            let exhaustive = test_r2_exhaustive(&b);
            family_report("synth", b.space.state_count(), &b, &o, Some(exhaustive))?
        }
        Family::Streak => {
            let b = streak_bundle(o.k, o.l).map_err(input)?;
            let r: StreakReport = measure_consecutive_runs_with(&b, o.schedule, o.runs, o.budget, o.seed).map_err(input)?;
            let text = format!(
                "streak k={} l={} {:?}: streak ≥ k in {:.4} of {} runs (bound {:.4}, {} exhausted)",
                r.k, r.l, r.schedule, r.frequency_at_least_k, r.runs, r.claimed_bound, r.exhausted
            );
            return Ok(Output { json: to_json(&r), text, status: Status::Success });
        }
    };
    let text = format!(
        "{} size={} event={}: R1 {} (χ²={:.3}, threshold {:.3}); R2 violations {}",
        report.family,
        report.size,
        report.event,
        if report.r1.pass { "pass" } else { "FAIL" },
        report.r1.chi_square,
        report.r1.threshold,
        report.r2.violations + report.r2.exhaustive_violations.unwrap_or(0),
    );
    let status = if report.pass { Status::Success } else { Status::ValidationFailure };
    Ok(Output { json: to_json(&report), text, status })
}

// ---------------------------------------------------------------------------
// synth

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub from: usize,
    /// `[state, probability]` pairs; probabilities as exact `a/b` strings.
    pub to: Vec<(usize, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSynthesis {
    pub event: usize,
    pub probability: String,
    pub dependency: Option<bool>,
    pub lopsidependency: Option<bool>,
    pub lopsided_association: bool,
    pub kernel: Option<Vec<KernelRow>>,
    pub certificate: Option<Value>,
    pub r1_exact: Option<bool>,
    pub r2_exact: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthReport {
    pub states: usize,
    pub events: Vec<EventSynthesis>,
    pub all_feasible: bool,
}

fn certificate_json(c: &lll_core::synth::InfeasibilityCertificate) -> Value {
    serde_json::json!({
        "event": c.event,
        "violating_set": c.violating_set,
        "neighborhood": c.neighborhood,
        "set_mass": c.set_mass.to_string(),
        "neighborhood_mass": c.neighborhood_mass.to_string(),
    })
}

pub fn load_space(text: &str) -> Result<ExplicitSpaceSpec, CliError> {
    if let Ok(InstanceFile::ExplicitSpace { space, .. }) = serde_json::from_str::<InstanceFile>(text) {
        return Ok(space);
    }
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("expected an explicit space: {e}")))
}

pub fn synth(spec: &ExplicitSpaceSpec) -> Result<Output, CliError> {
    let space = explicit_space(spec)?;
    let input = |e: lll_core::synth::SynthError| CliError::Input(e.to_string());
    let mut events = Vec::new();
    for i in 0..space.event_count() {
        let synthesis = synthesize(&space, i).map_err(input)?;
        let mut e = EventSynthesis {
            event: i,
            probability: space.event_probability(i).to_string(),
            dependency: check_dependency(&space, i).ok(),
            lopsidependency: check_lopsidependency(&space, i).ok(),
            lopsided_association: false,
            kernel: None,
            certificate: None,
            r1_exact: None,
            r2_exact: None,
        };
        match synthesis {
            Synthesis::Feasible(o) => {
                e.lopsided_association = true;
                e.r1_exact = Some(check_r1_exact(&space, &o));
                e.r2_exact = Some(check_r2_exact(&space, &o));
                e.kernel = Some(
                    o.rows()
                        .map(|(u, row)| KernelRow {
                            from: u,
                            to: row.iter().filter(|(_, q)| !q.is_zero()).map(|(w, q)| (*w, q.to_string())).collect(),
                        })
                        .collect(),
                );
            }
            Synthesis::Infeasible(c) => e.certificate = Some(certificate_json(&c)),
        }
        events.push(e);
    }
    let all_feasible = events.iter().all(|e| e.lopsided_association);
    let text = events
        .iter()
        .map(|e| {
            format!(
                "event {} (p = {}): {}",
                e.event,
                e.probability,
                if e.lopsided_association { "oracle synthesized" } else { "no oracle (Hall violation)" }
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    let report = SynthReport { states: space.state_count(), events, all_feasible };
    let status = if all_feasible { Status::Success } else { Status::ValidationFailure };
    Ok(Output { json: to_json(&report), text, status })
}
