//! Identification of an FSM with a fixed number of states from scenarios and
//! LTL properties, and the driver searching for the minimum state count.
//!
//! Four methods are available:
//!
//! * [`Method::Iterative`]: solve, model check, prohibit counterexamples
//!   through the negative scenario tree, repeat.
//! * [`Method::Exponential`]: bounded model checking with the universal path
//!   quantifier expanded into plain clauses, increasing the bound.
//! * [`Method::Qsat`]: the same bounded formula handed to an external QBF
//!   solver.
//! * [`Method::Backtracking`]: depth-first search over partial FSMs.

mod backtracking;

pub use backtracking::{colour_tree, frontier};

use backtracking::identify_backtracking;

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::bmc::{assemble_qbf, expand_universals, negated_spec, BmcError, DEFAULT_EXPANSION_BUDGET};
use crate::encode::{decode_fsm, encode_base, Completeness, EncodeError, EncodingContext, NegativeEncoder};
use crate::ltl::Ltl;
use crate::model::{
    greedy_max_clique, inconsistent_pairs, Alphabet, ConsistencyGraph, Fsm, ModelError,
    NegativeScenarioTree, NegativeTreeDelta, Scenario, ScenarioTree, ScenarioVerdict, Transition,
};
use crate::par::Execution;
use crate::sat::{ClauseSink, CnfProblem, ExternalOutcome, ExternalSolver, Model, SatError, SolveResult, SolverKind};
use crate::verifier::ModelChecker;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("no QBF solver configured")]
    NoQbfSolver,
    #[error("counterexamples added no new prohibitions; the encoder and the model checker disagree")]
    InternalNoProgress,
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Iterative,
    Exponential,
    Qsat,
    Backtracking,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Iterative, Method::Exponential, Method::Qsat, Method::Backtracking];

    pub fn name(self) -> &'static str {
        match self {
            Method::Iterative => "iterative",
            Method::Exponential => "exponential",
            Method::Qsat => "qsat",
            Method::Backtracking => "backtracking",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Wall-clock limit for the whole request.
    pub timeout: Option<Duration>,
    /// Clause cap for universal expansion.
    pub expansion_budget: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            timeout: None,
            expansion_budget: DEFAULT_EXPANSION_BUDGET,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthesisRequest<'a> {
    pub alphabet: &'a Alphabet,
    pub scenarios: &'a [Scenario],
    pub formulas: &'a [Ltl],
    pub states: usize,
    pub mode: Completeness,
    pub method: Method,
    pub limits: Limits,
    /// Emit BFS symmetry-breaking constraints (SAT-based methods).
    pub symmetry: bool,
    pub qbf_solver: Option<ExternalSolver>,
    /// Replaces the embedded SAT solver when set.
    pub sat_solver: Option<ExternalSolver>,
    pub execution: Execution,
}

impl<'a> SynthesisRequest<'a> {
    pub fn new(alphabet: &'a Alphabet, scenarios: &'a [Scenario], formulas: &'a [Ltl], states: usize) -> Self {
        Self {
            alphabet,
            scenarios,
            formulas,
            states,
            mode: Completeness::AtLeastOne,
            method: Method::Iterative,
            limits: Limits::default(),
            symmetry: true,
            qbf_solver: None,
            sat_solver: None,
            execution: Execution::default(),
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_mode(mut self, mode: Completeness) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_states(mut self, states: usize) -> Self {
        self.states = states;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Found(Fsm),
    Unsatisfiable,
    Timeout,
    BudgetExceeded,
}

impl Outcome {
    pub fn fsm(&self) -> Option<&Fsm> {
        match self {
            Outcome::Found(f) => Some(f),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Found(_) => "found",
            Outcome::Unsatisfiable => "unsatisfiable",
            Outcome::Timeout => "timeout",
            Outcome::BudgetExceeded => "budget-exceeded",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynthesisStats {
    /// Solver calls (SAT methods) or visited search nodes (backtracking).
    pub iterations: usize,
    pub counterexamples: usize,
    /// Bound at termination for the bounded methods.
    pub final_k: Option<usize>,
    pub variables: usize,
    pub clauses: usize,
    pub elapsed: Duration,
    /// Terminal plus back-edge count of the negative tree after each
    /// refinement (iterative method).
    pub prohibitions: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub outcome: Outcome,
    pub stats: SynthesisStats,
    /// Final negative scenario tree of the iterative method.
    pub negative_tree: Option<NegativeScenarioTree>,
}

impl SynthesisResult {
    fn new(outcome: Outcome, stats: SynthesisStats) -> Self {
        Self {
            outcome,
            stats,
            negative_tree: None,
        }
    }
}

/// Scenario tree, consistency graph and checker shared by all methods.
pub(crate) struct Prepared {
    pub tree: ScenarioTree,
    pub graph: ConsistencyGraph,
    pub checker: ModelChecker,
}

impl Prepared {
    /// `None` when the scenarios contradict each other.
    pub fn new(req: &SynthesisRequest) -> Option<Self> {
        let tree = match ScenarioTree::build(req.alphabet, req.scenarios) {
            Ok(t) => t,
            Err(ModelError::DeterminismConflict { .. }) => return None,
            Err(e) => panic!("scenario tree: {e}"),
        };
        let graph = inconsistent_pairs(&tree);
        Some(Self {
            tree,
            graph,
            checker: ModelChecker::new(req.formulas),
        })
    }

    pub fn ctx<'p>(&'p self, req: &SynthesisRequest, mode: Completeness) -> EncodingContext<'p> {
        EncodingContext {
            num_events: req.alphabet.num_events(),
            num_actions: req.alphabet.num_actions(),
            states: req.states,
            tree: &self.tree,
            graph: &self.graph,
            mode,
        }
    }
}

pub(crate) struct Clock {
    start: Instant,
    deadline: Option<Instant>,
}

impl Clock {
    pub fn new(timeout: Option<Duration>) -> Self {
        let start = Instant::now();
        Self {
            start,
            deadline: timeout.map(|t| start + t),
        }
    }

    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    pub fn remaining(&self) -> Option<Duration> {
        self.deadline.map(|d| d.saturating_duration_since(Instant::now()))
    }

    pub fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }
}

/// Runs the requested method at the requested state count.
pub fn identify(req: &SynthesisRequest) -> Result<SynthesisResult, SynthError> {
    assert!(req.states >= 1, "at least one state is required");
    let clock = Clock::new(req.limits.timeout);
    let Some(prep) = Prepared::new(req) else {
        return Ok(SynthesisResult::new(Outcome::Unsatisfiable, SynthesisStats::default()));
    };
    let mut result = match req.method {
        Method::Iterative => iterative(req, &prep, &clock, &[], req.mode, req.symmetry)?,
        Method::Exponential => exponential(req, &prep, &clock)?,
        Method::Qsat => qsat(req, &prep, &clock)?,
        Method::Backtracking => identify_backtracking(req, &prep, &clock)?,
    };
    result.stats.elapsed = clock.elapsed();
    Ok(result)
}

fn solve(
    p: &mut CnfProblem,
    req: &SynthesisRequest,
    clock: &Clock,
) -> Result<SolveResult, SynthError> {
    match &req.sat_solver {
        Some(ext) => {
            let ext = ext.clone().with_timeout(clock.remaining());
            match p.solve_external(&ext) {
                Err(SatError::Timeout) => Ok(SolveResult::Interrupted),
                r => Ok(r?),
            }
        }
        None => Ok(p.solve(clock.deadline)),
    }
}

fn new_problem(req: &SynthesisRequest) -> CnfProblem {
    CnfProblem::new(req.sat_solver.is_some())
}

/// The counterexample-guided loop. `fixed` transitions are forced as unit
/// clauses (used to complete a partial FSM).
pub(crate) fn iterative(
    req: &SynthesisRequest,
    prep: &Prepared,
    clock: &Clock,
    fixed: &[(usize, usize, Transition)],
    mode: Completeness,
    symmetry: bool,
) -> Result<SynthesisResult, SynthError> {
    let ctx = prep.ctx(req, mode);
    let mut p = new_problem(req);
    encode_base(&ctx, &mut p, symmetry);
    for &(src, event, t) in fixed {
        let y = ctx.y(p.pool_mut(), src, t.dst, event);
        p.add_clause(&[y]);
        for a in 0..ctx.num_actions {
            let z = ctx.z(p.pool_mut(), src, a, event);
            p.add_clause(&[if t.outputs.contains(a) { z } else { !z }]);
        }
    }
    let mut neg = NegativeScenarioTree::new();
    let mut neg_enc = NegativeEncoder::new();
    let mut stats = SynthesisStats::default();
    let outcome = loop {
        if clock.expired() {
            break Outcome::Timeout;
        }
        stats.iterations += 1;
        let model = match solve(&mut p, req, clock)? {
            SolveResult::Sat(m) => m,
            SolveResult::Unsat => break Outcome::Unsatisfiable,
            SolveResult::Interrupted => break Outcome::Timeout,
        };
        let fsm = decode_fsm(&ctx, p.pool(), &model)?;
        let cexs = prep.checker.counterexamples(&fsm)?;
        if cexs.is_empty() {
            break Outcome::Found(fsm);
        }
        stats.counterexamples += cexs.len();
        let mut delta = NegativeTreeDelta::default();
        for c in &cexs {
            delta.merge(neg.add_counterexample(c));
        }
        if !delta.changed() {
            return Err(SynthError::InternalNoProgress);
        }
        stats
            .prohibitions
            .push(neg.terminal_count() + neg.back_edges().len());
        neg_enc.encode(&ctx, &delta, &mut p);
    };
    stats.variables = p.num_vars();
    stats.clauses = p.clause_count();
    Ok(SynthesisResult {
        outcome,
        stats,
        negative_tree: Some(neg),
    })
}

fn exponential(req: &SynthesisRequest, prep: &Prepared, clock: &Clock) -> Result<SynthesisResult, SynthError> {
    let ctx = prep.ctx(req, req.mode);
    let f = negated_spec(req.formulas);
    let mut stats = SynthesisStats::default();
    let mut k = 0;
    let outcome = loop {
        if clock.expired() {
            break Outcome::Timeout;
        }
        stats.final_k = Some(k);
        stats.iterations += 1;
        let mut p = new_problem(req);
        encode_base(&ctx, &mut p, req.symmetry);
        match expand_universals(&ctx, &f, k, &mut p, req.limits.expansion_budget, req.execution) {
            Ok(_) => {}
            Err(BmcError::BudgetExceeded { .. }) => break Outcome::BudgetExceeded,
        }
        stats.variables = p.num_vars();
        stats.clauses = p.clause_count();
        let model = match solve(&mut p, req, clock)? {
            SolveResult::Sat(m) => m,
            SolveResult::Unsat => break Outcome::Unsatisfiable,
            SolveResult::Interrupted => break Outcome::Timeout,
        };
        let fsm = decode_fsm(&ctx, p.pool(), &model)?;
        if prep.checker.holds_all(&fsm)? {
            break Outcome::Found(fsm);
        }
        stats.counterexamples += 1;
        k += 1;
    };
    Ok(SynthesisResult::new(outcome, stats))
}

fn scenarios_accepted(fsm: &Fsm, scenarios: &[Scenario]) -> bool {
    scenarios.iter().all(|s| fsm.run_scenario(s) == ScenarioVerdict::Accept)
}

/// Solves the expansion at bound `k`; used when the QBF solver reports
/// satisfiability without a usable model.
fn rederive(
    req: &SynthesisRequest,
    ctx: &EncodingContext,
    f: &Ltl,
    k: usize,
    clock: &Clock,
) -> Result<Outcome, SynthError> {
    let mut p = new_problem(req);
    encode_base(ctx, &mut p, req.symmetry);
    if expand_universals(ctx, f, k, &mut p, req.limits.expansion_budget, req.execution).is_err() {
        return Ok(Outcome::BudgetExceeded);
    }
    match solve(&mut p, req, clock)? {
        SolveResult::Sat(m) => Ok(Outcome::Found(decode_fsm(ctx, p.pool(), &m)?)),
        SolveResult::Unsat => Err(SynthError::Sat(SatError::SolverCrashed(
            "QBF solver reported SAT but the expanded formula is unsatisfiable".into(),
        ))),
        SolveResult::Interrupted => Ok(Outcome::Timeout),
    }
}

fn qsat(req: &SynthesisRequest, prep: &Prepared, clock: &Clock) -> Result<SynthesisResult, SynthError> {
    let solver = req.qbf_solver.as_ref().ok_or(SynthError::NoQbfSolver)?;
    let ctx = prep.ctx(req, req.mode);
    let f = negated_spec(req.formulas);
    let mut stats = SynthesisStats::default();
    let mut k = 0;
    let outcome = loop {
        if clock.expired() {
            break Outcome::Timeout;
        }
        stats.final_k = Some(k);
        stats.iterations += 1;
        let qbf = assemble_qbf(&ctx, &f, k, req.symmetry);
        stats.variables = qbf.problem.num_vars();
        stats.clauses = qbf.problem.clause_count();
        let text = qbf.to_qdimacs()?;
        let ext = solver.clone().with_timeout(clock.remaining());
        let outcome = match ext.solve(&text, SolverKind::Qsat) {
            Err(SatError::Timeout) => break Outcome::Timeout,
            r => r?,
        };
        let decoded = match outcome {
            ExternalOutcome::Unsat => break Outcome::Unsatisfiable,
            ExternalOutcome::Sat(Some(lits)) => {
                let model = Model::from_dimacs(&lits, qbf.problem.num_vars());
                decode_fsm(&ctx, qbf.problem.pool(), &model)
                    .ok()
                    .filter(|fsm| usable_qbf_model(fsm, req))
            }
            ExternalOutcome::Sat(None) => None,
        };
        let fsm = match decoded {
            Some(fsm) => fsm,
            None => match rederive(req, &ctx, &f, k, clock)? {
                Outcome::Found(fsm) => fsm,
                other => break other,
            },
        };
        if prep.checker.holds_all(&fsm)? {
            break Outcome::Found(fsm);
        }
        stats.counterexamples += 1;
        k += 1;
    };
    Ok(SynthesisResult::new(outcome, stats))
}

/// A solver may print only part of the outer block; accept its model only if
/// it fixes a full FSM consistent with the scenarios and the mode.
fn usable_qbf_model(fsm: &Fsm, req: &SynthesisRequest) -> bool {
    has_shape(fsm, req.mode) && scenarios_accepted(fsm, req.scenarios)
}

fn has_shape(fsm: &Fsm, mode: Completeness) -> bool {
    match mode {
        Completeness::Complete => fsm.is_complete(),
        Completeness::AtLeastOne => fsm.dead_states().is_empty(),
    }
}

/// Per-size record of a minimum search.
#[derive(Debug, Clone)]
pub struct SizeAttempt {
    pub states: usize,
    pub outcome: &'static str,
    pub stats: SynthesisStats,
}

#[derive(Debug, Clone)]
pub struct MinimumResult {
    /// Result at the last attempted size.
    pub result: SynthesisResult,
    /// State count of the first size with an FSM.
    pub states: Option<usize>,
    pub lower_bound: usize,
    pub attempts: Vec<SizeAttempt>,
}

/// Tries `max(1, clique bound)`, then larger sizes up to `max_states`, and
/// stops at the first FSM found or at a resource limit. The request's
/// timeout covers the whole search.
pub fn find_minimum(req: &SynthesisRequest, max_states: usize) -> Result<MinimumResult, SynthError> {
    let clock = Clock::new(req.limits.timeout);
    let lower_bound = match ScenarioTree::build(req.alphabet, req.scenarios) {
        Ok(tree) => greedy_max_clique(&inconsistent_pairs(&tree)).len().max(1),
        Err(_) => 1,
    };
    let mut attempts = Vec::new();
    let mut last = SynthesisResult::new(Outcome::Unsatisfiable, SynthesisStats::default());
    for states in lower_bound..=max_states {
        let mut sized = req.clone().with_states(states);
        sized.limits.timeout = clock.remaining();
        if clock.expired() {
            last = SynthesisResult::new(Outcome::Timeout, SynthesisStats::default());
            break;
        }
        let result = identify(&sized)?;
        attempts.push(SizeAttempt {
            states,
            outcome: result.outcome.label(),
            stats: result.stats.clone(),
        });
        let done = !matches!(result.outcome, Outcome::Unsatisfiable);
        let found = matches!(result.outcome, Outcome::Found(_));
        last = result;
        if found {
            return Ok(MinimumResult {
                result: last,
                states: Some(states),
                lower_bound,
                attempts,
            });
        }
        if done {
            break;
        }
    }
    Ok(MinimumResult {
        result: last,
        states: None,
        lower_bound,
        attempts,
    })
}

/// Whether `fsm` satisfies everything a found result promises.
pub fn is_valid_solution(fsm: &Fsm, scenarios: &[Scenario], formulas: &[Ltl], mode: Completeness) -> bool {
    has_shape(fsm, mode)
        && scenarios_accepted(fsm, scenarios)
        && ModelChecker::new(formulas).holds_all(fsm).unwrap_or(false)
}
