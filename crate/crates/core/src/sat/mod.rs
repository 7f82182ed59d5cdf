//! CNF infrastructure: literals, a named variable pool, an incremental clause
//! store backed by the embedded CDCL solver, circuits with Tseitin encoding,
//! DIMACS/QDIMACS export and an adapter for external solvers.

pub mod circuit;
pub mod dimacs;
pub mod external;
pub mod solver;

use std::collections::HashMap;
use std::fmt;
use std::ops::Not;
use std::time::Instant;

use thiserror::Error;

pub use circuit::{Circuit, Node, Tseitin};
pub use dimacs::{to_dimacs, to_qdimacs, Quantifier};
pub use external::{ExternalOutcome, ExternalSolver, SolverKind};
pub use solver::{Solver, SolverStats};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SatError {
    #[error("variable {0} is not bound by any quantifier block")]
    UnquantifiedVariable(u32),
    #[error("external solver failed: {0}")]
    SolverCrashed(String),
    #[error("external solver timed out")]
    Timeout,
}

/// Zero-based variable index; DIMACS numbering is `index + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn dimacs(self) -> u32 {
        self.0 + 1
    }

    pub fn pos(self) -> Lit {
        Lit::new(self, true)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Lit {
        Lit::new(self, false)
    }
}

/// Literal encoded as `2 * var + (negated as u32)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Self {
        Lit(var.0 << 1 | u32::from(!positive))
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn to_dimacs(self) -> i32 {
        let v = self.var().dimacs() as i32;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }

    pub fn from_dimacs(lit: i32) -> Self {
        assert!(lit != 0, "0 is not a DIMACS literal");
        Lit::new(Var(lit.unsigned_abs() - 1), lit > 0)
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

/// Structured variable names. Node, state, event and action indices are
/// zero-based internally and printed one-based; path positions print as-is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarName {
    /// Tree node `node` is coloured with `state`.
    X { node: usize, state: usize },
    /// Transition `src --event--> dst` exists.
    Y { src: usize, dst: usize, event: usize },
    /// Transition from `state` on `event` emits `action`.
    Z { state: usize, action: usize, event: usize },
    /// Negative-tree node `node` is reached in `state`.
    XBar { node: usize, state: usize },
    /// Some transition leads from `i` to `j`.
    T { i: usize, j: usize },
    /// `i` is the BFS parent of `j`.
    P { j: usize, i: usize },
    /// `e` is the smallest event labelling a transition from `i` to `j`.
    M { i: usize, j: usize, event: usize },
    Sigma { state: usize, pos: usize },
    Eps { event: usize, pos: usize },
    Zeta { action: usize, pos: usize },
    Aux(u32),
}

impl VarName {
    pub fn is_aux(&self) -> bool {
        matches!(self, VarName::Aux(_))
    }

    pub fn is_path(&self) -> bool {
        matches!(
            self,
            VarName::Sigma { .. } | VarName::Eps { .. } | VarName::Zeta { .. }
        )
    }
}

impl fmt::Display for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            VarName::X { node, state } => write!(f, "x({},{})", node + 1, state + 1),
            VarName::Y { src, dst, event } => write!(f, "y({},{},{})", src + 1, dst + 1, event + 1),
            VarName::Z {
                state,
                action,
                event,
            } => write!(f, "z({},{},{})", state + 1, action + 1, event + 1),
            VarName::XBar { node, state } => write!(f, "xbar({},{})", node + 1, state + 1),
            VarName::T { i, j } => write!(f, "t({},{})", i + 1, j + 1),
            VarName::P { j, i } => write!(f, "p({},{})", j + 1, i + 1),
            VarName::M { i, j, event } => write!(f, "m({},{},{})", i + 1, j + 1, event + 1),
            VarName::Sigma { state, pos } => write!(f, "sigma({},{})", state + 1, pos),
            VarName::Eps { event, pos } => write!(f, "eps({},{})", event + 1, pos),
            VarName::Zeta { action, pos } => write!(f, "zeta({},{})", action + 1, pos),
            VarName::Aux(n) => write!(f, "aux({n})"),
        }
    }
}

/// Bijection between structured names and variables.
#[derive(Debug, Clone, Default)]
pub struct VarPool {
    names: Vec<VarName>,
    index: HashMap<VarName, Var>,
    aux_count: u32,
}

impl VarPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the variable for `name`, allocating it on first use.
    pub fn var(&mut self, name: VarName) -> Var {
        if let Some(&v) = self.index.get(&name) {
            return v;
        }
        let v = Var(self.names.len() as u32);
        self.names.push(name);
        self.index.insert(name, v);
        v
    }

    pub fn get(&self, name: VarName) -> Option<Var> {
        self.index.get(&name).copied()
    }

    pub fn fresh_aux(&mut self) -> Var {
        let name = VarName::Aux(self.aux_count);
        self.aux_count += 1;
        self.var(name)
    }

    pub fn name(&self, var: Var) -> VarName {
        self.names[var.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn vars_where(&self, pred: impl Fn(&VarName) -> bool) -> Vec<Var> {
        self.names
            .iter()
            .enumerate()
            .filter(|(_, n)| pred(n))
            .map(|(i, _)| Var(i as u32))
            .collect()
    }

    pub fn format_lit(&self, lit: Lit) -> String {
        let name = self.name(lit.var());
        if lit.is_positive() {
            name.to_string()
        } else {
            format!("-{name}")
        }
    }
}

/// Anything that accepts clauses and can mint fresh auxiliary variables.
pub trait ClauseSink {
    fn fresh_var(&mut self) -> Var;
    fn add_clause(&mut self, lits: &[Lit]);
}

/// Assignment returned by a solver; unlisted variables read as false.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Model(Vec<bool>);

impl Model {
    pub fn new(values: Vec<bool>) -> Self {
        Model(values)
    }

    /// Builds a model from signed DIMACS literals.
    pub fn from_dimacs(lits: &[i32], num_vars: usize) -> Self {
        let mut values = vec![false; num_vars];
        for &l in lits {
            let idx = l.unsigned_abs() as usize - 1;
            if idx >= values.len() {
                values.resize(idx + 1, false);
            }
            values[idx] = l > 0;
        }
        Model(values)
    }

    pub fn value(&self, var: Var) -> bool {
        self.0.get(var.index()).copied().unwrap_or(false)
    }

    pub fn lit(&self, lit: Lit) -> bool {
        self.value(lit.var()) == lit.is_positive()
    }

    pub fn satisfies(&self, clause: &[Lit]) -> bool {
        clause.iter().any(|&l| self.lit(l))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveResult {
    Sat(Model),
    Unsat,
    /// The deadline passed before a verdict.
    Interrupted,
}

/// Named clause database feeding an incremental solver. Clauses are passed
/// to the solver as they arrive; a copy is kept only when `record` is set
/// (needed for DIMACS export and external solving).
#[derive(Debug)]
pub struct CnfProblem {
    pool: VarPool,
    solver: Option<Solver>,
    log: Option<Vec<Vec<Lit>>>,
    clause_count: usize,
}

impl CnfProblem {
    pub fn new(record: bool) -> Self {
        Self {
            pool: VarPool::new(),
            solver: Some(Solver::new()),
            log: record.then(Vec::new),
            clause_count: 0,
        }
    }

    /// Records clauses without feeding a solver; for export only.
    pub fn store_only() -> Self {
        Self {
            pool: VarPool::new(),
            solver: None,
            log: Some(Vec::new()),
            clause_count: 0,
        }
    }

    pub fn pool(&self) -> &VarPool {
        &self.pool
    }

    pub fn pool_mut(&mut self) -> &mut VarPool {
        &mut self.pool
    }

    pub fn var(&mut self, name: VarName) -> Var {
        self.pool.var(name)
    }

    pub fn num_vars(&self) -> usize {
        self.pool.len()
    }

    pub fn clause_count(&self) -> usize {
        self.clause_count
    }

    pub fn is_recording(&self) -> bool {
        self.log.is_some()
    }

    /// Recorded clauses, if recording is enabled.
    pub fn clauses(&self) -> Option<&[Vec<Lit>]> {
        self.log.as_deref()
    }

    pub fn solver_stats(&self) -> SolverStats {
        self.solver.as_ref().map(Solver::stats).unwrap_or_default()
    }

    /// # Panics
    /// If the problem was created with [`store_only`](Self::store_only).
    pub fn solve(&mut self, deadline: Option<Instant>) -> SolveResult {
        let solver = self.solver.as_mut().expect("problem has no embedded solver");
        solver.ensure_vars(self.pool.len());
        solver.solve(deadline)
    }

    /// Solves the recorded clause set with an external SAT solver.
    pub fn solve_external(&self, solver: &ExternalSolver) -> Result<SolveResult, SatError> {
        let text = self.to_dimacs();
        match solver.solve(&text, SolverKind::Sat)? {
            ExternalOutcome::Unsat => Ok(SolveResult::Unsat),
            ExternalOutcome::Sat(Some(lits)) => {
                Ok(SolveResult::Sat(Model::from_dimacs(&lits, self.num_vars())))
            }
            ExternalOutcome::Sat(None) => Err(SatError::SolverCrashed(
                "SAT solver reported SATISFIABLE without a model".into(),
            )),
        }
    }

    /// DIMACS text of the recorded clauses.
    ///
    /// # Panics
    /// If recording is disabled.
    pub fn to_dimacs(&self) -> String {
        let clauses = self.log.as_ref().expect("clause recording is disabled");
        to_dimacs(self.num_vars(), clauses)
    }

    /// One clause per line with symbolic variable names.
    pub fn dump_symbolic(&self) -> String {
        let clauses = self.log.as_ref().expect("clause recording is disabled");
        let mut out = String::new();
        for c in clauses {
            let parts: Vec<String> = c.iter().map(|&l| self.pool.format_lit(l)).collect();
            out.push_str(&parts.join(" | "));
            out.push('\n');
        }
        out
    }
}

impl ClauseSink for CnfProblem {
    fn fresh_var(&mut self) -> Var {
        self.pool.fresh_aux()
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        self.clause_count += 1;
        if let Some(log) = &mut self.log {
            log.push(lits.to_vec());
        }
        if let Some(solver) = &mut self.solver {
            solver.add_clause(lits);
        }
    }
}

/// Clause buffer with private auxiliary numbering, used to build parts of a
/// formula independently and splice them in later with [`LocalClauses::drain_into`].
#[derive(Debug, Clone, Default)]
pub struct LocalClauses {
    pub clauses: Vec<Vec<Lit>>,
    aux: u32,
}

impl LocalClauses {
    /// Local auxiliaries live above this index until spliced.
    pub const BASE: u32 = 1 << 30;

    pub fn new() -> Self {
        Self::default()
    }

    /// Moves the clauses into `sink`, renumbering local auxiliaries to fresh
    /// sink variables in allocation order.
    pub fn drain_into(self, sink: &mut impl ClauseSink) {
        let map: Vec<Var> = (0..self.aux).map(|_| sink.fresh_var()).collect();
        let mut buf = Vec::new();
        for c in self.clauses {
            buf.clear();
            buf.extend(c.iter().map(|&l| {
                let v = l.var().0;
                if v >= Self::BASE {
                    Lit::new(map[(v - Self::BASE) as usize], l.is_positive())
                } else {
                    l
                }
            }));
            sink.add_clause(&buf);
        }
    }
}

impl ClauseSink for LocalClauses {
    fn fresh_var(&mut self) -> Var {
        let v = Var(Self::BASE + self.aux);
        self.aux += 1;
        v
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        self.clauses.push(lits.to_vec());
    }
}

impl ClauseSink for Vec<Vec<Lit>> {
    fn fresh_var(&mut self) -> Var {
        panic!("plain clause vectors cannot allocate variables")
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        self.push(lits.to_vec());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_encoding() {
        let v = Var(4);
        assert_eq!(v.pos().to_dimacs(), 5);
        assert_eq!(v.neg().to_dimacs(), -5);
        assert_eq!(!v.pos(), v.neg());
        assert_eq!(Lit::from_dimacs(-5), v.neg());
    }

    #[test]
    fn pool_is_injective() {
        let mut pool = VarPool::new();
        let a = pool.var(VarName::X { node: 0, state: 0 });
        let b = pool.var(VarName::X { node: 0, state: 1 });
        assert_ne!(a, b);
        assert_eq!(pool.var(VarName::X { node: 0, state: 0 }), a);
        assert_eq!(pool.name(b), VarName::X { node: 0, state: 1 });
        let aux = pool.fresh_aux();
        assert!(pool.name(aux).is_aux());
        assert_eq!(pool.len(), 3);
    }

    #[test]
    fn incremental_clause_addition() {
        let mut p = CnfProblem::new(true);
        let a = p.var(VarName::Aux(100));
        let b = p.var(VarName::Aux(101));
        p.add_clause(&[a.pos(), b.pos()]);
        p.add_clause(&[a.neg()]);
        match p.solve(None) {
            SolveResult::Sat(m) => assert!(m.value(b)),
            other => panic!("{other:?}"),
        }
        p.add_clause(&[b.neg()]);
        assert_eq!(p.solve(None), SolveResult::Unsat);
    }

    #[test]
    fn empty_clause_is_unsat() {
        let mut p = CnfProblem::new(false);
        p.add_clause(&[]);
        assert_eq!(p.solve(None), SolveResult::Unsat);
    }

    #[test]
    fn local_clauses_renumber_in_order() {
        let mut p = CnfProblem::new(true);
        let a = p.var(VarName::Aux(7));
        let mut local = LocalClauses::new();
        let g = local.fresh_var();
        local.add_clause(&[g.neg(), a.pos()]);
        local.drain_into(&mut p);
        let c = &p.clauses().unwrap()[0];
        assert_eq!(c[0].var(), Var(1));
        assert_eq!(c[1], a.pos());
    }
}
