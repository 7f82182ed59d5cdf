//! Bounded model checking encodings over an unknown FSM: path validity,
//! loop conditions, the structural LTL translation, the witness condition,
//! QBF assembly, and universal expansion ([`expand`]).
//!
//! A path has positions `0..=k`; position `j` is one FSM transition, given by
//! its source state (`sigma`), event (`eps`) and emitted actions (`zeta`).

pub mod expand;

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::encode::{encode_base, Completeness, EncodingContext};
use crate::ltl::Ltl;
use crate::model::{Fsm, ScenarioTree};
use crate::sat::{
    to_qdimacs, Circuit, ClauseSink, CnfProblem, Quantifier, SatError, SolveResult, Tseitin, Var,
    VarName, VarPool,
};

pub use expand::{expand_universals, term_count, ExpansionStats};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BmcError {
    #[error("universal expansion needs about {projected} clauses, over the budget of {budget}")]
    BudgetExceeded { projected: usize, budget: usize },
}

/// Default cap on clauses produced by universal expansion.
pub const DEFAULT_EXPANSION_BUDGET: usize = 20_000_000;

/// Supplies the circuits for atomic propositions at a path position.
pub trait AtomSource {
    fn event(&self, event: usize, pos: usize) -> Circuit;
    fn action(&self, action: usize, pos: usize) -> Circuit;
}

/// Path variables for one bound `k`, indexed `[pos][state|event|action]`.
#[derive(Debug, Clone)]
pub struct PathVars {
    pub k: usize,
    pub sigma: Vec<Vec<Var>>,
    pub eps: Vec<Vec<Var>>,
    pub zeta: Vec<Vec<Var>>,
}

impl PathVars {
    pub fn declare(pool: &mut VarPool, k: usize, states: usize, events: usize, actions: usize) -> Self {
        let mut sigma = Vec::new();
        let mut eps = Vec::new();
        let mut zeta = Vec::new();
        for pos in 0..=k {
            eps.push((0..events).map(|event| pool.var(VarName::Eps { event, pos })).collect());
            sigma.push((0..states).map(|state| pool.var(VarName::Sigma { state, pos })).collect());
            zeta.push((0..actions).map(|action| pool.var(VarName::Zeta { action, pos })).collect());
        }
        Self { k, sigma, eps, zeta }
    }

    fn s(&self, state: usize, pos: usize) -> Circuit {
        Circuit::lit(self.sigma[pos][state].pos())
    }

    fn e(&self, event: usize, pos: usize) -> Circuit {
        Circuit::lit(self.eps[pos][event].pos())
    }

    fn z(&self, action: usize, pos: usize) -> Circuit {
        Circuit::lit(self.zeta[pos][action].pos())
    }
}

impl AtomSource for PathVars {
    fn event(&self, event: usize, pos: usize) -> Circuit {
        self.e(event, pos)
    }

    fn action(&self, action: usize, pos: usize) -> Circuit {
        self.z(action, pos)
    }
}

/// The parts of the path-validity constraint and the loop conditions.
#[derive(Debug, Clone)]
pub struct BmcPieces {
    pub init: Circuit,
    pub p_sigma: Circuit,
    pub p_eps: Circuit,
    pub p_y: Circuit,
    /// Absent under full completeness, where it is implied.
    pub p_y_last: Option<Circuit>,
    pub p_z: Circuit,
    /// Loop condition back to each position `0..=k`.
    pub loops: Vec<Circuit>,
    pub any_loop: Circuit,
}

impl BmcPieces {
    /// The path-validity constraint as a single conjunction.
    pub fn path_validity(&self) -> Circuit {
        let mut parts = vec![self.init.clone(), self.p_sigma.clone(), self.p_eps.clone(), self.p_y.clone()];
        parts.extend(self.p_y_last.clone());
        parts.push(self.p_z.clone());
        Circuit::and(parts)
    }
}

fn exactly_one(lits: Vec<Circuit>) -> Vec<Circuit> {
    let mut out = vec![Circuit::or(lits.clone())];
    for (i, a) in lits.iter().enumerate() {
        for b in &lits[i + 1..] {
            out.push(Circuit::not(Circuit::and(vec![a.clone(), b.clone()])));
        }
    }
    out
}

/// Builds all pieces over symbolic path variables. The y and z variables are
/// taken from (or added to) `pool`.
pub fn build_pieces(ctx: &EncodingContext, pool: &mut VarPool, path: &PathVars) -> BmcPieces {
    let k = path.k;
    let (ns, ne, na) = (ctx.states, ctx.num_events, ctx.num_actions);
    let y = |pool: &mut VarPool, i1, i2, e| Circuit::lit(ctx.y(pool, i1, i2, e));

    let mut p_sigma = Vec::new();
    let mut p_eps = Vec::new();
    for j in 0..=k {
        p_sigma.extend(exactly_one((0..ns).map(|i| path.s(i, j)).collect()));
        p_eps.extend(exactly_one((0..ne).map(|e| path.e(e, j)).collect()));
    }

    let mut p_y = Vec::new();
    for j in 0..k {
        for i1 in 0..ns {
            for i2 in 0..ns {
                for e in 0..ne {
                    let pre = Circuit::and(vec![path.s(i1, j), path.e(e, j), path.s(i2, j + 1)]);
                    p_y.push(Circuit::implies(pre, y(pool, i1, i2, e)));
                }
            }
        }
    }

    let p_y_last = (ctx.mode != Completeness::Complete).then(|| {
        let mut parts = Vec::new();
        for i1 in 0..ns {
            for e in 0..ne {
                let pre = Circuit::and(vec![path.s(i1, k), path.e(e, k)]);
                let some = Circuit::or((0..ns).map(|i2| y(pool, i1, i2, e)).collect());
                parts.push(Circuit::implies(pre, some));
            }
        }
        Circuit::and(parts)
    });

    let mut p_z = Vec::new();
    for j in 0..=k {
        for i in 0..ns {
            for a in 0..na {
                for e in 0..ne {
                    let pre = Circuit::and(vec![path.s(i, j), path.e(e, j)]);
                    let z = Circuit::lit(ctx.z(pool, i, a, e));
                    p_z.push(Circuit::implies(pre, Circuit::iff(path.z(a, j), z)));
                }
            }
        }
    }

    let loops: Vec<Circuit> = (0..=k)
        .map(|l| {
            let mut parts = Vec::new();
            for i1 in 0..ns {
                for i2 in 0..ns {
                    for e in 0..ne {
                        parts.push(Circuit::and(vec![
                            path.s(i1, k),
                            path.e(e, k),
                            path.s(i2, l),
                            y(pool, i1, i2, e),
                        ]));
                    }
                }
            }
            Circuit::or(parts)
        })
        .collect();

    BmcPieces {
        init: path.s(0, 0),
        p_sigma: Circuit::and(p_sigma),
        p_eps: Circuit::and(p_eps),
        p_y: Circuit::and(p_y),
        p_y_last,
        p_z: Circuit::and(p_z),
        any_loop: Circuit::or(loops.clone()),
        loops,
    }
}

struct Translator<'a, A> {
    atoms: &'a A,
    k: usize,
    loop_to: Option<usize>,
    memo: HashMap<(usize, usize), Circuit>,
}

impl<A: AtomSource> Translator<'_, A> {
    fn all(&mut self, f: &Ltl, range: impl Iterator<Item = usize>) -> Circuit {
        Circuit::and(range.map(|i| self.tr(f, i)).collect())
    }

    fn tr(&mut self, f: &Ltl, j: usize) -> Circuit {
        let key = (f as *const Ltl as usize, j);
        if let Some(c) = self.memo.get(&key) {
            return c.clone();
        }
        let k = self.k;
        let c = match f {
            Ltl::True => Circuit::t(),
            Ltl::False => Circuit::f(),
            Ltl::WasEvent(e) => self.atoms.event(*e, j),
            Ltl::WasAction(a) => self.atoms.action(*a, j),
            Ltl::Not(g) => Circuit::not(self.tr(g, j)),
            Ltl::And(a, b) => Circuit::and(vec![self.tr(a, j), self.tr(b, j)]),
            Ltl::Or(a, b) => Circuit::or(vec![self.tr(a, j), self.tr(b, j)]),
            Ltl::Implies(a, b) => Circuit::or(vec![Circuit::not(self.tr(a, j)), self.tr(b, j)]),
            Ltl::Next(g) => match (j < k, self.loop_to) {
                (true, _) => self.tr(g, j + 1),
                (false, Some(l)) => self.tr(g, l),
                (false, None) => Circuit::f(),
            },
            Ltl::Globally(g) => match self.loop_to {
                None => Circuit::f(),
                Some(l) => Circuit::and((j.min(l)..=k).map(|i| self.tr(g, i)).collect()),
            },
            Ltl::Finally(g) => {
                let lo = self.loop_to.map_or(j, |l| j.min(l));
                Circuit::or((lo..=k).map(|i| self.tr(g, i)).collect())
            }
            Ltl::Until(a, b) => {
                let mut parts: Vec<Circuit> = (j..=k)
                    .map(|i| Circuit::and(vec![self.tr(b, i), self.all(a, j..i)]))
                    .collect();
                if let Some(l) = self.loop_to {
                    for i in l..j {
                        parts.push(Circuit::and(vec![
                            self.tr(b, i),
                            self.all(a, j..=k),
                            self.all(a, l..i),
                        ]));
                    }
                }
                Circuit::or(parts)
            }
            Ltl::Release(a, b) => {
                let mut parts = Vec::new();
                if let Some(l) = self.loop_to {
                    parts.push(self.all(b, j.min(l)..=k));
                }
                for i in j..=k {
                    parts.push(Circuit::and(vec![self.tr(a, i), self.all(b, j..=i)]));
                }
                if let Some(l) = self.loop_to {
                    for i in l..j {
                        parts.push(Circuit::and(vec![
                            self.tr(a, i),
                            self.all(b, j..=k),
                            self.all(b, l..=i),
                        ]));
                    }
                }
                Circuit::or(parts)
            }
        };
        self.memo.insert(key, c.clone());
        c
    }
}

/// Translation of an NNF formula at position `j` of a path with last
/// position `k`; `loop_to` selects the `(k, l)`-loop variant.
pub fn translate(f: &Ltl, j: usize, k: usize, loop_to: Option<usize>, atoms: &impl AtomSource) -> Circuit {
    assert!(j <= k, "position {j} beyond bound {k}");
    Translator {
        atoms,
        k,
        loop_to,
        memo: HashMap::new(),
    }
    .tr(f, j)
}

/// Witness condition for an NNF formula, given the loop conditions for
/// every loop target `0..=k`.
pub fn witness(f: &Ltl, k: usize, atoms: &impl AtomSource, loops: &[Circuit]) -> Circuit {
    debug_assert_eq!(loops.len(), k + 1);
    let mut parts = vec![Circuit::and(vec![
        Circuit::not(Circuit::or(loops.to_vec())),
        translate(f, 0, k, None, atoms),
    ])];
    for (l, cond) in loops.iter().enumerate() {
        parts.push(Circuit::and(vec![cond.clone(), translate(f, 0, k, Some(l), atoms)]));
    }
    Circuit::or(parts)
}

/// NNF of the negated conjunction of `formulas`.
pub fn negated_spec(formulas: &[Ltl]) -> Ltl {
    Ltl::not(Ltl::conjunction(formulas.to_vec())).to_nnf()
}

/// A quantified formula: clauses plus a prefix, outermost block first.
#[derive(Debug)]
pub struct Qbf {
    pub problem: CnfProblem,
    pub blocks: Vec<(Quantifier, Vec<Var>)>,
    /// The path-dependent part of the matrix before clausification.
    pub path_matrix: Circuit,
}

impl Qbf {
    pub fn to_qdimacs(&self) -> Result<String, SatError> {
        let clauses = self.problem.clauses().expect("QBF clauses are recorded");
        to_qdimacs(self.problem.num_vars(), clauses, &self.blocks)
    }

    /// Human-readable prefix, path matrix and clauses.
    pub fn dump(&self) -> String {
        let pool = self.problem.pool();
        let mut out = String::new();
        for (q, vars) in &self.blocks {
            if vars.is_empty() {
                continue;
            }
            out.push_str(match q {
                Quantifier::Exists => "exists",
                Quantifier::Forall => "forall",
            });
            for &v in vars {
                let _ = write!(out, " {}", pool.name(v));
            }
            out.push('\n');
        }
        let _ = writeln!(out, "matrix: S & Z & B & C & {}", self.path_matrix.display(pool));
        out.push_str(&self.problem.dump_symbolic());
        out
    }
}

/// Formula asserting that some FSM satisfies the scenario constraints and no
/// valid path of `k + 1` positions witnesses `f`.
pub fn assemble_qbf(ctx: &EncodingContext, f: &Ltl, k: usize, symmetry: bool) -> Qbf {
    let mut p = CnfProblem::store_only();
    encode_base(ctx, &mut p, symmetry);
    let path = PathVars::declare(p.pool_mut(), k, ctx.states, ctx.num_events, ctx.num_actions);
    let pieces = build_pieces(ctx, p.pool_mut(), &path);
    let w = witness(f, k, &path, &pieces.loops);
    let matrix = Circuit::or(vec![
        Circuit::not(pieces.path_validity()),
        Circuit::not(w),
    ]);
    Tseitin::new().assert(&matrix, &mut p);

    let pool = p.pool();
    let outer = pool.vars_where(|n| !n.is_path() && !n.is_aux());
    let mut universal: Vec<Var> = path.eps.iter().flatten().copied().collect();
    universal.extend(path.sigma.iter().flatten());
    universal.extend(path.zeta.iter().flatten());
    let inner = pool.vars_where(VarName::is_aux);
    Qbf {
        problem: p,
        blocks: vec![
            (Quantifier::Exists, outer),
            (Quantifier::Forall, universal),
            (Quantifier::Exists, inner),
        ],
        path_matrix: matrix,
    }
}

/// Whether `fsm` has a path of `k + 1` positions from the initial state that
/// witnesses the NNF formula `f`, decided by SAT with the FSM fixed by units.
pub fn has_bounded_witness(fsm: &Fsm, num_actions: usize, f: &Ltl, k: usize) -> bool {
    let tree = ScenarioTree::empty(fsm.num_events());
    let graph = crate::model::inconsistent_pairs(&tree);
    let ctx = EncodingContext {
        num_events: fsm.num_events(),
        num_actions,
        states: fsm.state_count(),
        tree: &tree,
        graph: &graph,
        mode: Completeness::AtLeastOne,
    };
    let mut p = CnfProblem::new(false);
    for src in 0..ctx.states {
        for e in 0..ctx.num_events {
            let t = fsm.transition(src, e);
            for dst in 0..ctx.states {
                let y = ctx.y(p.pool_mut(), src, dst, e);
                let on = t.is_some_and(|t| t.dst == dst);
                p.add_clause(&[if on { y } else { !y }]);
            }
            for a in 0..num_actions {
                let z = ctx.z(p.pool_mut(), src, a, e);
                let on = t.is_some_and(|t| t.outputs.contains(a));
                p.add_clause(&[if on { z } else { !z }]);
            }
        }
    }
    let path = PathVars::declare(p.pool_mut(), k, ctx.states, ctx.num_events, ctx.num_actions);
    let pieces = build_pieces(&ctx, p.pool_mut(), &path);
    let w = witness(f, k, &path, &pieces.loops);
    Tseitin::new().assert(&Circuit::and(vec![pieces.path_validity(), w]), &mut p);
    matches!(p.solve(None), SolveResult::Sat(_))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{inconsistent_pairs, ActionSet};

    struct Fixture {
        tree: ScenarioTree,
        graph: crate::model::ConsistencyGraph,
    }

    impl Fixture {
        fn new(events: usize) -> Self {
            let tree = ScenarioTree::empty(events);
            let graph = inconsistent_pairs(&tree);
            Self { tree, graph }
        }

        fn ctx(&self, states: usize, actions: usize, mode: Completeness) -> EncodingContext<'_> {
            EncodingContext {
                num_events: self.tree.num_events(),
                num_actions: actions,
                states,
                tree: &self.tree,
                graph: &self.graph,
                mode,
            }
        }
    }

    fn response() -> Ltl {
        // G(wasAction(z2) -> X wasAction(z1))
        Ltl::globally(Ltl::implies(Ltl::WasAction(1), Ltl::next(Ltl::WasAction(0))))
    }

    #[test]
    fn k0_has_no_transition_constraints() {
        let fx = Fixture::new(2);
        let ctx = fx.ctx(2, 1, Completeness::AtLeastOne);
        let mut pool = VarPool::new();
        let path = PathVars::declare(&mut pool, 0, 2, 2, 1);
        let pieces = build_pieces(&ctx, &mut pool, &path);
        assert_eq!(pieces.p_y, Circuit::and(vec![]));
        assert!(pieces.p_y_last.is_some());
        assert_eq!(pieces.loops.len(), 1);
        let ctx = fx.ctx(2, 1, Completeness::Complete);
        assert!(build_pieces(&ctx, &mut pool, &path).p_y_last.is_none());
    }

    #[test]
    fn witness_of_constants() {
        let fx = Fixture::new(1);
        let ctx = fx.ctx(1, 1, Completeness::AtLeastOne);
        let mut pool = VarPool::new();
        let path = PathVars::declare(&mut pool, 1, 1, 1, 1);
        let pieces = build_pieces(&ctx, &mut pool, &path);
        let n = pool.len();
        for bits in 0u32..1 << n {
            let val = |l: crate::sat::Lit| (bits >> l.var().index() & 1 == 1) == l.is_positive();
            assert!(!witness(&Ltl::False, 1, &path, &pieces.loops).eval(&val));
            assert!(witness(&Ltl::True, 1, &path, &pieces.loops).eval(&val));
        }
    }

    #[test]
    fn translation_is_polynomial() {
        let mut pool = VarPool::new();
        let path = PathVars::declare(&mut pool, 8, 1, 2, 2);
        let f = Ltl::until(
            Ltl::WasEvent(0),
            Ltl::release(Ltl::WasAction(0), Ltl::finally(Ltl::WasAction(1))),
        );
        let c = translate(&f, 0, 8, Some(3), &path);
        assert!(c.size() < 20 * 81 * 6, "size {}", c.size());
    }

    #[test]
    fn bounded_witness_for_fixed_fsm() {
        // Single state toggling between z1 and z2 is impossible; use two states.
        let mut fsm = Fsm::new(2, 1);
        fsm.set_transition(0, 0, 1, ActionSet::EMPTY.with(1));
        fsm.set_transition(1, 0, 0, ActionSet::EMPTY.with(1));
        let f = Ltl::not(response()).to_nnf();
        // z2 is never followed by z1: a witness needs two positions.
        assert!(!has_bounded_witness(&fsm, 2, &f, 0));
        assert!(has_bounded_witness(&fsm, 2, &f, 1));
        let g = Ltl::not(Ltl::globally(Ltl::WasAction(1))).to_nnf();
        assert!(!has_bounded_witness(&fsm, 2, &g, 3));
    }

    #[test]
    fn qbf_prefix_binds_every_variable() {
        let fx = Fixture::new(2);
        let ctx = fx.ctx(2, 2, Completeness::Complete);
        let f = Ltl::not(response()).to_nnf();
        let qbf = assemble_qbf(&ctx, &f, 1, true);
        let text = qbf.to_qdimacs().unwrap();
        let prefix: Vec<&str> = text.lines().filter(|l| l.starts_with(['e', 'a'])).collect();
        assert_eq!(prefix.len(), 3);
        assert!(prefix[0].starts_with("e ") && prefix[1].starts_with("a ") && prefix[2].starts_with("e "));
        // eps, sigma and zeta: 2 + 2 + 2 per position, two positions.
        assert_eq!(prefix[1].split_whitespace().count() - 2, 12);
        assert!(qbf.dump().contains("forall eps(1,0)"));
    }
}
