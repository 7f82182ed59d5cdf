//! Clause generators for the identification problem at a fixed state count:
//! scenario colouring (S), outputs (Z), completeness (C), BFS symmetry
//! breaking (B), the negative-tree constraints, and model decoding.
//!
//! At-most-one constraints are pairwise throughout.

use thiserror::Error;

use crate::model::{ActionSet, ConsistencyGraph, Fsm, NegativeTreeDelta, ScenarioTree};
use crate::sat::{ClauseSink, CnfProblem, Lit, Model, VarName, VarPool};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("model sets two transitions from state {} on event {}", state + 1, event + 1)]
    MalformedModel { state: usize, event: usize },
}

/// How many transitions each state must have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Completeness {
    /// A transition for every (state, event) pair.
    Complete,
    /// At least one outgoing transition per state.
    AtLeastOne,
}

#[derive(Debug, Clone, Copy)]
pub struct EncodingContext<'a> {
    pub num_events: usize,
    pub num_actions: usize,
    pub states: usize,
    pub tree: &'a ScenarioTree,
    pub graph: &'a ConsistencyGraph,
    pub mode: Completeness,
}

impl EncodingContext<'_> {
    pub fn x(&self, p: &mut VarPool, node: usize, state: usize) -> Lit {
        p.var(VarName::X { node, state }).pos()
    }

    pub fn y(&self, p: &mut VarPool, src: usize, dst: usize, event: usize) -> Lit {
        p.var(VarName::Y { src, dst, event }).pos()
    }

    pub fn z(&self, p: &mut VarPool, state: usize, action: usize, event: usize) -> Lit {
        p.var(VarName::Z { state, action, event }).pos()
    }

    pub fn xbar(&self, p: &mut VarPool, node: usize, state: usize) -> Lit {
        p.var(VarName::XBar { node, state }).pos()
    }

    /// Allocates x, y and z in a fixed order so variable numbering depends
    /// only on the context.
    pub fn declare(&self, p: &mut VarPool) {
        for v in 0..self.tree.node_count() {
            for i in 0..self.states {
                self.x(p, v, i);
            }
        }
        for i1 in 0..self.states {
            for e in 0..self.num_events {
                for i2 in 0..self.states {
                    self.y(p, i1, i2, e);
                }
            }
        }
        for i in 0..self.states {
            for e in 0..self.num_events {
                for a in 0..self.num_actions {
                    self.z(p, i, a, e);
                }
            }
        }
    }
}

fn at_most_one(lits: &[Lit], sink: &mut impl ClauseSink) {
    for (k, &a) in lits.iter().enumerate() {
        for &b in &lits[k + 1..] {
            sink.add_clause(&[!a, !b]);
        }
    }
}

/// Constraint S: every tree node gets exactly one colour, inconsistent nodes
/// get different colours, transitions are deterministic and agree with the
/// tree edges.
pub fn encode_scenario(ctx: &EncodingContext, p: &mut CnfProblem) {
    let n = ctx.tree.node_count();
    let s = ctx.states;
    let root = ctx.x(p.pool_mut(), 0, 0);
    p.add_clause(&[root]);
    for v in 0..n {
        let xs: Vec<Lit> = (0..s).map(|i| ctx.x(p.pool_mut(), v, i)).collect();
        p.add_clause(&xs);
        at_most_one(&xs, p);
    }
    for (u, v) in ctx.graph.pairs() {
        for i in 0..s {
            let (a, b) = (ctx.x(p.pool_mut(), u, i), ctx.x(p.pool_mut(), v, i));
            p.add_clause(&[!a, !b]);
        }
    }
    for i1 in 0..s {
        for e in 0..ctx.num_events {
            let ys: Vec<Lit> = (0..s).map(|i2| ctx.y(p.pool_mut(), i1, i2, e)).collect();
            at_most_one(&ys, p);
        }
    }
    for (v, e, edge) in ctx.tree.all_edges() {
        for i1 in 0..s {
            for i2 in 0..s {
                let xv = ctx.x(p.pool_mut(), v, i1);
                let xc = ctx.x(p.pool_mut(), edge.child, i2);
                let y = ctx.y(p.pool_mut(), i1, i2, e);
                p.add_clause(&[!xv, !xc, y]);
                p.add_clause(&[!xv, !y, xc]);
            }
        }
    }
}

/// Constraint Z: a node's colour fixes the outputs of its outgoing edges.
pub fn encode_actions(ctx: &EncodingContext, p: &mut CnfProblem) {
    for (v, e, edge) in ctx.tree.all_edges() {
        for i in 0..ctx.states {
            let x = ctx.x(p.pool_mut(), v, i);
            for a in 0..ctx.num_actions {
                let z = ctx.z(p.pool_mut(), i, a, e);
                let z = if edge.outputs.contains(a) { z } else { !z };
                p.add_clause(&[!x, z]);
            }
        }
    }
}

/// Constraint C in the requested mode.
pub fn encode_completeness(ctx: &EncodingContext, p: &mut CnfProblem) {
    let s = ctx.states;
    match ctx.mode {
        Completeness::Complete => {
            for i1 in 0..s {
                for e in 0..ctx.num_events {
                    let ys: Vec<Lit> = (0..s).map(|i2| ctx.y(p.pool_mut(), i1, i2, e)).collect();
                    p.add_clause(&ys);
                }
            }
        }
        Completeness::AtLeastOne => {
            for i1 in 0..s {
                let mut ys = Vec::new();
                for e in 0..ctx.num_events {
                    for i2 in 0..s {
                        ys.push(ctx.y(p.pool_mut(), i1, i2, e));
                    }
                }
                p.add_clause(&ys);
            }
        }
    }
}

/// Constraint B: states are numbered in breadth-first discovery order from
/// state 0, visiting successors by increasing event.
///
/// * `t(i,j)` iff some transition leads from `i` to `j` (`i < j`);
/// * `p(j,i)` iff `i` is the smallest state with a transition to `j`;
/// * every state `j > 0` has a parent, and parents do not decrease with `j`;
/// * `m(i,j,e)` iff `e` is the smallest event from `i` to `j`; siblings with
///   the same parent are ordered by it.
pub fn encode_symmetry_bfs(ctx: &EncodingContext, p: &mut CnfProblem) {
    let s = ctx.states;
    if s < 2 {
        return;
    }
    let ne = ctx.num_events;
    let t = |p: &mut CnfProblem, i: usize, j: usize| p.var(VarName::T { i, j }).pos();
    let par = |p: &mut CnfProblem, j: usize, i: usize| p.var(VarName::P { j, i }).pos();
    let m = |p: &mut CnfProblem, i: usize, j: usize, event: usize| p.var(VarName::M { i, j, event }).pos();

    for j in 1..s {
        for i in 0..j {
            let tij = t(p, i, j);
            let ys: Vec<Lit> = (0..ne).map(|e| ctx.y(p.pool_mut(), i, j, e)).collect();
            let mut c = vec![!tij];
            c.extend(&ys);
            p.add_clause(&c);
            for &y in &ys {
                p.add_clause(&[tij, !y]);
            }
        }
    }
    for j in 1..s {
        for i in 0..j {
            let pji = par(p, j, i);
            let tij = t(p, i, j);
            p.add_clause(&[!pji, tij]);
            let mut c = vec![pji, !tij];
            for k in 0..i {
                let tkj = t(p, k, j);
                p.add_clause(&[!pji, !tkj]);
                c.push(tkj);
            }
            p.add_clause(&c);
        }
        let parents: Vec<Lit> = (0..j).map(|i| par(p, j, i)).collect();
        p.add_clause(&parents);
    }
    for j in 1..s - 1 {
        for i in 0..j {
            for k in 0..i {
                let a = par(p, j, i);
                let b = par(p, j + 1, k);
                p.add_clause(&[!a, !b]);
            }
        }
    }
    for j in 1..s {
        for i in 0..j {
            for e in 0..ne {
                let mij = m(p, i, j, e);
                let y = ctx.y(p.pool_mut(), i, j, e);
                p.add_clause(&[!mij, y]);
                let mut c = vec![mij, !y];
                for e2 in 0..e {
                    let y2 = ctx.y(p.pool_mut(), i, j, e2);
                    p.add_clause(&[!mij, !y2]);
                    c.push(y2);
                }
                p.add_clause(&c);
            }
        }
    }
    for j in 1..s - 1 {
        for i in 0..j {
            for e in 0..ne {
                let mut c = vec![!par(p, j, i), !par(p, j + 1, i), !m(p, i, j + 1, e)];
                for e2 in 0..e {
                    c.push(m(p, i, j, e2));
                }
                p.add_clause(&c);
            }
        }
    }
}

/// S, Z and C, plus B when `symmetry` is set.
pub fn encode_base(ctx: &EncodingContext, p: &mut CnfProblem, symmetry: bool) {
    ctx.declare(p.pool_mut());
    encode_scenario(ctx, p);
    encode_actions(ctx, p);
    encode_completeness(ctx, p);
    if symmetry {
        encode_symmetry_bfs(ctx, p);
    }
}

/// Incremental negative-tree constraints. The root unit is emitted with the
/// first delta; later calls emit clauses for new material only.
#[derive(Debug, Clone, Default)]
pub struct NegativeEncoder {
    root_emitted: bool,
}

impl NegativeEncoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn encode(
        &mut self,
        ctx: &EncodingContext,
        delta: &NegativeTreeDelta,
        p: &mut CnfProblem,
    ) {
        let s = ctx.states;
        if !self.root_emitted {
            let root = ctx.xbar(p.pool_mut(), 0, 0);
            p.add_clause(&[root]);
            self.root_emitted = true;
        }
        for &(v, edge) in &delta.new_edges {
            for i1 in 0..s {
                let mut outputs: Vec<Lit> = Vec::with_capacity(ctx.num_actions);
                for a in 0..ctx.num_actions {
                    let z = ctx.z(p.pool_mut(), i1, a, edge.event);
                    outputs.push(if edge.outputs.contains(a) { !z } else { z });
                }
                for i2 in 0..s {
                    let mut c = vec![
                        !ctx.xbar(p.pool_mut(), v, i1),
                        !ctx.y(p.pool_mut(), i1, i2, edge.event),
                    ];
                    c.extend(&outputs);
                    c.push(ctx.xbar(p.pool_mut(), edge.child, i2));
                    p.add_clause(&c);
                }
            }
        }
        for &v in &delta.new_terminals {
            for i in 0..s {
                let x = ctx.xbar(p.pool_mut(), v, i);
                p.add_clause(&[!x]);
            }
        }
        for &(from, to) in &delta.new_back_edges {
            for i in 0..s {
                let a = ctx.xbar(p.pool_mut(), from, i);
                let b = ctx.xbar(p.pool_mut(), to, i);
                p.add_clause(&[!a, !b]);
            }
        }
    }
}

/// Reads the FSM off the y and z variables of a model.
pub fn decode_fsm(ctx: &EncodingContext, pool: &VarPool, model: &Model) -> Result<Fsm, EncodeError> {
    let mut fsm = Fsm::new(ctx.states, ctx.num_events);
    let val = |name: VarName| pool.get(name).is_some_and(|v| model.value(v));
    for src in 0..ctx.states {
        for event in 0..ctx.num_events {
            let mut dst = None;
            for d in 0..ctx.states {
                if val(VarName::Y { src, dst: d, event }) {
                    if dst.is_some() {
                        return Err(EncodeError::MalformedModel { state: src, event });
                    }
                    dst = Some(d);
                }
            }
            if let Some(d) = dst {
                let outputs: ActionSet = (0..ctx.num_actions)
                    .filter(|&action| val(VarName::Z { state: src, action, event }))
                    .collect();
                fsm.set_transition(src, event, d, outputs);
            }
        }
    }
    Ok(fsm)
}

/// Whether states are numbered in BFS discovery order from state 0 with
/// successors visited by increasing event, and all states are reachable.
pub fn is_bfs_ordered(fsm: &Fsm) -> bool {
    let mut order = vec![usize::MAX; fsm.state_count()];
    order[0] = 0;
    let mut next = 1;
    let mut queue = std::collections::VecDeque::from([0]);
    while let Some(s) = queue.pop_front() {
        for e in 0..fsm.num_events() {
            if let Some(t) = fsm.transition(s, e) {
                if order[t.dst] == usize::MAX {
                    order[t.dst] = next;
                    next += 1;
                    queue.push_back(t.dst);
                }
            }
        }
    }
    order.iter().enumerate().all(|(i, &o)| o == i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{inconsistent_pairs, Alphabet, NegativeScenarioTree, Scenario, ScenarioElement};
    use crate::sat::SolveResult;

    fn el(e: usize, a: usize) -> ScenarioElement {
        ScenarioElement::new(e, ActionSet::EMPTY.with(a))
    }

    #[test]
    fn single_node_tree_one_state() {
        let tree = ScenarioTree::empty(1);
        let graph = inconsistent_pairs(&tree);
        let ctx = EncodingContext {
            num_events: 1,
            num_actions: 1,
            states: 1,
            tree: &tree,
            graph: &graph,
            mode: Completeness::AtLeastOne,
        };
        let mut p = CnfProblem::new(true);
        encode_scenario(&ctx, &mut p);
        assert_eq!(p.dump_symbolic(), "x(1,1)\nx(1,1)\n");
    }

    #[test]
    fn action_clauses_follow_edge_outputs() {
        let alphabet = Alphabet::numbered(1, 2).unwrap();
        let tree = ScenarioTree::build(&alphabet, &[Scenario::new(vec![el(0, 0)]).unwrap()]).unwrap();
        let graph = inconsistent_pairs(&tree);
        let ctx = EncodingContext {
            num_events: 1,
            num_actions: 2,
            states: 1,
            tree: &tree,
            graph: &graph,
            mode: Completeness::AtLeastOne,
        };
        let mut p = CnfProblem::new(true);
        encode_actions(&ctx, &mut p);
        assert_eq!(p.dump_symbolic(), "-x(1,1) | z(1,1,1)\n-x(1,1) | -z(1,2,1)\n");
    }

    #[test]
    fn completeness_clause_shapes() {
        let tree = ScenarioTree::empty(2);
        let graph = inconsistent_pairs(&tree);
        for (mode, count, width) in [(Completeness::Complete, 4, 2), (Completeness::AtLeastOne, 2, 4)] {
            let ctx = EncodingContext {
                num_events: 2,
                num_actions: 1,
                states: 2,
                tree: &tree,
                graph: &graph,
                mode,
            };
            let mut p = CnfProblem::new(true);
            encode_completeness(&ctx, &mut p);
            let clauses = p.clauses().unwrap();
            assert_eq!(clauses.len(), count);
            assert!(clauses.iter().all(|c| c.len() == width));
        }
    }

    #[test]
    fn symmetry_is_empty_for_one_state() {
        let tree = ScenarioTree::empty(2);
        let graph = inconsistent_pairs(&tree);
        let ctx = EncodingContext {
            num_events: 2,
            num_actions: 1,
            states: 1,
            tree: &tree,
            graph: &graph,
            mode: Completeness::Complete,
        };
        let mut p = CnfProblem::new(true);
        encode_symmetry_bfs(&ctx, &mut p);
        assert_eq!(p.clause_count(), 0);
    }

    #[test]
    fn decoded_fsm_replays_scenarios() {
        let alphabet = Alphabet::numbered(2, 2).unwrap();
        let sc = vec![
            Scenario::new(vec![el(0, 0), el(0, 1), el(1, 0)]).unwrap(),
            Scenario::new(vec![el(1, 1), el(0, 0)]).unwrap(),
        ];
        let tree = ScenarioTree::build(&alphabet, &sc).unwrap();
        let graph = inconsistent_pairs(&tree);
        let ctx = EncodingContext {
            num_events: 2,
            num_actions: 2,
            states: 3,
            tree: &tree,
            graph: &graph,
            mode: Completeness::Complete,
        };
        let mut p = CnfProblem::new(false);
        encode_base(&ctx, &mut p, true);
        let SolveResult::Sat(model) = p.solve(None) else {
            panic!("expected SAT")
        };
        let fsm = decode_fsm(&ctx, p.pool(), &model).unwrap();
        assert!(fsm.is_complete());
        assert!(is_bfs_ordered(&fsm));
        for s in &sc {
            assert_eq!(fsm.run_scenario(s), crate::model::ScenarioVerdict::Accept);
        }
    }

    #[test]
    fn terminal_units_and_back_edge_pairs() {
        use crate::model::Counterexample;
        let tree = ScenarioTree::empty(1);
        let graph = inconsistent_pairs(&tree);
        let ctx = EncodingContext {
            num_events: 1,
            num_actions: 2,
            states: 3,
            tree: &tree,
            graph: &graph,
            mode: Completeness::AtLeastOne,
        };
        let mut neg = NegativeScenarioTree::new();
        let mut enc = NegativeEncoder::new();
        let mut p = CnfProblem::new(true);
        let delta = neg.add_counterexample(&Counterexample::finite(vec![el(0, 0)]));
        enc.encode(&ctx, &delta, &mut p);
        let units = p.clauses().unwrap().iter().filter(|c| c.len() == 1).count();
        assert_eq!(units, 1 + 3);

        let mut p = CnfProblem::new(true);
        let delta = neg.add_counterexample(&Counterexample::looping(vec![], vec![el(0, 1)]));
        enc.encode(&ctx, &delta, &mut p);
        let pairs = p.clauses().unwrap().iter().filter(|c| c.len() == 2).count();
        assert_eq!(pairs, 3);
    }
}
