//! Depth-first search over partial FSMs.
//!
//! The search keeps the FSM's run over the scenario tree. Tree edges leaving
//! a reached node whose FSM transition does not exist yet form the frontier.
//! Each step adds the transition for the first frontier edge (smallest BFS
//! index of its tree node), trying destinations in increasing order and
//! never skipping an unused state. Partial FSMs that contradict a scenario
//! or already violate a property are pruned. Once the frontier is empty the
//! FSM is completed by the SAT-based iterative method with its transitions
//! fixed.

use std::collections::VecDeque;

use crate::model::{Fsm, ScenarioTree};

use super::{has_shape, iterative, Clock, Outcome, Prepared, SynthError, SynthesisRequest, SynthesisResult, SynthesisStats};

/// State reached by the FSM at every tree node, `None` if the run stops
/// before it. Fails when some reached edge disagrees with the FSM outputs.
pub fn colour_tree(tree: &ScenarioTree, fsm: &Fsm) -> Option<Vec<Option<usize>>> {
    let mut colours = vec![None; tree.node_count()];
    colours[0] = Some(0);
    let mut queue = VecDeque::from([0]);
    while let Some(v) = queue.pop_front() {
        let s = colours[v].expect("queued nodes are coloured");
        for (e, edge) in tree.edges(v) {
            if let Some(t) = fsm.transition(s, e) {
                if t.outputs != edge.outputs {
                    return None;
                }
                colours[edge.child] = Some(t.dst);
                queue.push_back(edge.child);
            }
        }
    }
    Some(colours)
}

/// Frontier edges `(node, event)` in BFS order of the tree.
pub fn frontier(tree: &ScenarioTree, colours: &[Option<usize>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for v in tree.bfs_order() {
        if colours[v].is_none() {
            continue;
        }
        for (e, edge) in tree.edges(v) {
            if colours[edge.child].is_none() {
                out.push((v, e));
            }
        }
    }
    out
}

enum Stop {
    Timeout,
    Error(SynthError),
}

struct Search<'a, 'r> {
    req: &'a SynthesisRequest<'r>,
    prep: &'a Prepared,
    clock: &'a Clock,
    nodes: usize,
}

impl Search<'_, '_> {
    fn run(&mut self, fsm: &mut Fsm) -> Result<Option<Fsm>, Stop> {
        if self.clock.expired() {
            return Err(Stop::Timeout);
        }
        self.nodes += 1;
        let Some(colours) = colour_tree(&self.prep.tree, fsm) else {
            return Ok(None);
        };
        let Some(&(v, e)) = frontier(&self.prep.tree, &colours).first() else {
            return self.finish(fsm);
        };
        let src = colours[v].expect("frontier nodes are coloured");
        let outputs = self.prep.tree.edge(v, e).expect("frontier edge").outputs;
        let used = fsm.transitions().map(|(_, _, t)| t.dst + 1).max().unwrap_or(1);
        for dst in 0..self.req.states.min(used + 1) {
            fsm.set_transition(src, e, dst, outputs);
            let viable = colour_tree(&self.prep.tree, fsm).is_some()
                && self.prep.checker.holds_all_partial(fsm);
            if viable {
                if let Some(found) = self.run(fsm)? {
                    return Ok(Some(found));
                }
            }
            fsm.remove_transition(src, e);
        }
        Ok(None)
    }

    fn finish(&mut self, fsm: &Fsm) -> Result<Option<Fsm>, Stop> {
        if has_shape(fsm, self.req.mode) {
            return Ok(Some(fsm.clone()));
        }
        let fixed: Vec<_> = fsm.transitions().collect();
        let done = iterative(self.req, self.prep, self.clock, &fixed, self.req.mode, false)
            .map_err(Stop::Error)?;
        match done.outcome {
            Outcome::Found(f) => Ok(Some(f)),
            Outcome::Unsatisfiable => Ok(None),
            _ => Err(Stop::Timeout),
        }
    }
}

pub(crate) fn identify_backtracking(
    req: &SynthesisRequest,
    prep: &Prepared,
    clock: &Clock,
) -> Result<SynthesisResult, SynthError> {
    let mut search = Search {
        req,
        prep,
        clock,
        nodes: 0,
    };
    let mut fsm = Fsm::new(req.states, req.alphabet.num_events());
    let outcome = match search.run(&mut fsm) {
        Ok(Some(f)) => Outcome::Found(f),
        Ok(None) => Outcome::Unsatisfiable,
        Err(Stop::Timeout) => Outcome::Timeout,
        Err(Stop::Error(e)) => return Err(e),
    };
    let stats = SynthesisStats {
        iterations: search.nodes,
        ..SynthesisStats::default()
    };
    Ok(SynthesisResult::new(outcome, stats))
}
