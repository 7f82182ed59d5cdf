use std::collections::BTreeSet;

use super::{ActionSet, Counterexample, CounterexampleKind, ScenarioElement};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NegativeEdge {
    pub event: usize,
    pub outputs: ActionSet,
    pub child: usize,
}

/// Store of prohibited behaviours: finite bad prefixes end in terminal nodes,
/// lassos are closed by back edges. Unlike the positive tree, a node may
/// have several outgoing edges for one event.
#[derive(Debug, Clone)]
pub struct NegativeScenarioTree {
    edges: Vec<Vec<NegativeEdge>>,
    parent: Vec<Option<(usize, ScenarioElement)>>,
    terminal: Vec<bool>,
    back_edges: BTreeSet<(usize, usize)>,
}

/// What a single [`NegativeScenarioTree::add_counterexample`] call added.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NegativeTreeDelta {
    /// `(parent, edge)` for every newly created edge, in creation order.
    pub new_edges: Vec<(usize, NegativeEdge)>,
    pub new_terminals: Vec<usize>,
    pub new_back_edges: Vec<(usize, usize)>,
}

impl NegativeTreeDelta {
    /// False when the counterexample was already fully prohibited.
    pub fn changed(&self) -> bool {
        !self.new_terminals.is_empty() || !self.new_back_edges.is_empty()
    }

    pub fn merge(&mut self, other: NegativeTreeDelta) {
        self.new_edges.extend(other.new_edges);
        self.new_terminals.extend(other.new_terminals);
        self.new_back_edges.extend(other.new_back_edges);
    }
}

impl Default for NegativeScenarioTree {
    fn default() -> Self {
        Self::new()
    }
}

impl NegativeScenarioTree {
    pub fn new() -> Self {
        Self {
            edges: vec![Vec::new()],
            parent: vec![None],
            terminal: vec![false],
            back_edges: BTreeSet::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self, node: usize) -> &[NegativeEdge] {
        &self.edges[node]
    }

    pub fn is_terminal(&self, node: usize) -> bool {
        self.terminal[node]
    }

    pub fn terminal_count(&self) -> usize {
        self.terminal.iter().filter(|&&t| t).count()
    }

    pub fn back_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.back_edges
    }

    fn step(&mut self, node: usize, el: ScenarioElement, delta: &mut NegativeTreeDelta) -> usize {
        if let Some(edge) = self.edges[node]
            .iter()
            .find(|t| t.event == el.event && t.outputs == el.outputs)
        {
            return edge.child;
        }
        let child = self.edges.len();
        let edge = NegativeEdge {
            event: el.event,
            outputs: el.outputs,
            child,
        };
        self.edges.push(Vec::new());
        self.parent.push(Some((node, el)));
        self.terminal.push(false);
        self.edges[node].push(edge);
        delta.new_edges.push((node, edge));
        child
    }

    /// Walks or creates the prefix, then (for lassos) one pass of the cycle
    /// closed by a back edge to the cycle start.
    pub fn add_counterexample(&mut self, cex: &Counterexample) -> NegativeTreeDelta {
        let mut delta = NegativeTreeDelta::default();
        let mut node = 0;
        for &el in &cex.prefix {
            node = self.step(node, el, &mut delta);
        }
        match cex.kind {
            CounterexampleKind::Finite => {
                if !self.terminal[node] {
                    self.terminal[node] = true;
                    delta.new_terminals.push(node);
                }
            }
            CounterexampleKind::Looping => {
                let start = node;
                for &el in &cex.cycle {
                    node = self.step(node, el, &mut delta);
                }
                if self.back_edges.insert((node, start)) {
                    delta.new_back_edges.push((node, start));
                }
            }
        }
        delta
    }

    fn path_to(&self, node: usize) -> Vec<ScenarioElement> {
        let mut path = Vec::new();
        let mut v = node;
        while let Some((p, el)) = self.parent[v] {
            path.push(el);
            v = p;
        }
        path.reverse();
        path
    }

    /// Every stored prohibition as a counterexample: root-to-terminal paths
    /// and root-to-back-edge lassos.
    pub fn prohibited(&self) -> Vec<Counterexample> {
        let mut out: Vec<Counterexample> = (0..self.node_count())
            .filter(|&v| self.terminal[v])
            .map(|v| Counterexample::finite(self.path_to(v)))
            .collect();
        for &(from, to) in &self.back_edges {
            let prefix = self.path_to(to);
            let full = self.path_to(from);
            let cycle = full[prefix.len()..].to_vec();
            out.push(Counterexample::looping(prefix, cycle));
        }
        out
    }

    /// Checks that non-back edges form a tree and that back edges point to
    /// ancestors.
    pub fn check_invariants(&self) -> bool {
        let tree_ok = (1..self.node_count()).all(|v| {
            self.parent[v].is_some_and(|(p, el)| {
                self.edges[p]
                    .iter()
                    .filter(|t| t.child == v && t.event == el.event && t.outputs == el.outputs)
                    .count()
                    == 1
            })
        });
        let back_ok = self.back_edges.iter().all(|&(from, to)| {
            let mut v = from;
            loop {
                if v == to {
                    break true;
                }
                match self.parent[v] {
                    Some((p, _)) => v = p,
                    None => break false,
                }
            }
        });
        tree_ok && back_ok && self.parent[0].is_none()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(e: usize, a: usize) -> ScenarioElement {
        ScenarioElement::new(e, ActionSet::EMPTY.with(a))
    }

    #[test]
    fn looping_counterexample_adds_back_edge() {
        let mut tree = NegativeScenarioTree::new();
        let cex = Counterexample::looping(vec![el(0, 0)], vec![el(0, 0), el(0, 1)]);
        let delta = tree.add_counterexample(&cex);
        assert!(delta.changed());
        assert_eq!(tree.node_count(), 4);
        // nodes 4 -> 2 in one-based numbering
        assert_eq!(tree.back_edges().iter().copied().collect::<Vec<_>>(), vec![(3, 1)]);
        assert_eq!(delta.new_edges.len(), 3);
        assert!(tree.check_invariants());
        assert_eq!(tree.prohibited(), vec![cex]);
    }

    #[test]
    fn repeated_finite_counterexample_is_no_progress() {
        let mut tree = NegativeScenarioTree::new();
        let cex = Counterexample::finite(vec![el(0, 0), el(1, 1)]);
        assert!(tree.add_counterexample(&cex).changed());
        let again = tree.add_counterexample(&cex);
        assert!(!again.changed());
        assert!(again.new_edges.is_empty());
    }

    #[test]
    fn sibling_edges_for_distinct_outputs() {
        let mut tree = NegativeScenarioTree::new();
        tree.add_counterexample(&Counterexample::finite(vec![el(0, 0)]));
        tree.add_counterexample(&Counterexample::finite(vec![el(0, 1)]));
        assert_eq!(tree.edges(0).len(), 2);
        assert_eq!(tree.terminal_count(), 2);
    }
}
