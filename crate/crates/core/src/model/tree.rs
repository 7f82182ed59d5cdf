use std::collections::VecDeque;

use super::{ActionSet, Alphabet, ModelError, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeEdge {
    pub outputs: ActionSet,
    pub child: usize,
}

/// Prefix-merged scenarios. Node 0 is the root; every node has at most one
/// outgoing edge per event.
#[derive(Debug, Clone)]
pub struct ScenarioTree {
    num_events: usize,
    children: Vec<Vec<Option<TreeEdge>>>,
    parent: Vec<Option<(usize, usize)>>,
}

impl ScenarioTree {
    pub fn empty(num_events: usize) -> Self {
        Self {
            num_events,
            children: vec![vec![None; num_events]],
            parent: vec![None],
        }
    }

    pub fn build(alphabet: &Alphabet, scenarios: &[Scenario]) -> Result<Self, ModelError> {
        let mut tree = Self::empty(alphabet.num_events());
        for sc in scenarios {
            tree.insert(sc)?;
        }
        Ok(tree)
    }

    fn insert(&mut self, scenario: &Scenario) -> Result<(), ModelError> {
        let mut node = 0;
        for el in &scenario.elements {
            match self.children[node][el.event] {
                Some(edge) if edge.outputs == el.outputs => node = edge.child,
                Some(_) => {
                    return Err(ModelError::DeterminismConflict {
                        node,
                        event: el.event,
                    })
                }
                None => {
                    let child = self.children.len();
                    self.children.push(vec![None; self.num_events]);
                    self.parent.push(Some((node, el.event)));
                    self.children[node][el.event] = Some(TreeEdge {
                        outputs: el.outputs,
                        child,
                    });
                    node = child;
                }
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.children.len()
    }

    pub fn num_events(&self) -> usize {
        self.num_events
    }

    pub fn edge(&self, node: usize, event: usize) -> Option<TreeEdge> {
        self.children[node][event]
    }

    /// Outgoing edges of `node` as `(event, edge)` in event order.
    pub fn edges(&self, node: usize) -> impl Iterator<Item = (usize, TreeEdge)> + '_ {
        self.children[node]
            .iter()
            .enumerate()
            .filter_map(|(e, edge)| edge.map(|edge| (e, edge)))
    }

    /// All edges as `(parent, event, edge)`.
    pub fn all_edges(&self) -> impl Iterator<Item = (usize, usize, TreeEdge)> + '_ {
        (0..self.node_count()).flat_map(move |v| self.edges(v).map(move |(e, t)| (v, e, t)))
    }

    /// `(parent, event)` of a non-root node.
    pub fn parent(&self, node: usize) -> Option<(usize, usize)> {
        self.parent[node]
    }

    /// Nodes in breadth-first order, children visited by event order.
    pub fn bfs_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.node_count());
        let mut queue = VecDeque::from([0]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            queue.extend(self.edges(v).map(|(_, t)| t.child));
        }
        order
    }
}

/// Symmetric, irreflexive graph over tree nodes joining pairs that can never
/// be mapped onto the same FSM state.
#[derive(Debug, Clone)]
pub struct ConsistencyGraph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

impl ConsistencyGraph {
    fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Self {
            n,
            words,
            rows: vec![0; n * words],
        }
    }

    fn row(&self, u: usize) -> &[u64] {
        &self.rows[u * self.words..(u + 1) * self.words]
    }

    /// Returns true if the pair was newly added.
    fn add(&mut self, u: usize, v: usize) -> bool {
        if self.contains(u, v) {
            return false;
        }
        self.rows[u * self.words + v / 64] |= 1 << (v % 64);
        self.rows[v * self.words + u / 64] |= 1 << (u % 64);
        true
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.rows[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    pub fn degree(&self, u: usize) -> usize {
        self.row(u).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&v| self.contains(u, v))
    }

    /// Unordered pairs `(u, v)` with `u < v`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| self.neighbors(u).filter(move |&v| v > u).map(move |v| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|u| self.degree(u)).sum::<usize>() / 2
    }

    /// Whether `nodes` are pairwise inconsistent.
    pub fn is_clique(&self, nodes: &[usize]) -> bool {
        nodes
            .iter()
            .enumerate()
            .all(|(i, &u)| nodes[i + 1..].iter().all(|&v| self.contains(u, v)))
    }
}

/// Least fixpoint of: `u` and `v` are inconsistent if some event leads out of
/// both with different outputs, or with equal outputs into inconsistent children.
pub fn inconsistent_pairs(tree: &ScenarioTree) -> ConsistencyGraph {
    let n = tree.node_count();
    let mut graph = ConsistencyGraph::new(n);
    let mut work = Vec::new();
    for e in 0..tree.num_events() {
        let with_edge: Vec<(usize, ActionSet)> = (0..n)
            .filter_map(|v| tree.edge(v, e).map(|t| (v, t.outputs)))
            .collect();
        for (i, &(u, ou)) in with_edge.iter().enumerate() {
            for &(v, ov) in &with_edge[i + 1..] {
                if ou != ov && graph.add(u, v) {
                    work.push((u, v));
                }
            }
        }
    }
    while let Some((a, b)) = work.pop() {
        let (Some((pa, ea)), Some((pb, eb))) = (tree.parent(a), tree.parent(b)) else {
            continue;
        };
        if ea == eb && pa != pb && graph.add(pa, pb) {
            work.push((pa, pb));
        }
    }
    graph
}

/// Greedy clique: repeatedly takes the candidate with the most neighbours
/// among the remaining candidates (ties to the smallest index). With no edges
/// the single node 0 is returned.
pub fn greedy_max_clique(graph: &ConsistencyGraph) -> Vec<usize> {
    if graph.node_count() == 0 {
        return Vec::new();
    }
    let words = graph.words;
    let mut cand = vec![0u64; words];
    for v in 0..graph.n {
        cand[v / 64] |= 1 << (v % 64);
    }
    let mut clique = Vec::new();
    loop {
        let mut best: Option<(usize, usize)> = None;
        for v in 0..graph.n {
            if cand[v / 64] >> (v % 64) & 1 == 0 {
                continue;
            }
            let d: usize = graph
                .row(v)
                .iter()
                .zip(&cand)
                .map(|(r, c)| (r & c).count_ones() as usize)
                .sum();
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((v, d));
            }
        }
        let Some((v, _)) = best else { break };
        clique.push(v);
        for (c, r) in cand.iter_mut().zip(graph.row(v)) {
            *c &= r;
        }
    }
    clique.sort_unstable();
    clique
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ScenarioElement;

    fn el(e: usize, a: usize) -> ScenarioElement {
        ScenarioElement::new(e, ActionSet::EMPTY.with(a))
    }

    #[test]
    fn empty_scenarios_give_root_only() {
        let alphabet = Alphabet::numbered(2, 2).unwrap();
        let tree = ScenarioTree::build(&alphabet, &[]).unwrap();
        assert_eq!(tree.node_count(), 1);
        assert_eq!(inconsistent_pairs(&tree).edge_count(), 0);
        assert_eq!(greedy_max_clique(&inconsistent_pairs(&tree)), vec![0]);
    }

    #[test]
    fn conflicting_outputs_are_rejected() {
        let alphabet = Alphabet::numbered(1, 2).unwrap();
        let a = Scenario::new(vec![el(0, 0)]).unwrap();
        let b = Scenario::new(vec![el(0, 1)]).unwrap();
        assert_eq!(
            ScenarioTree::build(&alphabet, &[a, b]).unwrap_err(),
            ModelError::DeterminismConflict { node: 0, event: 0 }
        );
    }

    #[test]
    fn triangle_clique() {
        let mut g = ConsistencyGraph::new(3);
        g.add(0, 1);
        g.add(1, 2);
        g.add(0, 2);
        assert_eq!(greedy_max_clique(&g), vec![0, 1, 2]);
    }

    #[test]
    fn inconsistency_propagates_to_parents() {
        let alphabet = Alphabet::numbered(2, 2).unwrap();
        let s1 = Scenario::new(vec![el(0, 0), el(0, 0), el(0, 0)]).unwrap();
        let s2 = Scenario::new(vec![el(1, 0), el(0, 0), el(0, 1)]).unwrap();
        let tree = ScenarioTree::build(&alphabet, &[s1, s2]).unwrap();
        let g = inconsistent_pairs(&tree);
        // nodes: 0 root, 1,2,3 along s1, 4,5,6 along s2
        assert!(g.contains(2, 5)); // e1/z1 vs e1/z2
        assert!(g.contains(1, 4)); // children 2 and 5 inconsistent
        assert!(g.contains(0, 5));
        assert!(g.contains(0, 4)); // children 1 and 5 inconsistent
        assert!(!g.contains(0, 1));
        assert!(!g.contains(3, 6));
        assert!(g.is_clique(&greedy_max_clique(&g)));
    }
}
