//! Tableau translation of NNF formulas into state-labelled Büchi automata,
//! degeneralized with a round-robin counter, and the product search used to
//! find counterexamples.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::ltl::Ltl;
use crate::model::ScenarioElement;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prop {
    Event(usize),
    Action(usize),
}

impl Prop {
    fn holds(self, letter: &ScenarioElement) -> bool {
        match self {
            Prop::Event(e) => letter.event == e,
            Prop::Action(a) => letter.outputs.contains(a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuchiState {
    /// Literals the current letter must satisfy.
    pub literals: Vec<(Prop, bool)>,
    /// No pending obligations: every continuation from here is accepted.
    pub accept_all: bool,
    pub accepting: bool,
}

impl BuchiState {
    pub fn matches(&self, letter: &ScenarioElement) -> bool {
        self.literals.iter().all(|&(p, v)| p.holds(letter) == v)
    }
}

/// Degeneralized automaton. A run reads one letter per state, starting with
/// an initial state.
#[derive(Debug, Clone)]
pub struct BuchiAutomaton {
    pub states: Vec<BuchiState>,
    pub initial: Vec<usize>,
    pub successors: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum F {
    True,
    False,
    Lit(Prop, bool),
    And(usize, usize),
    Or(usize, usize),
    Next(usize),
    Globally(usize),
    Finally(usize),
    Until(usize, usize),
    Release(usize, usize),
}

#[derive(Default)]
struct Closure {
    forms: Vec<F>,
    index: HashMap<F, usize>,
}

impl Closure {
    fn add(&mut self, f: F) -> usize {
        if let Some(&i) = self.index.get(&f) {
            return i;
        }
        self.forms.push(f);
        self.index.insert(f, self.forms.len() - 1);
        self.forms.len() - 1
    }

    fn intern(&mut self, f: &Ltl) -> usize {
        let node = match f {
            Ltl::True => F::True,
            Ltl::False => F::False,
            Ltl::WasEvent(e) => F::Lit(Prop::Event(*e), true),
            Ltl::WasAction(a) => F::Lit(Prop::Action(*a), true),
            Ltl::Not(a) => match **a {
                Ltl::WasEvent(e) => F::Lit(Prop::Event(e), false),
                Ltl::WasAction(a) => F::Lit(Prop::Action(a), false),
                _ => panic!("formula is not in negation normal form"),
            },
            Ltl::And(a, b) => F::And(self.intern(a), self.intern(b)),
            Ltl::Or(a, b) => F::Or(self.intern(a), self.intern(b)),
            Ltl::Next(a) => F::Next(self.intern(a)),
            Ltl::Globally(a) => F::Globally(self.intern(a)),
            Ltl::Finally(a) => F::Finally(self.intern(a)),
            Ltl::Until(a, b) => F::Until(self.intern(a), self.intern(b)),
            Ltl::Release(a, b) => F::Release(self.intern(a), self.intern(b)),
            Ltl::Implies(..) => panic!("formula is not in negation normal form"),
        };
        self.add(node)
    }
}

const INIT: usize = usize::MAX;

#[derive(Clone)]
struct TabNode {
    incoming: BTreeSet<usize>,
    new: BTreeSet<usize>,
    old: BTreeSet<usize>,
    next: BTreeSet<usize>,
}

fn contradicts(closure: &Closure, old: &BTreeSet<usize>, prop: Prop, value: bool) -> bool {
    old.iter().any(|&i| match closure.forms[i] {
        F::Lit(p, v) => {
            (p == prop && v != value)
                || (value && v && matches!((p, prop), (Prop::Event(x), Prop::Event(y)) if x != y))
        }
        _ => false,
    })
}

/// Builds the automaton for an NNF formula.
///
/// # Panics
/// If `f` is not in negation normal form.
pub fn ltl_to_buchi(f: &Ltl) -> BuchiAutomaton {
    let mut closure = Closure::default();
    let root = closure.intern(f);

    let mut nodes: Vec<TabNode> = Vec::new();
    let mut by_key: HashMap<(BTreeSet<usize>, BTreeSet<usize>), usize> = HashMap::new();
    let mut stack = vec![TabNode {
        incoming: BTreeSet::from([INIT]),
        new: BTreeSet::from([root]),
        old: BTreeSet::new(),
        next: BTreeSet::new(),
    }];

    'nodes: while let Some(mut node) = stack.pop() {
        loop {
            let Some(eta) = node.new.pop_first() else {
                let key = (node.old.clone(), node.next.clone());
                if let Some(&id) = by_key.get(&key) {
                    nodes[id].incoming.extend(node.incoming);
                } else {
                    let id = nodes.len();
                    stack.push(TabNode {
                        incoming: BTreeSet::from([id]),
                        new: node.next.clone(),
                        old: BTreeSet::new(),
                        next: BTreeSet::new(),
                    });
                    by_key.insert(key, id);
                    nodes.push(node);
                }
                continue 'nodes;
            };
            if node.old.contains(&eta) {
                continue;
            }
            let add_new = |node: &mut TabNode, fs: &[usize]| {
                for &g in fs {
                    if !node.old.contains(&g) {
                        node.new.insert(g);
                    }
                }
            };
            match closure.forms[eta] {
                F::False => continue 'nodes,
                // Kept out of `old` so that `true` and the empty obligation share a node.
                F::True => continue,
                F::Lit(p, v) => {
                    if contradicts(&closure, &node.old, p, v) {
                        continue 'nodes;
                    }
                }
                F::And(a, b) => add_new(&mut node, &[a, b]),
                F::Next(a) => {
                    node.next.insert(a);
                }
                F::Globally(a) => {
                    add_new(&mut node, &[a]);
                    node.next.insert(eta);
                }
                F::Or(a, b) | F::Until(a, b) | F::Release(a, b) | F::Finally(b @ a) => {
                    // `node` keeps the first alternative, `other` takes the second.
                    let mut other = node.clone();
                    other.old.insert(eta);
                    match closure.forms[eta] {
                        F::Or(..) => {
                            add_new(&mut node, &[a]);
                            add_new(&mut other, &[b]);
                        }
                        F::Until(..) => {
                            add_new(&mut node, &[a]);
                            node.next.insert(eta);
                            add_new(&mut other, &[b]);
                        }
                        F::Release(..) => {
                            add_new(&mut node, &[b]);
                            node.next.insert(eta);
                            add_new(&mut other, &[a, b]);
                        }
                        _ => {
                            node.next.insert(eta);
                            add_new(&mut other, &[b]);
                        }
                    }
                    stack.push(other);
                }
            }
            node.old.insert(eta);
        }
    }

    // One acceptance set per eventuality: states that do not owe it or fulfil it now.
    let eventualities: Vec<(usize, usize)> = closure
        .forms
        .iter()
        .enumerate()
        .filter_map(|(i, f)| match *f {
            F::Until(_, b) | F::Finally(b) => Some((i, b)),
            _ => None,
        })
        .collect();
    let in_set = |n: &TabNode, set: usize| {
        let (u, b) = eventualities[set];
        !n.old.contains(&u) || n.old.contains(&b) || closure.forms[b] == F::True
    };
    let sets = eventualities.len().max(1);

    let mut succ_nodes: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    let mut init_nodes = Vec::new();
    for (id, n) in nodes.iter().enumerate() {
        for &src in &n.incoming {
            if src == INIT {
                init_nodes.push(id);
            } else {
                succ_nodes[src].push(id);
            }
        }
    }

    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut automaton = BuchiAutomaton {
        states: Vec::new(),
        initial: Vec::new(),
        successors: Vec::new(),
    };
    let mut queue = VecDeque::new();
    let mut get = |pair: (usize, usize), a: &mut BuchiAutomaton, q: &mut VecDeque<(usize, usize)>| {
        *ids.entry(pair).or_insert_with(|| {
            let (node, counter) = pair;
            let n = &nodes[node];
            let literals = n
                .old
                .iter()
                .filter_map(|&i| match closure.forms[i] {
                    F::Lit(p, v) => Some((p, v)),
                    _ => None,
                })
                .collect();
            let accepting = counter == 0 && (eventualities.is_empty() || in_set(n, 0));
            a.states.push(BuchiState {
                literals,
                accept_all: n.next.is_empty(),
                accepting,
            });
            a.successors.push(Vec::new());
            q.push_back(pair);
            a.states.len() - 1
        })
    };
    for &n in &init_nodes {
        let id = get((n, 0), &mut automaton, &mut queue);
        automaton.initial.push(id);
    }
    while let Some((node, counter)) = queue.pop_front() {
        let from = get((node, counter), &mut automaton, &mut queue);
        let next_counter = if eventualities.is_empty() || in_set(&nodes[node], counter) {
            (counter + 1) % sets
        } else {
            counter
        };
        for &m in &succ_nodes[node] {
            let to = get((m, next_counter), &mut automaton, &mut queue);
            automaton.successors[from].push(to);
        }
    }
    automaton
}

/// A labelled transition system the automaton can be run against.
pub trait LabelledSystem {
    fn initial(&self) -> &[usize];
    fn successors(&self, state: usize) -> &[usize];
    fn letter(&self, state: usize) -> ScenarioElement;
}

/// An accepted run found in the product, given as system states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// Every continuation of these states is accepted.
    Finite(Vec<usize>),
    Lasso { prefix: Vec<usize>, cycle: Vec<usize> },
}

/// Searches the product of `system` and `automaton` for an accepted run:
/// first the shortest path to a state without obligations, otherwise the
/// shortest path to an accepting state on a cycle followed by the shortest
/// cycle through it.
pub fn find_accepted_run(system: &impl LabelledSystem, automaton: &BuchiAutomaton) -> Option<Witness> {
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut parent: Vec<usize> = Vec::new();
    let mut adj: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();

    let path_to = |mut v: usize, parent: &[usize], pairs: &[(usize, usize)]| {
        let mut path = vec![pairs[v].0];
        while parent[v] != usize::MAX {
            v = parent[v];
            path.push(pairs[v].0);
        }
        path.reverse();
        path
    };

    for &q in system.initial() {
        let letter = system.letter(q);
        for &b in &automaton.initial {
            if automaton.states[b].matches(&letter) && !ids.contains_key(&(q, b)) {
                let id = pairs.len();
                ids.insert((q, b), id);
                pairs.push((q, b));
                parent.push(usize::MAX);
                adj.push(Vec::new());
                if automaton.states[b].accept_all {
                    return Some(Witness::Finite(path_to(id, &parent, &pairs)));
                }
                queue.push_back(id);
            }
        }
    }
    while let Some(v) = queue.pop_front() {
        let (q, b) = pairs[v];
        for &q2 in system.successors(q) {
            let letter = system.letter(q2);
            for &b2 in &automaton.successors[b] {
                if !automaton.states[b2].matches(&letter) {
                    continue;
                }
                let w = match ids.get(&(q2, b2)) {
                    Some(&w) => w,
                    None => {
                        let w = pairs.len();
                        ids.insert((q2, b2), w);
                        pairs.push((q2, b2));
                        parent.push(v);
                        adj.push(Vec::new());
                        if automaton.states[b2].accept_all {
                            return Some(Witness::Finite(path_to(w, &parent, &pairs)));
                        }
                        queue.push_back(w);
                        w
                    }
                };
                adj[v].push(w);
            }
        }
    }

    // Product ids are in BFS order, so the first qualifying id has the shortest prefix.
    let scc = tarjan(&adj);
    let mut scc_size = vec![0usize; adj.len()];
    for &c in &scc {
        scc_size[c] += 1;
    }
    let on_cycle = |v: usize| scc_size[scc[v]] > 1 || adj[v].contains(&v);
    let target = (0..pairs.len()).find(|&v| automaton.states[pairs[v].1].accepting && on_cycle(v))?;

    // Shortest cycle through `target` inside its component.
    let mut back = vec![usize::MAX; adj.len()];
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([target]);
    seen[target] = true;
    let mut last = None;
    'bfs: while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if w == target {
                last = Some(v);
                break 'bfs;
            }
            if !seen[w] && scc[w] == scc[target] {
                seen[w] = true;
                back[w] = v;
                queue.push_back(w);
            }
        }
    }
    let mut v = last.expect("target lies on a cycle");
    let mut cycle = vec![pairs[v].0];
    while v != target {
        v = back[v];
        cycle.push(pairs[v].0);
    }
    cycle.reverse();
    let mut prefix = path_to(target, &parent, &pairs);
    prefix.pop();
    Some(Witness::Lasso { prefix, cycle })
}

/// Iterative Tarjan; returns the component index of every vertex.
fn tarjan(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut comps = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < adj[v].len() {
                let w = adj[v][*i];
                *i += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = comps;
                        if w == v {
                            break;
                        }
                    }
                    comps += 1;
                }
            }
        }
    }
    comp
}

/// The word `prefix · cycle^ω` as a labelled system.
pub struct LassoWord {
    letters: Vec<ScenarioElement>,
    succ: Vec<[usize; 1]>,
    init: [usize; 1],
}

impl LassoWord {
    pub fn new(prefix: &[ScenarioElement], cycle: &[ScenarioElement]) -> Self {
        assert!(!cycle.is_empty());
        let letters: Vec<ScenarioElement> = prefix.iter().chain(cycle).copied().collect();
        let n = letters.len();
        let succ = (0..n)
            .map(|i| [if i + 1 < n { i + 1 } else { prefix.len() }])
            .collect();
        Self {
            letters,
            succ,
            init: [0],
        }
    }
}

impl LabelledSystem for LassoWord {
    fn initial(&self) -> &[usize] {
        &self.init
    }

    fn successors(&self, state: usize) -> &[usize] {
        &self.succ[state]
    }

    fn letter(&self, state: usize) -> ScenarioElement {
        self.letters[state]
    }
}

impl BuchiAutomaton {
    pub fn accepts_lasso(&self, prefix: &[ScenarioElement], cycle: &[ScenarioElement]) -> bool {
        find_accepted_run(&LassoWord::new(prefix, cycle), self).is_some()
    }
}
