//! Domain model: alphabets, FSMs and their Kripke structures, scenarios,
//! counterexamples, and the positive/negative scenario trees.
//!
//! States, tree nodes, events and actions are all zero-based indices. State 0
//! is the initial state and node 0 is the root of every tree; the textual
//! outputs (DOT, JSON) render states one-based.

mod io;
mod negative;
mod tree;

pub use io::{
    fsm_from_json, fsm_to_dot, fsm_to_json, format_scenarios, parse_scenarios, register_json_symbols, FsmJson,
    TransitionJson,
};
pub use negative::{NegativeEdge, NegativeScenarioTree, NegativeTreeDelta};
pub use tree::{greedy_max_clique, inconsistent_pairs, ConsistencyGraph, ScenarioTree, TreeEdge};

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum number of output actions; action sets are stored as a 64-bit mask.
pub const MAX_ACTIONS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("an alphabet needs at least one event")]
    NoEvents,
    #[error("at most {MAX_ACTIONS} actions are supported, got {0}")]
    TooManyActions(usize),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("scenarios disagree on the outputs of event {event} at tree node {node}")]
    DeterminismConflict { node: usize, event: usize },
    #[error("state {} has no outgoing transition", .0 + 1)]
    DeadState(usize),
    #[error("scenarios must contain at least one element")]
    EmptyScenario,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Ordered event and action symbols. The order is fixed at construction and
/// drives every tie-break (symmetry breaking, search order).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    events: Vec<String>,
    actions: Vec<String>,
}

impl Alphabet {
    pub fn new<E, A>(events: E, actions: A) -> Result<Self, ModelError>
    where
        E: IntoIterator,
        E::Item: Into<String>,
        A: IntoIterator,
        A::Item: Into<String>,
    {
        let events: Vec<String> = events.into_iter().map(Into::into).collect();
        let actions: Vec<String> = actions.into_iter().map(Into::into).collect();
        if events.is_empty() {
            return Err(ModelError::NoEvents);
        }
        if actions.len() > MAX_ACTIONS {
            return Err(ModelError::TooManyActions(actions.len()));
        }
        for list in [&events, &actions] {
            for (i, s) in list.iter().enumerate() {
                if list[..i].contains(s) {
                    return Err(ModelError::DuplicateSymbol(s.clone()));
                }
            }
        }
        Ok(Self { events, actions })
    }

    /// `e1..eN`, `z1..zM`.
    pub fn numbered(num_events: usize, num_actions: usize) -> Result<Self, ModelError> {
        Self::new(
            (1..=num_events).map(|i| format!("e{i}")),
            (1..=num_actions).map(|i| format!("z{i}")),
        )
    }

    pub fn num_events(&self) -> usize {
        self.events.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn events(&self) -> &[String] {
        &self.events
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn event_name(&self, e: usize) -> &str {
        &self.events[e]
    }

    pub fn action_name(&self, a: usize) -> &str {
        &self.actions[a]
    }

    pub fn event_index(&self, name: &str) -> Option<usize> {
        self.events.iter().position(|s| s == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|s| s == name)
    }

    /// All action sets over this alphabet, ordered by mask value.
    pub fn all_action_sets(&self) -> impl Iterator<Item = ActionSet> {
        (0u64..(1u64 << self.actions.len())).map(ActionSet)
    }

    pub fn format_outputs(&self, set: ActionSet) -> String {
        set.iter().map(|a| self.action_name(a)).collect::<Vec<_>>().join(",")
    }

    /// `(e1, z1)` / `(e1, {z1, z2})` element rendering used for counterexamples.
    pub fn format_element(&self, el: &ScenarioElement) -> String {
        let names: Vec<&str> = el.outputs.iter().map(|a| self.action_name(a)).collect();
        let out = if names.len() == 1 {
            names[0].to_string()
        } else {
            format!("{{{}}}", names.join(", "))
        };
        format!("({}, {})", self.event_name(el.event), out)
    }
}

/// Resolves symbol names to indices. Implemented by [`Alphabet`] (strict) and
/// [`AlphabetBuilder`] (which registers unseen symbols).
pub trait SymbolResolver {
    fn event(&mut self, name: &str) -> Result<usize, ModelError>;
    fn action(&mut self, name: &str) -> Result<usize, ModelError>;
}

impl SymbolResolver for &Alphabet {
    fn event(&mut self, name: &str) -> Result<usize, ModelError> {
        self.event_index(name)
            .ok_or_else(|| ModelError::UnknownSymbol(name.to_string()))
    }

    fn action(&mut self, name: &str) -> Result<usize, ModelError> {
        self.action_index(name)
            .ok_or_else(|| ModelError::UnknownSymbol(name.to_string()))
    }
}

impl<T: SymbolResolver + ?Sized> SymbolResolver for &mut T {
    fn event(&mut self, name: &str) -> Result<usize, ModelError> {
        (**self).event(name)
    }

    fn action(&mut self, name: &str) -> Result<usize, ModelError> {
        (**self).action(name)
    }
}

/// Collects symbols in order of first appearance.
#[derive(Debug, Default, Clone)]
pub struct AlphabetBuilder {
    events: Vec<String>,
    actions: Vec<String>,
    event_ids: HashMap<String, usize>,
    action_ids: HashMap<String, usize>,
}

impl AlphabetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn build(self) -> Result<Alphabet, ModelError> {
        Alphabet::new(self.events, self.actions)
    }
}

impl SymbolResolver for AlphabetBuilder {
    fn event(&mut self, name: &str) -> Result<usize, ModelError> {
        if let Some(&i) = self.event_ids.get(name) {
            return Ok(i);
        }
        self.events.push(name.to_string());
        self.event_ids.insert(name.to_string(), self.events.len() - 1);
        Ok(self.events.len() - 1)
    }

    fn action(&mut self, name: &str) -> Result<usize, ModelError> {
        if let Some(&i) = self.action_ids.get(name) {
            return Ok(i);
        }
        self.actions.push(name.to_string());
        self.action_ids.insert(name.to_string(), self.actions.len() - 1);
        Ok(self.actions.len() - 1)
    }
}

/// A canonical (sorted, duplicate-free) set of output actions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionSet(pub u64);

impl ActionSet {
    pub const EMPTY: ActionSet = ActionSet(0);

    pub fn contains(self, action: usize) -> bool {
        self.0 >> action & 1 == 1
    }

    pub fn insert(&mut self, action: usize) {
        self.0 |= 1 << action;
    }

    pub fn with(mut self, action: usize) -> Self {
        self.insert(action);
        self
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&a| self.contains(a))
    }
}

impl FromIterator<usize> for ActionSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut set = ActionSet::EMPTY;
        for a in iter {
            set.insert(a);
        }
        set
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transition {
    pub dst: usize,
    pub outputs: ActionSet,
}

/// Deterministic, possibly incomplete, Mealy-style machine. State 0 is initial.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fsm {
    state_count: usize,
    num_events: usize,
    transitions: Vec<Option<Transition>>,
}

impl Fsm {
    /// An FSM with `state_count` states and no transitions.
    pub fn new(state_count: usize, num_events: usize) -> Self {
        assert!(state_count >= 1, "an FSM needs at least one state");
        Self {
            state_count,
            num_events,
            transitions: vec![None; state_count * num_events],
        }
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn num_events(&self) -> usize {
        self.num_events
    }

    pub fn transition(&self, src: usize, event: usize) -> Option<Transition> {
        self.transitions[src * self.num_events + event]
    }

    pub fn set_transition(&mut self, src: usize, event: usize, dst: usize, outputs: ActionSet) {
        assert!(src < self.state_count && dst < self.state_count);
        self.transitions[src * self.num_events + event] = Some(Transition { dst, outputs });
    }

    pub fn remove_transition(&mut self, src: usize, event: usize) {
        self.transitions[src * self.num_events + event] = None;
    }

    /// Defined transitions as `(src, event, transition)`, ordered by source then event.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize, Transition)> + '_ {
        self.transitions.iter().enumerate().filter_map(move |(i, t)| {
            t.map(|t| (i / self.num_events, i % self.num_events, t))
        })
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.iter().filter(|t| t.is_some()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.transitions.iter().all(Option::is_some)
    }

    pub fn out_degree(&self, state: usize) -> usize {
        (0..self.num_events)
            .filter(|&e| self.transition(state, e).is_some())
            .count()
    }

    /// States without any outgoing transition.
    pub fn dead_states(&self) -> Vec<usize> {
        (0..self.state_count)
            .filter(|&s| self.out_degree(s) == 0)
            .collect()
    }

    /// States reachable from the initial state.
    pub fn reachable_states(&self) -> Vec<bool> {
        let mut seen = vec![false; self.state_count];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(s) = stack.pop() {
            for e in 0..self.num_events {
                if let Some(t) = self.transition(s, e) {
                    if !seen[t.dst] {
                        seen[t.dst] = true;
                        stack.push(t.dst);
                    }
                }
            }
        }
        seen
    }

    /// Replays a scenario from the initial state.
    pub fn run_scenario(&self, scenario: &Scenario) -> ScenarioVerdict {
        let mut state = 0;
        for (pos, el) in scenario.elements.iter().enumerate() {
            match self.transition(state, el.event) {
                Some(t) if t.outputs == el.outputs => state = t.dst,
                _ => return ScenarioVerdict::Reject(pos + 1),
            }
        }
        ScenarioVerdict::Accept
    }

    /// Follows `elements` from `start`; `None` if some step is missing or
    /// produces different outputs.
    pub fn follow(&self, start: usize, elements: &[ScenarioElement]) -> Option<usize> {
        elements.iter().try_fold(start, |state, el| {
            self.transition(state, el.event)
                .filter(|t| t.outputs == el.outputs)
                .map(|t| t.dst)
        })
    }

    /// Whether this FSM exhibits the prohibited behaviour: the finite prefix
    /// for a finite counterexample, or the full lasso for a looping one.
    pub fn realizes(&self, cex: &Counterexample) -> bool {
        let Some(loop_start) = self.follow(0, &cex.prefix) else {
            return false;
        };
        match cex.kind {
            CounterexampleKind::Finite => true,
            CounterexampleKind::Looping => {
                self.follow(loop_start, &cex.cycle) == Some(loop_start)
            }
        }
    }

    /// Keeps only the first `count` states; transitions into dropped states
    /// are not allowed.
    pub fn truncated(&self, count: usize) -> Fsm {
        let mut out = Fsm::new(count, self.num_events);
        for (s, e, t) in self.transitions() {
            if s < count {
                assert!(t.dst < count, "transition into a dropped state");
                out.set_transition(s, e, t.dst, t.outputs);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioVerdict {
    Accept,
    /// First failing one-based position.
    Reject(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScenarioElement {
    pub event: usize,
    pub outputs: ActionSet,
}

impl ScenarioElement {
    pub fn new(event: usize, outputs: ActionSet) -> Self {
        Self { event, outputs }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub elements: Vec<ScenarioElement>,
}

impl Scenario {
    pub fn new(elements: Vec<ScenarioElement>) -> Result<Self, ModelError> {
        if elements.is_empty() {
            return Err(ModelError::EmptyScenario);
        }
        Ok(Self { elements })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CounterexampleKind {
    /// Every infinite continuation of the prefix violates the formula.
    Finite,
    /// The prefix followed by the cycle repeated forever violates the formula.
    Looping,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Counterexample {
    pub kind: CounterexampleKind,
    pub prefix: Vec<ScenarioElement>,
    pub cycle: Vec<ScenarioElement>,
}

impl Counterexample {
    pub fn finite(prefix: Vec<ScenarioElement>) -> Self {
        Self {
            kind: CounterexampleKind::Finite,
            prefix,
            cycle: Vec::new(),
        }
    }

    pub fn looping(prefix: Vec<ScenarioElement>, cycle: Vec<ScenarioElement>) -> Self {
        assert!(!cycle.is_empty(), "a looping counterexample needs a cycle");
        Self {
            kind: CounterexampleKind::Looping,
            prefix,
            cycle,
        }
    }

    /// Total number of elements (prefix plus one pass of the cycle).
    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bracket notation: `(e1, z1), [(e1, z1), (e1, z2)]`.
    pub fn display<'a>(&'a self, alphabet: &'a Alphabet) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Counterexample, &'a Alphabet);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let mut parts: Vec<String> =
                    self.0.prefix.iter().map(|e| self.1.format_element(e)).collect();
                if self.0.kind == CounterexampleKind::Looping {
                    let cycle: Vec<String> =
                        self.0.cycle.iter().map(|e| self.1.format_element(e)).collect();
                    parts.push(format!("[{}]", cycle.join(", ")));
                }
                write!(f, "{}", parts.join(", "))
            }
        }
        D(self, alphabet)
    }
}

/// One Kripke state per FSM transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KripkeState {
    pub src: usize,
    pub event: usize,
    pub outputs: ActionSet,
    pub dst: usize,
}

impl KripkeState {
    pub fn element(&self) -> ScenarioElement {
        ScenarioElement::new(self.event, self.outputs)
    }
}

#[derive(Debug, Clone)]
pub struct KripkeStructure {
    pub states: Vec<KripkeState>,
    pub initial: Vec<usize>,
    pub successors: Vec<Vec<usize>>,
}

impl KripkeStructure {
    /// Requires every FSM state to have an outgoing transition, which makes
    /// the transition relation left-total.
    pub fn from_fsm(fsm: &Fsm) -> Result<Self, ModelError> {
        if let Some(&dead) = fsm.dead_states().first() {
            return Err(ModelError::DeadState(dead));
        }
        Ok(Self::from_partial_fsm(fsm))
    }

    /// Like [`from_fsm`](Self::from_fsm) but tolerates dead-end states, whose
    /// incoming Kripke states then have no successors.
    pub fn from_partial_fsm(fsm: &Fsm) -> Self {
        let states: Vec<KripkeState> = fsm
            .transitions()
            .map(|(src, event, t)| KripkeState {
                src,
                event,
                outputs: t.outputs,
                dst: t.dst,
            })
            .collect();
        let mut by_src: Vec<Vec<usize>> = vec![Vec::new(); fsm.state_count()];
        for (i, k) in states.iter().enumerate() {
            by_src[k.src].push(i);
        }
        let successors = states.iter().map(|k| by_src[k.dst].clone()).collect();
        let initial = by_src[0].clone();
        Self {
            states,
            initial,
            successors,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}
