//! Explicit-state LTL model checking of FSMs with short counterexamples.

mod buchi;

pub use buchi::{
    find_accepted_run, ltl_to_buchi, BuchiAutomaton, BuchiState, LabelledSystem, LassoWord, Prop,
    Witness,
};

use crate::ltl::Ltl;
use crate::model::{Counterexample, Fsm, KripkeStructure, ModelError, ScenarioElement};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Violated(Counterexample),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }
}

impl LabelledSystem for KripkeStructure {
    fn initial(&self) -> &[usize] {
        &self.initial
    }

    fn successors(&self, state: usize) -> &[usize] {
        &self.successors[state]
    }

    fn letter(&self, state: usize) -> ScenarioElement {
        self.states[state].element()
    }
}

/// Checks a fixed list of formulas against many FSMs; the automata for the
/// negated formulas are built once.
#[derive(Debug, Clone)]
pub struct ModelChecker {
    formulas: Vec<Ltl>,
    automata: Vec<BuchiAutomaton>,
}

impl ModelChecker {
    pub fn new(formulas: &[Ltl]) -> Self {
        let automata = formulas
            .iter()
            .map(|g| ltl_to_buchi(&Ltl::not(g.clone()).to_nnf()))
            .collect();
        Self {
            formulas: formulas.to_vec(),
            automata,
        }
    }

    pub fn formulas(&self) -> &[Ltl] {
        &self.formulas
    }

    fn verdict(kripke: &KripkeStructure, automaton: &BuchiAutomaton) -> Verdict {
        let letters = |ids: Vec<usize>| -> Vec<ScenarioElement> {
            ids.into_iter().map(|q| kripke.letter(q)).collect()
        };
        match find_accepted_run(kripke, automaton) {
            None => Verdict::Holds,
            Some(Witness::Finite(path)) => Verdict::Violated(Counterexample::finite(letters(path))),
            Some(Witness::Lasso { prefix, cycle }) => {
                Verdict::Violated(Counterexample::looping(letters(prefix), letters(cycle)))
            }
        }
    }

    /// One verdict per formula. Every FSM state needs an outgoing transition.
    pub fn check(&self, fsm: &Fsm) -> Result<Vec<Verdict>, ModelError> {
        let kripke = KripkeStructure::from_fsm(fsm)?;
        Ok(self.automata.iter().map(|a| Self::verdict(&kripke, a)).collect())
    }

    /// Like [`check`](Self::check) for FSMs that may have dead-end states.
    /// Lassos through dead ends cannot exist; finite bad prefixes are still
    /// reported, since every completion extends them to a violating run.
    pub fn check_partial(&self, fsm: &Fsm) -> Vec<Verdict> {
        let kripke = KripkeStructure::from_partial_fsm(fsm);
        self.automata.iter().map(|a| Self::verdict(&kripke, a)).collect()
    }

    /// Counterexamples for all falsified formulas.
    pub fn counterexamples(&self, fsm: &Fsm) -> Result<Vec<Counterexample>, ModelError> {
        Ok(self
            .check(fsm)?
            .into_iter()
            .filter_map(|v| match v {
                Verdict::Violated(c) => Some(c),
                Verdict::Holds => None,
            })
            .collect())
    }

    /// Whether every formula holds, stopping at the first violation.
    pub fn holds_all(&self, fsm: &Fsm) -> Result<bool, ModelError> {
        let kripke = KripkeStructure::from_fsm(fsm)?;
        Ok(self
            .automata
            .iter()
            .all(|a| find_accepted_run(&kripke, a).is_none()))
    }

    /// Partial-FSM variant of [`holds_all`](Self::holds_all).
    pub fn holds_all_partial(&self, fsm: &Fsm) -> bool {
        let kripke = KripkeStructure::from_partial_fsm(fsm);
        self.automata
            .iter()
            .all(|a| find_accepted_run(&kripke, a).is_none())
    }
}

pub fn model_check(fsm: &Fsm, formulas: &[Ltl]) -> Result<Vec<Verdict>, ModelError> {
    ModelChecker::new(formulas).check(fsm)
}
