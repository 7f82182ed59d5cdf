//! Exhaustive search over all FSMs of a given size. Only usable for tiny
//! alphabets, but independent of every encoding.

use crate::encode::Completeness;
use crate::ltl::Ltl;
use crate::model::{ActionSet, Fsm, Scenario, ScenarioVerdict};
use crate::par::Execution;
use crate::verifier::ModelChecker;

/// Largest number of candidate FSMs a single size may have.
const MAX_CANDIDATES: usize = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BruteForce {
    Minimum(usize),
    NoSolutionUpTo(usize),
}

/// Choices per (state, event) slot: optionally absent, else a destination
/// and an output set.
fn slot_options(states: usize, actions: usize, mode: Completeness) -> usize {
    let present = states << actions;
    match mode {
        Completeness::Complete => present,
        Completeness::AtLeastOne => present + 1,
    }
}

fn decode(mut index: usize, states: usize, events: usize, actions: usize, mode: Completeness) -> Fsm {
    let options = slot_options(states, actions, mode);
    let mut fsm = Fsm::new(states, events);
    for s in 0..states {
        for e in 0..events {
            let mut choice = index % options;
            index /= options;
            if mode == Completeness::AtLeastOne {
                if choice == 0 {
                    continue;
                }
                choice -= 1;
            }
            let dst = choice % states;
            let outputs = ActionSet((choice / states) as u64);
            fsm.set_transition(s, e, dst, outputs);
        }
    }
    fsm
}

/// Whether some FSM with exactly `states` states accepts every scenario,
/// satisfies every formula and has the shape `mode` demands.
///
/// Panics when there are more than 2^32 candidates.
pub fn brute_force_exists(
    events: usize,
    actions: usize,
    scenarios: &[Scenario],
    formulas: &[Ltl],
    mode: Completeness,
    states: usize,
    exec: Execution,
) -> bool {
    let options = slot_options(states, actions, mode);
    let total = (0..states * events)
        .try_fold(1usize, |n, _| n.checked_mul(options))
        .filter(|&n| n <= MAX_CANDIDATES)
        .expect("too many candidate FSMs for exhaustive search");
    let checker = ModelChecker::new(formulas);
    exec.any(total, |i| {
        let fsm = decode(i, states, events, actions, mode);
        fsm.dead_states().is_empty()
            && scenarios
                .iter()
                .all(|sc| fsm.run_scenario(sc) == ScenarioVerdict::Accept)
            && checker.holds_all(&fsm).expect("no dead states")
    })
}

/// Smallest state count admitting a solution, trying 1, 2, ..., `max_states`.
pub fn brute_force_min_states(
    events: usize,
    actions: usize,
    scenarios: &[Scenario],
    formulas: &[Ltl],
    mode: Completeness,
    max_states: usize,
    exec: Execution,
) -> BruteForce {
    (1..=max_states)
        .find(|&n| brute_force_exists(events, actions, scenarios, formulas, mode, n, exec))
        .map_or(BruteForce::NoSolutionUpTo(max_states), BruteForce::Minimum)
}
