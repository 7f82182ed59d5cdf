//! Random instance generation, exhaustive oracles and benchmark runs.
//!
//! An instance starts from a random reference FSM; scenarios are random
//! walks through it and properties are template formulas it satisfies, so
//! every instance is realizable with the reference FSM's state count. All
//! randomness comes from a ChaCha stream seeded by [`InstanceSpec::seed`],
//! so equal specs give byte-identical instances.

mod bench;
mod oracle;

pub use bench::{bench_csv, run_bench, BenchConfig, BenchRow};
pub use oracle::{brute_force_exists, brute_force_min_states, BruteForce};

use std::fs;
use std::io;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encode::Completeness;
use crate::ltl::Ltl;
use crate::model::{
    format_scenarios, fsm_to_dot, fsm_to_json, ActionSet, Alphabet, Fsm, ModelError, Scenario, ScenarioElement,
};
use crate::par::Execution;
use crate::synth::{identify, Outcome, SynthError, SynthesisRequest};
use crate::verifier::ModelChecker;

/// Attempts per scenario walk before the ban set is redrawn.
const WALK_RETRIES: usize = 100;
/// Ban sets tried before scenario generation gives up.
const BAN_RETRIES: usize = 100;
/// Template draws per requested formula.
const FORMULA_DRAWS: usize = 200;
/// Random FSMs a formula is tested against, and how many may satisfy it.
const FILTER_FSMS: usize = 10;
const FILTER_MAX_SATISFIED: usize = 5;
/// Instances drawn before generation gives up.
pub const HARD_RETRIES: usize = 100;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid instance spec: {0}")]
    InvalidSpec(String),
    #[error("generation stuck: {0}")]
    GenerationStuck(String),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Shape of a random instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    /// State count of the reference FSM.
    pub states: usize,
    pub events: usize,
    pub actions: usize,
    pub complete: bool,
    pub scenario_count: usize,
    /// Total number of scenario elements.
    pub total_length: usize,
    pub formula_count: usize,
    pub seed: u64,
}

impl InstanceSpec {
    /// Four events, four actions, ten scenarios of total length `50 * states`
    /// and four formulas.
    pub fn standard(states: usize, seed: u64) -> Self {
        Self {
            states,
            events: 4,
            actions: 4,
            complete: false,
            scenario_count: 10,
            total_length: 50 * states,
            formula_count: 4,
            seed,
        }
    }

    /// Same proportions as [`standard`](Self::standard) with a smaller alphabet.
    pub fn scaled(states: usize, events: usize, actions: usize, seed: u64) -> Self {
        Self {
            events,
            actions,
            ..Self::standard(states, seed)
        }
    }

    pub fn with_complete(mut self, complete: bool) -> Self {
        self.complete = complete;
        self
    }

    pub fn mode(&self) -> Completeness {
        if self.complete {
            Completeness::Complete
        } else {
            Completeness::AtLeastOne
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::numbered(self.events, self.actions).expect("numbered symbols are unique")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::InvalidSpec(m.to_string()));
        if self.states == 0 || self.events == 0 {
            return bad("states and events must be positive");
        }
        if self.actions > 64 {
            return bad("at most 64 actions are supported");
        }
        if self.scenario_count == 0 || self.total_length < self.scenario_count {
            return bad("every scenario needs at least one element");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub spec: InstanceSpec,
    pub alphabet: Alphabet,
    pub reference: Fsm,
    pub scenarios: Vec<Scenario>,
    pub formulas: Vec<Ltl>,
    /// Whether the instance passed the hard filter.
    pub hard: bool,
}

impl Instance {
    /// A request for this instance at the reference state count.
    pub fn request(&self) -> SynthesisRequest<'_> {
        SynthesisRequest::new(&self.alphabet, &self.scenarios, &self.formulas, self.spec.states)
            .with_mode(self.spec.mode())
    }

    pub fn formulas_text(&self) -> String {
        self.formulas
            .iter()
            .map(|f| format!("{}\n", f.display(&self.alphabet)))
            .collect()
    }

    /// Writes `scenarios.txt`, `properties.ltl`, `reference.json`,
    /// `reference.dot` and `spec.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), HarnessError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("scenarios.txt"), format_scenarios(&self.scenarios, &self.alphabet))?;
        fs::write(dir.join("properties.ltl"), self.formulas_text())?;
        let json = serde_json::to_string_pretty(&fsm_to_json(&self.reference, &self.alphabet))
            .expect("FSM JSON is serializable");
        fs::write(dir.join("reference.json"), json + "\n")?;
        fs::write(dir.join("reference.dot"), fsm_to_dot(&self.reference, &self.alphabet))?;
        let spec = serde_json::to_string_pretty(&SpecFile {
            spec: self.spec,
            hard: self.hard,
        })
        .expect("spec is serializable");
        fs::write(dir.join("spec.json"), spec + "\n")?;
        Ok(())
    }
}

#[derive(Serialize)]
struct SpecFile {
    #[serde(flatten)]
    spec: InstanceSpec,
    hard: bool,
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_outputs(actions: usize, rng: &mut impl Rng) -> ActionSet {
    let size = rng.gen_range(0..=actions.min(4));
    index::sample(rng, actions, size).into_iter().collect()
}

/// Random transition structure before repair: every transition in complete
/// mode, each with probability 1/2 otherwise.
fn sample_fsm(spec: &InstanceSpec, rng: &mut impl Rng) -> Fsm {
    let mut fsm = Fsm::new(spec.states, spec.events);
    for s in 0..spec.states {
        for e in 0..spec.events {
            if spec.complete || rng.gen_bool(0.5) {
                let dst = rng.gen_range(0..spec.states);
                fsm.set_transition(s, e, dst, random_outputs(spec.actions, rng));
            }
        }
    }
    fsm
}

/// Makes every state reachable from the initial one and gives every state
/// an outgoing transition. Unreachable states are attached through a free
/// slot of a reachable state, or else by redirecting a transition that is
/// not needed for reachability.
fn repair(fsm: &mut Fsm, actions: usize, rng: &mut impl Rng) {
    let (states, events) = (fsm.state_count(), fsm.num_events());
    loop {
        let reach = fsm.reachable_states();
        let Some(target) = (0..states).find(|&s| !reach[s]) else {
            break;
        };
        let free: Vec<(usize, usize)> = (0..states)
            .filter(|&s| reach[s])
            .flat_map(|s| (0..events).map(move |e| (s, e)))
            .filter(|&(s, e)| fsm.transition(s, e).is_none())
            .collect();
        if let Some(&(s, e)) = free.choose(rng) {
            fsm.set_transition(s, e, target, random_outputs(actions, rng));
            continue;
        }
        let spare = spare_transitions(fsm, &reach);
        let &(s, e) = spare.choose(rng).expect("a full reachable part has a non-tree edge");
        let t = fsm.transition(s, e).expect("spare edges exist");
        fsm.set_transition(s, e, target, t.outputs);
    }
    for s in 0..states {
        if fsm.out_degree(s) == 0 {
            let e = rng.gen_range(0..events);
            let dst = rng.gen_range(0..states);
            fsm.set_transition(s, e, dst, random_outputs(actions, rng));
        }
    }
}

/// Transitions inside the reachable part that are not edges of its DFS
/// tree.
fn spare_transitions(fsm: &Fsm, reach: &[bool]) -> Vec<(usize, usize)> {
    let mut seen = vec![false; fsm.state_count()];
    let mut tree = Vec::new();
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(s) = stack.pop() {
        for e in 0..fsm.num_events() {
            if let Some(t) = fsm.transition(s, e) {
                if !seen[t.dst] {
                    seen[t.dst] = true;
                    tree.push((s, e));
                    stack.push(t.dst);
                }
            }
        }
    }
    fsm.transitions()
        .filter(|&(s, e, _)| reach[s] && !tree.contains(&(s, e)))
        .map(|(s, e, _)| (s, e))
        .collect()
}

/// Random reference FSM: all states reachable from the initial state and
/// none without outgoing transitions. Output set sizes are uniform on
/// `0..=min(4, actions)`.
pub fn random_fsm(spec: &InstanceSpec, rng: &mut impl Rng) -> Fsm {
    let mut fsm = sample_fsm(spec, rng);
    repair(&mut fsm, spec.actions, rng);
    fsm
}

fn scenario_lengths(spec: &InstanceSpec) -> Vec<usize> {
    let base = spec.total_length / spec.scenario_count;
    let mut lengths = vec![base; spec.scenario_count];
    *lengths.last_mut().expect("at least one scenario") += spec.total_length % spec.scenario_count;
    lengths
}

fn walk(fsm: &Fsm, len: usize, banned: &[bool], rng: &mut impl Rng) -> Option<Scenario> {
    let events = fsm.num_events();
    let mut state = 0;
    let mut elements = Vec::with_capacity(len);
    for _ in 0..len {
        let options: Vec<usize> = (0..events)
            .filter(|&e| fsm.transition(state, e).is_some() && !banned[state * events + e])
            .collect();
        let &e = options.choose(rng)?;
        let t = fsm.transition(state, e).expect("option exists");
        elements.push(ScenarioElement::new(e, t.outputs));
        state = t.dst;
    }
    Some(Scenario::new(elements).expect("lengths are positive"))
}

/// Random walks from the initial state with the spec's lengths. In complete
/// mode a random half of the transitions is never taken, so the scenarios
/// do not pin down the whole FSM.
pub fn random_scenarios(fsm: &Fsm, spec: &InstanceSpec, rng: &mut impl Rng) -> Result<Vec<Scenario>, HarnessError> {
    let slots = fsm.state_count() * fsm.num_events();
    let lengths = scenario_lengths(spec);
    'ban: for _ in 0..BAN_RETRIES {
        let mut banned = vec![false; slots];
        if spec.complete {
            for i in index::sample(rng, slots, slots / 2) {
                banned[i] = true;
            }
        }
        let mut out = Vec::with_capacity(lengths.len());
        for &len in &lengths {
            match (0..WALK_RETRIES).find_map(|_| walk(fsm, len, &banned, rng)) {
                Some(sc) => out.push(sc),
                None => continue 'ban,
            }
        }
        return Ok(out);
    }
    Err(HarnessError::GenerationStuck("every scenario walk ran into a dead end".into()))
}

/// Events that can follow `event` in `fsm`.
fn successor_events(fsm: &Fsm, event: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for (_, e, t) in fsm.transitions() {
        if e != event {
            continue;
        }
        for next in 0..fsm.num_events() {
            if fsm.transition(t.dst, next).is_some() && !out.contains(&next) {
                out.push(next);
            }
        }
    }
    out.sort_unstable();
    out
}

/// One formula from the template pool with random symbols.
fn template_formula(fsm: &Fsm, spec: &InstanceSpec, rng: &mut impl Rng) -> Option<Ltl> {
    let e = rng.gen_range(0..spec.events);
    let z = (spec.actions > 0).then(|| Ltl::WasAction(rng.gen_range(0..spec.actions)));
    let z2 = (spec.actions > 0).then(|| Ltl::WasAction(rng.gen_range(0..spec.actions)));
    let ev = Ltl::WasEvent(e);
    Some(match rng.gen_range(0..7) {
        0 => Ltl::globally(Ltl::implies(ev, Ltl::finally(z?))),
        1 => Ltl::globally(Ltl::implies(z?, Ltl::next(z2?))),
        2 => Ltl::finally(z?),
        3 => Ltl::globally(Ltl::not(Ltl::and(ev, z?))),
        4 => Ltl::or(z?, Ltl::next(z2?)),
        5 => {
            let next = successor_events(fsm, e)
                .into_iter()
                .map(Ltl::WasEvent)
                .reduce(Ltl::or)
                .unwrap_or(Ltl::False);
            Ltl::globally(Ltl::implies(ev, Ltl::next(next)))
        }
        _ => Ltl::until(Ltl::not(ev), z?),
    })
}

fn satisfies(fsm: &Fsm, f: &Ltl) -> bool {
    ModelChecker::new(std::slice::from_ref(f))
        .holds_all(fsm)
        .expect("generated FSMs have no dead states")
}

/// Holds on `reference` and on at most half of `others`.
fn discriminates(f: &Ltl, reference: &Fsm, others: &[Fsm]) -> bool {
    satisfies(reference, f) && others.iter().filter(|o| satisfies(o, f)).count() <= FILTER_MAX_SATISFIED
}

/// Template formulas that hold on `fsm` and on at most half of ten other
/// random FSMs of the same shape.
pub fn random_ltl(fsm: &Fsm, spec: &InstanceSpec, rng: &mut impl Rng) -> Result<Vec<Ltl>, HarnessError> {
    let others: Vec<Fsm> = (0..FILTER_FSMS).map(|_| random_fsm(spec, rng)).collect();
    let mut out: Vec<Ltl> = Vec::with_capacity(spec.formula_count);
    for _ in 0..spec.formula_count.saturating_mul(FORMULA_DRAWS) {
        if out.len() == spec.formula_count {
            break;
        }
        let Some(f) = template_formula(fsm, spec, rng) else {
            continue;
        };
        if !out.contains(&f) && discriminates(&f, fsm, &others) {
            out.push(f);
        }
    }
    if out.len() < spec.formula_count {
        return Err(HarnessError::GenerationStuck(format!(
            "found {} of {} discriminating formulas",
            out.len(),
            spec.formula_count
        )));
    }
    Ok(out)
}

fn draw_instance(spec: &InstanceSpec, rng: &mut impl Rng) -> Result<Instance, HarnessError> {
    let reference = random_fsm(spec, rng);
    let scenarios = random_scenarios(&reference, spec, rng)?;
    let formulas = random_ltl(&reference, spec, rng)?;
    Ok(Instance {
        spec: *spec,
        alphabet: spec.alphabet(),
        reference,
        scenarios,
        formulas,
        hard: false,
    })
}

/// One random instance, without the hard filter. A reference FSM for which
/// not enough formulas can be found is replaced by a fresh one.
pub fn make_instance(spec: &InstanceSpec) -> Result<Instance, HarnessError> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed);
    let mut last = None;
    for _ in 0..HARD_RETRIES {
        match draw_instance(spec, &mut rng) {
            Err(HarnessError::GenerationStuck(m)) => last = Some(m),
            other => return other,
        }
    }
    Err(HarnessError::GenerationStuck(last.unwrap_or_default()))
}

/// Whether identification from the scenarios alone at the reference size
/// yields an FSM that breaks some formula.
pub fn is_hard(instance: &Instance) -> Result<bool, HarnessError> {
    let mut req = SynthesisRequest::new(&instance.alphabet, &instance.scenarios, &[], instance.spec.states)
        .with_mode(instance.spec.mode());
    req.execution = Execution::Sequential;
    match identify(&req)?.outcome {
        Outcome::Found(fsm) => Ok(!ModelChecker::new(&instance.formulas).holds_all(&fsm)?),
        _ => Ok(false),
    }
}

/// Draws instances until one passes the hard filter. Such an instance can
/// never be solved by the first model of the iterative method.
pub fn make_hard_instance(spec: &InstanceSpec) -> Result<Instance, HarnessError> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed);
    for _ in 0..HARD_RETRIES {
        let mut inst = match draw_instance(spec, &mut rng) {
            Ok(inst) => inst,
            Err(HarnessError::GenerationStuck(_)) => continue,
            Err(e) => return Err(e),
        };
        if is_hard(&inst)? {
            inst.hard = true;
            return Ok(inst);
        }
    }
    Err(HarnessError::GenerationStuck(format!(
        "no hard instance in {HARD_RETRIES} draws"
    )))
}
