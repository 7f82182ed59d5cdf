//! Scenario text files and FSM rendering (DOT, JSON).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    ActionSet, Alphabet, Fsm, ModelError, Scenario, ScenarioElement, SymbolResolver,
};

/// One scenario per line, elements separated by `;`, each element written
/// `event(action,action,...)`. Blank lines and `#` comments are skipped.
pub fn parse_scenarios<R: SymbolResolver>(
    text: &str,
    mut symbols: R,
) -> Result<Vec<Scenario>, ModelError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| ModelError::Parse {
            line: lineno + 1,
            message,
        };
        let mut elements = Vec::new();
        for part in line.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let open = part
                .find('(')
                .ok_or_else(|| err(format!("expected `event(...)`, got `{part}`")))?;
            if !part.ends_with(')') {
                return Err(err(format!("missing `)` in `{part}`")));
            }
            let event = part[..open].trim();
            if event.is_empty() {
                return Err(err(format!("missing event name in `{part}`")));
            }
            let event = symbols.event(event)?;
            let mut outputs = ActionSet::EMPTY;
            for action in part[open + 1..part.len() - 1].split(',') {
                let action = action.trim();
                if !action.is_empty() {
                    outputs.insert(symbols.action(action)?);
                }
            }
            elements.push(ScenarioElement::new(event, outputs));
        }
        out.push(Scenario::new(elements).map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}

/// Inverse of [`parse_scenarios`].
pub fn format_scenarios(scenarios: &[Scenario], alphabet: &Alphabet) -> String {
    let mut out = String::new();
    for sc in scenarios {
        let parts: Vec<String> = sc
            .elements
            .iter()
            .map(|el| format!("{}({})", alphabet.event_name(el.event), alphabet.format_outputs(el.outputs)))
            .collect();
        out.push_str(&parts.join("; "));
        out.push('\n');
    }
    out
}

/// Graphviz rendering; states are numbered from 1, edges labelled
/// `event / z1,z2`.
pub fn fsm_to_dot(fsm: &Fsm, alphabet: &Alphabet) -> String {
    let mut s = String::from("digraph fsm {\n    rankdir=LR;\n    init [shape=point];\n");
    for st in 0..fsm.state_count() {
        let _ = writeln!(s, "    s{} [label=\"{}\", shape=circle];", st + 1, st + 1);
    }
    s.push_str("    init -> s1;\n");
    for (src, e, t) in fsm.transitions() {
        let _ = writeln!(
            s,
            "    s{} -> s{} [label=\"{} / {}\"];",
            src + 1,
            t.dst + 1,
            alphabet.event_name(e),
            alphabet.format_outputs(t.outputs)
        );
    }
    s.push_str("}\n");
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FsmJson {
    pub state_count: usize,
    pub initial: usize,
    pub transitions: Vec<TransitionJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionJson {
    pub src: usize,
    pub event: String,
    pub dst: usize,
    pub outputs: Vec<String>,
}

pub fn fsm_to_json(fsm: &Fsm, alphabet: &Alphabet) -> FsmJson {
    FsmJson {
        state_count: fsm.state_count(),
        initial: 1,
        transitions: fsm
            .transitions()
            .map(|(src, e, t)| TransitionJson {
                src: src + 1,
                event: alphabet.event_name(e).to_string(),
                dst: t.dst + 1,
                outputs: t
                    .outputs
                    .iter()
                    .map(|a| alphabet.action_name(a).to_string())
                    .collect(),
            })
            .collect(),
    }
}

/// Registers the symbols a JSON FSM mentions, in order of appearance.
pub fn register_json_symbols<R: SymbolResolver>(json: &FsmJson, mut symbols: R) -> Result<(), ModelError> {
    for t in &json.transitions {
        symbols.event(&t.event)?;
        for a in &t.outputs {
            symbols.action(a)?;
        }
    }
    Ok(())
}

pub fn fsm_from_json(json: &FsmJson, alphabet: &Alphabet) -> Result<Fsm, ModelError> {
    let mut symbols = alphabet;
    let bad = |message: String| ModelError::Parse { line: 0, message };
    if json.initial != 1 {
        return Err(bad("the initial state must be 1".into()));
    }
    if json.state_count == 0 {
        return Err(bad("stateCount must be positive".into()));
    }
    let mut parsed = Vec::with_capacity(json.transitions.len());
    for t in &json.transitions {
        if !(1..=json.state_count).contains(&t.src) || !(1..=json.state_count).contains(&t.dst) {
            return Err(bad(format!("state out of range in transition {t:?}")));
        }
        let e = symbols.event(&t.event)?;
        let outputs = t
            .outputs
            .iter()
            .map(|a| symbols.action(a))
            .collect::<Result<ActionSet, _>>()?;
        parsed.push((t.src - 1, e, t.dst - 1, outputs));
    }
    let mut fsm = Fsm::new(json.state_count, alphabet.num_events());
    for (src, e, dst, outputs) in parsed {
        if fsm.transition(src, e).is_some() {
            return Err(bad(format!("duplicate transition from state {} on event {e}", src + 1)));
        }
        fsm.set_transition(src, e, dst, outputs);
    }
    Ok(fsm)
}
