//! Elimination of the universally quantified path variables by enumerating
//! every concrete path shape.
//!
//! A term fixes the source state and event of each position, with position
//! 0 in the initial state. Under that assignment the path constraints reduce
//! to y literals, each action proposition becomes the matching z literal,
//! and event propositions become constants. Each term contributes the
//! clausified `!P_y | !P_y^k | !W`. Terms are independent and are encoded
//! in parallel batches; clause order only depends on the term index.

use crate::encode::{Completeness, EncodingContext};
use crate::ltl::Ltl;
use crate::par::Execution;
use crate::sat::{Circuit, CnfProblem, LocalClauses, Lit, Tseitin, VarName, VarPool};

use super::{witness, AtomSource, BmcError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExpansionStats {
    pub terms: usize,
    pub clauses: usize,
}

/// `states^k * events^(k+1)`, or `None` on overflow.
pub fn term_count(states: usize, events: usize, k: usize) -> Option<usize> {
    let mut n = 1usize;
    for _ in 0..k {
        n = n.checked_mul(states)?.checked_mul(events)?;
    }
    n.checked_mul(events)
}

/// Literal lookup for one bound, built once and shared by all terms.
struct Lookup {
    states: usize,
    events: usize,
    actions: usize,
    /// `[src][dst][event]`
    y: Vec<Lit>,
    /// `[state][event][action]`
    z: Vec<Lit>,
}

impl Lookup {
    fn new(ctx: &EncodingContext, pool: &mut VarPool) -> Self {
        let (s, e, a) = (ctx.states, ctx.num_events, ctx.num_actions);
        let mut y = Vec::with_capacity(s * s * e);
        for src in 0..s {
            for dst in 0..s {
                for event in 0..e {
                    y.push(pool.var(VarName::Y { src, dst, event }).pos());
                }
            }
        }
        let mut z = Vec::with_capacity(s * e * a);
        for state in 0..s {
            for event in 0..e {
                for action in 0..a {
                    z.push(pool.var(VarName::Z { state, action, event }).pos());
                }
            }
        }
        Self {
            states: s,
            events: e,
            actions: a,
            y,
            z,
        }
    }

    fn y(&self, src: usize, dst: usize, event: usize) -> Lit {
        self.y[(src * self.states + dst) * self.events + event]
    }

    fn z(&self, state: usize, event: usize, action: usize) -> Lit {
        self.z[(state * self.events + event) * self.actions + action]
    }
}

struct TermAtoms<'a> {
    lookup: &'a Lookup,
    states: &'a [usize],
    events: &'a [usize],
}

impl AtomSource for TermAtoms<'_> {
    fn event(&self, event: usize, pos: usize) -> Circuit {
        Circuit::constant(self.events[pos] == event)
    }

    fn action(&self, action: usize, pos: usize) -> Circuit {
        Circuit::lit(self.lookup.z(self.states[pos], self.events[pos], action))
    }
}

fn decode_term(mut index: usize, k: usize, lookup: &Lookup) -> (Vec<usize>, Vec<usize>) {
    let mut events = vec![0; k + 1];
    let mut states = vec![0; k + 1];
    for e in events.iter_mut() {
        *e = index % lookup.events;
        index /= lookup.events;
    }
    for s in states.iter_mut().skip(1) {
        *s = index % lookup.states;
        index /= lookup.states;
    }
    (states, events)
}

fn encode_term(index: usize, k: usize, f: &Ltl, mode: Completeness, lookup: &Lookup) -> LocalClauses {
    let (states, events) = decode_term(index, k, lookup);
    let mut parts: Vec<Circuit> = (0..k)
        .map(|j| Circuit::lit(!lookup.y(states[j], states[j + 1], events[j])))
        .collect();
    if mode != Completeness::Complete {
        let some = (0..lookup.states).map(|d| Circuit::lit(lookup.y(states[k], d, events[k])));
        parts.push(Circuit::not(Circuit::or(some.collect())));
    }
    let loops: Vec<Circuit> = (0..=k)
        .map(|l| Circuit::lit(lookup.y(states[k], states[l], events[k])))
        .collect();
    let atoms = TermAtoms {
        lookup,
        states: &states,
        events: &events,
    };
    parts.push(Circuit::not(witness(f, k, &atoms, &loops)));
    let mut out = LocalClauses::new();
    Tseitin::new().assert(&Circuit::or(parts), &mut out);
    out
}

const BATCH: usize = 4096;

/// Adds the expansion of `f` (NNF of the negated specification) at bound
/// `k` to `p`. Fails once the projected total clause count exceeds `budget`.
pub fn expand_universals(
    ctx: &EncodingContext,
    f: &Ltl,
    k: usize,
    p: &mut CnfProblem,
    budget: usize,
    exec: Execution,
) -> Result<ExpansionStats, BmcError> {
    let base = p.clause_count();
    let Some(terms) = term_count(ctx.states, ctx.num_events, k) else {
        return Err(BmcError::BudgetExceeded {
            projected: usize::MAX,
            budget,
        });
    };
    let lookup = Lookup::new(ctx, p.pool_mut());
    let mut stats = ExpansionStats { terms, clauses: 0 };
    let mut start = 0;
    while start < terms {
        let end = (start + BATCH).min(terms);
        let chunks = exec.map_range(end - start, |i| encode_term(start + i, k, f, ctx.mode, &lookup));
        let added: usize = chunks.iter().map(|c| c.clauses.len()).sum();
        let done = end;
        let projected = base + (stats.clauses + added).saturating_mul(terms) / done;
        if projected > budget {
            return Err(BmcError::BudgetExceeded { projected, budget });
        }
        for c in chunks {
            c.drain_into(p);
        }
        stats.clauses += added;
        start = end;
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::encode_base;
    use crate::model::{inconsistent_pairs, ScenarioTree};
    use crate::sat::SolveResult;

    #[test]
    fn term_counts() {
        assert_eq!(term_count(2, 2, 1), Some(8));
        assert_eq!(term_count(3, 2, 0), Some(2));
        assert_eq!(term_count(usize::MAX, 2, 3), None);
    }

    #[test]
    fn terms_cover_all_shapes_once() {
        let mut pool = VarPool::new();
        let tree = ScenarioTree::empty(2);
        let graph = inconsistent_pairs(&tree);
        let ctx = EncodingContext {
            num_events: 2,
            num_actions: 1,
            states: 3,
            tree: &tree,
            graph: &graph,
            mode: Completeness::Complete,
        };
        let lookup = Lookup::new(&ctx, &mut pool);
        let n = term_count(3, 2, 2).unwrap();
        let mut seen = std::collections::HashSet::new();
        for t in 0..n {
            let (s, e) = decode_term(t, 2, &lookup);
            assert_eq!(s[0], 0);
            assert!(seen.insert((s, e)));
        }
        assert_eq!(seen.len(), 72);
    }

    #[test]
    fn false_spec_adds_nothing_and_true_spec_is_unsat() {
        let tree = ScenarioTree::empty(2);
        let graph = inconsistent_pairs(&tree);
        let ctx = EncodingContext {
            num_events: 2,
            num_actions: 1,
            states: 2,
            tree: &tree,
            graph: &graph,
            mode: Completeness::AtLeastOne,
        };
        for (f, sat) in [(Ltl::False, true), (Ltl::True, false)] {
            let mut p = CnfProblem::new(false);
            encode_base(&ctx, &mut p, true);
            let stats = expand_universals(&ctx, &f, 1, &mut p, usize::MAX, Execution::Sequential).unwrap();
            assert_eq!(stats.terms, 8);
            if sat {
                assert_eq!(stats.clauses, 0);
            }
            assert_eq!(matches!(p.solve(None), SolveResult::Sat(_)), sat);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let tree = ScenarioTree::empty(2);
        let graph = inconsistent_pairs(&tree);
        let ctx = EncodingContext {
            num_events: 2,
            num_actions: 1,
            states: 2,
            tree: &tree,
            graph: &graph,
            mode: Completeness::AtLeastOne,
        };
        let mut p = CnfProblem::new(false);
        let f = Ltl::finally(Ltl::WasAction(0));
        let err = expand_universals(&ctx, &f, 3, &mut p, 10, Execution::Sequential).unwrap_err();
        assert!(matches!(err, BmcError::BudgetExceeded { budget: 10, .. }));
    }

    #[test]
    fn parallel_and_sequential_emit_identical_clauses() {
        let tree = ScenarioTree::empty(2);
        let graph = inconsistent_pairs(&tree);
        let ctx = EncodingContext {
            num_events: 2,
            num_actions: 2,
            states: 2,
            tree: &tree,
            graph: &graph,
            mode: Completeness::AtLeastOne,
        };
        let f = Ltl::finally(Ltl::and(Ltl::WasAction(1), Ltl::next(Ltl::not(Ltl::WasAction(0)))));
        let run = |exec| {
            let mut p = CnfProblem::new(true);
            expand_universals(&ctx, &f, 2, &mut p, usize::MAX, exec).unwrap();
            p.to_dimacs()
        };
        assert_eq!(run(Execution::Parallel), run(Execution::Sequential));
    }
}
