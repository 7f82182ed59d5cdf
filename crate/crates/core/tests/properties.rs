use proptest::prelude::*;

use fsmmint::harness::{random_fsm, rng_for, InstanceSpec};
use fsmmint::ltl::{parse_ltl, Ltl};
use fsmmint::model::{format_scenarios, parse_scenarios, ActionSet, Alphabet, Scenario, ScenarioElement};
use fsmmint::sat::{Circuit, ClauseSink, CnfProblem, Lit, SolveResult, Tseitin, Var};
use fsmmint::verifier::{ModelChecker, Verdict};

fn ltl() -> impl Strategy<Value = Ltl> {
    let leaf = prop_oneof![
        Just(Ltl::True),
        Just(Ltl::False),
        (0..2usize).prop_map(Ltl::WasEvent),
        (0..2usize).prop_map(Ltl::WasAction),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Ltl::not),
            inner.clone().prop_map(Ltl::next),
            inner.clone().prop_map(Ltl::globally),
            inner.clone().prop_map(Ltl::finally),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ltl::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ltl::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ltl::implies(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ltl::until(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Ltl::release(a, b)),
        ]
    })
}

fn element() -> impl Strategy<Value = ScenarioElement> {
    (0..2usize, 0..4u64).prop_map(|(e, z)| ScenarioElement::new(e, ActionSet(z)))
}

fn word(max: usize) -> impl Strategy<Value = Vec<ScenarioElement>> {
    prop::collection::vec(element(), 0..max)
}

fn alphabet() -> Alphabet {
    Alphabet::numbered(2, 2).unwrap()
}

proptest! {
    #[test]
    fn ltl_text_round_trips(f in ltl()) {
        let a = alphabet();
        let text = f.display(&a).to_string();
        prop_assert_eq!(parse_ltl(&text, &a).unwrap(), f);
    }

    #[test]
    fn nnf_preserves_meaning(f in ltl(), prefix in word(4), cycle in word(4), first in element()) {
        let mut cycle = cycle;
        cycle.insert(0, first);
        let nnf = f.to_nnf();
        prop_assert!(nnf.is_nnf());
        prop_assert_eq!(f.holds_on_lasso(&prefix, &cycle), nnf.holds_on_lasso(&prefix, &cycle));
    }

    #[test]
    fn scenario_text_round_trips(lines in prop::collection::vec(word(6), 1..5)) {
        let a = alphabet();
        let scenarios: Vec<Scenario> = lines
            .into_iter()
            .filter(|w| !w.is_empty())
            .map(|w| Scenario::new(w).unwrap())
            .collect();
        let text = format_scenarios(&scenarios, &a);
        prop_assert_eq!(parse_scenarios(&text, &a).unwrap(), scenarios);
    }

    #[test]
    fn looping_counterexamples_are_genuine(f in ltl(), seed in any::<u64>(), states in 1..4usize) {
        let spec = InstanceSpec::scaled(states, 2, 2, seed);
        let fsm = random_fsm(&spec, &mut rng_for(seed));
        let verdict = ModelChecker::new(std::slice::from_ref(&f)).check(&fsm).unwrap().remove(0);
        if let Verdict::Violated(cex) = verdict {
            prop_assert!(fsm.realizes(&cex));
            if !cex.cycle.is_empty() {
                prop_assert!(!f.holds_on_lasso(&cex.prefix, &cex.cycle));
            }
        }
    }

    #[test]
    fn solver_agrees_with_truth_tables(
        clauses in prop::collection::vec(prop::collection::vec((0..8usize, any::<bool>()), 1..4), 0..30)
    ) {
        let mut p = CnfProblem::new(false);
        let vars: Vec<Var> = (0..8).map(|_| p.fresh_var()).collect();
        let lits: Vec<Vec<Lit>> = clauses
            .iter()
            .map(|c| c.iter().map(|&(v, s)| Lit::new(vars[v], s)).collect())
            .collect();
        for c in &lits {
            p.add_clause(c);
        }
        let truth = (0..256u32).any(|m| clauses.iter().all(|c| c.iter().any(|&(v, s)| ((m >> v) & 1 == 1) == s)));
        match p.solve(None) {
            SolveResult::Sat(model) => {
                prop_assert!(truth);
                prop_assert!(lits.iter().all(|c| model.satisfies(c)));
            }
            SolveResult::Unsat => prop_assert!(!truth),
            SolveResult::Interrupted => prop_assert!(false, "interrupted without a deadline"),
        }
    }

    #[test]
    fn tseitin_preserves_satisfiability(shape in circuit_shape()) {
        let mut p = CnfProblem::new(false);
        let vars: Vec<Var> = (0..4).map(|_| p.fresh_var()).collect();
        let c = build(&shape, &vars);
        let truth = (0..16u32).any(|m| c.eval(&|l: Lit| {
            let i = vars.iter().position(|&v| v == l.var()).unwrap();
            ((m >> i) & 1 == 1) == l.is_positive()
        }));
        Tseitin::new().assert(&c, &mut p);
        match p.solve(None) {
            SolveResult::Sat(model) => {
                prop_assert!(truth);
                prop_assert!(c.eval(&|l| model.lit(l)));
            }
            SolveResult::Unsat => prop_assert!(!truth),
            SolveResult::Interrupted => prop_assert!(false, "interrupted without a deadline"),
        }
    }
}

#[derive(Debug, Clone)]
enum CircuitShape {
    Const(bool),
    Lit(usize, bool),
    Not(Box<CircuitShape>),
    And(Vec<CircuitShape>),
    Or(Vec<CircuitShape>),
    Implies(Box<CircuitShape>, Box<CircuitShape>),
    Iff(Box<CircuitShape>, Box<CircuitShape>),
}

fn circuit_shape() -> impl Strategy<Value = CircuitShape> {
    let leaf = prop_oneof![
        1 => any::<bool>().prop_map(CircuitShape::Const),
        4 => (0..4usize, any::<bool>()).prop_map(|(v, s)| CircuitShape::Lit(v, s)),
    ];
    leaf.prop_recursive(4, 32, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|c| CircuitShape::Not(Box::new(c))),
            prop::collection::vec(inner.clone(), 0..3).prop_map(CircuitShape::And),
            prop::collection::vec(inner.clone(), 0..3).prop_map(CircuitShape::Or),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| CircuitShape::Implies(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| CircuitShape::Iff(Box::new(a), Box::new(b))),
        ]
    })
}

fn build(s: &CircuitShape, vars: &[Var]) -> Circuit {
    match s {
        CircuitShape::Const(b) => Circuit::constant(*b),
        CircuitShape::Lit(v, pos) => Circuit::lit(Lit::new(vars[*v], *pos)),
        CircuitShape::Not(a) => Circuit::not(build(a, vars)),
        CircuitShape::And(cs) => Circuit::and(cs.iter().map(|c| build(c, vars)).collect()),
        CircuitShape::Or(cs) => Circuit::or(cs.iter().map(|c| build(c, vars)).collect()),
        CircuitShape::Implies(a, b) => Circuit::implies(build(a, vars), build(b, vars)),
        CircuitShape::Iff(a, b) => Circuit::iff(build(a, vars), build(b, vars)),
    }
}
