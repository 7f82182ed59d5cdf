//! LTL over `wasEvent`/`wasAction` atoms: syntax tree, parser, negation
//! normal form, and direct evaluation on ultimately periodic words.

mod parser;

pub use parser::{parse_ltl, parse_ltl_file, LtlError};

use std::fmt;

use crate::model::{Alphabet, ScenarioElement};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ltl {
    True,
    False,
    WasEvent(usize),
    WasAction(usize),
    Not(Box<Ltl>),
    And(Box<Ltl>, Box<Ltl>),
    Or(Box<Ltl>, Box<Ltl>),
    Implies(Box<Ltl>, Box<Ltl>),
    Next(Box<Ltl>),
    Globally(Box<Ltl>),
    Finally(Box<Ltl>),
    Until(Box<Ltl>, Box<Ltl>),
    Release(Box<Ltl>, Box<Ltl>),
}

#[allow(clippy::should_implement_trait)]
impl Ltl {
    pub fn not(f: Ltl) -> Ltl {
        Ltl::Not(Box::new(f))
    }

    pub fn and(a: Ltl, b: Ltl) -> Ltl {
        Ltl::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Implies(Box::new(a), Box::new(b))
    }

    pub fn next(f: Ltl) -> Ltl {
        Ltl::Next(Box::new(f))
    }

    pub fn globally(f: Ltl) -> Ltl {
        Ltl::Globally(Box::new(f))
    }

    pub fn finally(f: Ltl) -> Ltl {
        Ltl::Finally(Box::new(f))
    }

    pub fn until(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Release(Box::new(a), Box::new(b))
    }

    /// Conjunction of all formulas; `true` for none.
    pub fn conjunction(formulas: impl IntoIterator<Item = Ltl>) -> Ltl {
        formulas
            .into_iter()
            .reduce(Ltl::and)
            .unwrap_or(Ltl::True)
    }

    pub fn is_atom(&self) -> bool {
        matches!(
            self,
            Ltl::True | Ltl::False | Ltl::WasEvent(_) | Ltl::WasAction(_)
        )
    }

    pub fn depth(&self) -> usize {
        match self {
            f if f.is_atom() => 0,
            Ltl::Not(a) | Ltl::Next(a) | Ltl::Globally(a) | Ltl::Finally(a) => 1 + a.depth(),
            Ltl::And(a, b)
            | Ltl::Or(a, b)
            | Ltl::Implies(a, b)
            | Ltl::Until(a, b)
            | Ltl::Release(a, b) => 1 + a.depth().max(b.depth()),
            _ => unreachable!(),
        }
    }

    /// Negation normal form: no `Implies`, negations only directly above
    /// `wasEvent`/`wasAction` atoms.
    pub fn to_nnf(&self) -> Ltl {
        self.nnf(false)
    }

    fn nnf(&self, neg: bool) -> Ltl {
        match (self, neg) {
            (Ltl::True, false) | (Ltl::False, true) => Ltl::True,
            (Ltl::True, true) | (Ltl::False, false) => Ltl::False,
            (Ltl::WasEvent(_) | Ltl::WasAction(_), false) => self.clone(),
            (Ltl::WasEvent(_) | Ltl::WasAction(_), true) => Ltl::not(self.clone()),
            (Ltl::Not(a), _) => a.nnf(!neg),
            (Ltl::And(a, b), false) | (Ltl::Or(a, b), true) => Ltl::and(a.nnf(neg), b.nnf(neg)),
            (Ltl::Or(a, b), false) | (Ltl::And(a, b), true) => Ltl::or(a.nnf(neg), b.nnf(neg)),
            (Ltl::Implies(a, b), false) => Ltl::or(a.nnf(true), b.nnf(false)),
            (Ltl::Implies(a, b), true) => Ltl::and(a.nnf(false), b.nnf(true)),
            (Ltl::Next(a), _) => Ltl::next(a.nnf(neg)),
            (Ltl::Globally(a), false) | (Ltl::Finally(a), true) => Ltl::globally(a.nnf(neg)),
            (Ltl::Finally(a), false) | (Ltl::Globally(a), true) => Ltl::finally(a.nnf(neg)),
            (Ltl::Until(a, b), false) | (Ltl::Release(a, b), true) => {
                Ltl::until(a.nnf(neg), b.nnf(neg))
            }
            (Ltl::Release(a, b), false) | (Ltl::Until(a, b), true) => {
                Ltl::release(a.nnf(neg), b.nnf(neg))
            }
        }
    }

    pub fn is_nnf(&self) -> bool {
        match self {
            f if f.is_atom() => true,
            Ltl::Not(a) => matches!(**a, Ltl::WasEvent(_) | Ltl::WasAction(_)),
            Ltl::Implies(..) => false,
            Ltl::Next(a) | Ltl::Globally(a) | Ltl::Finally(a) => a.is_nnf(),
            Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Until(a, b) | Ltl::Release(a, b) => {
                a.is_nnf() && b.is_nnf()
            }
            _ => unreachable!(),
        }
    }

    /// Evaluates the formula at position 0 of the word `prefix · cycle^ω`.
    /// `cycle` must be non-empty.
    pub fn holds_on_lasso(&self, prefix: &[ScenarioElement], cycle: &[ScenarioElement]) -> bool {
        assert!(!cycle.is_empty(), "lasso needs a non-empty cycle");
        let word: Vec<ScenarioElement> = prefix.iter().chain(cycle).copied().collect();
        let succ: Vec<usize> = (0..word.len())
            .map(|i| if i + 1 < word.len() { i + 1 } else { prefix.len() })
            .collect();
        self.eval_positions(&word, &succ)[0]
    }

    fn eval_positions(&self, word: &[ScenarioElement], succ: &[usize]) -> Vec<bool> {
        let n = word.len();
        let fix = |init: bool, step: &dyn Fn(usize, &[bool]) -> bool| {
            let mut val = vec![init; n];
            loop {
                let next: Vec<bool> = (0..n).map(|i| step(i, &val)).collect();
                if next == val {
                    return val;
                }
                val = next;
            }
        };
        match self {
            Ltl::True => vec![true; n],
            Ltl::False => vec![false; n],
            Ltl::WasEvent(e) => word.iter().map(|w| w.event == *e).collect(),
            Ltl::WasAction(a) => word.iter().map(|w| w.outputs.contains(*a)).collect(),
            Ltl::Not(a) => a.eval_positions(word, succ).into_iter().map(|v| !v).collect(),
            Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Implies(a, b) => {
                let (va, vb) = (a.eval_positions(word, succ), b.eval_positions(word, succ));
                (0..n)
                    .map(|i| match self {
                        Ltl::And(..) => va[i] && vb[i],
                        Ltl::Or(..) => va[i] || vb[i],
                        _ => !va[i] || vb[i],
                    })
                    .collect()
            }
            Ltl::Next(a) => {
                let va = a.eval_positions(word, succ);
                (0..n).map(|i| va[succ[i]]).collect()
            }
            Ltl::Globally(a) => {
                let va = a.eval_positions(word, succ);
                fix(true, &|i, v| va[i] && v[succ[i]])
            }
            Ltl::Finally(a) => {
                let va = a.eval_positions(word, succ);
                fix(false, &|i, v| va[i] || v[succ[i]])
            }
            Ltl::Until(a, b) => {
                let (va, vb) = (a.eval_positions(word, succ), b.eval_positions(word, succ));
                fix(false, &|i, v| vb[i] || (va[i] && v[succ[i]]))
            }
            Ltl::Release(a, b) => {
                let (va, vb) = (a.eval_positions(word, succ), b.eval_positions(word, succ));
                fix(true, &|i, v| vb[i] && (va[i] || v[succ[i]]))
            }
        }
    }

    pub fn display<'a>(&'a self, alphabet: &'a Alphabet) -> impl fmt::Display + 'a {
        Printer {
            formula: self,
            alphabet,
        }
    }
}

struct Printer<'a> {
    formula: &'a Ltl,
    alphabet: &'a Alphabet,
}

impl Printer<'_> {
    fn write(&self, f: &Ltl, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrapped = |g: &Ltl, out: &mut fmt::Formatter<'_>| -> fmt::Result {
            if g.is_atom() {
                self.write(g, out)
            } else {
                out.write_str("(")?;
                self.write(g, out)?;
                out.write_str(")")
            }
        };
        match f {
            Ltl::True => out.write_str("true"),
            Ltl::False => out.write_str("false"),
            Ltl::WasEvent(e) => write!(out, "wasEvent({})", self.alphabet.event_name(*e)),
            Ltl::WasAction(a) => write!(out, "wasAction({})", self.alphabet.action_name(*a)),
            Ltl::Not(a) => {
                out.write_str("!")?;
                wrapped(a, out)
            }
            Ltl::Next(a) | Ltl::Globally(a) | Ltl::Finally(a) => {
                out.write_str(match f {
                    Ltl::Next(_) => "X(",
                    Ltl::Globally(_) => "G(",
                    _ => "F(",
                })?;
                self.write(a, out)?;
                out.write_str(")")
            }
            Ltl::And(a, b)
            | Ltl::Or(a, b)
            | Ltl::Implies(a, b)
            | Ltl::Until(a, b)
            | Ltl::Release(a, b) => {
                let op = match f {
                    Ltl::And(..) => " && ",
                    Ltl::Or(..) => " || ",
                    Ltl::Implies(..) => " -> ",
                    Ltl::Until(..) => " U ",
                    _ => " R ",
                };
                wrapped(a, out)?;
                out.write_str(op)?;
                wrapped(b, out)
            }
        }
    }
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.formula, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ActionSet;

    fn z(a: usize) -> Ltl {
        Ltl::WasAction(a)
    }

    #[test]
    fn nnf_of_negated_response() {
        // !G(z2 -> X z1)  ==>  F(z2 && X !z1)
        let g = Ltl::globally(Ltl::implies(z(1), Ltl::next(z(0))));
        let nnf = Ltl::not(g).to_nnf();
        assert_eq!(
            nnf,
            Ltl::finally(Ltl::and(z(1), Ltl::next(Ltl::not(z(0)))))
        );
        assert!(nnf.is_nnf());
    }

    #[test]
    fn nnf_dualities() {
        let (p, q) = (z(0), z(1));
        assert_eq!(Ltl::not(Ltl::not(p.clone())).to_nnf(), p);
        assert_eq!(
            Ltl::not(Ltl::until(p.clone(), q.clone())).to_nnf(),
            Ltl::release(Ltl::not(p.clone()), Ltl::not(q.clone()))
        );
        assert_eq!(
            Ltl::not(Ltl::release(p.clone(), q.clone())).to_nnf(),
            Ltl::until(Ltl::not(p), Ltl::not(q))
        );
        assert_eq!(Ltl::not(Ltl::True).to_nnf(), Ltl::False);
    }

    #[test]
    fn lasso_evaluation() {
        let z1 = ScenarioElement::new(0, ActionSet::EMPTY.with(0));
        let none = ScenarioElement::new(0, ActionSet::EMPTY);
        assert!(Ltl::globally(z(0)).holds_on_lasso(&[], &[z1]));
        assert!(!Ltl::globally(z(0)).holds_on_lasso(&[z1], &[none]));
        assert!(Ltl::finally(Ltl::globally(Ltl::not(z(0)))).holds_on_lasso(&[z1], &[none]));
        assert!(Ltl::globally(Ltl::finally(z(0))).holds_on_lasso(&[none], &[none, z1]));
        assert!(Ltl::until(Ltl::not(z(0)), z(0)).holds_on_lasso(&[none, none], &[z1]));
        assert!(!Ltl::until(Ltl::not(z(0)), z(0)).holds_on_lasso(&[], &[none]));
        assert!(Ltl::release(z(0), Ltl::True).holds_on_lasso(&[], &[none]));
    }
}
