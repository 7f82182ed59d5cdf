use std::fmt::Write as _;

use super::{Lit, SatError, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    Exists,
    Forall,
}

fn write_clauses(out: &mut String, clauses: &[Vec<Lit>]) {
    for c in clauses {
        for l in c {
            let _ = write!(out, "{} ", l.to_dimacs());
        }
        out.push_str("0\n");
    }
}

pub fn to_dimacs(num_vars: usize, clauses: &[Vec<Lit>]) -> String {
    let mut out = format!("p cnf {} {}\n", num_vars, clauses.len());
    write_clauses(&mut out, clauses);
    out
}

/// QDIMACS with the given quantifier blocks, outermost first. Every variable
/// `1..=num_vars` must occur in exactly one block; empty blocks are skipped.
pub fn to_qdimacs(
    num_vars: usize,
    clauses: &[Vec<Lit>],
    blocks: &[(Quantifier, Vec<Var>)],
) -> Result<String, SatError> {
    let mut bound = vec![false; num_vars];
    for (_, vars) in blocks {
        for v in vars {
            if v.index() >= num_vars || std::mem::replace(&mut bound[v.index()], true) {
                return Err(SatError::UnquantifiedVariable(v.dimacs()));
            }
        }
    }
    if let Some(i) = bound.iter().position(|b| !b) {
        return Err(SatError::UnquantifiedVariable(i as u32 + 1));
    }
    let mut out = format!("p cnf {} {}\n", num_vars, clauses.len());
    for (q, vars) in blocks {
        if vars.is_empty() {
            continue;
        }
        out.push(match q {
            Quantifier::Exists => 'e',
            Quantifier::Forall => 'a',
        });
        for v in vars {
            let _ = write!(out, " {}", v.dimacs());
        }
        out.push_str(" 0\n");
    }
    write_clauses(&mut out, clauses);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(d: i32) -> Lit {
        Lit::from_dimacs(d)
    }

    #[test]
    fn dimacs_format() {
        let text = to_dimacs(2, &[vec![l(1), l(-2)], vec![l(2)]]);
        assert_eq!(text, "p cnf 2 2\n1 -2 0\n2 0\n");
    }

    #[test]
    fn qdimacs_format() {
        let blocks = [
            (Quantifier::Exists, vec![Var(0)]),
            (Quantifier::Forall, vec![Var(1)]),
        ];
        let text = to_qdimacs(2, &[vec![l(1), l(2)]], &blocks).unwrap();
        assert_eq!(text, "p cnf 2 1\ne 1 0\na 2 0\n1 2 0\n");
    }

    #[test]
    fn unlisted_variable_is_rejected() {
        let blocks = [(Quantifier::Exists, vec![Var(0), Var(1)])];
        assert_eq!(
            to_qdimacs(3, &[vec![l(3)]], &blocks),
            Err(SatError::UnquantifiedVariable(3))
        );
    }
}
