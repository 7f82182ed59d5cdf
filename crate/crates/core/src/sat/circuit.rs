//! Boolean circuits over literals and the Tseitin transformation.
//!
//! Construction never simplifies, so a built circuit mirrors the formula it
//! was written from (`x & false` stays as is). Constants are folded only when
//! encoding to clauses.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::{ClauseSink, Lit, VarPool};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Const(bool),
    Lit(Lit),
    Not(Circuit),
    And(Vec<Circuit>),
    Or(Vec<Circuit>),
    Implies(Circuit, Circuit),
    Iff(Circuit, Circuit),
}

/// Shared, immutable circuit node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Circuit(Arc<Node>);

impl Circuit {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(b: bool) -> Self {
        Circuit(Arc::new(Node::Const(b)))
    }

    pub fn t() -> Self {
        Self::constant(true)
    }

    pub fn f() -> Self {
        Self::constant(false)
    }

    pub fn lit(l: Lit) -> Self {
        Circuit(Arc::new(Node::Lit(l)))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(c: Circuit) -> Self {
        Circuit(Arc::new(Node::Not(c)))
    }

    pub fn and(children: Vec<Circuit>) -> Self {
        Circuit(Arc::new(Node::And(children)))
    }

    pub fn or(children: Vec<Circuit>) -> Self {
        Circuit(Arc::new(Node::Or(children)))
    }

    pub fn implies(a: Circuit, b: Circuit) -> Self {
        Circuit(Arc::new(Node::Implies(a, b)))
    }

    pub fn iff(a: Circuit, b: Circuit) -> Self {
        Circuit(Arc::new(Node::Iff(a, b)))
    }

    /// Node identity. Only meaningful while the node is alive.
    fn key(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn eval(&self, assignment: &dyn Fn(Lit) -> bool) -> bool {
        match self.node() {
            Node::Const(b) => *b,
            Node::Lit(l) => assignment(*l),
            Node::Not(a) => !a.eval(assignment),
            Node::And(cs) => cs.iter().all(|c| c.eval(assignment)),
            Node::Or(cs) => cs.iter().any(|c| c.eval(assignment)),
            Node::Implies(a, b) => !a.eval(assignment) || b.eval(assignment),
            Node::Iff(a, b) => a.eval(assignment) == b.eval(assignment),
        }
    }

    /// Number of distinct nodes in the DAG.
    pub fn size(&self) -> usize {
        fn walk(c: &Circuit, seen: &mut HashMap<usize, ()>) {
            if seen.insert(c.key(), ()).is_some() {
                return;
            }
            match c.node() {
                Node::Const(_) | Node::Lit(_) => {}
                Node::Not(a) => walk(a, seen),
                Node::And(cs) | Node::Or(cs) => cs.iter().for_each(|c| walk(c, seen)),
                Node::Implies(a, b) | Node::Iff(a, b) => {
                    walk(a, seen);
                    walk(b, seen);
                }
            }
        }
        let mut seen = HashMap::new();
        walk(self, &mut seen);
        seen.len()
    }

    /// Structural normal form for comparisons: nested `And`/`Or` are
    /// flattened and their children sorted. No other rewriting is done.
    pub fn canonical(&self) -> Circuit {
        match self.node() {
            Node::Const(_) | Node::Lit(_) => self.clone(),
            Node::Not(a) => Circuit::not(a.canonical()),
            Node::And(cs) | Node::Or(cs) => {
                let is_and = matches!(self.node(), Node::And(_));
                let mut flat = Vec::new();
                for c in cs {
                    let c = c.canonical();
                    match (c.node(), is_and) {
                        (Node::And(inner), true) | (Node::Or(inner), false) => {
                            flat.extend(inner.iter().cloned())
                        }
                        _ => flat.push(c),
                    }
                }
                flat.sort();
                if is_and {
                    Circuit::and(flat)
                } else {
                    Circuit::or(flat)
                }
            }
            Node::Implies(a, b) => Circuit::implies(a.canonical(), b.canonical()),
            Node::Iff(a, b) => Circuit::iff(a.canonical(), b.canonical()),
        }
    }

    pub fn display<'a>(&'a self, pool: &'a VarPool) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Circuit, &'a VarPool);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let join = |f: &mut fmt::Formatter<'_>, cs: &[Circuit], op: &str, empty: &str| {
                    if cs.is_empty() {
                        return f.write_str(empty);
                    }
                    f.write_str("(")?;
                    for (i, c) in cs.iter().enumerate() {
                        if i > 0 {
                            f.write_str(op)?;
                        }
                        write!(f, "{}", D(c, self.1))?;
                    }
                    f.write_str(")")
                };
                match self.0.node() {
                    Node::Const(b) => write!(f, "{b}"),
                    Node::Lit(l) => f.write_str(&self.1.format_lit(*l)),
                    Node::Not(a) => write!(f, "!{}", D(a, self.1)),
                    Node::And(cs) => join(f, cs, " & ", "true"),
                    Node::Or(cs) => join(f, cs, " | ", "false"),
                    Node::Implies(a, b) => write!(f, "({} -> {})", D(a, self.1), D(b, self.1)),
                    Node::Iff(a, b) => write!(f, "({} <-> {})", D(a, self.1), D(b, self.1)),
                }
            }
        }
        D(self, pool)
    }
}

/// Result of encoding a circuit: a literal equivalent to it, or a constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoded {
    Const(bool),
    Lit(Lit),
}

impl Encoded {
    fn negate(self) -> Encoded {
        match self {
            Encoded::Const(b) => Encoded::Const(!b),
            Encoded::Lit(l) => Encoded::Lit(!l),
        }
    }
}

/// Tseitin encoder with full-equivalence gate definitions, memoised by node
/// identity so shared subcircuits are defined once. Subcircuits that are
/// constant regardless of the literals are folded before any gate is made.
#[derive(Debug, Default)]
pub struct Tseitin {
    /// Both maps hold a clone of every keyed node so identities are never reused.
    memo: HashMap<usize, (Circuit, Encoded)>,
    consts: HashMap<usize, (Circuit, Option<bool>)>,
}

impl Tseitin {
    pub fn new() -> Self {
        Self::default()
    }

    fn constant_value(&mut self, c: &Circuit) -> Option<bool> {
        if let Some((_, v)) = self.consts.get(&c.key()) {
            return *v;
        }
        let v = match c.node() {
            Node::Const(b) => Some(*b),
            Node::Lit(_) => None,
            Node::Not(a) => self.constant_value(a).map(|b| !b),
            Node::And(cs) | Node::Or(cs) => {
                let dominant = matches!(c.node(), Node::Or(_));
                let mut all_neutral = true;
                let mut hit = false;
                for ch in cs {
                    match self.constant_value(ch) {
                        Some(b) if b == dominant => {
                            hit = true;
                            break;
                        }
                        Some(_) => {}
                        None => all_neutral = false,
                    }
                }
                if hit {
                    Some(dominant)
                } else if all_neutral {
                    Some(!dominant)
                } else {
                    None
                }
            }
            Node::Implies(a, b) => match (self.constant_value(a), self.constant_value(b)) {
                (Some(false), _) | (_, Some(true)) => Some(true),
                (Some(true), Some(false)) => Some(false),
                _ => None,
            },
            Node::Iff(a, b) => match (self.constant_value(a), self.constant_value(b)) {
                (Some(x), Some(y)) => Some(x == y),
                _ => None,
            },
        };
        self.consts.insert(c.key(), (c.clone(), v));
        v
    }

    pub fn encode(&mut self, c: &Circuit, sink: &mut impl ClauseSink) -> Encoded {
        if let Some((_, e)) = self.memo.get(&c.key()) {
            return *e;
        }
        if let Some(b) = self.constant_value(c) {
            return Encoded::Const(b);
        }
        let e = match c.node() {
            Node::Const(b) => Encoded::Const(*b),
            Node::Lit(l) => Encoded::Lit(*l),
            Node::Not(a) => self.encode(a, sink).negate(),
            Node::And(cs) => {
                let parts: Vec<Encoded> = cs.iter().map(|c| self.encode(c, sink)).collect();
                gate_and(&parts, sink)
            }
            Node::Or(cs) => {
                let parts: Vec<Encoded> =
                    cs.iter().map(|c| self.encode(c, sink).negate()).collect();
                gate_and(&parts, sink).negate()
            }
            Node::Implies(a, b) => {
                let parts = [self.encode(a, sink), self.encode(b, sink).negate()];
                gate_and(&parts, sink).negate()
            }
            Node::Iff(a, b) => {
                let (ea, eb) = (self.encode(a, sink), self.encode(b, sink));
                gate_iff(ea, eb, sink)
            }
        };
        self.memo.insert(c.key(), (c.clone(), e));
        e
    }

    /// Adds clauses forcing `c` to be true. Top-level conjunctions are split
    /// and top-level disjunctions become a single clause.
    pub fn assert(&mut self, c: &Circuit, sink: &mut impl ClauseSink) {
        if self.constant_value(c) == Some(true) {
            return;
        }
        match c.node() {
            Node::And(cs) => cs.iter().for_each(|c| self.assert(c, sink)),
            Node::Or(cs) => {
                let parts: Vec<Encoded> = cs.iter().map(|c| self.encode(c, sink)).collect();
                emit_clause(&parts, sink);
            }
            Node::Implies(a, b) => {
                let parts = [self.encode(a, sink).negate(), self.encode(b, sink)];
                emit_clause(&parts, sink);
            }
            _ => {
                let e = self.encode(c, sink);
                emit_clause(&[e], sink);
            }
        }
    }
}

fn emit_clause(parts: &[Encoded], sink: &mut impl ClauseSink) {
    let mut lits = Vec::with_capacity(parts.len());
    for p in parts {
        match *p {
            Encoded::Const(true) => return,
            Encoded::Const(false) => {}
            Encoded::Lit(l) => lits.push(l),
        }
    }
    sink.add_clause(&lits);
}

fn gate_and(parts: &[Encoded], sink: &mut impl ClauseSink) -> Encoded {
    let mut lits = Vec::with_capacity(parts.len());
    for p in parts {
        match *p {
            Encoded::Const(false) => return Encoded::Const(false),
            Encoded::Const(true) => {}
            Encoded::Lit(l) => lits.push(l),
        }
    }
    match lits.len() {
        0 => Encoded::Const(true),
        1 => Encoded::Lit(lits[0]),
        _ => {
            let g = sink.fresh_var().pos();
            for &l in &lits {
                sink.add_clause(&[!g, l]);
            }
            let mut big: Vec<Lit> = lits.iter().map(|&l| !l).collect();
            big.insert(0, g);
            sink.add_clause(&big);
            Encoded::Lit(g)
        }
    }
}

fn gate_iff(a: Encoded, b: Encoded, sink: &mut impl ClauseSink) -> Encoded {
    match (a, b) {
        (Encoded::Const(x), other) | (other, Encoded::Const(x)) => {
            if x {
                other
            } else {
                other.negate()
            }
        }
        (Encoded::Lit(a), Encoded::Lit(b)) => {
            let g = sink.fresh_var().pos();
            sink.add_clause(&[!g, !a, b]);
            sink.add_clause(&[!g, a, !b]);
            sink.add_clause(&[g, a, b]);
            sink.add_clause(&[g, !a, !b]);
            Encoded::Lit(g)
        }
    }
}
