//! Conflict-driven clause learning with two watched literals, first-UIP
//! learning, VSIDS branching, phase saving and Luby restarts. Clauses may be
//! added between calls to [`Solver::solve`]; learned clauses are kept.

use std::time::Instant;

use super::{Lit, Model, SolveResult, Var};

const NO_REASON: u32 = u32::MAX;
const VAR_DECAY: f64 = 0.95;
const CLA_DECAY: f64 = 0.999;
const RESTART_BASE: f64 = 100.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub decisions: u64,
    pub conflicts: u64,
    pub propagations: u64,
    pub restarts: u64,
    pub learnts: u64,
}

#[derive(Debug)]
struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

#[derive(Debug, Clone, Copy)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

/// Binary max-heap of variables ordered by activity.
#[derive(Debug, Default)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<i32>,
}

impl VarHeap {
    fn grow(&mut self, n: usize) {
        self.pos.resize(n, -1);
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize] >= 0
    }

    fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.pos[v as usize] = self.heap.len() as i32;
        self.heap.push(v);
        self.up(self.heap.len() - 1, act);
    }

    fn bumped(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            self.up(self.pos[v as usize] as usize, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top as usize] = -1;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.down(0, act);
        }
        Some(top)
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if act[p as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = p;
            self.pos[p as usize] = i as i32;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as i32;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let child = if r < n && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                r
            } else {
                l
            };
            let c = self.heap[child];
            if act[c as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = c;
            self.pos[c as usize] = i as i32;
            i = child;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as i32;
    }
}

#[derive(Debug)]
pub struct Solver {
    clauses: Vec<Clause>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watcher>>,
    /// Per variable: 1 true, -1 false, 0 unassigned.
    assigns: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    heap: VarHeap,
    polarity: Vec<bool>,
    seen: Vec<bool>,
    cla_inc: f64,
    max_learnts: f64,
    problem_clauses: usize,
    ok: bool,
    stats: SolverStats,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

#[inline]
fn lit_value(assigns: &[i8], l: Lit) -> i8 {
    let v = assigns[l.var().index()];
    if l.is_positive() {
        v
    } else {
        -v
    }
}

fn luby(mut x: u64) -> f64 {
    let (mut size, mut seq) = (1u64, 0i32);
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    2f64.powi(seq)
}

impl Solver {
    pub fn new() -> Self {
        Self {
            clauses: Vec::new(),
            learnts: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            heap: VarHeap::default(),
            polarity: Vec::new(),
            seen: Vec::new(),
            cla_inc: 1.0,
            max_learnts: 0.0,
            problem_clauses: 0,
            ok: true,
            stats: SolverStats::default(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    /// False once the clause set is known to be unsatisfiable.
    pub fn is_ok(&self) -> bool {
        self.ok
    }

    pub fn ensure_vars(&mut self, n: usize) {
        let old = self.assigns.len();
        if n <= old {
            return;
        }
        self.assigns.resize(n, 0);
        self.level.resize(n, 0);
        self.reason.resize(n, NO_REASON);
        self.activity.resize(n, 0.0);
        self.polarity.resize(n, false);
        self.seen.resize(n, false);
        self.watches.resize_with(2 * n, Vec::new);
        self.heap.grow(n);
        for v in old..n {
            self.heap.insert(v as u32, &self.activity);
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Adds a clause at decision level 0. Returns false if the solver is now
    /// in a conflicting state.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        debug_assert_eq!(self.decision_level(), 0);
        if let Some(max) = lits.iter().map(|l| l.var().index()).max() {
            self.ensure_vars(max + 1);
        }
        let mut c = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0] == !w[1]) {
            return true;
        }
        if c.iter().any(|&l| lit_value(&self.assigns, l) == 1) {
            return true;
        }
        c.retain(|&l| lit_value(&self.assigns, l) == 0);
        match c.len() {
            0 => {
                self.ok = false;
            }
            1 => {
                self.enqueue(c[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                self.attach(c, false);
                self.problem_clauses += 1;
            }
        }
        self.ok
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[lits[0].code()].push(Watcher {
            cref,
            blocker: lits[1],
        });
        self.watches[lits[1].code()].push(Watcher {
            cref,
            blocker: lits[0],
        });
        self.clauses.push(Clause {
            lits,
            learnt,
            deleted: false,
            activity: 0.0,
        });
        cref
    }

    fn enqueue(&mut self, lit: Lit, reason: u32) {
        let v = lit.var().index();
        debug_assert_eq!(self.assigns[v], 0);
        self.assigns[v] = if lit.is_positive() { 1 } else { -1 };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(lit);
    }

    /// Unit propagation; returns a conflicting clause if one arises.
    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let (mut i, mut j) = (0, 0);
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if lit_value(&self.assigns, w.blocker) == 1 {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let clause = &mut self.clauses[w.cref as usize];
                if clause.deleted {
                    continue;
                }
                let c = &mut clause.lits;
                if c[0] == false_lit {
                    c.swap(0, 1);
                }
                let first = c[0];
                let watcher = Watcher {
                    cref: w.cref,
                    blocker: first,
                };
                if first != w.blocker && lit_value(&self.assigns, first) == 1 {
                    ws[j] = watcher;
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..c.len() {
                    if lit_value(&self.assigns, c[k]) != -1 {
                        c.swap(1, k);
                        self.watches[c[1].code()].push(watcher);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = watcher;
                j += 1;
                if lit_value(&self.assigns, first) == -1 {
                    conflict = Some(w.cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    let v = first.var().index();
                    self.assigns[v] = if first.is_positive() { 1 } else { -1 };
                    self.level[v] = self.trail_lim.len() as u32;
                    self.reason[v] = w.cref;
                    self.trail.push(first);
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v as u32, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let c = &mut self.clauses[cref as usize];
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &l in &self.learnts {
                self.clauses[l as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    /// First-UIP conflict analysis. Returns the learned clause (asserting
    /// literal first, highest remaining level second) and the backjump level.
    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit::new(Var(0), true)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let dl = self.decision_level();
        loop {
            if self.clauses[confl as usize].learnt {
                self.bump_clause(confl);
            }
            let start = usize::from(p.is_some());
            let len = self.clauses[confl as usize].lits.len();
            for k in start..len {
                let q = self.clauses[confl as usize].lits[k];
                let v = q.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = true;
                    if self.level[v] >= dl {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().index()] {
                    break;
                }
            }
            let pl = self.trail[index];
            let v = pl.var().index();
            confl = self.reason[v];
            self.seen[v] = false;
            path -= 1;
            p = Some(pl);
            if path == 0 {
                break;
            }
        }
        learnt[0] = !p.unwrap();

        // Drop literals implied by other literals of the clause.
        let mut kept = vec![learnt[0]];
        for &q in &learnt[1..] {
            let r = self.reason[q.var().index()];
            let redundant = r != NO_REASON
                && self.clauses[r as usize].lits[1..].iter().all(|l| {
                    let u = l.var().index();
                    self.seen[u] || self.level[u] == 0
                });
            if !redundant {
                kept.push(q);
            }
        }
        for &q in &learnt {
            self.seen[q.var().index()] = false;
        }

        let mut bt = 0;
        if kept.len() > 1 {
            let mut max_i = 1;
            for i in 2..kept.len() {
                if self.level[kept[i].var().index()] > self.level[kept[max_i].var().index()] {
                    max_i = i;
                }
            }
            kept.swap(1, max_i);
            bt = self.level[kept[1].var().index()];
        }
        (kept, bt)
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for idx in (lim..self.trail.len()).rev() {
            let l = self.trail[idx];
            let v = l.var().index();
            self.assigns[v] = 0;
            self.reason[v] = NO_REASON;
            self.polarity[v] = l.is_positive();
            self.heap.insert(v as u32, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while !self.heap.is_empty() {
            let v = self.heap.pop(&self.activity)? as usize;
            if self.assigns[v] == 0 {
                return Some(Lit::new(Var(v as u32), self.polarity[v]));
            }
        }
        None
    }

    fn locked(&self, cref: u32) -> bool {
        let first = self.clauses[cref as usize].lits[0];
        self.reason[first.var().index()] == cref && lit_value(&self.assigns, first) == 1
    }

    /// Deletes the less active half of the long learned clauses.
    fn reduce_db(&mut self) {
        let mut learnts = std::mem::take(&mut self.learnts);
        learnts.sort_by(|&a, &b| {
            self.clauses[a as usize]
                .activity
                .total_cmp(&self.clauses[b as usize].activity)
        });
        let half = learnts.len() / 2;
        let mut keep = Vec::with_capacity(learnts.len());
        for (i, &cref) in learnts.iter().enumerate() {
            let c = &self.clauses[cref as usize];
            if i < half && c.lits.len() > 2 && !self.locked(cref) {
                let c = &mut self.clauses[cref as usize];
                c.deleted = true;
                c.lits = Vec::new();
            } else {
                keep.push(cref);
            }
        }
        self.learnts = keep;
        let clauses = &self.clauses;
        for ws in &mut self.watches {
            ws.retain(|w| !clauses[w.cref as usize].deleted);
        }
    }

    fn search(&mut self, budget: u64, deadline: Option<Instant>) -> Option<SolveResult> {
        let mut conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                conflicts += 1;
                self.stats.conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Some(SolveResult::Unsat);
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let first = learnt[0];
                    let cref = self.attach(learnt, true);
                    self.learnts.push(cref);
                    self.stats.learnts += 1;
                    self.bump_clause(cref);
                    self.enqueue(first, cref);
                }
                self.var_inc /= VAR_DECAY;
                self.cla_inc /= CLA_DECAY;
                if self.stats.conflicts.is_multiple_of(256) && deadline.is_some_and(|d| Instant::now() >= d) {
                    return Some(SolveResult::Interrupted);
                }
            } else {
                if conflicts >= budget {
                    self.cancel_until(0);
                    return None;
                }
                if self.learnts.len() as f64 - self.trail.len() as f64 >= self.max_learnts {
                    self.reduce_db();
                    self.max_learnts *= 1.1;
                }
                match self.pick_branch() {
                    None => {
                        let model = self.assigns.iter().map(|&a| a == 1).collect();
                        return Some(SolveResult::Sat(Model::new(model)));
                    }
                    Some(lit) => {
                        self.stats.decisions += 1;
                        if self.stats.decisions.is_multiple_of(4096)
                            && deadline.is_some_and(|d| Instant::now() >= d)
                        {
                            return Some(SolveResult::Interrupted);
                        }
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(lit, NO_REASON);
                    }
                }
            }
        }
    }

    /// Decides the current clause set. The solver returns to level 0 so more
    /// clauses can be added afterwards.
    pub fn solve(&mut self, deadline: Option<Instant>) -> SolveResult {
        if !self.ok {
            return SolveResult::Unsat;
        }
        self.max_learnts = self.max_learnts.max(self.problem_clauses as f64 / 3.0).max(2000.0);
        let mut restarts = 0u64;
        let result = loop {
            let budget = (luby(restarts) * RESTART_BASE) as u64;
            if let Some(r) = self.search(budget, deadline) {
                break r;
            }
            restarts += 1;
            self.stats.restarts += 1;
            if deadline.is_some_and(|d| Instant::now() >= d) {
                break SolveResult::Interrupted;
            }
        };
        self.cancel_until(0);
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(d: i32) -> Lit {
        Lit::from_dimacs(d)
    }

    fn solver_with(clauses: &[Vec<i32>]) -> Solver {
        let mut s = Solver::new();
        for c in clauses {
            let lits: Vec<Lit> = c.iter().map(|&d| lit(d)).collect();
            s.add_clause(&lits);
        }
        s
    }

    fn pigeonhole(pigeons: usize, holes: usize) -> Vec<Vec<i32>> {
        let v = |p: usize, h: usize| (p * holes + h + 1) as i32;
        let mut cnf = Vec::new();
        for p in 0..pigeons {
            cnf.push((0..holes).map(|h| v(p, h)).collect());
        }
        for h in 0..holes {
            for p in 0..pigeons {
                for q in p + 1..pigeons {
                    cnf.push(vec![-v(p, h), -v(q, h)]);
                }
            }
        }
        cnf
    }

    #[test]
    fn luby_sequence() {
        let seq: Vec<f64> = (0..10).map(luby).collect();
        assert_eq!(seq, [1.0, 1.0, 2.0, 1.0, 1.0, 2.0, 4.0, 1.0, 1.0, 2.0]);
    }

    #[test]
    fn empty_problem_is_sat() {
        assert!(matches!(Solver::new().solve(None), SolveResult::Sat(_)));
    }

    #[test]
    fn pigeonhole_4_3_is_unsat() {
        assert_eq!(solver_with(&pigeonhole(4, 3)).solve(None), SolveResult::Unsat);
    }

    #[test]
    fn path_coloring_is_sat_and_valid() {
        // 5-vertex path, 3 colours: var(v, c) = 3v + c + 1
        let v = |n: usize, c: usize| (3 * n + c + 1) as i32;
        let mut cnf = Vec::new();
        for n in 0..5 {
            cnf.push((0..3).map(|c| v(n, c)).collect::<Vec<_>>());
            for c in 0..3 {
                for d in c + 1..3 {
                    cnf.push(vec![-v(n, c), -v(n, d)]);
                }
            }
        }
        for n in 0..4 {
            for c in 0..3 {
                cnf.push(vec![-v(n, c), -v(n + 1, c)]);
            }
        }
        let SolveResult::Sat(m) = solver_with(&cnf).solve(None) else {
            panic!("expected SAT")
        };
        let colour = |n: usize| (0..3).find(|&c| m.lit(lit(v(n, c)))).unwrap();
        for n in 0..4 {
            assert_ne!(colour(n), colour(n + 1));
        }
    }

    #[test]
    fn units_conflict_at_level_zero() {
        let mut s = solver_with(&[vec![1], vec![-1, 2]]);
        assert!(s.add_clause(&[lit(-2), lit(3)]));
        assert!(!s.add_clause(&[lit(-3)]));
        assert_eq!(s.solve(None), SolveResult::Unsat);
    }

    #[test]
    fn deadline_interrupts() {
        let mut s = solver_with(&pigeonhole(9, 8));
        let r = s.solve(Some(Instant::now()));
        assert!(matches!(r, SolveResult::Interrupted | SolveResult::Unsat));
    }
}
