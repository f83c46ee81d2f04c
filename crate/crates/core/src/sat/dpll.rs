//! DPLL over CNF with two watched literals.
//!
//! By default the search is the textbook loop: decide the lowest unassigned
//! variable (true first), propagate units, and on conflict flip the most
//! recent unflipped decision. With `learning` enabled conflicts are analysed
//! to a first-UIP clause and the search backjumps instead.

use std::fmt::Write as _;

use super::order::{luby, VarOrder};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    /// Variable 0 is fixed to true in every check.
    pub const TRUE: Lit = Lit(0);
    pub const FALSE: Lit = Lit(1);

    pub fn new(var: u32, negated: bool) -> Lit {
        Lit(var << 1 | negated as u32)
    }

    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn is_const(self) -> bool {
        self.var() == 0
    }

    pub fn dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.is_neg() {
            -v
        } else {
            v
        }
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl std::fmt::Debug for Lit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.dimacs())
    }
}

const UNDEF: u8 = 2;

#[derive(Clone, Debug)]
struct Clause {
    lits: Vec<Lit>,
    /// Push depth the clause belongs to; deleted when popping below it.
    /// `None` for definitional clauses, which are never retracted.
    scope: Option<u32>,
    learned: bool,
    deleted: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub checks: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
    pub learned: u64,
}

#[derive(Clone, Debug)]
pub struct Dpll {
    num_vars: u32,
    clauses: Vec<Clause>,
    /// Indices of scoped clauses; their scopes are nondecreasing.
    scoped: Vec<u32>,
    watches: Vec<Vec<u32>>,
    units: Vec<Lit>,
    learned_units: Vec<(Lit, u32)>,
    assigns: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    lims: Vec<usize>,
    flipped: Vec<bool>,
    qhead: usize,
    cursor: u32,
    order: VarOrder,
    phase: Vec<bool>,
    inconsistent: bool,
    learning: bool,
    depth: u32,
    /// Scope given to learned clauses.
    learn_scope: u32,
    tombstones: usize,
    live_learned: usize,
    seen: Vec<bool>,
    stats: Stats,
}

const NO_REASON: u32 = u32::MAX;
const LEARNED_LIMIT: usize = 20_000;

impl Dpll {
    pub fn new(learning: bool) -> Dpll {
        let mut d = Dpll {
            num_vars: 0,
            clauses: Vec::new(),
            scoped: Vec::new(),
            watches: Vec::new(),
            units: Vec::new(),
            learned_units: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            lims: Vec::new(),
            flipped: Vec::new(),
            qhead: 0,
            cursor: 1,
            order: VarOrder::new(),
            phase: Vec::new(),
            inconsistent: false,
            learning,
            depth: 0,
            learn_scope: 0,
            tombstones: 0,
            live_learned: 0,
            seen: Vec::new(),
            stats: Stats::default(),
        };
        d.new_var();
        d
    }

    pub fn new_var(&mut self) -> u32 {
        let v = self.num_vars;
        self.num_vars += 1;
        self.assigns.push(UNDEF);
        self.level.push(0);
        self.reason.push(NO_REASON);
        self.seen.push(false);
        self.phase.push(true);
        self.order.add_var();
        if v > 0 {
            self.order.insert(v);
        }
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        v
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len() - self.tombstones + self.units.len()
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    pub fn learning(&self) -> bool {
        self.learning
    }

    fn value(&self, l: Lit) -> u8 {
        let a = self.assigns[l.var() as usize];
        if a == UNDEF {
            UNDEF
        } else {
            a ^ l.is_neg() as u8
        }
    }

/// Drops false constants and duplicates; `None` for tautologies.
    pub fn normalize(lits: &[Lit]) -> Option<Vec<Lit>> {
        let mut c: Vec<Lit> = Vec::with_capacity(lits.len());
        for &l in lits {
            if l == Lit::TRUE || c.contains(&!l) {
                return None;
            }
            if l == Lit::FALSE || c.contains(&l) {
                continue;
            }
            c.push(l);
        }
        Some(c)
    }

    /// Add a permanent clause. Must not be called during a check.
    pub fn add_clause(&mut self, lits: &[Lit]) {
        let Some(c) = Self::normalize(lits) else { return };
        match c.len() {
            0 => self.inconsistent = true,
            1 => self.units.push(c[0]),
            _ => {
                self.attach(Clause { lits: c, scope: None, learned: false, deleted: false });
            }
        }
    }

    /// Add a clause of at least two normalized literals that is retracted
    /// when popping below the current depth.
    pub fn add_scoped_clause(&mut self, lits: Vec<Lit>) {
        assert!(lits.len() >= 2);
        self.attach(Clause { lits, scope: Some(self.depth), learned: false, deleted: false });
    }

    fn attach(&mut self, c: Clause) -> u32 {
        let i = self.clauses.len() as u32;
        self.watches[c.lits[0].code()].push(i);
        self.watches[c.lits[1].code()].push(i);
        if c.learned {
            self.live_learned += 1;
        }
        if c.scope.is_some() {
            self.scoped.push(i);
        }
        self.clauses.push(c);
        i
    }

    /// Record the current push depth; learned clauses are tagged with it.
    pub fn set_depth(&mut self, depth: u32) {
        if depth < self.depth {
            self.drop_scopes_above(depth);
        }
        self.depth = depth;
        self.learn_scope = depth;
    }

    fn drop_scopes_above(&mut self, depth: u32) {
        {
            while let Some(&i) = self.scoped.last() {
                let c = &mut self.clauses[i as usize];
                if c.scope.is_some_and(|d| d <= depth) {
                    break;
                }
                self.scoped.pop();
                if !c.deleted {
                    c.deleted = true;
                    self.tombstones += 1;
                    if c.learned {
                        self.live_learned -= 1;
                    }
                }
            }
            self.learned_units.retain(|&(_, d)| d <= depth);
        }
    }

    fn drop_all_learned(&mut self) {
        for c in &mut self.clauses {
            if !c.deleted && c.learned {
                c.deleted = true;
                self.tombstones += 1;
            }
        }
        self.live_learned = 0;
    }

    fn compact(&mut self) {
        let old = std::mem::take(&mut self.clauses);
        self.scoped.clear();
        for w in &mut self.watches {
            w.clear();
        }
        self.tombstones = 0;
        self.live_learned = 0;
        for c in old.into_iter().filter(|c| !c.deleted) {
            self.attach(c);
        }
    }

    fn enqueue(&mut self, l: Lit, reason: u32) -> bool {
        match self.value(l) {
            1 => true,
            0 => false,
            _ => {
                let v = l.var() as usize;
                self.assigns[v] = (!l.is_neg()) as u8;
                self.level[v] = self.lims.len() as u32;
                self.reason[v] = reason;
                self.trail.push(l);
                true
            }
        }
    }

    fn backtrack_to(&mut self, lvl: usize) {
        if self.lims.len() <= lvl {
            return;
        }
        let start = self.lims[lvl];
        self.unassign_from(start);
        self.lims.truncate(lvl);
        self.flipped.truncate(lvl);
        self.qhead = start;
    }

    fn unassign_from(&mut self, start: usize) {
        for i in start..self.trail.len() {
            let l = self.trail[i];
            let v = l.var();
            self.assigns[v as usize] = UNDEF;
            self.reason[v as usize] = NO_REASON;
            self.cursor = self.cursor.min(v);
            if v > 0 {
                self.phase[v as usize] = !l.is_neg();
                self.order.insert(v);
            }
        }
        self.trail.truncate(start);
    }

    fn reset(&mut self) {
        self.backtrack_to(0);
        self.unassign_from(0);
        self.qhead = 0;
        self.cursor = 1;
    }

    /// Returns the index of a conflicting clause.
    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut keep = 0;
            let mut i = 0;
            let mut conflict = None;
            while i < ws.len() {
                let ci = ws[i];
                i += 1;
                let c = &mut self.clauses[ci as usize];
                if c.deleted {
                    continue;
                }
                if c.lits[0] == false_lit {
                    c.lits.swap(0, 1);
                }
                let first = c.lits[0];
                let a = self.assigns[first.var() as usize];
                if a != UNDEF && (a ^ first.is_neg() as u8) == 1 {
                    ws[keep] = ci;
                    keep += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..c.lits.len() {
                    let l = c.lits[k];
                    let a = self.assigns[l.var() as usize];
                    if a == UNDEF || (a ^ l.is_neg() as u8) == 1 {
                        c.lits.swap(1, k);
                        self.watches[l.code()].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[keep] = ci;
                keep += 1;
                if !self.enqueue(first, ci) {
                    conflict = Some(ci);
                    while i < ws.len() {
                        ws[keep] = ws[i];
                        keep += 1;
                        i += 1;
                    }
                }
            }
            ws.truncate(keep);
            self.watches[false_lit.code()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn decide(&mut self) -> Option<Lit> {
        if self.learning {
            while let Some(v) = self.order.pop() {
                if self.assigns[v as usize] == UNDEF {
                    return Some(Lit::new(v, !self.phase[v as usize]));
                }
            }
            return None;
        }
        while self.cursor < self.num_vars {
            if self.assigns[self.cursor as usize] == UNDEF {
                return Some(Lit::new(self.cursor, false));
            }
            self.cursor += 1;
        }
        None
    }

    /// First-UIP analysis; returns the learned clause (asserting literal
    /// first) and the level to jump back to.
    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, usize) {
        let cur = self.lims.len() as u32;
        let mut learned = vec![Lit::TRUE];
        let mut pending = 0;
        let mut idx = self.trail.len();
        let mut p: Option<Lit> = None;
        loop {
            let lits = self.clauses[confl as usize].lits.clone();
            for &q in &lits {
                if Some(q) == p {
                    continue;
                }
                let v = q.var() as usize;
                if self.seen[v] || self.level[v] == 0 {
                    continue;
                }
                self.seen[v] = true;
                self.order.bump(v as u32);
                if self.level[v] == cur {
                    pending += 1;
                } else {
                    learned.push(q);
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var() as usize] {
                    break;
                }
            }
            let l = self.trail[idx];
            self.seen[l.var() as usize] = false;
            pending -= 1;
            if pending == 0 {
                learned[0] = !l;
                break;
            }
            p = Some(l);
            confl = self.reason[l.var() as usize];
            debug_assert_ne!(confl, NO_REASON);
        }
        for l in &learned[1..] {
            self.seen[l.var() as usize] = false;
        }
        let mut back = 0;
        let mut best = 1;
        for (i, l) in learned.iter().enumerate().skip(1) {
            let lv = self.level[l.var() as usize] as usize;
            if lv > back {
                back = lv;
                best = i;
            }
        }
        if learned.len() > 1 {
            learned.swap(1, best);
        }
        (learned, back)
    }

    /// Resolve a conflict. Returns false when the search space is exhausted.
    fn resolve_conflict(&mut self, confl: u32) -> bool {
        self.stats.conflicts += 1;
        if self.lims.is_empty() {
            return false;
        }
        if self.learning {
            let (learned, back) = self.analyze(confl);
            self.order.decay();
            self.backtrack_to(back);
            self.stats.learned += 1;
            if learned.len() == 1 {
                self.learned_units.push((learned[0], self.learn_scope));
                return self.enqueue(learned[0], NO_REASON);
            } else {
                let uip = learned[0];
                let ci = self.attach(Clause { lits: learned, scope: Some(self.learn_scope), learned: true, deleted: false });
                self.enqueue(uip, ci);
            }
            return true;
        }
        // Chronological: flip the most recent decision not yet flipped.
        loop {
            let Some(&flipped) = self.flipped.last() else {
                return false;
            };
            let top = self.lims.len() - 1;
            let decision = self.trail[self.lims[top]];
            self.backtrack_to(top);
            if !flipped {
                self.lims.push(self.trail.len());
                self.flipped.push(true);
                self.enqueue(!decision, NO_REASON);
                return true;
            }
        }
    }

    /// Decide the clause set together with `assumptions` (root-level units
    /// for this check only). On SAT returns the full assignment.
    pub fn solve(&mut self, assumptions: &[Lit]) -> Option<Vec<bool>> {
        // Clauses learned under assumptions may depend on them, so they live
        // one level above the current depth and go away afterwards.
        if assumptions.is_empty() {
            return self.search(assumptions);
        }
        self.learn_scope = self.depth + 1;
        let r = self.search(assumptions);
        self.drop_scopes_above(self.depth);
        self.learn_scope = self.depth;
        r
    }

    fn search(&mut self, assumptions: &[Lit]) -> Option<Vec<bool>> {
        self.stats.checks += 1;
        self.reset();
        if self.live_learned > LEARNED_LIMIT {
            self.drop_all_learned();
        }
        if self.tombstones > 1024 && self.tombstones * 2 > self.clauses.len() {
            self.compact();
        }
        if self.inconsistent {
            return None;
        }
        self.enqueue(Lit::TRUE, NO_REASON);
        let roots: Vec<Lit> = self
            .units
            .iter()
            .copied()
            .chain(self.learned_units.iter().map(|&(l, _)| l))
            .chain(assumptions.iter().copied())
            .collect();
        for l in roots {
            if !self.enqueue(l, NO_REASON) {
                return None;
            }
        }
        let mut restarts = 0;
        let mut budget = 0;
        loop {
            if let Some(confl) = self.propagate() {
                if !self.resolve_conflict(confl) {
                    return None;
                }
                budget += 1;
                continue;
            }
            if self.learning && budget >= 100 * luby(restarts) {
                restarts += 1;
                budget = 0;
                self.backtrack_to(0);
                continue;
            }
            match self.decide() {
                None => {
                    let model = (0..self.num_vars as usize).map(|v| self.assigns[v] == 1).collect();
                    return Some(model);
                }
                Some(l) => {
                    self.stats.decisions += 1;
                    self.lims.push(self.trail.len());
                    self.flipped.push(false);
                    self.enqueue(l, NO_REASON);
                }
            }
        }
    }

    /// The stored clauses (without learned ones) plus `extra` units in DIMACS format. Variable
    /// `v` is written as `v + 1`.
    pub fn dimacs(&self, extra: &[Lit]) -> String {
        let mut body = String::new();
        let mut n = 0;
        let unit = |l: Lit, body: &mut String| {
            let _ = writeln!(body, "{} 0", l.dimacs());
        };
        unit(Lit::TRUE, &mut body);
        n += 1;
        for &l in self.units.iter().chain(extra) {
            unit(l, &mut body);
            n += 1;
        }
        for c in self.clauses.iter().filter(|c| !c.deleted && !c.learned) {
            for l in &c.lits {
                let _ = write!(body, "{} ", l.dimacs());
            }
            body.push_str("0\n");
            n += 1;
        }
        if self.inconsistent {
            body.push_str("0\n");
            n += 1;
        }
        format!("p cnf {} {}\n{}", self.num_vars, n, body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(v: i32) -> Lit {
        Lit::new(v.unsigned_abs(), v < 0)
    }

    fn solver(n: u32, clauses: &[&[i32]], learning: bool) -> Dpll {
        let mut s = Dpll::new(learning);
        for _ in 0..n {
            s.new_var();
        }
        for c in clauses {
            s.add_clause(&c.iter().map(|&v| lit(v)).collect::<Vec<_>>());
        }
        s
    }

    #[test]
    fn empty_is_sat() {
        assert!(Dpll::new(false).solve(&[]).is_some());
    }

    #[test]
    fn pigeonhole_three_into_two() {
        // p_ij: pigeon i in hole j, var 1 + 2i + j
        let v = |i: i32, j: i32| 1 + 2 * i + j;
        let mut cls: Vec<Vec<i32>> = (0..3).map(|i| vec![v(i, 0), v(i, 1)]).collect();
        for j in 0..2 {
            for a in 0..3 {
                for b in a + 1..3 {
                    cls.push(vec![-v(a, j), -v(b, j)]);
                }
            }
        }
        let refs: Vec<&[i32]> = cls.iter().map(|c| c.as_slice()).collect();
        for learning in [false, true] {
            assert!(solver(6, &refs, learning).solve(&[]).is_none());
        }
    }

    #[test]
    fn model_satisfies_clauses() {
        let cls: &[&[i32]] = &[&[1, 2], &[-1, 3], &[-3, -2], &[2, 3, 4]];
        for learning in [false, true] {
            let m = solver(4, cls, learning).solve(&[]).unwrap();
            for c in cls {
                assert!(c.iter().any(|&l| m[l.unsigned_abs() as usize] == (l > 0)));
            }
        }
    }

    #[test]
    fn assumptions_are_temporary() {
        let mut s = solver(2, &[&[1, 2]], false);
        assert!(s.solve(&[lit(-1), lit(-2)]).is_none());
        assert!(s.solve(&[lit(-1)]).is_some());
    }

    #[test]
    fn first_decision_is_lowest_var_true() {
        let mut s = solver(3, &[], false);
        assert_eq!(s.solve(&[]).unwrap(), vec![true, true, true, true]);
    }
}
