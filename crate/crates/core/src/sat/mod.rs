//! Incremental bit-vector satisfiability: terms are bit-blasted into a
//! [`dpll::Dpll`] clause database and decided under the current stack of
//! asserted roots.

pub mod bitblast;
pub mod dpll;
mod order;

use std::collections::BTreeMap;
use std::path::PathBuf;

use thiserror::Error;

use crate::eval::{eval_with, Value};
use crate::term::{Op, Sort, Term};
pub use bitblast::Blaster;
pub use dpll::{Lit, Stats};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("assertion must be Bool, got {0}")]
    NotBool(Sort),
    #[error("variable `{name}` used as {now} but first seen as {first}")]
    SortClash { name: String, first: Sort, now: Sort },
    #[error("cannot pop {requested} levels at depth {depth}")]
    StackUnderflow { requested: u32, depth: u32 },
    #[error("no model available")]
    NoModel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat,
    Unsat,
}

impl SatResult {
    pub fn is_sat(self) -> bool {
        self == SatResult::Sat
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Conflict-driven learning with backjumping, activity-ordered decisions
    /// and restarts. Off, the search is plain chronological DPLL deciding the
    /// lowest unassigned variable, true first.
    pub learning: bool,
    /// Write the CNF of every check to `<dir>/check-<n>.cnf`.
    pub dimacs_dir: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { learning: true, dimacs_dir: None }
    }
}

impl SolverConfig {
    pub fn plain() -> SolverConfig {
        SolverConfig { learning: false, dimacs_dir: None }
    }
}

/// Values of every variable the engine has seen, from the last SAT check.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Model {
    pub values: BTreeMap<String, Value>,
}

impl Model {
    pub fn get(&self, name: &str) -> Option<Value> {
        self.values.get(name).copied()
    }
}

#[derive(Clone, Debug)]
pub struct Engine {
    blaster: Blaster,
    roots: Vec<Lit>,
    marks: Vec<usize>,
    model: Option<Vec<bool>>,
    config: SolverConfig,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new()
    }
}

impl Engine {
    pub fn new() -> Engine {
        Engine::with_config(SolverConfig::default())
    }

    pub fn with_config(config: SolverConfig) -> Engine {
        Engine { blaster: Blaster::new(config.learning), roots: Vec::new(), marks: Vec::new(), model: None, config }
    }

    /// Engine with every term of `terms` asserted.
    pub fn from_terms(terms: &[Term], config: SolverConfig) -> Result<Engine, SatError> {
        let mut e = Engine::with_config(config);
        for t in terms {
            e.assert_term(t)?;
        }
        Ok(e)
    }

    pub fn depth(&self) -> u32 {
        self.marks.len() as u32
    }

    pub fn stats(&self) -> Stats {
        self.blaster.sat.stats()
    }

    pub fn num_vars(&self) -> u32 {
        self.blaster.sat.num_vars()
    }

    pub fn num_clauses(&self) -> usize {
        self.blaster.sat.num_clauses() + self.roots.len()
    }

    /// Literal standing for a Bool term; encodes it if needed. The defining
    /// clauses are permanent, so the literal stays valid across pops.
    pub fn literal(&mut self, t: &Term) -> Result<Lit, SatError> {
        self.blaster.lit(t)
    }

    /// Assert a Bool term at the current depth. Top-level conjunctions are
    /// split and top-level disjunctions become clauses directly, so blocking
    /// clauses introduce no new variables.
    pub fn assert_term(&mut self, t: &Term) -> Result<(), SatError> {
        if !t.is_bool() {
            return Err(SatError::NotBool(t.sort()));
        }
        self.model = None;
        let mut stack = vec![t.clone()];
        while let Some(c) = stack.pop() {
            let args = c.args();
            let lits = match c.op() {
                Some(Op::And) => {
                    stack.extend(args.iter().rev().cloned());
                    continue;
                }
                Some(Op::Or) => args.iter().map(|a| self.blaster.lit(a)).collect::<Result<Vec<_>, _>>()?,
                Some(Op::Implies) => vec![!self.blaster.lit(&args[0])?, self.blaster.lit(&args[1])?],
                Some(Op::Not) if args[0].op() == Some(Op::And) => {
                    args[0].args().iter().map(|a| self.blaster.lit(a).map(|l| !l)).collect::<Result<Vec<_>, _>>()?
                }
                _ => vec![self.blaster.lit(&c)?],
            };
            self.assert_clause(&lits);
        }
        Ok(())
    }

    /// Assert the disjunction of `lits` at the current depth.
    pub fn assert_clause(&mut self, lits: &[Lit]) {
        self.model = None;
        let Some(c) = dpll::Dpll::normalize(lits) else { return };
        match c.len() {
            0 => self.roots.push(Lit::FALSE),
            1 => self.roots.push(c[0]),
            _ => self.blaster.sat.add_scoped_clause(c),
        }
    }

    /// Literals fixing variable `var` to `value`, bit by bit. Cheaper than
    /// assuming an equality with a constant, which creates a gate.
    pub fn value_literals(&mut self, var: &Term, value: Value) -> Result<Vec<Lit>, SatError> {
        let bits = self.blaster.bits(var)?;
        let v = value.bits();
        Ok(bits.iter().enumerate().map(|(i, &l)| if v >> i & 1 == 1 { l } else { !l }).collect())
    }

    pub fn push(&mut self) {
        self.model = None;
        self.marks.push(self.roots.len());
        self.blaster.sat.set_depth(self.depth());
    }

    pub fn pop(&mut self, n: u32) -> Result<(), SatError> {
        if n > self.depth() {
            return Err(SatError::StackUnderflow { requested: n, depth: self.depth() });
        }
        if n == 0 {
            return Ok(());
        }
        self.model = None;
        let keep = self.marks.len() - n as usize;
        self.roots.truncate(self.marks[keep]);
        self.marks.truncate(keep);
        self.blaster.sat.set_depth(self.depth());
        Ok(())
    }

    pub fn check(&mut self) -> SatResult {
        self.check_lits(&[])
    }

    /// Check with extra Bool terms assumed for this call only.
    pub fn check_assuming(&mut self, assumptions: &[Term]) -> Result<SatResult, SatError> {
        let mut lits = Vec::with_capacity(assumptions.len());
        for t in assumptions {
            lits.push(self.blaster.lit(t)?);
        }
        Ok(self.check_lits(&lits))
    }

    pub fn check_lits(&mut self, extra: &[Lit]) -> SatResult {
        let mut roots = self.roots.clone();
        roots.extend_from_slice(extra);
        if let Some(dir) = &self.config.dimacs_dir {
            let n = self.blaster.sat.stats().checks;
            let _ = std::fs::create_dir_all(dir);
            let _ = std::fs::write(dir.join(format!("check-{n}.cnf")), self.blaster.sat.dimacs(&roots));
        }
        self.model = self.blaster.sat.solve(&roots);
        if self.model.is_some() {
            SatResult::Sat
        } else {
            SatResult::Unsat
        }
    }

    /// The current clause set with asserted roots as units, in DIMACS form.
    pub fn dimacs(&self) -> String {
        self.blaster.sat.dimacs(&self.roots)
    }

    fn var_value(&self, m: &[bool], name: &str) -> Option<Value> {
        let (sort, bits) = self.blaster.var_bits(name)?;
        let v = bits.iter().enumerate().fold(0u64, |acc, (i, l)| acc | ((m[l.var() as usize] ^ l.is_neg()) as u64) << i);
        Some(match sort {
            Sort::Bool => Value::Bool(v == 1),
            Sort::BitVec(w) => Value::bv(v, w),
        })
    }

    pub fn model(&self) -> Result<Model, SatError> {
        let m = self.model.as_ref().ok_or(SatError::NoModel)?;
        let values = self
            .blaster
            .variables()
            .map(|(n, _, _)| (n.to_string(), self.var_value(m, n).unwrap()))
            .collect();
        Ok(Model { values })
    }

    /// Value of a literal in the last model.
    pub fn lit_value(&self, l: Lit) -> Result<bool, SatError> {
        let m = self.model.as_ref().ok_or(SatError::NoModel)?;
        Ok(m[l.var() as usize] ^ l.is_neg())
    }

    /// Interpret `t` in the last model. Variables the engine never saw are
    /// unconstrained and read as zero.
    pub fn eval(&self, t: &Term) -> Result<Value, SatError> {
        let m = self.model.as_ref().ok_or(SatError::NoModel)?;
        let v = eval_with(t, &mut |name, sort| {
            Some(self.var_value(m, name).filter(|v| v.sort() == sort).unwrap_or(match sort {
                Sort::Bool => Value::Bool(false),
                Sort::BitVec(w) => Value::bv(0, w),
            }))
        })
        .expect("total environment");
        Ok(v)
    }
}
