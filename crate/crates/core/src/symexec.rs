//! Bounded symbolic execution of source programs.
//!
//! Inputs are the version-0 symbols (`H_0`, `x_0`, ...), locals and the
//! output start at 0. The bound counts branch decisions: every `if` whose
//! condition does not fold to a constant, and every `while` test.

use std::collections::HashMap;
use std::fmt;
use std::ops::ControlFlow;

use thiserror::Error;

use crate::gcl::{translate, version_name, Expr, GclError, SourceProgram, Stmt};
use crate::sat::{Engine, SatError, SolverConfig};
use crate::simplify;
use crate::term::Term;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Check the path condition at every branch and prune infeasible sides.
    Classical,
    /// No solving: every side of every branch is explored.
    Deferred,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Completed,
    AssumeViolated,
    AssertViolated,
    BoundHit,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Completed => "completed",
            Verdict::AssumeViolated => "assumeViolated",
            Verdict::AssertViolated => "assertViolated",
            Verdict::BoundHit => "boundHit",
        }
    }

    /// The path ran to the end of the program.
    pub fn finished(self) -> bool {
        matches!(self, Verdict::Completed | Verdict::AssertViolated)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathSummary {
    pub pc: Term,
    /// Output term at the end of the path (or where it stopped).
    pub out: Term,
    pub verdict: Verdict,
    /// `pc && !(c_1 && ... && c_n)` over the asserts met on the path, for
    /// `AssertViolated` paths.
    pub assert_term: Option<Term>,
    /// Branch decisions taken (true = then side / loop entered).
    pub decisions: Vec<bool>,
}

#[derive(Debug, Error)]
pub enum SymexecError {
    #[error(transparent)]
    Gcl(#[from] GclError),
    #[error(transparent)]
    Sat(#[from] SatError),
}

#[derive(Clone, Debug, Default)]
pub struct ExecStats {
    pub paths: u64,
    pub checks: u64,
    pub pruned: u64,
    /// The sink asked to stop before exploration finished.
    pub stopped: bool,
}

enum Frame<'a> {
    Block(&'a [Stmt]),
    Loop(&'a Stmt),
}

#[derive(Clone)]
struct State {
    pc: Vec<Term>,
    sigma: HashMap<String, Term>,
    decisions: Vec<bool>,
    asserts: Vec<Term>,
}

struct Exec<'a, F> {
    prog: &'a SourceProgram,
    bound: u32,
    engine: Option<Engine>,
    sink: F,
    stats: ExecStats,
}

impl<'a, F: FnMut(PathSummary) -> ControlFlow<()>> Exec<'a, F> {
    fn expr(&self, st: &State, e: &Expr) -> Term {
        translate(e, &|n| st.sigma[n].clone(), true)
    }

    fn emit(&mut self, st: &State, verdict: Verdict) -> ControlFlow<()> {
        let pc = simplify::and(st.pc.clone());
        let mut verdict = verdict;
        let mut assert_term = None;
        if verdict == Verdict::Completed && !st.asserts.is_empty() {
            let ok = simplify::and(st.asserts.clone());
            if ok.as_bool() != Some(true) {
                verdict = Verdict::AssertViolated;
                assert_term = Some(simplify::and(vec![pc.clone(), simplify::not(ok)]));
            }
        }
        let out = st.sigma[&self.prog.output().name].clone();
        self.stats.paths += 1;
        (self.sink)(PathSummary { pc, out, verdict, assert_term, decisions: st.decisions.clone() })
    }

    /// Feasibility of the current engine state (always true in deferred mode).
    fn feasible(&mut self) -> bool {
        match &mut self.engine {
            Some(e) => {
                self.stats.checks += 1;
                e.check().is_sat()
            }
            None => true,
        }
    }

    fn push(&mut self, c: &Term) -> Result<(), SatError> {
        if let Some(e) = &mut self.engine {
            e.push();
            e.assert_term(c)?;
        }
        Ok(())
    }

    fn pop(&mut self, n: u32) -> Result<(), SatError> {
        match &mut self.engine {
            Some(e) if n > 0 => e.pop(n),
            _ => Ok(()),
        }
    }

    /// Explore both sides of a branch on `c`, then-side first.
    fn branch(&mut self, st: State, c: Term, then_k: Vec<Frame<'a>>, else_k: Vec<Frame<'a>>) -> Result<ControlFlow<()>, SatError> {
        if st.decisions.len() as u32 >= self.bound {
            return Ok(self.emit(&st, Verdict::BoundHit));
        }
        for (side, kont) in [(true, then_k), (false, else_k)] {
            let lit = if side { c.clone() } else { simplify::not(c.clone()) };
            if lit.as_bool() == Some(false) {
                continue;
            }
            self.push(&lit)?;
            let flow = if self.feasible() {
                let mut next = st.clone();
                next.decisions.push(side);
                if lit.as_bool() != Some(true) {
                    next.pc.push(lit);
                }
                self.run(next, kont)?
            } else {
                self.stats.pruned += 1;
                ControlFlow::Continue(())
            };
            self.pop(1)?;
            if flow.is_break() {
                return Ok(flow);
            }
        }
        Ok(ControlFlow::Continue(()))
    }

    fn run(&mut self, mut st: State, mut kont: Vec<Frame<'a>>) -> Result<ControlFlow<()>, SatError> {
        let mut pushed = 0;
        let flow = loop {
            let Some(frame) = kont.pop() else {
                break self.emit(&st, Verdict::Completed);
            };
            let s = match frame {
                Frame::Block([]) => continue,
                Frame::Block([s, rest @ ..]) => {
                    kont.push(Frame::Block(rest));
                    s
                }
                Frame::Loop(s) => s,
            };
            match s {
                Stmt::Assign { var, value, .. } => {
                    let v = self.expr(&st, value);
                    st.sigma.insert(var.clone(), v);
                }
                Stmt::Assume { cond, .. } => {
                    let c = self.expr(&st, cond);
                    if c.as_bool() == Some(true) {
                        continue;
                    }
                    if c.as_bool() == Some(false) {
                        st.pc.push(c);
                        break self.emit(&st, Verdict::AssumeViolated);
                    }
                    self.push(&c)?;
                    pushed += 1;
                    st.pc.push(c);
                    if !self.feasible() {
                        break self.emit(&st, Verdict::AssumeViolated);
                    }
                }
                Stmt::Assert { cond, .. } => {
                    let c = self.expr(&st, cond);
                    if c.as_bool() != Some(true) {
                        st.asserts.push(c);
                    }
                }
                Stmt::If { cond, then_branch, else_branch, .. } => {
                    let c = self.expr(&st, cond);
                    match c.as_bool() {
                        Some(true) => kont.push(Frame::Block(then_branch)),
                        Some(false) => kont.push(Frame::Block(else_branch)),
                        None => {
                            let mut then_k: Vec<Frame<'a>> = kont.iter().map(Frame::copy).collect();
                            then_k.push(Frame::Block(then_branch));
                            kont.push(Frame::Block(else_branch));
                            break self.branch(st, c, then_k, kont)?;
                        }
                    }
                }
                Stmt::While { cond, body, .. } => {
                    let c = self.expr(&st, cond);
                    let mut then_k: Vec<Frame<'a>> = kont.iter().map(Frame::copy).collect();
                    then_k.push(Frame::Loop(s));
                    then_k.push(Frame::Block(body));
                    break self.branch(st, c, then_k, kont)?;
                }
            }
        };
        self.pop(pushed)?;
        Ok(flow)
    }
}

impl Frame<'_> {
    fn copy(&self) -> Self {
        match *self {
            Frame::Block(b) => Frame::Block(b),
            Frame::Loop(s) => Frame::Loop(s),
        }
    }
}

fn initial_state(p: &SourceProgram) -> State {
    let sigma = p
        .decls
        .iter()
        .map(|d| {
            let t = if d.kind.is_input() {
                Term::bv_var(&version_name(&d.name, 0), d.width)
            } else {
                Term::bv_const(0, d.width)
            };
            (d.name.clone(), t)
        })
        .collect();
    State { pc: Vec::new(), sigma, decisions: Vec::new(), asserts: Vec::new() }
}

/// Explore `p`, handing each summary to `sink` as soon as it is complete.
/// The sink can stop the exploration by returning `Break`.
pub fn execute_with<F>(
    p: &SourceProgram,
    bound: u32,
    mode: Mode,
    solver: SolverConfig,
    sink: F,
) -> Result<ExecStats, SymexecError>
where
    F: FnMut(PathSummary) -> ControlFlow<()>,
{
    if bound == 0 {
        return Err(GclError::Bound.into());
    }
    let engine = match mode {
        Mode::Classical => Some(Engine::with_config(solver)),
        Mode::Deferred => None,
    };
    let mut ex = Exec { prog: p, bound, engine, sink, stats: ExecStats::default() };
    ex.stats.stopped = ex.run(initial_state(p), vec![Frame::Block(&p.body)])?.is_break();
    Ok(ex.stats)
}

pub fn execute(p: &SourceProgram, bound: u32, mode: Mode) -> Result<Vec<PathSummary>, SymexecError> {
    let mut out = Vec::new();
    execute_with(p, bound, mode, SolverConfig::default(), |s| {
        out.push(s);
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// One disjunct per potentially violating path, in exploration order. An
/// empty list means no path can violate an assertion within the bound.
pub fn bmc_formula(summaries: &[PathSummary]) -> Vec<Term> {
    summaries
        .iter()
        .filter(|s| s.verdict == Verdict::AssertViolated)
        .filter_map(|s| s.assert_term.clone())
        .collect()
}
