//! Bounded model checking of assertions.
//!
//! [`check_concurrent`] streams the violating-path disjuncts of a deferred
//! symbolic execution into batches, and a pool of workers solves each batch
//! with its own engine. [`enumerate_counterexamples`] instead encodes the
//! unrolled program as `C && !P` and enumerates its guard valuations, one
//! error class each; [`generate_tests`] does the same against a failure
//! appended at the end of the program.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::ops::ControlFlow;
use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use crossbeam_channel::bounded;
use thiserror::Error;

use crate::allsmt::{self, AllSmtError, Algorithm, Options};
use crate::formula::{encode, encode_property};
use crate::gcl::{unroll, version_name, GclError, SourceProgram};
use crate::sat::{Engine, Model, SatError, SolverConfig};
use crate::selfcomp::{count_inputs, input_domain, SelfcompError, DEFAULT_MAX_INPUT_BITS};
use crate::symexec::{execute_with, Mode, SymexecError, Verdict};
use crate::term::{Sort, Term};

pub const DEFAULT_BATCH: usize = 200;

#[derive(Debug, Error)]
pub enum BmcError {
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Gcl(#[from] GclError),
    #[error(transparent)]
    Symexec(#[from] SymexecError),
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error(transparent)]
    AllSmt(#[from] AllSmtError),
    #[error(transparent)]
    Selfcomp(#[from] SelfcompError),
    #[error("internal error: worker panicked on batch {batch}")]
    Internal { batch: usize },
}

#[derive(Clone, Debug)]
pub struct BmcConfig {
    /// Branch-decision bound of the symbolic execution.
    pub bound: u32,
    pub workers: usize,
    /// Disjuncts per batch.
    pub batch: usize,
    pub stop_on_first: bool,
    pub max_counterexamples: Option<usize>,
    pub solver: SolverConfig,
}

impl BmcConfig {
    pub fn new(bound: u32) -> BmcConfig {
        BmcConfig {
            bound,
            workers: 1,
            batch: DEFAULT_BATCH,
            stop_on_first: true,
            max_counterexamples: None,
            solver: SolverConfig::default(),
        }
    }

    fn validate(&self) -> Result<(), BmcError> {
        if self.workers == 0 {
            return Err(BmcError::Config("workers must be at least 1"));
        }
        if self.batch == 0 {
            return Err(BmcError::Config("batch size must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BmcVerdict {
    Safe,
    Violated,
}

impl BmcVerdict {
    pub fn name(self) -> &'static str {
        match self {
            BmcVerdict::Safe => "safe-up-to-bound",
            BmcVerdict::Violated => "violated",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    /// Input values by declared name.
    pub inputs: BTreeMap<String, u64>,
    /// Index of the satisfied disjunct in exploration order.
    pub disjunct: Option<usize>,
    /// Guard valuation of the error class.
    pub guards: Option<Vec<bool>>,
}

#[derive(Clone, Debug, Default)]
pub struct BmcStats {
    pub paths: u64,
    pub disjuncts: u64,
    pub batches: u64,
    pub batches_solved: u64,
    pub checks: u64,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct BmcResult {
    pub verdict: BmcVerdict,
    pub counterexamples: Vec<Counterexample>,
    pub stats: BmcStats,
}

/// Input values of `p` read from a model; inputs the formula never mentions
/// read as 0.
fn witness(p: &SourceProgram, lookup: impl Fn(&str) -> Option<u64>) -> BTreeMap<String, u64> {
    p.inputs().map(|d| (d.name.clone(), lookup(&version_name(&d.name, 0)).unwrap_or(0))).collect()
}

fn model_witness(p: &SourceProgram, m: &Model) -> BTreeMap<String, u64> {
    witness(p, |n| m.get(n).map(|v| v.bits()))
}

struct Batch {
    id: usize,
    first: usize,
    disjuncts: Vec<Term>,
}

struct Shared<'a> {
    p: &'a SourceProgram,
    cfg: &'a BmcConfig,
    stop: AtomicBool,
    violated: AtomicBool,
    solved: AtomicU64,
    checks: AtomicU64,
    found: Mutex<Vec<Counterexample>>,
    error: Mutex<Option<BmcError>>,
}

impl Shared<'_> {
    fn record(&self, c: Counterexample) {
        let mut found = self.found.lock().unwrap();
        found.push(c);
        if self.cfg.stop_on_first || self.cfg.max_counterexamples.is_some_and(|m| found.len() >= m) {
            self.stop.store(true, Ordering::SeqCst);
        }
    }

    fn fail(&self, e: BmcError) {
        self.error.lock().unwrap().get_or_insert(e);
        self.stop.store(true, Ordering::SeqCst);
    }

    fn solve(&self, engine: &mut Engine, b: &Batch) -> Result<(), BmcError> {
        self.checks.fetch_add(1, Ordering::Relaxed);
        if !engine.check_assuming(&[Term::or(b.disjuncts.clone())])?.is_sat() {
            return Ok(());
        }
        self.violated.store(true, Ordering::SeqCst);
        if self.cfg.stop_on_first {
            for (k, d) in b.disjuncts.iter().enumerate() {
                if engine.eval(d)?.as_bool() {
                    let inputs = model_witness(self.p, &engine.model()?);
                    self.record(Counterexample { inputs, disjunct: Some(b.first + k), guards: None });
                    break;
                }
            }
            return Ok(());
        }
        // One witness per satisfiable disjunct.
        for (k, d) in b.disjuncts.iter().enumerate() {
            if self.stop.load(Ordering::SeqCst) {
                break;
            }
            self.checks.fetch_add(1, Ordering::Relaxed);
            if engine.check_assuming(std::slice::from_ref(d))?.is_sat() {
                let inputs = model_witness(self.p, &engine.model()?);
                self.record(Counterexample { inputs, disjunct: Some(b.first + k), guards: None });
            }
        }
        Ok(())
    }
}

/// Check every assertion of `p` along all paths within `cfg.bound` branch
/// decisions.
pub fn check_concurrent(p: &SourceProgram, cfg: &BmcConfig) -> Result<BmcResult, BmcError> {
    cfg.validate()?;
    let start = Instant::now();
    let shared = Shared {
        p,
        cfg,
        stop: AtomicBool::new(false),
        violated: AtomicBool::new(false),
        solved: AtomicU64::new(0),
        checks: AtomicU64::new(0),
        found: Mutex::new(Vec::new()),
        error: Mutex::new(None),
    };
    let (tx, rx) = bounded::<Batch>(cfg.workers);
    let mut disjuncts = 0u64;
    let mut batches = 0usize;

    let exec = std::thread::scope(|scope| {
        for _ in 0..cfg.workers {
            let rx = rx.clone();
            let shared = &shared;
            scope.spawn(move || {
                let mut engine = Engine::with_config(cfg.solver.clone());
                for b in rx {
                    if shared.stop.load(Ordering::SeqCst) {
                        continue;
                    }
                    match panic::catch_unwind(AssertUnwindSafe(|| shared.solve(&mut engine, &b))) {
                        Ok(Ok(())) => {
                            shared.solved.fetch_add(1, Ordering::Relaxed);
                        }
                        Ok(Err(e)) => shared.fail(e),
                        Err(_) => {
                            shared.fail(BmcError::Internal { batch: b.id });
                            // The engine may be mid-update; start over.
                            engine = Engine::with_config(cfg.solver.clone());
                        }
                    }
                }
            });
        }
        drop(rx);

        let mut pending = Vec::with_capacity(cfg.batch);
        let mut first = 0usize;
        let mut dispatch = |pending: &mut Vec<Term>, first: &mut usize| {
            let disjuncts = std::mem::take(pending);
            let n = disjuncts.len();
            let ok = tx.send(Batch { id: batches, first: *first, disjuncts }).is_ok();
            batches += 1;
            *first += n;
            ok
        };
        let r = execute_with(p, cfg.bound, Mode::Deferred, cfg.solver.clone(), |s| {
            if shared.stop.load(Ordering::SeqCst) {
                return ControlFlow::Break(());
            }
            if s.verdict == Verdict::AssertViolated {
                if let Some(t) = s.assert_term {
                    disjuncts += 1;
                    pending.push(t);
                    if pending.len() == cfg.batch && !dispatch(&mut pending, &mut first) {
                        return ControlFlow::Break(());
                    }
                }
            }
            ControlFlow::Continue(())
        });
        if r.is_ok() && !pending.is_empty() && !shared.stop.load(Ordering::SeqCst) {
            dispatch(&mut pending, &mut first);
        }
        drop(tx);
        r
    });
    let exec = exec?;
    if let Some(e) = shared.error.into_inner().unwrap() {
        return Err(e);
    }
    let mut counterexamples = shared.found.into_inner().unwrap();
    counterexamples.sort_by_key(|c| c.disjunct);
    if let Some(m) = cfg.max_counterexamples {
        counterexamples.truncate(m);
    }
    let verdict = if shared.violated.load(Ordering::SeqCst) { BmcVerdict::Violated } else { BmcVerdict::Safe };
    let stats = BmcStats {
        paths: exec.paths,
        disjuncts,
        batches: batches as u64,
        batches_solved: shared.solved.load(Ordering::Relaxed),
        checks: shared.checks.load(Ordering::Relaxed),
        elapsed: start.elapsed(),
    };
    Ok(BmcResult { verdict, counterexamples, stats })
}

/// One counterexample per satisfiable valuation of the guards of `C && !P`,
/// with `p` unrolled `unwind` times.
pub fn enumerate_counterexamples(
    p: &SourceProgram,
    unwind: u32,
    limit: Option<usize>,
    solver: &SolverConfig,
) -> Result<BmcResult, BmcError> {
    let start = Instant::now();
    let ssa = unroll(p, unwind)?;
    let phi = Term::and2(encode(&ssa), Term::not(encode_property(&ssa)));
    let mut vars: HashMap<String, Sort> = phi.free_vars().into_iter().collect();
    let mut engine = Engine::with_config(solver.clone());
    engine.assert_term(&phi)?;
    let inputs: Vec<String> = ssa.inputs().into_iter().map(|(n, _)| n).filter(|n| vars.contains_key(n)).collect();

    let mut stats = BmcStats::default();
    let mut counterexamples = Vec::new();
    if ssa.guards.is_empty() {
        stats.checks = 1;
        if engine.check().is_sat() {
            let inputs = model_witness(p, &engine.model()?);
            counterexamples.push(Counterexample { inputs, disjunct: None, guards: Some(vec![]) });
        }
    } else {
        for g in &ssa.guards {
            vars.entry(g.clone()).or_insert(Sort::Bool);
        }
        let opts = Options { limit: limit.map(|l| l as u64), store_models: true, solver: solver.clone() };
        let r = allsmt::enumerate_in(&mut engine, &vars, Algorithm::Dfs, &ssa.guards, &inputs, &opts)?;
        stats.checks = r.stats.checks;
        for m in r.models {
            let inputs = witness(p, |n| m.relevant.get(n).map(|v| v.bits()));
            counterexamples.push(Counterexample { inputs, disjunct: None, guards: Some(m.important) });
        }
    }
    stats.elapsed = start.elapsed();
    let verdict = if counterexamples.is_empty() { BmcVerdict::Safe } else { BmcVerdict::Violated };
    Ok(BmcResult { verdict, counterexamples, stats })
}

/// Path-covering test inputs: the error classes of `p` with a failing
/// assertion appended, so every guard valuation reaching the end counts.
pub fn generate_tests(
    p: &SourceProgram,
    unwind: u32,
    limit: Option<usize>,
    solver: &SolverConfig,
) -> Result<Vec<BTreeMap<String, u64>>, BmcError> {
    let r = enumerate_counterexamples(&p.with_final_failure(), unwind, limit, solver)?;
    let mut seen = HashSet::new();
    Ok(r.counterexamples.into_iter().map(|c| c.inputs).filter(|i| seen.insert(i.clone())).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReliabilityReport {
    /// Inputs finishing without a failed assertion.
    pub t: u64,
    /// Inputs failing an assertion.
    pub f: u64,
    /// Inputs on paths cut by the bound.
    pub g: u64,
    pub reliability: f64,
}

/// Share of feasible inputs that finish normally, with inputs on paths cut
/// by the bound counted against it.
pub fn reliability(p: &SourceProgram, bound: u32, max_input_bits: Option<u32>, solver: &SolverConfig) -> Result<ReliabilityReport, BmcError> {
    let cap = max_input_bits.unwrap_or(DEFAULT_MAX_INPUT_BITS);
    let domain = input_domain(p);
    let mut paths = Vec::new();
    execute_with(p, bound, Mode::Classical, solver.clone(), |s| {
        paths.push(s);
        ControlFlow::Continue(())
    })?;
    let (mut t, mut f, mut g) = (0u64, 0u64, 0u64);
    for s in &paths {
        match s.verdict {
            Verdict::AssumeViolated => {}
            Verdict::BoundHit => g += count_inputs(&s.pc, &domain, cap, solver)?,
            Verdict::Completed => t += count_inputs(&s.pc, &domain, cap, solver)?,
            Verdict::AssertViolated => {
                let all = count_inputs(&s.pc, &domain, cap, solver)?;
                let bad = match &s.assert_term {
                    Some(a) => count_inputs(a, &domain, cap, solver)?,
                    None => 0,
                };
                f += bad;
                t += all - bad;
            }
        }
    }
    let total = t + f + g;
    let reliability = if total == 0 { 0.0 } else { t as f64 / total as f64 };
    Ok(ReliabilityReport { t, f, g, reliability })
}
