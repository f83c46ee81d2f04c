//! Channel capacity of a program: log2 of the number of feasible outputs.
//!
//! Two routes count the same N. The formula route hands the instrumented
//! formula to [`crate::allsmt`]; the symbolic-counting route walks the output
//! bits itself (LSB first, 1 before 0), consulting a per-bit feasibility
//! cache before every descent.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::allsmt::{self, AllSmtError, Algorithm, Options};
use crate::formula::{encode, instrument, FormulaError, InstrumentedFormula};
use crate::gcl::{unroll, GclError, SourceProgram};
use crate::sat::{Engine, Lit, SatError, SolverConfig};

#[derive(Debug, Error)]
pub enum QifError {
    #[error(transparent)]
    Gcl(#[from] GclError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    AllSmt(#[from] AllSmtError),
    #[error(transparent)]
    Sat(#[from] SatError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Route {
    Formula,
    SymCount,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Formula => "formula",
            Route::SymCount => "symcount",
        }
    }
}

#[derive(Clone, Debug)]
pub struct QifQuery {
    pub program: SourceProgram,
    /// Loop unwinding bound.
    pub bound: u32,
    /// Stop once 2^k outputs are seen.
    pub policy: Option<u32>,
    pub route: Route,
    /// Enumeration algorithm of the formula route.
    pub algorithm: Algorithm,
    /// Keep the concrete output values.
    pub collect_outputs: bool,
    pub solver: SolverConfig,
}

impl QifQuery {
    pub fn new(program: SourceProgram, bound: u32) -> QifQuery {
        QifQuery {
            program,
            bound,
            policy: None,
            route: Route::Formula,
            algorithm: Algorithm::Dfs,
            collect_outputs: false,
            solver: SolverConfig::default(),
        }
    }

    fn limit(&self) -> Option<u64> {
        self.policy.and_then(|k| 1u64.checked_shl(k))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QifVerdict {
    Exact,
    InsecureAtPolicy,
}

impl QifVerdict {
    pub fn name(self) -> &'static str {
        match self {
            QifVerdict::Exact => "exact",
            QifVerdict::InsecureAtPolicy => "insecureAtPolicy",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Timings {
    pub encode: Duration,
    pub count: Duration,
}

#[derive(Clone, Debug)]
pub struct QifReport {
    pub n: u64,
    pub capacity_bits: f64,
    pub verdict: QifVerdict,
    /// Output values, ascending, when collected.
    pub outputs: Option<Vec<u64>>,
    pub checks: u64,
    pub timings: Timings,
    pub warnings: Vec<String>,
}

impl QifReport {
    fn new(n: u64, verdict: QifVerdict, outputs: Option<Vec<u64>>, checks: u64, timings: Timings) -> QifReport {
        let mut warnings = Vec::new();
        if n == 0 {
            warnings.push("no feasible path within the bound; capacity reported as 0".to_string());
        }
        QifReport { n, capacity_bits: log2_count(n), verdict, outputs, checks, timings, warnings }
    }
}

/// log2 of a count, with log2(0) taken as 0.
pub fn log2_count(n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        (n as f64).log2()
    }
}

/// Instrumented formula of `p` unrolled `bound` times.
pub fn program_formula(p: &SourceProgram, bound: u32) -> Result<InstrumentedFormula, QifError> {
    let ssa = unroll(p, bound)?;
    Ok(instrument(&encode(&ssa), &ssa.output, &[])?)
}

pub fn capacity(q: &QifQuery) -> Result<QifReport, QifError> {
    match q.route {
        Route::Formula => capacity_formula(q),
        Route::SymCount => sym_count(q),
    }
}

pub fn capacity_formula(q: &QifQuery) -> Result<QifReport, QifError> {
    let t0 = Instant::now();
    let inst = program_formula(&q.program, q.bound)?;
    let encode_time = t0.elapsed();
    let opts = Options { limit: q.limit(), store_models: q.collect_outputs, solver: q.solver.clone() };
    let r = allsmt::enumerate(q.algorithm, &inst.formula(), &inst.important, &[], &opts)?;
    let outputs = q.collect_outputs.then(|| {
        let mut v: Vec<u64> = r.models.iter().map(|m| inst.output_value(&m.important)).collect();
        v.sort_unstable();
        v
    });
    let verdict = if r.limit_reached { QifVerdict::InsecureAtPolicy } else { QifVerdict::Exact };
    let timings = Timings { encode: encode_time, count: r.stats.elapsed };
    Ok(QifReport::new(r.count, verdict, outputs, r.stats.checks, timings))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BitFeasibility {
    pub pos: bool,
    pub neg: bool,
}

fn bit_feasibility(engine: &mut Engine, lits: &[Lit]) -> Vec<BitFeasibility> {
    lits.iter()
        .map(|&l| BitFeasibility { pos: engine.check_lits(&[l]).is_sat(), neg: engine.check_lits(&[!l]).is_sat() })
        .collect()
}

/// Per-bit feasibility of `p_i` and `!p_i` against the instrumented formula.
pub fn early_pruning(inst: &InstrumentedFormula, solver: SolverConfig) -> Result<Vec<BitFeasibility>, QifError> {
    let mut engine = Engine::with_config(solver);
    engine.assert_term(&inst.formula())?;
    let lits = inst.important_terms().iter().map(|t| engine.literal(t)).collect::<Result<Vec<_>, _>>()?;
    Ok(bit_feasibility(&mut engine, &lits))
}

/// One feasibility query of the symbolic count: the bit prefix tried
/// (LSB first) and whether it was satisfiable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub prefix: Vec<bool>,
    pub sat: bool,
}

#[derive(Clone, Debug, Default)]
pub struct SymCountStats {
    pub checks: u64,
    /// Descents skipped because the cache marked the literal infeasible.
    pub cache_pruned: u64,
    pub trace: Option<Vec<Step>>,
}

struct Counter<'a> {
    engine: Engine,
    lits: Vec<Lit>,
    cache: Vec<BitFeasibility>,
    limit: Option<u64>,
    n: u64,
    prefix: Vec<bool>,
    outputs: Option<Vec<u64>>,
    stats: SymCountStats,
    inst: &'a InstrumentedFormula,
}

impl Counter<'_> {
    fn full(&self) -> bool {
        self.limit.is_some_and(|l| self.n >= l)
    }

    fn descend(&mut self) -> Result<(), SatError> {
        let i = self.prefix.len();
        if i == self.lits.len() {
            self.n += 1;
            if let Some(o) = &mut self.outputs {
                o.push(self.inst.output_value(&self.prefix));
            }
            return Ok(());
        }
        for value in [true, false] {
            if self.full() {
                return Ok(());
            }
            let allowed = if value { self.cache[i].pos } else { self.cache[i].neg };
            if !allowed {
                self.stats.cache_pruned += 1;
                continue;
            }
            let l = if value { self.lits[i] } else { !self.lits[i] };
            self.prefix.push(value);
            self.engine.push();
            self.engine.assert_clause(&[l]);
            self.stats.checks += 1;
            let sat = self.engine.check().is_sat();
            if let Some(t) = &mut self.stats.trace {
                t.push(Step { prefix: self.prefix.clone(), sat });
            }
            if sat {
                self.descend()?;
            }
            self.engine.pop(1)?;
            self.prefix.pop();
        }
        Ok(())
    }
}

pub fn sym_count(q: &QifQuery) -> Result<QifReport, QifError> {
    sym_count_traced(q, false).map(|(r, _)| r)
}

/// The symbolic count, optionally recording every feasibility query.
pub fn sym_count_traced(q: &QifQuery, trace: bool) -> Result<(QifReport, SymCountStats), QifError> {
    let t0 = Instant::now();
    let inst = program_formula(&q.program, q.bound)?;
    let encode_time = t0.elapsed();
    let t1 = Instant::now();
    let mut engine = Engine::with_config(q.solver.clone());
    engine.assert_term(&inst.formula())?;
    let lits = inst.important_terms().iter().map(|t| engine.literal(t)).collect::<Result<Vec<_>, _>>()?;
    let mut stats = SymCountStats { trace: trace.then(Vec::new), ..Default::default() };
    let feasible = engine.check().is_sat();
    stats.checks += 1;
    let cache = if feasible {
        stats.checks += 2 * lits.len() as u64;
        bit_feasibility(&mut engine, &lits)
    } else {
        Vec::new()
    };
    let mut c = Counter {
        engine,
        lits,
        cache,
        limit: q.limit(),
        n: 0,
        prefix: Vec::new(),
        outputs: q.collect_outputs.then(Vec::new),
        stats,
        inst: &inst,
    };
    if feasible && !c.full() {
        c.descend()?;
    }
    let verdict = if c.full() { QifVerdict::InsecureAtPolicy } else { QifVerdict::Exact };
    let mut outputs = c.outputs;
    if let Some(o) = &mut outputs {
        o.sort_unstable();
    }
    let timings = Timings { encode: encode_time, count: t1.elapsed() };
    let report = QifReport::new(c.n, verdict, outputs, c.stats.checks, timings);
    Ok((report, c.stats))
}
