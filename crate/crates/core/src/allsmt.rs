//! Model enumeration and counting projected onto important Boolean
//! variables.

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::eval::Value;
use crate::sat::{Engine, Lit, SatError, SolverConfig};
use crate::term::{Sort, Term};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AllSmtError {
    #[error("no important variables given")]
    NoImportant,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("important variable `{0}` is not Bool")]
    NotBool(String),
    #[error(transparent)]
    Sat(#[from] SatError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Block each projection with a clause and re-check.
    BlockingClauses,
    /// Depth-first over the important variables with push/pop.
    Dfs,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::BlockingClauses => "bc",
            Algorithm::Dfs => "dfs",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ProjectedModel {
    /// Values of the important variables, in the order they were given.
    pub important: Vec<bool>,
    /// Relevant variable values from one witness model.
    pub relevant: BTreeMap<String, Value>,
}

impl ProjectedModel {
    pub fn important_map<'a>(&self, names: &'a [String]) -> BTreeMap<&'a str, bool> {
        names.iter().map(|n| n.as_str()).zip(self.important.iter().copied()).collect()
    }

    /// The important bits read as a number, first variable least significant.
    pub fn as_number(&self) -> u64 {
        self.important.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as u64) << i))
    }
}

#[derive(Clone, Debug, Default)]
pub struct EnumStats {
    pub checks: u64,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, Default)]
pub struct EnumerationResult {
    pub count: u64,
    /// Empty when models were not stored.
    pub models: Vec<ProjectedModel>,
    /// Enumeration stopped at the limit; `count` is then a lower bound.
    pub limit_reached: bool,
    pub stats: EnumStats,
}

#[derive(Clone, Debug)]
pub struct Options {
    pub limit: Option<u64>,
    pub store_models: bool,
    pub solver: SolverConfig,
}

impl Default for Options {
    fn default() -> Self {
        Options { limit: None, store_models: true, solver: SolverConfig::default() }
    }
}

struct Run<'a> {
    engine: &'a mut Engine,
    lits: Vec<Lit>,
    relevant: &'a [(String, Sort)],
    opts: &'a Options,
    result: EnumerationResult,
}

impl Run<'_> {
    fn check(&mut self) -> bool {
        self.result.stats.checks += 1;
        self.engine.check().is_sat()
    }

    fn full(&self) -> bool {
        self.opts.limit.is_some_and(|l| self.result.count >= l)
    }

    /// Record the projection of the current model.
    fn record(&mut self) -> Result<Vec<bool>, AllSmtError> {
        let important = self.lits.iter().map(|&l| self.engine.lit_value(l)).collect::<Result<Vec<_>, _>>()?;
        self.result.count += 1;
        if self.opts.store_models {
            let mut relevant = BTreeMap::new();
            for (n, s) in self.relevant {
                relevant.insert(n.clone(), self.engine.eval(&Term::var(n, *s))?);
            }
            self.result.models.push(ProjectedModel { important: important.clone(), relevant });
        }
        if self.full() {
            self.result.limit_reached = true;
        }
        Ok(important)
    }

    fn blocking(&mut self) -> Result<(), AllSmtError> {
        while !self.full() && self.check() {
            let values = self.record()?;
            let block: Vec<Lit> = self.lits.iter().zip(&values).map(|(&l, &v)| if v { !l } else { l }).collect();
            self.engine.assert_clause(&block);
        }
        Ok(())
    }

    fn dfs(&mut self, depth: usize) -> Result<(), AllSmtError> {
        if depth == self.lits.len() {
            self.record()?;
            return Ok(());
        }
        for value in [true, false] {
            if self.full() {
                return Ok(());
            }
            let l = if value { self.lits[depth] } else { !self.lits[depth] };
            self.engine.push();
            self.engine.assert_clause(&[l]);
            if self.check() {
                self.dfs(depth + 1)?;
            }
            self.engine.pop(1)?;
        }
        Ok(())
    }
}

fn signature(
    vars: &HashMap<String, Sort>,
    important: &[String],
    relevant: &[String],
) -> Result<Vec<(String, Sort)>, AllSmtError> {
    if important.is_empty() {
        return Err(AllSmtError::NoImportant);
    }
    for p in important {
        match vars.get(p) {
            None => return Err(AllSmtError::UnknownVariable(p.clone())),
            Some(Sort::Bool) => {}
            Some(_) => return Err(AllSmtError::NotBool(p.clone())),
        }
    }
    relevant
        .iter()
        .map(|r| vars.get(r).map(|s| (r.clone(), *s)).ok_or_else(|| AllSmtError::UnknownVariable(r.clone())))
        .collect()
}

/// Enumerate the projections of `phi`'s models onto `important`.
pub fn enumerate(
    alg: Algorithm,
    phi: &Term,
    important: &[String],
    relevant: &[String],
    opts: &Options,
) -> Result<EnumerationResult, AllSmtError> {
    let vars: HashMap<String, Sort> = phi.free_vars().into_iter().collect();
    signature(&vars, important, relevant)?;
    let mut engine = Engine::with_config(opts.solver.clone());
    engine.assert_term(phi)?;
    enumerate_in(&mut engine, &vars, alg, important, relevant, opts)
}

/// Enumerate over whatever `engine` currently asserts. `vars` gives the
/// sorts of the variables in scope. Blocking clauses are asserted inside a
/// push and removed again before returning.
pub fn enumerate_in(
    engine: &mut Engine,
    vars: &HashMap<String, Sort>,
    alg: Algorithm,
    important: &[String],
    relevant: &[String],
    opts: &Options,
) -> Result<EnumerationResult, AllSmtError> {
    let start = Instant::now();
    let rel = signature(vars, important, relevant)?;
    let lits = important.iter().map(|p| engine.literal(&Term::bool_var(p))).collect::<Result<Vec<_>, _>>()?;
    engine.push();
    let mut run = Run { engine, lits, relevant: &rel, opts, result: EnumerationResult::default() };
    let outcome = match alg {
        Algorithm::BlockingClauses => run.blocking(),
        Algorithm::Dfs => {
            if !run.full() && run.check() {
                run.dfs(0)
            } else {
                Ok(())
            }
        }
    };
    let mut result = run.result;
    engine.pop(1)?;
    outcome?;
    result.stats.elapsed = start.elapsed();
    Ok(result)
}

pub fn all_bc(
    phi: &Term,
    important: &[String],
    relevant: &[String],
    limit: Option<u64>,
) -> Result<EnumerationResult, AllSmtError> {
    enumerate(Algorithm::BlockingClauses, phi, important, relevant, &Options { limit, ..Options::default() })
}

pub fn all_dfs(
    phi: &Term,
    important: &[String],
    relevant: &[String],
    limit: Option<u64>,
) -> Result<EnumerationResult, AllSmtError> {
    enumerate(Algorithm::Dfs, phi, important, relevant, &Options { limit, ..Options::default() })
}

/// Number of projections, without storing models.
pub fn count_models(alg: Algorithm, phi: &Term, important: &[String]) -> Result<u64, AllSmtError> {
    let opts = Options { store_models: false, ..Options::default() };
    Ok(enumerate(alg, phi, important, &[], &opts)?.count)
}
