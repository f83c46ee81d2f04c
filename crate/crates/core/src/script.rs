//! Executes SMT-LIB scripts against the incremental engine, including the
//! `check-allsat` extension.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::allsmt::{enumerate_in, AllSmtError, Algorithm, EnumerationResult, Options};
use crate::eval::Value;
use crate::sat::{Engine, SatError, SatResult, SolverConfig};
use crate::smtlib::{bv_literal, symbol, Command, Script};
use crate::term::{Sort, Term};

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error(transparent)]
    AllSmt(#[from] AllSmtError),
    #[error("(get-model) without a preceding sat answer")]
    NoModel,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub algorithm: Algorithm,
    pub limit: Option<u64>,
    pub solver: SolverConfig,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { algorithm: Algorithm::Dfs, limit: None, solver: SolverConfig::default() }
    }
}

/// What a script run printed, plus the structured answers.
#[derive(Clone, Debug, Default)]
pub struct Transcript {
    pub output: String,
    pub check_sat: Vec<SatResult>,
    pub all_sat: Vec<EnumerationResult>,
}

fn value_literal(v: Value) -> String {
    match v {
        Value::Bool(b) => b.to_string(),
        Value::Bv { bits, width } => bv_literal(bits, width),
    }
}

fn define(out: &mut String, name: &str, sort: Sort, v: Value) {
    let _ = write!(out, "(define-fun {} () {} {})", symbol(name), sort, value_literal(v));
}

pub fn run(script: &Script, opts: &RunOptions) -> Result<Transcript, ScriptError> {
    let mut engine = Engine::with_config(opts.solver.clone());
    // Declarations are global, as with :global-declarations.
    let mut decls: Vec<(String, Sort)> = Vec::new();
    let mut sorts: HashMap<String, Sort> = HashMap::new();
    let mut relevant: Vec<String> = Vec::new();
    let mut t = Transcript::default();
    let mut have_model = false;
    for c in &script.commands {
        match c {
            Command::SetLogic(_) | Command::SetOption(_) => {}
            Command::DeclareFun(n, s) => {
                decls.push((n.clone(), *s));
                sorts.insert(n.clone(), *s);
            }
            Command::Assert(f) => {
                engine.assert_term(f)?;
                have_model = false;
            }
            Command::Push(n) => {
                for _ in 0..*n {
                    engine.push();
                }
                have_model = false;
            }
            Command::Pop(n) => {
                engine.pop(*n)?;
                have_model = false;
            }
            Command::CheckSat => {
                let r = engine.check();
                t.output.push_str(if r.is_sat() { "sat\n" } else { "unsat\n" });
                t.check_sat.push(r);
                have_model = r.is_sat();
            }
            Command::GetModel => {
                if !have_model {
                    return Err(ScriptError::NoModel);
                }
                t.output.push_str("(model\n");
                for (n, s) in &decls {
                    t.output.push_str("  ");
                    define(&mut t.output, n, *s, engine.eval(&Term::var(n, *s))?);
                    t.output.push('\n');
                }
                t.output.push_str(")\n");
            }
            Command::AllSatRelevant(vs) => relevant = vs.clone(),
            Command::CheckAllSat(important) => {
                let eopts = Options { limit: opts.limit, store_models: true, solver: opts.solver.clone() };
                let r = enumerate_in(&mut engine, &sorts, opts.algorithm, important, &relevant, &eopts)?;
                for m in &r.models {
                    t.output.push_str("(model");
                    for (p, &b) in important.iter().zip(&m.important) {
                        t.output.push(' ');
                        define(&mut t.output, p, Sort::Bool, Value::Bool(b));
                    }
                    for (n, v) in &m.relevant {
                        t.output.push(' ');
                        define(&mut t.output, n, sorts[n], *v);
                    }
                    t.output.push_str(")\n");
                }
                let _ = writeln!(t.output, "(models {})", r.count);
                t.all_sat.push(r);
                have_model = false;
            }
            Command::Exit => break,
        }
    }
    Ok(t)
}
