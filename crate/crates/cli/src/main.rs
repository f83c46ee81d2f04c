mod corpus;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use leakcount::allsmt::Algorithm;
use leakcount::bmc::{check_concurrent, enumerate_counterexamples, generate_tests, reliability, BmcConfig, BmcError};
use leakcount::gcl::{GclError, SourceProgram};
use leakcount::qif::{capacity, QifError, QifQuery, Route};
use leakcount::sat::{SatResult, SolverConfig};
use leakcount::script::{self, RunOptions};
use leakcount::selfcomp::{label_paths, LabelOptions, SelfcompError, DEFAULT_MAX_INPUT_BITS};
use leakcount::smtlib::{parse_script, SmtError};
use leakcount::symexec::{execute, Mode, PathSummary, SymexecError};
use serde::Serialize;

use corpus::MissingExpectation;
use report::{BmcReport, CapacityReport, LabelReport, PathReport, ScriptReport};

#[derive(Parser)]
#[command(name = "leakcount", version, about = "Channel-capacity analysis and bounded model checking for GCL programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Formula,
    Symcount,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgArg {
    Bc,
    Dfs,
}

impl AlgArg {
    fn algorithm(self) -> Algorithm {
        match self {
            AlgArg::Bc => Algorithm::BlockingClauses,
            AlgArg::Dfs => Algorithm::Dfs,
        }
    }
}

#[derive(clap::Args)]
struct Common {
    /// Write a JSON report to PATH, or to stdout when no PATH is given.
    #[arg(long, value_name = "PATH", num_args = 0..=1, default_missing_value = "-")]
    json: Option<PathBuf>,
    /// Dump the CNF of every solver check into DIR.
    #[arg(long, value_name = "DIR")]
    dimacs: Option<PathBuf>,
    /// Use chronological DPLL without clause learning.
    #[arg(long)]
    plain_dpll: bool,
}

impl Common {
    fn solver(&self) -> SolverConfig {
        let mut s = if self.plain_dpll { SolverConfig::plain() } else { SolverConfig::default() };
        s.dimacs_dir = self.dimacs.clone();
        s
    }
}

#[derive(Subcommand)]
enum Command {
    /// Count the feasible outputs of a program.
    Capacity {
        file: PathBuf,
        /// Loop unwinding bound.
        #[arg(long, default_value_t = 1)]
        bound: u32,
        /// Stop once 2^k outputs are found.
        #[arg(long, value_name = "k")]
        policy: Option<u32>,
        #[arg(long, value_enum, default_value = "formula")]
        route: RouteArg,
        #[arg(long, value_enum, default_value = "dfs")]
        alg: AlgArg,
        /// List the output values.
        #[arg(long)]
        outputs: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Label paths clean/indirect/direct and bound the capacity.
    Label {
        file: PathBuf,
        /// Branch-decision bound of the symbolic execution.
        #[arg(long, default_value_t = 32)]
        bound: u32,
        /// Solve every DF check instead of deciding from the terms.
        #[arg(long)]
        no_opt: bool,
        /// Write the path summaries as JSON to PATH.
        #[arg(long, value_name = "PATH")]
        emit_paths: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Check the assertions of a program.
    Bmc {
        file: PathBuf,
        /// Branch-decision bound of the symbolic execution.
        #[arg(long, default_value_t = 32)]
        bound: u32,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Disjuncts per solver batch.
        #[arg(long, default_value_t = leakcount::bmc::DEFAULT_BATCH)]
        batch: usize,
        /// Report every violating path instead of stopping at the first.
        #[arg(long)]
        all: bool,
        /// Enumerate error classes of the unrolled formula.
        #[arg(long, conflicts_with_all = ["gen_tests", "reliability"])]
        classes: bool,
        /// Generate one test per feasible guard valuation.
        #[arg(long, conflicts_with = "reliability")]
        gen_tests: bool,
        /// Count inputs that finish, fail or hit the bound.
        #[arg(long)]
        reliability: bool,
        /// Loop unwinding bound for --classes and --gen-tests.
        #[arg(long, default_value_t = 1)]
        unwind: u32,
        #[arg(long)]
        max_counterexamples: Option<usize>,
        /// Write the deferred path summaries as JSON to PATH.
        #[arg(long, value_name = "PATH")]
        emit_paths: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run an SMT-LIB script with check-allsat support.
    Allsat {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "dfs")]
        alg: AlgArg,
        #[arg(long)]
        limit: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run an SMT-LIB script.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check every program in a directory against its .expect file.
    Corpus {
        dir: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

/// Bad input from the user: exit code 1.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Usage(format!("{}: {e}", path.display())).into())
}

fn load_program(path: &Path) -> Result<SourceProgram> {
    let src = read(path)?;
    leakcount::gcl::parse(&src).map_err(|e| Usage(e.render(&path.display().to_string())).into())
}

fn max_input_bits() -> Result<u32> {
    match std::env::var("LEAKCOUNT_MAX_INPUT_BITS") {
        Ok(v) => v.parse().map_err(|_| Usage(format!("LEAKCOUNT_MAX_INPUT_BITS={v} is not a number")).into()),
        Err(_) => Ok(DEFAULT_MAX_INPUT_BITS),
    }
}

fn emit<T: Serialize>(json: &Option<PathBuf>, report: &T, text: String) -> Result<()> {
    match json.as_deref() {
        Some(p) if p == Path::new("-") => println!("{}", serde_json::to_string_pretty(report)?),
        Some(p) => {
            std::fs::write(p, serde_json::to_string_pretty(report)?).with_context(|| format!("writing {}", p.display()))?;
            print!("{text}");
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_paths(path: &Option<PathBuf>, summaries: &[PathSummary]) -> Result<()> {
    if let Some(p) = path {
        let paths: Vec<PathReport> = summaries.iter().map(PathReport::summary).collect();
        std::fs::write(p, serde_json::to_string_pretty(&paths)?).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Capacity { file, bound, policy, route, alg, outputs, common } => {
            let mut q = QifQuery::new(load_program(&file)?, bound);
            q.policy = policy;
            q.route = match route {
                RouteArg::Formula => Route::Formula,
                RouteArg::Symcount => Route::SymCount,
            };
            q.algorithm = alg.algorithm();
            q.collect_outputs = outputs;
            q.solver = common.solver();
            let r = capacity(&q)?;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            let alg_name = if q.route == Route::Formula { q.algorithm.name() } else { "-" };
            let rep = CapacityReport::new(&file.display().to_string(), bound, q.route.name(), alg_name, policy, r);
            emit(&common.json, &rep, rep.text())?;
        }
        Command::Label { file, bound, no_opt, emit_paths: paths_out, common } => {
            let p = load_program(&file)?;
            let summaries = execute(&p, bound, Mode::Classical)?;
            emit_paths(&paths_out, &summaries)?;
            let opts = LabelOptions { optimizations: !no_opt, max_input_bits: max_input_bits()?, solver: common.solver() };
            let l = label_paths(&p, &summaries, &opts)?;
            let rep = LabelReport::new(&file.display().to_string(), bound, !no_opt, &l);
            emit(&common.json, &rep, rep.text())?;
        }
        Command::Bmc {
            file,
            bound,
            workers,
            batch,
            all,
            classes,
            gen_tests,
            reliability: rel,
            unwind,
            max_counterexamples,
            emit_paths: paths_out,
            common,
        } => {
            let p = load_program(&file)?;
            let name = file.display().to_string();
            let solver = common.solver();
            if paths_out.is_some() {
                emit_paths(&paths_out, &execute(&p, bound, Mode::Deferred)?)?;
            }
            let rep = if classes {
                BmcReport::result(&name, "classes", unwind, enumerate_counterexamples(&p, unwind, max_counterexamples, &solver)?)
            } else if gen_tests {
                let tests = generate_tests(&p, unwind, max_counterexamples, &solver)?;
                BmcReport { tests: Some(tests), ..BmcReport::empty(&name, "tests", unwind) }
            } else if rel {
                BmcReport::reliability(&name, bound, reliability(&p, bound, Some(max_input_bits()?), &solver)?)
            } else {
                let cfg = BmcConfig { bound, workers, batch, stop_on_first: !all, max_counterexamples, solver };
                BmcReport::result(&name, "check", bound, check_concurrent(&p, &cfg)?)
            };
            emit(&common.json, &rep, rep.text())?;
        }
        Command::Allsat { file, alg, limit, common } => {
            let opts = RunOptions { algorithm: alg.algorithm(), limit, solver: common.solver() };
            run_script(&file, "allsat", &opts, &common.json)?;
        }
        Command::Solve { file, common } => {
            let opts = RunOptions { solver: common.solver(), ..Default::default() };
            run_script(&file, "solve", &opts, &common.json)?;
        }
        Command::Corpus { dir, common } => {
            let rep = corpus::run_corpus(&dir, max_input_bits()?)?;
            emit(&common.json, &rep, rep.text())?;
            return Ok(rep.failed == 0);
        }
    }
    Ok(true)
}

fn run_script(file: &Path, command: &'static str, opts: &RunOptions, json: &Option<PathBuf>) -> Result<()> {
    let text = read(file)?;
    let s = parse_script(&text).map_err(|e| Usage(format!("{}: {e}", file.display())))?;
    let t = script::run(&s, opts)?;
    let rep = ScriptReport {
        command,
        file: file.display().to_string(),
        check_sat: t.check_sat.iter().map(|r| if *r == SatResult::Sat { "sat" } else { "unsat" }).collect(),
        models: t.all_sat.iter().map(|r| r.count).collect(),
        output: t.output,
    };
    emit(json, &rep, rep.output.clone())
}

/// Exit code for a failed run: 1 for bad input or configuration, 2 for
/// anything else.
fn exit_code(e: &anyhow::Error) -> u8 {
    let usage = e.is::<Usage>()
        || e.is::<MissingExpectation>()
        || e.is::<GclError>()
        || e.is::<SmtError>()
        || matches!(e.downcast_ref::<SelfcompError>(), Some(SelfcompError::DomainTooLarge { .. }))
        || matches!(e.downcast_ref::<QifError>(), Some(QifError::Gcl(_)))
        || matches!(e.downcast_ref::<SymexecError>(), Some(SymexecError::Gcl(_)))
        || matches!(
            e.downcast_ref::<BmcError>(),
            Some(BmcError::Config(_) | BmcError::Gcl(_) | BmcError::Symexec(SymexecError::Gcl(_)) | BmcError::Selfcomp(SelfcompError::DomainTooLarge { .. }))
        );
    if usage {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
