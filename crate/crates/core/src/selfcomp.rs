//! Path-equivalence self-composition over symbolic path summaries.
//!
//! A path has a direct flow when two runs that agree on the low inputs but
//! not on the high ones can both follow it and produce different outputs.
//! It has an implicit flow when such runs can follow two different paths
//! and produce different outputs. High and nondeterministic inputs of the
//! second run are renamed `H_0!1`; low inputs are shared. Nondeterministic
//! inputs vary between the runs because they count towards capacity.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::allsmt::{self, AllSmtError, Algorithm, Options};
use crate::eval::Value;
use crate::gcl::{version_name, SourceProgram, VarKind};
use crate::qif::log2_count;
use crate::sat::{Engine, SatError, SolverConfig};
use crate::symexec::{PathSummary, Verdict};
use crate::term::{rename, Term};

pub const DEFAULT_MAX_INPUT_BITS: u32 = 20;

#[derive(Debug, Error)]
pub enum SelfcompError {
    #[error("more than 2^{cap} input valuations to count (raise LEAKCOUNT_MAX_INPUT_BITS)")]
    DomainTooLarge { cap: u32 },
    #[error(transparent)]
    AllSmt(#[from] AllSmtError),
    #[error(transparent)]
    Sat(#[from] SatError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Clean,
    Indirect,
    Direct,
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Label::Clean => "clean",
            Label::Indirect => "indirect",
            Label::Direct => "direct",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Renames the high and nondeterministic inputs of the second run.
#[derive(Clone, Debug)]
pub struct Renamer {
    highs: HashSet<String>,
}

impl Renamer {
    pub fn new(p: &SourceProgram) -> Renamer {
        let highs = p.decls.iter().filter(|d| matches!(d.kind, VarKind::High | VarKind::Nondet)).map(|d| version_name(&d.name, 0)).collect();
        Renamer { highs }
    }

    pub fn copy_name(name: &str) -> String {
        format!("{name}!1")
    }

    pub fn is_high(&self, name: &str) -> bool {
        self.highs.contains(name)
    }

    pub fn mentions_high(&self, t: &Term) -> bool {
        t.mentions(&|n| self.highs.contains(n))
    }

    pub fn copy(&self, t: &Term) -> Term {
        rename(t, &|n| self.highs.contains(n).then(|| Self::copy_name(n)))
    }
}

/// `c_i(a,b) && c_i(a1,b) && f_i(a,b) != f_i(a1,b)`.
pub fn df_violation(s: &PathSummary, r: &Renamer) -> Term {
    Term::and(vec![s.pc.clone(), r.copy(&s.pc), Term::not(Term::eq(s.out.clone(), r.copy(&s.out)))])
}

/// `c_i(a,b) && c_j(a1,b) && f_i(a,b) != f_j(a1,b)`.
pub fn if_violation(si: &PathSummary, sj: &PathSummary, r: &Renamer) -> Term {
    Term::and(vec![si.pc.clone(), r.copy(&sj.pc), Term::not(Term::eq(si.out.clone(), r.copy(&sj.out)))])
}

#[derive(Clone, Debug)]
pub struct LabeledPath {
    pub summary: PathSummary,
    pub label: Label,
    /// Inputs following the path; set for direct paths.
    pub in_count: Option<u64>,
    /// Values of a violating pair of runs, when a check found one.
    pub witness: Option<BTreeMap<String, Value>>,
}

#[derive(Clone, Debug)]
pub struct LabelOptions {
    pub optimizations: bool,
    pub max_input_bits: u32,
    pub solver: SolverConfig,
}

impl Default for LabelOptions {
    fn default() -> Self {
        LabelOptions { optimizations: true, max_input_bits: DEFAULT_MAX_INPUT_BITS, solver: SolverConfig::default() }
    }
}

#[derive(Clone, Debug, Default)]
pub struct LabelStats {
    pub df_checks: u64,
    pub if_checks: u64,
    /// Paths decided without a DF check.
    pub df_skipped: u64,
}

#[derive(Clone, Debug)]
pub struct Labeling {
    pub paths: Vec<LabeledPath>,
    pub stats: LabelStats,
}

impl Labeling {
    pub fn count(&self, l: Label) -> usize {
        self.paths.iter().filter(|p| p.label == l).count()
    }

    pub fn bound(&self) -> BoundReport {
        qilura_bound(&self.paths)
    }
}

fn solve(t: &Term, solver: &SolverConfig) -> Result<Option<BTreeMap<String, Value>>, SatError> {
    let mut e = Engine::with_config(solver.clone());
    e.assert_term(t)?;
    if !e.check().is_sat() {
        return Ok(None);
    }
    Ok(Some(e.model()?.values))
}

/// Label the paths of `p`. Summaries should come from a classical run, so
/// every pc is satisfiable; assume-violating paths are dropped.
pub fn label_paths(p: &SourceProgram, summaries: &[PathSummary], opts: &LabelOptions) -> Result<Labeling, SelfcompError> {
    let r = Renamer::new(p);
    let mut stats = LabelStats::default();
    let mut paths: Vec<LabeledPath> = summaries
        .iter()
        .filter(|s| s.verdict != Verdict::AssumeViolated)
        .map(|s| LabeledPath { summary: s.clone(), label: Label::Clean, in_count: None, witness: None })
        .collect();

    // Phase 1: direct flows.
    for lp in &mut paths {
        let s = &lp.summary;
        if s.verdict == Verdict::BoundHit {
            // Unknown continuation: assume the worst.
            lp.label = Label::Direct;
            stats.df_skipped += 1;
            continue;
        }
        if opts.optimizations {
            // Without a high input in the output DF is valid; with one the
            // path is taken as direct, as in taint tracking over the
            // simplified output term.
            if r.mentions_high(&s.out) {
                lp.label = Label::Direct;
            }
            stats.df_skipped += 1;
            continue;
        }
        stats.df_checks += 1;
        if let Some(w) = solve(&df_violation(s, &r), &opts.solver)? {
            lp.label = Label::Direct;
            lp.witness = Some(w);
        }
    }

    // Phase 2: implicit flows between pairs, for paths still clean.
    for i in 0..paths.len() {
        for j in i + 1..paths.len() {
            if paths[i].label != Label::Clean && paths[j].label != Label::Clean {
                continue;
            }
            let (si, sj) = (&paths[i].summary, &paths[j].summary);
            if opts.optimizations && (!mentions_any(&r, si) || !mentions_any(&r, sj)) {
                // A path free of high inputs cannot pair with another one:
                // the two pcs already exclude each other on the low inputs.
                continue;
            }
            stats.if_checks += 1;
            let Some(w) = solve(&if_violation(si, sj, &r), &opts.solver)? else { continue };
            for k in [i, j] {
                if paths[k].label == Label::Clean {
                    paths[k].label = Label::Indirect;
                    paths[k].witness = Some(w.clone());
                }
            }
        }
    }

    let inputs = input_domain(p);
    for lp in &mut paths {
        if lp.label == Label::Direct {
            lp.in_count = Some(count_inputs(&lp.summary.pc, &inputs, opts.max_input_bits, &opts.solver)?);
        }
    }
    Ok(Labeling { paths, stats })
}

fn mentions_any(r: &Renamer, s: &PathSummary) -> bool {
    r.mentions_high(&s.pc) || r.mentions_high(&s.out)
}

/// Input symbols and widths of `p`.
pub fn input_domain(p: &SourceProgram) -> Vec<(String, u32)> {
    p.inputs().map(|d| (version_name(&d.name, 0), d.width)).collect()
}

/// Number of input valuations satisfying `pc`. Inputs absent from `pc`
/// multiply the count without enumeration; the valuations of the others are
/// enumerated, at most 2^cap of them.
pub fn count_inputs(pc: &Term, inputs: &[(String, u32)], cap: u32, solver: &SolverConfig) -> Result<u64, SelfcompError> {
    let too_large = || SelfcompError::DomainTooLarge { cap };
    if pc.as_bool() == Some(false) {
        return Ok(0);
    }
    let free: HashSet<String> = pc.free_vars().into_iter().map(|(n, _)| n).collect();
    let mut absent_bits = 0u32;
    let mut parts = vec![pc.clone()];
    let mut important = Vec::new();
    for (name, w) in inputs {
        if !free.contains(name) {
            absent_bits += w;
            continue;
        }
        let v = Term::bv_var(name, *w);
        for i in 0..*w {
            let p = format!("p!{}", important.len() + 1);
            let bit = Term::eq(Term::extract(i, i, v.clone()), Term::bv_const(1, 1));
            parts.push(Term::eq(Term::bool_var(&p), bit));
            important.push(p);
        }
    }
    let present = if important.is_empty() {
        let mut e = Engine::with_config(solver.clone());
        e.assert_term(pc)?;
        e.check().is_sat() as u64
    } else {
        let limit = 1u64.checked_shl(cap).map(|l| l + 1);
        let opts = Options { limit, store_models: false, solver: solver.clone() };
        let r = allsmt::enumerate(Algorithm::Dfs, &Term::and(parts), &important, &[], &opts)?;
        if r.limit_reached {
            return Err(too_large());
        }
        r.count
    };
    1u64.checked_shl(absent_bits).and_then(|m| present.checked_mul(m)).ok_or_else(too_large)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub n_clean: usize,
    pub n_indirect: usize,
    pub n_direct: usize,
    pub sum_direct_inputs: u64,
    pub upper_bound_bits: f64,
}

/// Clean paths together reveal one observation, each indirect path one,
/// and each direct path at most as many as it has inputs.
pub fn qilura_bound(paths: &[LabeledPath]) -> BoundReport {
    let n_clean = paths.iter().filter(|p| p.label == Label::Clean).count();
    let n_indirect = paths.iter().filter(|p| p.label == Label::Indirect).count();
    let direct: Vec<&LabeledPath> = paths.iter().filter(|p| p.label == Label::Direct).collect();
    let sum_direct_inputs = direct.iter().map(|p| p.in_count.expect("direct paths are counted")).sum::<u64>();
    let total = (n_clean > 0) as u64 + n_indirect as u64 + sum_direct_inputs;
    BoundReport { n_clean, n_indirect, n_direct: direct.len(), sum_direct_inputs, upper_bound_bits: log2_count(total) }
}
