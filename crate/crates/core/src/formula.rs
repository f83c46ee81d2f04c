//! Program-to-formula encoding, output instrumentation and Boolean
//! abstraction.

use std::collections::HashMap;

use thiserror::Error;

use crate::gcl::{SsaProgram, SsaStmt};
use crate::smtlib::{emit_script, script_for_terms, Command, Script};
use crate::term::{substitute, Kind, Op, Sort, Term};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("`{0}` has sort {1}, expected {2}")]
    Sort(String, Sort, Sort),
    #[error("`{0}` is reserved for instrumentation")]
    Reserved(String),
}

/// The transition constraint C: one conjunct per guard definition,
/// assignment and assume.
pub fn encode(p: &SsaProgram) -> Term {
    let mut parts = Vec::new();
    for s in &p.stmts {
        match s {
            SsaStmt::GuardDef { name, cond } => parts.push(Term::eq(Term::bool_var(name), cond.clone())),
            SsaStmt::Assign { var, value, .. } => parts.push(Term::eq(Term::var(var, value.sort()), value.clone())),
            SsaStmt::Assume { guard, cond } => parts.push(guarded(guard, cond)),
            SsaStmt::Assert { .. } => {}
        }
    }
    Term::and(parts)
}

/// The property P: the conjunction of `guard -> cond` over all asserts.
pub fn encode_property(p: &SsaProgram) -> Term {
    Term::and(
        p.stmts
            .iter()
            .filter_map(|s| match s {
                SsaStmt::Assert { guard, cond, .. } => Some(guarded(guard, cond)),
                _ => None,
            })
            .collect(),
    )
}

fn guarded(guard: &Term, cond: &Term) -> Term {
    if guard.as_bool() == Some(true) {
        cond.clone()
    } else {
        Term::implies(guard.clone(), cond.clone())
    }
}

/// Name of the important variable bound to output bit `i - 1` (one-based).
pub fn important_name(i: u32) -> String {
    format!("p!{i}")
}

#[derive(Clone, Debug)]
pub struct InstrumentedFormula {
    pub base: Term,
    /// `p_i <=> (extract(i-1, i-1)(O) = 1)`, LSB first.
    pub bindings: Vec<Term>,
    pub important: Vec<String>,
    pub relevant: Vec<(String, Sort)>,
    pub output: Term,
}

impl InstrumentedFormula {
    pub fn formula(&self) -> Term {
        let mut parts = vec![self.base.clone()];
        parts.extend(self.bindings.iter().cloned());
        Term::and(parts)
    }

    pub fn important_terms(&self) -> Vec<Term> {
        self.important.iter().map(|n| Term::bool_var(n)).collect()
    }

    /// Declarations, one assert per conjunct of the base and per binding,
    /// then the enumeration commands.
    pub fn script(&self) -> Script {
        let mut terms = conjuncts(&self.base);
        terms.extend(self.bindings.iter().cloned());
        let mut s = script_for_terms(&terms);
        if !self.relevant.is_empty() {
            s.commands.push(Command::AllSatRelevant(self.relevant.iter().map(|(n, _)| n.clone()).collect()));
        }
        s.commands.push(Command::CheckAllSat(self.important.clone()));
        s
    }

    pub fn emit(&self) -> String {
        emit_script(&self.script())
    }

    /// Output value encoded by an assignment to the important variables.
    pub fn output_value(&self, bits: &[bool]) -> u64 {
        bits.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as u64) << i))
    }
}

/// Top-level conjuncts of `t` (none for `true`).
pub fn conjuncts(t: &Term) -> Vec<Term> {
    match (t.op(), t.as_bool()) {
        (Some(Op::And), _) => t.args().to_vec(),
        (_, Some(true)) => vec![],
        _ => vec![t.clone()],
    }
}

/// Bind one fresh Boolean per bit of `output`. `output` is usually the final
/// SSA version of the output variable, but any bit-vector term over the
/// variables of `c` is accepted (an unassigned output is a constant).
pub fn instrument(c: &Term, output: &Term, relevant: &[String]) -> Result<InstrumentedFormula, FormulaError> {
    let vars: HashMap<String, Sort> = c.free_vars().into_iter().collect();
    for (n, s) in output.free_vars() {
        match vars.get(&n) {
            None => return Err(FormulaError::UnknownVariable(n)),
            Some(&vs) if vs != s => return Err(FormulaError::Sort(n, vs, s)),
            _ => {}
        }
    }
    let width = match output.sort() {
        Sort::BitVec(w) => w,
        Sort::Bool => return Err(FormulaError::Sort(output.to_string(), Sort::Bool, Sort::BitVec(1))),
    };
    let mut rel = Vec::new();
    for n in relevant {
        let s = vars.get(n).ok_or_else(|| FormulaError::UnknownVariable(n.clone()))?;
        rel.push((n.clone(), *s));
    }
    let mut bindings = Vec::new();
    let mut important = Vec::new();
    for i in 1..=width {
        let name = important_name(i);
        if vars.contains_key(&name) {
            return Err(FormulaError::Reserved(name));
        }
        let bit = Term::eq(Term::extract(i - 1, i - 1, output.clone()), Term::bv_const(1, 1));
        bindings.push(Term::eq(Term::bool_var(&name), bit));
        important.push(name);
    }
    Ok(InstrumentedFormula { base: c.clone(), bindings, important, relevant: rel, output: output.clone() })
}

/// Bijection between theory atoms and the Boolean variables standing for
/// them.
#[derive(Clone, Debug, Default)]
pub struct AbstractionMap {
    atoms: Vec<(String, Term)>,
    index: HashMap<Term, usize>,
}

impl AbstractionMap {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Abstraction variable of an atom (BA).
    pub fn var_for(&self, atom: &Term) -> Option<&str> {
        self.index.get(atom).map(|&i| self.atoms[i].0.as_str())
    }

    /// Atom behind an abstraction variable (BR).
    pub fn atom_for(&self, var: &str) -> Option<&Term> {
        self.atoms.iter().find(|(n, _)| n == var).map(|(_, t)| t)
    }

    pub fn entries(&self) -> &[(String, Term)] {
        &self.atoms
    }

    /// `a_i = atom_i` for every entry.
    pub fn definitions(&self) -> Vec<Term> {
        self.atoms.iter().map(|(n, t)| Term::eq(Term::bool_var(n), t.clone())).collect()
    }

    /// Replace abstraction variables by their atoms.
    pub fn refine(&self, skeleton: &Term) -> Term {
        let map = self.atoms.iter().map(|(n, t)| (n.clone(), t.clone())).collect();
        substitute(skeleton, &map)
    }

    fn intern(&mut self, atom: Term) -> Term {
        let i = match self.index.get(&atom) {
            Some(&i) => i,
            None => {
                let i = self.atoms.len();
                self.atoms.push((format!("a!{i}"), atom.clone()));
                self.index.insert(atom, i);
                i
            }
        };
        Term::bool_var(&self.atoms[i].0)
    }
}

fn is_connective(t: &Term) -> bool {
    match t.op() {
        Some(Op::Not | Op::And | Op::Or | Op::Implies | Op::Xor) => true,
        Some(Op::Eq) => t.args()[0].is_bool(),
        Some(Op::Ite) => t.is_bool(),
        _ => false,
    }
}

/// Boolean skeleton of a Bool-sorted term: every maximal non-Boolean atom is
/// replaced by a fresh variable, numbered in left-to-right first occurrence.
pub fn abstract_bool(t: &Term) -> (Term, AbstractionMap) {
    fn go(t: &Term, map: &mut AbstractionMap, memo: &mut HashMap<Term, Term>) -> Term {
        if let Some(r) = memo.get(t) {
            return r.clone();
        }
        let r = match t.kind() {
            Kind::Var(_) | Kind::Bool(_) => t.clone(),
            _ if is_connective(t) => {
                let args = t.args().iter().map(|a| go(a, map, memo)).collect();
                Term::app(t.op().unwrap(), args).expect("same sorts")
            }
            _ => map.intern(t.clone()),
        };
        memo.insert(t.clone(), r.clone());
        r
    }
    assert!(t.is_bool(), "abstract_bool on a bit-vector term");
    let mut map = AbstractionMap::default();
    let skeleton = go(t, &mut map, &mut HashMap::new());
    (skeleton, map)
}

/// True when `t` uses only Boolean variables, constants and connectives.
pub fn is_propositional(t: &Term) -> bool {
    match t.kind() {
        Kind::Var(_) | Kind::Bool(_) => t.is_bool(),
        Kind::Bv(_) => false,
        Kind::App(..) => is_connective(t) && t.args().iter().all(is_propositional),
    }
}
