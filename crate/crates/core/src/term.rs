//! Terms over Booleans and fixed-width bit-vectors.
//!
//! Terms are immutable and cheap to clone. Constructors check sorts and
//! never rewrite; see [`crate::simplify`] for the rewriting builders.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

pub const MAX_WIDTH: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Bool,
    BitVec(u32),
}

impl Sort {
    pub fn width(self) -> Option<u32> {
        match self {
            Sort::Bool => None,
            Sort::BitVec(w) => Some(w),
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => write!(f, "Bool"),
            Sort::BitVec(w) => write!(f, "(_ BitVec {w})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Not,
    And,
    Or,
    Implies,
    Xor,
    Eq,
    Ite,
    BvNot,
    BvNeg,
    BvAnd,
    BvOr,
    BvXor,
    BvAdd,
    BvSub,
    BvMul,
    BvUdiv,
    BvUrem,
    BvSdiv,
    BvSrem,
    BvShl,
    BvLshr,
    BvAshr,
    BvUlt,
    BvUle,
    BvUgt,
    BvUge,
    BvSlt,
    BvSle,
    BvSgt,
    BvSge,
    Extract(u32, u32),
    Concat,
    ZeroExt(u32),
    SignExt(u32),
}

impl Op {
    /// SMT-LIB name of the operator (indexed operators without indices).
    pub fn smt_name(self) -> &'static str {
        match self {
            Op::Not => "not",
            Op::And => "and",
            Op::Or => "or",
            Op::Implies => "=>",
            Op::Xor => "xor",
            Op::Eq => "=",
            Op::Ite => "ite",
            Op::BvNot => "bvnot",
            Op::BvNeg => "bvneg",
            Op::BvAnd => "bvand",
            Op::BvOr => "bvor",
            Op::BvXor => "bvxor",
            Op::BvAdd => "bvadd",
            Op::BvSub => "bvsub",
            Op::BvMul => "bvmul",
            Op::BvUdiv => "bvudiv",
            Op::BvUrem => "bvurem",
            Op::BvSdiv => "bvsdiv",
            Op::BvSrem => "bvsrem",
            Op::BvShl => "bvshl",
            Op::BvLshr => "bvlshr",
            Op::BvAshr => "bvashr",
            Op::BvUlt => "bvult",
            Op::BvUle => "bvule",
            Op::BvUgt => "bvugt",
            Op::BvUge => "bvuge",
            Op::BvSlt => "bvslt",
            Op::BvSle => "bvsle",
            Op::BvSgt => "bvsgt",
            Op::BvSge => "bvsge",
            Op::Extract(..) => "extract",
            Op::Concat => "concat",
            Op::ZeroExt(_) => "zero_extend",
            Op::SignExt(_) => "sign_extend",
        }
    }

    pub fn is_bv_binary(self) -> bool {
        matches!(
            self,
            Op::BvAnd
                | Op::BvOr
                | Op::BvXor
                | Op::BvAdd
                | Op::BvSub
                | Op::BvMul
                | Op::BvUdiv
                | Op::BvUrem
                | Op::BvSdiv
                | Op::BvSrem
                | Op::BvShl
                | Op::BvLshr
                | Op::BvAshr
        )
    }

    pub fn is_bv_compare(self) -> bool {
        matches!(
            self,
            Op::BvUlt
                | Op::BvUle
                | Op::BvUgt
                | Op::BvUge
                | Op::BvSlt
                | Op::BvSle
                | Op::BvSgt
                | Op::BvSge
        )
    }
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Var(Arc<str>),
    Bool(bool),
    /// Bit pattern, always masked to the sort width.
    Bv(u64),
    App(Op, Vec<Term>),
}

#[derive(Debug)]
struct Node {
    kind: Kind,
    sort: Sort,
    hash: u64,
}

#[derive(Clone)]
pub struct Term(Arc<Node>);

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.hash == other.0.hash
                && self.0.sort == other.0.sort
                && self.0.kind == other.0.kind)
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::smtlib::term_to_string(self))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::smtlib::term_to_string(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SortError {
    #[error("operator {op} expects {expected}, got {got}")]
    Mismatch { op: String, expected: String, got: String },
    #[error("operator {op} expects {expected} arguments, got {got}")]
    Arity { op: String, expected: String, got: usize },
    #[error("bit-vector width {0} out of range 1..=64")]
    Width(u32),
    #[error("extract [{hi}:{lo}] invalid for width {width}")]
    Extract { hi: u32, lo: u32, width: u32 },
}

pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

fn node_hash(kind: &Kind, sort: Sort) -> u64 {
    let mut h = DefaultHasher::new();
    sort.hash(&mut h);
    match kind {
        Kind::Var(n) => {
            0u8.hash(&mut h);
            n.hash(&mut h);
        }
        Kind::Bool(b) => {
            1u8.hash(&mut h);
            b.hash(&mut h);
        }
        Kind::Bv(v) => {
            2u8.hash(&mut h);
            v.hash(&mut h);
        }
        Kind::App(op, args) => {
            3u8.hash(&mut h);
            op.hash(&mut h);
            for a in args {
                h.write_u64(a.0.hash);
            }
        }
    }
    h.finish()
}

impl Term {
    fn mk(kind: Kind, sort: Sort) -> Term {
        let hash = node_hash(&kind, sort);
        Term(Arc::new(Node { kind, sort, hash }))
    }

    pub fn var(name: &str, sort: Sort) -> Term {
        Term::mk(Kind::Var(Arc::from(name)), sort)
    }

    pub fn bool_var(name: &str) -> Term {
        Term::var(name, Sort::Bool)
    }

    pub fn bv_var(name: &str, width: u32) -> Term {
        Term::var(name, Sort::BitVec(width))
    }

    pub fn bool_const(b: bool) -> Term {
        Term::mk(Kind::Bool(b), Sort::Bool)
    }

    pub fn tt() -> Term {
        Term::bool_const(true)
    }

    pub fn ff() -> Term {
        Term::bool_const(false)
    }

    pub fn bv_const(value: u64, width: u32) -> Term {
        assert!((1..=MAX_WIDTH).contains(&width), "bad width {width}");
        Term::mk(Kind::Bv(value & mask(width)), Sort::BitVec(width))
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    pub fn sort(&self) -> Sort {
        self.0.sort
    }

    pub fn width(&self) -> u32 {
        match self.0.sort {
            Sort::BitVec(w) => w,
            Sort::Bool => panic!("width of Bool term"),
        }
    }

    pub fn is_bool(&self) -> bool {
        self.0.sort == Sort::Bool
    }

    pub fn args(&self) -> &[Term] {
        match &self.0.kind {
            Kind::App(_, a) => a,
            _ => &[],
        }
    }

    pub fn op(&self) -> Option<Op> {
        match &self.0.kind {
            Kind::App(op, _) => Some(*op),
            _ => None,
        }
    }

    pub fn var_name(&self) -> Option<&str> {
        match &self.0.kind {
            Kind::Var(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self.0.kind {
            Kind::Bool(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_bv(&self) -> Option<u64> {
        match self.0.kind {
            Kind::Bv(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self.0.kind, Kind::Bool(_) | Kind::Bv(_))
    }

    /// Identity of the shared node, usable as a memo key while `self` is alive.
    pub fn id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn structural_hash(&self) -> u64 {
        self.0.hash
    }

    /// Sort-checked application.
    pub fn app(op: Op, args: Vec<Term>) -> Result<Term, SortError> {
        let sort = result_sort(op, &args)?;
        Ok(Term::mk(Kind::App(op, args), sort))
    }

    fn app_unchecked(op: Op, args: Vec<Term>) -> Term {
        match Term::app(op, args) {
            Ok(t) => t,
            Err(e) => panic!("ill-sorted term: {e}"),
        }
    }

    // Panicking shorthands for code that builds terms it already sort-checked.

    pub fn not(a: Term) -> Term {
        Term::app_unchecked(Op::Not, vec![a])
    }
    pub fn and(args: Vec<Term>) -> Term {
        match args.len() {
            0 => Term::tt(),
            1 => args.into_iter().next().unwrap(),
            _ => Term::app_unchecked(Op::And, args),
        }
    }
    pub fn or(args: Vec<Term>) -> Term {
        match args.len() {
            0 => Term::ff(),
            1 => args.into_iter().next().unwrap(),
            _ => Term::app_unchecked(Op::Or, args),
        }
    }
    pub fn and2(a: Term, b: Term) -> Term {
        Term::app_unchecked(Op::And, vec![a, b])
    }
    pub fn or2(a: Term, b: Term) -> Term {
        Term::app_unchecked(Op::Or, vec![a, b])
    }
    pub fn implies(a: Term, b: Term) -> Term {
        Term::app_unchecked(Op::Implies, vec![a, b])
    }
    pub fn eq(a: Term, b: Term) -> Term {
        Term::app_unchecked(Op::Eq, vec![a, b])
    }
    pub fn ite(c: Term, t: Term, e: Term) -> Term {
        Term::app_unchecked(Op::Ite, vec![c, t, e])
    }
    pub fn bin(op: Op, a: Term, b: Term) -> Term {
        Term::app_unchecked(op, vec![a, b])
    }
    pub fn un(op: Op, a: Term) -> Term {
        Term::app_unchecked(op, vec![a])
    }
    pub fn extract(hi: u32, lo: u32, a: Term) -> Term {
        Term::app_unchecked(Op::Extract(hi, lo), vec![a])
    }

    /// Free variables with their sorts, sorted by name.
    pub fn free_vars(&self) -> Vec<(String, Sort)> {
        let mut seen = HashMap::new();
        let mut out = BTreeSet::new();
        collect_vars(self, &mut seen, &mut out);
        out.into_iter().collect()
    }

    pub fn mentions(&self, pred: &dyn Fn(&str) -> bool) -> bool {
        self.free_vars().iter().any(|(n, _)| pred(n))
    }

    /// Number of distinct nodes in the DAG.
    pub fn dag_size(&self) -> usize {
        let mut seen = HashMap::new();
        fn go(t: &Term, seen: &mut HashMap<usize, ()>) {
            if seen.insert(t.id(), ()).is_some() {
                return;
            }
            for a in t.args() {
                go(a, seen);
            }
        }
        go(self, &mut seen);
        seen.len()
    }
}

fn collect_vars(t: &Term, seen: &mut HashMap<usize, ()>, out: &mut BTreeSet<(String, Sort)>) {
    if seen.insert(t.id(), ()).is_some() {
        return;
    }
    match t.kind() {
        Kind::Var(n) => {
            out.insert((n.to_string(), t.sort()));
        }
        Kind::App(_, args) => {
            for a in args {
                collect_vars(a, seen, out);
            }
        }
        _ => {}
    }
}

fn mismatch(op: Op, expected: &str, args: &[Term]) -> SortError {
    let got: Vec<String> = args.iter().map(|a| a.sort().to_string()).collect();
    SortError::Mismatch {
        op: op.smt_name().to_string(),
        expected: expected.to_string(),
        got: got.join(", "),
    }
}

fn arity(op: Op, expected: &str, got: usize) -> SortError {
    SortError::Arity {
        op: op.smt_name().to_string(),
        expected: expected.to_string(),
        got,
    }
}

fn result_sort(op: Op, args: &[Term]) -> Result<Sort, SortError> {
    let n = args.len();
    let all_bool = args.iter().all(|a| a.is_bool());
    match op {
        Op::Not => {
            if n != 1 {
                return Err(arity(op, "1", n));
            }
            if !all_bool {
                return Err(mismatch(op, "Bool", args));
            }
            Ok(Sort::Bool)
        }
        Op::And | Op::Or | Op::Xor => {
            if n < 2 {
                return Err(arity(op, ">= 2", n));
            }
            if !all_bool {
                return Err(mismatch(op, "Bool", args));
            }
            Ok(Sort::Bool)
        }
        Op::Implies => {
            if n != 2 {
                return Err(arity(op, "2", n));
            }
            if !all_bool {
                return Err(mismatch(op, "Bool", args));
            }
            Ok(Sort::Bool)
        }
        Op::Eq => {
            if n != 2 {
                return Err(arity(op, "2", n));
            }
            if args[0].sort() != args[1].sort() {
                return Err(mismatch(op, "equal sorts", args));
            }
            Ok(Sort::Bool)
        }
        Op::Ite => {
            if n != 3 {
                return Err(arity(op, "3", n));
            }
            if !args[0].is_bool() || args[1].sort() != args[2].sort() {
                return Err(mismatch(op, "Bool, s, s", args));
            }
            Ok(args[1].sort())
        }
        Op::BvNot | Op::BvNeg => {
            if n != 1 {
                return Err(arity(op, "1", n));
            }
            match args[0].sort() {
                Sort::BitVec(w) => Ok(Sort::BitVec(w)),
                Sort::Bool => Err(mismatch(op, "bit-vector", args)),
            }
        }
        _ if op.is_bv_binary() || op.is_bv_compare() => {
            if n != 2 {
                return Err(arity(op, "2", n));
            }
            match (args[0].sort(), args[1].sort()) {
                (Sort::BitVec(a), Sort::BitVec(b)) if a == b => {
                    if op.is_bv_compare() {
                        Ok(Sort::Bool)
                    } else {
                        Ok(Sort::BitVec(a))
                    }
                }
                _ => Err(mismatch(op, "two bit-vectors of equal width", args)),
            }
        }
        Op::Extract(hi, lo) => {
            if n != 1 {
                return Err(arity(op, "1", n));
            }
            let w = args[0]
                .sort()
                .width()
                .ok_or_else(|| mismatch(op, "bit-vector", args))?;
            if lo > hi || hi >= w {
                return Err(SortError::Extract { hi, lo, width: w });
            }
            Ok(Sort::BitVec(hi - lo + 1))
        }
        Op::Concat => {
            if n != 2 {
                return Err(arity(op, "2", n));
            }
            match (args[0].sort(), args[1].sort()) {
                (Sort::BitVec(a), Sort::BitVec(b)) => {
                    if a + b > MAX_WIDTH {
                        Err(SortError::Width(a + b))
                    } else {
                        Ok(Sort::BitVec(a + b))
                    }
                }
                _ => Err(mismatch(op, "bit-vectors", args)),
            }
        }
        Op::ZeroExt(k) | Op::SignExt(k) => {
            if n != 1 {
                return Err(arity(op, "1", n));
            }
            let w = args[0]
                .sort()
                .width()
                .ok_or_else(|| mismatch(op, "bit-vector", args))?;
            if w + k > MAX_WIDTH {
                return Err(SortError::Width(w + k));
            }
            Ok(Sort::BitVec(w + k))
        }
        _ => unreachable!("operator {op:?} not classified"),
    }
}

/// Replace variables by terms, bottom-up, sharing rebuilt subterms.
pub fn substitute(t: &Term, map: &HashMap<String, Term>) -> Term {
    let mut memo: HashMap<usize, Term> = HashMap::new();
    subst_rec(t, map, &mut memo)
}

fn subst_rec(t: &Term, map: &HashMap<String, Term>, memo: &mut HashMap<usize, Term>) -> Term {
    if let Some(r) = memo.get(&t.id()) {
        return r.clone();
    }
    let r = match t.kind() {
        Kind::Var(n) => map.get(&**n).cloned().unwrap_or_else(|| t.clone()),
        Kind::App(op, args) => {
            let new: Vec<Term> = args.iter().map(|a| subst_rec(a, map, memo)).collect();
            if new.iter().zip(args).all(|(a, b)| a.id() == b.id()) {
                t.clone()
            } else {
                Term::app(*op, new).expect("substitution preserves sorts")
            }
        }
        _ => t.clone(),
    };
    memo.insert(t.id(), r.clone());
    r
}

/// Rename free variables; names not in `f`'s domain are kept.
pub fn rename(t: &Term, f: &dyn Fn(&str) -> Option<String>) -> Term {
    let mut map = HashMap::new();
    for (n, s) in t.free_vars() {
        if let Some(new) = f(&n) {
            map.insert(n, Term::var(&new, s));
        }
    }
    substitute(t, &map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structural_equality_ignores_sharing() {
        let a = Term::bin(Op::BvAdd, Term::bv_var("x", 8), Term::bv_const(3, 8));
        let b = Term::bin(Op::BvAdd, Term::bv_var("x", 8), Term::bv_const(3, 8));
        assert_eq!(a, b);
        assert_ne!(a.id(), b.id());
    }

    #[test]
    fn constants_are_masked() {
        assert_eq!(Term::bv_const(0x1ff, 8).as_bv(), Some(0xff));
    }

    #[test]
    fn sort_errors() {
        let x = Term::bv_var("x", 8);
        let y = Term::bv_var("y", 4);
        assert!(Term::app(Op::BvAdd, vec![x.clone(), y]).is_err());
        assert!(Term::app(Op::And, vec![x.clone(), Term::tt()]).is_err());
        assert!(matches!(
            Term::app(Op::Extract(8, 0), vec![x.clone()]),
            Err(SortError::Extract { .. })
        ));
        assert_eq!(
            Term::app(Op::Extract(3, 1), vec![x]).unwrap().sort(),
            Sort::BitVec(3)
        );
    }

    #[test]
    fn substitute_and_free_vars() {
        let x = Term::bv_var("x", 8);
        let t = Term::bin(Op::BvUlt, x.clone(), Term::bv_var("y", 8));
        let mut m = HashMap::new();
        m.insert("x".to_string(), Term::bv_const(1, 8));
        let s = substitute(&t, &m);
        assert_eq!(s.free_vars(), vec![("y".to_string(), Sort::BitVec(8))]);
    }
}
