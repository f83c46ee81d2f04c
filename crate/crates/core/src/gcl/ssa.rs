//! Bounded unrolling into guarded single-assignment form.
//!
//! An assignment `v = e` under path guard `g` becomes `v_k := ite(g, e, v_{k-1})`
//! (just `v_k := e` at top level); every `if` introduces a guard variable
//! defined by its condition; `while` is unwound `bound` times and closed with
//! `assume(g -> !cond)`.

use std::collections::HashMap;

use super::{BinOp, CastOp, Decl, Expr, ExprKind, GclError, Pos, SourceProgram, Stmt, UnOp, VarKind};
use crate::simplify;
use crate::term::{Op, Term};

pub fn guard_name(i: usize) -> String {
    format!("g!{i}")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SsaStmt {
    GuardDef { name: String, cond: Term },
    Assign { var: String, base: String, version: u32, value: Term },
    Assume { guard: Term, cond: Term },
    Assert { guard: Term, cond: Term, pos: Pos },
}

#[derive(Clone, Debug)]
pub struct SsaProgram {
    pub stmts: Vec<SsaStmt>,
    pub decls: Vec<Decl>,
    /// Final value of the output variable: `O_k`, or the constant 0 when the
    /// program never assigns it.
    pub output: Term,
    pub output_width: u32,
    pub guards: Vec<String>,
}

impl SsaProgram {
    /// Version-0 input variables with their declarations.
    pub fn inputs(&self) -> Vec<(String, &Decl)> {
        self.decls
            .iter()
            .filter(|d| d.kind.is_input())
            .map(|d| (super::version_name(&d.name, 0), d))
            .collect()
    }

    pub fn output_var(&self) -> Option<&str> {
        self.output.var_name()
    }

    pub fn guard_terms(&self) -> Vec<Term> {
        self.guards.iter().map(|g| Term::bool_var(g)).collect()
    }

    /// Checks the single-assignment and definition-before-use invariants.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut defined: HashMap<String, ()> = self.inputs().into_iter().map(|(n, _)| (n, ())).collect();
        let mut last_version: HashMap<&str, u32> = HashMap::new();
        for s in &self.stmts {
            let (uses, def): (Vec<&Term>, Option<String>) = match s {
                SsaStmt::GuardDef { name, cond } => (vec![cond], Some(name.clone())),
                SsaStmt::Assign { var, base, version, value } => {
                    let prev = last_version.insert(base, *version).unwrap_or(0);
                    if *version <= prev {
                        return Err(format!("{var}: version {version} not above {prev}"));
                    }
                    (vec![value], Some(var.clone()))
                }
                SsaStmt::Assume { guard, cond } | SsaStmt::Assert { guard, cond, .. } => (vec![guard, cond], None),
            };
            for t in uses {
                for (n, _) in t.free_vars() {
                    if !defined.contains_key(&n) {
                        return Err(format!("{n} used before definition"));
                    }
                }
            }
            if let Some(d) = def {
                if defined.insert(d.clone(), ()).is_some() {
                    return Err(format!("{d} assigned twice"));
                }
            }
        }
        Ok(())
    }
}

fn binop(op: BinOp) -> Op {
    match op {
        BinOp::LogOr => Op::Or,
        BinOp::LogAnd => Op::And,
        BinOp::BitOr => Op::BvOr,
        BinOp::BitXor => Op::BvXor,
        BinOp::BitAnd => Op::BvAnd,
        BinOp::Eq | BinOp::Ne => Op::Eq,
        BinOp::Lt => Op::BvUlt,
        BinOp::Le => Op::BvUle,
        BinOp::Gt => Op::BvUgt,
        BinOp::Ge => Op::BvUge,
        BinOp::SLt => Op::BvSlt,
        BinOp::SLe => Op::BvSle,
        BinOp::SGt => Op::BvSgt,
        BinOp::SGe => Op::BvSge,
        BinOp::Shl => Op::BvShl,
        BinOp::LShr => Op::BvLshr,
        BinOp::AShr => Op::BvAshr,
        BinOp::Add => Op::BvAdd,
        BinOp::Sub => Op::BvSub,
        BinOp::Mul => Op::BvMul,
        BinOp::Div => Op::BvUdiv,
        BinOp::Rem => Op::BvUrem,
        BinOp::SDiv => Op::BvSdiv,
        BinOp::SRem => Op::BvSrem,
    }
}

/// Operator and index for a cast from width `from` to `to`; `None` when the
/// cast is the identity.
pub(crate) fn cast_op(op: CastOp, from: u32, to: u32) -> Option<Op> {
    if from == to {
        return None;
    }
    Some(match op {
        CastOp::Zext => Op::ZeroExt(to - from),
        CastOp::Sext => Op::SignExt(to - from),
        CastOp::Trunc => Op::Extract(to - 1, 0),
    })
}

pub(crate) fn unop(op: UnOp) -> Op {
    match op {
        UnOp::Not => Op::Not,
        UnOp::BitNot => Op::BvNot,
        UnOp::Neg => Op::BvNeg,
    }
}

pub(crate) fn gcl_binop(op: BinOp) -> Op {
    binop(op)
}

/// Translate a checked expression; `lookup` gives the current term of a
/// variable. With `simplify` the rewriting builders are used.
pub fn translate(e: &Expr, lookup: &dyn Fn(&str) -> Term, simplify: bool) -> Term {
    let build = |op: Op, args: Vec<Term>| -> Term {
        if simplify {
            simplify::mk(op, args).expect("checked program")
        } else {
            Term::app(op, args).expect("checked program")
        }
    };
    match &e.kind {
        ExprKind::Var(n) => lookup(n),
        ExprKind::Int { value, width } => Term::bv_const(*value as u64, *width),
        ExprKind::Bool(b) => Term::bool_const(*b),
        ExprKind::Unary(op, a) => build(unop(*op), vec![translate(a, lookup, simplify)]),
        ExprKind::Binary(op, a, b) => {
            let ta = translate(a, lookup, simplify);
            let tb = translate(b, lookup, simplify);
            let t = build(binop(*op), vec![ta, tb]);
            if *op == BinOp::Ne {
                build(Op::Not, vec![t])
            } else {
                t
            }
        }
        ExprKind::Cast(op, a, w) => {
            let ta = translate(a, lookup, simplify);
            match cast_op(*op, ta.width(), *w) {
                Some(o) => build(o, vec![ta]),
                None => ta,
            }
        }
    }
}

struct Unroller<'a> {
    prog: &'a SourceProgram,
    bound: u32,
    current: HashMap<String, Term>,
    versions: HashMap<String, u32>,
    stmts: Vec<SsaStmt>,
    guards: Vec<String>,
}

impl Unroller<'_> {
    fn lookup(&self, name: &str) -> Term {
        self.current[name].clone()
    }

    fn expr(&self, e: &Expr) -> Term {
        translate(e, &|n| self.lookup(n), false)
    }

    fn block(&mut self, body: &[Stmt], guard: &[Term]) {
        for s in body {
            self.stmt(s, guard);
        }
    }

    fn guard_term(guard: &[Term]) -> Term {
        Term::and(guard.to_vec())
    }

    fn branch(&mut self, cond: &Expr) -> Term {
        let name = guard_name(self.guards.len());
        let c = self.expr(cond);
        self.stmts.push(SsaStmt::GuardDef { name: name.clone(), cond: c });
        self.guards.push(name.clone());
        Term::bool_var(&name)
    }

    fn stmt(&mut self, s: &Stmt, guard: &[Term]) {
        match s {
            Stmt::Assign { var, value, .. } => {
                let v = self.expr(value);
                let new_value = if guard.is_empty() {
                    v
                } else {
                    Term::ite(Self::guard_term(guard), v, self.lookup(var))
                };
                let k = self.versions.get(var).copied().unwrap_or(0) + 1;
                self.versions.insert(var.clone(), k);
                let name = super::version_name(var, k);
                let width = self.prog.decl(var).unwrap().width;
                self.stmts.push(SsaStmt::Assign { var: name.clone(), base: var.clone(), version: k, value: new_value });
                self.current.insert(var.clone(), Term::bv_var(&name, width));
            }
            Stmt::Assume { cond, .. } => {
                let c = self.expr(cond);
                self.stmts.push(SsaStmt::Assume { guard: Self::guard_term(guard), cond: c });
            }
            Stmt::Assert { cond, pos } => {
                let c = self.expr(cond);
                self.stmts.push(SsaStmt::Assert { guard: Self::guard_term(guard), cond: c, pos: *pos });
            }
            Stmt::If { cond, then_branch, else_branch, .. } => {
                let g = self.branch(cond);
                let mut gt = guard.to_vec();
                gt.push(g.clone());
                self.block(then_branch, &gt);
                if !else_branch.is_empty() {
                    let mut ge = guard.to_vec();
                    ge.push(Term::not(g));
                    self.block(else_branch, &ge);
                }
            }
            Stmt::While { cond, body, .. } => {
                let mut inner = guard.to_vec();
                for _ in 0..self.bound {
                    let g = self.branch(cond);
                    inner.push(g);
                    self.block(body, &inner);
                }
                // Runs needing more iterations are excluded, not flagged.
                let c = self.expr(cond);
                self.stmts.push(SsaStmt::Assume { guard: Self::guard_term(guard), cond: Term::not(c) });
            }
        }
    }
}

pub fn unroll(p: &SourceProgram, bound: u32) -> Result<SsaProgram, GclError> {
    if bound == 0 {
        return Err(GclError::Bound);
    }
    let mut current = HashMap::new();
    for d in &p.decls {
        let t = if d.kind.is_input() {
            Term::bv_var(&super::version_name(&d.name, 0), d.width)
        } else {
            Term::bv_const(0, d.width)
        };
        current.insert(d.name.clone(), t);
    }
    let mut u = Unroller {
        prog: p,
        bound,
        current,
        versions: HashMap::new(),
        stmts: Vec::new(),
        guards: Vec::new(),
    };
    u.block(&p.body, &[]);
    let out = p.output();
    debug_assert_eq!(out.kind, VarKind::Output);
    Ok(SsaProgram {
        output: u.lookup(&out.name),
        output_width: out.width,
        stmts: u.stmts,
        decls: p.decls.clone(),
        guards: u.guards,
    })
}
