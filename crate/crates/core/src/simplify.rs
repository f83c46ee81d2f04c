//! Rewriting builders: constant folding plus a few algebraic identities.
//! Every rewrite preserves the concrete semantics of [`crate::eval`].

use std::collections::HashMap;

use crate::eval::{apply, Value};
use crate::term::{mask, Kind, Op, SortError, Term};

fn const_value(t: &Term) -> Option<Value> {
    match t.kind() {
        Kind::Bool(b) => Some(Value::Bool(*b)),
        Kind::Bv(v) => Some(Value::bv(*v, t.width())),
        _ => None,
    }
}

fn is_bv(t: &Term, v: u64) -> bool {
    t.as_bv() == Some(v & mask(t.width()))
}

fn is_ones(t: &Term) -> bool {
    t.as_bv() == Some(mask(t.width()))
}

fn is_not_of(a: &Term, b: &Term) -> bool {
    (a.op() == Some(Op::Not) && &a.args()[0] == b) || (b.op() == Some(Op::Not) && &b.args()[0] == a)
}

/// Build `op(args)` with simplification.
pub fn mk(op: Op, args: Vec<Term>) -> Result<Term, SortError> {
    // Sort-check first so rewrites never hide ill-sorted input.
    let plain = Term::app(op, args)?;
    Ok(rewrite(plain))
}

pub fn not(a: Term) -> Term {
    mk(Op::Not, vec![a]).expect("Bool argument")
}

pub fn and(args: Vec<Term>) -> Term {
    if args.len() < 2 {
        return rewrite(Term::and(args));
    }
    mk(Op::And, args).expect("Bool arguments")
}

pub fn or(args: Vec<Term>) -> Term {
    if args.len() < 2 {
        return rewrite(Term::or(args));
    }
    mk(Op::Or, args).expect("Bool arguments")
}

pub fn ite(c: Term, t: Term, e: Term) -> Term {
    mk(Op::Ite, vec![c, t, e]).expect("well-sorted ite")
}

pub fn eq(a: Term, b: Term) -> Term {
    mk(Op::Eq, vec![a, b]).expect("equal sorts")
}

fn rewrite(t: Term) -> Term {
    let (op, args) = match t.kind() {
        Kind::App(op, args) => (*op, args.clone()),
        _ => return t,
    };
    if let Some(vals) = args.iter().map(const_value).collect::<Option<Vec<_>>>() {
        return apply(op, &vals).to_term();
    }
    if op == Op::Ite {
        if let Some(c) = args[0].as_bool() {
            return if c { args[1].clone() } else { args[2].clone() };
        }
    }
    match op {
        Op::Not => {
            if args[0].op() == Some(Op::Not) {
                return args[0].args()[0].clone();
            }
            t
        }
        Op::And | Op::Or => {
            let unit = op == Op::And;
            let mut flat: Vec<Term> = Vec::new();
            for a in args {
                let parts: Vec<Term> = if a.op() == Some(op) { a.args().to_vec() } else { vec![a] };
                for p in parts {
                    match p.as_bool() {
                        Some(b) if b == unit => {}
                        Some(_) => return Term::bool_const(!unit),
                        None => {
                            if !flat.contains(&p) {
                                flat.push(p);
                            }
                        }
                    }
                }
            }
            for i in 0..flat.len() {
                for j in i + 1..flat.len() {
                    if is_not_of(&flat[i], &flat[j]) {
                        return Term::bool_const(!unit);
                    }
                }
            }
            match flat.len() {
                0 => Term::bool_const(unit),
                1 => flat.pop().unwrap(),
                _ => Term::app(op, flat).unwrap(),
            }
        }
        Op::Implies => {
            let (a, b) = (&args[0], &args[1]);
            match (a.as_bool(), b.as_bool()) {
                (Some(false), _) | (_, Some(true)) => Term::tt(),
                (Some(true), _) => b.clone(),
                (_, Some(false)) => not(a.clone()),
                _ if a == b => Term::tt(),
                _ => t,
            }
        }
        Op::Eq => {
            if args[0] == args[1] {
                return Term::tt();
            }
            if args[0].is_bool() {
                match (args[0].as_bool(), args[1].as_bool()) {
                    (Some(true), _) => return args[1].clone(),
                    (_, Some(true)) => return args[0].clone(),
                    (Some(false), _) => return not(args[1].clone()),
                    (_, Some(false)) => return not(args[0].clone()),
                    _ => {}
                }
            }
            t
        }
        Op::Ite => {
            let (c, a, b) = (&args[0], &args[1], &args[2]);
            if a == b {
                return a.clone();
            }
            if a.is_bool() {
                match (a.as_bool(), b.as_bool()) {
                    (Some(true), Some(false)) => return c.clone(),
                    (Some(false), Some(true)) => return not(c.clone()),
                    _ => {}
                }
            }
            t
        }
        Op::BvAdd => {
            let (a, b) = (&args[0], &args[1]);
            if is_bv(b, 0) {
                return a.clone();
            }
            if is_bv(a, 0) {
                return b.clone();
            }
            // (x ± c1) + c2
            if let Some(c2) = b.as_bv() {
                if let Some((x, c1)) = offset_of(a) {
                    return add_offset(x, c1.wrapping_add(c2));
                }
            }
            t
        }
        Op::BvSub => {
            let (a, b) = (&args[0], &args[1]);
            if a == b {
                return Term::bv_const(0, a.width());
            }
            if is_bv(b, 0) {
                return a.clone();
            }
            if let Some(c2) = b.as_bv() {
                if let Some((x, c1)) = offset_of(a) {
                    return add_offset(x, c1.wrapping_sub(c2));
                }
            }
            t
        }
        Op::BvXor => {
            let (a, b) = (&args[0], &args[1]);
            if a == b {
                return Term::bv_const(0, a.width());
            }
            if is_bv(b, 0) {
                return a.clone();
            }
            if is_bv(a, 0) {
                return b.clone();
            }
            t
        }
        Op::BvMul => {
            let (a, b) = (&args[0], &args[1]);
            if is_bv(a, 0) || is_bv(b, 0) {
                return Term::bv_const(0, a.width());
            }
            if is_bv(b, 1) {
                return a.clone();
            }
            if is_bv(a, 1) {
                return b.clone();
            }
            t
        }
        Op::BvAnd => {
            let (a, b) = (&args[0], &args[1]);
            if is_bv(a, 0) || is_bv(b, 0) {
                return Term::bv_const(0, a.width());
            }
            if is_ones(b) || a == b {
                return a.clone();
            }
            if is_ones(a) {
                return b.clone();
            }
            t
        }
        Op::BvOr => {
            let (a, b) = (&args[0], &args[1]);
            if is_bv(b, 0) || a == b {
                return a.clone();
            }
            if is_bv(a, 0) {
                return b.clone();
            }
            if is_ones(a) || is_ones(b) {
                return Term::bv_const(u64::MAX, a.width());
            }
            t
        }
        Op::BvShl | Op::BvLshr | Op::BvAshr => {
            if is_bv(&args[1], 0) {
                return args[0].clone();
            }
            t
        }
        Op::BvNot | Op::BvNeg => {
            if args[0].op() == Some(op) {
                return args[0].args()[0].clone();
            }
            t
        }
        Op::Extract(hi, lo) => {
            if lo == 0 && hi + 1 == args[0].width() {
                return args[0].clone();
            }
            t
        }
        _ => t,
    }
}

/// View `t` as `x + c` for a constant `c` (wrapping).
fn offset_of(t: &Term) -> Option<(Term, u64)> {
    match t.op() {
        Some(Op::BvAdd) => t.args()[1].as_bv().map(|c| (t.args()[0].clone(), c)),
        Some(Op::BvSub) => t.args()[1]
            .as_bv()
            .map(|c| (t.args()[0].clone(), c.wrapping_neg())),
        _ => None,
    }
}

fn add_offset(x: Term, c: u64) -> Term {
    let w = x.width();
    let c = c & mask(w);
    if c == 0 {
        x
    } else {
        Term::bin(Op::BvAdd, x, Term::bv_const(c, w))
    }
}

/// Simplify a whole term bottom-up.
pub fn simplify(t: &Term) -> Term {
    let mut memo = HashMap::new();
    simp_rec(t, &mut memo)
}

fn simp_rec(t: &Term, memo: &mut HashMap<usize, Term>) -> Term {
    if let Some(r) = memo.get(&t.id()) {
        return r.clone();
    }
    let r = match t.kind() {
        Kind::App(op, args) => {
            let new: Vec<Term> = args.iter().map(|a| simp_rec(a, memo)).collect();
            rewrite(Term::app(*op, new).expect("sorts preserved"))
        }
        _ => t.clone(),
    };
    memo.insert(t.id(), r.clone());
    r
}
