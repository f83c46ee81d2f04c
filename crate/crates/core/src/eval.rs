//! Concrete semantics of terms. This is the reference every other layer
//! (bit-blaster, interpreter, simplifier) is tested against.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::term::{mask, Kind, Op, Sort, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Bv { width: u32, bits: u64 },
}

impl Value {
    pub fn bv(bits: u64, width: u32) -> Value {
        Value::Bv { width, bits: bits & mask(width) }
    }

    pub fn as_bool(self) -> bool {
        match self {
            Value::Bool(b) => b,
            Value::Bv { .. } => panic!("expected Bool value"),
        }
    }

    pub fn bits(self) -> u64 {
        match self {
            Value::Bv { bits, .. } => bits,
            Value::Bool(b) => b as u64,
        }
    }

    pub fn sort(self) -> Sort {
        match self {
            Value::Bool(_) => Sort::Bool,
            Value::Bv { width, .. } => Sort::BitVec(width),
        }
    }

    pub fn to_term(self) -> Term {
        match self {
            Value::Bool(b) => Term::bool_const(b),
            Value::Bv { width, bits } => Term::bv_const(bits, width),
        }
    }

    /// Two's-complement reading of a bit-vector value.
    pub fn signed(self) -> i64 {
        match self {
            Value::Bv { width, bits } => to_signed(bits, width),
            Value::Bool(b) => b as i64,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Bv { bits, .. } => write!(f, "{bits}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable {0}")]
    Unbound(String),
    #[error("variable {name} bound to a value of sort {got}, expected {expected}")]
    SortMismatch { name: String, expected: Sort, got: Sort },
}

pub fn to_signed(bits: u64, width: u32) -> i64 {
    if width >= 64 {
        bits as i64
    } else if bits >> (width - 1) & 1 == 1 {
        (bits | !mask(width)) as i64
    } else {
        bits as i64
    }
}

fn msb(bits: u64, w: u32) -> bool {
    bits >> (w - 1) & 1 == 1
}

pub fn bv_udiv(a: u64, b: u64, w: u32) -> u64 {
    if b == 0 {
        mask(w)
    } else {
        a / b
    }
}

pub fn bv_urem(a: u64, b: u64, _w: u32) -> u64 {
    if b == 0 {
        a
    } else {
        a % b
    }
}

fn neg(a: u64, w: u32) -> u64 {
    a.wrapping_neg() & mask(w)
}

pub fn bv_sdiv(a: u64, b: u64, w: u32) -> u64 {
    let (na, nb) = (msb(a, w), msb(b, w));
    let ua = if na { neg(a, w) } else { a };
    let ub = if nb { neg(b, w) } else { b };
    let q = bv_udiv(ua, ub, w);
    if na != nb {
        neg(q, w)
    } else {
        q
    }
}

pub fn bv_srem(a: u64, b: u64, w: u32) -> u64 {
    let (na, nb) = (msb(a, w), msb(b, w));
    let ua = if na { neg(a, w) } else { a };
    let ub = if nb { neg(b, w) } else { b };
    let r = bv_urem(ua, ub, w);
    if na {
        neg(r, w)
    } else {
        r
    }
}

/// Apply an operator to concrete argument values.
pub fn apply(op: Op, args: &[Value]) -> Value {
    use Value::*;
    let bw = |i: usize| match args[i] {
        Bv { width, bits } => (bits, width),
        Bool(_) => panic!("{op:?}: expected bit-vector argument"),
    };
    match op {
        Op::Not => Bool(!args[0].as_bool()),
        Op::And => Bool(args.iter().all(|a| a.as_bool())),
        Op::Or => Bool(args.iter().any(|a| a.as_bool())),
        Op::Xor => Bool(args.iter().fold(false, |acc, a| acc ^ a.as_bool())),
        Op::Implies => Bool(!args[0].as_bool() || args[1].as_bool()),
        Op::Eq => Bool(args[0] == args[1]),
        Op::Ite => {
            if args[0].as_bool() {
                args[1]
            } else {
                args[2]
            }
        }
        Op::BvNot => {
            let (a, w) = bw(0);
            Value::bv(!a, w)
        }
        Op::BvNeg => {
            let (a, w) = bw(0);
            Value::bv(neg(a, w), w)
        }
        Op::Extract(hi, lo) => {
            let (a, _) = bw(0);
            Value::bv(a >> lo, hi - lo + 1)
        }
        Op::ZeroExt(k) => {
            let (a, w) = bw(0);
            Value::bv(a, w + k)
        }
        Op::SignExt(k) => {
            let (a, w) = bw(0);
            Value::bv(to_signed(a, w) as u64, w + k)
        }
        Op::Concat => {
            let (a, _) = bw(0);
            let (b, wb) = bw(1);
            let w = args[0].sort().width().unwrap() + wb;
            Value::bv(if wb >= 64 { b } else { (a << wb) | b }, w)
        }
        _ => {
            let (a, w) = bw(0);
            let (b, _) = bw(1);
            let sa = to_signed(a, w);
            let sb = to_signed(b, w);
            match op {
                Op::BvAnd => Value::bv(a & b, w),
                Op::BvOr => Value::bv(a | b, w),
                Op::BvXor => Value::bv(a ^ b, w),
                Op::BvAdd => Value::bv(a.wrapping_add(b), w),
                Op::BvSub => Value::bv(a.wrapping_sub(b), w),
                Op::BvMul => Value::bv(a.wrapping_mul(b), w),
                Op::BvUdiv => Value::bv(bv_udiv(a, b, w), w),
                Op::BvUrem => Value::bv(bv_urem(a, b, w), w),
                Op::BvSdiv => Value::bv(bv_sdiv(a, b, w), w),
                Op::BvSrem => Value::bv(bv_srem(a, b, w), w),
                Op::BvShl => Value::bv(if b >= w as u64 { 0 } else { a << b }, w),
                Op::BvLshr => Value::bv(if b >= w as u64 { 0 } else { a >> b }, w),
                Op::BvAshr => {
                    let s = if b >= w as u64 { 63 } else { b as u32 };
                    Value::bv((sa >> s.min(63)) as u64, w)
                }
                Op::BvUlt => Bool(a < b),
                Op::BvUle => Bool(a <= b),
                Op::BvUgt => Bool(a > b),
                Op::BvUge => Bool(a >= b),
                Op::BvSlt => Bool(sa < sb),
                Op::BvSle => Bool(sa <= sb),
                Op::BvSgt => Bool(sa > sb),
                Op::BvSge => Bool(sa >= sb),
                _ => unreachable!(),
            }
        }
    }
}

/// Evaluate `t` under an assignment given as a lookup function.
pub fn eval_with(
    t: &Term,
    lookup: &mut dyn FnMut(&str, Sort) -> Option<Value>,
) -> Result<Value, EvalError> {
    let mut memo: HashMap<usize, Value> = HashMap::new();
    eval_rec(t, lookup, &mut memo)
}

fn eval_rec(
    t: &Term,
    lookup: &mut dyn FnMut(&str, Sort) -> Option<Value>,
    memo: &mut HashMap<usize, Value>,
) -> Result<Value, EvalError> {
    if let Some(v) = memo.get(&t.id()) {
        return Ok(*v);
    }
    let v = match t.kind() {
        Kind::Bool(b) => Value::Bool(*b),
        Kind::Bv(v) => Value::bv(*v, t.width()),
        Kind::Var(n) => {
            let v = lookup(n, t.sort()).ok_or_else(|| EvalError::Unbound(n.to_string()))?;
            if v.sort() != t.sort() {
                return Err(EvalError::SortMismatch {
                    name: n.to_string(),
                    expected: t.sort(),
                    got: v.sort(),
                });
            }
            v
        }
        Kind::App(Op::Ite, args) => {
            // Lazy in the untaken branch so partial assignments still evaluate.
            let c = eval_rec(&args[0], lookup, memo)?.as_bool();
            eval_rec(if c { &args[1] } else { &args[2] }, lookup, memo)?
        }
        Kind::App(op, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval_rec(a, lookup, memo)?);
            }
            apply(*op, &vals)
        }
    };
    memo.insert(t.id(), v);
    Ok(v)
}

pub type Env = HashMap<String, Value>;

pub fn eval(t: &Term, env: &Env) -> Result<Value, EvalError> {
    eval_with(t, &mut |n, _| env.get(n).copied())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(op: Op, x: u64, y: u64, w: u32) -> u64 {
        apply(op, &[Value::bv(x, w), Value::bv(y, w)]).bits()
    }

    #[test]
    fn division_by_zero_conventions() {
        assert_eq!(b(Op::BvUdiv, 7, 0, 4), 15);
        assert_eq!(b(Op::BvUrem, 7, 0, 4), 7);
        // sdiv by zero: -1 for non-negative dividends, 1 for negative ones
        assert_eq!(b(Op::BvSdiv, 3, 0, 4), 15);
        assert_eq!(b(Op::BvSdiv, 0xd, 0, 4), 1);
        assert_eq!(b(Op::BvSrem, 0xd, 0, 4), 0xd);
    }

    #[test]
    fn signed_division_truncates_toward_zero() {
        // -7 / 2 = -3, -7 % 2 = -1 at width 8
        assert_eq!(to_signed(b(Op::BvSdiv, (-7i64) as u64, 2, 8), 8), -3);
        assert_eq!(to_signed(b(Op::BvSrem, (-7i64) as u64, 2, 8), 8), -1);
        assert_eq!(to_signed(b(Op::BvSrem, 7, (-2i64) as u64, 8), 8), 1);
    }

    #[test]
    fn shifts_saturate() {
        assert_eq!(b(Op::BvShl, 1, 8, 8), 0);
        assert_eq!(b(Op::BvLshr, 0x80, 9, 8), 0);
        assert_eq!(b(Op::BvAshr, 0x80, 200, 8), 0xff);
        assert_eq!(b(Op::BvAshr, 0x80, 1, 8), 0xc0);
    }

    #[test]
    fn ite_is_lazy() {
        let t = Term::ite(Term::tt(), Term::bv_const(1, 4), Term::bv_var("unbound", 4));
        assert_eq!(eval(&t, &Env::new()).unwrap(), Value::bv(1, 4));
    }

    #[test]
    fn extension_and_concat() {
        let v = Value::bv(0b1010, 4);
        assert_eq!(apply(Op::SignExt(4), &[v]).bits(), 0xfa);
        assert_eq!(apply(Op::ZeroExt(4), &[v]).bits(), 0x0a);
        assert_eq!(apply(Op::Concat, &[v, Value::bv(1, 2)]).bits(), 0b101001);
    }
}
