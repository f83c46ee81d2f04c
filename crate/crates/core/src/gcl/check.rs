//! Declaration, type and width checking. Integer literals take their width
//! from the surrounding expression.

use std::collections::HashMap;

use super::{BinOp, CastOp, Expr, ExprKind, GclError, Pos, SourceProgram, Stmt, Ty, UnOp, VarKind};

struct Checker {
    vars: HashMap<String, (VarKind, u32)>,
}

fn type_err<T>(pos: Pos, msg: impl Into<String>) -> Result<T, GclError> {
    Err(GclError::Type { pos, msg: msg.into() })
}

fn width_err<T>(pos: Pos, msg: impl Into<String>) -> Result<T, GclError> {
    Err(GclError::Width { pos, msg: msg.into() })
}

fn literal_fits(v: i128, w: u32) -> bool {
    let max = (1i128 << w) - 1;
    let min = -(1i128 << (w - 1));
    v >= min && v <= max
}

impl Checker {
    /// Type of `e`, or `None` for a width-polymorphic literal expression.
    fn synth(&self, e: &mut Expr) -> Result<Option<Ty>, GclError> {
        let pos = e.pos;
        match &mut e.kind {
            ExprKind::Var(name) => match self.vars.get(name.as_str()) {
                Some((_, w)) => Ok(Some(Ty::Int(*w))),
                None => Err(GclError::Undeclared { pos, name: name.clone() }),
            },
            ExprKind::Int { width, .. } => Ok(if *width == 0 { None } else { Some(Ty::Int(*width)) }),
            ExprKind::Bool(_) => Ok(Some(Ty::Bool)),
            ExprKind::Unary(UnOp::Not, a) => {
                self.expect_bool(a)?;
                Ok(Some(Ty::Bool))
            }
            ExprKind::Unary(_, a) => match self.synth(a)? {
                Some(Ty::Bool) => type_err(pos, "bitwise operator applied to a condition"),
                t => Ok(t),
            },
            ExprKind::Binary(op, a, b) => {
                let op = *op;
                if matches!(op, BinOp::LogAnd | BinOp::LogOr) {
                    self.expect_bool(a)?;
                    self.expect_bool(b)?;
                    return Ok(Some(Ty::Bool));
                }
                let ta = self.synth(a)?;
                let tb = self.synth(b)?;
                let operand = match (ta, tb) {
                    (Some(x), Some(y)) => {
                        if x != y {
                            return if x == Ty::Bool || y == Ty::Bool {
                                type_err(pos, format!("operands of '{}' have types {x} and {y}", op.symbol()))
                            } else {
                                width_err(
                                    pos,
                                    format!("operands of '{}' have widths {x} and {y}; add an explicit cast", op.symbol()),
                                )
                            };
                        }
                        Some(x)
                    }
                    (Some(x), None) => {
                        self.resolve(b, x)?;
                        Some(x)
                    }
                    (None, Some(y)) => {
                        self.resolve(a, y)?;
                        Some(y)
                    }
                    (None, None) => None,
                };
                let is_eq = matches!(op, BinOp::Eq | BinOp::Ne);
                if op.is_compare() || is_eq {
                    match operand {
                        None => width_err(pos, format!("cannot infer operand width of '{}'", op.symbol())),
                        Some(Ty::Bool) if !is_eq => type_err(pos, format!("'{}' needs integer operands", op.symbol())),
                        _ => Ok(Some(Ty::Bool)),
                    }
                } else if operand == Some(Ty::Bool) {
                    type_err(pos, format!("'{}' needs integer operands", op.symbol()))
                } else {
                    Ok(operand)
                }
            }
            ExprKind::Cast(op, a, target) => {
                let (op, target) = (*op, *target);
                let w = match self.synth(a)? {
                    Some(Ty::Int(w)) => w,
                    Some(Ty::Bool) => return type_err(pos, format!("{} of a condition", op.name())),
                    None => return width_err(pos, format!("cannot infer operand width of {}", op.name())),
                };
                match op {
                    CastOp::Zext | CastOp::Sext if target < w => {
                        width_err(pos, format!("{} to {target} bits narrows a {w}-bit value", op.name()))
                    }
                    CastOp::Trunc if target > w => {
                        width_err(pos, format!("trunc to {target} bits widens a {w}-bit value"))
                    }
                    _ => Ok(Some(Ty::Int(target))),
                }
            }
        }
    }

    /// Push a width into a polymorphic literal expression.
    fn resolve(&self, e: &mut Expr, ty: Ty) -> Result<(), GclError> {
        let pos = e.pos;
        let w = match ty {
            Ty::Int(w) => w,
            Ty::Bool => return type_err(pos, "integer used as a condition"),
        };
        match &mut e.kind {
            ExprKind::Int { value, width } => {
                if *width != 0 {
                    return if *width == w { Ok(()) } else { width_err(pos, "literal width mismatch") };
                }
                if !literal_fits(*value, w) {
                    return width_err(pos, format!("literal {value} does not fit in {w} bits"));
                }
                let mask = if w == 64 { u64::MAX as i128 } else { (1i128 << w) - 1 };
                *value &= mask;
                *width = w;
                Ok(())
            }
            ExprKind::Unary(_, a) => self.resolve(a, ty),
            ExprKind::Binary(_, a, b) => {
                self.resolve(a, ty)?;
                self.resolve(b, ty)
            }
            _ => match self.synth(e)? {
                Some(t) if t == ty => Ok(()),
                Some(t) => width_err(pos, format!("expected {ty}, found {t}")),
                None => unreachable!("only literal expressions are polymorphic"),
            },
        }
    }

    fn expect_int(&self, e: &mut Expr, w: u32) -> Result<(), GclError> {
        match self.synth(e)? {
            None => self.resolve(e, Ty::Int(w)),
            Some(Ty::Int(v)) if v == w => Ok(()),
            Some(Ty::Int(v)) => width_err(e.pos, format!("expected int{w}, found int{v}; add an explicit cast")),
            Some(Ty::Bool) => type_err(e.pos, "condition assigned to an integer variable"),
        }
    }

    fn expect_bool(&self, e: &mut Expr) -> Result<(), GclError> {
        match self.synth(e)? {
            Some(Ty::Bool) => Ok(()),
            _ => type_err(e.pos, "expected a condition; compare explicitly, e.g. `x != 0`"),
        }
    }

    fn stmts(&self, body: &mut [Stmt]) -> Result<(), GclError> {
        for s in body {
            match s {
                Stmt::Assign { var, value, pos } => {
                    let w = match self.vars.get(var.as_str()) {
                        Some((_, w)) => *w,
                        None => return Err(GclError::Undeclared { pos: *pos, name: var.clone() }),
                    };
                    self.expect_int(value, w)?;
                }
                Stmt::Assume { cond, .. } | Stmt::Assert { cond, .. } => self.expect_bool(cond)?,
                Stmt::If { cond, then_branch, else_branch, .. } => {
                    self.expect_bool(cond)?;
                    self.stmts(then_branch)?;
                    self.stmts(else_branch)?;
                }
                Stmt::While { cond, body, .. } => {
                    self.expect_bool(cond)?;
                    self.stmts(body)?;
                }
            }
        }
        Ok(())
    }
}

pub(super) fn check(p: &mut SourceProgram) -> Result<(), GclError> {
    let mut vars = HashMap::new();
    for d in &p.decls {
        if vars.insert(d.name.clone(), (d.kind, d.width)).is_some() {
            return Err(GclError::Decl { pos: d.pos, msg: format!("variable {} declared twice", d.name) });
        }
    }
    let outputs: Vec<_> = p.decls.iter().filter(|d| d.kind == VarKind::Output).collect();
    match outputs.len() {
        1 => {}
        0 => return Err(GclError::Decl { pos: Pos { line: 1, col: 1 }, msg: "no output variable declared".into() }),
        _ => {
            return Err(GclError::Decl {
                pos: outputs[1].pos,
                msg: format!("second output variable {}", outputs[1].name),
            })
        }
    }
    let c = Checker { vars };
    c.stmts(&mut p.body)
}
