//! Reference interpreters for source programs and their SSA form. Tests use
//! them as the ground truth for every symbolic layer.

use std::collections::HashMap;

use super::ssa::{cast_op, gcl_binop, unop};
use super::{BinOp, Expr, ExprKind, Pos, SourceProgram, SsaProgram, SsaStmt, Stmt};
use crate::eval::{self, apply, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    /// Final output bits (meaningful only when `feasible`).
    pub output: u64,
    /// False when an assume, or the loop bound, excluded the run.
    pub feasible: bool,
    pub failed_asserts: Vec<Pos>,
}

fn eval_expr(e: &Expr, env: &HashMap<String, Value>) -> Value {
    match &e.kind {
        ExprKind::Var(n) => env[n.as_str()],
        ExprKind::Int { value, width } => Value::bv(*value as u64, *width),
        ExprKind::Bool(b) => Value::Bool(*b),
        ExprKind::Unary(op, a) => apply(unop(*op), &[eval_expr(a, env)]),
        ExprKind::Binary(op, a, b) => {
            if *op == BinOp::LogAnd || *op == BinOp::LogOr {
                let l = eval_expr(a, env).as_bool();
                return Value::Bool(if *op == BinOp::LogAnd {
                    l && eval_expr(b, env).as_bool()
                } else {
                    l || eval_expr(b, env).as_bool()
                });
            }
            let v = apply(gcl_binop(*op), &[eval_expr(a, env), eval_expr(b, env)]);
            if *op == BinOp::Ne {
                Value::Bool(!v.as_bool())
            } else {
                v
            }
        }
        ExprKind::Cast(op, a, w) => {
            let v = eval_expr(a, env);
            let from = v.sort().width().unwrap();
            match cast_op(*op, from, *w) {
                Some(o) => apply(o, &[v]),
                None => v,
            }
        }
    }
}

enum Flow {
    Continue,
    Stop,
}

struct Run {
    env: HashMap<String, Value>,
    bound: u32,
    failed: Vec<Pos>,
    feasible: bool,
}

impl Run {
    fn block(&mut self, body: &[Stmt]) -> Flow {
        for s in body {
            if let Flow::Stop = self.stmt(s) {
                return Flow::Stop;
            }
        }
        Flow::Continue
    }

    fn stmt(&mut self, s: &Stmt) -> Flow {
        match s {
            Stmt::Assign { var, value, .. } => {
                let v = eval_expr(value, &self.env);
                self.env.insert(var.clone(), v);
                Flow::Continue
            }
            Stmt::Assume { cond, .. } => {
                if eval_expr(cond, &self.env).as_bool() {
                    Flow::Continue
                } else {
                    self.feasible = false;
                    Flow::Stop
                }
            }
            Stmt::Assert { cond, pos } => {
                if !eval_expr(cond, &self.env).as_bool() {
                    self.failed.push(*pos);
                }
                Flow::Continue
            }
            Stmt::If { cond, then_branch, else_branch, .. } => {
                if eval_expr(cond, &self.env).as_bool() {
                    self.block(then_branch)
                } else {
                    self.block(else_branch)
                }
            }
            Stmt::While { cond, body, .. } => {
                let mut n = 0;
                while eval_expr(cond, &self.env).as_bool() {
                    if n == self.bound {
                        self.feasible = false;
                        return Flow::Stop;
                    }
                    if let Flow::Stop = self.block(body) {
                        return Flow::Stop;
                    }
                    n += 1;
                }
                Flow::Continue
            }
        }
    }
}

/// Run `p` on the given input values (by declared name; missing inputs are
/// zero), with at most `bound` iterations per loop entry.
pub fn interpret(p: &SourceProgram, inputs: &HashMap<String, u64>, bound: u32) -> Outcome {
    let env = p
        .decls
        .iter()
        .map(|d| {
            let v = if d.kind.is_input() { inputs.get(&d.name).copied().unwrap_or(0) } else { 0 };
            (d.name.clone(), Value::bv(v, d.width))
        })
        .collect();
    let mut run = Run { env, bound, failed: Vec::new(), feasible: true };
    run.block(&p.body);
    let out = p.output();
    Outcome { output: run.env[&out.name].bits(), feasible: run.feasible, failed_asserts: run.failed }
}

/// Evaluate an SSA program statement by statement.
pub fn interpret_ssa(p: &SsaProgram, inputs: &HashMap<String, u64>) -> Outcome {
    let mut env: eval::Env = HashMap::new();
    for (name, d) in p.inputs() {
        env.insert(name, Value::bv(inputs.get(&d.name).copied().unwrap_or(0), d.width));
    }
    let mut feasible = true;
    let mut failed = Vec::new();
    for s in &p.stmts {
        match s {
            SsaStmt::GuardDef { name, cond } => {
                let v = eval::eval(cond, &env).expect("defined before use");
                env.insert(name.clone(), v);
            }
            SsaStmt::Assign { var, value, .. } => {
                let v = eval::eval(value, &env).expect("defined before use");
                env.insert(var.clone(), v);
            }
            SsaStmt::Assume { guard, cond } => {
                if eval::eval(guard, &env).unwrap().as_bool() && !eval::eval(cond, &env).unwrap().as_bool() {
                    feasible = false;
                }
            }
            SsaStmt::Assert { guard, cond, pos } => {
                if feasible
                    && eval::eval(guard, &env).unwrap().as_bool()
                    && !eval::eval(cond, &env).unwrap().as_bool()
                {
                    failed.push(*pos);
                }
            }
        }
    }
    let output = eval::eval(&p.output, &env).unwrap().bits();
    Outcome { output, feasible, failed_asserts: failed }
}
