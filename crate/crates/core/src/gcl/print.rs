use std::fmt::Write as _;

use super::{Expr, ExprKind, SourceProgram, Stmt, UnOp};

fn expr(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Var(n) => out.push_str(n),
        ExprKind::Int { value, .. } => {
            let _ = write!(out, "{value}");
        }
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Unary(op, a) => {
            out.push(match op {
                UnOp::Not => '!',
                UnOp::BitNot => '~',
                UnOp::Neg => '-',
            });
            atom(a, out);
        }
        ExprKind::Binary(op, a, b) => {
            let p = op.precedence();
            child(a, p, false, out);
            let _ = write!(out, " {} ", op.symbol());
            child(b, p, true, out);
        }
        ExprKind::Cast(op, a, w) => {
            let _ = write!(out, "{}(", op.name());
            expr(a, out);
            let _ = write!(out, ", {w})");
        }
    }
}

fn atom(e: &Expr, out: &mut String) {
    if matches!(e.kind, ExprKind::Binary(..) | ExprKind::Unary(..)) {
        out.push('(');
        expr(e, out);
        out.push(')');
    } else {
        expr(e, out);
    }
}

fn child(e: &Expr, parent: u8, right: bool, out: &mut String) {
    let needs = match &e.kind {
        ExprKind::Binary(op, ..) => op.precedence() < parent || (right && op.precedence() == parent),
        _ => false,
    };
    if needs {
        out.push('(');
        expr(e, out);
        out.push(')');
    } else {
        expr(e, out);
    }
}

fn stmts(body: &[Stmt], indent: usize, out: &mut String) {
    for s in body {
        stmt(s, indent, out);
    }
}

fn stmt(s: &Stmt, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match s {
        Stmt::Assign { var, value, .. } => {
            let _ = write!(out, "{pad}{var} = ");
            expr(value, out);
            out.push_str(";\n");
        }
        Stmt::Assume { cond, .. } | Stmt::Assert { cond, .. } => {
            let kw = if matches!(s, Stmt::Assume { .. }) { "assume" } else { "assert" };
            let _ = write!(out, "{pad}{kw}(");
            expr(cond, out);
            out.push_str(");\n");
        }
        Stmt::If { cond, then_branch, else_branch, .. } => {
            let _ = write!(out, "{pad}if (");
            expr(cond, out);
            out.push_str(") {\n");
            stmts(then_branch, indent + 1, out);
            if else_branch.is_empty() {
                let _ = writeln!(out, "{pad}}}");
            } else {
                let _ = writeln!(out, "{pad}}} else {{");
                stmts(else_branch, indent + 1, out);
                let _ = writeln!(out, "{pad}}}");
            }
        }
        Stmt::While { cond, body, .. } => {
            let _ = write!(out, "{pad}while (");
            expr(cond, out);
            out.push_str(") {\n");
            stmts(body, indent + 1, out);
            let _ = writeln!(out, "{pad}}}");
        }
    }
}

/// Canonical source text; `parse(print(p)) == p` for checked programs.
pub fn print(p: &SourceProgram) -> String {
    let mut out = String::new();
    for d in &p.decls {
        let _ = writeln!(out, "{} int{} {};", d.kind.keyword(), d.width, d.name);
    }
    if !p.decls.is_empty() && !p.body.is_empty() {
        out.push('\n');
    }
    stmts(&p.body, 0, &mut out);
    out
}
