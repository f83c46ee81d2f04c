//! The guarded-command language: syntax tree, parser, printer, reference
//! interpreter and bounded SSA unrolling.
//!
//! ```text
//! high int32 H;
//! local int32 L;
//! output int32 O;
//! L = 8;
//! if (H < 16) O = H + L; else O = L;
//! ```

mod check;
mod interp;
mod parse;
mod print;
mod ssa;

use std::fmt;

use thiserror::Error;

pub use interp::{interpret, interpret_ssa, Outcome};
pub use parse::parse;
pub use print::print;
pub use ssa::{translate, unroll, SsaProgram, SsaStmt};

#[derive(Clone, Copy, Debug, Default, Eq, Hash)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

/// Positions are diagnostics only and never distinguish two trees.
impl PartialEq for Pos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    High,
    Low,
    Nondet,
    Local,
    Output,
}

impl VarKind {
    pub fn keyword(self) -> &'static str {
        match self {
            VarKind::High => "high",
            VarKind::Low => "low",
            VarKind::Nondet => "nondet",
            VarKind::Local => "local",
            VarKind::Output => "output",
        }
    }

    pub fn is_input(self) -> bool {
        matches!(self, VarKind::High | VarKind::Low | VarKind::Nondet)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decl {
    pub name: String,
    pub kind: VarKind,
    pub width: u32,
    pub pos: Pos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    BitNot,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    LogOr,
    LogAnd,
    BitOr,
    BitXor,
    BitAnd,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    SLt,
    SLe,
    SGt,
    SGe,
    Shl,
    LShr,
    AShr,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    SDiv,
    SRem,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::LogOr => "||",
            BinOp::LogAnd => "&&",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
            BinOp::BitAnd => "&",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::SLt => "<s",
            BinOp::SLe => "<=s",
            BinOp::SGt => ">s",
            BinOp::SGe => ">=s",
            BinOp::Shl => "<<",
            BinOp::LShr => ">>",
            BinOp::AShr => ">>s",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::SDiv => "/s",
            BinOp::SRem => "%s",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::LogOr => 1,
            BinOp::LogAnd => 2,
            BinOp::BitOr => 3,
            BinOp::BitXor => 4,
            BinOp::BitAnd => 5,
            BinOp::Eq | BinOp::Ne => 6,
            BinOp::Lt
            | BinOp::Le
            | BinOp::Gt
            | BinOp::Ge
            | BinOp::SLt
            | BinOp::SLe
            | BinOp::SGt
            | BinOp::SGe => 7,
            BinOp::Shl | BinOp::LShr | BinOp::AShr => 8,
            BinOp::Add | BinOp::Sub => 9,
            BinOp::Mul | BinOp::Div | BinOp::Rem | BinOp::SDiv | BinOp::SRem => 10,
        }
    }

    pub fn is_compare(self) -> bool {
        self.precedence() == 7
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CastOp {
    Zext,
    Sext,
    Trunc,
}

impl CastOp {
    pub fn name(self) -> &'static str {
        match self {
            CastOp::Zext => "zext",
            CastOp::Sext => "sext",
            CastOp::Trunc => "trunc",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ty {
    Bool,
    Int(u32),
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Bool => write!(f, "bool"),
            Ty::Int(w) => write!(f, "int{w}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Var(String),
    /// `width` is 0 until the checker infers it from context; `value` is
    /// the two's-complement bit pattern afterwards.
    Int { value: i128, width: u32 },
    Bool(bool),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Cast(CastOp, Box<Expr>, u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Assign { var: String, value: Expr, pos: Pos },
    Assume { cond: Expr, pos: Pos },
    Assert { cond: Expr, pos: Pos },
    If { cond: Expr, then_branch: Vec<Stmt>, else_branch: Vec<Stmt>, pos: Pos },
    While { cond: Expr, body: Vec<Stmt>, pos: Pos },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceProgram {
    pub decls: Vec<Decl>,
    pub body: Vec<Stmt>,
}

impl SourceProgram {
    pub fn decl(&self, name: &str) -> Option<&Decl> {
        self.decls.iter().find(|d| d.name == name)
    }

    pub fn output(&self) -> &Decl {
        self.decls
            .iter()
            .find(|d| d.kind == VarKind::Output)
            .expect("checked programs have one output")
    }

    pub fn inputs(&self) -> impl Iterator<Item = &Decl> {
        self.decls.iter().filter(|d| d.kind.is_input())
    }

    pub fn input_bits(&self) -> u32 {
        self.inputs().map(|d| d.width).sum()
    }

    /// Append `assert(false)` at the end of the body.
    pub fn with_final_failure(&self) -> SourceProgram {
        let mut p = self.clone();
        p.body.push(Stmt::Assert {
            cond: Expr { kind: ExprKind::Bool(false), pos: Pos::default() },
            pos: Pos::default(),
        });
        p
    }

    pub fn has_assertions(&self) -> bool {
        fn any(stmts: &[Stmt]) -> bool {
            stmts.iter().any(|s| match s {
                Stmt::Assert { .. } => true,
                Stmt::If { then_branch, else_branch, .. } => any(then_branch) || any(else_branch),
                Stmt::While { body, .. } => any(body),
                _ => false,
            })
        }
        any(&self.body)
    }
}

/// Name of the SSA version `k` of variable `base`.
pub fn version_name(base: &str, k: u32) -> String {
    format!("{base}_{k}")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GclError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: width error: {msg}")]
    Width { pos: Pos, msg: String },
    #[error("{pos}: type error: {msg}")]
    Type { pos: Pos, msg: String },
    #[error("{pos}: undeclared variable {name}")]
    Undeclared { pos: Pos, name: String },
    #[error("{pos}: {msg}")]
    Decl { pos: Pos, msg: String },
    #[error("unroll bound must be at least 1")]
    Bound,
}

impl GclError {
    pub fn pos(&self) -> Option<Pos> {
        match self {
            GclError::Syntax { pos, .. }
            | GclError::Width { pos, .. }
            | GclError::Type { pos, .. }
            | GclError::Undeclared { pos, .. }
            | GclError::Decl { pos, .. } => Some(*pos),
            GclError::Bound => None,
        }
    }

    /// `file:line:col: message` rendering for command-line diagnostics.
    pub fn render(&self, file: &str) -> String {
        match self {
            GclError::Syntax { pos, msg } => format!("{file}:{pos}: syntax error: {msg}"),
            GclError::Width { pos, msg } => format!("{file}:{pos}: width error: {msg}"),
            GclError::Type { pos, msg } => format!("{file}:{pos}: type error: {msg}"),
            GclError::Undeclared { pos, name } => format!("{file}:{pos}: undeclared variable {name}"),
            GclError::Decl { pos, msg } => format!("{file}:{pos}: {msg}"),
            GclError::Bound => format!("{file}: unroll bound must be at least 1"),
        }
    }
}
