use super::check::check;
use super::{BinOp, CastOp, Decl, Expr, ExprKind, GclError, Pos, SourceProgram, Stmt, UnOp, VarKind};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(i128),
    Punct(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Num(n) => format!("number {n}"),
            Tok::Punct(p) => format!("'{p}'"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

// Longest first so that e.g. "<=s" wins over "<=" and "<".
const PUNCT: &[&str] = &[
    ">>s", "<=s", ">=s", "&&", "||", "==", "!=", "<=", ">=", "<<", ">>", "<s", ">s", "/s", "%s",
    "++", "--", "(", ")", "{", "}", ";", "=", "<", ">", "+", "-", "*", "/", "%", "&", "|", "^",
    "~", "!", ",",
];

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, GclError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            let (radix, digits_from) = if c == '0' && i + 1 < chars.len() && matches!(chars[i + 1], 'x' | 'X') {
                (16, i + 2)
            } else if c == '0' && i + 1 < chars.len() && matches!(chars[i + 1], 'b' | 'B') {
                (2, i + 2)
            } else {
                (10, i)
            };
            i = digits_from;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let digits: String = chars[digits_from..i].iter().filter(|c| **c != '_').collect();
            let text: String = chars[start..i].iter().collect();
            let v = i128::from_str_radix(&digits, radix).map_err(|_| GclError::Syntax {
                pos,
                msg: format!("malformed number '{text}'"),
            })?;
            if v > u64::MAX as i128 {
                return Err(GclError::Width { pos, msg: format!("literal {text} exceeds 64 bits") });
            }
            col += i - start;
            out.push((Tok::Num(v), pos));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            col += i - start;
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            continue;
        }
        let rest: String = chars[i..(i + 3).min(chars.len())].iter().collect();
        let mut matched = None;
        for p in PUNCT {
            if rest.starts_with(p) {
                // A trailing 's' only marks a signed operator when it is not
                // the start of an identifier, so `a<size` stays `a < size`.
                if p.ends_with('s') {
                    let after = i + p.chars().count();
                    if after < chars.len() && is_ident_char(chars[after]) {
                        continue;
                    }
                }
                matched = Some(*p);
                break;
            }
        }
        match matched {
            Some(p) => {
                let n = p.chars().count();
                i += n;
                col += n;
                out.push((Tok::Punct(p), pos));
            }
            None => {
                return Err(GclError::Syntax { pos, msg: format!("unexpected character '{c}'") });
            }
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
}

fn binop_of(p: &str) -> Option<BinOp> {
    Some(match p {
        "||" => BinOp::LogOr,
        "&&" => BinOp::LogAnd,
        "|" => BinOp::BitOr,
        "^" => BinOp::BitXor,
        "&" => BinOp::BitAnd,
        "==" => BinOp::Eq,
        "!=" => BinOp::Ne,
        "<" => BinOp::Lt,
        "<=" => BinOp::Le,
        ">" => BinOp::Gt,
        ">=" => BinOp::Ge,
        "<s" => BinOp::SLt,
        "<=s" => BinOp::SLe,
        ">s" => BinOp::SGt,
        ">=s" => BinOp::SGe,
        "<<" => BinOp::Shl,
        ">>" => BinOp::LShr,
        ">>s" => BinOp::AShr,
        "+" => BinOp::Add,
        "-" => BinOp::Sub,
        "*" => BinOp::Mul,
        "/" => BinOp::Div,
        "%" => BinOp::Rem,
        "/s" => BinOp::SDiv,
        "%s" => BinOp::SRem,
        _ => return None,
    })
}

const KEYWORDS: &[&str] = &[
    "high", "low", "nondet", "local", "output", "if", "else", "while", "assume", "assert", "true",
    "false", "zext", "sext", "trunc",
];

fn decl_kind(s: &str) -> Option<VarKind> {
    Some(match s {
        "high" => VarKind::High,
        "low" => VarKind::Low,
        "nondet" => VarKind::Nondet,
        "local" => VarKind::Local,
        "output" => VarKind::Output,
        _ => return None,
    })
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn next(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn err<T>(&self, expected: &str) -> Result<T, GclError> {
        Err(GclError::Syntax {
            pos: self.pos(),
            msg: format!("expected {expected}, found {}", self.peek().describe()),
        })
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == k)
    }

    fn expect(&mut self, p: &str) -> Result<Pos, GclError> {
        if self.is_punct(p) {
            Ok(self.next().1)
        } else {
            self.err(&format!("'{p}'"))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), GclError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let p = self.next().1;
                Ok((s, p))
            }
            _ => self.err("identifier"),
        }
    }

    fn program(&mut self) -> Result<SourceProgram, GclError> {
        let mut decls = Vec::new();
        while let Tok::Ident(s) = self.peek() {
            let Some(kind) = decl_kind(s) else { break };
            self.next();
            let width = self.ty()?;
            loop {
                let (name, npos) = self.ident()?;
                decls.push(Decl { name, kind, width, pos: npos });
                if self.is_punct(",") {
                    self.next();
                } else {
                    break;
                }
            }
            self.expect(";")?;
        }
        let mut body = Vec::new();
        while *self.peek() != Tok::Eof {
            body.extend(self.stmt()?);
        }
        Ok(SourceProgram { decls, body })
    }

    fn ty(&mut self) -> Result<u32, GclError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) if s.starts_with("int") => {
                self.next();
                let digits = &s[3..];
                if digits.is_empty() {
                    return Ok(32);
                }
                match digits.parse::<u32>() {
                    Ok(w) if (1..=64).contains(&w) => Ok(w),
                    Ok(w) => Err(GclError::Width { pos, msg: format!("width {w} outside 1..64") }),
                    Err(_) => Err(GclError::Syntax { pos, msg: format!("unknown type '{s}'") }),
                }
            }
            _ => self.err("type such as int32"),
        }
    }

    fn block_or_stmt(&mut self) -> Result<Vec<Stmt>, GclError> {
        if self.is_punct("{") {
            self.next();
            let mut out = Vec::new();
            while !self.is_punct("}") {
                if *self.peek() == Tok::Eof {
                    return self.err("'}'");
                }
                out.extend(self.stmt()?);
            }
            self.next();
            Ok(out)
        } else {
            self.stmt()
        }
    }

    /// A statement; blocks are flattened into their parent.
    fn stmt(&mut self) -> Result<Vec<Stmt>, GclError> {
        let pos = self.pos();
        if self.is_punct("{") {
            return self.block_or_stmt();
        }
        if self.is_punct(";") {
            self.next();
            return Ok(vec![]);
        }
        if self.is_kw("if") {
            self.next();
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let then_branch = self.block_or_stmt()?;
            let else_branch = if self.is_kw("else") {
                self.next();
                self.block_or_stmt()?
            } else {
                vec![]
            };
            return Ok(vec![Stmt::If { cond, then_branch, else_branch, pos }]);
        }
        if self.is_kw("while") {
            self.next();
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let body = self.block_or_stmt()?;
            return Ok(vec![Stmt::While { cond, body, pos }]);
        }
        if self.is_kw("assume") || self.is_kw("assert") {
            let is_assume = self.is_kw("assume");
            self.next();
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            self.expect(";")?;
            return Ok(vec![if is_assume { Stmt::Assume { cond, pos } } else { Stmt::Assert { cond, pos } }]);
        }
        let (var, vpos) = self.ident()?;
        if self.is_punct("++") || self.is_punct("--") {
            let op = if self.is_punct("++") { BinOp::Add } else { BinOp::Sub };
            let opos = self.next().1;
            self.expect(";")?;
            let value = Expr {
                kind: ExprKind::Binary(
                    op,
                    Box::new(Expr { kind: ExprKind::Var(var.clone()), pos: vpos }),
                    Box::new(Expr { kind: ExprKind::Int { value: 1, width: 0 }, pos: opos }),
                ),
                pos: opos,
            };
            return Ok(vec![Stmt::Assign { var, value, pos }]);
        }
        self.expect("=")?;
        let value = self.expr()?;
        self.expect(";")?;
        Ok(vec![Stmt::Assign { var, value, pos }])
    }

    fn expr(&mut self) -> Result<Expr, GclError> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, GclError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Punct(p) => match binop_of(p) {
                    Some(op) if op.precedence() >= min_prec => op,
                    _ => break,
                },
                _ => break,
            };
            let pos = self.next().1;
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr { kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, GclError> {
        let pos = self.pos();
        let op = match self.peek() {
            Tok::Punct("!") => UnOp::Not,
            Tok::Punct("~") => UnOp::BitNot,
            Tok::Punct("-") => UnOp::Neg,
            _ => return self.primary(),
        };
        self.next();
        let inner = self.unary()?;
        if op == UnOp::Neg {
            if let ExprKind::Int { value, width: 0 } = inner.kind {
                return Ok(Expr { kind: ExprKind::Int { value: -value, width: 0 }, pos });
            }
        }
        Ok(Expr { kind: ExprKind::Unary(op, Box::new(inner)), pos })
    }

    fn primary(&mut self) -> Result<Expr, GclError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.next();
                Ok(Expr { kind: ExprKind::Int { value: v, width: 0 }, pos })
            }
            Tok::Punct("(") => {
                self.next();
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.next();
                Ok(Expr { kind: ExprKind::Bool(s == "true"), pos })
            }
            Tok::Ident(s) if s == "zext" || s == "sext" || s == "trunc" => {
                self.next();
                let op = match s.as_str() {
                    "zext" => CastOp::Zext,
                    "sext" => CastOp::Sext,
                    _ => CastOp::Trunc,
                };
                self.expect("(")?;
                let e = self.expr()?;
                self.expect(",")?;
                let wpos = self.pos();
                let w = match self.next().0 {
                    Tok::Num(w) if (1..=64).contains(&w) => w as u32,
                    Tok::Num(w) => {
                        return Err(GclError::Width { pos: wpos, msg: format!("width {w} outside 1..64") })
                    }
                    _ => {
                        self.i -= 1;
                        return self.err("width");
                    }
                };
                self.expect(")")?;
                Ok(Expr { kind: ExprKind::Cast(op, Box::new(e), w), pos })
            }
            Tok::Ident(_) => {
                let (name, _) = self.ident()?;
                Ok(Expr { kind: ExprKind::Var(name), pos })
            }
            _ => self.err("expression"),
        }
    }
}

/// Parse and check a program.
pub fn parse(src: &str) -> Result<SourceProgram, GclError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, i: 0 };
    let mut prog = p.program()?;
    check(&mut prog)?;
    Ok(prog)
}
