//! SMT-LIB v2 subset: QF_BV terms plus the `check-allsat` and
//! `allsat-relevant` extension commands.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::term::{Kind, Op, Sort, SortError, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmtError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unsupported feature: {0}")]
    Unsupported(String),
    #[error("undeclared symbol {0}")]
    Undeclared(String),
    #[error("symbol {0} declared twice")]
    Redeclared(String),
    #[error(transparent)]
    Sort(#[from] SortError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    SetLogic(String),
    SetOption(String),
    DeclareFun(String, Sort),
    Assert(Term),
    CheckSat,
    CheckAllSat(Vec<String>),
    AllSatRelevant(Vec<String>),
    GetModel,
    Push(u32),
    Pop(u32),
    Exit,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Script {
    pub commands: Vec<Command>,
}

impl Script {
    pub fn assertions(&self) -> Vec<Term> {
        self.commands
            .iter()
            .filter_map(|c| match c {
                Command::Assert(t) => Some(t.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn declarations(&self) -> Vec<(String, Sort)> {
        self.commands
            .iter()
            .filter_map(|c| match c {
                Command::DeclareFun(n, s) => Some((n.clone(), *s)),
                _ => None,
            })
            .collect()
    }
}

// ---------------------------------------------------------------- lexing

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String, usize, usize),
    List(Vec<Sexp>, usize, usize),
}

impl Sexp {
    fn pos(&self) -> (usize, usize) {
        match self {
            Sexp::Atom(_, l, c) | Sexp::List(_, l, c) => (*l, *c),
        }
    }
}

fn syntax(pos: (usize, usize), msg: impl Into<String>) -> SmtError {
    SmtError::Syntax { line: pos.0, col: pos.1, msg: msg.into() }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Reader<'a> {
    fn new(s: &'a str) -> Self {
        Reader { chars: s.chars().peekable(), line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn read_all(&mut self) -> Result<Vec<Sexp>, SmtError> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            if self.chars.peek().is_none() {
                return Ok(out);
            }
            out.push(self.read()?);
        }
    }

    fn read(&mut self) -> Result<Sexp, SmtError> {
        self.skip_ws();
        let pos = (self.line, self.col);
        match self.chars.peek().copied() {
            None => Err(syntax(pos, "unexpected end of input")),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.chars.peek() {
                        None => return Err(syntax(pos, "unclosed '('")),
                        Some(')') => {
                            self.bump();
                            return Ok(Sexp::List(items, pos.0, pos.1));
                        }
                        _ => items.push(self.read()?),
                    }
                }
            }
            Some(')') => Err(syntax(pos, "unexpected ')'")),
            Some('|') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(syntax(pos, "unterminated quoted symbol")),
                        Some('|') => break,
                        Some(c) => s.push(c),
                    }
                }
                Ok(Sexp::Atom(s, pos.0, pos.1))
            }
            Some('"') => {
                self.bump();
                let mut s = String::from("\"");
                loop {
                    match self.bump() {
                        None => return Err(syntax(pos, "unterminated string")),
                        Some('"') => {
                            if self.chars.peek() == Some(&'"') {
                                self.bump();
                                s.push('"');
                            } else {
                                break;
                            }
                        }
                        Some(c) => s.push(c),
                    }
                }
                s.push('"');
                Ok(Sexp::Atom(s, pos.0, pos.1))
            }
            Some(_) => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(Sexp::Atom(s, pos.0, pos.1))
            }
        }
    }
}

// --------------------------------------------------------------- parsing

fn atom(s: &Sexp) -> Option<&str> {
    match s {
        Sexp::Atom(a, ..) => Some(a),
        _ => None,
    }
}

fn parse_u32(s: &Sexp) -> Result<u32, SmtError> {
    atom(s)
        .and_then(|a| a.parse().ok())
        .ok_or_else(|| syntax(s.pos(), "expected numeral"))
}

fn parse_sort(s: &Sexp) -> Result<Sort, SmtError> {
    match s {
        Sexp::Atom(a, ..) if a == "Bool" => Ok(Sort::Bool),
        Sexp::List(items, ..)
            if items.len() == 3 && atom(&items[0]) == Some("_") && atom(&items[1]) == Some("BitVec") =>
        {
            let w = parse_u32(&items[2])?;
            if w == 0 || w > 64 {
                return Err(SortError::Width(w).into());
            }
            Ok(Sort::BitVec(w))
        }
        other => Err(SmtError::Unsupported(format!("sort {}", show(other)))),
    }
}

fn show(s: &Sexp) -> String {
    match s {
        Sexp::Atom(a, ..) => a.clone(),
        Sexp::List(items, ..) => {
            let parts: Vec<String> = items.iter().map(show).collect();
            format!("({})", parts.join(" "))
        }
    }
}

fn op_by_name(name: &str) -> Option<Op> {
    Some(match name {
        "not" => Op::Not,
        "and" => Op::And,
        "or" => Op::Or,
        "=>" => Op::Implies,
        "xor" => Op::Xor,
        "=" => Op::Eq,
        "ite" => Op::Ite,
        "bvnot" => Op::BvNot,
        "bvneg" => Op::BvNeg,
        "bvand" => Op::BvAnd,
        "bvor" => Op::BvOr,
        "bvxor" => Op::BvXor,
        "bvadd" => Op::BvAdd,
        "bvsub" => Op::BvSub,
        "bvmul" => Op::BvMul,
        "bvudiv" => Op::BvUdiv,
        "bvurem" => Op::BvUrem,
        "bvsdiv" => Op::BvSdiv,
        "bvsrem" => Op::BvSrem,
        "bvshl" => Op::BvShl,
        "bvlshr" => Op::BvLshr,
        "bvashr" => Op::BvAshr,
        "bvult" => Op::BvUlt,
        "bvule" => Op::BvUle,
        "bvugt" => Op::BvUgt,
        "bvuge" => Op::BvUge,
        "bvslt" => Op::BvSlt,
        "bvsle" => Op::BvSle,
        "bvsgt" => Op::BvSgt,
        "bvsge" => Op::BvSge,
        "concat" => Op::Concat,
        _ => return None,
    })
}

struct TermParser<'a> {
    decls: &'a HashMap<String, Sort>,
}

impl TermParser<'_> {
    fn term(&self, s: &Sexp) -> Result<Term, SmtError> {
        match s {
            Sexp::Atom(a, ..) => self.atom_term(a, s.pos()),
            Sexp::List(items, ..) => {
                let head = items.first().ok_or_else(|| syntax(s.pos(), "empty application"))?;
                if atom(head) == Some("_") {
                    return self.indexed_const(items, s.pos());
                }
                let op = match head {
                    Sexp::Atom(name, ..) => match op_by_name(name) {
                        Some(op) => op,
                        None if name == "let" => return Err(SmtError::Unsupported("let".into())),
                        None if name == "distinct" => {
                            let args = self.args(&items[1..])?;
                            if args.len() != 2 {
                                return Err(SmtError::Unsupported("n-ary distinct".into()));
                            }
                            return Ok(Term::not(Term::app(Op::Eq, args)?));
                        }
                        None => {
                            return Err(SmtError::Unsupported(format!("function symbol {name}")))
                        }
                    },
                    Sexp::List(idx, ..) => self.indexed_op(idx, head.pos())?,
                };
                let args = self.args(&items[1..])?;
                // n-ary chains of left-associative bit-vector operators
                if args.len() > 2
                    && matches!(op, Op::BvAdd | Op::BvMul | Op::BvAnd | Op::BvOr | Op::BvXor | Op::Concat)
                {
                    let mut it = args.into_iter();
                    let mut acc = it.next().unwrap();
                    for a in it {
                        acc = Term::app(op, vec![acc, a])?;
                    }
                    return Ok(acc);
                }
                Ok(Term::app(op, args)?)
            }
        }
    }

    fn args(&self, items: &[Sexp]) -> Result<Vec<Term>, SmtError> {
        items.iter().map(|i| self.term(i)).collect()
    }

    fn atom_term(&self, a: &str, pos: (usize, usize)) -> Result<Term, SmtError> {
        if a == "true" {
            return Ok(Term::tt());
        }
        if a == "false" {
            return Ok(Term::ff());
        }
        if let Some(bits) = a.strip_prefix("#b") {
            let w = bits.len() as u32;
            if w == 0 || w > 64 {
                return Err(syntax(pos, format!("bad binary literal {a}")));
            }
            let v = u64::from_str_radix(bits, 2).map_err(|_| syntax(pos, format!("bad binary literal {a}")))?;
            return Ok(Term::bv_const(v, w));
        }
        if let Some(hex) = a.strip_prefix("#x") {
            let w = hex.len() as u32 * 4;
            if w == 0 || w > 64 {
                return Err(syntax(pos, format!("bad hex literal {a}")));
            }
            let v = u64::from_str_radix(hex, 16).map_err(|_| syntax(pos, format!("bad hex literal {a}")))?;
            return Ok(Term::bv_const(v, w));
        }
        if a.chars().next().is_some_and(|c| c.is_ascii_digit()) {
            return Err(SmtError::Unsupported(format!("integer numeral {a}")));
        }
        match self.decls.get(a) {
            Some(s) => Ok(Term::var(a, *s)),
            None => Err(SmtError::Undeclared(a.to_string())),
        }
    }

    fn indexed_const(&self, items: &[Sexp], pos: (usize, usize)) -> Result<Term, SmtError> {
        // (_ bvN w)
        if items.len() == 3 {
            if let Some(name) = atom(&items[1]) {
                if let Some(num) = name.strip_prefix("bv") {
                    let v: u128 = num.parse().map_err(|_| syntax(pos, "bad bvN literal"))?;
                    let w = parse_u32(&items[2])?;
                    if w == 0 || w > 64 {
                        return Err(SortError::Width(w).into());
                    }
                    return Ok(Term::bv_const(v as u64, w));
                }
            }
        }
        Err(syntax(pos, "unsupported indexed term"))
    }

    fn indexed_op(&self, idx: &[Sexp], pos: (usize, usize)) -> Result<Op, SmtError> {
        if idx.first().and_then(atom) != Some("_") || idx.len() < 3 {
            return Err(syntax(pos, "expected indexed operator"));
        }
        let name = atom(&idx[1]).ok_or_else(|| syntax(pos, "expected operator name"))?;
        match (name, idx.len()) {
            ("extract", 4) => Ok(Op::Extract(parse_u32(&idx[2])?, parse_u32(&idx[3])?)),
            ("zero_extend", 3) => Ok(Op::ZeroExt(parse_u32(&idx[2])?)),
            ("sign_extend", 3) => Ok(Op::SignExt(parse_u32(&idx[2])?)),
            _ => Err(SmtError::Unsupported(format!("indexed operator {name}"))),
        }
    }
}

fn symbol_list(s: &Sexp) -> Result<Vec<String>, SmtError> {
    match s {
        Sexp::List(items, ..) => items
            .iter()
            .map(|i| atom(i).map(str::to_string).ok_or_else(|| syntax(i.pos(), "expected symbol")))
            .collect(),
        _ => Err(syntax(s.pos(), "expected symbol list")),
    }
}

pub fn parse_script(text: &str) -> Result<Script, SmtError> {
    let sexps = Reader::new(text).read_all()?;
    let mut decls: HashMap<String, Sort> = HashMap::new();
    let mut commands = Vec::new();
    for s in &sexps {
        let items = match s {
            Sexp::List(items, ..) if !items.is_empty() => items,
            _ => return Err(syntax(s.pos(), "expected command")),
        };
        let name = atom(&items[0]).ok_or_else(|| syntax(s.pos(), "expected command name"))?;
        let argc = items.len() - 1;
        let want = |n: usize| -> Result<(), SmtError> {
            if argc == n {
                Ok(())
            } else {
                Err(syntax(s.pos(), format!("{name} expects {n} argument(s)")))
            }
        };
        let cmd = match name {
            "set-logic" => {
                want(1)?;
                Command::SetLogic(show(&items[1]))
            }
            "set-option" | "set-info" => Command::SetOption(show(s)),
            "declare-fun" => {
                want(3)?;
                let n = atom(&items[1]).ok_or_else(|| syntax(items[1].pos(), "expected symbol"))?;
                match &items[2] {
                    Sexp::List(a, ..) if a.is_empty() => {}
                    _ => return Err(SmtError::Unsupported("non-nullary declare-fun".into())),
                }
                let sort = parse_sort(&items[3])?;
                if decls.insert(n.to_string(), sort).is_some() {
                    return Err(SmtError::Redeclared(n.to_string()));
                }
                Command::DeclareFun(n.to_string(), sort)
            }
            "declare-const" => {
                want(2)?;
                let n = atom(&items[1]).ok_or_else(|| syntax(items[1].pos(), "expected symbol"))?;
                let sort = parse_sort(&items[2])?;
                if decls.insert(n.to_string(), sort).is_some() {
                    return Err(SmtError::Redeclared(n.to_string()));
                }
                Command::DeclareFun(n.to_string(), sort)
            }
            "assert" => {
                want(1)?;
                let t = TermParser { decls: &decls }.term(&items[1])?;
                if !t.is_bool() {
                    return Err(syntax(items[1].pos(), "assertion is not Bool"));
                }
                Command::Assert(t)
            }
            "check-sat" => {
                want(0)?;
                Command::CheckSat
            }
            "check-allsat" => {
                want(1)?;
                Command::CheckAllSat(symbol_list(&items[1])?)
            }
            "allsat-relevant" => {
                want(1)?;
                Command::AllSatRelevant(symbol_list(&items[1])?)
            }
            "get-model" => {
                want(0)?;
                Command::GetModel
            }
            "push" | "pop" => {
                let n = if argc == 0 {
                    1
                } else {
                    want(1)?;
                    parse_u32(&items[1])?
                };
                if name == "push" {
                    Command::Push(n)
                } else {
                    Command::Pop(n)
                }
            }
            "exit" => Command::Exit,
            other => return Err(SmtError::Unsupported(format!("command {other}"))),
        };
        commands.push(cmd);
    }
    Ok(Script { commands })
}

/// Parse a single term against the given declarations.
pub fn parse_term(text: &str, decls: &HashMap<String, Sort>) -> Result<Term, SmtError> {
    let mut sexps = Reader::new(text).read_all()?;
    if sexps.len() != 1 {
        return Err(syntax((1, 1), "expected exactly one term"));
    }
    TermParser { decls }.term(&sexps.remove(0))
}

// -------------------------------------------------------------- printing

fn is_simple_symbol(s: &str) -> bool {
    !s.is_empty()
        && !s.starts_with(|c: char| c.is_ascii_digit())
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c))
}

pub fn symbol(s: &str) -> String {
    if is_simple_symbol(s) {
        s.to_string()
    } else {
        format!("|{s}|")
    }
}

pub fn bv_literal(v: u64, w: u32) -> String {
    if w % 4 == 0 {
        format!("#x{:0width$x}", v, width = (w / 4) as usize)
    } else {
        format!("#b{:0width$b}", v, width = w as usize)
    }
}

pub fn term_to_string(t: &Term) -> String {
    let mut s = String::new();
    write_term(t, &mut s);
    s
}

fn write_term(t: &Term, out: &mut String) {
    match t.kind() {
        Kind::Var(n) => out.push_str(&symbol(n)),
        Kind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Kind::Bv(v) => out.push_str(&bv_literal(*v, t.width())),
        Kind::App(op, args) => {
            out.push('(');
            match op {
                Op::Extract(hi, lo) => {
                    let _ = write!(out, "(_ extract {hi} {lo})");
                }
                Op::ZeroExt(k) => {
                    let _ = write!(out, "(_ zero_extend {k})");
                }
                Op::SignExt(k) => {
                    let _ = write!(out, "(_ sign_extend {k})");
                }
                _ => out.push_str(op.smt_name()),
            }
            for a in args {
                out.push(' ');
                write_term(a, out);
            }
            out.push(')');
        }
    }
}

fn write_command(c: &Command, out: &mut String) {
    match c {
        Command::SetLogic(l) => {
            let _ = writeln!(out, "(set-logic {l})");
        }
        Command::SetOption(raw) => {
            let _ = writeln!(out, "{raw}");
        }
        Command::DeclareFun(n, s) => {
            let _ = writeln!(out, "(declare-fun {} () {s})", symbol(n));
        }
        Command::Assert(t) => {
            let _ = writeln!(out, "(assert {})", term_to_string(t));
        }
        Command::CheckSat => out.push_str("(check-sat)\n"),
        Command::CheckAllSat(v) => {
            let names: Vec<String> = v.iter().map(|n| symbol(n)).collect();
            let _ = writeln!(out, "(check-allsat ({}))", names.join(" "));
        }
        Command::AllSatRelevant(v) => {
            let names: Vec<String> = v.iter().map(|n| symbol(n)).collect();
            let _ = writeln!(out, "(allsat-relevant ({}))", names.join(" "));
        }
        Command::GetModel => out.push_str("(get-model)\n"),
        Command::Push(n) => {
            let _ = writeln!(out, "(push {n})");
        }
        Command::Pop(n) => {
            let _ = writeln!(out, "(pop {n})");
        }
        Command::Exit => out.push_str("(exit)\n"),
    }
}

pub fn emit_script(s: &Script) -> String {
    let mut out = String::new();
    for c in &s.commands {
        write_command(c, &mut out);
    }
    out
}

/// Declarations (sorted by name) followed by one assert per term.
pub fn script_for_terms(terms: &[Term]) -> Script {
    let mut vars: Vec<(String, Sort)> = terms.iter().flat_map(|t| t.free_vars()).collect();
    vars.sort();
    vars.dedup();
    let mut commands = vec![Command::SetLogic("QF_BV".into())];
    commands.extend(vars.into_iter().map(|(n, s)| Command::DeclareFun(n, s)));
    commands.extend(terms.iter().cloned().map(Command::Assert));
    Script { commands }
}

pub fn emit_terms(terms: &[Term]) -> String {
    emit_script(&script_for_terms(terms))
}
