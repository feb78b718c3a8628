//! Concrete syntax for effect trees.
//!
//! ```text
//! e ::= bot | top | x<nat> | <name>
//!     | or(e, e) | por(e, e) | in(e, e) | tick(e) | upd[<nat>](e)
//!     | lkp(0 -> e, ..., k-1 -> e) | raise[<sym>] | catch[<sym>](e, e)
//!     | rec <name>. e
//! ```
//!
//! A `rec` binder denotes a state of a [`RegularTree`]; `<name>` refers back
//! to an enclosing binder. Whitespace is insignificant.

use std::fmt;

use crate::effect::EffectSpec;
use crate::regular::{RegularTree, Slot, State};
use crate::tree::{ExcName, Op, Term, Tree, Var};

/// A position in the source text; line and column start at 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
#[error("{pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(u32),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    Arrow,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Nat(n) => write!(f, "`{n}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrack => f.write_str("`[`"),
            Tok::RBrack => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn pos_at(text: &str, offset: usize) -> Pos {
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Pos { offset, line, column }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |i: usize, message: String| ParseError { pos: pos_at(text, i), message };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'[' => Tok::LBrack,
            b']' => Tok::RBrack,
            b',' => Tok::Comma,
            b'.' => Tok::Dot,
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Arrow
            }
            b'0'..=b'9' => {
                while i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                }
                let n = text[start..=i].parse().map_err(|_| err(start, "number out of range".into()))?;
                Tok::Nat(n)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i + 1 < bytes.len() && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_') {
                    i += 1;
                }
                Tok::Ident(text[start..=i].to_string())
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(err(start, format!("unexpected character `{ch}`")));
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

fn var_index(name: &str) -> Option<u32> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

const KEYWORDS: [&str; 11] = ["bot", "top", "or", "por", "in", "tick", "upd", "lkp", "raise", "catch", "rec"];

/// Whether `name` can be used as a `rec` binder.
pub fn is_binder_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&name)
        && var_index(name).is_none()
}

struct Parser<'a> {
    text: &'a str,
    toks: Vec<(Tok, usize)>,
    at: usize,
    spec: Option<&'a EffectSpec>,
    states: Vec<Option<State<Var>>>,
    scope: Vec<(String, usize)>,
}

type Body = Tree<Slot<Var>>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        pos_at(self.text, self.toks[self.at].1)
    }

    fn error_at(&self, pos: Pos, message: impl Into<String>) -> ParseError {
        ParseError { pos, message: message.into() }
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        let pos = self.pos();
        let got = self.next();
        if got == want {
            Ok(())
        } else {
            Err(self.error_at(pos, format!("expected {want}, found {got}")))
        }
    }

    fn check_op(&self, op: &Op, pos: Pos) -> Result<(), ParseError> {
        if let Some(spec) = self.spec {
            if spec.signature.arity(op).is_none() {
                return Err(
                    self.error_at(pos, format!("operator `{op}` does not belong to the {} signature", spec.name()))
                );
            }
        }
        Ok(())
    }

    fn bracket_nat(&mut self) -> Result<u32, ParseError> {
        self.expect(Tok::LBrack)?;
        let pos = self.pos();
        let n = match self.next() {
            Tok::Nat(n) => n,
            t => return Err(self.error_at(pos, format!("expected an index, found {t}"))),
        };
        self.expect(Tok::RBrack)?;
        Ok(n)
    }

    fn bracket_sym(&mut self) -> Result<ExcName, ParseError> {
        self.expect(Tok::LBrack)?;
        let pos = self.pos();
        let s = match self.next() {
            Tok::Ident(s) => s,
            t => return Err(self.error_at(pos, format!("expected an exception name, found {t}"))),
        };
        self.expect(Tok::RBrack)?;
        Ok(ExcName::new(&s))
    }

    /// `(e, ..., e)` with exactly `arity` arguments.
    fn args(&mut self, op: &Op, arity: usize, op_pos: Pos) -> Result<Vec<Body>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                out.push(self.expr()?);
                if *self.peek() == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        if out.len() != arity {
            return Err(self.error_at(
                op_pos,
                format!("`{op}` takes {arity} argument{}, found {}", if arity == 1 { "" } else { "s" }, out.len()),
            ));
        }
        Ok(out)
    }

    fn lookup(&mut self, op_pos: Pos) -> Result<Body, ParseError> {
        self.expect(Tok::LParen)?;
        let mut branches: Vec<(u32, Body, Pos)> = Vec::new();
        loop {
            let pos = self.pos();
            let n = match self.next() {
                Tok::Nat(n) => n,
                t => return Err(self.error_at(pos, format!("expected a lookup branch `n -> e`, found {t}"))),
            };
            self.expect(Tok::Arrow)?;
            let e = self.expr()?;
            branches.push((n, e, pos));
            if *self.peek() == Tok::Comma {
                self.next();
            } else {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        let k = match self.spec {
            Some(spec) => spec.signature.arity(&Op::Lkp).ok_or_else(|| {
                self.error_at(op_pos, format!("operator `lkp` does not belong to the {} signature", spec.name()))
            })?,
            None => branches.len(),
        };
        if branches.len() != k {
            return Err(self.error_at(op_pos, format!("`lkp` needs {k} branches, found {}", branches.len())));
        }
        let mut slots: Vec<Option<Body>> = vec![None; k];
        for (n, e, pos) in branches {
            match slots.get_mut(n as usize) {
                Some(slot @ None) => *slot = Some(e),
                Some(Some(_)) => return Err(self.error_at(pos, format!("duplicate lookup branch {n}"))),
                None => return Err(self.error_at(pos, format!("lookup branch {n} is out of range 0..{k}"))),
            }
        }
        Ok(Tree::Node(Op::Lkp, slots.into_iter().map(|s| s.expect("all branches filled")).collect()))
    }

    fn expr(&mut self) -> Result<Body, ParseError> {
        let pos = self.pos();
        let name = match self.next() {
            Tok::Ident(s) => s,
            t => return Err(self.error_at(pos, format!("expected an expression, found {t}"))),
        };
        let node = |op: Op, cs| Tree::Node(op, cs);
        match name.as_str() {
            "bot" => Ok(Tree::Bottom),
            "top" => Ok(Tree::Top),
            "or" | "por" | "in" => {
                let op = match name.as_str() {
                    "or" => Op::Or,
                    "por" => Op::Por,
                    _ => Op::In,
                };
                self.check_op(&op, pos)?;
                let cs = self.args(&op, 2, pos)?;
                Ok(node(op, cs))
            }
            "tick" => {
                self.check_op(&Op::Tick, pos)?;
                let cs = self.args(&Op::Tick, 1, pos)?;
                Ok(node(Op::Tick, cs))
            }
            "upd" => {
                let op = Op::Upd(self.bracket_nat()?);
                self.check_op(&op, pos)?;
                let cs = self.args(&op, 1, pos)?;
                Ok(node(op, cs))
            }
            "lkp" => self.lookup(pos),
            "raise" => {
                let op = Op::Raise(self.bracket_sym()?);
                self.check_op(&op, pos)?;
                if *self.peek() == Tok::LParen {
                    self.args(&op, 0, pos)?;
                }
                Ok(node(op, Vec::new()))
            }
            "catch" => {
                let op = Op::Catch(self.bracket_sym()?);
                self.check_op(&op, pos)?;
                let cs = self.args(&op, 2, pos)?;
                Ok(node(op, cs))
            }
            "rec" => {
                let bpos = self.pos();
                let binder = match self.next() {
                    Tok::Ident(s) if is_binder_name(&s) => s,
                    t => return Err(self.error_at(bpos, format!("expected a binder name, found {t}"))),
                };
                self.expect(Tok::Dot)?;
                let idx = self.states.len();
                self.states.push(None);
                self.scope.push((binder, idx));
                let body = self.expr()?;
                let (name, _) = self.scope.pop().expect("scope pushed above");
                self.states[idx] = Some(State { name, body });
                Ok(Tree::Leaf(Slot::Ref(idx)))
            }
            other => {
                if let Some(n) = var_index(other) {
                    return Ok(Tree::Leaf(Slot::Leaf(Var(n))));
                }
                match self.scope.iter().rev().find(|(s, _)| s == other) {
                    Some(&(_, idx)) => Ok(Tree::Leaf(Slot::Ref(idx))),
                    None => Err(self.error_at(pos, format!("unbound name `{other}`"))),
                }
            }
        }
    }
}

/// Parses an expression, validating operators against `spec` when given.
pub fn parse_expr(text: &str, spec: Option<&EffectSpec>) -> Result<RegularTree<Var>, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { text, toks, at: 0, spec, states: Vec::new(), scope: Vec::new() };
    let root = p.expr()?;
    if *p.peek() != Tok::End {
        let pos = p.pos();
        let t = p.next();
        return Err(p.error_at(pos, format!("unexpected {t} after the expression")));
    }
    let states = p.states.into_iter().map(|s| s.expect("every binder is closed")).collect();
    Ok(RegularTree { states, root })
}

/// Parses a finite expression.
pub fn parse_term(text: &str, spec: Option<&EffectSpec>) -> Result<Term, ParseError> {
    let rt = parse_expr(text, spec)?;
    rt.as_finite().ok_or_else(|| ParseError {
        pos: pos_at(text, 0),
        message: "expected a finite expression without `rec`".into(),
    })
}

fn write_tree<L>(t: &Tree<L>, out: &mut String, leaf: &mut impl FnMut(&L, &mut String)) {
    match t {
        Tree::Bottom => out.push_str("bot"),
        Tree::Top => out.push_str("top"),
        Tree::Leaf(l) => leaf(l, out),
        Tree::Node(Op::Raise(e), _) => {
            out.push_str("raise[");
            out.push_str(e.as_str());
            out.push(']');
        }
        Tree::Node(Op::Lkp, cs) => {
            out.push_str("lkp(");
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&format!("{i} -> "));
                write_tree(c, out, leaf);
            }
            out.push(')');
        }
        Tree::Node(op, cs) => {
            out.push_str(&op.to_string());
            out.push('(');
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_tree(c, out, leaf);
            }
            out.push(')');
        }
    }
}

/// The canonical text of a finite tree, with leaves printed by `leaf`.
pub fn print_tree_with<L>(t: &Tree<L>, leaf: &mut impl FnMut(&L, &mut String)) -> String {
    let mut out = String::new();
    write_tree(t, &mut out, leaf);
    out
}

pub fn print_term(t: &Term) -> String {
    print_tree_with(t, &mut |v, out| out.push_str(&v.to_string()))
}

/// The canonical text of a regular tree. A state is written as a binder at
/// its first reference outside its own scope; names that would be shadowed
/// are suffixed with the state index.
pub fn print_regular_with<L>(t: &RegularTree<L>, leaf: &mut impl FnMut(&L, &mut String)) -> String {
    struct Printer<'a, L, F> {
        t: &'a RegularTree<L>,
        leaf: F,
        scope: Vec<(String, usize)>,
    }
    impl<L, F: FnMut(&L, &mut String)> Printer<'_, L, F> {
        fn slot(&mut self, s: &Slot<L>, out: &mut String) {
            match s {
                Slot::Leaf(l) => (self.leaf)(l, out),
                Slot::Ref(i) => {
                    let i = *i;
                    if let Some((name, _)) = self.scope.iter().rev().find(|(_, j)| *j == i) {
                        let visible = self.scope.iter().rev().find(|(n, _)| n == name).map(|(_, j)| *j);
                        if visible == Some(i) {
                            out.push_str(name);
                            return;
                        }
                    }
                    let base = &self.t.states[i].name;
                    let mut name = if is_binder_name(base) { base.clone() } else { format!("s{i}") };
                    if self.scope.iter().any(|(n, j)| *n == name && *j != i) {
                        name = format!("{name}_{i}");
                    }
                    out.push_str("rec ");
                    out.push_str(&name);
                    out.push_str(". ");
                    self.scope.push((name, i));
                    let states = &self.t.states;
                    self.tree(&states[i].body, out);
                    self.scope.pop();
                }
            }
        }

        fn tree(&mut self, t: &Tree<Slot<L>>, out: &mut String) {
            write_tree(t, out, &mut |s: &Slot<L>, o: &mut String| self.slot(s, o));
        }
    }
    let mut p = Printer { t, leaf, scope: Vec::new() };
    let mut out = String::new();
    p.tree(&t.root, &mut out);
    out
}

pub fn print_regular(t: &RegularTree<Var>) -> String {
    print_regular_with(t, &mut |v, out| out.push_str(&v.to_string()))
}
