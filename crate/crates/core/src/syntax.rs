//! Concrete syntax: parser and pretty-printer.
//!
//! ```text
//! formula  := implies
//! implies  := or ( "->" implies )?
//! or       := and ( "|" and )*
//! and      := unary ( "&" unary )*
//! unary    := "!" unary | "K{" id "}" unary | "D{" id ("," id)* "}" unary
//!           | "[" formula "]" unary | "X" unary | "F" unary | "G" unary
//!           | primary
//! primary  := "true" | "false" | id | id ":" id | "$" digits
//!           | "(" formula ( ("U" | "R" | "W") formula )? ")"
//! ```
//!
//! Operands of `K`, `D` and both sides of an announcement are epistemic: any
//! temporal operator there is rejected with [`Error::Level`].

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::formula::{Formula, Pal};
use crate::model::{is_identifier, AgentId, Atom};

const KEYWORDS: &[&str] = &["true", "false", "K", "D", "X", "F", "G", "U", "R", "W"];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Hole(usize),
    Colon,
    Comma,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Bang,
    Amp,
    Pipe,
    Arrow,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Hole(k) => format!("`${k}`"),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let push = |out: &mut Vec<Token>, tok| {
            out.push(Token {
                tok,
                line: start_line,
                col: start_col,
            })
        };
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
        let single = match c {
            ':' => Some(Tok::Colon),
            ',' => Some(Tok::Comma),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '!' => Some(Tok::Bang),
            '&' => Some(Tok::Amp),
            '|' => Some(Tok::Pipe),
            _ => None,
        };
        if let Some(tok) = single {
            push(&mut out, tok);
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            push(&mut out, Tok::Arrow);
            i += 2;
            col += 2;
            continue;
        }
        if c == '$' {
            let digits: String = chars[i + 1..]
                .iter()
                .take_while(|d| d.is_ascii_digit())
                .collect();
            let k = digits.parse::<usize>().ok().filter(|&k| k > 0);
            let Some(k) = k else {
                return Err(Error::Syntax {
                    line,
                    col,
                    expected: vec!["placeholder index `$1`, `$2`, ...".into()],
                    found: format!("`${digits}`"),
                });
            };
            push(&mut out, Tok::Hole(k));
            i += 1 + digits.len();
            col += 1 + digits.len();
            continue;
        }
        let mut j = i;
        while j < chars.len() {
            let d = chars[j];
            if d == '-' && chars.get(j + 1) == Some(&'>') {
                break;
            }
            if !is_identifier(&d.to_string()) {
                break;
            }
            j += 1;
        }
        if j == i {
            return Err(Error::Syntax {
                line,
                col,
                expected: vec!["formula".into()],
                found: format!("`{c}`"),
            });
        }
        push(&mut out, Tok::Ident(chars[i..j].iter().collect()));
        col += j - i;
        i = j;
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> Error {
        let t = self.peek();
        Error::Syntax {
            line: t.line,
            col: t.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.describe(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&tok.describe()]))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&[what])),
        }
    }

    /// Keyword `kw` used as an operator here (not as the data part of an atom).
    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw) && *self.peek_at(1) != Tok::Colon
    }

    fn level_check(&self, epistemic: bool, op: &str) -> Result<()> {
        if epistemic {
            let t = self.peek();
            Err(Error::Level {
                line: t.line,
                col: t.col,
                op: op.to_string(),
            })
        } else {
            Ok(())
        }
    }

    fn implies(&mut self, ep: bool) -> Result<Formula> {
        let lhs = self.or(ep)?;
        if self.peek().tok == Tok::Arrow {
            self.bump();
            let rhs = self.implies(ep)?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self, ep: bool) -> Result<Formula> {
        let mut lhs = self.and(ep)?;
        while self.peek().tok == Tok::Pipe {
            self.bump();
            let rhs = self.and(ep)?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self, ep: bool) -> Result<Formula> {
        let mut lhs = self.unary(ep)?;
        while self.peek().tok == Tok::Amp {
            self.bump();
            let rhs = self.unary(ep)?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn pal_operand(&mut self) -> Result<Pal> {
        match self.unary(true)? {
            Formula::Pal(p) => Ok(p),
            _ => unreachable!("epistemic scope yields PAL formulas"),
        }
    }

    fn unary(&mut self, ep: bool) -> Result<Formula> {
        if self.peek().tok == Tok::Bang {
            self.bump();
            return Ok(Formula::not(self.unary(ep)?));
        }
        if self.peek().tok == Tok::LBracket {
            self.bump();
            let psi = match self.implies(true)? {
                Formula::Pal(p) => p,
                _ => unreachable!(),
            };
            self.expect(Tok::RBracket)?;
            let phi = self.pal_operand()?;
            return Ok(Formula::Pal(Pal::announce(psi, phi)));
        }
        if let Tok::Ident(name) = &self.peek().tok {
            if *self.peek_at(1) == Tok::LBrace && (name == "K" || name == "D") {
                let knows = name == "K";
                self.bump();
                self.bump();
                let mut agents = vec![self.ident("agent id")?];
                while !knows && self.peek().tok == Tok::Comma {
                    self.bump();
                    agents.push(self.ident("agent id")?);
                }
                self.expect(Tok::RBrace)?;
                let body = self.pal_operand()?;
                let ids = agents
                    .into_iter()
                    .map(AgentId::new)
                    .collect::<Result<BTreeSet<_>>>()?;
                let p = if knows {
                    Pal::knows(ids.into_iter().next().unwrap(), body)
                } else {
                    Pal::Dist(ids, Box::new(body))
                };
                return Ok(Formula::Pal(p));
            }
            for (kw, op) in [
                ("X", Formula::next as fn(Formula) -> Formula),
                ("F", Formula::future),
                ("G", Formula::global),
            ] {
                if self.at_keyword(kw) {
                    self.level_check(ep, kw)?;
                    self.bump();
                    return Ok(op(self.unary(ep)?));
                }
            }
        }
        self.primary(ep)
    }

    fn primary(&mut self, ep: bool) -> Result<Formula> {
        let tok = self.peek().tok.clone();
        match tok {
            Tok::LParen => {
                self.bump();
                let lhs = self.implies(ep)?;
                let infix = match &self.peek().tok {
                    Tok::Ident(s) if s == "U" || s == "R" || s == "W" => Some(s.clone()),
                    _ => None,
                };
                let out = match infix {
                    Some(op) => {
                        self.level_check(ep, &op)?;
                        self.bump();
                        let rhs = self.implies(ep)?;
                        match op.as_str() {
                            "U" => Formula::until(lhs, rhs),
                            "R" => Formula::release(lhs, rhs),
                            _ => Formula::weak_until(lhs, rhs),
                        }
                    }
                    None => lhs,
                };
                if self.peek().tok != Tok::RParen {
                    return Err(self.error(&["`)`", "`&`", "`|`", "`->`", "`U`", "`R`", "`W`"]));
                }
                self.bump();
                Ok(out)
            }
            Tok::Hole(k) => {
                self.bump();
                Ok(Formula::Pal(Pal::Placeholder(k)))
            }
            Tok::Ident(name) => {
                if *self.peek_at(1) == Tok::Colon {
                    self.bump();
                    self.bump();
                    let class = self.ident("class id")?;
                    return Ok(Formula::Pal(Pal::Atom(Atom::new(name, class)?)));
                }
                match name.as_str() {
                    "true" => {
                        self.bump();
                        Ok(Formula::top())
                    }
                    "false" => {
                        self.bump();
                        Ok(Formula::bottom())
                    }
                    "K" | "D" => Err(Error::Syntax {
                        line: self.toks[self.pos + 1].line,
                        col: self.toks[self.pos + 1].col,
                        expected: vec!["`{`".into(), "`:`".into()],
                        found: self.peek_at(1).describe(),
                    }),
                    kw if KEYWORDS.contains(&kw) => Err(self.error(&["formula"])),
                    _ => {
                        self.bump();
                        Ok(Formula::Pal(Pal::Atom(Atom::letter(name)?)))
                    }
                }
            }
            _ => Err(self.error(&["formula"])),
        }
    }
}

/// Parse a (possibly temporal) formula.
pub fn parse_formula(text: &str) -> Result<Formula> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let f = p.implies(false)?;
    if p.peek().tok != Tok::Eof {
        return Err(p.error(&["`&`", "`|`", "`->`", "end of input"]));
    }
    Ok(f)
}

/// Parse a formula that must not contain temporal operators.
pub fn parse_pal(text: &str) -> Result<Pal> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let f = p.implies(true)?;
    if p.peek().tok != Tok::Eof {
        return Err(p.error(&["`&`", "`|`", "`->`", "end of input"]));
    }
    match f {
        Formula::Pal(pal) => Ok(pal),
        _ => unreachable!(),
    }
}

// Precedence levels used by the printer.
const IMPLIES: u8 = 0;
const OR: u8 = 1;
const AND: u8 = 2;
const UNARY: u8 = 3;

fn paren(s: String, own: u8, ctx: u8) -> String {
    if own < ctx {
        format!("({s})")
    } else {
        s
    }
}

fn atom_text(a: &Atom) -> String {
    if a.data() == a.class() && !KEYWORDS.contains(&a.data()) {
        a.data().to_string()
    } else {
        a.to_string()
    }
}

fn strip_not_pal(p: &Pal) -> Option<&Pal> {
    match p {
        Pal::Not(q) => Some(q),
        _ => None,
    }
}

fn pal_text(p: &Pal, ctx: u8) -> String {
    match p {
        Pal::Top => "true".into(),
        Pal::Atom(a) => atom_text(a),
        Pal::Placeholder(k) => format!("${k}"),
        Pal::Not(inner) => match inner.as_ref() {
            Pal::Top => "false".into(),
            Pal::And(x, y) => {
                let left_or =
                    matches!(strip_not_pal(x), Some(Pal::And(_, r)) if strip_not_pal(r).is_some());
                if let (Some(a), Some(b), false) = (strip_not_pal(x), strip_not_pal(y), left_or) {
                    paren(
                        format!("{} | {}", pal_text(a, OR), pal_text(b, AND)),
                        OR,
                        ctx,
                    )
                } else if let Some(b) = strip_not_pal(y) {
                    paren(
                        format!("{} -> {}", pal_text(x, OR), pal_text(b, IMPLIES)),
                        IMPLIES,
                        ctx,
                    )
                } else {
                    format!("!{}", pal_text(inner, UNARY))
                }
            }
            _ => format!("!{}", pal_text(inner, UNARY)),
        },
        Pal::And(a, b) => paren(
            format!("{} & {}", pal_text(a, AND), pal_text(b, UNARY)),
            AND,
            ctx,
        ),
        Pal::Knows(i, q) => format!("K{{{i}}} {}", pal_text(q, UNARY)),
        Pal::Dist(g, q) => {
            let ids: Vec<_> = g.iter().map(AgentId::as_str).collect();
            format!("D{{{}}} {}", ids.join(","), pal_text(q, UNARY))
        }
        Pal::Announce(psi, q) => format!("[{}] {}", pal_text(psi, IMPLIES), pal_text(q, UNARY)),
    }
}

/// Inverse of [`Formula::not`].
fn strip_not(f: &Formula) -> Option<Formula> {
    match f {
        Formula::Pal(Pal::Not(p)) => Some(Formula::Pal((**p).clone())),
        Formula::Not(g) => Some((**g).clone()),
        _ => None,
    }
}

/// `!a -> b` and `a | b` denote the same tree; the implication reading wins
/// when `a` is itself an `&` with a negated right operand.
fn is_implication_body(f: &Formula) -> bool {
    match f {
        Formula::And(_, r) => strip_not(r).is_some(),
        Formula::Pal(Pal::And(_, r)) => strip_not_pal(r).is_some(),
        _ => false,
    }
}

fn formula_text(f: &Formula, ctx: u8) -> String {
    match f {
        Formula::Pal(p) => pal_text(p, ctx),
        Formula::Next(g) => format!("X {}", formula_text(g, UNARY)),
        Formula::Until(a, b) => {
            if **a == Formula::top() {
                format!("F {}", formula_text(b, UNARY))
            } else {
                format!(
                    "({} U {})",
                    formula_text(a, IMPLIES),
                    formula_text(b, IMPLIES)
                )
            }
        }
        Formula::And(a, b) => paren(
            format!("{} & {}", formula_text(a, AND), formula_text(b, UNARY)),
            AND,
            ctx,
        ),
        Formula::Not(inner) => match inner.as_ref() {
            Formula::Until(x, y) => {
                let g_lhs = Formula::Pal(Pal::not(Pal::bottom()));
                match (strip_not(x), strip_not(y)) {
                    (_, Some(b)) if **x == g_lhs => format!("G {}", formula_text(&b, UNARY)),
                    (Some(a), Some(b)) => format!(
                        "({} R {})",
                        formula_text(&a, IMPLIES),
                        formula_text(&b, IMPLIES)
                    ),
                    _ => format!("!{}", formula_text(inner, UNARY)),
                }
            }
            Formula::And(x, y) => match (strip_not(x), strip_not(y)) {
                (Some(a), Some(b)) if !is_implication_body(&a) => paren(
                    format!("{} | {}", formula_text(&a, OR), formula_text(&b, AND)),
                    OR,
                    ctx,
                ),
                (_, Some(b)) => paren(
                    format!("{} -> {}", formula_text(x, OR), formula_text(&b, IMPLIES)),
                    IMPLIES,
                    ctx,
                ),
                _ => format!("!{}", formula_text(inner, UNARY)),
            },
            _ => format!("!{}", formula_text(inner, UNARY)),
        },
    }
}

/// Canonical text for `f`; `parse_formula(&pretty(f))` rebuilds `f`.
pub fn pretty(f: &Formula) -> String {
    formula_text(f, IMPLIES)
}

pub fn pretty_pal(p: &Pal) -> String {
    pal_text(p, IMPLIES)
}
