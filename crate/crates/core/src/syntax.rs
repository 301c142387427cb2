//! Concrete text syntax for terms and formulas.
//!
//! ```text
//! formula := ('exists' | 'forall') var (',' var)* '.' formula
//!          | or ('->' formula)?
//! or      := and ('||' or)?
//! and     := unary ('&&' and)?
//! unary   := '!' unary | quantified | 'true' | 'false' | term rel term | '(' formula ')'
//! term    := product (('+' | '-') product)*
//! product := factor ('*' factor)*          (one side must be constant)
//! factor  := '-' factor | number | var | '(' term ')'
//! ```
//!
//! Numbers are integers, decimals (`1.1`) or fractions (`11/10`). Variables
//! are `name` or `server.name`. The printer emits text that parses back to
//! the identical syntax tree.

use std::fmt;

use num_traits::{One, Signed};
use thiserror::Error;

use crate::formula::{Formula, Rel, Term, Var};
use crate::rational::{format_rational, parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(Rational),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(n) => write!(f, "`{}`", format_rational(n)),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
    pub start: usize,
    pub end: usize,
}

const SYMBOLS: &[&str] = &[
    "&&", "||", "->", "!=", "<=", ">=", ":=", "<", ">", "=", "!", "+", "-", "*", "(", ")", "{", "}",
    "[", "]", ",", ";", ":", ".",
];

const UNICODE_SYMBOLS: &[(char, &str)] = &[
    ('∧', "&&"),
    ('∨', "||"),
    ('¬', "!"),
    ('→', "->"),
    ('≤', "<="),
    ('≥', ">="),
    ('≠', "!="),
];

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    let mut line = 1;
    let mut line_start = 0;
    while i < src.len() {
        let c = src[i..].chars().next().unwrap();
        let column = src[line_start..i].chars().count() + 1;
        if c == '\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if c == '#' || src[i..].starts_with("//") {
            while i < src.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while i < src.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            while i < src.len() && bytes[i] == b'\'' {
                i += 1;
            }
            Tok::Ident(src[start..i].to_string())
        } else if c.is_ascii_digit() {
            while i < src.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let digit_at = |k: usize| k < src.len() && bytes[k].is_ascii_digit();
            if i < src.len() && (bytes[i] == b'.' || bytes[i] == b'/') && digit_at(i + 1) {
                i += 1;
                while digit_at(i) {
                    i += 1;
                }
            }
            let text = &src[start..i];
            let n = parse_rational(text).ok_or_else(|| ParseError {
                line,
                column,
                message: format!("invalid number `{text}`"),
            })?;
            Tok::Number(n)
        } else if let Some((_, sym)) = UNICODE_SYMBOLS.iter().find(|(u, _)| *u == c) {
            i += c.len_utf8();
            Tok::Sym(sym)
        } else if c == '∃' {
            i += c.len_utf8();
            Tok::Ident("exists".into())
        } else if c == '∀' {
            i += c.len_utf8();
            Tok::Ident("forall".into())
        } else if let Some(sym) = SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            i += sym.len();
            Tok::Sym(sym)
        } else {
            return Err(ParseError { line, column, message: format!("unexpected character `{c}`") });
        };
        out.push(Token { tok, line, column, start, end: i });
    }
    let column = src[line_start..].chars().count() + 1;
    out.push(Token { tok: Tok::Eof, line, column, start: src.len(), end: src.len() });
    Ok(out)
}

const KEYWORDS: &[&str] = &["true", "false", "exists", "forall"];

/// Recursive-descent parser over a token stream; shared by the config-type
/// and policy parsers.
pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: tokenize(src)?, pos: 0 })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    pub fn token(&self) -> &Token {
        &self.toks[self.pos]
    }

    /// True if token `k` ahead starts exactly where token `k - 1` ends.
    pub fn adjacent(&self, k: usize) -> bool {
        let a = (self.pos + k - 1).min(self.toks.len() - 1);
        let b = (self.pos + k).min(self.toks.len() - 1);
        self.toks[a].end == self.toks[b].start
    }

    pub fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        let t = self.token();
        ParseError { line: t.line, column: t.column, message: message.into() }
    }

    pub fn unexpected(&self, expected: &str) -> ParseError {
        self.error(format!("expected {expected}, found {}", self.peek()))
    }

    pub fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    pub fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == kw)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.at_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.at_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub fn expect_eof(&self) -> Result<(), ParseError> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    pub fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    /// An identifier that may contain hyphens, such as `storage-brokering`.
    pub fn hyphenated_ident(&mut self) -> Result<String, ParseError> {
        let mut name = self.ident()?;
        while self.at_sym("-")
            && self.toks[self.pos - 1].end == self.token().start
            && matches!(self.peek_at(1), Tok::Ident(_))
            && self.adjacent(1)
        {
            self.bump();
            name.push('-');
            name.push_str(&self.ident()?);
        }
        Ok(name)
    }

    /// `name` or `prefix.name` with no whitespace around the dot.
    pub fn var(&mut self) -> Result<Var, ParseError> {
        let first = self.ident()?;
        let glued = self.toks[self.pos - 1].end == self.token().start;
        if glued && self.at_sym(".") && matches!(self.peek_at(1), Tok::Ident(_)) && self.adjacent(1) {
            self.bump();
            let name = self.ident()?;
            return Ok(Var::prefixed(first, name));
        }
        Ok(Var::new(first))
    }

    /// A quantifier binder; `exists s1.price. body` binds `s1.price`.
    fn binder(&mut self) -> Result<Var, ParseError> {
        let prefixed = matches!(self.peek_at(1), Tok::Sym("."))
            && self.adjacent(1)
            && matches!(self.peek_at(2), Tok::Ident(_))
            && self.adjacent(2)
            && matches!(self.peek_at(3), Tok::Sym(".") | Tok::Sym(","));
        if prefixed {
            let p = self.ident()?;
            self.bump();
            let n = self.ident()?;
            Ok(Var::prefixed(p, n))
        } else {
            Ok(Var::new(self.ident()?))
        }
    }

    pub fn formula(&mut self) -> Result<Formula, ParseError> {
        if self.at_keyword("exists") || self.at_keyword("forall") {
            return self.quantified();
        }
        let lhs = self.or()?;
        if self.eat_sym("->") {
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn quantified(&mut self) -> Result<Formula, ParseError> {
        let universal = self.at_keyword("forall");
        self.bump();
        let mut vars = vec![self.binder()?];
        while self.eat_sym(",") {
            vars.push(self.binder()?);
        }
        self.expect_sym(".")?;
        let body = self.formula()?;
        Ok(vars.into_iter().rev().fold(body, |acc, x| {
            if universal {
                Formula::forall(x, acc)
            } else {
                Formula::exists(x, acc)
            }
        }))
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.and()?;
        if self.eat_sym("||") {
            let rhs = self.or()?;
            return Ok(Formula::or(lhs, rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if self.eat_sym("&&") {
            let rhs = self.and()?;
            return Ok(Formula::and(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.eat_sym("!") {
            return Ok(Formula::not(self.unary()?));
        }
        if self.at_keyword("exists") || self.at_keyword("forall") {
            return self.quantified();
        }
        if self.at_keyword("true") {
            self.bump();
            return Ok(Formula::truth());
        }
        if self.at_keyword("false") {
            self.bump();
            return Ok(Formula::falsity());
        }
        if self.at_sym("(") {
            // Either a parenthesised formula or an atom whose left term starts
            // with a parenthesis; try the atom first.
            let save = self.pos;
            let atom_err = match self.atom() {
                Ok(a) => return Ok(a),
                Err(e) => e,
            };
            let atom_pos = self.pos;
            self.pos = save;
            self.bump();
            let inner = self.formula().and_then(|f| {
                self.expect_sym(")")?;
                Ok(f)
            });
            return match inner {
                Ok(f) => Ok(f),
                Err(_) if atom_pos > self.pos => Err(atom_err),
                Err(e) => Err(e),
            };
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.term()?;
        let rel = match self.peek() {
            Tok::Sym("=") => Rel::Eq,
            Tok::Sym("!=") => Rel::Ne,
            Tok::Sym("<=") => Rel::Le,
            Tok::Sym(">=") => Rel::Ge,
            Tok::Sym("<") => Rel::Lt,
            Tok::Sym(">") => Rel::Gt,
            _ => return Err(self.unexpected("a relation")),
        };
        self.bump();
        let rhs = self.term()?;
        Ok(Formula::Atom(lhs, rel, rhs))
    }

    pub fn term(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.product()?;
        loop {
            if self.eat_sym("+") {
                let rhs = self.product()?;
                acc = Term::sum(acc, rhs);
            } else if self.eat_sym("-") {
                let rhs = match self.product()? {
                    Term::Const(c) => Term::Const(-c),
                    Term::Scale(c, t) => Term::Scale(-c, t),
                    t => Term::scale(-Rational::one(), t),
                };
                acc = Term::sum(acc, rhs);
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.factor()?;
        while self.at_sym("*") {
            let err = self.error("nonlinear product: one factor must be constant");
            self.bump();
            let rhs = self.factor()?;
            acc = match (acc, rhs) {
                (Term::Const(c), t) => Term::scale(c, t),
                (t, Term::Const(c)) => Term::scale(c, t),
                (a, b) => match (a.ground_value(), b.ground_value()) {
                    (Some(c), _) => Term::scale(c, b),
                    (_, Some(c)) => Term::scale(c, a),
                    _ => return Err(err),
                },
            };
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Sym("-") => {
                self.bump();
                if let Tok::Number(n) = self.peek().clone() {
                    self.bump();
                    return Ok(Term::Const(-n));
                }
                Ok(Term::scale(-Rational::one(), self.factor()?))
            }
            Tok::Number(n) => {
                self.bump();
                Ok(Term::Const(n))
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.term()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            Tok::Ident(_) => Ok(Term::Var(self.var()?)),
            _ => Err(self.unexpected("a term")),
        }
    }
}

pub fn parse_formula(src: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(src)?;
    let f = p.formula()?;
    p.expect_eof()?;
    Ok(f)
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

// Printing ------------------------------------------------------------------

const PREC_QUANT: u8 = 0;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_UNARY: u8 = 4;

const TPREC_SUM: u8 = 0;
const TPREC_PRODUCT: u8 = 1;
const TPREC_FACTOR: u8 = 2;

fn write_term(t: &Term, min: u8, out: &mut String) {
    let (prec, text) = match t {
        Term::Var(v) => (TPREC_FACTOR, v.to_string()),
        Term::Const(c) => (TPREC_FACTOR, format_rational(c)),
        Term::Sum(a, b) => {
            let mut s = String::new();
            write_term(a, TPREC_SUM, &mut s);
            match &**b {
                Term::Const(c) if c.is_negative() => {
                    s.push_str(" - ");
                    s.push_str(&format_rational(&-c));
                }
                Term::Scale(c, inner) if c.is_negative() && matches!(**inner, Term::Var(_) | Term::Sum(..)) => {
                    s.push_str(" - ");
                    if !(-c).is_one() {
                        s.push_str(&format_rational(&-c));
                        s.push_str(" * ");
                    }
                    write_term(inner, TPREC_FACTOR, &mut s);
                }
                _ => {
                    s.push_str(" + ");
                    write_term(b, TPREC_PRODUCT, &mut s);
                }
            }
            (TPREC_SUM, s)
        }
        Term::Scale(c, inner) if (-c).is_one() && !matches!(**inner, Term::Const(_)) => {
            let mut s = String::from("-");
            write_term(inner, TPREC_FACTOR, &mut s);
            (TPREC_PRODUCT, s)
        }
        Term::Scale(c, inner) => {
            let mut s = format_rational(c);
            s.push_str(" * ");
            write_term(inner, TPREC_FACTOR, &mut s);
            (TPREC_PRODUCT, s)
        }
    };
    if prec < min {
        out.push('(');
        out.push_str(&text);
        out.push(')');
    } else {
        out.push_str(&text);
    }
}

fn write_formula(f: &Formula, min: u8, out: &mut String) {
    let (prec, text) = if f.is_true() {
        (u8::MAX, "true".to_string())
    } else if f.is_false() {
        (u8::MAX, "false".to_string())
    } else if let Some((a, b)) = f.as_or() {
        let mut s = String::new();
        write_formula(a, PREC_AND, &mut s);
        s.push_str(" || ");
        write_formula(b, PREC_OR, &mut s);
        (PREC_OR, s)
    } else if let Some((x, body)) = f.as_forall() {
        let mut s = format!("forall {x}. ");
        write_formula(body, PREC_QUANT, &mut s);
        (PREC_QUANT, s)
    } else {
        match f {
            Formula::Atom(a, r, b) => {
                let mut s = String::new();
                write_term(a, TPREC_SUM, &mut s);
                s.push(' ');
                s.push_str(r.symbol());
                s.push(' ');
                write_term(b, TPREC_SUM, &mut s);
                (u8::MAX, s)
            }
            Formula::And(a, b) => {
                let mut s = String::new();
                write_formula(a, PREC_UNARY, &mut s);
                s.push_str(" && ");
                write_formula(b, PREC_AND, &mut s);
                (PREC_AND, s)
            }
            Formula::Not(a) => {
                let mut s = String::from("!");
                let mut inner = String::new();
                write_formula(a, PREC_UNARY, &mut inner);
                s.push_str(&inner);
                (PREC_UNARY, s)
            }
            Formula::Exists(x, body) => {
                let mut s = format!("exists {x}. ");
                write_formula(body, PREC_QUANT, &mut s);
                (PREC_QUANT, s)
            }
        }
    };
    if prec < min {
        out.push('(');
        out.push_str(&text);
        out.push(')');
    } else {
        out.push_str(&text);
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_term(self, TPREC_SUM, &mut s);
        f.write_str(&s)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_formula(self, PREC_QUANT, &mut s);
        f.write_str(&s)
    }
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn v(n: &str) -> Term {
        Term::Var(Var::new(n))
    }

    #[test]
    fn parses_scaled_sum_terms() {
        let t = parse_term("1.1*(s1.price + s2.price)").unwrap();
        assert_eq!(
            t,
            Term::scale(
                ratio(11, 10),
                Term::sum(
                    Term::Var(Var::prefixed("s1", "price")),
                    Term::Var(Var::prefixed("s2", "price"))
                )
            )
        );
        assert_eq!(parse_term("x - 2").unwrap(), Term::sum(v("x"), Term::Const(int(-2))));
        assert_eq!(parse_term("x - 1/2 * y").unwrap(), Term::sum(v("x"), Term::scale(ratio(-1, 2), v("y"))));
        assert_eq!(parse_term("x * 3").unwrap(), Term::scale(int(3), v("x")));
        assert_eq!(parse_term("2 * 3 * x").unwrap(), Term::scale(int(6), v("x")));
        assert_eq!(parse_term("2*(3*x)").unwrap(), Term::scale(int(2), Term::scale(int(3), v("x"))));
    }

    #[test]
    fn rejects_nonlinear_products() {
        let e = parse_formula("x * y < 3").unwrap_err();
        assert!(e.message.contains("nonlinear"), "{e}");
    }

    #[test]
    fn connectives_and_keywords() {
        let f = parse_formula("x < 5 && !(y = 2) || z >= 1").unwrap();
        let expect = Formula::or(
            Formula::and(
                Formula::atom(v("x"), Rel::Lt, Term::Const(int(5))),
                Formula::not(Formula::atom(v("y"), Rel::Eq, Term::Const(int(2)))),
            ),
            Formula::atom(v("z"), Rel::Ge, Term::Const(int(1))),
        );
        assert_eq!(f, expect);
        assert_eq!(parse_formula("true").unwrap(), Formula::truth());
        assert_eq!(parse_formula("false").unwrap(), Formula::falsity());
        assert_eq!(
            parse_formula("a = 1 -> b = 1").unwrap(),
            Formula::implies(parse_formula("a = 1").unwrap(), parse_formula("b = 1").unwrap())
        );
    }

    #[test]
    fn quantifier_binders() {
        let f = parse_formula("exists x, y. x < y").unwrap();
        assert_eq!(
            f,
            Formula::exists(Var::new("x"), Formula::exists(Var::new("y"), parse_formula("x < y").unwrap()))
        );
        let g = parse_formula("exists s1.price. s1.price <= 3").unwrap();
        assert_eq!(g.free_vars().len(), 0);
        let h = parse_formula("exists x.x > 0").unwrap();
        assert_eq!(h, Formula::exists(Var::new("x"), parse_formula("x > 0").unwrap()));
        let u = parse_formula("∃y. x ≤ y ∧ y ≠ 2").unwrap();
        assert_eq!(u, parse_formula("exists y. x <= y && y != 2").unwrap());
    }

    #[test]
    fn parenthesised_terms_in_atoms() {
        let f = parse_formula("(x + 1) * 2 <= 3").unwrap();
        assert_eq!(
            f,
            Formula::atom(Term::scale(int(2), Term::sum(v("x"), Term::Const(int(1)))), Rel::Le, Term::Const(int(3)))
        );
        let g = parse_formula("((x <= 3))").unwrap();
        assert_eq!(g, Formula::atom(v("x"), Rel::Le, Term::Const(int(3))));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_formula("x <= \n  3 &&").unwrap_err();
        assert_eq!((e.line, e.column), (2, 7));
        let e = parse_formula("x @ 3").unwrap_err();
        assert_eq!((e.line, e.column), (1, 3));
    }

    #[test]
    fn prints_readably() {
        let f = parse_formula("exists y. (x < 5 && x > y && y > 0)").unwrap();
        assert_eq!(f.to_string(), "exists y. x < 5 && x > y && y > 0");
        let g = parse_formula("x < 1 || x > 1").unwrap();
        assert_eq!(g.to_string(), "x < 1 || x > 1");
        let h = parse_formula("(exists y. y < x) && x = -3/2").unwrap();
        assert_eq!(h.to_string(), "(exists y. y < x) && x = -3/2");
        assert_eq!(parse_term("a - b").unwrap().to_string(), "a - b");
        assert_eq!(parse_term("-a + 2 - 3*b").unwrap().to_string(), "-a + 2 - 3 * b");
    }

    #[test]
    fn print_parse_round_trip_examples() {
        for src in [
            "x < 5 && x > 0",
            "!(a = 1 || b = 2) && c != 3",
            "forall x. x >= 0 -> x + y >= y",
            "(a = 1 || b = 1) && (c = 1 || !(d = 1 && e = 2))",
            "2 * (3 * x) + -1 * (y + z) <= -7/3",
            "!!(x > 0)",
            "!(exists x. x > y)",
            "x = 2 * -3",
            "exists s1.price, q. s1.price <= q",
        ] {
            let f = parse_formula(src).unwrap();
            let back = parse_formula(&f.to_string()).unwrap();
            assert_eq!(back, f, "{src} printed as {f}");
        }
    }
}
