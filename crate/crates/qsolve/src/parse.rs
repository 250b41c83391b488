//! Text syntax for quantified inequality constraints: a hand-rolled lexer
//! and recursive-descent parser producing normalized constraint trees.
//!
//! Grammar (highest line binds loosest):
//!
//! ```text
//! formula   := quantblock | disj
//! quantblock:= ("forall" | "exists") binding ("," binding)* "." formula
//! binding   := ident "in" "[" num "," num "]"
//! disj      := conj ("or" conj)*
//! conj      := unit ("and" unit)*
//! unit      := "(" formula ")" | "not" unit | atom
//! atom      := term relop term          relop ∈ { <=, <, >=, > }
//! ```
//!
//! Terms use `+ - * / ^` (integer exponents), the functions
//! `sqrt abs sin cos exp log`, decimal literals, and identifiers, with
//! precedence `^` > unary `-` > `* /` > `+ -`. `#` starts a line comment.
//! `not` is eliminated by pushing it down to the atoms; `=` is rejected.

use crate::boxes::{BoxAssignment, Var};
use crate::constraint::{negate_term, Constraint, QuantKind, Rel};
use crate::interval::Interval;
use crate::term::{enclose_decimal, Term, UnaryFn};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, col {col}: {msg}")]
pub struct ParseError {
    pub msg: String,
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{}'", s),
            Tok::Num(s) => format!("number '{}'", s),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Comma => "','".into(),
            Tok::Dot => "'.'".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::Le => "'<='".into(),
            Tok::Lt => "'<'".into(),
            Tok::Ge => "'>='".into(),
            Tok::Gt => "'>'".into(),
            Tok::Eq => "'='".into(),
            Tok::End => "end of input".into(),
        }
    }
}

const KEYWORDS: [&str; 6] = ["forall", "exists", "and", "or", "not", "in"];

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for (i, c) in src.char_indices() {
        if i >= offset {
            break;
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let err = |offset: usize, msg: String| {
        let (line, col) = line_col(src, offset);
        ParseError { msg, line, col }
    };
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            b'[' => {
                toks.push((Tok::LBracket, i));
                i += 1;
            }
            b']' => {
                toks.push((Tok::RBracket, i));
                i += 1;
            }
            b',' => {
                toks.push((Tok::Comma, i));
                i += 1;
            }
            b'+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            b'-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            b'*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            b'/' => {
                toks.push((Tok::Slash, i));
                i += 1;
            }
            b'^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            b'<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((Tok::Le, i));
                    i += 2;
                } else {
                    toks.push((Tok::Lt, i));
                    i += 1;
                }
            }
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((Tok::Ge, i));
                    i += 2;
                } else {
                    toks.push((Tok::Gt, i));
                    i += 1;
                }
            }
            b'=' => {
                toks.push((Tok::Eq, i));
                i += 1;
            }
            b'.' => {
                toks.push((Tok::Dot, i));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len()
                    && bytes[i] == b'.'
                    && bytes.get(i + 1).is_some_and(|c| c.is_ascii_digit())
                {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                toks.push((Tok::Num(src[start..i].to_string()), start));
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                let c = src[i..].chars().next().unwrap();
                return Err(err(i, format!("unexpected character '{}'", c)));
            }
        }
    }
    toks.push((Tok::End, src.len()));
    Ok(toks)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    i: usize,
    scope: Vec<Var>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn peek_offset(&self) -> usize {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn err(&self, offset: usize, msg: impl Into<String>) -> ParseError {
        let (line, col) = line_col(self.src, offset);
        ParseError {
            msg: msg.into(),
            line,
            col,
        }
    }

    fn err_here(&self, msg: impl Into<String>) -> ParseError {
        self.err(self.peek_offset(), msg)
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.err_here(format!(
                "expected {}, found {}",
                want.describe(),
                self.peek().describe()
            )))
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn formula(&mut self) -> Result<Constraint, ParseError> {
        if self.at_keyword("forall") || self.at_keyword("exists") {
            self.quantblock()
        } else {
            self.disj()
        }
    }

    fn quantblock(&mut self) -> Result<Constraint, ParseError> {
        let kind = if self.at_keyword("forall") {
            QuantKind::Forall
        } else {
            QuantKind::Exists
        };
        self.bump();
        let mut bindings = Vec::new();
        loop {
            let offset = self.peek_offset();
            let name = match self.bump() {
                Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => s,
                t => {
                    return Err(self.err(offset, format!("expected a variable name, found {}", t.describe())))
                }
            };
            let v = Var::new(&name);
            if self.scope.contains(&v) {
                return Err(self.err(offset, format!("variable {} rebound", name)));
            }
            if !self.at_keyword("in") {
                return Err(self.err_here(format!("expected 'in', found {}", self.peek().describe())));
            }
            self.bump();
            let iv = self.bracket_interval()?;
            self.scope.push(v.clone());
            bindings.push((v, iv));
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::Dot)?;
        let body = self.formula()?;
        for _ in &bindings {
            self.scope.pop();
        }
        // adjacent same-kind blocks merge into one vector quantifier
        let body = match body {
            Constraint::Quant(q) if q.kind == kind => {
                bindings.extend(q.bindings);
                *q.body
            }
            other => other,
        };
        Ok(Constraint::quant(kind, bindings, body))
    }

    fn bracket_interval(&mut self) -> Result<Interval, ParseError> {
        let start = self.peek_offset();
        self.expect(Tok::LBracket)?;
        let lo = self.signed_number()?;
        self.expect(Tok::Comma)?;
        let hi = self.signed_number()?;
        self.expect(Tok::RBracket)?;
        let iv = Interval::new(lo.lo(), hi.hi());
        if iv.is_empty() {
            return Err(self.err(start, "empty quantifier bound (lower end above upper end)"));
        }
        if !iv.is_finite() {
            return Err(self.err(start, "quantifier bound must be finite"));
        }
        Ok(iv)
    }

    /// Tightest enclosure of an optionally signed decimal literal.
    fn signed_number(&mut self) -> Result<Interval, ParseError> {
        let offset = self.peek_offset();
        let negate = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            Tok::Num(text) => {
                let iv = enclose_decimal(&text).map_err(|m| self.err(offset, m))?;
                Ok(if negate { iv.neg() } else { iv })
            }
            t => Err(self.err(offset, format!("expected a number, found {}", t.describe()))),
        }
    }

    fn disj(&mut self) -> Result<Constraint, ParseError> {
        let mut children = vec![self.conj()?];
        while self.at_keyword("or") {
            self.bump();
            children.push(self.conj()?);
        }
        Ok(if children.len() == 1 {
            children.pop().unwrap()
        } else {
            Constraint::or(children)
        })
    }

    fn conj(&mut self) -> Result<Constraint, ParseError> {
        let mut children = vec![self.unit()?];
        while self.at_keyword("and") {
            self.bump();
            children.push(self.unit()?);
        }
        Ok(if children.len() == 1 {
            children.pop().unwrap()
        } else {
            Constraint::and(children)
        })
    }

    fn unit(&mut self) -> Result<Constraint, ParseError> {
        if self.at_keyword("not") {
            self.bump();
            let inner = self.unit()?;
            return Ok(inner.opposite());
        }
        if *self.peek() == Tok::LParen {
            // Could open a sub-formula or a parenthesized term; try the
            // formula reading first and fall back to an atom.
            let snapshot = self.i;
            self.bump();
            if let Ok(f) = self.formula() {
                if *self.peek() == Tok::RParen {
                    self.bump();
                    return Ok(f);
                }
            }
            self.i = snapshot;
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Constraint, ParseError> {
        let left = self.sum()?;
        let offset = self.peek_offset();
        let op = self.bump();
        let (residual, rel) = match op {
            Tok::Le => (sub_normalized(&self.sum()?, &left), Rel::Ge),
            Tok::Lt => (sub_normalized(&self.sum()?, &left), Rel::Gt),
            Tok::Ge => (sub_normalized(&left, &self.sum()?), Rel::Ge),
            Tok::Gt => (sub_normalized(&left, &self.sum()?), Rel::Gt),
            Tok::Eq => {
                return Err(self.err(
                    offset,
                    "equality is not supported; rewrite with a slack, e.g. abs(f) <= eps or f^2 <= eps",
                ))
            }
            t => {
                return Err(self.err(
                    offset,
                    format!("expected a comparison operator, found {}", t.describe()),
                ))
            }
        };
        Ok(Constraint::atom(residual, rel))
    }

    fn sum(&mut self) -> Result<Arc<Term>, ParseError> {
        let mut acc = self.product()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = Arc::new(Term::Add(acc, self.product()?));
                }
                Tok::Minus => {
                    self.bump();
                    acc = Arc::new(Term::Sub(acc, self.product()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<Arc<Term>, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    acc = Arc::new(Term::Mul(acc, self.unary()?));
                }
                Tok::Slash => {
                    self.bump();
                    acc = Arc::new(Term::Div(acc, self.unary()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Arc<Term>, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.unary()?;
            return Ok(Arc::new(Term::Neg(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Arc<Term>, ParseError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let offset = self.peek_offset();
        let negate = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            Tok::Num(text) if text.bytes().all(|b| b.is_ascii_digit()) => {
                let n: i32 = text
                    .parse()
                    .map_err(|_| self.err(offset, "exponent out of range"))?;
                Ok(Arc::new(Term::Pow(base, if negate { -n } else { n })))
            }
            t => Err(self.err(
                offset,
                format!("exponent must be an integer literal, found {}", t.describe()),
            )),
        }
    }

    fn primary(&mut self) -> Result<Arc<Term>, ParseError> {
        let offset = self.peek_offset();
        match self.bump() {
            Tok::Num(text) => {
                let value = enclose_decimal(&text).map_err(|m| self.err(offset, m))?;
                Ok(Arc::new(Term::Const {
                    text: text.into(),
                    value,
                }))
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    let f = UnaryFn::from_name(&name)
                        .ok_or_else(|| self.err(offset, format!("unknown function '{}'", name)))?;
                    self.bump();
                    let arg = self.sum()?;
                    self.expect(Tok::RParen)?;
                    Ok(Arc::new(Term::Fn(f, arg)))
                } else if KEYWORDS.contains(&name.as_str()) {
                    Err(self.err(offset, format!("unexpected keyword '{}'", name)))
                } else {
                    Ok(Term::var(&name))
                }
            }
            Tok::LParen => {
                let t = self.sum()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            t => Err(self.err(offset, format!("expected a term, found {}", t.describe()))),
        }
    }
}

/// `a - b` with literal zeroes folded away so residuals of one-sided
/// comparisons keep their original spelling.
fn sub_normalized(a: &Arc<Term>, b: &Arc<Term>) -> Arc<Term> {
    if b.is_zero() {
        a.clone()
    } else if a.is_zero() {
        negate_term(b)
    } else {
        Arc::new(Term::Sub(a.clone(), b.clone()))
    }
}

pub fn parse_constraint(src: &str) -> Result<Constraint, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser {
        src,
        toks,
        i: 0,
        scope: Vec::new(),
    };
    let c = p.formula()?;
    if *p.peek() != Tok::End {
        return Err(p.err_here(format!("unexpected {} after formula", p.peek().describe())));
    }
    Ok(c)
}

/// Parses a box of the form `x=[a,b];y=[c,d]` (used for CLI bounds).
pub fn parse_box(src: &str) -> Result<BoxAssignment, ParseError> {
    let mut out = BoxAssignment::all();
    for part in src.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let toks = lex(part).map_err(|e| ParseError {
            msg: format!("in box component '{}': {}", part, e.msg),
            ..e
        })?;
        let mut p = Parser {
            src: part,
            toks,
            i: 0,
            scope: Vec::new(),
        };
        let offset = p.peek_offset();
        let name = match p.bump() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => s,
            t => return Err(p.err(offset, format!("expected a variable name, found {}", t.describe()))),
        };
        p.expect(Tok::Eq)?;
        let lb = p.peek_offset();
        p.expect(Tok::LBracket)?;
        let lo = p.signed_number()?;
        p.expect(Tok::Comma)?;
        let hi = p.signed_number()?;
        p.expect(Tok::RBracket)?;
        if *p.peek() != Tok::End {
            return Err(p.err_here(format!("unexpected {} after interval", p.peek().describe())));
        }
        let iv = Interval::new(lo.lo(), hi.hi());
        if iv.is_empty() {
            return Err(p.err(lb, format!("empty interval for variable {}", name)));
        }
        out = out.with(Var::new(&name), iv);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{Constraint, QuantKind, Rel};
    use crate::term::Term;

    fn roundtrip(src: &str) {
        let c = parse_constraint(src).unwrap();
        let printed = c.to_string();
        let again = parse_constraint(&printed)
            .unwrap_or_else(|e| panic!("reparse of '{}' failed: {}", printed, e));
        assert_eq!(c, again, "print/parse mismatch for '{}' -> '{}'", src, printed);
    }

    #[test]
    fn disc_example_structure() {
        let c = parse_constraint("exists y in [-2,2]. x^2 + y^2 <= 1 and y >= 0").unwrap();
        let Constraint::Quant(q) = &c else { panic!("expected quantifier") };
        assert_eq!(q.kind, QuantKind::Exists);
        assert_eq!(q.bindings.len(), 1);
        assert_eq!(q.bindings[0].1, Interval::new(-2.0, 2.0));
        let Constraint::And(j) = &*q.body else { panic!("expected and") };
        assert_eq!(j.children.len(), 2);
        let Constraint::Atom(a) = &j.children[0] else { panic!() };
        assert_eq!(a.rel, Rel::Ge);
        assert!(matches!(&*a.term, Term::Sub(..)), "residual is 1 - (x^2+y^2)");
        assert_eq!(c.to_string(), "exists y in [-2, 2]. 1 - (x^2 + y^2) >= 0 and y >= 0");
    }

    #[test]
    fn negation_pushes_to_atom() {
        let c = parse_constraint("not (x < 0)").unwrap();
        assert_eq!(c, parse_constraint("x >= 0").unwrap());
        let d = parse_constraint("not (x >= 0 and y > 1)").unwrap();
        assert_eq!(d.to_string(), "-x > 0 or 1 - y >= 0");
    }

    #[test]
    fn empty_bound_rejected() {
        let e = parse_constraint("forall x in [1,0]. x > 0").unwrap_err();
        assert!(e.msg.contains("empty quantifier bound"), "{}", e.msg);
    }

    #[test]
    fn equality_rejected_with_hint() {
        let e = parse_constraint("x = 0").unwrap_err();
        assert!(e.msg.contains("eps"), "{}", e.msg);
    }

    #[test]
    fn rebinding_rejected() {
        let e = parse_constraint("exists x in [0,1]. exists x in [0,1]. x >= 0").unwrap_err();
        assert!(e.msg.contains("rebound"), "{}", e.msg);
        let e2 = parse_constraint("exists x in [0,1], x in [2,3]. x >= 0").unwrap_err();
        assert!(e2.msg.contains("rebound"), "{}", e2.msg);
    }

    #[test]
    fn same_kind_blocks_merge() {
        let c = parse_constraint("exists x in [0,1]. exists y in [0,1]. x + y >= 1").unwrap();
        let Constraint::Quant(q) = &c else { panic!() };
        assert_eq!(q.bindings.len(), 2);
        let mixed = parse_constraint("exists x in [0,1]. forall y in [0,1]. x - y >= 0").unwrap();
        let Constraint::Quant(q) = &mixed else { panic!() };
        assert_eq!(q.bindings.len(), 1);
        assert!(matches!(&*q.body, Constraint::Quant(_)));
    }

    #[test]
    fn precedence_in_terms() {
        let c = parse_constraint("x + y * z^2 >= 0").unwrap();
        let Constraint::Atom(a) = &c else { panic!() };
        let Term::Add(l, r) = &*a.term else { panic!("top is +") };
        assert!(matches!(&**l, Term::Var(_)));
        let Term::Mul(_, rr) = &**r else { panic!("right is *") };
        assert!(matches!(&**rr, Term::Pow(_, 2)));

        let n = parse_constraint("-x^2 <= 4/x >= 0").unwrap_err();
        let _ = n; // chained comparisons are a syntax error
    }

    #[test]
    fn parenthesized_term_vs_formula() {
        roundtrip("(x + 1) * 2 >= 0");
        let grouped = parse_constraint("(x >= 0 or y >= 0) and z >= 0").unwrap();
        let Constraint::And(j) = &grouped else { panic!() };
        assert!(matches!(j.children[0], Constraint::Or(_)));
    }

    #[test]
    fn comments_are_skipped() {
        let c = parse_constraint("# heading\nx >= 0 # trailing\n").unwrap();
        assert_eq!(c.to_string(), "x >= 0");
    }

    #[test]
    fn functions_parse_and_unknown_rejected() {
        roundtrip("sqrt(x) - log(y) / cos(z) >= 0");
        let e = parse_constraint("foo(x) >= 0").unwrap_err();
        assert!(e.msg.contains("unknown function"));
    }

    #[test]
    fn negative_exponent() {
        let c = parse_constraint("x^-2 > 0").unwrap();
        let Constraint::Atom(a) = &c else { panic!() };
        assert!(matches!(&*a.term, Term::Pow(_, -2)));
        roundtrip("x^-2 > 0");
    }

    #[test]
    fn print_parse_identity_samples() {
        for src in [
            "x >= 0",
            "0 <= x",
            "x < 0",
            "x^2 + y^2 <= 1",
            "exists y in [-2,2]. x^2 + y^2 <= 1 and y >= 0",
            "forall x in [-10,10]. x^2 + 1 >= 0",
            "exists x in [-1,1]. -x^2 >= 0",
            "not (x < 0 or y >= 2)",
            "(x >= 0 and y >= 0) or (x < 0 and y < 0)",
            "forall a in [0,1], b in [0.5,1]. a * b <= 1 or a - b > 0.25",
            "1 / (x + 2) <= 0.5",
            "abs(x - 0.5) <= 0.25 and sin(y) > 0",
        ] {
            roundtrip(src);
        }
    }

    #[test]
    fn literal_positions_in_errors() {
        let e = parse_constraint("x >=\n   $").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.col >= 3);
    }

    #[test]
    fn box_syntax() {
        let b = parse_box("x=[-2,2]; y=[0, 1.5]").unwrap();
        assert_eq!(b.get(&Var::new("x")), Interval::new(-2.0, 2.0));
        assert_eq!(b.get(&Var::new("y")).lo(), 0.0);
        assert!(parse_box("x=[2,-2]").is_err());
        assert!(parse_box("x=").is_err());
    }
}
