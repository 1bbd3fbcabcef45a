//! Infix grammar shared by configs, reports and golden tests.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' '-'? integer)?
//! primary := number | 'exp' '(' expr ')' | identifier | '(' expr ')'
//! ```
//!
//! Identifiers resolve against a [`ParseContext`]: `u_xxt` is a derivative
//! of dependent `u`, a single independent letter is that coordinate, a bare
//! dependent name is the field itself, anything else is a named constant.

use super::{Expr, ExprError, JetVariable, MultiIndex};

#[derive(Clone, Debug)]
pub struct ParseContext {
    pub independents: Vec<char>,
    pub dependents: Vec<String>,
}

impl Default for ParseContext {
    fn default() -> Self {
        ParseContext {
            independents: vec!['t', 'x'],
            dependents: vec!["u".into()],
        }
    }
}

impl From<&super::JetSpace> for ParseContext {
    fn from(s: &super::JetSpace) -> Self {
        ParseContext {
            independents: s.independents.clone(),
            dependents: s.dependents.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn err(pos: usize, msg: impl Into<String>) -> ExprError {
    ExprError::Parse {
        pos,
        msg: msg.into(),
    }
}

fn lex(s: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && b.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    i = j;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &s[start..i];
            let v = text
                .parse::<f64>()
                .map_err(|_| err(start, format!("bad number `{text}`")))?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(s[start..i].to_string())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(err(i, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    ctx: &'a ParseContext,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn at(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(err(self.at(), format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat('+') {
                terms.push(self.term()?);
            } else if self.eat('-') {
                terms.push(-self.term()?);
            } else {
                break;
            }
        }
        Ok(Expr::sum(terms))
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut factors = vec![self.unary()?];
        loop {
            if self.eat('*') {
                factors.push(self.unary()?);
            } else if self.eat('/') {
                factors.push(self.unary()?.pow(-1));
            } else {
                break;
            }
        }
        Ok(Expr::product(factors))
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let neg = self.eat('-');
        let at = self.at();
        match self.peek().cloned() {
            Some(Tok::Num(k)) if k.fract() == 0.0 && k.abs() <= i32::MAX as f64 => {
                self.pos += 1;
                let k = k as i32;
                Ok(base.pow(if neg { -k } else { k }))
            }
            _ => Err(err(at, "exponent must be an integer literal")),
        }
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let at = self.at();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::constant(v))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if name == "exp" {
                    self.expect('(')?;
                    let e = self.expr()?;
                    self.expect(')')?;
                    return Ok(e.exp());
                }
                self.resolve(&name, at)
            }
            Some(t) => Err(err(at, format!("unexpected token {t:?}"))),
            None => Err(err(at, "unexpected end of input")),
        }
    }

    fn resolve(&self, name: &str, at: usize) -> Result<Expr, ExprError> {
        if let Some((head, tail)) = name.split_once('_') {
            if self.ctx.dependents.iter().any(|d| d == head) {
                if tail.is_empty() || !tail.chars().all(|c| self.ctx.independents.contains(&c)) {
                    return Err(err(at, format!("`{name}` is not a derivative of `{head}`")));
                }
                return Ok(Expr::var(JetVariable::dependent(
                    head,
                    MultiIndex::new(tail.chars().collect()),
                )));
            }
            return Ok(Expr::named(name));
        }
        let mut chars = name.chars();
        if let (Some(c), None) = (chars.next(), chars.next()) {
            if self.ctx.independents.contains(&c) {
                return Ok(Expr::indep(c));
            }
        }
        if self.ctx.dependents.iter().any(|d| d == name) {
            return Ok(Expr::var(JetVariable::dependent(name, MultiIndex::empty())));
        }
        Ok(Expr::named(name))
    }
}

impl ParseContext {
    pub fn parse(&self, s: &str) -> Result<Expr, ExprError> {
        let mut p = Parser {
            toks: lex(s)?,
            pos: 0,
            end: s.len(),
            ctx: self,
        };
        let e = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(err(p.at(), "trailing input"));
        }
        Ok(e)
    }
}
