//! Recursive-descent parser for field expressions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' ['+' | '-'] integer)?
//! primary := number | 'x1'..'x5' | ('exp' | 'sin' | 'cos') '(' expr ')' | '(' expr ')'
//! ```

use super::expr::Expr;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Sym(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v, _) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::End => "end of input".to_string(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            let mut integral = true;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                integral &= bytes[i] != b'.';
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    integral = false;
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| Error::Syntax {
                position: start,
                found: format!("`{text}`"),
                expected: vec!["number".into()],
            })?;
            out.push((start, Tok::Num(v, integral)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(Error::Syntax {
                position: i,
                found: format!("`{c}`"),
                expected: vec!["operator".into(), "number".into(), "identifier".into()],
            });
        }
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T> {
        Err(Error::Syntax {
            position: self.offset(),
            found: self.peek().describe(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.fail(&[&format!("`{c}`")])
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Sym('+') => {
                    self.bump();
                    lhs = Expr::add(lhs, self.term()?);
                }
                Tok::Sym('-') => {
                    self.bump();
                    lhs = Expr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Sym('*') => {
                    self.bump();
                    lhs = Expr::mul(lhs, self.unary()?);
                }
                Tok::Sym('/') => {
                    self.bump();
                    lhs = Expr::div(lhs, self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Tok::Sym('-') => {
                self.bump();
                Ok(Expr::neg(self.unary()?))
            }
            Tok::Sym('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if *self.peek() != Tok::Sym('^') {
            return Ok(base);
        }
        self.bump();
        let sign = match self.peek() {
            Tok::Sym('-') => {
                self.bump();
                -1
            }
            Tok::Sym('+') => {
                self.bump();
                1
            }
            _ => 1,
        };
        match self.peek().clone() {
            Tok::Num(v, true) if v <= i32::MAX as f64 => {
                self.bump();
                Ok(Expr::pow(base, sign * v as i32))
            }
            _ => self.fail(&["integer exponent"]),
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Num(v, _) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(k) = variable_index(&name) {
                    return Ok(Expr::Var(k));
                }
                let f: fn(Expr) -> Expr = match name.as_str() {
                    "exp" => Expr::exp,
                    "sin" => Expr::sin,
                    "cos" => Expr::cos,
                    _ => return Err(Error::UnknownIdentifier { name, position: at }),
                };
                self.expect('(')?;
                let arg = self.expr()?;
                self.expect(')')?;
                Ok(f(arg))
            }
            _ => self.fail(&["number", "x1..x5", "exp", "sin", "cos", "`(`", "`-`"]),
        }
    }
}

fn variable_index(name: &str) -> Option<usize> {
    match name {
        "x1" => Some(0),
        "x2" => Some(1),
        "x3" => Some(2),
        "x4" => Some(3),
        "x5" => Some(4),
        _ => None,
    }
}

pub fn parse_expr(src: &str) -> Result<Expr> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    if *p.peek() == Tok::End {
        return p.fail(&["expression"]);
    }
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail(&["`+`", "`-`", "`*`", "`/`", "`^`", "end of input"]);
    }
    Ok(e)
}
