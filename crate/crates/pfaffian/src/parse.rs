//! Recursive-descent parser for right-hand-side expressions.
//!
//! Grammar:
//!   expr   := term (('+'|'-') term)*
//!   term   := factor ('*' factor)*
//!   factor := '-' factor | atom ('^' uint)?
//!   atom   := rational | var | '(' expr ')'
//!   var    := 'x' uint | 'y' uint
//!
//! Precedence: '^' binds tighter than unary '-', which binds tighter than
//! '*', which binds tighter than binary '+'/'-'. Implicit multiplication
//! is a syntax error.

use num_bigint::BigInt;
use num_traits::One;
use thiserror::Error;

use crate::poly::Poly;
use crate::rat::Rat;
use crate::series::MultiIndex;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("variable {name} out of range at position {pos} (x1..x{m}, y1..y{n} allowed)")]
    VarOutOfRange {
        name: String,
        pos: usize,
        m: usize,
        n: usize,
    },
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    m: usize,
    n: usize,
}

/// Parses an expression into a canonical polynomial over m x-variables and
/// n y-variables. Rational literals are exact.
pub fn parse_expression(text: &str, m: usize, n: usize) -> Result<Poly, ExprError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        m,
        n,
    };
    p.skip_ws();
    let poly = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(poly)
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> ExprError {
        ExprError::Syntax {
            pos: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Poly, ExprError> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    self.skip_ws();
                    let t = self.term()?;
                    acc = acc.add(&t).expect("uniform shape");
                }
                Some(b'-') => {
                    self.pos += 1;
                    self.skip_ws();
                    let t = self.term()?;
                    acc = acc.sub(&t).expect("uniform shape");
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly, ExprError> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    self.skip_ws();
                    let f = self.factor()?;
                    acc = acc.mul(&f).expect("uniform shape");
                }
                // Adjacency of two factors without an operator is a
                // syntax error, caught by the caller seeing leftover input
                // or here for a clearer message.
                Some(c) if c == b'(' || c.is_ascii_alphanumeric() => {
                    return Err(self.err("implicit multiplication is not allowed; use '*'"));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Poly, ExprError> {
        self.skip_ws();
        if self.eat(b'-') {
            self.skip_ws();
            let f = self.factor()?;
            return Ok(f.neg());
        }
        let atom = self.atom()?;
        self.skip_ws();
        if self.eat(b'^') {
            self.skip_ws();
            let e = self.uint()?;
            return Ok(atom.pow(e).expect("uniform shape"));
        }
        Ok(atom)
    }

    fn atom(&mut self) -> Result<Poly, ExprError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(inner)
            }
            Some(b'x') | Some(b'y') => self.variable(),
            Some(c) if c.is_ascii_digit() => self.rational(),
            Some(_) => Err(self.err("expected a number, variable, or '('")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn variable(&mut self) -> Result<Poly, ExprError> {
        let start = self.pos;
        let kind = self.src[self.pos];
        self.pos += 1;
        let idx = self.uint()? as usize;
        let name = format!("{}{}", kind as char, idx);
        let bound = if kind == b'x' { self.m } else { self.n };
        if idx == 0 || idx > bound {
            return Err(ExprError::VarOutOfRange {
                name,
                pos: start,
                m: self.m,
                n: self.n,
            });
        }
        let (xe, ye) = if kind == b'x' {
            (MultiIndex::unit(self.m, idx), MultiIndex::zero(self.n))
        } else {
            (MultiIndex::zero(self.m), MultiIndex::unit(self.n, idx))
        };
        Ok(Poly::monomial(self.m, self.n, xe, ye, Rat::one()))
    }

    fn rational(&mut self) -> Result<Poly, ExprError> {
        let num = self.bigint()?;
        self.skip_ws();
        // A '/' directly after an integer literal forms an exact rational.
        if self.peek() == Some(b'/') {
            self.pos += 1;
            self.skip_ws();
            let den_pos = self.pos;
            let den = self.bigint()?;
            if den == BigInt::from(0) {
                return Err(ExprError::Syntax {
                    pos: den_pos,
                    message: "zero denominator".to_string(),
                });
            }
            return Ok(Poly::constant(self.m, self.n, Rat::new(num, den)));
        }
        Ok(Poly::constant(self.m, self.n, Rat::from_integer(num)))
    }

    fn bigint(&mut self) -> Result<BigInt, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected an unsigned integer"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse().map_err(|_| ExprError::Syntax {
            pos: start,
            message: "integer literal too malformed".to_string(),
        })
    }

    fn uint(&mut self) -> Result<u32, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected an unsigned integer"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse().map_err(|_| ExprError::Syntax {
            pos: start,
            message: "integer out of range".to_string(),
        })
    }
}
