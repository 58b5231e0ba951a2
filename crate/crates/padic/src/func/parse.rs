//! Recursive-descent parser for the function DSL.
//!
//! ```text
//! spec      := expr | ctor | "[" spec ("," spec)* "]"
//! ctor      := "closed_ergodic" "(" spec ")"
//!            | "perturb" "(" "ell" "=" uint "," "r" "=" uint "," "u" "=" spec ")"
//!            | "bseries" "(" intlist ")"
//!            | "mahler2" "(" intlist ")"
//!            | "compose" "(" spec "," spec ")"
//!            | "iterate" "(" spec "," uint ")"
//!            | "scaled" "(" "n" "=" uint "," "f" "=" spec ")"
//! expr      := term (("+"|"-") term)*
//! term      := factor ("*" factor)*
//! factor    := atom ("^" uint)?
//! atom      := var | int | "(" expr ")" | bitop
//! bitop     := ("and"|"or"|"xor") "(" expr "," expr ")" | "not" "(" expr ")"
//! var       := "x" | "x" uint
//! ```
//!
//! Whitespace-insensitive, keywords case-sensitive. A parsed expression that
//! is a plain polynomial in x collapses to the canonical coefficient form,
//! so `parse` of the pretty-printed output reproduces the AST.

use super::ast::{Expr, FunctionSpec};
use crate::error::{Error, Result};

pub fn parse(text: &str) -> Result<FunctionSpec> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let spec = p.parse_spec()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(spec)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
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

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{}'", c as char)))
        }
    }

    /// Lower-case identifier starting at the cursor, if any. Does not consume.
    fn peek_ident(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let start = self.pos;
        let mut end = start;
        while end < self.src.len()
            && (self.src[end].is_ascii_lowercase()
                || self.src[end] == b'_'
                || (end > start && self.src[end].is_ascii_digit()))
        {
            end += 1;
        }
        if end == start {
            None
        } else {
            Some(std::str::from_utf8(&self.src[start..end]).unwrap())
        }
    }

    fn take_ident(&mut self) -> Option<&'a str> {
        let ident = self.peek_ident()?;
        self.pos += ident.len();
        Some(ident)
    }

    fn parse_uint(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected unsigned integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::Parse {
                pos: start,
                msg: "integer literal out of range".into(),
            })
    }

    fn parse_int(&mut self) -> Result<i64> {
        self.skip_ws();
        let neg = self.eat(b'-');
        let start = self.pos;
        let magnitude = self.parse_uint()?;
        let signed = if neg {
            (magnitude as i128).checked_neg()
        } else {
            Some(magnitude as i128)
        };
        signed
            .filter(|v| i64::try_from(*v).is_ok())
            .map(|v| v as i64)
            .ok_or(Error::Parse {
                pos: start,
                msg: "integer literal out of range".into(),
            })
    }

    fn parse_intlist(&mut self) -> Result<Vec<i64>> {
        let mut list = vec![self.parse_int()?];
        while self.eat(b',') {
            list.push(self.parse_int()?);
        }
        Ok(list)
    }

    fn parse_spec(&mut self) -> Result<FunctionSpec> {
        if self.peek() == Some(b'[') {
            self.expect(b'[')?;
            let mut parts = vec![self.parse_spec()?];
            while self.eat(b',') {
                parts.push(self.parse_spec()?);
            }
            self.expect(b']')?;
            return Ok(FunctionSpec::Tuple(parts));
        }
        if let Some(ident) = self.peek_ident() {
            let is_ctor = matches!(
                ident,
                "closed_ergodic" | "perturb" | "bseries" | "mahler2" | "compose" | "iterate"
                    | "scaled"
            );
            if is_ctor {
                self.pos += ident.len();
                return self.parse_ctor(ident);
            }
        }
        let expr = self.parse_expr()?;
        Ok(normalize(expr))
    }

    fn parse_ctor(&mut self, name: &str) -> Result<FunctionSpec> {
        self.expect(b'(')?;
        let spec = match name {
            "closed_ergodic" => FunctionSpec::ClosedFormErgodic(Box::new(self.parse_spec()?)),
            "perturb" => {
                self.expect_key("ell")?;
                let ell = self.parse_uint()?;
                self.expect(b',')?;
                self.expect_key("r")?;
                let r = self.parse_uint()?;
                self.expect(b',')?;
                self.expect_key("u")?;
                let u = self.parse_spec()?;
                if ell == 0 {
                    return Err(self.error("perturb requires ell >= 1"));
                }
                if r == 0 || r > u32::MAX as u64 {
                    return Err(self.error("perturb requires 1 <= r < 2^32"));
                }
                FunctionSpec::PerturbedMonomial {
                    ell,
                    r: r as u32,
                    u: Box::new(u),
                }
            }
            "bseries" => FunctionSpec::BSeries(self.parse_intlist()?),
            "mahler2" => FunctionSpec::ErgodicMahler2(self.parse_intlist()?),
            "compose" => {
                let f = self.parse_spec()?;
                self.expect(b',')?;
                let g = self.parse_spec()?;
                FunctionSpec::Compose(Box::new(f), Box::new(g))
            }
            "iterate" => {
                let f = self.parse_spec()?;
                self.expect(b',')?;
                let n = self.parse_uint()?;
                if n == 0 {
                    return Err(self.error("iterate requires n >= 1"));
                }
                FunctionSpec::Iterate(Box::new(f), n)
            }
            "scaled" => {
                self.expect_key("n")?;
                let n = self.parse_uint()?;
                self.expect(b',')?;
                self.expect_key("f")?;
                let inner = self.parse_spec()?;
                if n > u32::MAX as u64 {
                    return Err(self.error("scaled shift out of range"));
                }
                FunctionSpec::ScaledSeries {
                    shift: n as u32,
                    inner: Box::new(inner),
                }
            }
            _ => unreachable!("caller filters ctor names"),
        };
        self.expect(b')')?;
        Ok(spec)
    }

    fn expect_key(&mut self, key: &str) -> Result<()> {
        match self.peek_ident() {
            Some(ident) if ident == key => {
                self.pos += key.len();
                self.expect(b'=')
            }
            _ => Err(self.error(format!("expected '{key}='"))),
        }
    }

    fn parse_expr(&mut self) -> Result<Expr> {
        let mut acc = self.parse_term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.parse_term()?;
                acc = Expr::Add(Box::new(acc), Box::new(rhs));
            } else if self.eat(b'-') {
                let rhs = self.parse_term()?;
                acc = Expr::Sub(Box::new(acc), Box::new(rhs));
            } else {
                return Ok(acc);
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr> {
        let mut acc = self.parse_factor()?;
        while self.eat(b'*') {
            let rhs = self.parse_factor()?;
            acc = Expr::Mul(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn parse_factor(&mut self) -> Result<Expr> {
        let atom = self.parse_atom()?;
        if self.eat(b'^') {
            let e = self.parse_uint()?;
            if e > u32::MAX as u64 {
                return Err(self.error("exponent out of range"));
            }
            return Ok(Expr::Pow(Box::new(atom), e as u32));
        }
        Ok(atom)
    }

    fn parse_atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.expect(b'(')?;
                let e = self.parse_expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c == b'-' || c.is_ascii_digit() => Ok(Expr::Const(self.parse_int()?)),
            _ => {
                let Some(ident) = self.take_ident() else {
                    return Err(self.error("expected variable, constant, or '('"));
                };
                match ident {
                    "and" | "or" | "xor" => {
                        self.expect(b'(')?;
                        let a = Box::new(self.parse_expr()?);
                        self.expect(b',')?;
                        let b = Box::new(self.parse_expr()?);
                        self.expect(b')')?;
                        Ok(match ident {
                            "and" => Expr::And(a, b),
                            "or" => Expr::Or(a, b),
                            _ => Expr::Xor(a, b),
                        })
                    }
                    "not" => {
                        self.expect(b'(')?;
                        let a = Box::new(self.parse_expr()?);
                        self.expect(b')')?;
                        Ok(Expr::Not(a))
                    }
                    "x" => Ok(Expr::Var(1)),
                    v if v.starts_with('x') && v[1..].bytes().all(|b| b.is_ascii_digit()) => {
                        let idx: u64 = v[1..].parse().map_err(|_| Error::Parse {
                            pos: self.pos,
                            msg: "variable index out of range".into(),
                        })?;
                        if idx == 0 || idx > u32::MAX as u64 {
                            return Err(self.error("variable index must be >= 1"));
                        }
                        Ok(Expr::Var(idx as u32))
                    }
                    other => Err(self.error(format!("unknown identifier '{other}'"))),
                }
            }
        }
    }
}

/// Collapses a bitop-free single-variable polynomial expression into the
/// canonical coefficient form.
fn normalize(expr: Expr) -> FunctionSpec {
    if !expr.uses_bitops() && expr.max_var() <= 1 {
        if let Some(coeffs) = expr.as_poly() {
            return FunctionSpec::Poly(coeffs);
        }
    }
    FunctionSpec::Expr(expr)
}
