//! Text form: `3*x1^2*x2 - x3 + 7`. Terms are printed leading-first in
//! graded-lex order, so `parse(render(p)) == p` and `render(parse(s))` is
//! canonical.

use super::Polynomial;
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Signed};
use std::fmt::Write;

pub(super) fn render(p: &Polynomial) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (idx, (exps, coeff)) in p.terms().enumerate() {
        let neg = coeff.is_negative();
        match (idx, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        let mag = coeff.abs();
        let mut factors: Vec<String> = Vec::new();
        let constant = exps.iter().all(|&e| e == 0);
        if constant || !mag.is_one() {
            factors.push(mag.to_string());
        }
        for (i, &e) in exps.iter().enumerate() {
            match e {
                0 => {}
                1 => factors.push(format!("x{}", i + 1)),
                _ => factors.push(format!("x{}^{}", i + 1, e)),
            }
        }
        let _ = write!(out, "{}", factors.join("*"));
    }
    out
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    n: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    /// The text from `start` through the next offending character.
    fn token_from(&self, start: usize) -> String {
        let mut end = self.pos;
        if let Some(c) = self.src[self.pos..].chars().next() {
            if !c.is_whitespace() {
                end += c.len_utf8();
            }
        }
        let tok = self.src[start..end].trim();
        if tok.is_empty() {
            "<end of input>".to_string()
        } else {
            tok.to_string()
        }
    }

    fn error(&self, start: usize, message: impl Into<String>) -> Error {
        Error::Parse { token: self.token_from(start), message: message.into() }
    }

    /// factor := integer | x<index>[^<exponent>]
    fn factor(&mut self, coeff: &mut BigInt, exps: &mut [u32]) -> Result<()> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                let d = self.digits();
                *coeff *= d.parse::<BigInt>().expect("digits parse");
                Ok(())
            }
            Some(b'x') => {
                self.pos += 1;
                let d = self.digits();
                if d.is_empty() {
                    return Err(self.error(start, "expected variable index after `x`"));
                }
                let idx: usize = d
                    .parse()
                    .map_err(|_| self.error(start, "variable index too large"))?;
                if idx == 0 || idx > self.n {
                    return Err(self.error(
                        start,
                        format!("variable index out of range 1..={}", self.n),
                    ));
                }
                let mut e = 1u32;
                self.skip_ws();
                if self.peek() == Some(b'^') {
                    self.pos += 1;
                    self.skip_ws();
                    let d = self.digits();
                    if d.is_empty() {
                        return Err(self.error(start, "expected exponent after `^`"));
                    }
                    e = d.parse().map_err(|_| self.error(start, "exponent too large"))?;
                }
                exps[idx - 1] += e;
                Ok(())
            }
            _ => Err(self.error(start, "expected a coefficient or a variable")),
        }
    }

    /// term := factor ('*' factor)*
    fn term(&mut self, sign: i32) -> Result<(Vec<u32>, BigInt)> {
        let mut coeff = BigInt::from(sign);
        let mut exps = vec![0u32; self.n];
        self.factor(&mut coeff, &mut exps)?;
        loop {
            self.skip_ws();
            if self.peek() == Some(b'*') {
                self.pos += 1;
                self.factor(&mut coeff, &mut exps)?;
            } else {
                return Ok((exps, coeff));
            }
        }
    }

    fn polynomial(&mut self) -> Result<Polynomial> {
        let mut p = Polynomial::zero(self.n);
        self.skip_ws();
        if self.pos == self.bytes.len() {
            return Err(self.error(self.pos, "empty polynomial"));
        }
        let mut sign = 1;
        if self.peek() == Some(b'-') {
            sign = -1;
            self.pos += 1;
        } else if self.peek() == Some(b'+') {
            self.pos += 1;
        }
        loop {
            let (e, c) = self.term(sign)?;
            p.add_term(e, c);
            self.skip_ws();
            match self.peek() {
                None => return Ok(p),
                Some(b'+') => sign = 1,
                Some(b'-') => sign = -1,
                Some(_) => {
                    let start = self.pos;
                    return Err(self.error(start, "expected `+`, `-` or `*`"));
                }
            }
            self.pos += 1;
        }
    }
}

pub(super) fn parse(src: &str, n: usize) -> Result<Polynomial> {
    let mut parser = Parser { src, bytes: src.as_bytes(), pos: 0, n };
    parser.polynomial()
}
