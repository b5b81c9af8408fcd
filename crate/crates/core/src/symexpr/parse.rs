//! Recursive-descent parser for the expression grammar.
//!
//! Grammar (infix, standard precedence):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := ('+' | '-')* power
//! power   := atom ('^' factor)?            -- right associative
//! atom    := number | name | name '\''* '(' expr ')' | '(' expr ')'
//! number  := digits ('.' digits)? | digits '/' digits handled via '/'
//! ```
//!
//! `exp`, `ln`, `sqrt` are built-in; any other applied name is an opaque
//! function symbol, with trailing primes giving the derivative order
//! (`phi''(z)`). A bare name is a variable. Decimal literals become exact
//! rationals (`0.25` is 1/4). Exponents must be rational constants; a
//! non-constant exponent `a^b` is rewritten as `exp(b*ln(a))`.

use super::{Expr, Node};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Pow, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

fn err<T>(offset: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        offset,
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Name(String),
    Primes(u32),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token with its byte offset; `None` at end of input.
    fn next(&mut self) -> Result<Option<(usize, Tok)>, ParseError> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => {
                self.pos += 1;
                Tok::Plus
            }
            b'-' => {
                self.pos += 1;
                Tok::Minus
            }
            b'*' => {
                self.pos += 1;
                Tok::Star
            }
            b'/' => {
                self.pos += 1;
                Tok::Slash
            }
            b'^' => {
                self.pos += 1;
                Tok::Caret
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b'\'' => {
                let mut n = 0u32;
                while self.pos < self.src.len() && self.src[self.pos] == b'\'' {
                    n += 1;
                    self.pos += 1;
                }
                Tok::Primes(n)
            }
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                while end < self.src.len() && self.src[end].is_ascii_digit() {
                    end += 1;
                }
                let int_part = &self.src[self.pos..end];
                let mut frac_part: &[u8] = b"";
                if end < self.src.len() && self.src[end] == b'.' {
                    let fs = end + 1;
                    let mut fe = fs;
                    while fe < self.src.len() && self.src[fe].is_ascii_digit() {
                        fe += 1;
                    }
                    if fe == fs && int_part.is_empty() {
                        return err(start, "expected digits around '.'");
                    }
                    frac_part = &self.src[fs..fe];
                    end = fe;
                }
                if int_part.is_empty() && frac_part.is_empty() {
                    return err(start, "expected number");
                }
                self.pos = end;
                let mut numer = BigInt::zero();
                for d in int_part.iter().chain(frac_part.iter()) {
                    numer = numer * 10 + (d - b'0');
                }
                let denom = Pow::pow(BigInt::from(10), frac_part.len());
                Tok::Num(BigRational::new(numer, denom))
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let name = std::str::from_utf8(&self.src[self.pos..end])
                    .expect("ASCII slice")
                    .to_string();
                self.pos = end;
                Tok::Name(name)
            }
            _ => return err(start, format!("unexpected character `{}`", c as char)),
        };
        Ok(Some((start, tok)))
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

/// Parse source text into a canonical expression.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut lexer = Lexer::new(text);
    let mut toks = Vec::new();
    while let Some(t) = lexer.next()? {
        toks.push(t);
    }
    let end = text.len();
    let mut p = Parser { toks, pos: 0, end };
    let e = p.expr()?;
    if let Some((off, _)) = p.peek() {
        return err(off, "unexpected trailing input");
    }
    Ok(e)
}

impl Parser {
    fn peek(&self) -> Option<(usize, &Tok)> {
        self.toks.get(self.pos).map(|(o, t)| (*o, t))
    }

    fn bump(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.peek().map(|(o, _)| o).unwrap_or(self.end)
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<(), ParseError> {
        match self.bump() {
            Some((_, t)) if t == *want => Ok(()),
            Some((o, t)) => err(o, format!("expected {what}, found {t:?}")),
            None => err(self.end, format!("expected {what}, found end of input")),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Some((_, Tok::Plus)) => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Some((_, Tok::Minus)) => {
                    self.bump();
                    terms.push(self.term()?.neg());
                }
                _ => break,
            }
        }
        Ok(Expr::add(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.factor()?];
        loop {
            match self.peek() {
                Some((_, Tok::Star)) => {
                    self.bump();
                    factors.push(self.factor()?);
                }
                Some((off, Tok::Slash)) => {
                    self.bump();
                    let d = self.factor()?;
                    if d.is_zero() {
                        return err(off, "division by zero constant");
                    }
                    factors.push(Expr::pow_rat(d, -BigRational::one()));
                }
                _ => break,
            }
        }
        Ok(Expr::mul(factors))
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let mut negate = false;
        loop {
            match self.peek() {
                Some((_, Tok::Plus)) => {
                    self.bump();
                }
                Some((_, Tok::Minus)) => {
                    self.bump();
                    negate = !negate;
                }
                _ => break,
            }
        }
        let e = self.power()?;
        Ok(if negate { e.neg() } else { e })
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some((_, Tok::Caret)) = self.peek() {
            self.bump();
            let off = self.here();
            let exp = self.factor()?;
            return match exp.as_rational() {
                Some(r) => Ok(Expr::pow_rat(base, r.clone())),
                // non-constant exponent: a^b = exp(b ln a)
                None => {
                    if base.is_zero() {
                        return err(off, "0 raised to a non-constant exponent");
                    }
                    Ok(Expr::exp(Expr::mul(vec![exp, Expr::ln(base)])))
                }
            };
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.bump() {
            Some((_, Tok::Num(r))) => Ok(Expr::from_rational(r)),
            Some((off, Tok::Name(name))) => {
                let mut order = 0u32;
                if let Some((_, Tok::Primes(n))) = self.peek() {
                    order = *n;
                    self.bump();
                }
                let applied = matches!(self.peek(), Some((_, Tok::LParen)));
                if !applied {
                    if order > 0 {
                        return err(off, format!("derivative marks on `{name}` require an argument list"));
                    }
                    return Ok(Expr::var(&name));
                }
                self.bump(); // '('
                let arg = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                match (name.as_str(), order) {
                    ("exp", 0) => Ok(Expr::exp(arg)),
                    ("ln", 0) => Ok(Expr::ln(arg)),
                    ("sqrt", 0) => Ok(arg.sqrt()),
                    ("exp" | "ln" | "sqrt", _) => {
                        err(off, format!("`{name}` does not take derivative marks"))
                    }
                    _ => Ok(Expr::func(&name, order, arg)),
                }
            }
            Some((_, Tok::LParen)) => {
                let e = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some((off, t)) => err(off, format!("expected an expression, found {t:?}")),
            None => err(self.end, "expected an expression, found end of input"),
        }
    }
}

// Re-exported for tests elsewhere: print then parse must be the identity on
// canonical forms. The printer lives in `Display for Expr`.
#[allow(dead_code)]
fn _printer_lives_in_display(_: &Node) {}
