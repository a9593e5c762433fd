//! Recursive-descent parser for polynomial expressions in `z1..zn` with
//! complex literals, evaluated directly into truncated series.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('+' | '-') unary | power
//! power  := atom ('^' integer)?
//! atom   := number | number 'i' | 'i' | 'z' digits | '(' expr ')'
//! ```
//!
//! Division and negative powers require a divisor with nonzero constant term.

use super::germ::TruncatedMapGerm;
use super::series::TruncatedSeries;
use crate::error::{Error, Result};
use crate::scalar::{Real, C};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Real(f64),
    Imag(f64),
    Var(usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn syntax(position: usize, message: impl Into<String>) -> Error {
    Error::Syntax { position, message: message.into() }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => out.push((start, Token::Plus)),
            b'-' => out.push((start, Token::Minus)),
            b'*' => out.push((start, Token::Star)),
            b'/' => out.push((start, Token::Slash)),
            b'^' => out.push((start, Token::Caret)),
            b'(' => out.push((start, Token::LParen)),
            b')' => out.push((start, Token::RParen)),
            b'i' => out.push((start, Token::Imag(1.0))),
            b'z' => {
                i += 1;
                let d0 = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if d0 == i {
                    return Err(syntax(start, "expected variable index after 'z'"));
                }
                let k: usize = text[d0..i].parse().map_err(|_| syntax(start, "bad variable index"))?;
                out.push((start, Token::Var(k)));
                continue;
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let value: f64 = text[start..i]
                    .parse()
                    .map_err(|_| syntax(start, format!("malformed number '{}'", &text[start..i])))?;
                if i < bytes.len() && bytes[i] == b'i' {
                    i += 1;
                    out.push((start, Token::Imag(value)));
                } else {
                    out.push((start, Token::Real(value)));
                }
                continue;
            }
            other => return Err(syntax(start, format!("unexpected character '{}'", other as char))),
        }
        i += 1;
    }
    Ok(out)
}

struct Parser<'a, T: Real> {
    tokens: &'a [(usize, Token)],
    pos: usize,
    end: usize,
    n: usize,
    cap: usize,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Real> Parser<'_, T> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn expr(&mut self) -> Result<TruncatedSeries<T>> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<TruncatedSeries<T>> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    acc = &acc * &self.unary()?;
                }
                Some(Token::Slash) => {
                    let at = self.offset();
                    self.pos += 1;
                    let divisor = self.unary()?;
                    acc = self.divide(&acc, &divisor, at)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn divide(&self, a: &TruncatedSeries<T>, b: &TruncatedSeries<T>, at: usize) -> Result<TruncatedSeries<T>> {
        if b.nnz() == 1 && b.constant_term().norm() > T::zero() {
            // exact scalar division
            let c = b.constant_term();
            return Ok(TruncatedSeries { layout: a.layout.clone(), coeffs: a.coeffs.iter().map(|x| *x / c).collect() }
                .cleaned());
        }
        let inv = b.reciprocal().map_err(|_| syntax(at, "division by a series without constant term"))?;
        Ok(a * &inv)
    }

    fn unary(&mut self) -> Result<TruncatedSeries<T>> {
        match self.peek() {
            Some(Token::Minus) => {
                self.pos += 1;
                Ok(-&self.unary()?)
            }
            Some(Token::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<TruncatedSeries<T>> {
        let base = self.atom()?;
        if self.peek() != Some(&Token::Caret) {
            return Ok(base);
        }
        let at = self.offset();
        self.pos += 1;
        let mut negative = false;
        match self.peek() {
            Some(Token::Minus) => {
                negative = true;
                self.pos += 1;
            }
            Some(Token::Plus) => self.pos += 1,
            _ => {}
        }
        let k = match self.peek() {
            Some(Token::Real(v)) if v.fract() == 0.0 && *v >= 0.0 && *v <= u32::MAX as f64 => *v as u32,
            _ => return Err(syntax(self.offset(), "exponent must be an integer literal")),
        };
        self.pos += 1;
        if self.peek() == Some(&Token::Caret) {
            return Err(syntax(self.offset(), "chained exponents are ambiguous; use parentheses"));
        }
        let p = base.powi(k);
        if negative {
            p.reciprocal().map_err(|_| syntax(at, "negative power of a series without constant term"))
        } else {
            Ok(p)
        }
    }

    fn atom(&mut self) -> Result<TruncatedSeries<T>> {
        let at = self.offset();
        let Some(tok) = self.peek().cloned() else {
            return Err(syntax(at, "unexpected end of expression"));
        };
        self.pos += 1;
        match tok {
            Token::Real(v) => Ok(TruncatedSeries::constant(self.n, self.cap, C::new(T::lit(v), T::zero()))),
            Token::Imag(v) => Ok(TruncatedSeries::constant(self.n, self.cap, C::new(T::zero(), T::lit(v)))),
            Token::Var(k) => {
                if k == 0 || k > self.n {
                    return Err(syntax(at, format!("variable z{k} outside z1..z{}", self.n)));
                }
                Ok(TruncatedSeries::variable(self.n, self.cap, k - 1))
            }
            Token::LParen => {
                let inner = self.expr()?;
                if self.peek() != Some(&Token::RParen) {
                    return Err(syntax(self.offset(), "expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            other => Err(syntax(at, format!("unexpected token {other:?}"))),
        }
    }
}

/// Parses one expression into a series in `n` variables truncated at `cap`.
pub fn parse_series<T: Real>(text: &str, n: usize, cap: usize) -> Result<TruncatedSeries<T>> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(syntax(0, "empty expression"));
    }
    let mut parser =
        Parser::<T> { tokens: &tokens, pos: 0, end: text.len(), n, cap, _marker: std::marker::PhantomData };
    let s = parser.expr()?;
    if parser.pos != tokens.len() {
        return Err(syntax(parser.offset(), "trailing input"));
    }
    Ok(s)
}

/// Parses `n` component expressions into a germ.
///
/// Rejects constant terms ([`Error::NonGerm`]) and singular linear parts.
pub fn parse_germ<T: Real>(texts: &[impl AsRef<str>], n: usize, cap: usize) -> Result<TruncatedMapGerm<T>> {
    if texts.len() != n {
        return Err(crate::error::dims_mismatch(format!("{n} expressions"), texts.len()));
    }
    let components = texts.iter().map(|t| parse_series(t.as_ref(), n, cap)).collect::<Result<Vec<_>>>()?;
    TruncatedMapGerm::new(components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::series::MonomialIndex;

    #[test]
    fn worked_example() {
        let g = parse_germ::<f64>(&["0.5*z1 + z2^2", "z2/3"], 2, 4).unwrap();
        let a = Matrix::from_real_rows(&[&[0.5, 0.0], &[0.0, 1.0 / 3.0]]);
        assert_eq!(g.linear_part(), &a);
        assert_eq!(g.component(0).nnz(), 2);
        assert_eq!(g.component(0).coeff(&MonomialIndex::new(vec![0, 2])), C::new(1.0, 0.0));
        assert_eq!(g.component(1).nnz(), 1);
    }

    #[test]
    fn identity_germ() {
        let g = parse_germ::<f64>(&["z1"], 1, 2).unwrap();
        assert_eq!(g, TruncatedMapGerm::identity(1, 2));
    }

    #[test]
    fn constant_term_is_rejected() {
        let err = parse_germ::<f64>(&["z1 + 1", "z2"], 2, 3).unwrap_err();
        assert!(matches!(err, Error::NonGerm { component: 1 }));
    }

    #[test]
    fn singular_linear_part_is_rejected() {
        let err = parse_germ::<f64>(&["z1 + z2", "2*z1 + 2*z2"], 2, 3).unwrap_err();
        assert!(matches!(err, Error::SingularLinearPart { .. }));
    }

    #[test]
    fn complex_literals() {
        let s = parse_series::<f64>("(1+2i)*z1 - 3.5i*z2^2 + i", 2, 3).unwrap();
        assert_eq!(s.coeff(&MonomialIndex::new(vec![1, 0])), C::new(1.0, 2.0));
        assert_eq!(s.coeff(&MonomialIndex::new(vec![0, 2])), C::new(0.0, -3.5));
        assert_eq!(s.constant_term(), C::new(0.0, 1.0));
        let e = parse_series::<f64>("1e-3*z1 + 2.5E+1", 1, 2).unwrap();
        assert_eq!(e.constant_term(), C::new(25.0, 0.0));
    }

    #[test]
    fn syntax_errors() {
        for bad in ["z1 +", "(z1", "z3", "z0", "z1 ^ z2", "2 z1", "z1^2^2", "z1 / z2", "", "z1 $ 2", "z"] {
            assert!(matches!(parse_series::<f64>(bad, 2, 3), Err(Error::Syntax { .. })), "{bad}");
        }
    }

    #[test]
    fn division_by_unit_series() {
        let s = parse_series::<f64>("1/(1 - z1)", 1, 4).unwrap();
        for k in 0..=4 {
            assert_eq!(s.coeff(&MonomialIndex::new(vec![k])), C::new(1.0, 0.0));
        }
        let t = parse_series::<f64>("(1 - z1)^-1", 1, 4).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn print_then_parse_is_fixed_point() {
        let s = parse_series::<f64>("(0.1+0.2i)*z1^3 - z1*z2/7 + 1e-5*z2^2 - 2.5", 2, 4).unwrap();
        let printed = s.to_string();
        let back = parse_series::<f64>(&printed, 2, 4).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_string(), printed);
    }
}
