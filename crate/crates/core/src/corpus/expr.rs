//! The expression language used in problem files.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := primary ('^' exponent)?
//! exponent := ['-'] NUMBER ['^' exponent]
//!           | '(' ['-'] NUMBER ['/' NUMBER] ')' ['^' exponent]
//! primary  := NUMBER | 'x' | 'pi' | FUNC '(' expr ')' | '(' expr ')'
//!           | 'cases' '(' case (',' case)* ')'
//! case     := 'x' ('<' | '<=') ['-'] NUMBER '=>' expr | 'else' '=>' expr
//! ```
//!
//! Exponents are rational constants. `cases` pieces are tried in order;
//! their thresholds must increase so the ranges are disjoint. Evaluation
//! returns `None` for undefined or non-finite results.

use std::fmt;

use thiserror::Error;

use crate::kernel::PointFn;

pub const MAX_SOURCE_LEN: usize = 64 * 1024;
const MAX_NESTING: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {offset}: {message} (expected {})", .expected.join(" | "))]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
    pub expected: Vec<&'static str>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Sqrt,
    Ln,
    Abs,
    Sign,
    Exp,
}

impl Func {
    const ALL: [Func; 7] = [
        Func::Sin,
        Func::Cos,
        Func::Sqrt,
        Func::Ln,
        Func::Abs,
        Func::Sign,
        Func::Exp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Ln => "ln",
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Exp => "exp",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, v: f64) -> Option<f64> {
        match self {
            Func::Sin => Some(v.sin()),
            Func::Cos => Some(v.cos()),
            Func::Sqrt => (v >= 0.0).then(|| v.sqrt()),
            Func::Ln => (v > 0.0).then(|| v.ln()),
            Func::Abs => Some(v.abs()),
            // sign(0) = 0
            Func::Sign => Some(if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                0.0
            }),
            Func::Exp => Some(v.exp()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

/// A reduced rational exponent `num / den` with `den >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    num: i64,
    den: u64,
}

impl Rational {
    /// `None` for a zero denominator, or when the reduced terms do not both
    /// fit in `i64` and so would not read back as literals.
    pub fn new(num: i64, den: u64) -> Option<Rational> {
        if den == 0 {
            return None;
        }
        let g = gcd(num.unsigned_abs(), den).max(1);
        let num = i128::from(num) / i128::from(g);
        let den = den / g;
        (num > i128::from(i64::MIN) && den <= i64::MAX as u64).then_some(Rational { num: num as i64, den })
    }

    pub fn integer(num: i64) -> Rational {
        Rational { num, den: 1 }
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `self ^ exponent` when the result is again a small rational.
    fn pow(self, exponent: Rational) -> Option<Rational> {
        if exponent.den != 1 {
            return None;
        }
        let e = u32::try_from(exponent.num.unsigned_abs()).ok()?;
        let num = self.num.checked_pow(e)?;
        let den = self.den.checked_pow(e)?;
        if exponent.num >= 0 {
            Rational::new(num, den)
        } else if num == 0 {
            None
        } else {
            let sign = num.signum();
            Rational::new(sign * i64::try_from(den).ok()?, num.unsigned_abs())
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.num < 0, self.den) {
            (false, 1) => write!(f, "{}", self.num),
            (_, 1) => write!(f, "({})", self.num),
            _ => write!(f, "({}/{})", self.num, self.den),
        }
    }
}

/// A guard `x < c` or `x <= c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Guard {
    Lt(f64),
    Le(f64),
}

impl Guard {
    fn holds(self, x: f64) -> bool {
        match self {
            Guard::Lt(c) => x < c,
            Guard::Le(c) => x <= c,
        }
    }

    fn threshold(self) -> f64 {
        match self {
            Guard::Lt(c) | Guard::Le(c) => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Nonnegative literal; negation is always an explicit [`Expr::Neg`].
    Num(f64),
    Pi,
    X,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Rational),
    Call(Func, Box<Expr>),
    Cases {
        pieces: Vec<(Guard, Expr)>,
        otherwise: Option<Box<Expr>>,
    },
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr, ParseError> {
        parse(source)
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::X => x,
            Expr::Neg(e) => -e.eval(x)?,
            Expr::Binary(op, a, b) => {
                let a = a.eval(x)?;
                let b = b.eval(x)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div if b == 0.0 => return None,
                    BinOp::Div => a / b,
                }
            }
            Expr::Pow(base, exponent) => power(base.eval(x)?, *exponent)?,
            Expr::Call(func, arg) => func.apply(arg.eval(x)?)?,
            Expr::Cases { pieces, otherwise } => {
                match pieces.iter().find(|(guard, _)| guard.holds(x)) {
                    Some((_, value)) => value.eval(x)?,
                    None => otherwise.as_ref()?.eval(x)?,
                }
            }
        };
        v.is_finite().then_some(v)
    }
}

fn power(base: f64, exponent: Rational) -> Option<f64> {
    if base == 0.0 && exponent.num < 0 {
        return None;
    }
    if exponent.den == 1 {
        return match i32::try_from(exponent.num) {
            Ok(n) => Some(base.powi(n)),
            Err(_) => Some(base.powf(exponent.num as f64)),
        };
    }
    if base >= 0.0 {
        return Some(base.powf(exponent.to_f64()));
    }
    // real odd roots of negative numbers
    if exponent.den % 2 == 1 {
        let magnitude = (-base).powf(exponent.to_f64());
        return Some(if exponent.num % 2 == 0 { magnitude } else { -magnitude });
    }
    None
}

impl PointFn for Expr {
    fn eval(&self, x: f64) -> Option<f64> {
        Expr::eval(self, x)
    }
}

/// Binding strength, loosest first; printing parenthesizes a child only
/// when it binds more loosely than its position requires, so the printed
/// form nests no deeper than the source did.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

struct Operand<'a>(&'a Expr, u8);

impl fmt::Display for Operand<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if precedence(self.0) < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Pi => f.write_str("pi"),
            Expr::X => f.write_str("x"),
            Expr::Neg(e) => write!(f, "-{}", Operand(e, 3)),
            Expr::Binary(op, a, b) => {
                let p = precedence(self);
                // left-associative: an equal-strength right operand needs parentheses
                write!(f, "{} {} {}", Operand(a, p), op.symbol(), Operand(b, p + 1))
            }
            Expr::Pow(base, exponent) => write!(f, "{}^{exponent}", Operand(base, 5)),
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
            Expr::Cases { pieces, otherwise } => {
                f.write_str("cases(")?;
                for (i, (guard, value)) in pieces.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    match guard {
                        Guard::Lt(c) => write!(f, "x < {c} => {value}")?,
                        Guard::Le(c) => write!(f, "x <= {c} => {value}")?,
                    }
                }
                if let Some(value) = otherwise {
                    if !pieces.is_empty() {
                        f.write_str(", ")?;
                    }
                    write!(f, "else => {value}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Number(&'a str),
    Ident(&'a str),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Lt,
    Le,
    Arrow,
    End,
}

impl Tok<'_> {
    fn describe(&self) -> String {
        match self {
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Arrow => "`=>`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(source: &str) -> Result<Vec<(Tok<'_>, usize)>, ParseError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
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
                let text = &source[start..i];
                if text.parse::<f64>().is_err() {
                    return Err(ParseError {
                        offset: start,
                        message: format!("malformed number `{text}`"),
                        expected: vec!["number"],
                    });
                }
                tokens.push((Tok::Number(text), start));
                continue;
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push((Tok::Ident(&source[start..i]), start));
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'<' if bytes.get(i + 1) == Some(&b'=') => {
                i += 1;
                Tok::Le
            }
            b'<' => Tok::Lt,
            b'=' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Arrow
            }
            _ if source[i..].starts_with('≤') => {
                i += '≤'.len_utf8() - 1;
                Tok::Le
            }
            _ => {
                let ch = source[i..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                    expected: vec!["expression"],
                });
            }
        };
        i += 1;
        tokens.push((tok, start));
    }
    tokens.push((Tok::End, source.len()));
    Ok(tokens)
}

pub fn parse(source: &str) -> Result<Expr, ParseError> {
    if source.len() > MAX_SOURCE_LEN {
        return Err(ParseError {
            offset: MAX_SOURCE_LEN,
            message: format!("expression longer than {MAX_SOURCE_LEN} bytes"),
            expected: vec!["end of input"],
        });
    }
    let tokens = lex(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        depth: 0,
    };
    let expr = parser.expr()?;
    parser.expect(Tok::End, "end of input")?;
    Ok(expr)
}

struct Parser<'a> {
    tokens: Vec<(Tok<'a>, usize)>,
    pos: usize,
    depth: usize,
}

const OPERAND: &[&str] = &["number", "`x`", "`pi`", "function", "`cases`", "`(`", "`-`"];

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok<'a> {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> Tok<'a> {
        let tok = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &[&'static str]) -> ParseError {
        ParseError {
            offset: self.offset(),
            message: format!("unexpected {}", self.peek().describe()),
            expected: expected.to_vec(),
        }
    }

    fn expect(&mut self, tok: Tok<'a>, name: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[name]))
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(ParseError {
                offset: self.offset(),
                message: format!("expression nested deeper than {MAX_NESTING} levels"),
                expected: vec!["shallower expression"],
            });
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.enter()?;
            self.bump();
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let exponent = self.exponent()?;
        Ok(Expr::Pow(Box::new(base), exponent))
    }

    fn exponent(&mut self) -> Result<Rational, ParseError> {
        self.enter()?;
        let start = self.offset();
        let base = if *self.peek() == Tok::LParen {
            self.bump();
            let negative = self.optional_minus();
            let num = self.integer_literal()?;
            let value = if *self.peek() == Tok::Slash {
                self.bump();
                let den = self.integer_literal()?;
                let den = u64::try_from(den.num).ok().filter(|_| den.den == 1);
                den.and_then(|d| Rational::new(num.num, d.checked_mul(num.den)?))
                    .ok_or_else(|| self.exponent_error(start))?
            } else {
                num
            };
            self.expect(Tok::RParen, "`)`")?;
            if negative {
                Rational::new(value.num.checked_neg().unwrap_or(i64::MIN), value.den).ok_or_else(|| self.exponent_error(start))?
            } else {
                value
            }
        } else {
            let negative = self.optional_minus();
            let value = self.integer_literal()?;
            if negative {
                Rational::new(value.num.checked_neg().unwrap_or(i64::MIN), value.den).ok_or_else(|| self.exponent_error(start))?
            } else {
                value
            }
        };
        let result = if *self.peek() == Tok::Caret {
            self.bump();
            let outer = self.exponent()?;
            base.pow(outer).ok_or_else(|| self.exponent_error(start))?
        } else {
            base
        };
        self.depth -= 1;
        Ok(result)
    }

    fn exponent_error(&self, offset: usize) -> ParseError {
        ParseError {
            offset,
            message: "exponent is not a representable rational constant".into(),
            expected: vec!["rational exponent"],
        }
    }

    fn optional_minus(&mut self) -> bool {
        if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        }
    }

    /// A decimal literal read exactly as a rational.
    fn integer_literal(&mut self) -> Result<Rational, ParseError> {
        let offset = self.offset();
        let Tok::Number(text) = self.peek().clone() else {
            return Err(self.error(&["number"]));
        };
        self.bump();
        decimal_rational(text).ok_or(ParseError {
            offset,
            message: format!("exponent `{text}` is not an exact decimal"),
            expected: vec!["rational exponent"],
        })
    }

    fn signed_number(&mut self) -> Result<f64, ParseError> {
        let negative = self.optional_minus();
        let Tok::Number(text) = self.peek().clone() else {
            return Err(self.error(&["number"]));
        };
        self.bump();
        let v: f64 = text.parse().unwrap_or(f64::NAN);
        Ok(if negative { -v } else { v })
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Number(text) => {
                self.bump();
                let v: f64 = text.parse().unwrap_or(f64::NAN);
                if !v.is_finite() {
                    return Err(ParseError {
                        offset,
                        message: format!("number `{text}` overflows binary64"),
                        expected: vec!["finite number"],
                    });
                }
                Ok(Expr::Num(v))
            }
            Tok::Ident("x") => {
                self.bump();
                Ok(Expr::X)
            }
            Tok::Ident("pi") => {
                self.bump();
                Ok(Expr::Pi)
            }
            Tok::Ident("cases") => {
                self.bump();
                self.cases()
            }
            Tok::Ident(name) => {
                let Some(func) = Func::from_name(name) else {
                    return Err(ParseError {
                        offset,
                        message: format!("unknown identifier `{name}`"),
                        expected: OPERAND.to_vec(),
                    });
                };
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let arg = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.error(OPERAND)),
        }
    }

    fn cases(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        self.expect(Tok::LParen, "`(`")?;
        let mut pieces: Vec<(Guard, Expr)> = Vec::new();
        let mut otherwise = None;
        loop {
            let offset = self.offset();
            match self.peek() {
                Tok::Ident("else") => {
                    self.bump();
                    self.expect(Tok::Arrow, "`=>`")?;
                    otherwise = Some(Box::new(self.expr()?));
                    self.expect(Tok::RParen, "`)`")?;
                    break;
                }
                Tok::Ident("x") => {
                    self.bump();
                    let strict = match self.bump() {
                        Tok::Lt => true,
                        Tok::Le => false,
                        _ => {
                            self.pos -= 1;
                            return Err(self.error(&["`<`", "`<=`"]));
                        }
                    };
                    let c = self.signed_number()?;
                    let guard = if strict { Guard::Lt(c) } else { Guard::Le(c) };
                    if let Some((prev, _)) = pieces.last() {
                        let ordered = prev.threshold() < c
                            || (prev.threshold() == c
                                && matches!((prev, guard), (Guard::Lt(_), Guard::Le(_))));
                        if !ordered {
                            return Err(ParseError {
                                offset,
                                message: "case guards must have increasing thresholds".into(),
                                expected: vec!["larger threshold"],
                            });
                        }
                    }
                    self.expect(Tok::Arrow, "`=>`")?;
                    pieces.push((guard, self.expr()?));
                    match self.bump() {
                        Tok::Comma => continue,
                        Tok::RParen => break,
                        _ => {
                            self.pos -= 1;
                            return Err(self.error(&["`,`", "`)`"]));
                        }
                    }
                }
                _ => return Err(self.error(&["`x`", "`else`"])),
            }
        }
        self.depth -= 1;
        Ok(Expr::Cases { pieces, otherwise })
    }
}

fn decimal_rational(text: &str) -> Option<Rational> {
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num: i64 = digits.parse().ok()?;
    let den = 10u64.checked_pow(u32::try_from(frac_part.len()).ok()?)?;
    Rational::new(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse(s).unwrap_or_else(|e| panic!("{s}: {e}"))
    }

    #[test]
    fn product_of_constant_and_variable() {
        assert_eq!(
            p("2*x"),
            Expr::Binary(BinOp::Mul, Box::new(Expr::Num(2.0)), Box::new(Expr::X))
        );
    }

    #[test]
    fn oscillatory_expression_at_one() {
        let e = p("x^2*sin(1/x^2)");
        assert_eq!(e.eval(1.0), Some(1f64.sin()));
        assert!((e.eval(1.0).unwrap() - 0.841_470_984_8).abs() < 1e-10);
    }

    #[test]
    fn malformed_operand_reports_offset() {
        let err = parse("2*+x").unwrap_err();
        assert_eq!(err.offset, 2);
        assert!(err.expected.contains(&"number"));
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(p("1 - 2 - 3").eval(0.0), Some(-4.0));
        assert_eq!(p("8 / 4 / 2").eval(0.0), Some(1.0));
        assert_eq!(p("-x^2").eval(3.0), Some(-9.0));
        assert_eq!(p("2 + 3 * x").eval(2.0), Some(8.0));
        assert_eq!(p("2^3^2").eval(0.0), Some(512.0));
        assert_eq!(p("x^-1").eval(4.0), Some(0.25));
        assert_eq!(p("x^(1/2)").eval(9.0), Some(3.0));
        assert_eq!(p("x^(-1/2)").eval(4.0), Some(0.5));
        assert_eq!(p("x^0.5").eval(16.0), Some(4.0));
        assert!((p("x^(1/3)").eval(-8.0).unwrap() + 2.0).abs() < 1e-15);
        assert!((p("x^(2/3)").eval(-8.0).unwrap() - 4.0).abs() < 1e-15);
        assert_eq!(p("  2 *\tx ").eval(1.5), Some(3.0));
    }

    #[test]
    fn undefined_values() {
        assert_eq!(p("sqrt(x)").eval(-1.0), None);
        assert_eq!(p("1/(2*sqrt(x))").eval(4.0), Some(0.25));
        assert_eq!(p("1/(2*sqrt(x))").eval(0.0), None);
        assert_eq!(p("ln(x)").eval(0.0), None);
        assert_eq!(p("x^(1/2)").eval(-1.0), None);
        assert_eq!(p("x^-2").eval(0.0), None);
        assert_eq!(p("exp(x)").eval(1000.0), None);
        assert_eq!(p("sign(x)").eval(0.0), Some(0.0));
        assert_eq!(p("sign(x)").eval(-2.0), Some(-1.0));
    }

    #[test]
    fn cases_select_the_first_matching_piece() {
        let step = p("cases(x < 0 => 0, else => 1)");
        assert_eq!(step.eval(-0.5), Some(0.0));
        assert_eq!(step.eval(0.0), Some(1.0));
        let ramp = p("cases(x < -1 => 0, x <= 1 => x + 1, else => 2)");
        assert_eq!(ramp.eval(-2.0), Some(0.0));
        assert_eq!(ramp.eval(1.0), Some(2.0));
        assert_eq!(ramp.eval(5.0), Some(2.0));
        let partial = p("cases(x ≤ 0 => 1)");
        assert_eq!(partial.eval(1.0), None);
        assert!(parse("cases(x < 1 => 0, x < 0 => 1)").is_err());
        assert!(parse("cases(x <= 0 => 0, x < 0 => 1)").is_err());
        assert!(parse("cases(x < 0 => 0, x <= 0 => 1)").is_ok());
        assert!(parse("cases(else => 1, x < 0 => 0)").is_err());
    }

    #[test]
    fn parse_errors() {
        for bad in ["", "2*", "(x", "x)", "foo(x)", "sin x", "x^x", "x^(1/0)", "1..2", "x $ 2", "cases(x = 0 => 1)"] {
            assert!(parse(bad).is_err(), "{bad:?} should not parse");
        }
        let deep = "(".repeat(5000) + "x" + &")".repeat(5000);
        assert!(parse(&deep).is_err());
        let long = "x+".repeat(40_000) + "x";
        assert_eq!(parse(&long).unwrap_err().offset, MAX_SOURCE_LEN);
    }

    #[test]
    fn printing_reparses_to_the_same_tree() {
        for src in [
            "x^2*sin(1/x^2)",
            "2*x*sin(1/x^2) - (2/x)*cos(1/x^2)",
            "cases(x < -0.5 => 0, x <= 0.25 => -x^(1/3), else => pi)",
            "-(-x)",
            "1e-7 + 0.1 * exp(-x)",
            "(-x)^(-3/2)",
            "x - (x - x) / (x * x)",
            "-x^2 * -(x + 1)",
        ] {
            let tree = p(src);
            let printed = tree.to_string();
            assert_eq!(p(&printed), tree, "{src} printed as {printed}");
        }
    }

    #[test]
    fn printing_does_not_deepen_nesting() {
        let negations = format!("{}x", "-".repeat(150));
        let chain = format!("x{}", " - x".repeat(500));
        for src in [negations, chain] {
            assert_eq!(p(&p(&src).to_string()), p(&src));
        }
    }

    #[test]
    fn oversized_exponents_are_errors_not_panics() {
        assert!(parse("x^(0.000000001/99999999999)").is_err());
        assert!(parse("x^(-9223372036854775808)").is_err());
        // denominator 10^19 does not fit a literal
        assert!(parse("2^-.1977777777777777777").is_err());
        assert!(parse("2^(-1977777777777777777/1000000000000000000)").is_ok());
    }

    #[test]
    fn decimal_exponents_are_exact() {
        assert_eq!(decimal_rational("0.25"), Rational::new(1, 4));
        assert_eq!(decimal_rational("3"), Some(Rational::integer(3)));
        assert_eq!(decimal_rational("1e3"), None);
    }
}
