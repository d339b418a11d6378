//! Equation grammar, exact evaluation and canonical formatting.
//!
//! Equations have the shape `var = expr` where `expr` is built from
//! non-negative numerals, parentheses and the four binary operators.
//! All arithmetic is carried out over exact rationals.
//!
//! ```text
//! equation := ident '=' expr
//! expr     := term (('+' | '-') term)*
//! term     := factor (('*' | '/') factor)*
//! factor   := number | '(' expr ')'
//! ```

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::bengali_digit_value;

/// Exact rational number used for every numeral and every solution.
pub type Rational = BigRational;

const MAX_NESTING: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl Op {
    pub const ALL: [Op; 4] = [Op::Add, Op::Sub, Op::Mul, Op::Div];

    pub fn symbol(self) -> char {
        match self {
            Op::Add => '+',
            Op::Sub => '-',
            Op::Mul => '*',
            Op::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            Op::Add | Op::Sub => 1,
            Op::Mul | Op::Div => 2,
        }
    }

    fn from_symbol(c: char) -> Option<Op> {
        match c {
            '+' => Some(Op::Add),
            '-' => Some(Op::Sub),
            '*' => Some(Op::Mul),
            '/' => Some(Op::Div),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Num(Rational),
    BinOp {
        op: Op,
        left: Box<Expr>,
        right: Box<Expr>,
    },
}

impl Expr {
    pub fn int(v: i64) -> Expr {
        Expr::Num(Rational::from_integer(BigInt::from(v)))
    }

    pub fn bin(op: Op, left: Expr, right: Expr) -> Expr {
        Expr::BinOp {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(_) => u8::MAX,
            Expr::BinOp { op, .. } => op.precedence(),
        }
    }

    /// Number of operator nodes in the tree.
    pub fn operator_count(&self) -> usize {
        count_operators(self).total()
    }
}

/// A single assignment `variable = rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Equation {
    pub variable: String,
    pub rhs: Expr,
}

impl Equation {
    pub fn new(variable: impl Into<String>, rhs: Expr) -> Self {
        Equation {
            variable: variable.into().to_lowercase(),
            rhs,
        }
    }
}

/// Structured parse failure. Offsets count characters, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("expected a variable name at offset {offset}")]
    ExpectedVariable { offset: usize },
    #[error("missing '=' at offset {offset}")]
    MissingEquals { offset: usize },
    #[error("empty expression after '=' at offset {offset}")]
    EmptyExpression { offset: usize },
    #[error("unbalanced parenthesis at offset {offset}")]
    ParenMismatch { offset: usize },
    #[error("unexpected trailing input at offset {offset}")]
    TrailingInput { offset: usize },
    #[error("expected a number or '(' at offset {offset}")]
    ExpectedOperand { offset: usize },
    #[error("unexpected '{found}' at offset {offset}")]
    UnexpectedToken { offset: usize, found: String },
    #[error("unexpected character '{ch}' at offset {offset}")]
    UnexpectedChar { offset: usize, ch: char },
    #[error("malformed number at offset {offset}")]
    InvalidNumber { offset: usize },
    #[error("expression nested deeper than {MAX_NESTING} levels at offset {offset}")]
    TooDeep { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match *self {
            ParseError::ExpectedVariable { offset }
            | ParseError::MissingEquals { offset }
            | ParseError::EmptyExpression { offset }
            | ParseError::ParenMismatch { offset }
            | ParseError::TrailingInput { offset }
            | ParseError::ExpectedOperand { offset }
            | ParseError::UnexpectedToken { offset, .. }
            | ParseError::UnexpectedChar { offset, .. }
            | ParseError::InvalidNumber { offset }
            | ParseError::TooDeep { offset } => offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    /// `operator_index` is the in-order position of the failing `/` among
    /// all operators of the expression.
    #[error("division by zero in `{subexpr}` (operator #{operator_index})")]
    DivisionByZero {
        operator_index: usize,
        subexpr: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Ident(String),
    Number(Rational),
    Op(Op),
    Equals,
    LParen,
    RParen,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn digit_value(c: char) -> Option<u32> {
    c.to_digit(10).or_else(|| bengali_digit_value(c))
}

fn lex(input: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = input.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = if let Some(op) = Op::from_symbol(c) {
            i += 1;
            TokenKind::Op(op)
        } else if c == '=' {
            i += 1;
            TokenKind::Equals
        } else if c == '(' {
            i += 1;
            TokenKind::LParen
        } else if c == ')' {
            i += 1;
            TokenKind::RParen
        } else if digit_value(c).is_some() {
            let mut int_part = BigInt::zero();
            while let Some(d) = chars.get(i).copied().and_then(digit_value) {
                int_part = int_part * 10u32 + d;
                i += 1;
            }
            let mut value = Rational::from_integer(int_part);
            if chars.get(i) == Some(&'.') {
                i += 1;
                let mut frac = BigInt::zero();
                let mut scale = BigInt::one();
                while let Some(d) = chars.get(i).copied().and_then(digit_value) {
                    frac = frac * 10u32 + d;
                    scale *= 10u32;
                    i += 1;
                }
                if scale.is_one() {
                    return Err(ParseError::InvalidNumber { offset: start });
                }
                value += Rational::new(frac, scale);
            }
            TokenKind::Number(value)
        } else if c.is_ascii_alphabetic() {
            let mut ident = String::new();
            while let Some(&ch) = chars.get(i) {
                if ch.is_ascii_alphanumeric() {
                    ident.push(ch.to_ascii_lowercase());
                    i += 1;
                } else {
                    break;
                }
            }
            TokenKind::Ident(ident)
        } else {
            return Err(ParseError::UnexpectedChar { offset: i, ch: c });
        };
        tokens.push(Token {
            kind,
            offset: start,
        });
    }
    tokens.push(Token {
        kind: TokenKind::End,
        offset: chars.len(),
    });
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if !matches!(tok.kind, TokenKind::End) {
            self.pos += 1;
        }
        tok
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.term()?;
        while let TokenKind::Op(op @ (Op::Add | Op::Sub)) = self.peek().kind {
            self.bump();
            let right = self.term()?;
            left = Expr::bin(op, left, right);
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.factor()?;
        while let TokenKind::Op(op @ (Op::Mul | Op::Div)) = self.peek().kind {
            self.bump();
            let right = self.factor()?;
            left = Expr::bin(op, left, right);
        }
        Ok(left)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let tok = self.bump();
        match tok.kind {
            TokenKind::Number(v) => Ok(Expr::Num(v)),
            TokenKind::LParen => {
                if self.depth >= MAX_NESTING {
                    return Err(ParseError::TooDeep { offset: tok.offset });
                }
                self.depth += 1;
                let inner = self.expr()?;
                self.depth -= 1;
                match self.bump().kind {
                    TokenKind::RParen => Ok(inner),
                    _ => Err(ParseError::ParenMismatch { offset: tok.offset }),
                }
            }
            TokenKind::End => Err(ParseError::ExpectedOperand { offset: tok.offset }),
            TokenKind::RParen => Err(ParseError::ParenMismatch { offset: tok.offset }),
            other => Err(ParseError::UnexpectedToken {
                offset: tok.offset,
                found: token_text(&other),
            }),
        }
    }
}

fn token_text(kind: &TokenKind) -> String {
    match kind {
        TokenKind::Ident(s) => s.clone(),
        TokenKind::Number(v) => format_decimal(v).unwrap_or_else(|| v.to_string()),
        TokenKind::Op(op) => op.symbol().to_string(),
        TokenKind::Equals => "=".into(),
        TokenKind::LParen => "(".into(),
        TokenKind::RParen => ")".into(),
        TokenKind::End => "end of input".into(),
    }
}

/// Parses `var = expr`. ASCII and Bengali digits are both accepted; the
/// variable name is lowercased.
pub fn parse_equation(s: &str) -> Result<Equation, ParseError> {
    let tokens = lex(s)?;
    let has_equals = tokens.iter().any(|t| t.kind == TokenKind::Equals);
    let mut p = Parser {
        tokens,
        pos: 0,
        depth: 0,
    };

    let first = p.bump();
    let variable = match first.kind {
        TokenKind::Ident(name) => name,
        _ if !has_equals => return Err(ParseError::MissingEquals { offset: first.offset }),
        _ => return Err(ParseError::ExpectedVariable { offset: first.offset }),
    };
    let eq = p.bump();
    if eq.kind != TokenKind::Equals {
        return Err(ParseError::MissingEquals { offset: eq.offset });
    }
    if matches!(p.peek().kind, TokenKind::End) {
        return Err(ParseError::EmptyExpression {
            offset: p.peek().offset,
        });
    }
    let rhs = p.expr()?;
    let rest = p.peek();
    match rest.kind {
        TokenKind::End => Ok(Equation { variable, rhs }),
        TokenKind::RParen => Err(ParseError::ParenMismatch {
            offset: rest.offset,
        }),
        _ => Err(ParseError::TrailingInput {
            offset: rest.offset,
        }),
    }
}

/// Exact evaluation of an expression tree.
pub fn evaluate(e: &Expr) -> Result<Rational, EvalError> {
    let mut next_index = 0;
    eval_inner(e, &mut next_index)
}

fn eval_inner(e: &Expr, next_index: &mut usize) -> Result<Rational, EvalError> {
    match e {
        Expr::Num(v) => Ok(v.clone()),
        Expr::BinOp { op, left, right } => {
            let l = eval_inner(left, next_index)?;
            let index = *next_index;
            *next_index += 1;
            let r = eval_inner(right, next_index)?;
            Ok(match op {
                Op::Add => l + r,
                Op::Sub => l - r,
                Op::Mul => l * r,
                Op::Div => {
                    if r.is_zero() {
                        return Err(EvalError::DivisionByZero {
                            operator_index: index,
                            subexpr: expr_to_string(e),
                        });
                    }
                    l / r
                }
            })
        }
    }
}

pub fn solve(eq: &Equation) -> Result<Rational, EvalError> {
    evaluate(&eq.rhs)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub add: usize,
    pub sub: usize,
    pub mul: usize,
    pub div: usize,
}

impl OpCounts {
    pub fn get(&self, op: Op) -> usize {
        match op {
            Op::Add => self.add,
            Op::Sub => self.sub,
            Op::Mul => self.mul,
            Op::Div => self.div,
        }
    }

    pub fn total(&self) -> usize {
        self.add + self.sub + self.mul + self.div
    }
}

pub fn count_operators(e: &Expr) -> OpCounts {
    let mut counts = OpCounts::default();
    let mut stack = vec![e];
    while let Some(node) = stack.pop() {
        if let Expr::BinOp { op, left, right } = node {
            match op {
                Op::Add => counts.add += 1,
                Op::Sub => counts.sub += 1,
                Op::Mul => counts.mul += 1,
                Op::Div => counts.div += 1,
            }
            stack.push(left);
            stack.push(right);
        }
    }
    counts
}

/// Formats a rational as a terminating decimal (`7`, `2.5`), or `None` when
/// the denominator has prime factors other than 2 and 5.
pub fn format_decimal(v: &Rational) -> Option<String> {
    let mut denom = v.denom().clone();
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    let (mut twos, mut fives) = (0u32, 0u32);
    while (&denom % &two).is_zero() {
        denom /= &two;
        twos += 1;
    }
    while (&denom % &five).is_zero() {
        denom /= &five;
        fives += 1;
    }
    if !denom.is_one() {
        return None;
    }
    let places = twos.max(fives);
    let scaled = (v * Rational::from_integer(BigInt::from(10u32).pow(places))).to_integer();
    let digits = scaled.abs().to_string();
    let sign = if scaled.is_negative() { "-" } else { "" };
    if places == 0 {
        return Some(format!("{sign}{digits}"));
    }
    let places = places as usize;
    let padded = format!("{:0>width$}", digits, width = places + 1);
    let (int_part, frac_part) = padded.split_at(padded.len() - places);
    Some(format!("{sign}{int_part}.{frac_part}"))
}

/// Human-readable exact value: integers and terminating decimals as
/// decimals, everything else as `p/q`.
pub fn format_rational(v: &Rational) -> String {
    format_decimal(v).unwrap_or_else(|| format!("{}/{}", v.numer(), v.denom()))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational literal `{0}`")]
pub struct RationalParseError(pub String);

/// Parses `p/q`, an integer, or a decimal. Bengali digits are accepted and
/// a leading `-` is allowed.
pub fn parse_rational(s: &str) -> Result<Rational, RationalParseError> {
    let err = || RationalParseError(s.to_string());
    let trimmed = s.trim();
    let (negative, body) = match trimmed.strip_prefix('-') {
        Some(rest) => (true, rest.trim_start()),
        None => (false, trimmed),
    };
    let parse_decimal = |text: &str| -> Option<Rational> {
        let tokens = lex(text).ok()?;
        match tokens.as_slice() {
            [Token {
                kind: TokenKind::Number(v),
                ..
            }, Token {
                kind: TokenKind::End,
                ..
            }] => Some(v.clone()),
            _ => None,
        }
    };
    let value = match body.split_once('/') {
        Some((num, den)) => {
            let num = parse_decimal(num).ok_or_else(err)?;
            let den = parse_decimal(den).ok_or_else(err)?;
            if den.is_zero() {
                return Err(err());
            }
            num / den
        }
        None => parse_decimal(body).ok_or_else(err)?,
    };
    Ok(if negative { -value } else { value })
}

/// Lossy conversion for reporting.
pub fn rational_to_f64(v: &Rational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

fn write_num(out: &mut String, v: &Rational) {
    match format_decimal(v) {
        Some(s) => out.push_str(&s),
        None => {
            out.push_str(&v.numer().to_string());
            out.push_str(" / ");
            out.push_str(&v.denom().to_string());
        }
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Num(v) => write_num(out, v),
        Expr::BinOp { op, left, right } => {
            let prec = op.precedence();
            let wrap_left = left.precedence() < prec;
            let wrap_right = right.precedence() <= prec;
            write_operand(out, left, wrap_left);
            out.push(' ');
            out.push(op.symbol());
            out.push(' ');
            write_operand(out, right, wrap_right);
        }
    }
}

fn write_operand(out: &mut String, e: &Expr, wrap: bool) {
    if wrap {
        out.push_str("( ");
        write_expr(out, e);
        out.push_str(" )");
    } else {
        write_expr(out, e);
    }
}

/// Canonical space-separated rendering with the minimum parentheses needed
/// to reproduce the exact tree under left-associative parsing.
pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

pub fn to_canonical_string(eq: &Equation) -> String {
    format!("{} = {}", eq.variable.to_lowercase(), expr_to_string(&eq.rhs))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&expr_to_string(self))
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&to_canonical_string(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn parses_parenthesised_subtraction() {
        let eq = parse_equation("x = ( 7 - 3 )").unwrap();
        assert_eq!(eq, Equation::new("x", Expr::bin(Op::Sub, Expr::int(7), Expr::int(3))));
    }

    #[test]
    fn multiplication_binds_tighter() {
        let eq = parse_equation("x = 2 + 3 * 4").unwrap();
        let expected = Expr::bin(
            Op::Add,
            Expr::int(2),
            Expr::bin(Op::Mul, Expr::int(3), Expr::int(4)),
        );
        assert_eq!(eq.rhs, expected);
    }

    #[test]
    fn bengali_digits_are_normalized() {
        let eq = parse_equation("x = ৭ - ৩").unwrap();
        assert_eq!(eq.rhs, Expr::bin(Op::Sub, Expr::int(7), Expr::int(3)));
        let eq = parse_equation("x = ৪২").unwrap();
        assert_eq!(eq.rhs, Expr::int(42));
    }

    #[test]
    fn subtraction_is_left_associative() {
        let eq = parse_equation("x = 8 - 2 - 1").unwrap();
        let expected = Expr::bin(
            Op::Sub,
            Expr::bin(Op::Sub, Expr::int(8), Expr::int(2)),
            Expr::int(1),
        );
        assert_eq!(eq.rhs, expected);
        assert_eq!(solve(&eq).unwrap(), rat(5, 1));
    }

    #[test]
    fn whitespace_insensitive_and_case_folded() {
        let a = parse_equation("X=(7-3)").unwrap();
        let b = parse_equation("  x =  ( 7 -3 ) ").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.variable, "x");
    }

    #[test]
    fn decimals_are_exact() {
        let eq = parse_equation("x = 2.5 * 2").unwrap();
        assert_eq!(eq.rhs, Expr::bin(Op::Mul, Expr::Num(rat(5, 2)), Expr::int(2)));
        assert_eq!(solve(&eq).unwrap(), rat(5, 1));
        assert!(matches!(
            parse_equation("x = 2. + 1"),
            Err(ParseError::InvalidNumber { offset: 4 })
        ));
    }

    #[test]
    fn structured_errors_carry_offsets() {
        assert_eq!(
            parse_equation("7 - 3"),
            Err(ParseError::MissingEquals { offset: 0 })
        );
        assert_eq!(
            parse_equation("x 7"),
            Err(ParseError::MissingEquals { offset: 2 })
        );
        assert_eq!(
            parse_equation("x = "),
            Err(ParseError::EmptyExpression { offset: 4 })
        );
        assert_eq!(
            parse_equation("x = (7 - 3"),
            Err(ParseError::ParenMismatch { offset: 4 })
        );
        assert_eq!(
            parse_equation("x = 7 - 3)"),
            Err(ParseError::ParenMismatch { offset: 9 })
        );
        assert_eq!(
            parse_equation("x = 7 3"),
            Err(ParseError::TrailingInput { offset: 6 })
        );
        assert_eq!(
            parse_equation("x = 7 -"),
            Err(ParseError::ExpectedOperand { offset: 7 })
        );
        assert_eq!(
            parse_equation("x = 7 ^ 2"),
            Err(ParseError::UnexpectedChar { offset: 6, ch: '^' })
        );
        assert_eq!(
            parse_equation("= 4"),
            Err(ParseError::ExpectedVariable { offset: 0 })
        );
    }

    #[test]
    fn unary_minus_is_rejected() {
        assert_eq!(
            parse_equation("x = -3"),
            Err(ParseError::UnexpectedToken {
                offset: 4,
                found: "-".into()
            })
        );
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let s = format!("x = {}1{}", "(".repeat(10_000), ")".repeat(10_000));
        assert!(matches!(parse_equation(&s), Err(ParseError::TooDeep { .. })));
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(evaluate(&Expr::bin(Op::Sub, Expr::int(7), Expr::int(3))).unwrap(), rat(4, 1));
        assert_eq!(evaluate(&Expr::bin(Op::Div, Expr::int(5), Expr::int(2))).unwrap(), rat(5, 2));
    }

    #[test]
    fn solve_examples() {
        let solve_str = |s: &str| solve(&parse_equation(s).unwrap()).unwrap();
        assert_eq!(solve_str("x=(7-3)"), rat(4, 1));
        assert_eq!(solve_str("x=0*9"), rat(0, 1));
        // (12 + 8) / 5 * 2 = 20 / 5 * 2 = 4 * 2
        assert_eq!(solve_str("x=(12+8)/5*2"), rat(8, 1));
    }

    #[test]
    fn division_by_zero_is_reported() {
        let eq = parse_equation("x = 1 + 5 / (2 - 2)").unwrap();
        match solve(&eq) {
            Err(EvalError::DivisionByZero {
                operator_index,
                subexpr,
            }) => {
                assert_eq!(operator_index, 1);
                assert_eq!(subexpr, "5 / ( 2 - 2 )");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn operator_counts() {
        assert_eq!(count_operators(&Expr::int(5)), OpCounts::default());
        let sub = Expr::bin(Op::Sub, Expr::int(7), Expr::int(3));
        assert_eq!(count_operators(&sub), OpCounts { sub: 1, ..Default::default() });
        let mixed = Expr::bin(
            Op::Add,
            Expr::bin(Op::Mul, Expr::int(2), Expr::int(3)),
            Expr::int(4),
        );
        assert_eq!(
            count_operators(&mixed),
            OpCounts { add: 1, mul: 1, ..Default::default() }
        );
    }

    #[test]
    fn canonical_strings() {
        let sub = Equation::new("X", Expr::bin(Op::Sub, Expr::int(7), Expr::int(3)));
        assert_eq!(to_canonical_string(&sub), "x = 7 - 3");
        let add = Equation::new(
            "x",
            Expr::bin(Op::Add, Expr::int(2), Expr::bin(Op::Mul, Expr::int(3), Expr::int(4))),
        );
        assert_eq!(to_canonical_string(&add), "x = 2 + 3 * 4");
        let mul = Equation::new(
            "x",
            Expr::bin(Op::Mul, Expr::bin(Op::Add, Expr::int(2), Expr::int(3)), Expr::int(4)),
        );
        assert_eq!(to_canonical_string(&mul), "x = ( 2 + 3 ) * 4");
        let right_nested = Equation::new(
            "x",
            Expr::bin(Op::Sub, Expr::int(8), Expr::bin(Op::Sub, Expr::int(2), Expr::int(1))),
        );
        assert_eq!(to_canonical_string(&right_nested), "x = 8 - ( 2 - 1 )");
    }

    #[test]
    fn rational_formatting() {
        assert_eq!(format_rational(&rat(4, 1)), "4");
        assert_eq!(format_rational(&rat(5, 2)), "2.5");
        assert_eq!(format_rational(&rat(-1, 8)), "-0.125");
        assert_eq!(format_rational(&rat(1, 3)), "1/3");
        assert_eq!(parse_rational("5/2").unwrap(), rat(5, 2));
        assert_eq!(parse_rational("2.5").unwrap(), rat(5, 2));
        assert_eq!(parse_rational("-4").unwrap(), rat(-4, 1));
        assert_eq!(parse_rational("৪২").unwrap(), rat(42, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }
}
