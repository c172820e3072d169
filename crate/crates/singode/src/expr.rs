//! A small arithmetic expression language for coefficient formulas.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' factor)?
//! atom   := number | 'x' | 'e' | 'pi' | ident '(' expr ')' | '(' expr ')'
//! ident  ∈ {sin, cos, exp, ln, abs, sqrt}
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus. Number
//! literals are plain decimals (`3`, `0.25`); scientific notation is not
//! part of the grammar because `e` is the Euler constant. Literals keep
//! their exact decimal value and are converted to the working precision
//! only when evaluated.

use std::fmt;

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::One;
use thiserror::Error;

/// Working precision for expression evaluation.
///
/// `Double` is native `f64`. `Bits(p)` evaluates every intermediate value
/// with a `p`-bit significand (software floating point) and rounds the
/// final result to `f64`. Both modes are deterministic: the same
/// expression, argument, and precision always give the same bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Double,
    Bits(u32),
}

impl Default for Precision {
    fn default() -> Self {
        Precision::Double
    }
}

pub const MIN_PRECISION_BITS: u32 = 32;
pub const MAX_PRECISION_BITS: u32 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Sin,
    Cos,
    Exp,
    Ln,
    Abs,
    Sqrt,
}

impl UnaryFn {
    fn name(self) -> &'static str {
        match self {
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Exp => "exp",
            UnaryFn::Ln => "ln",
            UnaryFn::Abs => "abs",
            UnaryFn::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => UnaryFn::Sin,
            "cos" => UnaryFn::Cos,
            "exp" => UnaryFn::Exp,
            "ln" => UnaryFn::Ln,
            "abs" => UnaryFn::Abs,
            "sqrt" => UnaryFn::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedConst {
    E,
    Pi,
}

/// An exact decimal literal. The lexeme is kept as written so printing
/// round-trips; the cached `f64` is the correctly rounded conversion.
#[derive(Debug, Clone)]
pub struct NumberLit {
    lexeme: String,
    value: f64,
}

impl NumberLit {
    fn new(lexeme: &str) -> Self {
        let value: f64 = lexeme.parse().expect("lexer produced a valid decimal");
        NumberLit {
            lexeme: lexeme.to_string(),
            value,
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn lexeme(&self) -> &str {
        &self.lexeme
    }

    /// Exact rational value of the decimal literal (digits / 10^frac_len).
    pub fn to_rational(&self) -> BigRational {
        let (int_part, frac_part) = match self.lexeme.split_once('.') {
            Some((i, f)) => (i, f),
            None => (self.lexeme.as_str(), ""),
        };
        let mut digits = String::with_capacity(int_part.len() + frac_part.len());
        digits.push_str(int_part);
        digits.push_str(frac_part);
        let numer: BigInt = digits.parse().expect("decimal digits");
        let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
        BigRational::new(numer, denom)
    }
}

impl PartialEq for NumberLit {
    fn eq(&self, other: &Self) -> bool {
        self.lexeme == other.lexeme
    }
}

/// Immutable expression tree. Values are pure; trees can be shared
/// freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(NumberLit),
    Var,
    Const(NamedConst),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Func(UnaryFn, Box<Expr>),
}

impl Expr {
    pub fn number(lexeme: &str) -> Expr {
        Expr::Number(NumberLit::new(lexeme))
    }

    /// Does the expression mention `x` at all?
    pub fn depends_on_x(&self) -> bool {
        match self {
            Expr::Var => true,
            Expr::Number(_) | Expr::Const(_) => false,
            Expr::Neg(a) | Expr::Func(_, a) => a.depends_on_x(),
            Expr::Bin(_, a, b) => a.depends_on_x() || b.depends_on_x(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: found {found}, expected {}", expected.join(", "))]
    Syntax {
        offset: usize,
        found: String,
        expected: Vec<String>,
    },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdent { offset: usize, name: String },
    #[error("empty expression")]
    Empty,
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdent { offset, .. } => {
                Some(*offset)
            }
            ParseError::Empty => None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("division by zero in `{subexpr}` at x = {x}")]
    DivisionByZero { subexpr: String, x: f64 },
    #[error("ln of non-positive value in `{subexpr}` at x = {x}")]
    LnNonPositive { subexpr: String, x: f64 },
    #[error("sqrt of negative value in `{subexpr}` at x = {x}")]
    SqrtNegative { subexpr: String, x: f64 },
    #[error("zero raised to a negative power in `{subexpr}` at x = {x}")]
    ZeroToNegativePower { subexpr: String, x: f64 },
    #[error("unsupported working precision: {bits} bits (allowed {MIN_PRECISION_BITS}..={MAX_PRECISION_BITS})")]
    BadPrecision { bits: u32 },
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(s) => format!("number `{s}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
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
        while matches!(self.src.get(self.pos), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.pos += 1;
        }
    }

    /// Next token plus its starting byte offset.
    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::Eof, start));
        };
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' => {
                let mut end = self.pos;
                while matches!(self.src.get(end), Some(b'0'..=b'9')) {
                    end += 1;
                }
                if self.src.get(end) == Some(&b'.') {
                    if !matches!(self.src.get(end + 1), Some(b'0'..=b'9')) {
                        return Err(ParseError::Syntax {
                            offset: end,
                            found: "`.` with no fractional digits".into(),
                            expected: vec!["digit".into()],
                        });
                    }
                    end += 1;
                    while matches!(self.src.get(end), Some(b'0'..=b'9')) {
                        end += 1;
                    }
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                self.pos = end;
                return Ok((Tok::Num(text.to_string()), start));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut end = self.pos;
                while matches!(self.src.get(end), Some(b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' | b'_'))
                {
                    end += 1;
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                self.pos = end;
                return Ok((Tok::Ident(text.to_string()), start));
            }
            other => {
                return Err(ParseError::Syntax {
                    offset: start,
                    found: format!("`{}`", other as char),
                    expected: vec!["a token".into()],
                });
            }
        };
        self.pos += 1;
        Ok((tok, start))
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    lexer: Lexer<'a>,
    cur: Tok,
    cur_offset: usize,
}

const ATOM_EXPECTED: &[&str] = &["number", "`x`", "`e`", "`pi`", "function name", "`(`"];

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(src);
        let (cur, cur_offset) = lexer.next()?;
        Ok(Parser {
            lexer,
            cur,
            cur_offset,
        })
    }

    fn advance(&mut self) -> Result<(), ParseError> {
        let (tok, off) = self.lexer.next()?;
        self.cur = tok;
        self.cur_offset = off;
        Ok(())
    }

    fn syntax_error(&self, expected: &[&str]) -> ParseError {
        ParseError::Syntax {
            offset: self.cur_offset,
            found: self.cur.describe(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut node = self.term()?;
        loop {
            let op = match self.cur {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.advance()?;
            let rhs = self.term()?;
            node = Expr::Bin(op, Box::new(node), Box::new(rhs));
        }
        Ok(node)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut node = self.factor()?;
        loop {
            let op = match self.cur {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.advance()?;
            let rhs = self.factor()?;
            node = Expr::Bin(op, Box::new(node), Box::new(rhs));
        }
        Ok(node)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.cur == Tok::Minus {
            self.advance()?;
            let inner = self.factor()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.cur == Tok::Caret {
            self.advance()?;
            let exponent = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.cur.clone() {
            Tok::Num(text) => {
                self.advance()?;
                Ok(Expr::Number(NumberLit::new(&text)))
            }
            Tok::Ident(name) => {
                let offset = self.cur_offset;
                self.advance()?;
                if self.cur == Tok::LParen {
                    let Some(func) = UnaryFn::from_name(&name) else {
                        return Err(ParseError::UnknownIdent { offset, name });
                    };
                    self.advance()?;
                    let arg = self.expr()?;
                    if self.cur != Tok::RParen {
                        return Err(self.syntax_error(&["`)`"]));
                    }
                    self.advance()?;
                    Ok(Expr::Func(func, Box::new(arg)))
                } else {
                    match name.as_str() {
                        "x" => Ok(Expr::Var),
                        "e" => Ok(Expr::Const(NamedConst::E)),
                        "pi" => Ok(Expr::Const(NamedConst::Pi)),
                        _ => Err(ParseError::UnknownIdent { offset, name }),
                    }
                }
            }
            Tok::LParen => {
                self.advance()?;
                let inner = self.expr()?;
                if self.cur != Tok::RParen {
                    return Err(self.syntax_error(&["`)`"]));
                }
                self.advance()?;
                Ok(inner)
            }
            _ => Err(self.syntax_error(ATOM_EXPECTED)),
        }
    }
}

/// Parse a source string into an expression tree.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    if source.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut parser = Parser::new(source)?;
    let expr = parser.expr()?;
    if parser.cur != Tok::Eof {
        return Err(parser.syntax_error(&["operator", "end of input"]));
    }
    Ok(expr)
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Bin(BinOp::Pow, ..) => 4,
        _ => 5,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, needs_parens: bool) -> fmt::Result {
    if needs_parens {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(n) => write!(f, "{}", n.lexeme),
            Expr::Var => write!(f, "x"),
            Expr::Const(NamedConst::E) => write!(f, "e"),
            Expr::Const(NamedConst::Pi) => write!(f, "pi"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, precedence(a) < 3)
            }
            Expr::Func(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Bin(op, l, r) => {
                let (sym, prec, spaced) = match op {
                    BinOp::Add => ("+", 1, true),
                    BinOp::Sub => ("-", 1, true),
                    BinOp::Mul => ("*", 2, false),
                    BinOp::Div => ("/", 2, false),
                    BinOp::Pow => ("^", 4, false),
                };
                // `-` and `/` need parens around a same-precedence right
                // child; `^` is right-associative so the left child needs
                // them instead.
                let (lp, rp) = match op {
                    BinOp::Pow => (precedence(l) <= prec, precedence(r) < prec),
                    BinOp::Sub | BinOp::Div => (precedence(l) < prec, precedence(r) <= prec),
                    _ => (precedence(l) < prec, precedence(r) < prec),
                };
                write_child(f, l, lp)?;
                if spaced {
                    write!(f, " {sym} ")?;
                } else {
                    write!(f, "{sym}")?;
                }
                write_child(f, r, rp)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// `base^p` with the sign convention used throughout: integer exponents
/// keep the sign of the base; non-integer exponents act on `|base|`
/// (this is what makes `x^a` the even reflection `|x|^a` on `x < 0`).
fn pow_f64(base: f64, p: f64, node: &Expr, x: f64) -> Result<f64, EvalError> {
    if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
        if base == 0.0 && p < 0.0 {
            return Err(EvalError::ZeroToNegativePower {
                subexpr: node.to_string(),
                x,
            });
        }
        return Ok(base.powi(p as i32));
    }
    if base == 0.0 {
        if p < 0.0 {
            return Err(EvalError::ZeroToNegativePower {
                subexpr: node.to_string(),
                x,
            });
        }
        return Ok(0.0);
    }
    Ok(base.abs().powf(p))
}

fn eval_f64(node: &Expr, x: f64) -> Result<f64, EvalError> {
    match node {
        Expr::Number(n) => Ok(n.value),
        Expr::Var => Ok(x),
        Expr::Const(NamedConst::E) => Ok(std::f64::consts::E),
        Expr::Const(NamedConst::Pi) => Ok(std::f64::consts::PI),
        Expr::Neg(a) => Ok(-eval_f64(a, x)?),
        Expr::Func(func, a) => {
            let v = eval_f64(a, x)?;
            match func {
                UnaryFn::Sin => Ok(v.sin()),
                UnaryFn::Cos => Ok(v.cos()),
                UnaryFn::Exp => Ok(v.exp()),
                UnaryFn::Abs => Ok(v.abs()),
                UnaryFn::Ln => {
                    if v <= 0.0 {
                        Err(EvalError::LnNonPositive {
                            subexpr: node.to_string(),
                            x,
                        })
                    } else {
                        Ok(v.ln())
                    }
                }
                UnaryFn::Sqrt => {
                    if v < 0.0 {
                        Err(EvalError::SqrtNegative {
                            subexpr: node.to_string(),
                            x,
                        })
                    } else {
                        Ok(v.sqrt())
                    }
                }
            }
        }
        Expr::Bin(op, l, r) => {
            let a = eval_f64(l, x)?;
            let b = eval_f64(r, x)?;
            match op {
                BinOp::Add => Ok(a + b),
                BinOp::Sub => Ok(a - b),
                BinOp::Mul => Ok(a * b),
                BinOp::Div => {
                    if b == 0.0 {
                        Err(EvalError::DivisionByZero {
                            subexpr: node.to_string(),
                            x,
                        })
                    } else {
                        Ok(a / b)
                    }
                }
                BinOp::Pow => pow_f64(a, b, node, x),
            }
        }
    }
}

thread_local! {
    static CONSTS: std::cell::RefCell<Consts> =
        std::cell::RefCell::new(Consts::new().expect("constants cache"));
}

struct BigCtx<'a> {
    p: usize,
    rm: RoundingMode,
    cc: &'a mut Consts,
    x: f64,
}

fn big_is_integer(v: &BigFloat, p: usize, rm: RoundingMode) -> Option<(BigFloat, bool)> {
    // Returns the rounded value and whether it is odd, when v is integral.
    let rounded = v.round(0, rm);
    if rounded.sub(v, p, rm).is_zero() {
        let two = BigFloat::from_i8(2, p);
        let half = rounded.div(&two, p, rm).round(0, RoundingMode::ToZero);
        let rem = rounded.sub(&half.mul(&two, p, rm), p, rm);
        Some((rounded, !rem.is_zero()))
    } else {
        None
    }
}

fn eval_big(node: &Expr, ctx: &mut BigCtx<'_>) -> Result<BigFloat, EvalError> {
    let p = ctx.p;
    let rm = ctx.rm;
    match node {
        Expr::Number(n) => Ok(BigFloat::parse(&n.lexeme, Radix::Dec, p, rm, ctx.cc)),
        Expr::Var => Ok(BigFloat::from_f64(ctx.x, p)),
        Expr::Const(NamedConst::E) => Ok(ctx.cc.e(p, rm)),
        Expr::Const(NamedConst::Pi) => Ok(ctx.cc.pi(p, rm)),
        Expr::Neg(a) => Ok(eval_big(a, ctx)?.neg()),
        Expr::Func(func, a) => {
            let v = eval_big(a, ctx)?;
            match func {
                UnaryFn::Sin => Ok(v.sin(p, rm, ctx.cc)),
                UnaryFn::Cos => Ok(v.cos(p, rm, ctx.cc)),
                UnaryFn::Exp => Ok(v.exp(p, rm, ctx.cc)),
                UnaryFn::Abs => Ok(v.abs()),
                UnaryFn::Ln => {
                    if v.is_zero() || v.is_negative() {
                        Err(EvalError::LnNonPositive {
                            subexpr: node.to_string(),
                            x: ctx.x,
                        })
                    } else {
                        Ok(v.ln(p, rm, ctx.cc))
                    }
                }
                UnaryFn::Sqrt => {
                    if v.is_negative() {
                        Err(EvalError::SqrtNegative {
                            subexpr: node.to_string(),
                            x: ctx.x,
                        })
                    } else {
                        Ok(v.sqrt(p, rm))
                    }
                }
            }
        }
        Expr::Bin(op, l, r) => {
            let a = eval_big(l, ctx)?;
            let b = eval_big(r, ctx)?;
            match op {
                BinOp::Add => Ok(a.add(&b, p, rm)),
                BinOp::Sub => Ok(a.sub(&b, p, rm)),
                BinOp::Mul => Ok(a.mul(&b, p, rm)),
                BinOp::Div => {
                    if b.is_zero() {
                        Err(EvalError::DivisionByZero {
                            subexpr: node.to_string(),
                            x: ctx.x,
                        })
                    } else {
                        Ok(a.div(&b, p, rm))
                    }
                }
                BinOp::Pow => {
                    if let Some((_, odd)) = big_is_integer(&b, p, rm) {
                        if a.is_zero() && b.is_negative() {
                            return Err(EvalError::ZeroToNegativePower {
                                subexpr: node.to_string(),
                                x: ctx.x,
                            });
                        }
                        let negative = a.is_negative() && odd;
                        let mag = a.abs().pow(&b, p, rm, ctx.cc);
                        Ok(if negative { mag.neg() } else { mag })
                    } else if a.is_zero() {
                        if b.is_negative() {
                            Err(EvalError::ZeroToNegativePower {
                                subexpr: node.to_string(),
                                x: ctx.x,
                            })
                        } else {
                            Ok(BigFloat::from_i8(0, p))
                        }
                    } else {
                        Ok(a.abs().pow(&b, p, rm, ctx.cc))
                    }
                }
            }
        }
    }
}

fn big_to_f64(v: &BigFloat) -> f64 {
    // Render-and-parse keeps the conversion deterministic; the displayed
    // mantissa carries far more digits than f64 can distinguish.
    format!("{v}").parse::<f64>().unwrap_or(f64::NAN)
}

/// Evaluate `expr` at `x` under the given working precision. The result is
/// rounded to `f64`; higher precision tightens intermediate rounding only.
pub fn evaluate(expr: &Expr, x: f64, precision: Precision) -> Result<f64, EvalError> {
    match precision {
        Precision::Double => eval_f64(expr, x),
        Precision::Bits(bits) => {
            if !(MIN_PRECISION_BITS..=MAX_PRECISION_BITS).contains(&bits) {
                return Err(EvalError::BadPrecision { bits });
            }
            CONSTS.with(|cc| {
                let mut cc = cc.borrow_mut();
                let mut ctx = BigCtx {
                    p: bits as usize,
                    rm: RoundingMode::ToEven,
                    cc: &mut cc,
                    x,
                };
                eval_big(expr, &mut ctx).map(|v| big_to_f64(&v))
            })
        }
    }
}

/// Evaluate a constant (x-free) expression as an exact rational, when the
/// expression stays inside +,-,*,/ and integer powers of exact decimals.
pub fn evaluate_rational(expr: &Expr) -> Option<BigRational> {
    match expr {
        Expr::Number(n) => Some(n.to_rational()),
        Expr::Neg(a) => Some(-evaluate_rational(a)?),
        Expr::Bin(op, l, r) => {
            let a = evaluate_rational(l)?;
            let b = evaluate_rational(r)?;
            match op {
                BinOp::Add => Some(a + b),
                BinOp::Sub => Some(a - b),
                BinOp::Mul => Some(a * b),
                BinOp::Div => {
                    if b == BigRational::from(BigInt::from(0)) {
                        None
                    } else {
                        Some(a / b)
                    }
                }
                BinOp::Pow => {
                    if !b.is_integer() {
                        return None;
                    }
                    let e = b.to_integer();
                    let e32: i32 = e.try_into().ok()?;
                    if e32 < 0 && a == BigRational::from(BigInt::from(0)) {
                        return None;
                    }
                    if a == BigRational::from(BigInt::from(0)) && e32 == 0 {
                        return Some(BigRational::one());
                    }
                    Some(a.pow(e32))
                }
            }
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(s: &str) -> Box<Expr> {
        Box::new(Expr::number(s))
    }

    #[test]
    fn precedence_forced_shape() {
        let e = parse("1 - 4/x^2").unwrap();
        let expected = Expr::Bin(
            BinOp::Sub,
            num("1"),
            Box::new(Expr::Bin(
                BinOp::Div,
                num("4"),
                Box::new(Expr::Bin(BinOp::Pow, Box::new(Expr::Var), num("2"))),
            )),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn function_application() {
        let e = parse("sin(x)/x").unwrap();
        let expected = Expr::Bin(
            BinOp::Div,
            Box::new(Expr::Func(UnaryFn::Sin, Box::new(Expr::Var))),
            Box::new(Expr::Var),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn incomplete_input_position() {
        let err = parse("2*").unwrap_err();
        assert_eq!(err.offset(), Some(2));
        match err {
            ParseError::Syntax { expected, .. } => assert!(!expected.is_empty()),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        let err = parse("2*y").unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownIdent {
                offset: 2,
                name: "y".into()
            }
        );
        let err = parse("tan(x)").unwrap_err();
        assert!(matches!(err, ParseError::UnknownIdent { offset: 0, .. }));
    }

    #[test]
    fn pow_right_associative() {
        let e = parse("x^2^3").unwrap();
        let expected = Expr::Bin(
            BinOp::Pow,
            Box::new(Expr::Var),
            Box::new(Expr::Bin(BinOp::Pow, num("2"), num("3"))),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn pow_binds_tighter_than_unary_minus() {
        let e = parse("-x^2").unwrap();
        let expected = Expr::Neg(Box::new(Expr::Bin(
            BinOp::Pow,
            Box::new(Expr::Var),
            num("2"),
        )));
        assert_eq!(e, expected);
    }

    #[test]
    fn evaluate_basics() {
        let p = Precision::Double;
        assert_eq!(evaluate(&parse("x^2").unwrap(), 3.0, p).unwrap(), 9.0);
        assert_eq!(evaluate(&parse("1 - 4/x^2").unwrap(), 2.0, p).unwrap(), 0.0);
        assert_eq!(evaluate(&parse("sin(x)").unwrap(), 0.0, p).unwrap(), 0.0);
    }

    #[test]
    fn evaluate_domain_errors() {
        let p = Precision::Double;
        let err = evaluate(&parse("1/x").unwrap(), 0.0, p).unwrap_err();
        assert!(matches!(err, EvalError::DivisionByZero { .. }));
        let err = evaluate(&parse("ln(x)").unwrap(), -1.0, p).unwrap_err();
        assert!(matches!(err, EvalError::LnNonPositive { .. }));
        let err = evaluate(&parse("x^(-2)").unwrap(), 0.0, p).unwrap_err();
        assert!(matches!(err, EvalError::ZeroToNegativePower { .. }));
    }

    #[test]
    fn noninteger_pow_reflects_negative_base() {
        let p = Precision::Double;
        let e = parse("x^0.5").unwrap();
        let at_pos = evaluate(&e, 4.0, p).unwrap();
        let at_neg = evaluate(&e, -4.0, p).unwrap();
        assert_eq!(at_pos, 2.0);
        assert_eq!(at_neg, 2.0);
        // odd integer exponents keep the sign
        let cube = parse("x^3").unwrap();
        assert_eq!(evaluate(&cube, -2.0, p).unwrap(), -8.0);
    }

    #[test]
    fn evaluate_is_pure() {
        let e = parse("sin(x)*exp(x) - pi/x").unwrap();
        let a = evaluate(&e, 0.7, Precision::Double).unwrap();
        let b = evaluate(&e, 0.7, Precision::Double).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn high_precision_agrees_with_double() {
        let e = parse("1 - 4/x^2 + sin(x)/sqrt(x)").unwrap();
        for &x in &[0.3, 0.9, 2.5] {
            let d = evaluate(&e, x, Precision::Double).unwrap();
            let hp = evaluate(&e, x, Precision::Bits(192)).unwrap();
            assert!((d - hp).abs() <= 1e-13 * hp.abs().max(1.0), "x={x}: {d} vs {hp}");
        }
    }

    #[test]
    fn high_precision_is_deterministic() {
        let e = parse("e^x - pi*cos(x)").unwrap();
        let a = evaluate(&e, 1.25, Precision::Bits(256)).unwrap();
        let b = evaluate(&e, 1.25, Precision::Bits(256)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn print_parse_round_trip_examples() {
        for src in [
            "1 - 4/x^2",
            "sin(x)/x",
            "-(x + 1)*(x - 2)",
            "x^-2",
            "(x^2)^3",
            "1 - (2 - 3)",
            "2/(3/x)",
            "-(2*0.18394)/x",
            "abs(x)^0.5*sqrt(abs(x))",
        ] {
            let first = parse(src).unwrap();
            let printed = first.to_string();
            let second = parse(&printed).unwrap();
            assert_eq!(first, second, "round trip failed for {src} -> {printed}");
        }
    }

    #[test]
    fn exact_decimal_literals() {
        let lit = NumberLit::new("0.125");
        assert_eq!(
            lit.to_rational(),
            BigRational::new(BigInt::from(1), BigInt::from(8))
        );
        let lit = NumberLit::new("18.25");
        assert_eq!(
            lit.to_rational(),
            BigRational::new(BigInt::from(73), BigInt::from(4))
        );
    }

    #[test]
    fn evaluate_rational_constant_folding() {
        let e = parse("(1/2)^2 + 0.75").unwrap();
        let v = evaluate_rational(&e).unwrap();
        assert_eq!(v, BigRational::from(BigInt::from(1)));
        assert!(evaluate_rational(&parse("sin(x)").unwrap()).is_none());
    }
}
