//! Piece grammar: infix arithmetic over `x` with `exp`, `sin`, `cos`.
//!
//! Expressions are parsed once into a small AST and evaluated in forward mode
//! carrying the value together with the first and second derivative in `x`.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value with first and second derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Dual2 {
    pub const fn constant(v: f64) -> Self {
        Self {
            v,
            d1: 0.0,
            d2: 0.0,
        }
    }

    pub const fn variable(x: f64) -> Self {
        Self {
            v: x,
            d1: 1.0,
            d2: 0.0,
        }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        Self {
            v: e,
            d1: e * self.d1,
            d2: e * (self.d2 + self.d1 * self.d1),
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        Self {
            v: s,
            d1: c * self.d1,
            d2: c * self.d2 - s * self.d1 * self.d1,
        }
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        Self {
            v: c,
            d1: -s * self.d1,
            d2: -s * self.d2 - c * self.d1 * self.d1,
        }
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        Self {
            v: r,
            d1: -self.d1 * r * r,
            d2: (2.0 * self.d1 * self.d1 * r - self.d2) * r * r,
        }
    }

    /// `self^p` for a constant exponent.
    pub fn powf(self, p: f64) -> Self {
        if p == 0.0 {
            return Self::constant(1.0);
        }
        let int_exp = p.fract() == 0.0 && p.abs() < 1024.0;
        let pw = |q: f64| {
            if int_exp {
                self.v.powi(q as i32)
            } else {
                self.v.powf(q)
            }
        };
        let d1_coef = p * pw(p - 1.0);
        let d2_coef = if p == 1.0 {
            0.0
        } else {
            p * (p - 1.0) * pw(p - 2.0)
        };
        Self {
            v: pw(p),
            d1: d1_coef * self.d1,
            d2: d2_coef * self.d1 * self.d1 + d1_coef * self.d2,
        }
    }
}

impl Add for Dual2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
        }
    }
}

impl Sub for Dual2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            v: self.v - o.v,
            d1: self.d1 - o.d1,
            d2: self.d2 - o.d2,
        }
    }
}

impl Mul for Dual2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

impl Div for Dual2 {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Neg for Dual2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            v: -self.v,
            d1: -self.d1,
            d2: -self.d2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    X,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Power with an exponent folded to a constant at parse time.
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("at column {column}: {message}")]
pub struct ParseError {
    pub column: usize,
    pub message: String,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if let Some(tok) = p.tokens.get(p.pos) {
            return Err(ParseError {
                column: tok.column,
                message: format!("unexpected trailing token {:?}", tok.kind),
            });
        }
        Ok(e)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_dual(Dual2::constant(x)).v
    }

    /// Value, first and second derivative at `x`.
    pub fn eval_d2(&self, x: f64) -> Dual2 {
        self.eval_dual(Dual2::variable(x))
    }

    fn eval_dual(&self, x: Dual2) -> Dual2 {
        match self {
            Expr::Const(c) => Dual2::constant(*c),
            Expr::X => x,
            Expr::Neg(a) => -a.eval_dual(x),
            Expr::Add(a, b) => a.eval_dual(x) + b.eval_dual(x),
            Expr::Sub(a, b) => a.eval_dual(x) - b.eval_dual(x),
            Expr::Mul(a, b) => a.eval_dual(x) * b.eval_dual(x),
            Expr::Div(a, b) => a.eval_dual(x) / b.eval_dual(x),
            Expr::Pow(a, p) => a.eval_dual(x).powf(*p),
            Expr::Call(f, a) => {
                let u = a.eval_dual(x);
                match f {
                    Func::Exp => u.exp(),
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                }
            }
        }
    }

    fn depends_on_x(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::X => true,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.depends_on_x(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on_x() || b.depends_on_x()
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::X => write!(f, "x"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, p) => write!(f, "({a} ^ {p:?})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    column: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let column = i + 1;
        let simple = match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => Some(TokenKind::Plus),
            '-' => Some(TokenKind::Minus),
            '*' => Some(TokenKind::Star),
            '/' => Some(TokenKind::Slash),
            '^' => Some(TokenKind::Caret),
            '(' => Some(TokenKind::LParen),
            ')' => Some(TokenKind::RParen),
            _ => None,
        };
        if let Some(kind) = simple {
            out.push(Token { kind, column });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent part: 1e-3, 2.5E+4
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
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ParseError {
                column,
                message: format!("invalid number literal '{text}'"),
            })?;
            out.push(Token {
                kind: TokenKind::Num(v),
                column,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: TokenKind::Ident(src[start..i].to_string()),
                column,
            });
            continue;
        }
        return Err(ParseError {
            column,
            message: format!("unexpected character '{c}'"),
        });
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn column(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|t| t.column)
            .or_else(|| self.tokens.last().map(|t| t.column + 1))
            .unwrap_or(1)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            column: self.column(),
            message: message.into(),
        })
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), ParseError> {
        if self.peek() == Some(&kind) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {kind:?}"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(TokenKind::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(TokenKind::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(TokenKind::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(TokenKind::Slash) => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(TokenKind::Minus) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(TokenKind::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(&TokenKind::Caret) {
            self.pos += 1;
            let col = self.column();
            let exponent = self.unary()?;
            if exponent.depends_on_x() {
                return Err(ParseError {
                    column: col,
                    message: "exponent must not depend on x".into(),
                });
            }
            return Ok(Expr::Pow(Box::new(base), exponent.eval(0.0)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some(kind) = self.peek().cloned() else {
            return self.err("unexpected end of expression");
        };
        match kind {
            TokenKind::Num(v) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            TokenKind::LParen => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            TokenKind::Ident(name) => {
                self.pos += 1;
                let func = match name.as_str() {
                    "x" => return Ok(Expr::X),
                    "pi" => return Ok(Expr::Const(std::f64::consts::PI)),
                    "e" => return Ok(Expr::Const(std::f64::consts::E)),
                    "exp" => Func::Exp,
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    other => {
                        self.pos -= 1;
                        return self.err(format!("unknown identifier '{other}'"));
                    }
                };
                self.expect(TokenKind::LParen)?;
                let arg = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            other => self.err(format!("unexpected token {other:?}")),
        }
    }
}
