//! A minimal one-variable arithmetic language for user-supplied coefficients.
//!
//! Grammar (the variable may be written `xi`, `ξ` or `x`):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | variable | 'pi' | '(' expr ')' | ('min' | 'max') '(' expr ',' expr ')'
//! ```
//!
//! Expressions are evaluated in forward-mode dual arithmetic so the exact
//! derivative is available alongside the value.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Min(Box<Node>, Box<Node>),
    Max(Box<Node>, Box<Node>),
}

/// A parsed expression in the single variable ξ.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

#[derive(Debug, Clone, Copy)]
struct Dual {
    v: f64,
    d: f64,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let tokens = tokenize(source)?;
        let mut parser = Parser { tokens, pos: 0 };
        let root = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            return Err(Error::Usage(format!(
                "unexpected trailing input in expression `{source}`"
            )));
        }
        Ok(Self {
            source: String::from(source.trim()),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, xi: f64) -> f64 {
        eval(&self.root, Dual { v: xi, d: 1.0 }).v
    }

    /// Returns `(f(ξ), f'(ξ))`.
    pub fn eval_with_derivative(&self, xi: f64) -> (f64, f64) {
        let r = eval(&self.root, Dual { v: xi, d: 1.0 });
        (r.v, r.d)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn eval(node: &Node, x: Dual) -> Dual {
    match node {
        Node::Const(c) => Dual { v: *c, d: 0.0 },
        Node::Var => x,
        Node::Neg(a) => {
            let a = eval(a, x);
            Dual { v: -a.v, d: -a.d }
        }
        Node::Add(a, b) => {
            let (a, b) = (eval(a, x), eval(b, x));
            Dual {
                v: a.v + b.v,
                d: a.d + b.d,
            }
        }
        Node::Sub(a, b) => {
            let (a, b) = (eval(a, x), eval(b, x));
            Dual {
                v: a.v - b.v,
                d: a.d - b.d,
            }
        }
        Node::Mul(a, b) => {
            let (a, b) = (eval(a, x), eval(b, x));
            Dual {
                v: a.v * b.v,
                d: a.d * b.v + a.v * b.d,
            }
        }
        Node::Div(a, b) => {
            let (a, b) = (eval(a, x), eval(b, x));
            Dual {
                v: a.v / b.v,
                d: (a.d * b.v - a.v * b.d) / (b.v * b.v),
            }
        }
        Node::Pow(a, b) => {
            let (a, b) = (eval(a, x), eval(b, x));
            let v = math::powf(a.v, b.v);
            let d = if b.d == 0.0 {
                // constant exponent; avoids ln(0) for a.v = 0
                if a.d == 0.0 {
                    0.0
                } else {
                    b.v * math::powf(a.v, b.v - 1.0) * a.d
                }
            } else {
                v * (b.d * math::ln(a.v) + b.v * a.d / a.v)
            };
            Dual { v, d }
        }
        Node::Min(a, b) => {
            let (a, b) = (eval(a, x), eval(b, x));
            if b.v < a.v {
                b
            } else {
                a
            }
        }
        Node::Max(a, b) => {
            let (a, b) = (eval(a, x), eval(b, x));
            if b.v > a.v {
                b
            } else {
                a
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Var,
    Pi,
    Min,
    Max,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' | '−' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            'ξ' => {
                out.push(Token::Var);
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // exponent part: 1e-3, 2.5E+4
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value = text
                    .parse::<f64>()
                    .map_err(|_| Error::Usage(format!("invalid number `{text}` in `{src}`")))?;
                out.push(Token::Num(value));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                out.push(match word.as_str() {
                    "xi" | "x" => Token::Var,
                    "pi" => Token::Pi,
                    "min" => Token::Min,
                    "max" => Token::Max,
                    _ => {
                        return Err(Error::Usage(format!(
                            "unknown identifier `{word}` in `{src}`"
                        )))
                    }
                });
            }
            other => {
                return Err(Error::Usage(format!(
                    "unexpected character `{other}` in `{src}`"
                )))
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Token) -> Result<()> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            other => Err(Error::Usage(format!("expected {want:?}, found {other:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Token::Slash) => {
                    self.pos += 1;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if let Some(Token::Minus) = self.peek() {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Token::Caret) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Node::Const(v)),
            Some(Token::Var) => Ok(Node::Var),
            Some(Token::Pi) => Ok(Node::Const(core::f64::consts::PI)),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Some(tok @ (Token::Min | Token::Max)) => {
                self.expect(Token::LParen)?;
                let a = self.expr()?;
                self.expect(Token::Comma)?;
                let b = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(if tok == Token::Min {
                    Node::Min(Box::new(a), Box::new(b))
                } else {
                    Node::Max(Box::new(a), Box::new(b))
                })
            }
            other => Err(Error::Usage(format!(
                "expected a number, variable or `(`, found {other:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("1 + 2*xi^2 - xi/4").unwrap();
        assert_relative_eq!(e.eval(2.0), 1.0 + 8.0 - 0.5);
        // ^ is right associative and binds tighter than unary minus
        assert_relative_eq!(Expr::parse("2^3^2").unwrap().eval(0.0), 512.0);
        assert_relative_eq!(Expr::parse("-xi^2").unwrap().eval(3.0), -9.0);
        assert_relative_eq!(Expr::parse("xi^-1").unwrap().eval(4.0), 0.25);
    }

    #[test]
    fn derivatives_are_exact() {
        let e = Expr::parse("xi^1.5/(1+xi)^0.5").unwrap();
        let x: f64 = 0.7;
        let (v, d) = e.eval_with_derivative(x);
        let expect = 1.5 * x.sqrt() / (1.0 + x).sqrt() - 0.5 * x.powf(1.5) / (1.0 + x).powf(1.5);
        assert_relative_eq!(v, x.powf(1.5) / (1.0 + x).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(d, expect, epsilon = 1e-14);
        assert_eq!(e.eval_with_derivative(0.0), (0.0, 0.0));
    }

    #[test]
    fn min_max_and_variable_spellings() {
        let e = Expr::parse("min(ξ, 1) + max(x, 2) * xi").unwrap();
        assert_relative_eq!(e.eval(0.5), 0.5 + 2.0 * 0.5);
        assert_relative_eq!(e.eval_with_derivative(0.5).1, 1.0 + 2.0);
        assert_relative_eq!(e.eval_with_derivative(3.0).1, 0.0 + 2.0 * 3.0);
    }

    #[test]
    fn variable_exponent() {
        let e = Expr::parse("2^xi").unwrap();
        let (v, d) = e.eval_with_derivative(3.0);
        assert_relative_eq!(v, 8.0);
        assert_relative_eq!(d, 8.0 * core::f64::consts::LN_2, epsilon = 1e-14);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("xi +").is_err());
        assert!(Expr::parse("exp(xi)").is_err());
        assert!(Expr::parse("(xi").is_err());
        assert!(Expr::parse("xi xi").is_err());
        assert!(Expr::parse("1e-3 * xi").is_ok());
    }
}
