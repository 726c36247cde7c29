//! Plain-text vector fields: one arithmetic expression per component.
//!
//! ```text
//! # comments start with '#'
//! x1' = -x1 + x2 * lambda
//! x2' = sin(x1) - x2^3
//! ```
//!
//! The `xk' =` prefix is optional; bare expressions are taken in order.
//! Variables are `x1..xn` and `lambda`, operators `+ - * / ^` (`^` binds
//! tightest and is right-associative), functions `sin cos exp sqrt`, and the
//! constant `pi`.

use std::path::Path;

use super::flow::ParametrizedFlow;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Lambda,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    PowI(Box<Node>, i32),
    Func(Func, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

impl Node {
    fn eval(&self, x: &[f64], lambda: f64) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Var(i) => x[*i],
            Node::Lambda => lambda,
            Node::Neg(a) => -a.eval(x, lambda),
            Node::Add(a, b) => a.eval(x, lambda) + b.eval(x, lambda),
            Node::Sub(a, b) => a.eval(x, lambda) - b.eval(x, lambda),
            Node::Mul(a, b) => a.eval(x, lambda) * b.eval(x, lambda),
            Node::Div(a, b) => a.eval(x, lambda) / b.eval(x, lambda),
            Node::Pow(a, b) => a.eval(x, lambda).powf(b.eval(x, lambda)),
            Node::PowI(a, k) => a.eval(x, lambda).powi(*k),
            Node::Func(f, a) => {
                let v = a.eval(x, lambda);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Sqrt => v.sqrt(),
                }
            }
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Var(i) => Some(*i),
            Node::Const(_) | Node::Lambda => None,
            Node::Neg(a) | Node::PowI(a, _) | Node::Func(_, a) => a.max_var(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                a.max_var().max(b.max_var())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(src: &str, line: usize) -> Result<Vec<Tok>> {
    let err = |message: String| Error::Parse { line, message };
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' => i += 1,
            '+' | '-' | '*' | '/' | '^' => {
                out.push(Tok::Op(c));
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| err(format!("bad number '{text}'")))?;
                out.push(Tok::Num(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Tok::Ident(src[start..i].to_string()));
            }
            other => return Err(err(format!("unexpected character '{other}'"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    line: usize,
}

impl Parser {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse { line: self.line, message: message.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { Node::Add(lhs.into(), rhs.into()) } else { Node::Sub(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { Node::Mul(lhs.into(), rhs.into()) } else { Node::Div(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Node::Neg(self.unary()?.into()))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            if let Node::Const(c) = exp {
                if c.fract() == 0.0 && c.abs() <= 64.0 {
                    return Ok(Node::PowI(base.into(), c as i32));
                }
            }
            return Ok(Node::Pow(base.into(), exp.into()));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Node::Const(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(e),
                    _ => Err(self.err("missing ')'")),
                }
            }
            Some(Tok::Ident(name)) => {
                let func = match name.as_str() {
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    "exp" => Some(Func::Exp),
                    "sqrt" => Some(Func::Sqrt),
                    _ => None,
                };
                if let Some(f) = func {
                    if self.next() != Some(Tok::LParen) {
                        return Err(self.err(format!("expected '(' after {name}")));
                    }
                    let arg = self.expr()?;
                    if self.next() != Some(Tok::RParen) {
                        return Err(self.err(format!("missing ')' after {name}(...")));
                    }
                    return Ok(Node::Func(f, arg.into()));
                }
                match name.as_str() {
                    "lambda" => Ok(Node::Lambda),
                    "pi" => Ok(Node::Const(std::f64::consts::PI)),
                    v if v.starts_with('x') => match v[1..].parse::<usize>() {
                        Ok(k) if k >= 1 => Ok(Node::Var(k - 1)),
                        _ => Err(self.err(format!("unknown variable '{v}'"))),
                    },
                    other => Err(self.err(format!("unknown identifier '{other}'"))),
                }
            }
            Some(t) => Err(self.err(format!("unexpected token {t:?}"))),
            None => Err(self.err("unexpected end of expression")),
        }
    }
}

fn parse_expression(src: &str, line: usize) -> Result<Node> {
    let toks = tokenize(src, line)?;
    if toks.is_empty() {
        return Err(Error::Parse { line, message: "empty expression".into() });
    }
    let mut p = Parser { toks, pos: 0, line };
    let node = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input after expression"));
    }
    Ok(node)
}

/// Parses the component list and returns a flow with parameter range [0, 1].
pub fn parse_vector_field(name: &str, text: &str) -> Result<ParametrizedFlow> {
    let mut comps: Vec<(usize, Node)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let expr = match body.split_once('=') {
            Some((lhs, rhs)) => {
                let lhs = lhs.trim();
                let want = format!("x{}'", comps.len() + 1);
                if lhs != want {
                    return Err(Error::Parse {
                        line,
                        message: format!("expected '{want} =' but found '{lhs} ='"),
                    });
                }
                rhs
            }
            None => body,
        };
        comps.push((line, parse_expression(expr, line)?));
    }
    if comps.is_empty() {
        return Err(Error::Parse { line: 0, message: "no component expressions found".into() });
    }
    let dim = comps.len();
    for (line, node) in &comps {
        if let Some(v) = node.max_var() {
            if v >= dim {
                return Err(Error::Parse {
                    line: *line,
                    message: format!("variable x{} exceeds dimension {dim}", v + 1),
                });
            }
        }
    }
    let nodes: Vec<Node> = comps.into_iter().map(|(_, n)| n).collect();
    ParametrizedFlow::new(name, dim, (0.0, 1.0), move |x, lambda, out| {
        for (o, n) in out.iter_mut().zip(&nodes) {
            *o = n.eval(x, lambda);
        }
    })
}

pub fn load_vector_field(path: &Path) -> Result<ParametrizedFlow> {
    let text = std::fs::read_to_string(path)?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("custom");
    parse_vector_field(name, &text)
}
