//! Coefficient expression language.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | ident | func '(' expr (',' expr)? ')' | '(' expr ')'
//! func   := sin | cos | exp | log | abs | min2 | max2
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)`. `pi` is the only named constant; every other identifier
//! must be one of the variables the caller declared.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Abs,
    Min2,
    Max2,
}

impl Func {
    fn lookup(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "min2" => Func::Min2,
            "max2" => Func::Max2,
            _ => return None,
        })
    }

    fn arity(self) -> usize {
        match self {
            Func::Min2 | Func::Max2 => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>, Option<Box<Node>>),
}

/// A parsed expression over a fixed list of variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
    vars: Vec<String>,
}

impl Expr {
    /// Parses `text`, accepting `vars` as variable names.
    pub fn parse(text: &str, vars: &[&str]) -> Result<Self> {
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
            vars,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.syntax(format!("unexpected `{}`", p.src[p.pos] as char)));
        }
        Ok(Self {
            root,
            source: text.to_string(),
            vars: vars.iter().map(|v| v.to_string()).collect(),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// Evaluates with `values[i]` bound to the i-th declared variable.
    pub fn eval(&self, values: &[f64]) -> f64 {
        eval(&self.root, values)
    }

    /// True when the expression mentions variable `i`.
    pub fn uses_var(&self, i: usize) -> bool {
        uses(&self.root, i)
    }
}

fn eval(node: &Node, vals: &[f64]) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::Var(i) => vals[*i],
        Node::Neg(a) => -eval(a, vals),
        Node::Add(a, b) => eval(a, vals) + eval(b, vals),
        Node::Sub(a, b) => eval(a, vals) - eval(b, vals),
        Node::Mul(a, b) => eval(a, vals) * eval(b, vals),
        Node::Div(a, b) => eval(a, vals) / eval(b, vals),
        Node::Pow(a, b) => math::powf(eval(a, vals), eval(b, vals)),
        Node::Call(f, a, b) => {
            let x = eval(a, vals);
            match f {
                Func::Sin => math::sin(x),
                Func::Cos => math::cos(x),
                Func::Exp => math::exp(x),
                Func::Log => math::ln(x),
                Func::Abs => x.abs(),
                Func::Min2 => x.min(eval(b.as_ref().expect("arity checked"), vals)),
                Func::Max2 => x.max(eval(b.as_ref().expect("arity checked"), vals)),
            }
        }
    }
}

fn uses(node: &Node, i: usize) -> bool {
    match node {
        Node::Num(_) => false,
        Node::Var(j) => *j == i,
        Node::Neg(a) => uses(a, i),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            uses(a, i) || uses(b, i)
        }
        Node::Call(_, a, b) => uses(a, i) || b.as_ref().is_some_and(|b| uses(b, i)),
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn syntax(&self, msg: String) -> Error {
        Error::Syntax { pos: self.pos, msg }
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
            Err(self.syntax(format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(b'-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat(b'^') {
            Ok(Node::Pow(Box::new(base), Box::new(self.unary()?)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.syntax(String::from("unexpected end of input"))),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => Err(self.syntax(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.src.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                digits(self);
            } else {
                self.pos = mark;
            }
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        text.parse::<f64>()
            .map(Node::Num)
            .map_err(|_| Error::Syntax {
                pos: start,
                msg: format!("malformed number `{text}`"),
            })
    }

    fn ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = core::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        if let Some(f) = Func::lookup(name) {
            self.expect(b'(')?;
            let a = self.expr()?;
            let b = if f.arity() == 2 {
                self.expect(b',')?;
                Some(Box::new(self.expr()?))
            } else {
                None
            };
            self.expect(b')')?;
            return Ok(Node::Call(f, Box::new(a), b));
        }
        if name == "pi" {
            return Ok(Node::Num(core::f64::consts::PI));
        }
        match self.vars.iter().position(|v| *v == name) {
            Some(i) => Ok(Node::Var(i)),
            None => Err(Error::UnknownIdentifier {
                name: name.to_string(),
                pos: start,
            }),
        }
    }
}
