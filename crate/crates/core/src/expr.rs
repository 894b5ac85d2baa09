//! Scalar expressions for metric components.
//!
//! Grammar (version 1):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          right associative
//! atom    := number | 'pi' | coord | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | tan | exp | log | sqrt | sinh | cosh
//! ```
//!
//! Unary minus binds looser than `^`, so `-x^2` is `-(x^2)`. An exponent
//! that folds to an integer constant is evaluated by repeated
//! multiplication, so negative bases are fine there; any other power
//! requires a positive base. `log` is the natural logarithm.

use crate::error::{Error, Result};
use crate::jet::Jet;

pub const GRAMMAR_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Powi(Box<Node>, i32),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// Numbers the evaluator can work with: plain reals and jets.
pub trait Scalar: Clone {
    fn lift(&self, c: f64) -> Self;
    fn value(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn powi(&self, p: i32) -> Self;
    fn powf(&self, p: f64) -> Self;
    fn call(&self, f: Func) -> Self;
}

impl Scalar for f64 {
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn powi(&self, p: i32) -> Self {
        f64::powi(*self, p)
    }
    fn powf(&self, p: f64) -> Self {
        f64::powf(*self, p)
    }
    fn call(&self, f: Func) -> Self {
        match f {
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Tan => self.tan(),
            Func::Exp => self.exp(),
            Func::Log => self.ln(),
            Func::Sqrt => self.sqrt(),
            Func::Sinh => self.sinh(),
            Func::Cosh => self.cosh(),
        }
    }
}

impl Scalar for Jet {
    fn lift(&self, c: f64) -> Self {
        Jet::constant(self.space(), c)
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self * &o.recip()
    }
    fn neg(&self) -> Self {
        self * -1.0
    }
    fn powi(&self, p: i32) -> Self {
        Jet::powi(self, p)
    }
    fn powf(&self, p: f64) -> Self {
        Jet::powf(self, p)
    }
    fn call(&self, f: Func) -> Self {
        match f {
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Tan => self.tan(),
            Func::Exp => self.exp(),
            Func::Log => self.ln(),
            Func::Sqrt => self.sqrt(),
            Func::Sinh => self.sinh(),
            Func::Cosh => self.cosh(),
        }
    }
}

/// A parsed expression in a fixed list of coordinate names.
#[derive(Clone, Debug)]
pub struct Expr {
    source: String,
    root: Node,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl Expr {
    pub fn parse(source: &str, coords: &[String]) -> Result<Expr> {
        let mut p = Parser {
            chars: source.chars().collect(),
            pos: 0,
            coords,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.error(format!("unexpected '{}'", p.chars[p.pos])));
        }
        Ok(Expr {
            source: source.to_string(),
            root: fold(root),
        })
    }

    pub fn constant(c: f64) -> Expr {
        Expr {
            source: format!("{c}"),
            root: Node::Const(c),
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// The value if the expression does not depend on any coordinate.
    pub fn as_constant(&self) -> Option<f64> {
        match self.root {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    /// Evaluate at the given coordinate values; `x` must be non-empty.
    pub fn eval<S: Scalar>(&self, x: &[S]) -> Result<S> {
        eval(&self.root, x)
    }

    pub fn eval_f64(&self, x: &[f64]) -> Result<f64> {
        self.eval(x)
    }
}

fn fold(n: Node) -> Node {
    use Node::*;
    let bin = |a: Node, b: Node, f: fn(f64, f64) -> f64, mk: fn(Box<Node>, Box<Node>) -> Node| {
        match (fold(a), fold(b)) {
            (Const(x), Const(y)) => Const(f(x, y)),
            (x, y) => mk(Box::new(x), Box::new(y)),
        }
    };
    match n {
        Neg(a) => match fold(*a) {
            Const(x) => Const(-x),
            x => Neg(Box::new(x)),
        },
        Add(a, b) => bin(*a, *b, |x, y| x + y, Add),
        Sub(a, b) => bin(*a, *b, |x, y| x - y, Sub),
        Mul(a, b) => bin(*a, *b, |x, y| x * y, Mul),
        Div(a, b) => bin(*a, *b, |x, y| x / y, Div),
        Pow(a, b) => {
            let (a, b) = (fold(*a), fold(*b));
            match (a, b) {
                (Const(x), Const(y)) => Const(x.powf(y)),
                (a, Const(y)) if y.fract() == 0.0 && y.abs() <= 64.0 => Powi(Box::new(a), y as i32),
                (a, b) => Pow(Box::new(a), Box::new(b)),
            }
        }
        Call(f, a) => match fold(*a) {
            Const(x) if f != Func::Log && f != Func::Sqrt => Const(x.call(f)),
            Const(x) if x > 0.0 => Const(x.call(f)),
            x => Call(f, Box::new(x)),
        },
        other => other,
    }
}

fn eval<S: Scalar>(n: &Node, x: &[S]) -> Result<S> {
    Ok(match n {
        Node::Const(c) => x[0].lift(*c),
        Node::Var(i) => x[*i].clone(),
        Node::Neg(a) => eval(a, x)?.neg(),
        Node::Add(a, b) => eval(a, x)?.add(&eval(b, x)?),
        Node::Sub(a, b) => eval(a, x)?.sub(&eval(b, x)?),
        Node::Mul(a, b) => eval(a, x)?.mul(&eval(b, x)?),
        Node::Div(a, b) => {
            let d = eval(b, x)?;
            if d.value() == 0.0 {
                return Err(Error::Domain("division by zero".into()));
            }
            eval(a, x)?.div(&d)
        }
        Node::Powi(a, p) => {
            let b = eval(a, x)?;
            if *p < 0 && b.value() == 0.0 {
                return Err(Error::Domain("zero raised to a negative power".into()));
            }
            b.powi(*p)
        }
        Node::Pow(a, b) => {
            let base = eval(a, x)?;
            if base.value() <= 0.0 {
                return Err(Error::Domain(format!(
                    "non-integer power of non-positive value {}",
                    base.value()
                )));
            }
            match b.as_ref() {
                Node::Const(p) => base.powf(*p),
                _ => eval(b, x)?.mul(&base.call(Func::Log)).call(Func::Exp),
            }
        }
        Node::Call(f, a) => {
            let v = eval(a, x)?;
            match f {
                Func::Log if v.value() <= 0.0 => {
                    return Err(Error::Domain(format!("log of non-positive value {}", v.value())))
                }
                Func::Sqrt if v.value() <= 0.0 => {
                    return Err(Error::Domain(format!("sqrt of non-positive value {}", v.value())))
                }
                Func::Tan if v.value().cos() == 0.0 => {
                    return Err(Error::Domain("tan at a pole".into()))
                }
                _ => {}
            }
            v.call(*f)
        }
    })
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    coords: &'a [String],
}

impl Parser<'_> {
    fn error(&self, message: String) -> Error {
        Error::Parse {
            column: self.pos + 1,
            message,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                '+' => {
                    self.pos += 1;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                '-' => {
                    self.pos += 1;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                '*' => {
                    self.pos += 1;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                '/' => {
                    self.pos += 1;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression".into())),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected ')'".into()));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_alphabetic() || c == '_' => {
                let start = self.pos;
                while self.pos < self.chars.len()
                    && (self.chars[self.pos].is_alphanumeric() || self.chars[self.pos] == '_')
                {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                if let Some(i) = self.coords.iter().position(|c| *c == name) {
                    return Ok(Node::Var(i));
                }
                if name == "pi" {
                    return Ok(Node::Const(std::f64::consts::PI));
                }
                if let Some(f) = Func::from_name(&name) {
                    if self.peek() != Some('(') {
                        return Err(self.error(format!("expected '(' after {name}")));
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    if self.peek() != Some(')') {
                        return Err(self.error("expected ')'".into()));
                    }
                    self.pos += 1;
                    return Ok(Node::Call(f, Box::new(arg)));
                }
                self.pos = start;
                Err(self.error(format!("unknown identifier '{name}'")))
            }
            Some(c) => Err(self.error(format!("unexpected '{c}'"))),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let n = self.chars.len();
        while self.pos < n && (self.chars[self.pos].is_ascii_digit() || self.chars[self.pos] == '.') {
            self.pos += 1;
        }
        if self.pos < n && (self.chars[self.pos] == 'e' || self.chars[self.pos] == 'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < n && (self.chars[self.pos] == '+' || self.chars[self.pos] == '-') {
                self.pos += 1;
            }
            if self.pos < n && self.chars[self.pos].is_ascii_digit() {
                while self.pos < n && self.chars[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>().map(Node::Const).map_err(|_| Error::Parse {
            column: start + 1,
            message: format!("malformed number '{text}'"),
        })
    }
}
