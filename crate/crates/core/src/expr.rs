//! Minimal arithmetic expression language for levelset domains.
//!
//! Grammar (`^` binds tightest and is right associative, unary minus binds
//! looser than `^` so `-x^2 == -(x^2)`):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'x' | 'y' | 'z' | func '(' expr (',' expr)* ')' | '(' expr ')'
//! func    := 'min' | 'max' | 'sqrt'
//! ```

use crate::error::{Error, Result};
use crate::scalar::Real;

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
    Min(Vec<Node>),
    Max(Vec<Node>),
    Sqrt(Box<Node>),
}

/// A parsed expression in the variables `x`, `y`, `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
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
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Expression(format!("bad number '{text}'")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Expression(format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: char) -> Result<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(Error::Expression(format!("expected '{op}'")))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_op('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat_op('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_op('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat_op('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat_op('-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else if self.eat_op('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat_op('^') {
            Ok(Node::Pow(Box::new(base), Box::new(self.unary()?)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Node> {
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_op(')')?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "x" => Ok(Node::Var(0)),
                    "y" => Ok(Node::Var(1)),
                    "z" => Ok(Node::Var(2)),
                    "min" | "max" | "sqrt" => {
                        self.expect_op('(')?;
                        let mut args = vec![self.expr()?];
                        while self.eat_op(',') {
                            args.push(self.expr()?);
                        }
                        self.expect_op(')')?;
                        match name.as_str() {
                            "sqrt" => {
                                if args.len() != 1 {
                                    return Err(Error::Expression(
                                        "sqrt takes one argument".into(),
                                    ));
                                }
                                Ok(Node::Sqrt(Box::new(args.remove(0))))
                            }
                            "min" => Ok(Node::Min(args)),
                            _ => Ok(Node::Max(args)),
                        }
                    }
                    other => Err(Error::Expression(format!("unknown identifier '{other}'"))),
                }
            }
            Some(Tok::Op(c)) => Err(Error::Expression(format!("unexpected '{c}'"))),
            None => Err(Error::Expression("unexpected end of input".into())),
        }
    }
}

fn eval<T: Real>(node: &Node, p: &[T; 3]) -> T {
    match node {
        Node::Num(v) => T::lit(*v),
        Node::Var(i) => p[*i],
        Node::Neg(a) => -eval(a, p),
        Node::Add(a, b) => eval(a, p) + eval(b, p),
        Node::Sub(a, b) => eval(a, p) - eval(b, p),
        Node::Mul(a, b) => eval(a, p) * eval(b, p),
        Node::Div(a, b) => eval(a, p) / eval(b, p),
        Node::Pow(a, b) => {
            let base = eval(a, p);
            // integer exponents keep negative bases well defined
            if let Node::Num(e) = **b {
                if e.fract() == 0.0 && e.abs() <= 64.0 {
                    return base.powi(e as i32);
                }
            }
            base.powf(eval(b, p))
        }
        Node::Min(args) => args
            .iter()
            .map(|a| eval(a, p))
            .fold(T::infinity(), |m, v| m.min(v)),
        Node::Max(args) => args
            .iter()
            .map(|a| eval(a, p))
            .fold(T::neg_infinity(), |m, v| m.max(v)),
        Node::Sqrt(a) => eval(a, p).sqrt(),
    }
}

fn max_var(node: &Node) -> Option<usize> {
    match node {
        Node::Num(_) => None,
        Node::Var(i) => Some(*i),
        Node::Neg(a) | Node::Sqrt(a) => max_var(a),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            max_var(a).max(max_var(b))
        }
        Node::Min(args) | Node::Max(args) => args.iter().filter_map(max_var).max(),
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let toks = tokenize(src)?;
        if toks.is_empty() {
            return Err(Error::Expression("empty expression".into()));
        }
        let mut parser = Parser { toks, pos: 0 };
        let root = parser.expr()?;
        if parser.pos != parser.toks.len() {
            return Err(Error::Expression(format!(
                "trailing input at token {}",
                parser.pos
            )));
        }
        Ok(Self {
            root,
            source: src.to_string(),
        })
    }

    pub fn eval<T: Real>(&self, p: &[T; 3]) -> T {
        eval(&self.root, p)
    }

    /// Highest coordinate referenced (`0` for x, `1` for y, `2` for z).
    pub fn max_variable(&self) -> Option<usize> {
        max_var(&self.root)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}
