//! A small expression language for conformal factors and coordinate functions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers are the chart variables `x`, `y`, `z`, the constants `pi` and
//! `e`, and named parameters. Parsed trees print back to a canonical form that
//! reparses to the same tree.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::jets::{Jet, Scalar};

/// Parameter names accepted by [`parse_sigma`].
pub const DEFAULT_PARAMS: &[&str] = &["a", "b", "c", "k", "r"];
pub const VARIABLES: &[&str] = &["x", "y", "z"];
const CONSTANTS: &[&str] = &["pi", "e"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Tanh,
    Sech,
    Csch,
    Sec,
    Csc,
}

impl Func {
    pub const ALL: [Func; 12] = [
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sin,
        Func::Cos,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Sech,
        Func::Csch,
        Func::Sec,
        Func::Csc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Sech => "sech",
            Func::Csch => "csch",
            Func::Sec => "sec",
            Func::Csc => "csc",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "ln" => Some(Func::Log),
            "cosech" => Some(Func::Csch),
            "cosec" => Some(Func::Csc),
            _ => Func::ALL.into_iter().find(|f| f.name() == name),
        }
    }

    fn apply<T: Scalar>(self, a: &T) -> Result<T> {
        Ok(match self {
            Func::Exp => a.exp(),
            Func::Log => a.ln()?,
            Func::Sqrt => a.sqrt()?,
            Func::Sin => a.sin(),
            Func::Cos => a.cos(),
            Func::Sinh => a.sinh(),
            Func::Cosh => a.cosh(),
            Func::Tanh => a.tanh(),
            Func::Sech => a.sech(),
            Func::Csch => a.csch()?,
            Func::Sec => a.sec()?,
            Func::Csc => a.csc()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => " * ",
            BinOp::Div => " / ",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Ident(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn ident(name: &str) -> Expr {
        Expr::Ident(name.to_string())
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Bin(op, Box::new(l), Box::new(r))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    /// Identifiers referenced by the tree, in first-occurrence order.
    pub fn identifiers(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk_idents(&mut out);
        out
    }

    fn walk_idents(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Ident(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            Expr::Neg(a) | Expr::Call(_, a) => a.walk_idents(out),
            Expr::Bin(_, l, r) => {
                l.walk_idents(out);
                r.walk_idents(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            Expr::Num(_) | Expr::Ident(_) | Expr::Call(..) => 5,
        }
    }

    /// Resolves identifiers: `variables[i]` becomes input slot `i`, constants
    /// and parameters become numbers.
    pub fn bind(&self, variables: &[&str], params: &BTreeMap<String, f64>) -> Result<BoundExpr> {
        let node = self.bind_node(variables, params)?;
        Ok(BoundExpr {
            node,
            arity: variables.len(),
        })
    }

    fn bind_node(&self, variables: &[&str], params: &BTreeMap<String, f64>) -> Result<Node> {
        Ok(match self {
            Expr::Num(v) => Node::Const(*v),
            Expr::Ident(name) => {
                if let Some(i) = variables.iter().position(|v| v == name) {
                    Node::Var(i)
                } else if let Some(v) = params.get(name) {
                    Node::Const(*v)
                } else if name == "pi" {
                    Node::Const(std::f64::consts::PI)
                } else if name == "e" {
                    Node::Const(std::f64::consts::E)
                } else {
                    return Err(Error::BadParameter(format!(
                        "identifier `{name}` is neither a chart variable ({}) nor a supplied parameter",
                        variables.join(", ")
                    )));
                }
            }
            Expr::Neg(a) => Node::Neg(Box::new(a.bind_node(variables, params)?)),
            Expr::Bin(op, l, r) => Node::Bin(
                *op,
                Box::new(l.bind_node(variables, params)?),
                Box::new(r.bind_node(variables, params)?),
            ),
            Expr::Call(f, a) => Node::Call(*f, Box::new(a.bind_node(variables, params)?)),
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrap(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Num(v) => {
                if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                    write!(f, "({v})")
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Ident(n) => write!(f, "{n}"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, a.precedence() < 3)
            }
            Expr::Bin(op, l, r) => {
                let (lp, rp) = match op {
                    BinOp::Add | BinOp::Sub => (l.precedence() < 1, r.precedence() <= 1),
                    BinOp::Mul | BinOp::Div => (l.precedence() < 2, r.precedence() <= 2),
                    // right associative; the base must be atomic
                    BinOp::Pow => (l.precedence() <= 4, r.precedence() < 3),
                };
                wrap(f, l, lp)?;
                write!(f, "{}", op.symbol())?;
                wrap(f, r, rp)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// An expression with identifiers resolved to input slots or constants.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundExpr {
    node: Node,
    arity: usize,
}

impl BoundExpr {
    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Evaluates on jets; `inputs[i]` is the jet of variable slot `i`.
    pub fn eval<T: Scalar>(&self, inputs: &[T]) -> Result<T> {
        assert_eq!(inputs.len(), self.arity, "wrong number of expression inputs");
        let out = eval_node(&self.node, inputs)?;
        if !out.is_finite() {
            return Err(Error::Domain {
                func: "expression",
                arg: out.value(),
            });
        }
        Ok(out)
    }

    pub fn eval_f64(&self, inputs: &[f64]) -> Result<f64> {
        let jets: Vec<Jet<0>> = inputs.iter().map(|&v| Jet::constant(v)).collect();
        Ok(self.eval(&jets)?.value)
    }

    /// True when the expression does not depend on any input.
    pub fn is_constant(&self) -> bool {
        fn walk(n: &Node) -> bool {
            match n {
                Node::Const(_) => true,
                Node::Var(_) => false,
                Node::Neg(a) | Node::Call(_, a) => walk(a),
                Node::Bin(_, l, r) => walk(l) && walk(r),
            }
        }
        walk(&self.node)
    }
}

fn eval_node<T: Scalar>(node: &Node, inputs: &[T]) -> Result<T> {
    match node {
        Node::Const(v) => Ok(T::constant(*v)),
        Node::Var(i) => Ok(inputs[*i]),
        Node::Neg(a) => Ok(-eval_node(a, inputs)?),
        Node::Call(f, a) => f.apply(&eval_node(a, inputs)?),
        Node::Bin(op, l, r) => {
            let a = eval_node(l, inputs)?;
            match op {
                BinOp::Pow => {
                    if let Some(c) = const_value(r) {
                        a.powf(c)
                    } else {
                        let b = eval_node(r, inputs)?;
                        Ok((b * a.ln()?).exp())
                    }
                }
                _ => {
                    let b = eval_node(r, inputs)?;
                    match op {
                        BinOp::Add => Ok(a + b),
                        BinOp::Sub => Ok(a - b),
                        BinOp::Mul => Ok(a * b),
                        BinOp::Div => a.checked_div(&b),
                        BinOp::Pow => unreachable!(),
                    }
                }
            }
        }
    }
}

fn const_value(node: &Node) -> Option<f64> {
    match node {
        Node::Const(v) => Some(*v),
        Node::Neg(a) => const_value(a).map(|v| -v),
        Node::Bin(op, l, r) => {
            let (a, b) = (const_value(l)?, const_value(r)?);
            Some(match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => a.powf(b),
            })
        }
        _ => None,
    }
}

/// Parses `source`, accepting chart variables, `pi`, `e` and the identifiers
/// in `params`.
pub fn parse_with(source: &str, params: &[&str]) -> Result<Expr> {
    let mut p = Parser {
        src: source.as_bytes(),
        pos: 0,
        open_parens: Vec::new(),
    };
    let expr = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        let c = p.src[p.pos] as char;
        return Err(p.error(
            p.pos,
            &["operator", "end of input"],
            format!("unexpected `{c}`"),
        ));
    }
    check_identifiers(&expr, source, params)?;
    Ok(expr)
}

/// Parses with the default parameter set [`DEFAULT_PARAMS`].
pub fn parse(source: &str) -> Result<Expr> {
    parse_with(source, DEFAULT_PARAMS)
}

fn check_identifiers(expr: &Expr, source: &str, params: &[&str]) -> Result<()> {
    for name in expr.identifiers() {
        let known = VARIABLES.contains(&name.as_str())
            || CONSTANTS.contains(&name.as_str())
            || params.contains(&name.as_str());
        if !known {
            let offset = find_word(source, &name).unwrap_or(0);
            return Err(Error::UnknownIdentifier { name, offset });
        }
    }
    Ok(())
}

fn find_word(source: &str, word: &str) -> Option<usize> {
    let bytes = source.as_bytes();
    let is_ident = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
    source.match_indices(word).map(|(i, _)| i).find(|&i| {
        let before = i == 0 || !is_ident(bytes[i - 1]);
        let after = i + word.len() >= bytes.len() || !is_ident(bytes[i + word.len()]);
        before && after
    })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    open_parens: Vec<usize>,
}

impl Parser<'_> {
    fn error(&self, offset: usize, expected: &[&str], message: String) -> Error {
        // Running out of input inside a group is reported at the unmatched '('.
        if offset >= self.src.len() {
            if let Some(&open) = self.open_parens.last() {
                return Error::Parse {
                    offset: open,
                    expected: expected.iter().map(|s| s.to_string()).collect(),
                    message: format!("unclosed `(`: {message}"),
                };
            }
        }
        Error::Parse {
            offset,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            message,
        }
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

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            Ok(Expr::bin(BinOp::Pow, base, exp))
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        const EXPECTED: &[&str] = &["number", "identifier", "`(`", "`-`"];
        match self.peek() {
            None => Err(self.error(self.pos, EXPECTED, "unexpected end of input".into())),
            Some(b'(') => {
                self.open_parens.push(self.pos);
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    let found = self.peek().map(|c| format!("`{}`", c as char));
                    return Err(self.error(
                        self.pos,
                        &["`)`", "operator"],
                        format!("expected `)`, found {}", found.unwrap_or("end of input".into())),
                    ));
                }
                self.open_parens.pop();
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                if self.peek() == Some(b'(') {
                    let Some(func) = Func::from_name(name) else {
                        return Err(Error::UnknownIdentifier {
                            name: name.to_string(),
                            offset: start,
                        });
                    };
                    self.open_parens.push(self.pos);
                    self.pos += 1;
                    let arg = self.expr()?;
                    if !self.eat(b')') {
                        return Err(self.error(self.pos, &["`)`", "operator"], "expected `)`".into()));
                    }
                    self.open_parens.pop();
                    Ok(Expr::call(func, arg))
                } else if Func::from_name(name).is_some() {
                    Err(self.error(self.pos, &["`(`"], format!("function `{name}` needs an argument")))
                } else {
                    Ok(Expr::Ident(name.to_string()))
                }
            }
            Some(c) => Err(self.error(self.pos, EXPECTED, format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            digits(self);
        }
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            // only an exponent if followed by digits, otherwise `e` is the constant
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-') {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if self.pos == exp_start {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| self.error(start, &["number"], format!("malformed number `{text}`")))
    }
}
