//! Recursive-descent parser and evaluator for metric formulas.
//!
//! Grammar (EBNF):
//!
//! ```text
//! formula    = ident "=" expr | expr ;
//! expr       = or ;
//! or         = and { "or" and } ;
//! and        = not { "and" not } ;
//! not        = "not" not | comparison ;
//! comparison = sum [ ( "<" | "<=" | ">" | ">=" | "==" | "!=" | "in" ) sum ] ;
//! sum        = product { ( "+" | "-" ) product } ;
//! product    = unary { ( "*" | "/" ) unary } ;
//! unary      = "-" unary | power ;
//! power      = primary [ "^" unary ] ;
//! primary    = number | string | "true" | "false" | ident
//!            | func "(" expr { "," expr } ")" | "(" expr ")" ;
//! func       = "ceil" | "floor" | "round" | "min" | "max"
//!            | "sqrt" | "log2" | "abs" ;
//! ```
//!
//! `≤`, `≥` and `≠` are accepted as spellings of `<=`, `>=` and `!=`.
//! Strings are single- or double-quoted and have no escapes.

use std::fmt;

use super::value::{is_identifier, Metrics, Value};
use super::ExprError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Ceil,
    Floor,
    Round,
    Min,
    Max,
    Sqrt,
    Log2,
    Abs,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Ceil,
        Func::Floor,
        Func::Round,
        Func::Min,
        Func::Max,
        Func::Sqrt,
        Func::Log2,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Ceil => "ceil",
            Func::Floor => "floor",
            Func::Round => "round",
            Func::Min => "min",
            Func::Max => "max",
            Func::Sqrt => "sqrt",
            Func::Log2 => "log2",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn variadic(self) -> bool {
        matches!(self, Func::Min | Func::Max)
    }
}

const KEYWORDS: [&str; 6] = ["and", "or", "not", "in", "true", "false"];

/// True for names that cannot be used as metrics.
pub fn is_reserved(name: &str) -> bool {
    Func::from_name(name).is_some() || KEYWORDS.contains(&name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    In,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::In => "in",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Str(String),
    Bool(bool),
    Metric(String),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    /// Whether the expression is statically boolean-valued.
    pub fn is_boolean(&self) -> bool {
        match self {
            Expr::Bool(_) | Expr::Not(_) => true,
            Expr::Binary(op, _, _) => matches!(
                op,
                BinOp::Lt
                    | BinOp::Le
                    | BinOp::Gt
                    | BinOp::Ge
                    | BinOp::Eq
                    | BinOp::Ne
                    | BinOp::And
                    | BinOp::Or
                    | BinOp::In
            ),
            _ => false,
        }
    }

    /// Collects every metric name referenced by the expression.
    pub fn metrics(&self, out: &mut Vec<String>) {
        match self {
            Expr::Metric(name) => out.push(name.clone()),
            Expr::Neg(e) | Expr::Not(e) => e.metrics(out),
            Expr::Binary(_, a, b) => {
                a.metrics(out);
                b.metrics(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.metrics(out)),
            Expr::Number(_) | Expr::Str(_) | Expr::Bool(_) => {}
        }
    }
}

/// Fully parenthesised rendering; parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(x) => write!(f, "{x:?}"),
            Expr::Str(s) if s.contains('\'') => write!(f, "\"{s}\""),
            Expr::Str(s) => write!(f, "'{s}'"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Metric(name) => f.write_str(name),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Not(e) => write!(f, "(not {e})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A parsed formula: either a metric definition or a bare expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Define { name: String, value: Expr },
    Expr(Expr),
}

impl Formula {
    pub fn expr(&self) -> &Expr {
        match self {
            Formula::Define { value, .. } => value,
            Formula::Expr(e) => e,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Define { name, value } => write!(f, "{name} = {value}"),
            Formula::Expr(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Str(String),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
    Assign,
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

impl Lexer {
    fn run(src: &str) -> Result<Self, ExprError> {
        let chars: Vec<char> = src.chars().collect();
        let mut toks = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let start = i;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
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
                let x: f64 = text.parse().map_err(|_| ExprError::Syntax {
                    pos: start,
                    msg: format!("malformed number {text:?}"),
                })?;
                if !x.is_finite() {
                    return Err(ExprError::Syntax {
                        pos: start,
                        msg: format!("number out of range {text:?}"),
                    });
                }
                toks.push((Tok::Num(x), start));
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                toks.push((Tok::Ident(word), start));
                continue;
            }
            if c == '\'' || c == '"' {
                let close = chars[i + 1..]
                    .iter()
                    .position(|&d| d == c)
                    .ok_or_else(|| ExprError::Syntax {
                        pos: start,
                        msg: "unterminated string".into(),
                    })?;
                let text: String = chars[i + 1..i + 1 + close].iter().collect();
                i += close + 2;
                toks.push((Tok::Str(text), start));
                continue;
            }
            let next = chars.get(i + 1).copied();
            let (tok, width) = match (c, next) {
                ('<', Some('=')) => (Tok::Op("<="), 2),
                ('>', Some('=')) => (Tok::Op(">="), 2),
                ('=', Some('=')) => (Tok::Op("=="), 2),
                ('!', Some('=')) => (Tok::Op("!="), 2),
                ('<', Some('>')) => (Tok::Op("!="), 2),
                ('≤', _) => (Tok::Op("<="), 1),
                ('≥', _) => (Tok::Op(">="), 1),
                ('≠', _) => (Tok::Op("!="), 1),
                ('<', _) => (Tok::Op("<"), 1),
                ('>', _) => (Tok::Op(">"), 1),
                ('+', _) => (Tok::Op("+"), 1),
                ('-', _) | ('−', _) => (Tok::Op("-"), 1),
                ('*', _) | ('×', _) => (Tok::Op("*"), 1),
                ('/', _) => (Tok::Op("/"), 1),
                ('^', _) => (Tok::Op("^"), 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                (',', _) => (Tok::Comma, 1),
                ('=', _) => (Tok::Assign, 1),
                _ => {
                    return Err(ExprError::Syntax {
                        pos: start,
                        msg: format!("unexpected character {c:?}"),
                    })
                }
            };
            toks.push((tok, start));
            i += width;
        }
        toks.push((Tok::End, chars.len()));
        Ok(Lexer { toks })
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if matches!(self.peek(), Tok::Op(o) if *o == op) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, word: &str) -> bool {
        if matches!(self.peek(), Tok::Ident(w) if w == word) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn formula(&mut self) -> Result<Formula, ExprError> {
        if let (Some((Tok::Ident(name), _)), Some((Tok::Assign, _))) = (self.toks.first(), self.toks.get(1)) {
            let name = name.clone();
            if is_reserved(&name) {
                return Err(ExprError::ReservedName(name));
            }
            if !is_identifier(&name) {
                return Err(ExprError::BadIdentifier(name));
            }
            self.at = 2;
            let value = self.expr()?;
            self.expect_end()?;
            return Ok(Formula::Define { name, value });
        }
        let e = self.expr()?;
        self.expect_end()?;
        Ok(Formula::Expr(e))
    }

    fn expect_end(&self) -> Result<(), ExprError> {
        match self.peek() {
            Tok::End => Ok(()),
            Tok::Assign => self.err("'=' is only allowed after a metric name at the start; use '==' to compare"),
            t => self.err(format!("unexpected token {t:?}")),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.and()?;
        while self.eat_word("or") {
            let rhs = self.and()?;
            lhs = Expr::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.not()?;
        while self.eat_word("and") {
            let rhs = self.not()?;
            lhs = Expr::Binary(BinOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<Expr, ExprError> {
        if self.eat_word("not") {
            return Ok(Expr::Not(Box::new(self.not()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, ExprError> {
        let lhs = self.sum()?;
        let op = match self.peek() {
            Tok::Op("<") => BinOp::Lt,
            Tok::Op("<=") => BinOp::Le,
            Tok::Op(">") => BinOp::Gt,
            Tok::Op(">=") => BinOp::Ge,
            Tok::Op("==") => BinOp::Eq,
            Tok::Op("!=") => BinOp::Ne,
            Tok::Ident(w) if w == "in" => BinOp::In,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.sum()?;
        Ok(Expr::Binary(op, Box::new(lhs), Box::new(rhs)))
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.eat_op("+") {
                BinOp::Add
            } else if self.eat_op("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.product()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_op("*") {
                BinOp::Mul
            } else if self.eat_op("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat_op("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.eat_op("^") {
            let exp = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(x) => Ok(Expr::Number(x)),
            Tok::Str(s) => Ok(Expr::Str(s)),
            Tok::LParen => {
                let e = self.expr()?;
                if self.bump() != Tok::RParen {
                    return Err(ExprError::Syntax {
                        pos,
                        msg: "unbalanced parenthesis".into(),
                    });
                }
                Ok(e)
            }
            Tok::Ident(word) => {
                if word == "true" || word == "false" {
                    return Ok(Expr::Bool(word == "true"));
                }
                if let Some(func) = Func::from_name(&word) {
                    if *self.peek() != Tok::LParen {
                        return Err(ExprError::ReservedName(word));
                    }
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    if self.bump() != Tok::RParen {
                        return Err(ExprError::Syntax {
                            pos,
                            msg: format!("expected ')' to close {word}("),
                        });
                    }
                    if !func.variadic() && args.len() != 1 {
                        return Err(ExprError::Syntax {
                            pos,
                            msg: format!("{word} takes exactly one argument"),
                        });
                    }
                    return Ok(Expr::Call(func, args));
                }
                if KEYWORDS.contains(&word.as_str()) {
                    return Err(ExprError::Syntax {
                        pos,
                        msg: format!("unexpected keyword {word:?}"),
                    });
                }
                if !is_identifier(&word) {
                    return Err(ExprError::BadIdentifier(word));
                }
                Ok(Expr::Metric(word))
            }
            Tok::End => Err(ExprError::Syntax {
                pos,
                msg: "unexpected end of formula".into(),
            }),
            t => Err(ExprError::Syntax {
                pos,
                msg: format!("unexpected token {t:?}"),
            }),
        }
    }
}

pub fn parse_formula(source: &str) -> Result<Formula, ExprError> {
    if source.trim().is_empty() {
        return Err(ExprError::Syntax {
            pos: 0,
            msg: "empty formula".into(),
        });
    }
    let lexer = Lexer::run(source)?;
    let mut parser = Parser {
        toks: lexer.toks,
        at: 0,
    };
    parser.formula()
}

/// Parses a bare expression; a leading `name =` is rejected.
pub fn parse_expr(source: &str) -> Result<Expr, ExprError> {
    match parse_formula(source)? {
        Formula::Expr(e) => Ok(e),
        Formula::Define { .. } => Err(ExprError::Syntax {
            pos: 0,
            msg: "expected an expression, found a metric definition".into(),
        }),
    }
}

fn num(v: Value, what: &str) -> Result<f64, ExprError> {
    match v {
        Value::Number(x) => Ok(x),
        other => Err(ExprError::Type {
            metric: None,
            msg: format!("{what} expects a number, found {}", other.type_name()),
        }),
    }
}

fn boolean(v: Value, what: &str) -> Result<bool, ExprError> {
    match v {
        Value::Bool(b) => Ok(b),
        other => Err(ExprError::Type {
            metric: None,
            msg: format!("{what} expects a boolean, found {}", other.type_name()),
        }),
    }
}

pub fn eval_expr(e: &Expr, m: &Metrics) -> Result<Value, ExprError> {
    match e {
        Expr::Number(x) => Value::number(*x),
        Expr::Str(s) => Ok(Value::Text(s.clone())),
        Expr::Bool(b) => Ok(Value::Bool(*b)),
        Expr::Metric(name) => m
            .get(name)
            .cloned()
            .ok_or_else(|| ExprError::UnknownMetric(name.clone())),
        Expr::Neg(inner) => Value::number(-num(eval_expr(inner, m)?, "unary '-'")?),
        Expr::Not(inner) => Ok(Value::Bool(!boolean(eval_expr(inner, m)?, "'not'")?)),
        Expr::Binary(op, a, b) => eval_binary(*op, a, b, m),
        Expr::Call(func, args) => {
            let xs = args
                .iter()
                .map(|a| num(eval_expr(a, m)?, func.name()))
                .collect::<Result<Vec<f64>, _>>()?;
            let x = xs[0];
            let out = match func {
                Func::Ceil => x.ceil(),
                Func::Floor => x.floor(),
                // f64::round is half-away-from-zero
                Func::Round => x.round(),
                Func::Abs => x.abs(),
                Func::Min => xs.iter().copied().fold(f64::INFINITY, f64::min),
                Func::Max => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                Func::Sqrt if x < 0.0 => {
                    return Err(ExprError::Domain(format!("sqrt of negative value {x}")))
                }
                Func::Sqrt => x.sqrt(),
                Func::Log2 if x <= 0.0 => {
                    return Err(ExprError::Domain(format!("log2 of non-positive value {x}")))
                }
                Func::Log2 => x.log2(),
            };
            Value::number(out)
        }
    }
}

fn eval_binary(op: BinOp, a: &Expr, b: &Expr, m: &Metrics) -> Result<Value, ExprError> {
    match op {
        BinOp::And => {
            if !boolean(eval_expr(a, m)?, "'and'")? {
                return Ok(Value::Bool(false));
            }
            Ok(Value::Bool(boolean(eval_expr(b, m)?, "'and'")?))
        }
        BinOp::Or => {
            if boolean(eval_expr(a, m)?, "'or'")? {
                return Ok(Value::Bool(true));
            }
            Ok(Value::Bool(boolean(eval_expr(b, m)?, "'or'")?))
        }
        BinOp::In => {
            let item = eval_expr(a, m)?;
            let Value::Text(item) = item else {
                return Err(ExprError::Type {
                    metric: None,
                    msg: format!("'in' expects text on the left, found {}", item.type_name()),
                });
            };
            let container = eval_expr(b, m)?;
            container
                .contains_text(&item)
                .map(Value::Bool)
                .ok_or_else(|| ExprError::Type {
                    metric: metric_name(b),
                    msg: format!(
                        "'in' expects text or a text set on the right, found {}",
                        container.type_name()
                    ),
                })
        }
        BinOp::Eq | BinOp::Ne => {
            let (x, y) = (eval_expr(a, m)?, eval_expr(b, m)?);
            let same = match (&x, &y) {
                (Value::Number(p), Value::Number(q)) => p == q,
                (Value::Text(_), Value::Text(_))
                | (Value::Bool(_), Value::Bool(_))
                | (Value::TextSet(_), Value::TextSet(_)) => x == y,
                _ => {
                    return Err(ExprError::Type {
                        metric: None,
                        msg: format!("cannot compare {} with {}", x.type_name(), y.type_name()),
                    })
                }
            };
            Ok(Value::Bool(if op == BinOp::Eq { same } else { !same }))
        }
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let x = num(eval_expr(a, m)?, op.symbol())?;
            let y = num(eval_expr(b, m)?, op.symbol())?;
            Ok(Value::Bool(match op {
                BinOp::Lt => x < y,
                BinOp::Le => x <= y,
                BinOp::Gt => x > y,
                _ => x >= y,
            }))
        }
        BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Pow => {
            let x = num(eval_expr(a, m)?, op.symbol())?;
            let y = num(eval_expr(b, m)?, op.symbol())?;
            let out = match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div if y == 0.0 => return Err(ExprError::DivisionByZero),
                BinOp::Div => x / y,
                _ => x.powf(y),
            };
            Value::number(out)
        }
    }
}

fn metric_name(e: &Expr) -> Option<String> {
    match e {
        Expr::Metric(name) => Some(name.clone()),
        _ => None,
    }
}

pub fn eval_formula(f: &Formula, m: &Metrics) -> Result<Value, ExprError> {
    eval_expr(f.expr(), m)
}
