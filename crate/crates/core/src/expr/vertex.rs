//! Vertex expressions: the small mutation language attached to
//! configuration-graph vertices.
//!
//! Surface syntax is a sigil followed by an operand:
//!
//! | surface   | effect                                     |
//! |-----------|--------------------------------------------|
//! | `+2850`   | add to the metric (missing counts as 0)    |
//! | `-10`     | subtract (missing counts as 0)             |
//! | `*2`      | multiply (missing counts as 0)             |
//! | `=448`    | assign a number                            |
//! | `&text`   | insert `text` into a text set              |
//! | `text`    | assign text                                |

use std::collections::BTreeSet;
use std::fmt;

use super::value::{is_identifier, Metrics, Value};
use super::ExprError;

#[derive(Debug, Clone, PartialEq)]
pub enum VertexOp {
    Add(f64),
    Sub(f64),
    Mul(f64),
    AssignNumber(f64),
    AssignText(String),
    AppendText(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexExpr {
    pub metric: String,
    pub op: VertexOp,
}

impl fmt::Display for VertexExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.op {
            VertexOp::Add(x) => write!(f, "{}=\"+{x}\"", self.metric),
            VertexOp::Sub(x) => write!(f, "{}=\"-{x}\"", self.metric),
            VertexOp::Mul(x) => write!(f, "{}=\"*{x}\"", self.metric),
            VertexOp::AssignNumber(x) => write!(f, "{}=\"={x}\"", self.metric),
            VertexOp::AssignText(s) => write!(f, "{}=\"{s}\"", self.metric),
            VertexOp::AppendText(s) => write!(f, "{}=\"&{s}\"", self.metric),
        }
    }
}

pub fn parse_vertex_expr(metric: &str, surface: &str) -> Result<VertexExpr, ExprError> {
    if !is_identifier(metric) {
        return Err(ExprError::BadIdentifier(metric.to_string()));
    }
    if surface.is_empty() {
        return Err(ExprError::Syntax {
            pos: 0,
            msg: "empty vertex expression".into(),
        });
    }
    let mut chars = surface.chars();
    let sigil = chars.next().unwrap();
    let rest = chars.as_str();
    let op = match sigil {
        '+' | '-' | '*' | '=' => {
            let x = parse_operand(rest)?;
            match sigil {
                '+' => VertexOp::Add(x),
                '-' => VertexOp::Sub(x),
                '*' => VertexOp::Mul(x),
                _ => VertexOp::AssignNumber(x),
            }
        }
        '&' => VertexOp::AppendText(rest.to_string()),
        _ => VertexOp::AssignText(surface.to_string()),
    };
    Ok(VertexExpr {
        metric: metric.to_string(),
        op,
    })
}

fn parse_operand(rest: &str) -> Result<f64, ExprError> {
    let trimmed = rest.trim();
    // Rust's float parser accepts "inf"/"nan"; only plain decimal literals are allowed here.
    let plain = !trimmed.is_empty()
        && trimmed
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'));
    match trimmed.parse::<f64>() {
        Ok(x) if plain && x.is_finite() => Ok(x),
        _ => Err(ExprError::Syntax {
            pos: 1,
            msg: format!("expected a number after sigil, found {rest:?}"),
        }),
    }
}

fn arithmetic(metric: &str, current: Option<&Value>) -> Result<f64, ExprError> {
    match current {
        None => Ok(0.0),
        Some(Value::Number(x)) => Ok(*x),
        Some(other) => Err(ExprError::Type {
            metric: Some(metric.to_string()),
            msg: format!("arithmetic on {} metric", other.type_name()),
        }),
    }
}

impl VertexExpr {
    /// Applies this expression to `m` in place, touching only the target metric.
    pub fn apply_in_place(&self, m: &mut Metrics) -> Result<(), ExprError> {
        let name = self.metric.as_str();
        let value = match &self.op {
            VertexOp::Add(x) => Value::number(arithmetic(name, m.get(name))? + x)?,
            VertexOp::Sub(x) => Value::number(arithmetic(name, m.get(name))? - x)?,
            VertexOp::Mul(x) => Value::number(arithmetic(name, m.get(name))? * x)?,
            VertexOp::AssignNumber(x) => Value::Number(*x),
            VertexOp::AssignText(s) => Value::Text(s.clone()),
            VertexOp::AppendText(s) => {
                let mut set = match m.get(name) {
                    None => BTreeSet::new(),
                    Some(Value::TextSet(set)) => set.clone(),
                    Some(Value::Text(t)) => BTreeSet::from([t.clone()]),
                    Some(other) => {
                        return Err(ExprError::Type {
                            metric: Some(name.to_string()),
                            msg: format!("cannot append text to {} metric", other.type_name()),
                        })
                    }
                };
                set.insert(s.clone());
                Value::TextSet(set)
            }
        };
        m.insert(name, value);
        Ok(())
    }
}

/// Functional form of [`VertexExpr::apply_in_place`].
pub fn apply(expr: &VertexExpr, m: &Metrics) -> Result<Metrics, ExprError> {
    let mut out = m.clone();
    expr.apply_in_place(&mut out)?;
    Ok(out)
}
