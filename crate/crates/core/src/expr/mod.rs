//! Vertex expressions and metric formulas.

mod formula;
mod value;
mod vertex;

pub use formula::{
    eval_expr, eval_formula, is_reserved, parse_expr, parse_formula, BinOp, Expr, Formula, Func,
};
pub use value::{is_identifier, Metrics, Value};
pub use vertex::{apply, parse_vertex_expr, VertexExpr, VertexOp};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("invalid metric name {0:?}")]
    BadIdentifier(String),
    #[error("{0:?} is a reserved name and cannot be used as a metric")]
    ReservedName(String),
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("type error{}: {msg}", metric.as_ref().map(|m| format!(" in metric {m:?}")).unwrap_or_default())]
    Type { metric: Option<String>, msg: String },
    #[error("division by zero")]
    DivisionByZero,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("result is not a finite number")]
    NonFinite,
}
