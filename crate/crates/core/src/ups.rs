//! UPS selection: the cheapest catalogue configuration, replicated enough
//! times to carry the load, that meets the requested battery runtime.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{eval_expr, Expr, ExprError, Metrics, Value};
use crate::graph::Configuration;
use crate::par::Exec;

/// Efficiency assumed when a catalogue entry has no `power_overhead`.
pub const DEFAULT_EFFICIENCY: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UpsError {
    #[error("UPS configuration {origin_index}: {msg}")]
    BadUnit { origin_index: usize, msg: String },
    #[error("load {0} kW must be positive and finite")]
    BadLoad(f64),
    #[error("backup time {0} min must be non-negative")]
    BadBackup(f64),
    #[error("UPS catalogue is empty")]
    EmptyCatalogue,
    #[error("no UPS configuration provides {backup_min} min of backup (longest is {longest} min)")]
    Infeasible { backup_min: f64, longest: f64 },
    #[error("objective: {0}")]
    Objective(ExprError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpsConfig {
    pub origin_index: usize,
    pub label: String,
    pub capacity_kw: f64,
    pub runtime_min: f64,
    pub cost: f64,
    pub power_overhead: f64,
    pub size_u: u32,
    pub weight: f64,
}

impl UpsConfig {
    pub fn from_config(c: &Configuration) -> Result<UpsConfig, UpsError> {
        let m = &c.metrics;
        let bad = |msg: String| UpsError::BadUnit {
            origin_index: c.origin_index,
            msg,
        };
        let num = |name: &str| {
            m.number(name)
                .ok_or_else(|| bad(format!("missing numeric metric {name:?}")))
        };
        let capacity_kw = num("capacity_kw")?;
        if capacity_kw <= 0.0 {
            return Err(bad(format!("capacity_kw = {capacity_kw} must be positive")));
        }
        let power_overhead = m.number("power_overhead").unwrap_or(DEFAULT_EFFICIENCY);
        if !(power_overhead > 0.0 && power_overhead <= 1.0) {
            return Err(bad(format!("power_overhead = {power_overhead} must lie in (0, 1]")));
        }
        let size_u = num("size_u")?;
        if size_u < 1.0 || size_u.fract() != 0.0 {
            return Err(bad(format!("size_u = {size_u} must be a whole number >= 1")));
        }
        Ok(UpsConfig {
            origin_index: c.origin_index,
            label: m
                .text("label")
                .map(str::to_string)
                .unwrap_or_else(|| c.label()),
            capacity_kw,
            runtime_min: m.number("runtime_min").unwrap_or(0.0),
            cost: num("cost")?,
            power_overhead,
            size_u: size_u as u32,
            weight: num("weight")?,
        })
    }

    pub fn catalogue(configs: &[Configuration]) -> Result<Vec<UpsConfig>, UpsError> {
        configs.iter().map(UpsConfig::from_config).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpsTotals {
    pub cost: f64,
    pub size_u: u64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpsDesign {
    pub unit: UpsConfig,
    pub count: u64,
    pub load_kw: f64,
    pub totals: UpsTotals,
    pub delivered_capacity_kw: f64,
    pub efficiency: f64,
    pub objective: f64,
}

impl UpsDesign {
    fn for_unit(unit: &UpsConfig, load_kw: f64) -> UpsDesign {
        let count = (load_kw / unit.capacity_kw).ceil().max(1.0) as u64;
        let n = count as f64;
        UpsDesign {
            unit: unit.clone(),
            count,
            load_kw,
            totals: UpsTotals {
                cost: n * unit.cost,
                size_u: count * unit.size_u as u64,
                weight: n * unit.weight,
            },
            delivered_capacity_kw: n * unit.capacity_kw,
            efficiency: unit.power_overhead,
            objective: 0.0,
        }
    }

    pub fn totals_metrics(&self) -> Metrics {
        let mut m = Metrics::new();
        m.insert("cost", Value::Number(self.totals.cost));
        m.insert("size_u", Value::Number(self.totals.size_u as f64));
        m.insert("weight", Value::Number(self.totals.weight));
        m.insert("count", Value::Number(self.count as f64));
        m.insert("capacity_kw", Value::Number(self.delivered_capacity_kw));
        m.insert("efficiency", Value::Number(self.efficiency));
        m
    }
}

pub fn design_ups(
    load_kw: f64,
    backup_min: Option<f64>,
    catalogue: &[UpsConfig],
    objective: Option<&Expr>,
) -> Result<UpsDesign, UpsError> {
    design_ups_with(load_kw, backup_min, catalogue, objective, Exec::default())
}

/// Ties go to fewer units, then the lower origin index.
pub fn design_ups_with(
    load_kw: f64,
    backup_min: Option<f64>,
    catalogue: &[UpsConfig],
    objective: Option<&Expr>,
    exec: Exec,
) -> Result<UpsDesign, UpsError> {
    if !(load_kw.is_finite() && load_kw > 0.0) {
        return Err(UpsError::BadLoad(load_kw));
    }
    if let Some(b) = backup_min {
        if !(b.is_finite() && b >= 0.0) {
            return Err(UpsError::BadBackup(b));
        }
    }
    if catalogue.is_empty() {
        return Err(UpsError::EmptyCatalogue);
    }
    let scored = exec.map(catalogue, |unit| {
        if backup_min.is_some_and(|b| unit.runtime_min < b) {
            return None;
        }
        let mut d = UpsDesign::for_unit(unit, load_kw);
        let value = match objective {
            None => Ok(d.totals.cost),
            Some(expr) => eval_expr(expr, &d.totals_metrics())
                .map_err(UpsError::Objective)
                .and_then(|v| {
                    v.as_number().ok_or_else(|| {
                        UpsError::Objective(ExprError::Type {
                            metric: None,
                            msg: "objective must be numeric".into(),
                        })
                    })
                }),
        };
        Some(value.map(|v| {
            d.objective = v;
            d
        }))
    });
    let mut best: Option<UpsDesign> = None;
    for d in scored.into_iter().flatten() {
        let d = d?;
        let better = match &best {
            None => true,
            Some(b) => {
                (d.objective.total_cmp(&b.objective), d.count, d.unit.origin_index)
                    < (std::cmp::Ordering::Equal, b.count, b.unit.origin_index)
            }
        };
        if better {
            best = Some(d);
        }
    }
    best.ok_or_else(|| UpsError::Infeasible {
        backup_min: backup_min.unwrap_or(0.0),
        longest: catalogue
            .iter()
            .map(|u| u.runtime_min)
            .fold(0.0, f64::max),
    })
}
