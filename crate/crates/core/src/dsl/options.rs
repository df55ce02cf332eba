//! Settings changed with `set_option` or `--option key=value`.

use std::collections::BTreeMap;

use super::parse::Literal;
use super::DslError;
use crate::econ::CostParams;
use crate::layout::{Geometry, Strategies, Strategy};
use crate::perf::PerfModelSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    /// `peak` or `analytic`.
    pub perf_model: String,
    pub r0: f64,
    pub f0: f64,
    pub gamma: BTreeMap<String, f64>,
    pub network_catalog: Vec<String>,
    pub network_objective: String,
    pub ups_catalog: Vec<String>,
    pub ups_objective: String,
    pub ups_backup_min: Option<f64>,
    pub geometry: Geometry,
    pub strategies: Strategies,
    pub costs: CostParams,
    pub summary_file: String,
    pub cables_file: String,
}

impl Default for Options {
    fn default() -> Self {
        let PerfModelSpec::Analytic { r0, f0, gamma } = PerfModelSpec::analytic_default() else {
            unreachable!()
        };
        Options {
            perf_model: "analytic".into(),
            r0,
            f0,
            gamma,
            network_catalog: vec!["db/switches.xml".into()],
            network_objective: "cost".into(),
            ups_catalog: vec!["db/ups.xml".into()],
            ups_objective: "cost".into(),
            ups_backup_min: None,
            geometry: Geometry::default(),
            strategies: Strategies::default(),
            costs: CostParams::default(),
            summary_file: "design.txt".into(),
            cables_file: "cables.csv".into(),
        }
    }
}

/// Keys accepted by [`Options::set`]; `performance.gamma.<tech>` is open-ended.
pub const KEYS: &[&str] = &[
    "performance.model",
    "performance.r0",
    "performance.f0",
    "performance.gamma.<technology>",
    "network.catalog",
    "network.objective",
    "ups.catalog",
    "ups.objective",
    "ups.backup_min",
    "layout.rack_height_u",
    "layout.rack_width_m",
    "layout.rack_depth_m",
    "layout.aisle_m",
    "layout.side_m",
    "layout.u_pitch_m",
    "layout.tray_height_m",
    "layout.slack_m",
    "layout.slack_factor",
    "layout.core_strategy",
    "layout.block_strategy",
    "layout.ups_strategy",
    "econ.lifetime_years",
    "econ.electricity_usd_per_kwh",
    "econ.rack_fee_usd_per_year",
    "econ.rack_unit_cost_usd",
    "econ.cable_usd_per_m_node_edge",
    "econ.cable_usd_per_m_edge_core",
    "econ.duty_cycle",
    "output.summary",
    "output.cables",
];

fn bad(key: &str, msg: impl Into<String>) -> DslError {
    DslError::Option {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn number(key: &str, v: &Literal) -> Result<f64, DslError> {
    match v {
        Literal::Number(x) => Ok(*x),
        // `--option a=3` arrives as a number already; this covers quoted input
        Literal::Str(s) => s
            .trim()
            .parse()
            .map_err(|_| bad(key, format!("expected a number, found {s:?}"))),
        other => Err(bad(key, format!("expected a number, found {}", other.type_name()))),
    }
}

fn text(key: &str, v: &Literal) -> Result<String, DslError> {
    match v {
        Literal::Str(s) => Ok(s.clone()),
        other => Err(bad(key, format!("expected a string, found {}", other.type_name()))),
    }
}

fn strings(key: &str, v: &Literal) -> Result<Vec<String>, DslError> {
    match v {
        Literal::Str(s) => Ok(vec![s.clone()]),
        Literal::List(items) => items.iter().map(|i| text(key, i)).collect(),
        other => Err(bad(key, format!("expected a file or list of files, found {}", other.type_name()))),
    }
}

pub fn strategy(key: &str, v: &Literal) -> Result<Strategy, DslError> {
    let s = text(key, v)?;
    Strategy::parse(&s).ok_or_else(|| {
        bad(
            key,
            format!("unknown strategy {s:?}; use consolidate, separate or spread:N"),
        )
    })
}

impl Options {
    /// Applies one setting; on error the options are left unchanged.
    pub fn set(&mut self, key: &str, v: &Literal) -> Result<(), DslError> {
        let mut next = self.clone();
        next.apply(key, v)?;
        *self = next;
        Ok(())
    }

    fn apply(&mut self, key: &str, v: &Literal) -> Result<(), DslError> {
        let g = &mut self.geometry;
        let c = &mut self.costs;
        match key {
            "performance.model" => {
                let m = text(key, v)?;
                if m != "peak" && m != "analytic" {
                    return Err(bad(key, format!("unknown model {m:?}; use 'peak' or 'analytic'")));
                }
                self.perf_model = m;
            }
            "performance.r0" => self.r0 = number(key, v)?,
            "performance.f0" => self.f0 = number(key, v)?,
            "network.catalog" => self.network_catalog = strings(key, v)?,
            "network.objective" => self.network_objective = text(key, v)?,
            "ups.catalog" => self.ups_catalog = strings(key, v)?,
            "ups.objective" => self.ups_objective = text(key, v)?,
            "ups.backup_min" => self.ups_backup_min = Some(number(key, v)?),
            "layout.rack_height_u" => {
                let h = number(key, v)?;
                if !(h >= 1.0 && h.fract() == 0.0 && h <= 1000.0) {
                    return Err(bad(key, format!("{h} is not a whole number of units")));
                }
                g.rack_height_u = h as u32;
            }
            "layout.rack_width_m" => g.rack_w = number(key, v)?,
            "layout.rack_depth_m" => g.rack_d = number(key, v)?,
            "layout.aisle_m" => g.aisle = number(key, v)?,
            "layout.side_m" => g.side = number(key, v)?,
            "layout.u_pitch_m" => g.u_pitch = number(key, v)?,
            "layout.tray_height_m" => g.tray_h = number(key, v)?,
            "layout.slack_m" => g.slack_m = number(key, v)?,
            "layout.slack_factor" => g.slack_factor = number(key, v)?,
            "layout.core_strategy" => self.strategies.core = strategy(key, v)?,
            "layout.block_strategy" => self.strategies.blocks = strategy(key, v)?,
            "layout.ups_strategy" => self.strategies.ups = strategy(key, v)?,
            "econ.lifetime_years" => c.lifetime_years = number(key, v)?,
            "econ.electricity_usd_per_kwh" => c.electricity_usd_per_kwh = number(key, v)?,
            "econ.rack_fee_usd_per_year" => c.rack_fee_usd_per_year = number(key, v)?,
            "econ.rack_unit_cost_usd" => c.rack_unit_cost_usd = number(key, v)?,
            "econ.cable_usd_per_m_node_edge" => c.cable_usd_per_m_node_edge = number(key, v)?,
            "econ.cable_usd_per_m_edge_core" => c.cable_usd_per_m_edge_core = number(key, v)?,
            "econ.duty_cycle" => c.duty_cycle = number(key, v)?,
            "output.summary" => self.summary_file = text(key, v)?,
            "output.cables" => self.cables_file = text(key, v)?,
            _ => match key.strip_prefix("performance.gamma.") {
                Some(tech) if !tech.is_empty() => {
                    self.gamma.insert(tech.to_string(), number(key, v)?);
                }
                _ => return Err(bad(key, "unknown option")),
            },
        }
        if key.starts_with("layout.") && !key.ends_with("_strategy") {
            self.geometry
                .validate()
                .map_err(|e| bad(key, e.to_string()))?;
        }
        if key.starts_with("econ.") {
            self.costs.validate().map_err(|e| bad(key, e.to_string()))?;
        }
        if key.starts_with("performance.") {
            // checked even while the peak model is active
            let analytic = PerfModelSpec::Analytic {
                r0: self.r0,
                f0: self.f0,
                gamma: self.gamma.clone(),
            };
            analytic.validate().map_err(|e| bad(key, e.to_string()))?;
        }
        Ok(())
    }

    pub fn perf_spec(&self) -> PerfModelSpec {
        match self.perf_model.as_str() {
            "peak" => PerfModelSpec::Peak,
            _ => PerfModelSpec::Analytic {
                r0: self.r0,
                f0: self.f0,
                gamma: self.gamma.clone(),
            },
        }
    }
}
