//! Power, capital and operating expenditure, and the Table-1 style summary.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Configuration;
use crate::layout::{total_cable_length, Cable, CableClass, FloorPlan, Placement};
use crate::net::NetworkDesign;
use crate::ups::{UpsDesign, DEFAULT_EFFICIENCY};

const HOURS_PER_YEAR: f64 = 24.0 * 365.0;
/// Greenhouse tomato yield per kW of reused heat, kg/day.
const TOMATO_KG_PER_KW_DAY: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EconError {
    #[error("{0}")]
    MissingStage(&'static str),
    #[error("invalid cost parameter: {0}")]
    BadParameter(String),
    #[error("group {group}: node metric {metric:?} is missing or not numeric")]
    NodeMetric { group: String, metric: &'static str },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub lifetime_years: f64,
    pub electricity_usd_per_kwh: f64,
    pub rack_fee_usd_per_year: f64,
    pub rack_unit_cost_usd: f64,
    pub cable_usd_per_m_node_edge: f64,
    pub cable_usd_per_m_edge_core: f64,
    /// Used for groups without a UPS design.
    pub default_efficiency: f64,
    pub duty_cycle: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            lifetime_years: 3.0,
            electricity_usd_per_kwh: 0.35,
            rack_fee_usd_per_year: 3000.0,
            rack_unit_cost_usd: 0.0,
            cable_usd_per_m_node_edge: 0.0,
            cable_usd_per_m_edge_core: 0.0,
            default_efficiency: DEFAULT_EFFICIENCY,
            duty_cycle: 1.0,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<(), EconError> {
        let nonneg = [
            ("electricity_usd_per_kwh", self.electricity_usd_per_kwh),
            ("rack_fee_usd_per_year", self.rack_fee_usd_per_year),
            ("rack_unit_cost_usd", self.rack_unit_cost_usd),
            ("cable_usd_per_m_node_edge", self.cable_usd_per_m_node_edge),
            ("cable_usd_per_m_edge_core", self.cable_usd_per_m_edge_core),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(EconError::BadParameter(format!("{name} = {v} must be non-negative")));
            }
        }
        if !(self.lifetime_years.is_finite() && self.lifetime_years > 0.0) {
            return Err(EconError::BadParameter(format!(
                "lifetime_years = {} must be positive",
                self.lifetime_years
            )));
        }
        if !(self.duty_cycle > 0.0 && self.duty_cycle <= 1.0) {
            return Err(EconError::BadParameter(format!(
                "duty_cycle = {} must lie in (0, 1]",
                self.duty_cycle
            )));
        }
        if !(self.default_efficiency > 0.0 && self.default_efficiency <= 1.0) {
            return Err(EconError::BadParameter(format!(
                "default_efficiency = {} must lie in (0, 1]",
                self.default_efficiency
            )));
        }
        Ok(())
    }

    pub fn cable_price(&self, class: CableClass) -> f64 {
        match class {
            CableClass::NodeEdge => self.cable_usd_per_m_node_edge,
            CableClass::EdgeCore => self.cable_usd_per_m_edge_core,
        }
    }
}

/// Electricity plus rack stationing over the lifetime, unrounded.
pub fn opex(power_kw: f64, rack_count: usize, p: &CostParams) -> f64 {
    let energy = power_kw * HOURS_PER_YEAR * p.lifetime_years * p.duty_cycle * p.electricity_usd_per_kwh;
    let stationing = rack_count as f64 * p.rack_fee_usd_per_year * p.lifetime_years;
    energy + stationing
}

pub fn tomato_equivalent(power_kw: f64) -> u64 {
    // the epsilon keeps 0.4 * 1600 from landing just under 640
    (TOMATO_KG_PER_KW_DAY * power_kw + 1e-9).floor().max(0.0) as u64
}

/// One named batch of equipment: a node configuration replicated `nodes`
/// times with its network and UPS.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquipmentGroup {
    pub name: String,
    pub node: Configuration,
    pub nodes: u64,
    pub performance: f64,
    pub network: NetworkDesign,
    pub ups: Option<UpsDesign>,
}

impl EquipmentGroup {
    fn node_metric(&self, metric: &'static str) -> Result<f64, EconError> {
        self.node.metrics.number(metric).ok_or_else(|| EconError::NodeMetric {
            group: self.name.clone(),
            metric,
        })
    }

    /// IT load in watts: nodes plus switches.
    pub fn it_power_w(&self) -> Result<f64, EconError> {
        Ok(self.nodes as f64 * self.node_metric("node_power")? + self.network.totals.power)
    }

    pub fn efficiency(&self, p: &CostParams) -> f64 {
        self.ups.as_ref().map_or(p.default_efficiency, |u| u.efficiency)
    }

    pub fn power_kw(&self, p: &CostParams) -> Result<f64, EconError> {
        let eff = self.efficiency(p);
        if eff <= 0.0 {
            return Err(EconError::BadParameter(format!("efficiency {eff} must be positive")));
        }
        Ok(self.it_power_w()? / eff / 1000.0)
    }

    pub fn equipment_cost(&self) -> Result<f64, EconError> {
        Ok(self.nodes as f64 * self.node_metric("node_cost")?
            + self.network.totals.cost
            + self.ups.as_ref().map_or(0.0, |u| u.totals.cost))
    }

    pub fn weight_kg(&self) -> f64 {
        self.nodes as f64 * self.node.metrics.number("node_weight").unwrap_or(0.0)
            + self.network.totals.weight
            + self.ups.as_ref().map_or(0.0, |u| u.totals.weight)
    }
}

pub fn total_power_kw(groups: &[EquipmentGroup], p: &CostParams) -> Result<f64, EconError> {
    groups.iter().map(|g| g.power_kw(p)).sum()
}

pub fn capex(
    groups: &[EquipmentGroup],
    rack_count: usize,
    cables: &[Cable],
    p: &CostParams,
) -> Result<f64, EconError> {
    let equipment: f64 = groups
        .iter()
        .map(EquipmentGroup::equipment_cost)
        .sum::<Result<f64, _>>()?;
    let cabling: f64 = cables.iter().map(|c| c.length_m * p.cable_price(c.class)).sum();
    Ok(equipment + rack_count as f64 * p.rack_unit_cost_usd + cabling)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSummary {
    pub node_model: String,
    pub cpu: String,
    pub node_peak_gflops: f64,
    pub node_power_w: f64,
    pub node_count: u64,
    pub performance_gflops: f64,
    pub network: String,
    pub ups: String,
    pub rack_count: usize,
    pub floor_area_m2: f64,
    pub cable_length_m: f64,
    pub power_kw: f64,
    pub weight_t: f64,
    pub capex_usd: f64,
    pub opex_usd: f64,
    pub tco_usd: f64,
    pub tomato_kg_per_day: u64,
}

fn describe_network(n: &NetworkDesign) -> String {
    match &n.core {
        None => format!("1 x {}", n.edge.switch.label),
        Some(c) => format!(
            "fat-tree: {} x {} edge, {} x {} core",
            n.edge.count, n.edge.switch.label, c.count, c.switch.label
        ),
    }
}

fn join_distinct(items: impl Iterator<Item = String>) -> String {
    let mut out: Vec<String> = Vec::new();
    for s in items {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out.join("; ")
}

/// Everything a finished pipeline has produced.
#[derive(Debug, Clone, Copy)]
pub struct DesignView<'a> {
    pub groups: &'a [EquipmentGroup],
    pub placement: Option<&'a Placement>,
    pub floor: Option<&'a FloorPlan>,
    pub cables: Option<&'a [Cable]>,
}

pub fn summarize(d: DesignView<'_>, p: &CostParams) -> Result<DesignSummary, EconError> {
    p.validate()?;
    let first = d.groups.first().ok_or(EconError::MissingStage("no equipment groups"))?;
    let placement = d.placement.ok_or(EconError::MissingStage("equipment not placed"))?;
    let floor = d.floor.ok_or(EconError::MissingStage("floor not planned"))?;
    let cables = d.cables.ok_or(EconError::MissingStage("cables not routed"))?;

    let racks = placement.rack_count();
    let power_kw = total_power_kw(d.groups, p)?;
    let capex = capex(d.groups, racks, cables, p)?.round();
    let opex = opex(power_kw, racks, p).round();
    let cpu = first.node.metrics.text("cpu_model").unwrap_or_default().to_string();
    Ok(DesignSummary {
        node_model: join_distinct(d.groups.iter().map(|g| g.node.label())),
        cpu,
        node_peak_gflops: first.node.metrics.number("node_peak_performance").unwrap_or(0.0),
        node_power_w: first.node_metric("node_power")?,
        node_count: d.groups.iter().map(|g| g.nodes).sum(),
        performance_gflops: d.groups.iter().map(|g| g.performance).sum(),
        network: join_distinct(d.groups.iter().map(|g| describe_network(&g.network))),
        ups: join_distinct(d.groups.iter().map(|g| match &g.ups {
            Some(u) => format!("{} x {}", u.count, u.unit.label),
            None => "none".to_string(),
        })),
        rack_count: racks,
        floor_area_m2: floor.area_m2,
        cable_length_m: total_cable_length(cables),
        power_kw,
        weight_t: d.groups.iter().map(EquipmentGroup::weight_kg).sum::<f64>() / 1000.0,
        capex_usd: capex,
        opex_usd: opex,
        tco_usd: capex + opex,
        tomato_kg_per_day: tomato_equivalent(power_kw),
    })
}
