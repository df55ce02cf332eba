//! Fat-tree interconnect design over a switch catalogue.
//!
//! Two shapes are considered: a single switch with enough ports for every
//! node, and a two-level non-blocking folded Clos. In the latter each edge
//! switch with `p` ports gives `k = floor(p / 2)` ports to nodes and `k` to
//! uplinks; `E = ceil(n / k)` edge switches and `C = ceil(E * k / p_core)`
//! core switches are needed, and the design is feasible when
//! `p_core >= E` and `C <= k`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{eval_expr, Expr, ExprError, Metrics, Value};
use crate::graph::Configuration;
use crate::par::Exec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError {
    #[error("switch configuration {origin_index}: {msg}")]
    BadSwitch { origin_index: usize, msg: String },
    #[error("node count must be at least 1")]
    NoNodes,
    #[error("switch catalogue is empty")]
    EmptyCatalogue,
    #[error("no feasible fat-tree for {nodes} nodes; the catalogue supports at most {largest}")]
    Infeasible { nodes: u64, largest: u64 },
    #[error("objective: {0}")]
    Objective(ExprError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchConfig {
    pub origin_index: usize,
    pub label: String,
    pub ports: u64,
    pub cost: f64,
    pub power: f64,
    pub size_u: u32,
    pub weight: f64,
    pub technology: BTreeSet<String>,
    pub vendor: Option<String>,
}

fn count_metric(m: &Metrics, name: &str, origin_index: usize) -> Result<u64, NetError> {
    match m.number(name) {
        Some(x) if x >= 0.0 && x.fract() == 0.0 => Ok(x as u64),
        Some(x) => Err(NetError::BadSwitch {
            origin_index,
            msg: format!("{name} = {x} is not a whole number"),
        }),
        None => Err(NetError::BadSwitch {
            origin_index,
            msg: format!("missing numeric metric {name:?}"),
        }),
    }
}

fn amount(m: &Metrics, name: &str, origin_index: usize) -> Result<f64, NetError> {
    m.number(name).ok_or_else(|| NetError::BadSwitch {
        origin_index,
        msg: format!("missing numeric metric {name:?}"),
    })
}

impl SwitchConfig {
    pub fn from_config(c: &Configuration) -> Result<SwitchConfig, NetError> {
        let m = &c.metrics;
        let i = c.origin_index;
        let ports = count_metric(m, "ports", i)?;
        let size_u = count_metric(m, "size_u", i)?;
        if ports < 2 {
            return Err(NetError::BadSwitch {
                origin_index: i,
                msg: format!("ports = {ports}, need at least 2"),
            });
        }
        if size_u < 1 {
            return Err(NetError::BadSwitch {
                origin_index: i,
                msg: "size_u must be at least 1".into(),
            });
        }
        let technology = match m.get("technology") {
            Some(Value::TextSet(s)) => s.clone(),
            Some(Value::Text(t)) => BTreeSet::from([t.clone()]),
            _ => BTreeSet::new(),
        };
        Ok(SwitchConfig {
            origin_index: i,
            label: m
                .text("label")
                .map(str::to_string)
                .unwrap_or_else(|| c.label()),
            ports,
            cost: amount(m, "cost", i)?,
            power: amount(m, "power", i)?,
            size_u: size_u as u32,
            weight: amount(m, "weight", i)?,
            technology,
            vendor: m.text("vendor").map(str::to_string),
        })
    }

    pub fn catalogue(configs: &[Configuration]) -> Result<Vec<SwitchConfig>, NetError> {
        configs.iter().map(SwitchConfig::from_config).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tier {
    pub switch: SwitchConfig,
    pub count: u64,
    /// Ports facing down (nodes for edge switches, edge uplinks for cores).
    pub down_ports: u64,
    /// Uplinks per switch; zero for the top tier.
    pub uplinks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkTotals {
    pub cost: f64,
    pub power: f64,
    pub weight: f64,
    pub size_u: u64,
    pub switches: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDesign {
    pub nodes: u64,
    pub levels: u8,
    pub edge: Tier,
    pub core: Option<Tier>,
    pub node_cables: u64,
    pub core_cables: u64,
    pub totals: NetworkTotals,
    pub objective: f64,
}

impl NetworkDesign {
    fn assemble(nodes: u64, edge: &SwitchConfig, core: Option<&SwitchConfig>) -> Option<NetworkDesign> {
        match core {
            None => {
                if edge.ports < nodes {
                    return None;
                }
                let edge_tier = Tier {
                    switch: edge.clone(),
                    count: 1,
                    down_ports: edge.ports,
                    uplinks: 0,
                };
                Some(NetworkDesign::finish(nodes, 1, edge_tier, None))
            }
            Some(core) => {
                let k = edge.ports / 2;
                if k == 0 {
                    return None;
                }
                let e = nodes.div_ceil(k);
                let c = (e * k).div_ceil(core.ports);
                if core.ports < e || c > k {
                    return None;
                }
                let edge_tier = Tier {
                    switch: edge.clone(),
                    count: e,
                    down_ports: k,
                    uplinks: k,
                };
                let core_tier = Tier {
                    switch: core.clone(),
                    count: c,
                    down_ports: core.ports,
                    uplinks: 0,
                };
                Some(NetworkDesign::finish(nodes, 2, edge_tier, Some(core_tier)))
            }
        }
    }

    fn finish(nodes: u64, levels: u8, edge: Tier, core: Option<Tier>) -> NetworkDesign {
        let tiers = std::iter::once(&edge).chain(core.as_ref());
        let mut totals = NetworkTotals {
            cost: 0.0,
            power: 0.0,
            weight: 0.0,
            size_u: 0,
            switches: 0,
        };
        for t in tiers {
            let n = t.count as f64;
            totals.cost += n * t.switch.cost;
            totals.power += n * t.switch.power;
            totals.weight += n * t.switch.weight;
            totals.size_u += t.count * t.switch.size_u as u64;
            totals.switches += t.count;
        }
        let core_cables = edge.count * edge.uplinks;
        NetworkDesign {
            nodes,
            levels,
            edge,
            core,
            node_cables: nodes,
            core_cables,
            totals,
            objective: 0.0,
        }
    }

    /// Metrics an objective formula can refer to.
    pub fn totals_metrics(&self) -> Metrics {
        network_totals(self)
    }

    /// Core switch index receiving uplink `j` of edge switch `i`.
    ///
    /// Uplinks are dealt round-robin over all cores, so every core receives
    /// at most `ceil(E * u / C)` links.
    pub fn uplink_target(&self, edge_index: u64, uplink: u64) -> u64 {
        let cores = self.core.as_ref().map_or(1, |c| c.count);
        (edge_index * self.edge.uplinks + uplink) % cores
    }

    /// Structural checks for a design over `n` nodes.
    pub fn check(&self) -> Result<(), String> {
        let n = self.nodes;
        match (&self.core, self.levels) {
            (None, 1) => {
                if self.edge.count != 1 || self.edge.down_ports < n {
                    return Err("single-switch design must have one switch with ports >= n".into());
                }
            }
            (Some(core), 2) => {
                let e = &self.edge;
                if e.count * e.down_ports < n {
                    return Err("edge capacity below node count".into());
                }
                if e.uplinks != e.down_ports {
                    return Err("uplinks differ from downlinks".into());
                }
                if e.down_ports * 2 > e.switch.ports {
                    return Err("edge switch oversubscribed".into());
                }
                if core.count * core.switch.ports < e.count * e.uplinks {
                    return Err("core ports below uplink count".into());
                }
                if core.count > e.down_ports {
                    return Err("more cores than uplinks per edge".into());
                }
                if core.switch.ports < e.count {
                    return Err("core radix below edge count".into());
                }
            }
            _ => return Err("inconsistent level count".into()),
        }
        if self.node_cables != n || self.core_cables != self.edge.count * self.edge.uplinks {
            return Err("cable counts inconsistent".into());
        }
        Ok(())
    }
}

pub fn network_totals(d: &NetworkDesign) -> Metrics {
    let mut m = Metrics::new();
    let t = &d.totals;
    m.insert("cost", Value::Number(t.cost));
    m.insert("power", Value::Number(t.power));
    m.insert("weight", Value::Number(t.weight));
    m.insert("size_u", Value::Number(t.size_u as f64));
    m.insert("switches", Value::Number(t.switches as f64));
    m.insert("node_cables", Value::Number(d.node_cables as f64));
    m.insert("core_cables", Value::Number(d.core_cables as f64));
    m
}

/// Largest node count any catalogue shape can serve.
pub fn largest_feasible(catalogue: &[SwitchConfig]) -> u64 {
    let single = catalogue.iter().map(|s| s.ports).max().unwrap_or(0);
    let two_level = catalogue
        .iter()
        .flat_map(|e| catalogue.iter().map(move |c| (e.ports / 2) * c.ports))
        .max()
        .unwrap_or(0);
    single.max(two_level)
}

pub fn design_fattree(
    nodes: u64,
    catalogue: &[SwitchConfig],
    objective: Option<&Expr>,
) -> Result<NetworkDesign, NetError> {
    design_fattree_with(nodes, catalogue, objective, Exec::default())
}

/// Exhaustive search; ties go to fewer switches, then the lower edge and
/// core origin indices.
pub fn design_fattree_with(
    nodes: u64,
    catalogue: &[SwitchConfig],
    objective: Option<&Expr>,
    exec: Exec,
) -> Result<NetworkDesign, NetError> {
    if nodes == 0 {
        return Err(NetError::NoNodes);
    }
    if catalogue.is_empty() {
        return Err(NetError::EmptyCatalogue);
    }
    // (edge position, core position); core None = single switch
    let mut shapes: Vec<(usize, Option<usize>)> = Vec::new();
    for e in 0..catalogue.len() {
        shapes.push((e, None));
        for c in 0..catalogue.len() {
            shapes.push((e, Some(c)));
        }
    }
    let scored = exec.map(&shapes, |&(e, c)| {
        let design = NetworkDesign::assemble(nodes, &catalogue[e], c.map(|c| &catalogue[c]))?;
        Some(score(design, objective))
    });
    let mut best: Option<(Key, NetworkDesign)> = None;
    for result in scored.into_iter().flatten() {
        let (key, design) = result?;
        if best.as_ref().is_none_or(|(k, _)| key < *k) {
            best = Some((key, design));
        }
    }
    best.map(|(_, d)| d).ok_or(NetError::Infeasible {
        nodes,
        largest: largest_feasible(catalogue),
    })
}

type Key = (OrdF64, u64, usize, Option<usize>);

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn score(mut design: NetworkDesign, objective: Option<&Expr>) -> Result<(Key, NetworkDesign), NetError> {
    let value = match objective {
        None => design.totals.cost,
        Some(expr) => eval_expr(expr, &design.totals_metrics())
            .map_err(NetError::Objective)?
            .as_number()
            .ok_or_else(|| {
                NetError::Objective(ExprError::Type {
                    metric: None,
                    msg: "objective must be numeric".into(),
                })
            })?,
    };
    design.objective = value;
    let key = (
        OrdF64(value),
        design.totals.switches,
        design.edge.switch.origin_index,
        design.core.as_ref().map(|c| c.switch.origin_index),
    );
    Ok((key, design))
}
