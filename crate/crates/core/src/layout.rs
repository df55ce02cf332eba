//! Rack placement, floor planning and cable routing.
//!
//! Each rack is filled from both ends: enclosures and UPS units stack from
//! the bottom up, switches hang from the top down. Free space therefore
//! always sits in one contiguous gap in the middle of the rack.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Metrics;
use crate::net::NetworkDesign;
use crate::par::Exec;
use crate::ups::UpsDesign;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("device {device} is {size_u}U, taller than a {height_u}U rack")]
    TooTall {
        device: String,
        size_u: u32,
        height_u: u32,
    },
    #[error("{nodes} nodes exceed the network capacity of {capacity}")]
    OverCapacity { nodes: u64, capacity: u64 },
    #[error("node metric: {0}")]
    BadMetric(String),
    #[error("invalid geometry: {0}")]
    BadGeometry(String),
    #[error("cable endpoints coincide at device {0}")]
    DegenerateCable(String),
    #[error("device {device} at {height_m:.3} m sits above the cable tray")]
    AboveTray { device: String, height_m: f64 },
    #[error("rack {rack} is outside the floor plan of {racks} racks")]
    Unplanned { rack: usize, racks: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceKind {
    CoreSwitch,
    EdgeSwitch,
    Enclosure,
    UpsUnit,
}

impl DeviceKind {
    fn stacks_from_bottom(self) -> bool {
        matches!(self, DeviceKind::Enclosure | DeviceKind::UpsUnit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub id: String,
    pub kind: DeviceKind,
    pub size_u: u32,
    pub group: String,
    pub label: String,
    /// Compute nodes housed; zero for everything but enclosures.
    pub nodes: u64,
    pub cost: f64,
    pub power: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputeBlock {
    pub edge_switch: Device,
    pub enclosures: Vec<Device>,
    pub node_count: u64,
}

impl ComputeBlock {
    pub fn size_u(&self) -> u32 {
        self.edge_switch.size_u + self.enclosures.iter().map(|e| e.size_u).sum::<u32>()
    }
}

fn whole(m: &Metrics, name: &str) -> Result<Option<u32>, LayoutError> {
    match m.number(name) {
        None => Ok(None),
        Some(x) if x >= 1.0 && x.fract() == 0.0 && x <= u32::MAX as f64 => Ok(Some(x as u32)),
        Some(x) => Err(LayoutError::BadMetric(format!(
            "{name} = {x} must be a whole number >= 1"
        ))),
    }
}

/// Splits `n_nodes` over the edge switches of `net`, `k` at a time, and
/// packs each block's nodes into enclosures.
pub fn build_compute_blocks(
    group: &str,
    node: &Metrics,
    n_nodes: u64,
    net: &NetworkDesign,
) -> Result<Vec<ComputeBlock>, LayoutError> {
    let k = net.edge.down_ports;
    let edges = net.edge.count;
    let capacity = k * edges;
    if n_nodes > capacity {
        return Err(LayoutError::OverCapacity {
            nodes: n_nodes,
            capacity,
        });
    }
    let per_enclosure = whole(node, "nodes_per_enclosure")?.unwrap_or(1) as u64;
    let enclosure_u = match whole(node, "enclosure_size_u")? {
        Some(u) => u,
        None => whole(node, "node_size_u")?.ok_or_else(|| {
            LayoutError::BadMetric("neither enclosure_size_u nor node_size_u is set".into())
        })?,
    };
    let per_node = |name: &str| node.number(name).unwrap_or(0.0);
    let sw = &net.edge.switch;

    let mut enclosure_no = 0;
    let mut left = n_nodes;
    let mut blocks = Vec::with_capacity(edges as usize);
    for b in 0..edges {
        let count = left.min(k);
        left -= count;
        let mut enclosures = Vec::new();
        let mut rest = count;
        while rest > 0 {
            let here = rest.min(per_enclosure);
            rest -= here;
            enclosure_no += 1;
            let n = here as f64;
            enclosures.push(Device {
                id: format!("{group}.enc{enclosure_no:03}"),
                kind: DeviceKind::Enclosure,
                size_u: enclosure_u,
                group: group.to_string(),
                label: format!("{here} nodes"),
                nodes: here,
                cost: n * per_node("node_cost"),
                power: n * per_node("node_power"),
                weight: n * per_node("node_weight"),
            });
        }
        blocks.push(ComputeBlock {
            edge_switch: Device {
                id: format!("{group}.edge{:03}", b + 1),
                kind: DeviceKind::EdgeSwitch,
                size_u: sw.size_u,
                group: group.to_string(),
                label: sw.label.clone(),
                nodes: 0,
                cost: sw.cost,
                power: sw.power,
                weight: sw.weight,
            },
            enclosures,
            node_count: count,
        });
    }
    Ok(blocks)
}

pub fn core_devices(group: &str, net: &NetworkDesign) -> Vec<Device> {
    let Some(core) = &net.core else {
        return Vec::new();
    };
    (0..core.count)
        .map(|i| Device {
            id: format!("{group}.core{:03}", i + 1),
            kind: DeviceKind::CoreSwitch,
            size_u: core.switch.size_u,
            group: group.to_string(),
            label: core.switch.label.clone(),
            nodes: 0,
            cost: core.switch.cost,
            power: core.switch.power,
            weight: core.switch.weight,
        })
        .collect()
}

pub fn ups_devices(group: &str, ups: &UpsDesign) -> Vec<Device> {
    (0..ups.count)
        .map(|i| Device {
            id: format!("{group}.ups{:03}", i + 1),
            kind: DeviceKind::UpsUnit,
            size_u: ups.unit.size_u,
            group: group.to_string(),
            label: ups.unit.label.clone(),
            nodes: 0,
            cost: ups.unit.cost,
            power: 0.0,
            weight: ups.unit.weight,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// As densely as possible.
    Consolidate,
    /// One item per fresh rack.
    Separate,
    /// Item `i` goes `i * N` racks after the first free one.
    Spread(u32),
}

impl Strategy {
    pub fn parse(s: &str) -> Option<Strategy> {
        match s {
            "consolidation" | "consolidate" => Some(Strategy::Consolidate),
            "separation" | "separate" => Some(Strategy::Separate),
            _ => {
                let n = s
                    .strip_prefix("spread")?
                    .trim_start_matches([':', '(', ' '])
                    .trim_end_matches(')');
                n.parse().ok().filter(|&n| n >= 1).map(Strategy::Spread)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategies {
    pub core: Strategy,
    pub blocks: Strategy,
    pub ups: Strategy,
}

impl Default for Strategies {
    fn default() -> Self {
        Strategies {
            core: Strategy::Separate,
            blocks: Strategy::Consolidate,
            ups: Strategy::Consolidate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rack {
    pub index: usize,
    pub height_u: u32,
    /// Devices in placement order.
    pub devices: Vec<usize>,
    bottom_u: u32,
    top_u: u32,
    has_compute: bool,
    has_ups: bool,
}

impl Rack {
    fn new(index: usize, height_u: u32) -> Rack {
        Rack {
            index,
            height_u,
            devices: Vec::new(),
            bottom_u: 0,
            top_u: 0,
            has_compute: false,
            has_ups: false,
        }
    }

    pub fn free_u(&self) -> u32 {
        self.height_u - self.bottom_u - self.top_u
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    pub fn has_compute(&self) -> bool {
        self.has_compute
    }

    pub fn has_ups(&self) -> bool {
        self.has_ups
    }
}

/// Where a device ended up. Slots are numbered from 1 at the bottom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub rack: usize,
    pub base_u: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub edge: usize,
    pub enclosures: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupLayout {
    pub name: String,
    pub cores: Vec<usize>,
    pub blocks: Vec<BlockLayout>,
    pub ups: Vec<usize>,
    pub uplinks: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Compute,
    Ups,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub height_u: u32,
    pub racks: Vec<Rack>,
    pub devices: Vec<Device>,
    pub slots: Vec<Slot>,
    pub groups: Vec<GroupLayout>,
}

impl Placement {
    pub fn new(height_u: u32) -> Placement {
        Placement {
            height_u,
            racks: Vec::new(),
            devices: Vec::new(),
            slots: Vec::new(),
            groups: Vec::new(),
        }
    }

    pub fn rack_count(&self) -> usize {
        self.racks.len()
    }

    /// Top slot of device `d`; cables attach there.
    pub fn cable_u(&self, d: usize) -> u32 {
        self.slots[d].base_u + self.devices[d].size_u - 1
    }

    fn eligible(&self, r: usize, role: Role, min_rack: usize, size: u32) -> bool {
        let rack = &self.racks[r];
        r >= min_rack
            && rack.free_u() >= size
            && match role {
                Role::Compute => !rack.has_ups,
                Role::Ups => !rack.has_compute,
                Role::Other => true,
            }
    }

    fn first_fit(&mut self, role: Role, min_rack: usize, size: u32) -> usize {
        match (min_rack..self.racks.len()).find(|&r| self.eligible(r, role, min_rack, size)) {
            Some(r) => r,
            None => self.open_rack(),
        }
    }

    fn open_rack(&mut self) -> usize {
        let i = self.racks.len();
        self.racks.push(Rack::new(i, self.height_u));
        i
    }

    fn ensure_racks(&mut self, upto: usize) {
        while self.racks.len() <= upto {
            self.open_rack();
        }
    }

    fn put(&mut self, r: usize, device: Device) -> usize {
        let d = self.devices.len();
        let rack = &mut self.racks[r];
        let base_u = if device.kind.stacks_from_bottom() {
            rack.bottom_u += device.size_u;
            rack.bottom_u - device.size_u + 1
        } else {
            rack.top_u += device.size_u;
            rack.height_u - rack.top_u + 1
        };
        match device.kind {
            DeviceKind::Enclosure | DeviceKind::EdgeSwitch => rack.has_compute = true,
            DeviceKind::UpsUnit => rack.has_ups = true,
            DeviceKind::CoreSwitch => {}
        }
        rack.devices.push(d);
        self.devices.push(device);
        self.slots.push(Slot { rack: r, base_u });
        d
    }

    /// Start rack for item `i` of a run beginning at rack count `base`.
    fn start_rack(&mut self, strategy: Strategy, base: usize, i: usize) -> usize {
        match strategy {
            Strategy::Consolidate => 0,
            Strategy::Separate => self.racks.len(),
            Strategy::Spread(n) => {
                let r = base + i * n as usize;
                self.ensure_racks(r);
                r
            }
        }
    }

    fn place_simple(&mut self, devices: Vec<Device>, strategy: Strategy, role: Role) -> Vec<usize> {
        let base = self.racks.len();
        let mut out = Vec::with_capacity(devices.len());
        for (i, dev) in devices.into_iter().enumerate() {
            let min = self.start_rack(strategy, base, i);
            let r = self.first_fit(role, min, dev.size_u);
            out.push(self.put(r, dev));
        }
        out
    }

    fn place_block(&mut self, block: ComputeBlock, min_rack: usize) -> BlockLayout {
        let total = block.size_u();
        if total <= self.height_u {
            let r = self.first_fit(Role::Compute, min_rack, total);
            let enclosures = block.enclosures.into_iter().map(|e| self.put(r, e)).collect();
            let edge = self.put(r, block.edge_switch);
            return BlockLayout { edge, enclosures };
        }
        // taller than a rack: enclosures one by one, then the switch nearby
        let mut last = None;
        let mut enclosures = Vec::new();
        for e in block.enclosures {
            let r = self.first_fit(Role::Compute, min_rack, e.size_u);
            last = Some(r);
            enclosures.push(self.put(r, e));
        }
        let size = block.edge_switch.size_u;
        let home = last.unwrap_or(min_rack);
        let r = (min_rack..self.racks.len())
            .filter(|&r| self.eligible(r, Role::Compute, min_rack, size))
            .min_by_key(|&r| (r.abs_diff(home), r))
            .unwrap_or_else(|| self.open_rack());
        let edge = self.put(r, block.edge_switch);
        BlockLayout { edge, enclosures }
    }

    /// Places one group: core switches, then compute blocks, then UPS units.
    pub fn place_group(
        &mut self,
        name: &str,
        cores: Vec<Device>,
        blocks: Vec<ComputeBlock>,
        ups: Vec<Device>,
        uplinks: u64,
        strategies: &Strategies,
    ) -> Result<(), LayoutError> {
        let all = cores
            .iter()
            .chain(&ups)
            .chain(blocks.iter().flat_map(|b| b.enclosures.iter().chain([&b.edge_switch])));
        for d in all {
            if d.size_u > self.height_u || d.size_u == 0 {
                return Err(LayoutError::TooTall {
                    device: d.id.clone(),
                    size_u: d.size_u,
                    height_u: self.height_u,
                });
            }
        }
        let core_ids = self.place_simple(cores, strategies.core, Role::Other);
        let base = self.racks.len();
        let mut block_ids = Vec::with_capacity(blocks.len());
        for (i, b) in blocks.into_iter().enumerate() {
            let min = self.start_rack(strategies.blocks, base, i);
            block_ids.push(self.place_block(b, min));
        }
        let ups_ids = self.place_simple(ups, strategies.ups, Role::Ups);
        self.groups.push(GroupLayout {
            name: name.to_string(),
            cores: core_ids,
            blocks: block_ids,
            ups: ups_ids,
            uplinks,
        });
        Ok(())
    }

    /// Verifies slot ranges, overlap and the mid-rack gap.
    pub fn check(&self) -> Result<(), String> {
        if self.devices.len() != self.slots.len() {
            return Err("device and slot lists differ in length".into());
        }
        let mut seen = vec![false; self.devices.len()];
        for rack in &self.racks {
            let mut ranges: Vec<(u32, u32, usize)> = Vec::new();
            for &d in &rack.devices {
                if std::mem::replace(&mut seen[d], true) {
                    return Err(format!("device {} placed twice", self.devices[d].id));
                }
                let s = self.slots[d];
                if s.rack != rack.index {
                    return Err(format!("device {} slot names the wrong rack", self.devices[d].id));
                }
                let top = s.base_u + self.devices[d].size_u - 1;
                if s.base_u < 1 || top > rack.height_u {
                    return Err(format!("device {} outside rack {}", self.devices[d].id, rack.index));
                }
                ranges.push((s.base_u, top, d));
            }
            ranges.sort();
            for w in ranges.windows(2) {
                if w[1].0 <= w[0].1 {
                    return Err(format!(
                        "devices {} and {} overlap in rack {}",
                        self.devices[w[0].2].id, self.devices[w[1].2].id, rack.index
                    ));
                }
            }
            let kind_slots = |k: DeviceKind| {
                ranges
                    .iter()
                    .filter(move |r| self.devices[r.2].kind == k)
                    .map(|r| (r.0, r.1))
            };
            let top_enclosure = kind_slots(DeviceKind::Enclosure).map(|r| r.1).max();
            let low_edge = kind_slots(DeviceKind::EdgeSwitch).map(|r| r.0).min();
            if let (Some(e), Some(s)) = (top_enclosure, low_edge) {
                if e >= s {
                    return Err(format!("rack {}: enclosure above an edge switch", rack.index));
                }
            }
        }
        if let Some(d) = seen.iter().position(|s| !s) {
            return Err(format!("device {} is in no rack", self.devices[d].id));
        }
        Ok(())
    }

    pub fn device_index(&self) -> BTreeMap<&str, usize> {
        self.devices
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id.as_str(), i))
            .collect()
    }
}

/// Places a single group into a fresh set of racks.
pub fn place(
    cores: Vec<Device>,
    blocks: Vec<ComputeBlock>,
    ups: Vec<Device>,
    uplinks: u64,
    strategies: &Strategies,
    rack_height_u: u32,
) -> Result<Placement, LayoutError> {
    let mut p = Placement::new(rack_height_u);
    let group = blocks
        .first()
        .map(|b| b.edge_switch.group.clone())
        .unwrap_or_default();
    p.place_group(&group, cores, blocks, ups, uplinks, strategies)?;
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub rack_height_u: u32,
    pub rack_w: f64,
    pub rack_d: f64,
    pub aisle: f64,
    pub side: f64,
    pub u_pitch: f64,
    pub tray_h: f64,
    pub slack_m: f64,
    pub slack_factor: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            rack_height_u: 42,
            rack_w: 0.6,
            rack_d: 1.2,
            aisle: 1.2,
            side: 1.0,
            u_pitch: 0.0445,
            tray_h: 2.7,
            slack_m: 0.5,
            slack_factor: 1.1,
        }
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<(), LayoutError> {
        let fields = [
            ("rack_w", self.rack_w),
            ("rack_d", self.rack_d),
            ("aisle", self.aisle),
            ("u_pitch", self.u_pitch),
            ("tray_h", self.tray_h),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(LayoutError::BadGeometry(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.side.is_finite() && self.side >= 0.0) || !(self.slack_m.is_finite() && self.slack_m >= 0.0) {
            return Err(LayoutError::BadGeometry("side and slack must be non-negative".into()));
        }
        if !(self.slack_factor.is_finite() && self.slack_factor >= 1.0) {
            return Err(LayoutError::BadGeometry(format!(
                "slack_factor = {} must be at least 1",
                self.slack_factor
            )));
        }
        if self.rack_height_u == 0 {
            return Err(LayoutError::BadGeometry("rack height must be at least 1U".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RackPosition {
    pub row: usize,
    pub col: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorPlan {
    pub rows: usize,
    pub racks_per_row: usize,
    pub positions: Vec<RackPosition>,
    pub width_m: f64,
    pub depth_m: f64,
    pub area_m2: f64,
    pub geometry: Geometry,
}

pub fn plan_floor(racks: usize, g: &Geometry) -> Result<FloorPlan, LayoutError> {
    g.validate()?;
    if racks == 0 {
        return Err(LayoutError::BadGeometry("at least one rack is required".into()));
    }
    let ideal = (racks as f64 * (g.rack_d + g.aisle) / g.rack_w).sqrt().round();
    let rpr = (ideal as usize).clamp(1, racks);
    let rows = racks.div_ceil(rpr);
    let positions = (0..racks)
        .map(|i| {
            let row = i / rpr;
            let pos = i % rpr;
            let col = if row.is_multiple_of(2) { pos } else { rpr - 1 - pos };
            RackPosition {
                row,
                col,
                x: g.side + (col as f64 + 0.5) * g.rack_w,
                y: g.aisle + row as f64 * (g.rack_d + g.aisle) + g.rack_d / 2.0,
            }
        })
        .collect();
    let width_m = rpr as f64 * g.rack_w + 2.0 * g.side;
    let depth_m = rows as f64 * g.rack_d + (rows + 1) as f64 * g.aisle;
    Ok(FloorPlan {
        rows,
        racks_per_row: rpr,
        positions,
        width_m,
        depth_m,
        area_m2: width_m * depth_m,
        geometry: *g,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CableClass {
    NodeEdge,
    EdgeCore,
}

impl CableClass {
    pub fn as_str(self) -> &'static str {
        match self {
            CableClass::NodeEdge => "node_edge",
            CableClass::EdgeCore => "edge_core",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub device: String,
    pub rack: usize,
    pub u: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cable {
    pub id: String,
    pub class: CableClass,
    pub a: Endpoint,
    pub b: Endpoint,
    pub length_m: f64,
}

/// Length of a cable between two endpoints.
pub fn cable_length(a: &Endpoint, b: &Endpoint, plan: &FloorPlan) -> Result<f64, LayoutError> {
    let g = &plan.geometry;
    if a.device == b.device {
        return Err(LayoutError::DegenerateCable(a.device.clone()));
    }
    if a.rack == b.rack {
        return Ok(a.u.abs_diff(b.u) as f64 * g.u_pitch + g.slack_m);
    }
    let pos = |e: &Endpoint| {
        plan.positions.get(e.rack).copied().ok_or(LayoutError::Unplanned {
            rack: e.rack,
            racks: plan.positions.len(),
        })
    };
    let (pa, pb) = (pos(a)?, pos(b)?);
    let rise = |e: &Endpoint| {
        let z = e.u as f64 * g.u_pitch;
        if z > g.tray_h {
            Err(LayoutError::AboveTray {
                device: e.device.clone(),
                height_m: z,
            })
        } else {
            Ok(g.tray_h - z)
        }
    };
    let run = rise(a)? + rise(b)? + (pa.x - pb.x).abs() + (pa.y - pb.y).abs();
    Ok(run * g.slack_factor)
}

pub fn route_cables(placement: &Placement, plan: &FloorPlan) -> Result<Vec<Cable>, LayoutError> {
    route_cables_with(placement, plan, Exec::default())
}

/// Node-to-edge cables first, group by group, then edge-to-core uplinks.
pub fn route_cables_with(
    placement: &Placement,
    plan: &FloorPlan,
    exec: Exec,
) -> Result<Vec<Cable>, LayoutError> {
    let end = |d: usize| Endpoint {
        device: placement.devices[d].id.clone(),
        rack: placement.slots[d].rack,
        u: placement.cable_u(d),
    };
    let mut pairs = Vec::new();
    for g in &placement.groups {
        for b in &g.blocks {
            for &e in &b.enclosures {
                for _ in 0..placement.devices[e].nodes {
                    pairs.push((CableClass::NodeEdge, e, b.edge));
                }
            }
        }
    }
    for g in &placement.groups {
        if g.cores.is_empty() {
            continue;
        }
        let c = g.cores.len() as u64;
        for (i, b) in g.blocks.iter().enumerate() {
            for j in 0..g.uplinks {
                let core = g.cores[((i as u64 * g.uplinks + j) % c) as usize];
                pairs.push((CableClass::EdgeCore, b.edge, core));
            }
        }
    }
    let width = pairs.len().to_string().len().max(6);
    let numbered: Vec<(usize, CableClass, usize, usize)> = pairs
        .into_iter()
        .enumerate()
        .map(|(i, (class, a, b))| (i + 1, class, a, b))
        .collect();
    exec.try_map(&numbered, |&(i, class, a, b)| {
        let (a, b) = (end(a), end(b));
        let length_m = cable_length(&a, &b, plan)?;
        Ok(Cable {
            id: format!("c{i:0width$}"),
            class,
            a,
            b,
            length_m,
        })
    })
}

pub fn total_cable_length(cables: &[Cable]) -> f64 {
    cables.iter().map(|c| c.length_m).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{SwitchConfig, Tier};

    fn switch(ports: u64, size_u: u32) -> SwitchConfig {
        SwitchConfig {
            origin_index: 0,
            label: format!("sw{ports}"),
            ports,
            cost: 1000.0,
            power: 100.0,
            size_u,
            weight: 10.0,
            technology: Default::default(),
            vendor: None,
        }
    }

    fn two_level(nodes: u64, k: u64, edges: u64, cores: u64) -> NetworkDesign {
        NetworkDesign {
            nodes,
            levels: 2,
            edge: Tier {
                switch: switch(2 * k, 1),
                count: edges,
                down_ports: k,
                uplinks: k,
            },
            core: Some(Tier {
                switch: switch(2 * k, 1),
                count: cores,
                down_ports: 2 * k,
                uplinks: 0,
            }),
            node_cables: nodes,
            core_cables: edges * k,
            totals: crate::net::NetworkTotals {
                cost: 0.0,
                power: 0.0,
                weight: 0.0,
                size_u: 0,
                switches: edges + cores,
            },
            objective: 0.0,
        }
    }

    fn blade() -> Metrics {
        let mut m = Metrics::new();
        m.set_number("nodes_per_enclosure", 16.0).unwrap();
        m.set_number("enclosure_size_u", 10.0).unwrap();
        m.set_number("node_power", 651.0).unwrap();
        m
    }

    fn device(id: &str, kind: DeviceKind, size_u: u32) -> Device {
        Device {
            id: id.into(),
            kind,
            size_u,
            group: "g".into(),
            label: String::new(),
            nodes: u64::from(kind == DeviceKind::Enclosure),
            cost: 0.0,
            power: 0.0,
            weight: 0.0,
        }
    }

    #[test]
    fn blocks_for_224_nodes() {
        let blocks = build_compute_blocks("g", &blade(), 224, &two_level(224, 32, 7, 4)).unwrap();
        assert_eq!(blocks.len(), 7);
        for b in &blocks {
            assert_eq!(b.node_count, 32);
            assert_eq!(b.enclosures.len(), 2);
            assert_eq!(b.size_u(), 21);
        }
        assert_eq!(blocks[0].enclosures[0].power, 16.0 * 651.0);
    }

    #[test]
    fn blocks_chunk_unevenly() {
        let mut m = Metrics::new();
        m.set_number("node_size_u", 1.0).unwrap();
        let blocks = build_compute_blocks("g", &m, 5, &two_level(5, 2, 3, 1)).unwrap();
        let counts: Vec<u64> = blocks.iter().map(|b| b.node_count).collect();
        assert_eq!(counts, [2, 2, 1]);
        let one = build_compute_blocks("g", &m, 1, &two_level(1, 4, 1, 1)).unwrap();
        assert_eq!((one.len(), one[0].enclosures.len()), (1, 1));
        assert!(matches!(
            build_compute_blocks("g", &m, 7, &two_level(5, 2, 3, 1)),
            Err(LayoutError::OverCapacity { .. })
        ));
    }

    #[test]
    fn consolidate_five_enclosures() {
        let ups: Vec<Device> = (0..5)
            .map(|i| device(&format!("u{i}"), DeviceKind::UpsUnit, 10))
            .collect();
        let p = place(vec![], vec![], ups, 0, &Strategies::default(), 42).unwrap();
        assert_eq!(p.rack_count(), 2);
        assert_eq!(p.racks[0].devices.len(), 4);
        p.check().unwrap();
    }

    #[test]
    fn separate_and_spread() {
        let cores: Vec<Device> = (0..3)
            .map(|i| device(&format!("c{i}"), DeviceKind::CoreSwitch, 1))
            .collect();
        let ups: Vec<Device> = (0..3)
            .map(|i| device(&format!("u{i}"), DeviceKind::UpsUnit, 4))
            .collect();
        let p = place(cores.clone(), vec![], vec![], 0, &Strategies::default(), 42).unwrap();
        assert_eq!(p.rack_count(), 3);
        let s = Strategies {
            ups: Strategy::Spread(2),
            ..Strategies::default()
        };
        let p = place(vec![], vec![], ups, 0, &s, 42).unwrap();
        let racks: Vec<usize> = p.slots.iter().map(|s| s.rack).collect();
        assert_eq!(racks, [0, 2, 4]);
    }

    #[test]
    fn switches_top_enclosures_bottom() {
        let blocks = build_compute_blocks("g", &blade(), 224, &two_level(224, 32, 7, 4)).unwrap();
        let p = place(vec![], blocks, vec![], 32, &Strategies::default(), 42).unwrap();
        assert_eq!(p.rack_count(), 4);
        p.check().unwrap();
        let edge = p.groups[0].blocks[0].edge;
        assert_eq!(p.slots[edge].base_u, 42);
        assert_eq!(p.slots[p.groups[0].blocks[0].enclosures[0]].base_u, 1);
    }

    #[test]
    fn oversize_block_spills() {
        let mut m = blade();
        m.set_number("nodes_per_enclosure", 1.0).unwrap();
        m.set_number("enclosure_size_u", 2.0).unwrap();
        // 32 x 2U enclosures + a 1U switch do not fit in 42U
        let blocks = build_compute_blocks("g", &m, 32, &two_level(32, 32, 1, 1)).unwrap();
        let p = place(vec![], blocks, vec![], 32, &Strategies::default(), 42).unwrap();
        p.check().unwrap();
        assert_eq!(p.rack_count(), 2);
        assert_eq!(p.slots[p.groups[0].blocks[0].edge].rack, 1);
    }

    #[test]
    fn too_tall() {
        let d = device("big", DeviceKind::CoreSwitch, 50);
        assert!(matches!(
            place(vec![d], vec![], vec![], 0, &Strategies::default(), 42),
            Err(LayoutError::TooTall { .. })
        ));
    }

    #[test]
    fn floor_formula() {
        let g = Geometry::default();
        let f = plan_floor(1, &g).unwrap();
        assert_eq!((f.racks_per_row, f.rows), (1, 1));
        let f = plan_floor(8, &g).unwrap();
        assert_eq!((f.racks_per_row, f.rows), (6, 2));
        assert!((f.width_m - 5.6).abs() < 1e-9);
        assert!((f.depth_m - 6.0).abs() < 1e-9);
        assert!((f.area_m2 - 33.6).abs() < 1e-9);
        let f = plan_floor(72, &g).unwrap();
        assert_eq!((f.racks_per_row, f.rows), (17, 5));
        assert!(plan_floor(0, &g).is_err());
        let bad = Geometry {
            rack_w: 0.0,
            ..g
        };
        assert!(plan_floor(4, &bad).is_err());
    }

    #[test]
    fn serpentine() {
        let f = plan_floor(30, &Geometry::default()).unwrap();
        for w in f.positions.windows(2) {
            let d = w[0].row.abs_diff(w[1].row) + w[0].col.abs_diff(w[1].col);
            assert_eq!(d, 1);
        }
    }

    #[test]
    fn cable_lengths() {
        let plan = plan_floor(8, &Geometry::default()).unwrap();
        let e = |d: &str, rack, u| Endpoint {
            device: d.into(),
            rack,
            u,
        };
        let l = cable_length(&e("a", 0, 10), &e("b", 0, 20), &plan).unwrap();
        assert!((l - 0.945).abs() < 1e-12);
        let l = cable_length(&e("a", 0, 40), &e("b", 1, 40), &plan).unwrap();
        assert!((l - 2.684).abs() < 1e-9, "{l}");
        assert!(matches!(
            cable_length(&e("a", 0, 1), &e("a", 0, 1), &plan),
            Err(LayoutError::DegenerateCable(_))
        ));
        assert!(matches!(
            cable_length(&e("a", 0, 70), &e("b", 1, 1), &plan),
            Err(LayoutError::AboveTray { .. })
        ));
        assert_eq!(total_cable_length(&[]), 0.0);
    }

    #[test]
    fn cable_counts() {
        let mut m = Metrics::new();
        m.set_number("node_size_u", 1.0).unwrap();
        let net = two_level(5, 2, 3, 1);
        let blocks = build_compute_blocks("g", &m, 5, &net).unwrap();
        let cores = core_devices("g", &net);
        let p = place(cores, blocks, vec![], 2, &Strategies::default(), 42).unwrap();
        let plan = plan_floor(p.rack_count(), &Geometry::default()).unwrap();
        let cables = route_cables(&p, &plan).unwrap();
        assert_eq!(cables.len(), 5 + 3 * 2);
        assert_eq!(cables[0].id, "c000001");
        let seq = route_cables_with(&p, &plan, Exec::Sequential).unwrap();
        assert_eq!(cables, seq);
    }
}
