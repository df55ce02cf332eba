//! Documentation writers: summary table, cable list and SVG rack views.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::econ::DesignSummary;
use crate::layout::{Cable, DeviceKind, FloorPlan, Placement};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("row {row} does not exist; the floor has {rows} row(s)")]
    UnknownRow { row: usize, rows: usize },
    #[error("floor plan covers {planned} racks but the placement has {placed}")]
    StalePlan { planned: usize, placed: usize },
}

/// A summary row: text values stay text, numbers are rounded to `decimals`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub key: String,
    pub label: String,
    pub value: serde_json::Value,
}

fn round_to(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (x * scale).round() / scale
}

pub fn summary_rows(s: &DesignSummary) -> Vec<SummaryRow> {
    let text = |key: &str, label: &str, v: &str| SummaryRow {
        key: key.into(),
        label: label.into(),
        value: serde_json::Value::String(v.into()),
    };
    let num = |key: &str, label: &str, v: f64, decimals: u32| {
        let r = round_to(v, decimals);
        let value = if decimals == 0 {
            serde_json::Value::from(r as i64)
        } else {
            serde_json::Value::from(r)
        };
        SummaryRow {
            key: key.into(),
            label: label.into(),
            value,
        }
    };
    vec![
        text("node_model", "Compute node model", &s.node_model),
        text("cpu", "CPU", &s.cpu),
        num("node_peak_gflops", "Node peak performance, GFLOPS", s.node_peak_gflops, 1),
        num("node_power_w", "Node power, W", s.node_power_w, 0),
        num("node_count", "Number of compute nodes", s.node_count as f64, 0),
        num("performance_gflops", "Performance, GFLOPS", s.performance_gflops, 1),
        text("network", "Network", &s.network),
        text("ups", "UPS", &s.ups),
        num("rack_count", "Number of racks", s.rack_count as f64, 0),
        num("floor_area_m2", "Floor area, m2", s.floor_area_m2, 1),
        num("cable_length_m", "Cable length, m", s.cable_length_m, 0),
        num("power_kw", "Power, kW", s.power_kw, 1),
        num("weight_t", "Weight, t", s.weight_t, 2),
        num("capex_usd", "Capital expenditures, USD", s.capex_usd, 0),
        num("opex_usd", "Operating expenditures, USD", s.opex_usd, 0),
        num("tco_usd", "Total cost of ownership, USD", s.tco_usd, 0),
        num("tomato_kg_per_day", "Tomato equivalent, kg per day", s.tomato_kg_per_day as f64, 0),
    ]
}

fn show(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Aligned `label  value` lines.
pub fn summary_text(s: &DesignSummary) -> String {
    let rows = summary_rows(s);
    let width = rows.iter().map(|r| r.label.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for r in &rows {
        let _ = writeln!(out, "{:<width$}  {}", r.label, show(&r.value));
    }
    out
}

pub fn summary_json(s: &DesignSummary) -> String {
    let doc = serde_json::json!({ "rows": summary_rows(s) });
    let mut text = serde_json::to_string_pretty(&doc).expect("summary serialises");
    text.push('\n');
    text
}

pub const CABLE_HEADER: &str = "cable_id,class,from_device,from_rack,from_u,to_device,to_rack,to_u,length_m";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn cable_csv(cables: &[Cable]) -> String {
    let mut sorted: Vec<&Cable> = cables.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut out = String::from(CABLE_HEADER);
    out.push('\n');
    for c in sorted {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.2}",
            csv_field(&c.id),
            c.class.as_str(),
            csv_field(&c.a.device),
            c.a.rack,
            c.a.u,
            csv_field(&c.b.device),
            c.b.rack,
            c.b.u,
            c.length_m
        );
    }
    out
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

const PX_PER_U: u32 = 10;
const RACK_PX: u32 = 80;
const GAP_PX: u32 = 10;
const MARGIN_PX: u32 = 20;
const TRAY_PX: u32 = 30;
const LABEL_PX: u32 = 20;

fn fill(kind: DeviceKind) -> &'static str {
    match kind {
        DeviceKind::CoreSwitch => "#c0504d",
        DeviceKind::EdgeSwitch => "#f79646",
        DeviceKind::Enclosure => "#4f81bd",
        DeviceKind::UpsUnit => "#9bbb59",
    }
}

fn kind_class(kind: DeviceKind) -> &'static str {
    match kind {
        DeviceKind::CoreSwitch => "core_switch",
        DeviceKind::EdgeSwitch => "edge_switch",
        DeviceKind::Enclosure => "enclosure",
        DeviceKind::UpsUnit => "ups_unit",
    }
}

/// Front view of the selected rows; an empty selection draws every row.
pub fn draw_rows(p: &Placement, plan: &FloorPlan, rows: &[usize]) -> Result<String, ReportError> {
    if plan.positions.len() != p.racks.len() {
        return Err(ReportError::StalePlan {
            planned: plan.positions.len(),
            placed: p.racks.len(),
        });
    }
    for &row in rows {
        if row >= plan.rows {
            return Err(ReportError::UnknownRow { row, rows: plan.rows });
        }
    }
    let selected: Vec<usize> = if rows.is_empty() {
        (0..plan.rows).collect()
    } else {
        let mut r = rows.to_vec();
        r.sort_unstable();
        r.dedup();
        r
    };
    let rack_h = p.height_u * PX_PER_U;
    let row_h = TRAY_PX + rack_h + LABEL_PX + MARGIN_PX;
    let width = 2 * MARGIN_PX + plan.racks_per_row as u32 * (RACK_PX + GAP_PX);
    let height = 2 * MARGIN_PX + selected.len() as u32 * row_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    for (k, &row) in selected.iter().enumerate() {
        let top = MARGIN_PX + k as u32 * row_h;
        let _ = writeln!(s, r#"  <g id="row-{row}" class="row">"#);
        let tray_y = top + TRAY_PX / 2;
        let _ = writeln!(
            s,
            r##"    <line class="tray" x1="{}" y1="{tray_y}" x2="{}" y2="{tray_y}" stroke="#555" stroke-width="4"/>"##,
            MARGIN_PX,
            width - MARGIN_PX
        );
        let mut racks: Vec<usize> = (0..p.racks.len())
            .filter(|&r| plan.positions[r].row == row)
            .collect();
        racks.sort_by_key(|&r| plan.positions[r].col);
        for r in racks {
            let x = MARGIN_PX + plan.positions[r].col as u32 * (RACK_PX + GAP_PX);
            let y = top + TRAY_PX;
            let _ = writeln!(s, r#"    <g id="rack-{r}">"#);
            let _ = writeln!(
                s,
                r##"      <rect class="rack" x="{x}" y="{y}" width="{RACK_PX}" height="{rack_h}" fill="#eee" stroke="#000"/>"##
            );
            let mut devices = p.racks[r].devices.clone();
            devices.sort_by_key(|&d| p.slots[d].base_u);
            for d in devices {
                let dev = &p.devices[d];
                let top_u = p.slots[d].base_u + dev.size_u - 1;
                let dy = y + (p.height_u - top_u) * PX_PER_U;
                let _ = writeln!(
                    s,
                    r##"      <rect class="device {}" id="dev-{}" x="{}" y="{dy}" width="{}" height="{}" fill="{}" stroke="#222"><title>{}</title></rect>"##,
                    kind_class(dev.kind),
                    xml_escape(&dev.id),
                    x + 2,
                    RACK_PX - 4,
                    dev.size_u * PX_PER_U,
                    fill(dev.kind),
                    xml_escape(format!("{} {}", dev.id, dev.label).trim_end())
                );
            }
            let _ = writeln!(
                s,
                r#"      <text class="rack-label" x="{}" y="{}" text-anchor="middle" font-size="12">R{r}</text>"#,
                x + RACK_PX / 2,
                y + rack_h + 15
            );
            let _ = writeln!(s, "    </g>");
        }
        let _ = writeln!(s, "  </g>");
    }
    s.push_str("</svg>\n");
    Ok(s)
}
