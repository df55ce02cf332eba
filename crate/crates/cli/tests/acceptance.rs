//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs with a plain `main` so the verdict lines reach the terminal even
//! when everything passes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use clusterforge::{load_catalogs, serve, Catalogs};
use clusterforge_core::dsl::{execute, DesignState, RunContext, RunReport};
use clusterforge_core::econ::{opex, tomato_equivalent, CostParams};
use clusterforge_core::graph::ConfigGraph;
use clusterforge_core::layout::{
    place, plan_floor, ComputeBlock, Device, DeviceKind, Geometry, Placement, Strategies, Strategy,
};
use clusterforge_core::net::{design_fattree, NetworkDesign, SwitchConfig};
use clusterforge_core::perf::inverse_search;
use clusterforge_core::ups::design_ups;

type Check = fn() -> Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn script(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(name)).unwrap()
}

fn run_script(src: &str, out: &Path) -> Result<(RunReport, DesignState), String> {
    let (report, state) = execute(src, RunContext::new(fixtures(), out));
    match (report.error.clone(), state) {
        (None, Some(s)) => Ok((report, s)),
        (e, _) => Err(format!("script failed: {e:?}")),
    }
}

fn node_counts() -> Result<String, String> {
    let head = script("fig2-1pflops.cfs");
    let head = head.split("# Specify explicitly").next().unwrap();
    let head = head
        .replace("metric(\"nodes = ceil(1000000 / node_peak_performance)\")\n", "")
        .replace("update_metrics()\n", "");
    let mut got = Vec::new();
    for (target, want) in [(100_000u64, 224u64), (1_000_000, 2233)] {
        let dir = tempfile::tempdir().unwrap();
        let src = head.replace("performance()", &format!("performance(target={target})"));
        let (_, state) = run_script(&src, dir.path())?;
        let node = state.pool.as_ref().and_then(|p| p.chosen()).ok_or("no node chosen")?;
        ensure!(
            node.metrics.number("node_peak_performance") == Some(448.0),
            "node peak {:?}",
            node.metrics.number("node_peak_performance")
        );
        ensure!(state.nodes == Some(want), "target {target}: {:?} nodes, want {want}", state.nodes);
        got.push(want);
    }
    Ok(format!("100 TFLOPS -> {}, 1 PFLOPS -> {}", got[0], got[1]))
}

fn config_graphs() -> Result<String, String> {
    let fig1 = ConfigGraph::load(&[fixtures().join("db/fig1-dual-cpu.xml")]).map_err(|e| e.to_string())?;
    let configs = fig1.enumerate().map_err(|e| e.to_string())?;
    ensure!(configs.len() == 8, "fig1 has {} configurations", configs.len());
    let path = configs
        .iter()
        .find(|c| c.path.join(",") == "board:M,cpu1:B,cpu2:none,memory:32GB")
        .ok_or("highlighted path missing")?;
    let cost = path.metrics.number("node_cost");
    ensure!(cost == Some(7220.0), "highlighted node_cost {cost:?}");
    let db: Vec<PathBuf> = ["hp.xml", "intel-xeon-2600.xml", "hp-blade-memory.xml", "hp-network.xml", "hp-bl460c_gen8.xml"]
        .iter()
        .map(|f| fixtures().join("db").join(f))
        .collect();
    let n = ConfigGraph::load(&db)
        .and_then(|g| g.enumerate())
        .map_err(|e| e.to_string())?
        .len();
    ensure!(n == 56, "node database has {n} configurations");
    Ok("fig1: 8 configurations, node_cost 7220; node database: 56".into())
}

fn within(got: f64, reference: f64, tol: f64) -> bool {
    (got - reference).abs() / reference <= tol
}

fn opex_values() -> Result<String, String> {
    let p = CostParams::default();
    let small = opex(159.0, 8, &p).round();
    let large = opex(1600.0, 72, &p).round();
    ensure!(small == 1_534_482.0, "opex(159, 8) = {small}");
    ensure!(large == 15_364_800.0, "opex(1600, 72) = {large}");
    ensure!(within(small, 1.6e6, 0.05), "{small} vs 1.6M");
    ensure!(within(large, 15.7e6, 0.03), "{large} vs 15.7M");
    Ok(format!(
        "{small} ({:+.1}% vs 1.6M), {large} ({:+.1}% vs 15.7M)",
        (small / 1.6e6 - 1.0) * 100.0,
        (large / 15.7e6 - 1.0) * 100.0
    ))
}

fn tomatoes() -> Result<String, String> {
    let small = tomato_equivalent(159.0);
    let large = tomato_equivalent(1600.0);
    ensure!(small == 63, "159 kW -> {small}");
    ensure!(within(large as f64, 630.0, 0.02), "1600 kW -> {large}");
    Ok(format!("159 kW -> {small}; 1600 kW -> {large} (published 630)"))
}

fn budget(answer: u64) -> u32 {
    2 * (answer as f64).log2().ceil() as u32 + 2
}

fn inverse_solver() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for sample in 0..1000 {
        let family = sample % 4;
        let a: f64 = rng.random_range(0.01..500.0);
        let g: f64 = rng.random_range(0.3..1.0);
        let model = move |n: u64| -> f64 {
            let x = n as f64;
            match family {
                0 => a * x,
                1 => a * x.powf(g),
                2 => a * (x.ln_1p() + x * 1e-3),
                _ => a * (x / 7.0).floor() + x * 1e-6,
            }
        };
        let answer_hint = rng.random_range(1..=10_000u64);
        let target = model(answer_hint);
        let outcome = inverse_search(target, |n| Ok(model(n))).map_err(|e| e.to_string())?;
        let linear = (1..=10_000u64).find(|&n| model(n) >= target).unwrap();
        ensure!(
            outcome.nodes == linear,
            "sample {sample}: solver {} vs linear scan {linear}",
            outcome.nodes
        );
        let b = budget(linear);
        ensure!(outcome.model_calls <= b, "sample {sample}: {} calls > {b}", outcome.model_calls);
        worst = worst.max(outcome.model_calls as f64 / b as f64);
    }
    Ok(format!("1000 samples minimal; worst call ratio {worst:.2} of budget"))
}

fn switch(i: usize, ports: u64, cost: f64) -> SwitchConfig {
    SwitchConfig {
        origin_index: i,
        label: format!("s{i}"),
        ports,
        cost,
        power: 100.0,
        size_u: 1,
        weight: 10.0,
        technology: BTreeSet::new(),
        vendor: None,
    }
}

/// Minimum cost by walking every (edge, core, E, C) directly.
fn fattree_brute(n: u64, cat: &[SwitchConfig]) -> Option<f64> {
    let mut best = f64::INFINITY;
    for s in cat.iter().filter(|s| s.ports >= n) {
        best = best.min(s.cost);
    }
    for e in cat {
        let k = e.ports / 2;
        for c in cat {
            for edges in 1..=n {
                for cores in 1..=k {
                    if edges * k >= n && c.ports >= edges && cores * c.ports >= edges * k {
                        best = best.min(edges as f64 * e.cost + cores as f64 * c.cost);
                    }
                }
            }
        }
    }
    best.is_finite().then_some(best)
}

fn structure_ok(n: u64, d: &NetworkDesign) -> Result<(), String> {
    let e = &d.edge;
    match &d.core {
        None => ensure!(e.count == 1 && e.switch.ports >= n, "bad single switch"),
        Some(c) => {
            let k = e.switch.ports / 2;
            ensure!(e.down_ports == k && e.uplinks == k, "edge split {}/{}", e.down_ports, e.uplinks);
            ensure!(e.count * k >= n, "edge capacity");
            ensure!(c.switch.ports >= e.count, "core radix below edge count");
            ensure!(c.count * c.switch.ports >= e.count * k, "core ports below uplinks");
            ensure!(c.count <= k, "cores exceed uplinks");
            ensure!(d.core_cables == e.count * k, "core cable count");
        }
    }
    ensure!(d.node_cables == n, "node cable count");
    let cost = e.count as f64 * e.switch.cost + d.core.as_ref().map_or(0.0, |c| c.count as f64 * c.switch.cost);
    ensure!(d.totals.cost == cost, "totals cost {} vs {cost}", d.totals.cost);
    Ok(())
}

fn fattree_optimality() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(6);
    let mut feasible = 0;
    let mut cases = 0;
    let radices = [4u64, 8, 12, 16, 24, 32, 36, 48, 64, 96, 128, 324, 648];
    for _ in 0..150 {
        let size = rng.random_range(1..=10);
        let cat: Vec<SwitchConfig> = (0..size)
            .map(|i| {
                let ports = radices[rng.random_range(0..radices.len())];
                switch(i, ports, (ports as f64 * rng.random_range(50.0..400.0)).round())
            })
            .collect();
        for n in [1, 2, rng.random_range(1..=100), rng.random_range(100..=500), 500] {
            cases += 1;
            match (design_fattree(n, &cat, None), fattree_brute(n, &cat)) {
                (Ok(d), Some(best)) => {
                    ensure!(d.objective == best && d.totals.cost == best, "n={n}: {} vs brute {best}", d.totals.cost);
                    structure_ok(n, &d).map_err(|e| format!("n={n}: {e}"))?;
                    feasible += 1;
                }
                (Err(_), None) => {}
                (got, want) => return Err(format!("n={n}: {:?} vs brute {want:?}", got.map(|d| d.totals.cost))),
            }
        }
    }
    Ok(format!("{cases} cases, {feasible} feasible, all optimal"))
}

fn device(id: String, kind: DeviceKind, size_u: u32) -> Device {
    Device {
        id,
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

fn random_suite(rng: &mut StdRng, height: u32) -> (Vec<Device>, Vec<ComputeBlock>, Vec<Device>) {
    let total = rng.random_range(1..=200usize);
    let n_cores = rng.random_range(0..6).min(total);
    let n_ups = rng.random_range(0..5).min(total - n_cores);
    let cores = (0..n_cores)
        .map(|i| device(format!("core{i}"), DeviceKind::CoreSwitch, rng.random_range(1..=height.min(21))))
        .collect();
    let ups = (0..n_ups)
        .map(|i| device(format!("ups{i}"), DeviceKind::UpsUnit, rng.random_range(1..=12)))
        .collect();
    let mut left = total - n_cores - n_ups;
    let mut blocks = Vec::new();
    while left >= 2 {
        let size = rng.random_range(2..=10).min(left);
        left -= size;
        let b = blocks.len();
        blocks.push(ComputeBlock {
            edge_switch: device(format!("edge{b}"), DeviceKind::EdgeSwitch, rng.random_range(1..=2)),
            enclosures: (0..size - 1)
                .map(|i| device(format!("enc{b}_{i}"), DeviceKind::Enclosure, rng.random_range(1..=10)))
                .collect(),
            node_count: size as u64 - 1,
        });
    }
    (cores, blocks, ups)
}

/// Overlap, coverage and gap checks computed from raw slots.
fn placement_ok(p: &Placement, expected: usize) -> Result<(), String> {
    ensure!(p.devices.len() == expected, "{} devices placed of {expected}", p.devices.len());
    ensure!(p.slots.len() == expected, "slot count");
    let mut used: BTreeSet<(usize, u32)> = BTreeSet::new();
    let mut ids = BTreeSet::new();
    for (d, slot) in p.devices.iter().zip(&p.slots) {
        ensure!(ids.insert(d.id.clone()), "{} placed twice", d.id);
        ensure!(slot.rack < p.racks.len(), "{} in missing rack", d.id);
        ensure!(slot.base_u >= 1 && slot.base_u + d.size_u - 1 <= p.height_u, "{} out of bounds", d.id);
        for u in slot.base_u..slot.base_u + d.size_u {
            ensure!(used.insert((slot.rack, u)), "overlap at rack {} u{u}", slot.rack);
        }
    }
    for r in 0..p.racks.len() {
        let in_rack = |k: DeviceKind| {
            p.devices
                .iter()
                .zip(&p.slots)
                .filter(move |(d, s)| s.rack == r && d.kind == k)
                .map(|(d, s)| (s.base_u, s.base_u + d.size_u - 1))
        };
        let top_enc = in_rack(DeviceKind::Enclosure).map(|x| x.1).max();
        let low_edge = in_rack(DeviceKind::EdgeSwitch).map(|x| x.0).min();
        if let (Some(e), Some(s)) = (top_enc, low_edge) {
            ensure!(e < s, "rack {r}: enclosure up to u{e} above edge switch at u{s}");
        }
    }
    Ok(())
}

fn placement_invariants() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(7);
    let mut largest = 0;
    for case in 0..300 {
        let height = rng.random_range(24..=48);
        let seed: u64 = rng.random();
        let build = || random_suite(&mut StdRng::seed_from_u64(seed), height);
        let (c, b, u) = build();
        let expected = c.len() + u.len() + b.iter().map(|b| 1 + b.enclosures.len()).sum::<usize>();
        largest = largest.max(expected);
        let mut counts = Vec::new();
        for s in [Strategy::Consolidate, Strategy::Separate, Strategy::Spread(rng.random_range(1..4))] {
            let (c, b, u) = build();
            let strategies = Strategies { core: s, blocks: s, ups: s };
            let p = place(c, b, u, 1, &strategies, height).map_err(|e| format!("case {case}: {e}"))?;
            placement_ok(&p, expected).map_err(|e| format!("case {case} {s:?}: {e}"))?;
            counts.push(p.rack_count());
        }
        ensure!(counts[0] <= counts[1], "case {case}: consolidate {} > separate {}", counts[0], counts[1]);
    }
    Ok(format!("300 suites up to {largest} devices"))
}

fn floor_plans() -> Result<String, String> {
    let g = Geometry::default();
    let small = plan_floor(8, &g).map_err(|e| e.to_string())?;
    let large = plan_floor(72, &g).map_err(|e| e.to_string())?;
    ensure!((small.racks_per_row, small.rows) == (6, 2), "8 racks: {}x{}", small.racks_per_row, small.rows);
    ensure!((large.racks_per_row, large.rows) == (17, 5), "72 racks: {}x{}", large.racks_per_row, large.rows);
    for r in 1..=1000 {
        let f = plan_floor(r, &g).map_err(|e| e.to_string())?;
        let cells: BTreeSet<_> = f.positions.iter().map(|p| (p.row, p.col)).collect();
        ensure!(cells.len() == r, "R={r}: duplicate cells");
        for w in f.positions.windows(2) {
            let step = w[0].row.abs_diff(w[1].row) + w[0].col.abs_diff(w[1].col);
            ensure!(step == 1, "R={r}: consecutive racks {step} cells apart");
        }
    }
    Ok("8 -> 6x2, 72 -> 17x5, serpentine for R <= 1000".into())
}

fn length_oracle(state: &DesignState) -> f64 {
    let p = state.placement.as_ref().unwrap();
    let f = state.floor.as_ref().unwrap();
    let g = f.geometry;
    let xy = |rack: usize| {
        let row = rack / f.racks_per_row;
        let pos = rack % f.racks_per_row;
        let col = if row.is_multiple_of(2) { pos } else { f.racks_per_row - 1 - pos };
        (g.side + g.rack_w * (col as f64 + 0.5), g.aisle + row as f64 * (g.rack_d + g.aisle) + g.rack_d / 2.0)
    };
    let at: BTreeMap<&str, (usize, f64)> = p
        .devices
        .iter()
        .zip(&p.slots)
        .map(|(d, s)| (d.id.as_str(), (s.rack, (s.base_u + d.size_u - 1) as f64)))
        .collect();
    state
        .cables
        .as_ref()
        .unwrap()
        .iter()
        .map(|c| {
            let (ra, ua) = at[c.a.device.as_str()];
            let (rb, ub) = at[c.b.device.as_str()];
            if ra == rb {
                (ua - ub).abs() * g.u_pitch + g.slack_m
            } else {
                let ((xa, ya), (xb, yb)) = (xy(ra), xy(rb));
                g.slack_factor * ((g.tray_h - ua * g.u_pitch) + (g.tray_h - ub * g.u_pitch) + (xa - xb).abs() + (ya - yb).abs())
            }
        })
        .sum()
}

fn cabling() -> Result<String, String> {
    let mut notes = Vec::new();
    for file in ["four-nodes.cfs", "fig2-100tflops.cfs", "fig2-1pflops.cfs", "rack-server-1pflops.cfs"] {
        let dir = tempfile::tempdir().unwrap();
        let (report, state) = run_script(&script(file), dir.path())?;
        let s = report.summary.unwrap();
        let want: u64 = state
            .groups
            .iter()
            .map(|g| {
                let n = &g.network;
                g.nodes + n.core.as_ref().map_or(0, |_| n.edge.count * n.edge.uplinks)
            })
            .sum();
        let got = state.cables.as_ref().unwrap().len() as u64;
        ensure!(got == want, "{file}: {got} cables, want {want}");
        let oracle = length_oracle(&state);
        ensure!((s.cable_length_m - oracle).abs() <= 1e-6, "{file}: {} m vs oracle {oracle} m", s.cable_length_m);
        notes.push(format!("{file} {got} cables {:.0} m", s.cable_length_m));
    }
    Ok(notes.join("; "))
}

fn end_to_end() -> Result<String, String> {
    let src = script("fig2-1pflops.cfs");
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let (report, _) = run_script(&src, dir.path())?;
        let s = report.summary.clone().unwrap();
        ensure!(s.tco_usd == s.capex_usd + s.opex_usd, "tco {} != capex + opex", s.tco_usd);
        let mut files = BTreeMap::new();
        for f in ["design.txt", "design.json", "cables.csv", "racks.svg"] {
            let bytes = std::fs::read(dir.path().join(f)).map_err(|e| format!("{f}: {e}"))?;
            files.insert(f, bytes);
        }
        let svg = String::from_utf8(files["racks.svg"].clone()).map_err(|e| e.to_string())?;
        roxmltree::Document::parse(&svg).map_err(|e| format!("svg: {e}"))?;
        let csv = String::from_utf8(files["cables.csv"].clone()).map_err(|e| e.to_string())?;
        ensure!(csv.lines().count() == 1 + s.node_count as usize + csv.matches("edge_core").count(), "csv rows");
        serde_json::from_slice::<serde_json::Value>(&files["design.json"]).map_err(|e| format!("json: {e}"))?;
        outputs.push(files);
    }
    ensure!(outputs[0] == outputs[1], "outputs differ between runs");
    Ok("summary, CSV, SVG written; byte-identical on re-run".into())
}

fn avalanche() -> Result<String, String> {
    let run = |file: &str| {
        let dir = tempfile::tempdir().unwrap();
        run_script(&script(file), dir.path())
    };
    let (blade, bs) = run("fig2-1pflops.cfs")?;
    let (rack, rs) = run("rack-server-1pflops.cfs")?;
    let (blade, rack) = (blade.summary.unwrap(), rack.summary.unwrap());
    let hardware = |s: &DesignState| {
        s.groups
            .iter()
            .map(|g| g.nodes as f64 * g.node.metrics.number("node_cost").unwrap_or(f64::NAN))
            .sum::<f64>()
    };
    let (hb, hr) = (hardware(&bs), hardware(&rs));
    ensure!(rack.node_count == blade.node_count, "node counts differ");
    ensure!(hr < hb, "node hardware {hr} not below {hb}");
    ensure!(rack.rack_count > blade.rack_count, "racks {} vs {}", rack.rack_count, blade.rack_count);
    ensure!(rack.floor_area_m2 > blade.floor_area_m2, "floor {} vs {}", rack.floor_area_m2, blade.floor_area_m2);
    Ok(format!(
        "node hardware {:+.1}%, racks {} -> {}, floor {:.1} -> {:.1} m2",
        (hr / hb - 1.0) * 100.0,
        blade.rack_count,
        rack.rack_count,
        blade.floor_area_m2,
        rack.floor_area_m2
    ))
}

fn http_get(addr: SocketAddr, path: &str) -> Result<(u16, String), String> {
    let mut s = TcpStream::connect(addr).map_err(|e| e.to_string())?;
    s.set_read_timeout(Some(Duration::from_secs(5))).ok();
    write!(s, "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").map_err(|e| e.to_string())?;
    let mut raw = String::new();
    s.read_to_string(&mut raw).map_err(|e| e.to_string())?;
    let (head, body) = raw.split_once("\r\n\r\n").ok_or("malformed response")?;
    let status = head
        .split_whitespace()
        .nth(1)
        .and_then(|c| c.parse().ok())
        .ok_or("no status")?;
    Ok((status, body.to_string()))
}

fn service_parity() -> Result<String, String> {
    let db = fixtures().join("db");
    let cat: Catalogs = load_catalogs(&[db.join("switches.xml"), db.join("ups.xml")])?;
    let shared = Arc::new(cat.clone());
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let listener = rt
        .block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))
        .map_err(|e| e.to_string())?;
    let addr = listener.local_addr().map_err(|e| e.to_string())?;
    rt.spawn(serve(listener, shared));

    let mut rng = StdRng::seed_from_u64(12);
    let (mut ok, mut rejected) = (0, 0);
    for q in 0..100 {
        let (path, status, body) = if q % 2 == 0 {
            let n = rng.random_range(1..=3000u64);
            let want = design_fattree(n, &cat.switches, None);
            let (status, body) = match &want {
                Ok(d) => (200, serde_json::to_string(d).unwrap()),
                Err(_) => (422, String::new()),
            };
            (format!("/network?nodes={n}&topology=fat-tree"), status, body)
        } else {
            let load = (rng.random_range(0.5..2000.0f64) * 100.0).round() / 100.0;
            let backup = rng.random_bool(0.5).then(|| rng.random_range(0..20u32));
            let want = design_ups(load, backup.map(f64::from), &cat.ups, None);
            let (status, body) = match &want {
                Ok(d) => (200, serde_json::to_string(d).unwrap()),
                Err(_) => (422, String::new()),
            };
            let path = match backup {
                Some(b) => format!("/ups?load_kw={load}&backup_min={b}"),
                None => format!("/ups?load_kw={load}"),
            };
            (path, status, body)
        };
        let (got_status, got_body) = http_get(addr, &path)?;
        ensure!(got_status == status, "{path}: status {got_status}, want {status}");
        if status == 200 {
            // both sides parsed from shortest round-trip text, so floats compare exactly
            let got: serde_json::Value = serde_json::from_str(&got_body).map_err(|e| format!("{path}: {e}"))?;
            let want: serde_json::Value = serde_json::from_str(&body).unwrap();
            ensure!(got == want, "{path}: body differs from in-process design");
            ok += 1;
        } else {
            rejected += 1;
        }
    }
    Ok(format!("100 queries over HTTP: {ok} designs identical, {rejected} infeasible matched"))
}

fn main() {
    let criteria: [(&str, Check, Duration); 12] = [
        ("node-count reproduction", node_counts, Duration::from_secs(1)),
        ("configuration graphs", config_graphs, Duration::from_secs(1)),
        ("opex", opex_values, Duration::from_millis(100)),
        ("tomato equivalent", tomatoes, Duration::from_millis(100)),
        ("inverse solver", inverse_solver, Duration::from_secs(10)),
        ("fat-tree optimality", fattree_optimality, Duration::from_secs(30)),
        ("placement invariants", placement_invariants, Duration::from_secs(10)),
        ("floor and serpentine", floor_plans, Duration::from_secs(10)),
        ("cabling", cabling, Duration::from_secs(30)),
        ("end to end", end_to_end, Duration::from_secs(5)),
        ("rack-server scenario", avalanche, Duration::from_secs(30)),
        ("service parity", service_parity, Duration::from_secs(10)),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.into_iter().enumerate() {
        if !only.is_empty() && !only.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let result = match result {
            Ok(_) if took > limit => Err(format!("took {took:.2?}, limit {limit:?}")),
            r => r,
        };
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({took:.2?}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({took:.2?}): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
