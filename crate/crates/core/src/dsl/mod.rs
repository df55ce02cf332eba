//! Script interpreter.
//!
//! Commands run in order against one [`DesignState`]. Execution stops at the
//! first failing command; the [`RunReport`] still records everything done up
//! to that point.

mod options;
mod parse;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use options::{Options, KEYS as OPTION_KEYS};
pub use parse::{parse_literal, parse_script, Command, Literal, Script, Statement, VOCABULARY};

use crate::econ::{summarize, DesignSummary, DesignView, EquipmentGroup};
use crate::expr::{parse_expr, Value};
use crate::graph::{ConfigGraph, Configuration};
use crate::layout::{
    build_compute_blocks, core_devices, plan_floor, route_cables_with, ups_devices, Cable, FloorPlan,
    Placement, Strategy,
};
use crate::net::{design_fattree_with, NetworkDesign, SwitchConfig};
use crate::par::Exec;
use crate::perf::{inverse_search, NodeInputs};
use crate::report::{cable_csv, draw_rows, summary_json, summary_text};
use crate::space::CandidatePool;
use crate::ups::{design_ups_with, UpsConfig, UpsDesign};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("option {key}: {msg}")]
    Option { key: String, msg: String },
    #[error("line {line}: {command}(): {msg}")]
    Command {
        line: usize,
        command: &'static str,
        msg: String,
    },
}

/// Where inputs are read from and outputs written to.
#[derive(Debug, Clone)]
pub struct RunContext {
    /// Relative database paths in the script resolve against this directory.
    pub script_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Settings that take precedence over `set_option` in the script.
    pub overrides: Vec<(String, Literal)>,
    pub exec: Exec,
}

impl RunContext {
    pub fn new(script_dir: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        RunContext {
            script_dir: script_dir.into(),
            out_dir: out_dir.into(),
            overrides: Vec::new(),
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct DesignState {
    pub options: Options,
    pub pool: Option<CandidatePool>,
    pub nodes: Option<u64>,
    pub performance: Option<f64>,
    pub network: Option<NetworkDesign>,
    pub ups: Option<UpsDesign>,
    pub groups: Vec<EquipmentGroup>,
    pub placement: Option<Placement>,
    pub floor: Option<FloorPlan>,
    pub cables: Option<Vec<Cable>>,
    pinned: BTreeSet<String>,
}

impl DesignState {
    pub fn view(&self) -> DesignView<'_> {
        DesignView {
            groups: &self.groups,
            placement: self.placement.as_ref(),
            floor: self.floor.as_ref(),
            cables: self.cables.as_deref(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub executed: usize,
    pub warnings: Vec<String>,
    pub outputs: Vec<PathBuf>,
    pub summary: Option<DesignSummary>,
    pub summary_text: Option<String>,
    pub error: Option<DslError>,
}

impl RunReport {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

pub struct Interpreter {
    pub state: DesignState,
    ctx: RunContext,
}

type Step = Result<(), String>;

fn resolve(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn load_configs(base: &Path, files: &[String], exec: Exec) -> Result<Vec<Configuration>, String> {
    let paths: Vec<PathBuf> = files.iter().map(|f| resolve(base, f)).collect();
    let graph = ConfigGraph::load(&paths).map_err(|e| e.to_string())?;
    graph.enumerate_with(exec).map_err(|e| e.to_string())
}

fn text_set(v: Option<&Value>) -> Option<BTreeSet<String>> {
    match v {
        Some(Value::Text(t)) => Some(BTreeSet::from([t.clone()])),
        Some(Value::TextSet(s)) => Some(s.clone()),
        _ => None,
    }
}

impl Interpreter {
    /// Applies the context overrides; a bad override is reported as an error.
    pub fn new(ctx: RunContext) -> Result<Interpreter, DslError> {
        let mut state = DesignState::default();
        for (key, value) in &ctx.overrides {
            state.options.set(key, value)?;
            state.pinned.insert(key.clone());
        }
        Ok(Interpreter { state, ctx })
    }

    pub fn run(&mut self, script: &Script) -> RunReport {
        let mut report = RunReport::default();
        for st in &script.statements {
            if let Err(msg) = self.step(&st.command, &mut report) {
                report.error = Some(DslError::Command {
                    line: st.line,
                    command: st.command.name(),
                    msg,
                });
                break;
            }
            report.executed += 1;
        }
        report
    }

    fn write(&self, file: &str, contents: &str, report: &mut RunReport) -> Step {
        let path = resolve(&self.ctx.out_dir, file);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
        }
        std::fs::write(&path, contents).map_err(|e| format!("{}: {e}", path.display()))?;
        report.outputs.push(path);
        Ok(())
    }

    fn pool(&mut self) -> Result<&mut CandidatePool, String> {
        self.state
            .pool
            .as_mut()
            .ok_or_else(|| "no configuration database is open; call open_db() first".to_string())
    }

    fn chosen(&self) -> Result<&Configuration, String> {
        let pool = self
            .state
            .pool
            .as_ref()
            .ok_or("no configuration database is open; call open_db() first")?;
        pool.chosen().ok_or_else(|| {
            format!(
                "exactly one configuration must remain, found {}; use select_best() and delete()",
                pool.len()
            )
        })
    }

    fn step(&mut self, cmd: &Command, report: &mut RunReport) -> Step {
        let exec = self.ctx.exec;
        match cmd {
            Command::OpenDb(files) => {
                let configs = load_configs(&self.ctx.script_dir, files, exec)?;
                if configs.is_empty() {
                    report.warnings.push("database yields no configurations".into());
                }
                self.state.pool = Some(CandidatePool::new(configs).with_exec(exec));
            }
            Command::Constraint(src) => {
                let w = self.pool()?.apply_constraint(src).map_err(|e| e.to_string())?;
                report.warnings.extend(w);
            }
            Command::Metric(src) => self.pool()?.define_metric(src).map_err(|e| e.to_string())?,
            Command::SelectBest { metric, direction } => {
                self.pool()?
                    .select_best(metric, *direction)
                    .map_err(|e| e.to_string())?;
            }
            Command::RankAndTrim { metric, fraction } => {
                self.pool()?
                    .rank_and_trim(metric, *fraction)
                    .map_err(|e| e.to_string())?
            }
            Command::Delete => self.pool()?.delete().map_err(|e| e.to_string())?,
            Command::UpdateMetrics => self.pool()?.update_metrics().map_err(|e| e.to_string())?,
            Command::SetOption { key, value } => {
                if self.state.pinned.contains(key) {
                    report
                        .warnings
                        .push(format!("set_option({key:?}) ignored: overridden on the command line"));
                } else {
                    self.state.options.set(key, value).map_err(|e| e.to_string())?;
                }
            }
            Command::Performance { target } => self.performance(*target)?,
            Command::Network { .. } => self.network(report)?,
            Command::Ups { backup_min } => self.ups(*backup_min)?,
            Command::AddGroup(name) => self.add_group(name)?,
            Command::Place { params } => self.place(params)?,
            Command::Cables { file } => {
                let (Some(p), Some(plan)) = (&self.state.placement, &self.state.floor) else {
                    return Err("placement required; call place() first".into());
                };
                let cables = route_cables_with(p, plan, exec).map_err(|e| e.to_string())?;
                let csv = cable_csv(&cables);
                self.state.cables = Some(cables);
                let file = file.clone().unwrap_or_else(|| self.state.options.cables_file.clone());
                self.write(&file, &csv, report)?;
            }
            Command::PrintDesign { file } => {
                if let Some(g) = self.unplaced().next() {
                    return Err(format!("group {:?} is not placed; call place() first", g.name));
                }
                let summary = summarize(self.state.view(), &self.state.options.costs).map_err(|e| e.to_string())?;
                let text = summary_text(&summary);
                let file = file.clone().unwrap_or_else(|| self.state.options.summary_file.clone());
                let sidecar = Path::new(&file).with_extension("json");
                self.write(&file, &text, report)?;
                self.write(&sidecar.to_string_lossy(), &summary_json(&summary), report)?;
                report.summary = Some(summary);
                report.summary_text = Some(text);
            }
            Command::DrawRows { rows, file } => {
                let (Some(p), Some(plan)) = (&self.state.placement, &self.state.floor) else {
                    return Err("placement required; call place() first".into());
                };
                let svg = draw_rows(p, plan, rows).map_err(|e| e.to_string())?;
                self.write(file, &svg, report)?;
            }
        }
        Ok(())
    }

    fn performance(&mut self, target: Option<f64>) -> Step {
        let spec = self.state.options.perf_spec();
        let node = self.chosen()?;
        let inputs = NodeInputs::from_metrics(&node.metrics, &spec).map_err(|e| e.to_string())?;
        let (nodes, perf) = match target {
            Some(t) => {
                let r = inverse_search(t, |n| inputs.performance(n)).map_err(|e| e.to_string())?;
                (r.nodes, r.performance)
            }
            None => {
                let n = node
                    .metrics
                    .number("nodes")
                    .ok_or("no target given and the configuration has no `nodes` metric")?;
                if !(n >= 1.0 && n.fract() == 0.0) {
                    return Err(format!("`nodes` = {n} is not a positive whole number"));
                }
                let n = n as u64;
                (n, inputs.performance(n).map_err(|e| e.to_string())?)
            }
        };
        let pool = self.pool()?;
        let c = &mut pool.configs_mut()[0];
        c.metrics.insert("nodes", Value::Number(nodes as f64));
        c.metrics.insert("performance", Value::Number(perf));
        self.state.nodes = Some(nodes);
        self.state.performance = Some(perf);
        self.state.network = None;
        self.state.ups = None;
        Ok(())
    }

    fn network(&mut self, report: &mut RunReport) -> Step {
        let nodes = self
            .state
            .nodes
            .ok_or("performance() required before network()")?;
        let node = self.chosen()?.clone();
        let opts = &self.state.options;
        let configs = load_configs(&self.ctx.script_dir, &opts.network_catalog, self.ctx.exec)?;
        let all = SwitchConfig::catalogue(&configs).map_err(|e| e.to_string())?;
        let techs = text_set(node.metrics.get("network_tech"));
        let vendor = node.metrics.text("network_vendor");
        let catalogue: Vec<SwitchConfig> = all
            .iter()
            .filter(|s| techs.as_ref().is_none_or(|t| !s.technology.is_disjoint(t)))
            .filter(|s| vendor.is_none_or(|v| s.vendor.as_deref() == Some(v)))
            .cloned()
            .collect();
        if catalogue.is_empty() {
            return Err(format!(
                "no switch in the catalogue matches technology {:?} and vendor {:?}",
                techs.unwrap_or_default(),
                vendor.unwrap_or("any")
            ));
        }
        if catalogue.len() < all.len() {
            report.warnings.push(format!(
                "network(): {} of {} switch configurations match the node",
                catalogue.len(),
                all.len()
            ));
        }
        let objective = parse_expr(&opts.network_objective).map_err(|e| format!("network.objective: {e}"))?;
        let design = design_fattree_with(nodes, &catalogue, Some(&objective), self.ctx.exec).map_err(|e| e.to_string())?;
        self.state.network = Some(design);
        self.state.ups = None;
        Ok(())
    }

    fn ups(&mut self, backup_min: Option<f64>) -> Step {
        let net = self
            .state
            .network
            .as_ref()
            .ok_or("network() required before ups()")?;
        let node = self.chosen()?;
        let nodes = self.state.nodes.unwrap_or(0);
        let node_power = node
            .metrics
            .number("node_power")
            .ok_or("node metric node_power is missing")?;
        let load_kw = (nodes as f64 * node_power + net.totals.power) / 1000.0;
        let opts = &self.state.options;
        let configs = load_configs(&self.ctx.script_dir, &opts.ups_catalog, self.ctx.exec)?;
        let catalogue = UpsConfig::catalogue(&configs).map_err(|e| e.to_string())?;
        let objective = parse_expr(&opts.ups_objective).map_err(|e| format!("ups.objective: {e}"))?;
        let backup = backup_min.or(opts.ups_backup_min);
        let design = design_ups_with(load_kw, backup, &catalogue, Some(&objective), self.ctx.exec).map_err(|e| e.to_string())?;
        self.state.ups = Some(design);
        Ok(())
    }

    fn add_group(&mut self, name: &str) -> Step {
        if name.is_empty() || name.contains(|c: char| c.is_whitespace() || c == ',') {
            return Err(format!("group name {name:?} must be non-empty without spaces or commas"));
        }
        if self.state.groups.iter().any(|g| g.name == name) {
            return Err(format!("group {name:?} already exists"));
        }
        let network = self
            .state
            .network
            .clone()
            .ok_or("network() required before add_group()")?;
        let node = self.chosen()?.clone();
        let st = &mut self.state;
        st.groups.push(EquipmentGroup {
            name: name.to_string(),
            node,
            nodes: st.nodes.take().unwrap_or(0),
            performance: st.performance.take().unwrap_or(0.0),
            network,
            ups: st.ups.take(),
        });
        st.network = None;
        Ok(())
    }

    fn unplaced(&self) -> impl Iterator<Item = &EquipmentGroup> {
        let placed = self.state.placement.as_ref().map_or(0, |p| p.groups.len());
        self.state.groups.iter().skip(placed)
    }

    fn place(&mut self, params: &std::collections::BTreeMap<String, Literal>) -> Step {
        let mut strategies = self.state.options.strategies;
        let spread = match params.get("spread") {
            None => None,
            Some(Literal::Number(n)) if *n >= 1.0 && n.fract() == 0.0 => Some(*n as u32),
            Some(other) => return Err(format!("place_params 'spread' must be a whole number >= 1, found {other}")),
        };
        for (key, value) in params {
            let target = match key.as_str() {
                "strategy" | "blocks" => &mut strategies.blocks,
                "core" => &mut strategies.core,
                "ups" => &mut strategies.ups,
                "spread" => continue,
                other => return Err(format!("unknown place_params key {other:?}")),
            };
            *target = match (value, spread) {
                (Literal::Str(s), Some(n)) if s == "spread" => Strategy::Spread(n),
                (Literal::Str(s), None) if s == "spread" => Strategy::Spread(1),
                _ => options::strategy(key, value).map_err(|e| e.to_string())?,
            };
        }
        if self.state.groups.is_empty() {
            return Err("add_group() required before place()".into());
        }
        let pending: Vec<EquipmentGroup> = self.unplaced().cloned().collect();
        if pending.is_empty() {
            return Err("every group is already placed".into());
        }
        let height = self.state.options.geometry.rack_height_u;
        let mut placement = self
            .state
            .placement
            .take()
            .unwrap_or_else(|| Placement::new(height));
        for g in pending {
            let result = build_compute_blocks(&g.name, &g.node.metrics, g.nodes, &g.network).and_then(|blocks| {
                let cores = core_devices(&g.name, &g.network);
                let ups = g.ups.as_ref().map(|u| ups_devices(&g.name, u)).unwrap_or_default();
                placement.place_group(&g.name, cores, blocks, ups, g.network.edge.uplinks, &strategies)
            });
            if let Err(e) = result {
                return Err(format!("group {:?}: {e}", g.name));
            }
        }
        let floor = plan_floor(placement.rack_count().max(1), &self.state.options.geometry).map_err(|e| e.to_string())?;
        self.state.placement = Some(placement);
        self.state.floor = Some(floor);
        self.state.cables = None;
        Ok(())
    }
}

/// Parses and runs `source` in one go.
pub fn execute(source: &str, ctx: RunContext) -> (RunReport, Option<DesignState>) {
    let script = match parse_script(source) {
        Ok(s) => s,
        Err(e) => {
            return (
                RunReport {
                    error: Some(e),
                    ..RunReport::default()
                },
                None,
            )
        }
    };
    let mut interp = match Interpreter::new(ctx) {
        Ok(i) => i,
        Err(e) => {
            return (
                RunReport {
                    error: Some(e),
                    ..RunReport::default()
                },
                None,
            )
        }
    };
    let report = interp.run(&script);
    (report, Some(interp.state))
}
