//! HTTP front end for the network and UPS designers.
//!
//! Handlers are plain functions from query parameters to a status code and
//! a JSON body, so they can be tested without a socket. [`router`] wraps
//! them for axum.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::{Json, Router};
use serde_json::{json, Value};

use clusterforge_core::expr::parse_expr;
use clusterforge_core::graph::ConfigGraph;
use clusterforge_core::net::{design_fattree, NetError, SwitchConfig};
use clusterforge_core::ups::{design_ups, UpsConfig, UpsError};

/// Catalogues loaded once at start-up and shared read-only.
#[derive(Debug, Clone, Default)]
pub struct Catalogs {
    pub switches: Vec<SwitchConfig>,
    pub ups: Vec<UpsConfig>,
}

/// Loads each file as its own database; a file is a switch catalogue when
/// its configurations carry `ports` and a UPS catalogue when they carry
/// `capacity_kw`.
pub fn load_catalogs(files: &[impl AsRef<Path>]) -> Result<Catalogs, String> {
    let mut cat = Catalogs::default();
    for f in files {
        let f = f.as_ref();
        let configs = ConfigGraph::load(&[f])
            .and_then(|g| g.enumerate())
            .map_err(|e| format!("{}: {e}", f.display()))?;
        let has = |m: &str| !configs.is_empty() && configs.iter().all(|c| c.metrics.contains(m));
        if has("ports") {
            cat.switches
                .extend(SwitchConfig::catalogue(&configs).map_err(|e| format!("{}: {e}", f.display()))?);
        } else if has("capacity_kw") {
            cat.ups
                .extend(UpsConfig::catalogue(&configs).map_err(|e| format!("{}: {e}", f.display()))?);
        } else {
            return Err(format!(
                "{}: neither a switch catalogue (ports) nor a UPS catalogue (capacity_kw)",
                f.display()
            ));
        }
    }
    // merged catalogues keep a unique, deterministic tie-break order
    for (i, s) in cat.switches.iter_mut().enumerate() {
        s.origin_index = i;
    }
    for (i, u) in cat.ups.iter_mut().enumerate() {
        u.origin_index = i;
    }
    Ok(cat)
}

pub type Response = (u16, Value);

fn error(status: u16, msg: impl Into<String>) -> Response {
    (status, json!({ "error": msg.into() }))
}

fn param<'a>(q: &'a BTreeMap<String, String>, name: &str) -> Option<&'a str> {
    q.get(name).map(String::as_str)
}

/// `GET /network?nodes=N&topology=fat-tree[&objective=formula]`
pub fn network_response(cat: &Catalogs, q: &BTreeMap<String, String>) -> Response {
    let Some(raw) = param(q, "nodes") else {
        return error(400, "missing query parameter nodes");
    };
    let Ok(nodes) = raw.trim().parse::<u64>() else {
        return error(400, format!("nodes = {raw:?} is not a whole number"));
    };
    if nodes == 0 {
        return error(400, "nodes must be at least 1");
    }
    if let Some(t) = param(q, "topology") {
        if t != "fat-tree" {
            return error(400, format!("unsupported topology {t:?}"));
        }
    }
    let objective = match param(q, "objective").map(parse_expr) {
        None => None,
        Some(Ok(e)) => Some(e),
        Some(Err(e)) => return error(400, format!("objective: {e}")),
    };
    match design_fattree(nodes, &cat.switches, objective.as_ref()) {
        Ok(d) => (200, serde_json::to_value(d).expect("design serialises")),
        Err(e @ (NetError::NoNodes | NetError::Objective(_))) => error(400, e.to_string()),
        Err(e) => error(422, e.to_string()),
    }
}

/// `GET /ups?load_kw=X[&backup_min=Y]`
pub fn ups_response(cat: &Catalogs, q: &BTreeMap<String, String>) -> Response {
    let Some(raw) = param(q, "load_kw") else {
        return error(400, "missing query parameter load_kw");
    };
    let Ok(load) = raw.trim().parse::<f64>() else {
        return error(400, format!("load_kw = {raw:?} is not a number"));
    };
    let backup = match param(q, "backup_min").map(|b| b.trim().parse::<f64>()) {
        None => None,
        Some(Ok(b)) => Some(b),
        Some(Err(_)) => return error(400, "backup_min is not a number"),
    };
    match design_ups(load, backup, &cat.ups, None) {
        Ok(d) => (200, serde_json::to_value(d).expect("design serialises")),
        Err(e @ (UpsError::BadLoad(_) | UpsError::BadBackup(_))) => error(400, e.to_string()),
        Err(e) => error(422, e.to_string()),
    }
}

fn reply((status, body): Response) -> impl IntoResponse {
    (StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR), Json(body))
}

pub fn router(cat: Arc<Catalogs>) -> Router {
    Router::new()
        .route(
            "/network",
            get(|State(c): State<Arc<Catalogs>>, Query(q): Query<BTreeMap<String, String>>| async move {
                reply(network_response(&c, &q))
            }),
        )
        .route(
            "/ups",
            get(|State(c): State<Arc<Catalogs>>, Query(q): Query<BTreeMap<String, String>>| async move {
                reply(ups_response(&c, &q))
            }),
        )
        .with_state(cat)
}

/// Serves on an already bound listener until the process ends.
pub async fn serve(listener: tokio::net::TcpListener, cat: Arc<Catalogs>) -> std::io::Result<()> {
    axum::serve(listener, router(cat)).await
}
