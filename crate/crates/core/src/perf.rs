//! Direct and inverse performance models.
//!
//! A direct model maps (node metrics, node count) to cluster performance. The
//! inverse solver finds the least node count reaching a target by doubling
//! the node count until the target is met, then bisecting the last interval
//! on integers.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{Metrics, Value};

/// Largest node count probed by the doubling pass.
pub const NODE_CAP: u64 = 1 << 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerfError {
    #[error("node metric {0:?} is missing or not numeric")]
    MissingMetric(String),
    #[error("no network exponent for technology {0:?}")]
    UnknownNetwork(String),
    #[error("invalid model parameter: {0}")]
    BadParameter(String),
    #[error("node count must be at least 1")]
    ZeroNodes,
    #[error("target {target} must be positive and finite")]
    BadTarget { target: f64 },
    #[error("target {target} unreachable within {NODE_CAP} nodes (reached {last})")]
    Unreachable { target: f64, last: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PerfModelSpec {
    /// `nodes * node_peak_performance`
    Peak,
    /// `r0 * (cpu_frequency / f0) * (nodes * cores_per_node) ^ gamma(network)`
    Analytic {
        r0: f64,
        f0: f64,
        gamma: BTreeMap<String, f64>,
    },
}

impl PerfModelSpec {
    pub fn analytic_default() -> Self {
        PerfModelSpec::Analytic {
            r0: 1.0,
            f0: 2.8,
            gamma: BTreeMap::from([("InfiniBand".into(), 0.95), ("10GbE".into(), 0.85)]),
        }
    }

    pub fn validate(&self) -> Result<(), PerfError> {
        if let PerfModelSpec::Analytic { r0, f0, gamma } = self {
            if !(r0.is_finite() && *r0 > 0.0) {
                return Err(PerfError::BadParameter(format!("r0 = {r0} must be positive")));
            }
            if !(f0.is_finite() && *f0 > 0.0) {
                return Err(PerfError::BadParameter(format!("f0 = {f0} must be positive")));
            }
            for (tech, g) in gamma {
                if !(*g > 0.0 && *g <= 1.0) {
                    return Err(PerfError::BadParameter(format!(
                        "gamma for {tech} = {g} must lie in (0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Per-node inputs for a model, extracted from configuration metrics.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeInputs {
    Peak {
        node_peak: f64,
    },
    Analytic {
        rate: f64,
        cores_per_node: f64,
        gamma: f64,
    },
}

fn metric(m: &Metrics, name: &str) -> Result<f64, PerfError> {
    m.number(name)
        .ok_or_else(|| PerfError::MissingMetric(name.to_string()))
}

impl NodeInputs {
    pub fn from_metrics(m: &Metrics, spec: &PerfModelSpec) -> Result<NodeInputs, PerfError> {
        spec.validate()?;
        match spec {
            PerfModelSpec::Peak => {
                let node_peak = metric(m, "node_peak_performance")?;
                if node_peak <= 0.0 {
                    return Err(PerfError::BadParameter(
                        "node_peak_performance must be positive".into(),
                    ));
                }
                Ok(NodeInputs::Peak { node_peak })
            }
            PerfModelSpec::Analytic { r0, f0, gamma } => {
                let freq = metric(m, "cpu_frequency")?;
                let cores = metric(m, "cores_per_node")?;
                if freq <= 0.0 || cores <= 0.0 {
                    return Err(PerfError::BadParameter(
                        "cpu_frequency and cores_per_node must be positive".into(),
                    ));
                }
                // the best fabric the node carries wins
                let techs: Vec<&str> = match m.get("network_tech") {
                    Some(Value::Text(t)) => vec![t.as_str()],
                    Some(Value::TextSet(set)) => set.iter().map(String::as_str).collect(),
                    _ => return Err(PerfError::MissingMetric("network_tech".into())),
                };
                let g = techs
                    .iter()
                    .filter_map(|t| gamma.get(*t).copied())
                    .fold(None, |best: Option<f64>, g| Some(best.map_or(g, |b| b.max(g))))
                    .ok_or_else(|| PerfError::UnknownNetwork(techs.join(", ")))?;
                Ok(NodeInputs::Analytic {
                    rate: r0 * freq / f0,
                    cores_per_node: cores,
                    gamma: g,
                })
            }
        }
    }

    /// Cluster performance with `nodes` nodes.
    pub fn performance(&self, nodes: u64) -> Result<f64, PerfError> {
        if nodes == 0 {
            return Err(PerfError::ZeroNodes);
        }
        let n = nodes as f64;
        Ok(match self {
            NodeInputs::Peak { node_peak } => n * node_peak,
            NodeInputs::Analytic {
                rate,
                cores_per_node,
                gamma,
            } => rate * (n * cores_per_node).powf(*gamma),
        })
    }
}

pub fn direct_performance(m: &Metrics, nodes: u64, spec: &PerfModelSpec) -> Result<f64, PerfError> {
    NodeInputs::from_metrics(m, spec)?.performance(nodes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InverseOutcome {
    pub nodes: u64,
    pub performance: f64,
    /// Number of direct-model evaluations the search made.
    pub model_calls: u32,
}

/// Least `n >= 1` with `model(n) >= target`, for a strictly increasing model.
pub fn inverse_search<F>(target: f64, mut model: F) -> Result<InverseOutcome, PerfError>
where
    F: FnMut(u64) -> Result<f64, PerfError>,
{
    if !(target.is_finite() && target > 0.0) {
        return Err(PerfError::BadTarget { target });
    }
    let mut calls = 0u32;
    let mut eval = |n: u64| {
        calls += 1;
        model(n)
    };

    let mut hi = 1u64;
    let mut hi_perf = eval(hi)?;
    while hi_perf < target {
        if hi >= NODE_CAP {
            return Err(PerfError::Unreachable {
                target,
                last: hi_perf,
            });
        }
        hi *= 2;
        hi_perf = eval(hi)?;
    }
    // invariant: lo fails (or is 0), hi meets the target
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let p = eval(mid)?;
        if p >= target {
            hi = mid;
            hi_perf = p;
        } else {
            lo = mid;
        }
    }
    Ok(InverseOutcome {
        nodes: hi,
        performance: hi_perf,
        model_calls: calls,
    })
}

pub fn inverse_performance(
    target: f64,
    m: &Metrics,
    spec: &PerfModelSpec,
) -> Result<InverseOutcome, PerfError> {
    let inputs = NodeInputs::from_metrics(m, spec)?;
    inverse_search(target, |n| inputs.performance(n))
}

/// Upper bound on direct-model calls for an answer `n`: `2*ceil(log2 n) + 2`.
pub fn call_budget(answer: u64) -> u32 {
    let ceil_log2 = if answer <= 1 {
        0
    } else {
        64 - (answer - 1).leading_zeros()
    };
    2 * ceil_log2 + 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn node(peak: f64) -> Metrics {
        let mut m = Metrics::new();
        m.set_number("node_peak_performance", peak).unwrap();
        m
    }

    fn analytic_node(tech: &str, freq: f64, cores: f64) -> Metrics {
        let mut m = Metrics::new();
        m.set_number("cpu_frequency", freq).unwrap();
        m.set_number("cores_per_node", cores).unwrap();
        m.insert("network_tech", Value::TextSet(BTreeSet::from([tech.to_string()])));
        m
    }

    #[test]
    fn peak_direct() {
        let p = direct_performance(&node(448.0), 2233, &PerfModelSpec::Peak).unwrap();
        assert_eq!(p, 1_000_384.0);
    }

    #[test]
    fn analytic_identity_point() {
        let spec = PerfModelSpec::Analytic {
            r0: 1.0,
            f0: 2.8,
            gamma: BTreeMap::from([("InfiniBand".into(), 0.95)]),
        };
        let p = direct_performance(&analytic_node("InfiniBand", 2.8, 1.0), 1, &spec).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn infiniband_beats_ethernet() {
        let spec = PerfModelSpec::analytic_default();
        let ib = direct_performance(&analytic_node("InfiniBand", 2.8, 20.0), 64, &spec).unwrap();
        let eth = direct_performance(&analytic_node("10GbE", 2.8, 20.0), 64, &spec).unwrap();
        assert!((ib - 1280f64.powf(0.95)).abs() < 1e-9);
        assert!((eth - 1280f64.powf(0.85)).abs() < 1e-9);
        assert!((ib - 895.054).abs() < 1e-3, "{ib}");
        assert!((eth - 437.652).abs() < 1e-3, "{eth}");
        assert!(ib > eth);
    }

    #[test]
    fn analytic_errors() {
        let spec = PerfModelSpec::analytic_default();
        assert!(matches!(
            direct_performance(&analytic_node("Myrinet", 2.8, 20.0), 1, &spec),
            Err(PerfError::UnknownNetwork(_))
        ));
        assert!(matches!(
            direct_performance(&node(448.0), 1, &spec),
            Err(PerfError::MissingMetric(_))
        ));
        let bad = PerfModelSpec::Analytic {
            r0: 1.0,
            f0: 2.8,
            gamma: BTreeMap::from([("InfiniBand".into(), 1.5)]),
        };
        assert!(matches!(bad.validate(), Err(PerfError::BadParameter(_))));
    }

    #[test]
    fn inverse_table_values() {
        let r = inverse_performance(100_000.0, &node(448.0), &PerfModelSpec::Peak).unwrap();
        assert_eq!(r.nodes, 224);
        assert!(r.model_calls <= 18, "{}", r.model_calls);
        let r = inverse_performance(1_000_000.0, &node(448.0), &PerfModelSpec::Peak).unwrap();
        assert_eq!(r.nodes, 2233);
        assert!(r.model_calls <= 26, "{}", r.model_calls);
    }

    #[test]
    fn inverse_boundary() {
        let r = inverse_performance(448.0, &node(448.0), &PerfModelSpec::Peak).unwrap();
        assert_eq!(r.nodes, 1);
        assert!(r.model_calls <= 2);
    }

    #[test]
    fn inverse_unreachable() {
        let err = inverse_search(10.0, |_| Ok(1.0)).unwrap_err();
        assert!(matches!(err, PerfError::Unreachable { last, .. } if last == 1.0));
        assert!(matches!(
            inverse_search(0.0, |_| Ok(1.0)),
            Err(PerfError::BadTarget { .. })
        ));
    }

    #[test]
    fn budget() {
        assert_eq!(call_budget(1), 2);
        assert_eq!(call_budget(2), 4);
        assert_eq!(call_budget(224), 18);
        assert_eq!(call_budget(2233), 26);
        assert_eq!(call_budget(256), 18);
    }
}
