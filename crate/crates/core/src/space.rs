//! Pool of candidate configurations: pruning, derived metrics, ranking and
//! selection.

use thiserror::Error;

use crate::expr::{eval_expr, parse_expr, parse_formula, Expr, ExprError, Formula, Value};
use crate::graph::Configuration;
use crate::par::Exec;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("constraint {0:?} is not a boolean formula")]
    NonBoolean(String),
    #[error("expected a metric definition `name = formula`, found {0:?}")]
    NotADefinition(String),
    #[error("configuration {origin_index}: {source}")]
    Eval {
        origin_index: usize,
        source: ExprError,
    },
    #[error("configuration {origin_index}: metric {metric:?} is missing or not numeric")]
    NotNumeric { origin_index: usize, metric: String },
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("no configuration is selected")]
    NothingSelected,
    #[error("keep fraction {0} must lie in (0, 1]")]
    BadFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub name: String,
    pub value: Expr,
    pub source: String,
}

#[derive(Debug, Clone, Default)]
pub struct CandidatePool {
    configs: Vec<Configuration>,
    definitions: Vec<Definition>,
    selected: Vec<bool>,
    exec: Exec,
}

impl CandidatePool {
    pub fn new(configs: Vec<Configuration>) -> Self {
        let selected = vec![false; configs.len()];
        CandidatePool {
            configs,
            definitions: Vec::new(),
            selected,
            exec: Exec::default(),
        }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    /// Adds more configurations (e.g. from a second database) to the pool.
    /// Registered definitions are evaluated on the newcomers.
    pub fn extend(&mut self, configs: Vec<Configuration>) -> Result<(), SpaceError> {
        let start = self.configs.len();
        self.configs.extend(configs);
        self.selected.resize(self.configs.len(), false);
        let defs = self.definitions.clone();
        for def in &defs {
            self.evaluate_into(def, start)?;
        }
        Ok(())
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn configs_mut(&mut self) -> &mut [Configuration] {
        &mut self.configs
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn definitions(&self) -> &[Definition] {
        &self.definitions
    }

    pub fn selected(&self) -> impl Iterator<Item = &Configuration> {
        self.configs
            .iter()
            .zip(&self.selected)
            .filter(|(_, s)| **s)
            .map(|(c, _)| c)
    }

    /// Keeps the configurations satisfying `source`. Returns one warning per
    /// configuration on which the constraint could not be evaluated; such
    /// configurations are dropped.
    pub fn apply_constraint(&mut self, source: &str) -> Result<Vec<String>, SpaceError> {
        let expr = parse_expr(source)?;
        if !expr.is_boolean() {
            return Err(SpaceError::NonBoolean(source.to_string()));
        }
        let verdicts = self
            .exec
            .map(&self.configs, |c| eval_expr(&expr, &c.metrics));
        let mut warnings = Vec::new();
        let mut keep = Vec::with_capacity(verdicts.len());
        for (c, verdict) in self.configs.iter().zip(verdicts) {
            keep.push(match verdict {
                Ok(Value::Bool(b)) => b,
                Ok(other) => {
                    warnings.push(format!(
                        "configuration {}: constraint {source:?} gave {} instead of a boolean",
                        c.origin_index,
                        other.type_name()
                    ));
                    false
                }
                Err(err) => {
                    warnings.push(format!(
                        "configuration {}: constraint {source:?} not evaluable ({err}); discarded",
                        c.origin_index
                    ));
                    false
                }
            });
        }
        self.retain(&keep);
        if self.configs.is_empty() {
            warnings.push(format!("constraint {source:?} left the pool empty"));
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(warnings)
    }

    /// Evaluates `name = formula` on every configuration and registers it.
    pub fn define_metric(&mut self, source: &str) -> Result<(), SpaceError> {
        let Formula::Define { name, value } = parse_formula(source)? else {
            return Err(SpaceError::NotADefinition(source.to_string()));
        };
        let def = Definition {
            name,
            value,
            source: source.to_string(),
        };
        self.evaluate_into(&def, 0)?;
        self.definitions.push(def);
        Ok(())
    }

    fn evaluate_into(&mut self, def: &Definition, start: usize) -> Result<(), SpaceError> {
        let values = self.exec.map(&self.configs[start..], |c| {
            eval_expr(&def.value, &c.metrics).map_err(|source| SpaceError::Eval {
                origin_index: c.origin_index,
                source,
            })
        });
        let values = values.into_iter().collect::<Result<Vec<_>, _>>()?;
        for (c, v) in self.configs[start..].iter_mut().zip(values) {
            c.metrics.insert(def.name.clone(), v);
        }
        Ok(())
    }

    /// Re-runs every registered definition in registration order.
    pub fn update_metrics(&mut self) -> Result<(), SpaceError> {
        let defs = self.definitions.clone();
        for def in &defs {
            self.evaluate_into(def, 0)?;
        }
        Ok(())
    }

    fn numeric(&self, metric: &str) -> Result<Vec<f64>, SpaceError> {
        self.configs
            .iter()
            .map(|c| {
                c.metrics
                    .number(metric)
                    .ok_or_else(|| SpaceError::NotNumeric {
                        origin_index: c.origin_index,
                        metric: metric.to_string(),
                    })
            })
            .collect()
    }

    /// Orders pool positions best-first: by value in `direction`, then by
    /// `origin_index`.
    fn ranking(&self, metric: &str, direction: Direction) -> Result<Vec<usize>, SpaceError> {
        let values = self.numeric(metric)?;
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| {
            let by_value = match direction {
                Direction::Min => values[a].total_cmp(&values[b]),
                Direction::Max => values[b].total_cmp(&values[a]),
            };
            by_value.then_with(|| {
                self.configs[a]
                    .origin_index
                    .cmp(&self.configs[b].origin_index)
            })
        });
        Ok(order)
    }

    /// Marks the single best configuration under `metric` as selected.
    pub fn select_best(&mut self, metric: &str, direction: Direction) -> Result<&Configuration, SpaceError> {
        if self.configs.is_empty() {
            return Err(SpaceError::EmptyPool);
        }
        let best = self.ranking(metric, direction)?[0];
        self.selected.iter_mut().for_each(|s| *s = false);
        self.selected[best] = true;
        Ok(&self.configs[best])
    }

    /// Drops every configuration that is not selected.
    pub fn delete(&mut self) -> Result<(), SpaceError> {
        if !self.selected.iter().any(|&s| s) {
            return Err(SpaceError::NothingSelected);
        }
        let keep = self.selected.clone();
        self.retain(&keep);
        Ok(())
    }

    /// Keeps the best `ceil(keep_fraction * len)` configurations (min direction).
    pub fn rank_and_trim(&mut self, metric: &str, keep_fraction: f64) -> Result<(), SpaceError> {
        if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
            return Err(SpaceError::BadFraction(keep_fraction));
        }
        if self.configs.is_empty() {
            return Err(SpaceError::EmptyPool);
        }
        let n = self.configs.len();
        // 1e-9 absorbs representation error such as 0.4 * 5 = 2.0000000000000004
        let keep_count = ((keep_fraction * n as f64) - 1e-9).ceil().max(1.0) as usize;
        let order = self.ranking(metric, Direction::Min)?;
        let mut keep = vec![false; n];
        for &i in &order[..keep_count.min(n)] {
            keep[i] = true;
        }
        self.retain(&keep);
        Ok(())
    }

    fn retain(&mut self, keep: &[bool]) {
        let mut it = keep.iter();
        self.configs.retain(|_| *it.next().unwrap());
        let mut it = keep.iter();
        self.selected.retain(|_| *it.next().unwrap());
    }

    /// The single remaining configuration, if the pool has been narrowed to one.
    pub fn chosen(&self) -> Option<&Configuration> {
        match self.configs.as_slice() {
            [only] => Some(only),
            _ => None,
        }
    }
}
