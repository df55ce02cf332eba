//! Configuration graphs: directed acyclic multipartite graphs whose paths
//! are component configurations.
//!
//! A database is one or more XML files:
//!
//! ```xml
//! <database>
//!   <vertex id="B" label="Intel Xeon E5-2690 v2">
//!     <expr metric="node_cost" value="+2850"/>
//!   </vertex>
//!   <partition name="cpu1" position="2">
//!     <vertex id="A" label="...">...</vertex>   <!-- define and instantiate -->
//!     <use vertex="B"/>                          <!-- instantiate only -->
//!   </partition>
//!   <edges>
//!     <edge from="M" to="cpu1:B"/>
//!   </edges>
//! </database>
//! ```
//!
//! Edge endpoints name a vertex id (every instance of it) or a qualified
//! `partition:vertex` instance. An edge joins instances in consecutive
//! partitions only. A pair of consecutive partitions with no edges between
//! them is fully connected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::expr::{is_identifier, parse_vertex_expr, ExprError, Metrics, VertexExpr};
use crate::par::Exec;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{file}: XML error: {msg}")]
    Xml { file: String, msg: String },
    #[error("{file}:{line}: <{element}>: {msg}")]
    Schema {
        file: String,
        line: u32,
        element: String,
        msg: String,
    },
    #[error("duplicate partition position {position} ({first} and {second})")]
    DuplicatePosition {
        position: u32,
        first: String,
        second: String,
    },
    #[error("partition {partition:?} uses unknown vertex {vertex:?}")]
    UnknownVertex { partition: String, vertex: String },
    #[error("edge {from:?} -> {to:?} references an unknown instance")]
    UnknownInstance { from: String, to: String },
    #[error("edge {from:?} -> {to:?} does not join consecutive partitions")]
    NonConsecutiveEdge { from: String, to: String },
    #[error("graph has no partitions")]
    NoPartitions,
    #[error("partition {0:?} has no members")]
    EmptyPartition(String),
    #[error("path {path}: {source}")]
    Eval {
        path: String,
        source: ExprError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexDef {
    pub id: String,
    pub label: String,
    pub exprs: Vec<VertexExpr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub name: String,
    pub position: u32,
    /// Vertex ids instantiated in this partition, in declaration order.
    pub members: Vec<String>,
}

/// Unresolved edge as written in a database file.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct EdgeRef {
    from: String,
    to: String,
}

/// Accumulates database files; [`DbBuilder::build`] resolves them into a graph.
#[derive(Debug, Default, Clone)]
pub struct DbBuilder {
    vertices: BTreeMap<String, VertexDef>,
    partitions: Vec<Partition>,
    edges: Vec<EdgeRef>,
}

impl DbBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_file(&mut self, path: &Path) -> Result<&mut Self, GraphError> {
        let text = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.add_str(&path.display().to_string(), &text)
    }

    /// Merges one database document; `file` is only used in error messages.
    pub fn add_str(&mut self, file: &str, text: &str) -> Result<&mut Self, GraphError> {
        let doc = roxmltree::Document::parse(text).map_err(|e| GraphError::Xml {
            file: file.to_string(),
            msg: e.to_string(),
        })?;
        let schema = |node: roxmltree::Node, msg: String| GraphError::Schema {
            file: file.to_string(),
            line: doc.text_pos_at(node.range().start).row,
            element: node.tag_name().name().to_string(),
            msg,
        };
        let root = doc.root_element();
        if root.tag_name().name() != "database" {
            return Err(schema(root, "root element must be <database>".into()));
        }
        for child in root.children().filter(|n| n.is_element()) {
            match child.tag_name().name() {
                "vertex" => {
                    self.define_vertex(child, &schema)?;
                }
                "partition" => self.add_partition(child, &schema)?,
                "edges" => {
                    for edge in child.children().filter(|n| n.is_element()) {
                        if edge.tag_name().name() != "edge" {
                            return Err(schema(edge, "expected <edge>".into()));
                        }
                        let from = required(edge, "from", &schema)?;
                        let to = required(edge, "to", &schema)?;
                        self.edges.push(EdgeRef { from, to });
                    }
                }
                other => return Err(schema(child, format!("unexpected element <{other}>"))),
            }
        }
        Ok(self)
    }

    fn define_vertex<F>(&mut self, node: roxmltree::Node, schema: &F) -> Result<String, GraphError>
    where
        F: Fn(roxmltree::Node, String) -> GraphError,
    {
        let id = required(node, "id", schema)?;
        let label = node.attribute("label").unwrap_or(&id).to_string();
        let mut exprs = Vec::new();
        for e in node.children().filter(|n| n.is_element()) {
            if e.tag_name().name() != "expr" {
                return Err(schema(e, "expected <expr>".into()));
            }
            let metric = required(e, "metric", schema)?;
            let value = e
                .attribute("value")
                .ok_or_else(|| schema(e, "missing attribute \"value\"".into()))?;
            let expr = parse_vertex_expr(&metric, value).map_err(|err| schema(e, err.to_string()))?;
            exprs.push(expr);
        }
        self.vertices.insert(
            id.clone(),
            VertexDef {
                id: id.clone(),
                label,
                exprs,
            },
        );
        Ok(id)
    }

    fn add_partition<F>(&mut self, node: roxmltree::Node, schema: &F) -> Result<(), GraphError>
    where
        F: Fn(roxmltree::Node, String) -> GraphError,
    {
        let name = required(node, "name", schema)?;
        if !is_identifier(&name) {
            return Err(schema(node, format!("partition name {name:?} is not an identifier")));
        }
        let position = match node.attribute("position") {
            Some(p) => Some(
                p.parse::<u32>()
                    .ok()
                    .filter(|&p| p > 0)
                    .ok_or_else(|| schema(node, format!("position {p:?} is not a positive integer")))?,
            ),
            None => None,
        };
        let mut members = Vec::new();
        for child in node.children().filter(|n| n.is_element()) {
            let id = match child.tag_name().name() {
                "vertex" => self.define_vertex(child, schema)?,
                "use" => required(child, "vertex", schema)?,
                other => return Err(schema(child, format!("unexpected element <{other}>"))),
            };
            members.push(id);
        }
        if let Some(existing) = self.partitions.iter_mut().find(|p| p.name == name) {
            if position.is_some_and(|p| p != existing.position) {
                return Err(schema(
                    node,
                    format!(
                        "partition {name:?} redeclared with position {} (was {})",
                        position.unwrap(),
                        existing.position
                    ),
                ));
            }
            for id in members {
                if !existing.members.contains(&id) {
                    existing.members.push(id);
                }
            }
            return Ok(());
        }
        let position =
            position.ok_or_else(|| schema(node, "new partition needs a \"position\"".into()))?;
        if let Some(other) = self.partitions.iter().find(|p| p.position == position) {
            return Err(GraphError::DuplicatePosition {
                position,
                first: other.name.clone(),
                second: name,
            });
        }
        self.partitions.push(Partition {
            name,
            position,
            members,
        });
        Ok(())
    }

    pub fn build(&self) -> Result<ConfigGraph, GraphError> {
        if self.partitions.is_empty() {
            return Err(GraphError::NoPartitions);
        }
        let mut partitions = self.partitions.clone();
        partitions.sort_by_key(|p| p.position);

        let mut instances = Vec::new();
        let mut layers = Vec::new();
        for (pi, p) in partitions.iter().enumerate() {
            if p.members.is_empty() {
                return Err(GraphError::EmptyPartition(p.name.clone()));
            }
            let mut layer = Vec::new();
            for id in &p.members {
                let def = self.vertices.get(id).ok_or_else(|| GraphError::UnknownVertex {
                    partition: p.name.clone(),
                    vertex: id.clone(),
                })?;
                layer.push(instances.len());
                instances.push(Instance {
                    id: format!("{}:{}", p.name, id),
                    partition: pi,
                    vertex: def.clone(),
                });
            }
            layers.push(layer);
        }

        let matches = |pattern: &str, inst: &Instance| -> bool {
            match pattern.split_once(':') {
                Some(_) => inst.id == pattern,
                None => inst.vertex.id == pattern,
            }
        };
        // successors[i] for instance i; None means "not yet explicit"
        let mut explicit = vec![false; partitions.len()];
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); instances.len()];
        for edge in &self.edges {
            let froms: Vec<usize> = (0..instances.len())
                .filter(|&i| matches(&edge.from, &instances[i]))
                .collect();
            let tos: Vec<usize> = (0..instances.len())
                .filter(|&i| matches(&edge.to, &instances[i]))
                .collect();
            if froms.is_empty() || tos.is_empty() {
                return Err(GraphError::UnknownInstance {
                    from: edge.from.clone(),
                    to: edge.to.clone(),
                });
            }
            let mut joined = false;
            for &a in &froms {
                for &b in &tos {
                    if instances[b].partition == instances[a].partition + 1 {
                        explicit[instances[a].partition] = true;
                        if !succ[a].contains(&b) {
                            succ[a].push(b);
                        }
                        joined = true;
                    }
                }
            }
            if !joined {
                return Err(GraphError::NonConsecutiveEdge {
                    from: edge.from.clone(),
                    to: edge.to.clone(),
                });
            }
        }
        for (pi, layer) in layers.iter().enumerate().take(layers.len() - 1) {
            let next = &layers[pi + 1];
            for &a in layer {
                if explicit[pi] {
                    // keep successors in member order of the next partition
                    succ[a].sort_by_key(|b| next.iter().position(|x| x == b));
                } else {
                    succ[a] = next.clone();
                }
            }
        }

        Ok(ConfigGraph {
            partitions,
            instances,
            layers,
            succ,
        })
    }
}

fn required<F>(node: roxmltree::Node, attr: &str, schema: &F) -> Result<String, GraphError>
where
    F: Fn(roxmltree::Node, String) -> GraphError,
{
    node.attribute(attr)
        .map(str::to_string)
        .ok_or_else(|| schema(node, format!("missing attribute {attr:?}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    /// `partition:vertex`
    pub id: String,
    pub partition: usize,
    pub vertex: VertexDef,
}

/// An immutable, resolved configuration graph.
#[derive(Debug, Clone)]
pub struct ConfigGraph {
    partitions: Vec<Partition>,
    instances: Vec<Instance>,
    layers: Vec<Vec<usize>>,
    succ: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Configuration {
    pub metrics: Metrics,
    /// Instance ids, one per partition.
    pub path: Vec<String>,
    /// Vertex labels along the path.
    pub labels: Vec<String>,
    pub origin_index: usize,
}

impl Configuration {
    pub fn path_string(&self) -> String {
        self.path.join(" -> ")
    }

    /// Non-empty labels of the chosen vertices joined with " + ".
    pub fn label(&self) -> String {
        self.labels
            .iter()
            .filter(|l| !l.is_empty())
            .map(String::as_str)
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

impl ConfigGraph {
    /// Loads and merges database files in order.
    pub fn load(files: &[impl AsRef<Path>]) -> Result<ConfigGraph, GraphError> {
        let mut builder = DbBuilder::new();
        for f in files {
            builder.add_file(f.as_ref())?;
        }
        builder.build()
    }

    pub fn parse(text: &str) -> Result<ConfigGraph, GraphError> {
        DbBuilder::new().add_str("<string>", text)?.build()
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    /// Successor instance indices of instance `i`.
    pub fn successors(&self, i: usize) -> &[usize] {
        &self.succ[i]
    }

    pub fn first_layer(&self) -> &[usize] {
        &self.layers[0]
    }

    /// Number of Start→End paths, counted without materialising them.
    pub fn path_count(&self) -> u128 {
        let mut ways = vec![0u128; self.instances.len()];
        for &i in self.layers.last().unwrap() {
            ways[i] = 1;
        }
        for layer in self.layers.iter().rev().skip(1) {
            for &i in layer {
                ways[i] = self.succ[i].iter().map(|&j| ways[j]).sum();
            }
        }
        self.layers[0].iter().map(|&i| ways[i]).sum()
    }

    pub fn enumerate(&self) -> Result<Vec<Configuration>, GraphError> {
        self.enumerate_with(Exec::default())
    }

    /// Depth-first enumeration in partition order and member order.
    ///
    /// Sub-trees rooted at first-partition instances are walked independently
    /// and concatenated, so `origin_index` is the same for every policy.
    pub fn enumerate_with(&self, exec: Exec) -> Result<Vec<Configuration>, GraphError> {
        let roots = self.first_layer().to_vec();
        let chunks = exec.try_map(&roots, |&root| {
            let mut out = Vec::new();
            let mut path = vec![root];
            let mut metrics = Metrics::new();
            self.walk(&mut path, &mut metrics, &mut out)?;
            Ok::<_, (Vec<usize>, ExprError)>(out)
        });
        let chunks = chunks.map_err(|(path, source)| GraphError::Eval {
            path: self.describe(&path),
            source,
        })?;
        let mut configs = Vec::new();
        for chunk in chunks {
            for (path, metrics) in chunk {
                configs.push(Configuration {
                    metrics,
                    path: path.iter().map(|&i| self.instances[i].id.clone()).collect(),
                    labels: path
                        .iter()
                        .map(|&i| self.instances[i].vertex.label.clone())
                        .collect(),
                    origin_index: configs.len(),
                });
            }
        }
        if configs.is_empty() {
            log::warn!("configuration graph yields no paths");
        }
        Ok(configs)
    }

    fn describe(&self, path: &[usize]) -> String {
        path.iter()
            .map(|&i| self.instances[i].id.as_str())
            .collect::<Vec<_>>()
            .join(" -> ")
    }

    #[allow(clippy::type_complexity)]
    fn walk(
        &self,
        path: &mut Vec<usize>,
        metrics: &mut Metrics,
        out: &mut Vec<(Vec<usize>, Metrics)>,
    ) -> Result<(), (Vec<usize>, ExprError)> {
        let here = *path.last().unwrap();
        let saved = metrics.clone();
        for e in &self.instances[here].vertex.exprs {
            e.apply_in_place(metrics).map_err(|err| (path.clone(), err))?;
        }
        if self.instances[here].partition + 1 == self.layers.len() {
            out.push((path.clone(), metrics.clone()));
        } else {
            for &next in &self.succ[here] {
                path.push(next);
                self.walk(path, metrics, out)?;
                path.pop();
            }
        }
        *metrics = saved;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BY_THREE: &str = r#"
        <database>
          <partition name="a" position="1">
            <vertex id="a1"><expr metric="cost" value="+1"/></vertex>
            <vertex id="a2"><expr metric="cost" value="+2"/></vertex>
          </partition>
          <partition name="b" position="2">
            <vertex id="b1"><expr metric="cost" value="+10"/></vertex>
            <vertex id="b2"><expr metric="cost" value="+20"/></vertex>
            <vertex id="b3"><expr metric="cost" value="+30"/></vertex>
          </partition>
        </database>"#;

    #[test]
    fn full_connectivity_by_default() {
        let g = ConfigGraph::parse(TWO_BY_THREE).unwrap();
        assert_eq!(g.path_count(), 6);
        let configs = g.enumerate().unwrap();
        let costs: Vec<f64> = configs
            .iter()
            .map(|c| c.metrics.number("cost").unwrap())
            .collect();
        assert_eq!(costs, vec![11.0, 21.0, 31.0, 12.0, 22.0, 32.0]);
        assert_eq!(configs[4].path, vec!["a:a2", "b:b2"]);
        assert!(configs.iter().enumerate().all(|(i, c)| c.origin_index == i));
    }

    #[test]
    fn single_partition() {
        let g = ConfigGraph::parse(
            r#"<database><partition name="p" position="1"><vertex id="A"/><vertex id="B"/></partition></database>"#,
        )
        .unwrap();
        assert_eq!(g.enumerate().unwrap().len(), 2);
        assert_eq!(g.path_count(), 2);
    }

    #[test]
    fn explicit_edges_restrict_pair() {
        let text = TWO_BY_THREE.replace(
            "</database>",
            r#"<edges><edge from="a1" to="b3"/><edge from="a2" to="b1"/><edge from="a2" to="b:b2"/></edges></database>"#,
        );
        let g = ConfigGraph::parse(&text).unwrap();
        assert_eq!(g.path_count(), 3);
        let paths: Vec<Vec<String>> = g.enumerate().unwrap().into_iter().map(|c| c.path).collect();
        assert_eq!(
            paths,
            vec![
                vec!["a:a1", "b:b3"],
                vec!["a:a2", "b:b1"],
                vec!["a:a2", "b:b2"]
            ]
        );
    }

    #[test]
    fn dead_end_contributes_nothing() {
        let text = TWO_BY_THREE.replace(
            "</database>",
            r#"<edges><edge from="a1" to="b1"/></edges></database>"#,
        );
        let g = ConfigGraph::parse(&text).unwrap();
        assert_eq!(g.path_count(), 1);
        assert_eq!(g.enumerate().unwrap().len(), 1);
    }

    #[test]
    fn later_definition_wins() {
        let mut b = DbBuilder::new();
        b.add_str("one", TWO_BY_THREE).unwrap();
        b.add_str(
            "two",
            r#"<database><vertex id="b1"><expr metric="cost" value="+100"/></vertex></database>"#,
        )
        .unwrap();
        let configs = b.build().unwrap().enumerate().unwrap();
        assert_eq!(configs[0].metrics.number("cost"), Some(101.0));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            ConfigGraph::parse("<database/>"),
            Err(GraphError::NoPartitions)
        ));
        let dup = r#"<database><partition name="a" position="1"><vertex id="x"/></partition>
            <partition name="b" position="1"><vertex id="y"/></partition></database>"#;
        assert!(matches!(
            ConfigGraph::parse(dup),
            Err(GraphError::DuplicatePosition { position: 1, .. })
        ));
        let bad_edge = TWO_BY_THREE.replace(
            "</database>",
            r#"<edges><edge from="a1" to="zz"/></edges></database>"#,
        );
        assert!(matches!(
            ConfigGraph::parse(&bad_edge),
            Err(GraphError::UnknownInstance { .. })
        ));
        let bad_expr = r#"<database>
<partition name="a" position="1"><vertex id="x"><expr metric="c" value="+abc"/></vertex></partition></database>"#;
        match ConfigGraph::parse(bad_expr) {
            Err(GraphError::Schema { line, element, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(element, "expr");
            }
            other => panic!("{other:?}"),
        }
        let unknown_use = r#"<database><partition name="a" position="1"><use vertex="q"/></partition></database>"#;
        assert!(matches!(
            ConfigGraph::parse(unknown_use),
            Err(GraphError::UnknownVertex { .. })
        ));
    }

    #[test]
    fn eval_errors_name_the_path() {
        let text = r#"<database>
          <partition name="a" position="1"><vertex id="x"><expr metric="m" value="text"/></vertex></partition>
          <partition name="b" position="2"><vertex id="y"><expr metric="m" value="+1"/></vertex></partition>
        </database>"#;
        let err = ConfigGraph::parse(text).unwrap().enumerate().unwrap_err();
        assert!(err.to_string().contains("a:x -> b:y"), "{err}");
    }
}
