//! Undirected Markov graph over named nodes.
//!
//! Graph separation is read as conditional independence: `A` and `B` are
//! separated by `C` when every path between them passes through `C`.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("node sets overlap at {0:?}")]
    Overlap(String),
    #[error("invalid graph: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EdgeRule {
    /// Edge when both nodewise regressions select each other.
    #[default]
    And,
    /// Edge when either nodewise regression selects the other.
    Or,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovGraph {
    names: Vec<String>,
    /// Row-major `k x k`.
    adjacency: Vec<bool>,
    weights: Vec<f64>,
    rule: EdgeRule,
}

impl MarkovGraph {
    /// Builds a graph from weighted edges given by node index.
    pub fn from_weighted_edges(
        names: Vec<String>,
        edges: &[(usize, usize, f64)],
        rule: EdgeRule,
    ) -> Result<Self, GraphError> {
        let k = names.len();
        let unique: HashSet<&String> = names.iter().collect();
        if unique.len() != k {
            return Err(GraphError::Invalid("duplicate node names".into()));
        }
        let mut graph = Self {
            names,
            adjacency: vec![false; k * k],
            weights: vec![0.0; k * k],
            rule,
        };
        for &(a, b, w) in edges {
            if a >= k || b >= k {
                return Err(GraphError::Invalid(format!("edge ({a}, {b}) out of range")));
            }
            if a == b {
                return Err(GraphError::Invalid("self edges are not allowed".into()));
            }
            if !(w > 0.0) {
                return Err(GraphError::Invalid("edge weights must be positive".into()));
            }
            for (i, j) in [(a, b), (b, a)] {
                graph.adjacency[i * k + j] = true;
                graph.weights[i * k + j] = w;
            }
        }
        Ok(graph)
    }

    /// Unit-weight graph from named edges, for fixtures.
    pub fn from_edges(names: &[&str], edges: &[(&str, &str)]) -> Result<Self, GraphError> {
        let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let lookup = |n: &str| {
            names
                .iter()
                .position(|m| m == n)
                .ok_or_else(|| GraphError::UnknownNode(n.to_string()))
        };
        let indexed = edges
            .iter()
            .map(|(a, b)| Ok((lookup(a)?, lookup(b)?, 1.0)))
            .collect::<Result<Vec<_>, GraphError>>()?;
        Self::from_weighted_edges(names, &indexed, EdgeRule::And)
    }

    pub fn node_names(&self) -> &[String] {
        &self.names
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn rule(&self) -> EdgeRule {
        self.rule
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn require(&self, name: &str) -> Result<usize, GraphError> {
        self.index_of(name)
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a * self.names.len() + b]
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        self.weights[a * self.names.len() + b]
    }

    /// Neighbors of `node` in node order.
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        let k = self.names.len();
        (0..k).filter(move |&j| self.adjacency[node * k + j])
    }

    /// Edges `(a, b)` with `a < b`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let k = self.names.len();
        (0..k)
            .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
            .filter(|&(a, b)| self.has_edge(a, b))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    pub fn has_named_edge(&self, a: &str, b: &str) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Some(i), Some(j)) => self.has_edge(i, j),
            _ => false,
        }
    }

    /// Copy of the graph without `name` and its incident edges.
    pub fn remove_node(&self, name: &str) -> Result<MarkovGraph, GraphError> {
        let drop = self.require(name)?;
        let keep: Vec<usize> = (0..self.names.len()).filter(|&i| i != drop).collect();
        let k = self.names.len();
        let kk = keep.len();
        let mut adjacency = vec![false; kk * kk];
        let mut weights = vec![0.0; kk * kk];
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                adjacency[a * kk + b] = self.adjacency[i * k + j];
                weights[a * kk + b] = self.weights[i * k + j];
            }
        }
        Ok(MarkovGraph {
            names: keep.iter().map(|&i| self.names[i].clone()).collect(),
            adjacency,
            weights,
            rule: self.rule,
        })
    }

    /// True when no path joins a node of `a` to a node of `b` once the nodes
    /// of `given` are deleted.
    pub fn is_separated<S: AsRef<str>>(
        &self,
        a: &[S],
        b: &[S],
        given: &[S],
    ) -> Result<bool, GraphError> {
        let resolve = |set: &[S]| {
            set.iter()
                .map(|s| self.require(s.as_ref()))
                .collect::<Result<Vec<_>, _>>()
        };
        let (a, b, given) = (resolve(a)?, resolve(b)?, resolve(given)?);
        let mut blocked = vec![false; self.names.len()];
        for &c in &given {
            blocked[c] = true;
        }
        for &v in a.iter().chain(&b) {
            if blocked[v] {
                return Err(GraphError::Overlap(self.names[v].clone()));
            }
        }
        if let Some(&v) = a.iter().find(|v| b.contains(v)) {
            return Err(GraphError::Overlap(self.names[v].clone()));
        }
        let mut target = vec![false; self.names.len()];
        for &v in &b {
            target[v] = true;
        }
        let mut seen = blocked;
        let mut queue: VecDeque<usize> = a.iter().copied().collect();
        for &v in &a {
            seen[v] = true;
        }
        while let Some(v) = queue.pop_front() {
            for u in self.neighbors(v) {
                if target[u] {
                    return Ok(false);
                }
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        Ok(true)
    }

    pub fn edge_list(&self) -> Vec<Edge> {
        self.edges()
            .into_iter()
            .map(|(a, b)| Edge {
                from: self.names[a].clone(),
                to: self.names[b].clone(),
                weight: self.weight(a, b),
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "nodes": self.names,
            "rule": self.rule,
            "edges": self.edge_list(),
        })
    }

    pub fn to_dot(&self, graph_name: &str) -> String {
        let mut out = format!("graph {graph_name} {{\n");
        for name in &self.names {
            let _ = writeln!(out, "  \"{name}\";");
        }
        for e in self.edge_list() {
            let _ = writeln!(
                out,
                "  \"{}\" -- \"{}\" [weight={:.6}, penwidth={:.3}];",
                e.from,
                e.to,
                e.weight,
                1.0 + 4.0 * e.weight.min(1.0)
            );
        }
        out.push_str("}\n");
        out
    }
}
