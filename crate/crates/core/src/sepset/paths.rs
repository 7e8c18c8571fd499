use fixedbitset::FixedBitSet;

use super::SepsetError;
use crate::graph::MarkovGraph;

pub const DEFAULT_PATH_CAP: usize = 1_000_000;

/// Calls `visit` with every simple path from `source` to `target`, depth
/// first with neighbors in node order. Fails once more than `cap` paths have
/// been found.
pub fn for_each_simple_path(
    graph: &MarkovGraph,
    source: usize,
    target: usize,
    cap: usize,
    mut visit: impl FnMut(&[usize]),
) -> Result<usize, SepsetError> {
    let k = graph.node_count();
    if source >= k || target >= k {
        return Err(SepsetError::InvalidArgument("path endpoint out of range".into()));
    }
    if source == target {
        return Err(SepsetError::InvalidArgument(format!(
            "path source and target are both {}",
            graph.node_names()[source]
        )));
    }
    let adjacency: Vec<Vec<usize>> = (0..k).map(|v| graph.neighbors(v).collect()).collect();
    let mut on_path = FixedBitSet::with_capacity(k);
    let mut path = vec![source];
    // Next neighbor position to try for each node on the stack.
    let mut cursor = vec![0usize];
    on_path.insert(source);
    let mut found = 0usize;
    while let Some(&v) = path.last() {
        let depth = path.len() - 1;
        let pos = cursor[depth];
        if pos == adjacency[v].len() {
            on_path.set(v, false);
            path.pop();
            cursor.pop();
            continue;
        }
        cursor[depth] += 1;
        let u = adjacency[v][pos];
        if on_path.contains(u) {
            continue;
        }
        if u == target {
            found += 1;
            if found > cap {
                return Err(SepsetError::PathExplosion { cap });
            }
            path.push(u);
            visit(&path);
            path.pop();
            continue;
        }
        on_path.insert(u);
        path.push(u);
        cursor.push(0);
    }
    Ok(found)
}

/// All simple paths between two named nodes, as node-name lists.
pub fn enumerate_simple_paths(
    graph: &MarkovGraph,
    source: &str,
    target: &str,
    cap: usize,
) -> Result<Vec<Vec<String>>, SepsetError> {
    let s = super::lookup(graph, source)?;
    let t = super::lookup(graph, target)?;
    let mut out = Vec::new();
    for_each_simple_path(graph, s, t, cap, |p| {
        out.push(p.iter().map(|&v| graph.node_names()[v].clone()).collect())
    })?;
    Ok(out)
}

/// Path incidence matrix: one row per path, one column per candidate
/// variable, with a one wherever the path visits that variable.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrix {
    columns: Vec<String>,
    rows: Vec<FixedBitSet>,
}

impl PathMatrix {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    /// Builds a matrix from 0/1 rows.
    pub fn from_rows(columns: Vec<String>, rows: &[Vec<u8>]) -> Result<Self, SepsetError> {
        let mut m = Self::new(columns);
        for row in rows {
            if row.len() != m.columns.len() {
                return Err(SepsetError::InvalidArgument(format!(
                    "row has {} entries, expected {}",
                    row.len(),
                    m.columns.len()
                )));
            }
            let mut bits = FixedBitSet::with_capacity(row.len());
            for (j, &b) in row.iter().enumerate() {
                bits.set(j, b != 0);
            }
            m.rows.push(bits);
        }
        Ok(m)
    }

    pub fn push_path(&mut self, nodes: &[usize]) {
        let mut bits = FixedBitSet::with_capacity(self.columns.len());
        for &v in nodes {
            bits.insert(v);
        }
        self.rows.push(bits);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[FixedBitSet] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}
