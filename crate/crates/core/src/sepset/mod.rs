//! Separating-set estimation.
//!
//! Every simple path between the two sides of the required independence
//! becomes a row of a path incidence matrix; a separating set is a set of
//! columns hitting every row. The smallest such set is found exactly.

mod cover;
mod paths;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::StackedDataset;
use crate::graph::{GraphError, MarkovGraph};
use crate::mgm::{fit_mgm, MgmConfig, MgmError};

pub use paths::{enumerate_simple_paths, for_each_simple_path, PathMatrix, DEFAULT_PATH_CAP};

#[derive(Debug, Error)]
pub enum SepsetError {
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("more than {cap} simple paths; the graph is too dense to enumerate")]
    PathExplosion { cap: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Mgm(#[from] MgmError),
}

impl From<GraphError> for SepsetError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::UnknownNode(n) => SepsetError::UnknownVariable(n),
            other => SepsetError::InvalidArgument(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionStatus {
    Feasible,
    Infeasible,
    EmptySetSufficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SepsetMode {
    Marginal,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparatingSetSolution {
    pub status: SolutionStatus,
    pub mode: SepsetMode,
    /// Full separating set, forced members included, in graph node order.
    pub selected: Vec<String>,
    /// Variables that were not allowed into the set.
    #[serde(rename = "excluded")]
    pub constraints_applied: Vec<String>,
    #[serde(rename = "forced")]
    pub forced_included: Vec<String>,
}

impl SeparatingSetSolution {
    pub fn is_usable(&self) -> bool {
        self.status != SolutionStatus::Infeasible
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SepsetConfig {
    pub mgm: MgmConfig,
    pub path_cap: usize,
}

impl Default for SepsetConfig {
    fn default() -> Self {
        Self {
            mgm: MgmConfig::default(),
            path_cap: DEFAULT_PATH_CAP,
        }
    }
}

pub(crate) fn lookup(graph: &MarkovGraph, name: &str) -> Result<usize, SepsetError> {
    graph
        .index_of(name)
        .ok_or_else(|| SepsetError::UnknownVariable(name.to_string()))
}

fn lookup_all<S: AsRef<str>>(graph: &MarkovGraph, names: &[S]) -> Result<Vec<usize>, SepsetError> {
    names.iter().map(|n| lookup(graph, n.as_ref())).collect()
}

fn names_of(columns: &[String], idx: impl IntoIterator<Item = usize>) -> Vec<String> {
    idx.into_iter().map(|i| columns[i].clone()).collect()
}

/// Minimum cover of `p`. Columns named in `excluded` (and
/// `always_excluded`, if given) are never selected.
pub fn solve_min_cover<S: AsRef<str>>(
    p: &PathMatrix,
    excluded: &[S],
    always_excluded: Option<&str>,
) -> Result<SeparatingSetSolution, SepsetError> {
    solve_with(p, excluded, always_excluded, &[], SepsetMode::Marginal)
}

fn column_index(p: &PathMatrix, name: &str) -> Result<usize, SepsetError> {
    p.columns()
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| SepsetError::UnknownVariable(name.to_string()))
}

fn solve_with<S: AsRef<str>>(
    p: &PathMatrix,
    excluded: &[S],
    always_excluded: Option<&str>,
    forced: &[usize],
    mode: SepsetMode,
) -> Result<SeparatingSetSolution, SepsetError> {
    let q = p.columns().len();
    let mut allowed = FixedBitSet::with_capacity(q);
    allowed.insert_range(..);
    let mut excluded_idx = Vec::new();
    for name in excluded {
        let j = column_index(p, name.as_ref())?;
        allowed.set(j, false);
        excluded_idx.push(j);
    }
    excluded_idx.sort_unstable();
    excluded_idx.dedup();
    if let Some(name) = always_excluded {
        allowed.set(column_index(p, name)?, false);
    }
    let mut forced_bits = FixedBitSet::with_capacity(q);
    for &f in forced {
        forced_bits.insert(f);
    }
    let mut solution = SeparatingSetSolution {
        status: SolutionStatus::Infeasible,
        mode,
        selected: Vec::new(),
        constraints_applied: names_of(p.columns(), excluded_idx),
        forced_included: names_of(p.columns(), forced_bits.ones()),
    };
    if forced.iter().any(|&f| !allowed.contains(f)) {
        return Ok(solution);
    }
    let mut chosen = match cover::min_cover(p.rows(), &allowed, &forced_bits) {
        cover::Cover::Infeasible => return Ok(solution),
        cover::Cover::Empty => {
            solution.status = SolutionStatus::EmptySetSufficient;
            Vec::new()
        }
        cover::Cover::Selected(s) => {
            solution.status = SolutionStatus::Feasible;
            s
        }
    };
    chosen.extend(forced_bits.ones());
    chosen.sort_unstable();
    solution.selected = names_of(p.columns(), chosen);
    Ok(solution)
}

/// Marginal-mode solution on a given graph: the smallest set blocking every
/// path from `outcome` to a sampling-set member once `treatment` (if
/// present) is removed.
pub fn marginal_sepset_from_graph<S: AsRef<str>>(
    graph: &MarkovGraph,
    outcome: &str,
    treatment: Option<&str>,
    sampling: &[S],
    unmeasured: &[S],
    path_cap: usize,
) -> Result<SeparatingSetSolution, SepsetError> {
    let graph = match treatment {
        Some(t) => graph.remove_node(t)?,
        None => graph.clone(),
    };
    let y = lookup(&graph, outcome)?;
    let targets = lookup_all(&graph, sampling)?;
    lookup_all(&graph, unmeasured)?;
    if targets.contains(&y) {
        return Err(SepsetError::InvalidArgument(format!(
            "{outcome} cannot be in the sampling set"
        )));
    }
    let mut p = PathMatrix::new(graph.node_names().to_vec());
    for &s in &targets {
        for_each_simple_path(&graph, y, s, path_cap, |path| p.push_path(path))?;
    }
    solve_with(&p, unmeasured, Some(outcome), &[], SepsetMode::Marginal)
}

/// Exact-mode solution on a graph without the outcome: the smallest set
/// separating the heterogeneity set from the sampling set. Variables in
/// both sets always belong to the solution.
pub fn exact_sepset_from_graph<S: AsRef<str>>(
    graph: &MarkovGraph,
    treatment: Option<&str>,
    heterogeneity: &[S],
    sampling: &[S],
    unmeasured: &[S],
    path_cap: usize,
) -> Result<SeparatingSetSolution, SepsetError> {
    let graph = match treatment {
        Some(t) => graph.remove_node(t)?,
        None => graph.clone(),
    };
    let h = lookup_all(&graph, heterogeneity)?;
    let s = lookup_all(&graph, sampling)?;
    lookup_all(&graph, unmeasured)?;
    let forced: Vec<usize> = h.iter().copied().filter(|v| s.contains(v)).collect();
    let mut p = PathMatrix::new(graph.node_names().to_vec());
    for &a in &h {
        for &b in &s {
            if forced.contains(&a) || forced.contains(&b) {
                continue;
            }
            for_each_simple_path(&graph, a, b, path_cap, |path| p.push_path(path))?;
        }
    }
    solve_with(&p, unmeasured, None, &forced, SepsetMode::Exact)
}

/// A solution together with the graph it was read from.
#[derive(Debug, Clone)]
pub struct SepsetFit {
    /// Fitted graph, treatment node included.
    pub graph: MarkovGraph,
    pub solution: SeparatingSetSolution,
}

fn check_covariates<S: AsRef<str>>(dataset: &StackedDataset, names: &[S]) -> Result<(), SepsetError> {
    for n in names {
        if dataset.variable_index(n.as_ref()).is_none() {
            return Err(SepsetError::UnknownVariable(n.as_ref().to_string()));
        }
    }
    Ok(())
}

/// Fits the graph over covariates, outcome and treatment on experiment rows
/// and solves in marginal mode.
pub fn estimate_marginal_sepset<S: AsRef<str>>(
    dataset: &StackedDataset,
    sampling: &[S],
    unmeasured: &[S],
    config: &SepsetConfig,
) -> Result<SepsetFit, SepsetError> {
    check_covariates(dataset, sampling)?;
    check_covariates(dataset, unmeasured)?;
    let graph = fit_mgm(dataset, true, &config.mgm)?;
    let solution = marginal_sepset_from_graph(
        &graph,
        dataset.outcome_name(),
        Some(dataset.treatment_name()),
        sampling,
        unmeasured,
        config.path_cap,
    )?;
    Ok(SepsetFit { graph, solution })
}

/// Fits the graph over covariates and treatment on experiment rows and
/// solves in exact mode.
pub fn estimate_exact_sepset<S: AsRef<str>>(
    dataset: &StackedDataset,
    sampling: &[S],
    heterogeneity: &[S],
    unmeasured: &[S],
    config: &SepsetConfig,
) -> Result<SepsetFit, SepsetError> {
    check_covariates(dataset, sampling)?;
    check_covariates(dataset, heterogeneity)?;
    check_covariates(dataset, unmeasured)?;
    let graph = fit_mgm(dataset, false, &config.mgm)?;
    let solution = exact_sepset_from_graph(
        &graph,
        Some(dataset.treatment_name()),
        heterogeneity,
        sampling,
        unmeasured,
        config.path_cap,
    )?;
    Ok(SepsetFit { graph, solution })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols(q: usize) -> Vec<String> {
        (0..q).map(|i| format!("V{i}")).collect()
    }

    #[test]
    fn disjoint_rows_need_two() {
        let p = PathMatrix::from_rows(cols(2), &[vec![1, 0], vec![0, 1]]).unwrap();
        let s = solve_min_cover::<&str>(&p, &[], None).unwrap();
        assert_eq!(s.selected, vec!["V0", "V1"]);
        assert_eq!(s.status, SolutionStatus::Feasible);
    }

    #[test]
    fn single_full_row_takes_lowest_index() {
        let p = PathMatrix::from_rows(cols(4), &[vec![1; 4]]).unwrap();
        assert_eq!(solve_min_cover::<&str>(&p, &[], None).unwrap().selected, vec!["V0"]);
        let s = solve_min_cover(&p, &["V0"], Some("V1")).unwrap();
        assert_eq!(s.selected, vec!["V2"]);
        assert_eq!(s.constraints_applied, vec!["V0"]);
    }

    #[test]
    fn no_rows_is_empty_set_sufficient() {
        let p = PathMatrix::new(cols(3));
        let s = solve_min_cover::<&str>(&p, &[], None).unwrap();
        assert_eq!(s.status, SolutionStatus::EmptySetSufficient);
        assert!(s.selected.is_empty());
    }

    #[test]
    fn fully_excluded_row_is_infeasible() {
        let p = PathMatrix::from_rows(cols(2), &[vec![1, 1]]).unwrap();
        let s = solve_min_cover(&p, &["V1"], Some("V0")).unwrap();
        assert_eq!(s.status, SolutionStatus::Infeasible);
        assert!(s.selected.is_empty());
    }

    #[test]
    fn square_has_two_paths() {
        let g = MarkovGraph::from_edges(
            &["A", "B", "C", "D"],
            &[("A", "B"), ("B", "C"), ("C", "D"), ("D", "A")],
        )
        .unwrap();
        let paths = enumerate_simple_paths(&g, "A", "C", 10).unwrap();
        assert_eq!(paths, vec![vec!["A", "B", "C"], vec!["A", "D", "C"]]);
        let edge = MarkovGraph::from_edges(&["A", "B"], &[("A", "B")]).unwrap();
        assert_eq!(enumerate_simple_paths(&edge, "A", "B", 10).unwrap(), vec![vec!["A", "B"]]);
        assert!(matches!(
            enumerate_simple_paths(&g, "A", "C", 1),
            Err(SepsetError::PathExplosion { cap: 1 })
        ));
        assert!(enumerate_simple_paths(&g, "A", "A", 10).is_err());
    }

    #[test]
    fn serializes_with_short_keys() {
        let s = SeparatingSetSolution {
            status: SolutionStatus::EmptySetSufficient,
            mode: SepsetMode::Exact,
            selected: vec!["X2".into()],
            constraints_applied: vec![],
            forced_included: vec!["X2".into()],
        };
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["status"], "empty_set_sufficient");
        assert_eq!(v["forced"][0], "X2");
        assert!(v["excluded"].as_array().unwrap().is_empty());
    }
}
