//! Mixed Markov random field estimation by nodewise l1-penalized regressions.
//!
//! Each node is regressed on all others with a family matching its type
//! (gaussian for continuous nodes, binomial for binary ones, multinomial for
//! categorical nodes with more than two observed levels). The penalty is
//! chosen per node by EBIC and the selected neighborhoods are combined with
//! the AND or OR rule.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{standardized, DataError, StackedDataset, VarKind};
use crate::glm::{self, GlmError, GlmFamily, LassoConfig};
use crate::graph::{EdgeRule, MarkovGraph};
use crate::par::map_indexed;

pub const MIN_EXPERIMENT_ROWS: usize = 20;

#[derive(Debug, Error)]
pub enum MgmError {
    #[error("need at least {MIN_EXPERIMENT_ROWS} experiment rows to fit the graph, have {0}")]
    SampleSize(usize),
    #[error("node {node}: {message}")]
    Node { node: String, message: String },
    #[error("nodewise fit for {node} failed: {source}")]
    Fit {
        node: String,
        #[source]
        source: GlmError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgmConfig {
    pub rule: EdgeRule,
    /// EBIC hyperparameter.
    pub gamma: f64,
    pub n_lambda: usize,
    pub lambda_min_ratio: f64,
    /// Aggregated coefficients at or below this magnitude count as zero.
    pub threshold: f64,
    pub lasso: LassoConfig,
}

impl Default for MgmConfig {
    fn default() -> Self {
        Self {
            rule: EdgeRule::And,
            gamma: 0.25,
            n_lambda: 50,
            lambda_min_ratio: 0.01,
            threshold: 0.0,
            lasso: LassoConfig::default(),
        }
    }
}

enum Response {
    Continuous(Vec<f64>),
    Binary(Vec<f64>),
    /// Labels remapped to the observed classes `0..classes`.
    Classes(Vec<f64>, usize),
}

struct Node {
    name: String,
    response: Response,
    /// Standardized design columns this node contributes as a predictor.
    columns: Vec<Vec<f64>>,
}

fn node_error(name: &str, message: impl Into<String>) -> MgmError {
    MgmError::Node {
        node: name.to_string(),
        message: message.into(),
    }
}

fn continuous_node(name: &str, values: &[f64]) -> Result<Node, MgmError> {
    let z = standardized(values, name).map_err(|e| match e {
        DataError::Degenerate(_) => node_error(name, "zero variance on experiment rows"),
        other => node_error(name, other.to_string()),
    })?;
    Ok(Node {
        name: name.to_string(),
        response: Response::Continuous(z.clone()),
        columns: vec![z],
    })
}

fn categorical_node(name: &str, values: &[f64], levels: u32) -> Result<Node, MgmError> {
    let mut present = vec![false; levels.max(1) as usize];
    for &v in values {
        present[v as usize] = true;
    }
    let observed: Vec<usize> = (0..present.len()).filter(|&l| present[l]).collect();
    if observed.len() < 2 {
        return Err(node_error(name, "only one level observed on experiment rows"));
    }
    let mut remap = vec![usize::MAX; present.len()];
    for (k, &l) in observed.iter().enumerate() {
        remap[l] = k;
    }
    let labels: Vec<f64> = values.iter().map(|&v| remap[v as usize] as f64).collect();
    // Dummies for every observed level except the first; absent levels have
    // no column at all.
    let columns = observed[1..]
        .iter()
        .map(|&l| {
            let ind: Vec<f64> = values
                .iter()
                .map(|&v| if v as usize == l { 1.0 } else { 0.0 })
                .collect();
            standardized(&ind, name).map_err(|e| node_error(name, e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let response = if observed.len() == 2 {
        Response::Binary(labels)
    } else {
        Response::Classes(labels, observed.len())
    };
    Ok(Node {
        name: name.to_string(),
        response,
        columns,
    })
}

fn build_nodes(dataset: &StackedDataset, include_y: bool) -> Result<Vec<Node>, MgmError> {
    let mut nodes = Vec::with_capacity(dataset.specs().len() + 2);
    for (j, spec) in dataset.specs().iter().enumerate() {
        let values = dataset.experiment_column(j);
        nodes.push(match spec.kind {
            VarKind::Continuous => continuous_node(&spec.name, values)?,
            VarKind::Categorical => categorical_node(&spec.name, values, spec.level_count)?,
        });
    }
    if include_y {
        nodes.push(continuous_node(dataset.outcome_name(), dataset.outcome())?);
    }
    let t: Vec<f64> = dataset
        .treatment()
        .iter()
        .map(|&t| if t { 1.0 } else { 0.0 })
        .collect();
    nodes.push(categorical_node(dataset.treatment_name(), &t, 2)?);
    Ok(nodes)
}

/// Aggregated |coefficient| of every other node in the regression of `r`.
fn fit_node(nodes: &[Node], r: usize, n: usize, config: &MgmConfig) -> Result<Vec<f64>, MgmError> {
    let owners: Vec<usize> = (0..nodes.len())
        .filter(|&h| h != r)
        .flat_map(|h| std::iter::repeat_n(h, nodes[h].columns.len()))
        .collect();
    let mut data = Vec::with_capacity(owners.len() * n);
    for (h, node) in nodes.iter().enumerate() {
        if h != r {
            for col in &node.columns {
                data.extend_from_slice(col);
            }
        }
    }
    let x = nalgebra::DMatrix::from_vec(n, owners.len(), data);
    let (y, family) = match &nodes[r].response {
        Response::Continuous(y) => (y, GlmFamily::Gaussian),
        Response::Binary(y) => (y, GlmFamily::Binomial),
        Response::Classes(y, k) => (y, GlmFamily::Multinomial { classes: *k }),
    };
    let fit_error = |source| MgmError::Fit {
        node: nodes[r].name.clone(),
        source,
    };
    let mut weights = vec![0.0; nodes.len()];
    let lmax = glm::lambda_max(&x, y, family, None).map_err(fit_error)?;
    if !(lmax > 0.0) {
        return Ok(weights);
    }
    let grid = glm::lambda_grid(lmax, config.n_lambda, config.lambda_min_ratio);
    let path = glm::fit_path(&x, y, family, None, &grid, &config.lasso).map_err(fit_error)?;
    let best = glm::select_ebic(&path, n as f64, owners.len(), config.gamma);
    let slopes = &path.coefficients[best].slopes;
    for (c, &h) in owners.iter().enumerate() {
        let m = slopes.row(c).iter().fold(0.0f64, |acc, b| acc.max(b.abs()));
        weights[h] = weights[h].max(m);
    }
    for w in &mut weights {
        if *w <= config.threshold {
            *w = 0.0;
        }
    }
    Ok(weights)
}

/// Fits the graph on experiment rows. Nodes are the covariates in dataset
/// order, then the outcome (when `include_y`), then the treatment.
pub fn fit_mgm(
    dataset: &StackedDataset,
    include_y: bool,
    config: &MgmConfig,
) -> Result<MarkovGraph, MgmError> {
    let n = dataset.n_experiment();
    if n < MIN_EXPERIMENT_ROWS {
        return Err(MgmError::SampleSize(n));
    }
    let nodes = build_nodes(dataset, include_y)?;
    let theta = map_indexed(nodes.len(), |r| fit_node(&nodes, r, n, config))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let k = nodes.len();
    let mut edges = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            let (ab, ba) = (theta[a][b], theta[b][a]);
            let keep = match config.rule {
                EdgeRule::And => ab > 0.0 && ba > 0.0,
                EdgeRule::Or => ab > 0.0 || ba > 0.0,
            };
            if keep {
                edges.push((a, b, 0.5 * (ab + ba)));
            }
        }
    }
    let names = nodes.into_iter().map(|n| n.name).collect();
    Ok(MarkovGraph::from_weighted_edges(names, &edges, config.rule)
        .expect("nodewise weights form a valid graph"))
}
