//! Simulation design with a known population effect of 5.
//!
//! Covariates follow a linear Gaussian DAG with a minimal separating set
//! `{X1}`, a sampling set `{X4, X5}` and a heterogeneity set `{X2, X3}`.
//! Experiment units are drawn from a finite pool with probability depending
//! on `X4` and `X5`; the population is a fresh iid sample.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{mean_sd, DataError, StackedDataset, VariableSpec};
use crate::estimators::EstimatorKind;
use crate::graph::MarkovGraph;
use crate::par::map_indexed;
use crate::pipeline::estimates_for_set;
use crate::rng::stream;
use crate::sepset::{
    exact_sepset_from_graph, marginal_sepset_from_graph, SepsetConfig, SolutionStatus,
};

pub const TRUE_PATE: f64 = 5.0;
pub const COVARIATES: [&str; 9] = ["X1", "X2", "X3", "X4", "X5", "X6", "X7", "X8", "X9"];
pub const SAMPLING_SET: [&str; 2] = ["X4", "X5"];
pub const HETEROGENEITY_SET: [&str; 2] = ["X2", "X3"];
pub const MIN_SEPSET: [&str; 1] = ["X1"];

#[derive(Debug, Error)]
pub enum SimError {
    #[error("sampling score has zero variance over the pool")]
    Degenerate,
    #[error("pool of {pool} units yielded only {found} experiment members, need {needed}; raise pool_factor")]
    PoolTooSmall {
        pool: usize,
        found: usize,
        needed: usize,
    },
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// `size x 9` covariate draws, one row per unit.
pub fn gen_covariates<R: Rng>(rng: &mut R, size: usize) -> DMatrix<f64> {
    let r7 = (1.0f64 - 0.49).sqrt();
    let r3 = (1.0f64 - 0.09).sqrt();
    let mut x = DMatrix::zeros(size, 9);
    for i in 0..size {
        let x1 = normal(rng);
        let x2 = -0.7 * x1 + r7 * normal(rng);
        let x3 = 0.7 * x1 + r7 * normal(rng);
        let x4 = 0.7 * x1 + r7 * normal(rng);
        let x9 = -0.7 * x1 + r7 * normal(rng);
        let x5 = 0.3 * x9 + r3 * normal(rng);
        let x6 = normal(rng);
        let x7 = normal(rng);
        let x8 = -0.7 * x2 + r7 * normal(rng);
        for (j, v) in [x1, x2, x3, x4, x5, x6, x7, x8, x9].into_iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    x
}

/// `Y(t)` for a unit with covariates `x` (X1..X9) and noise `eps`.
pub fn potential_outcome(x: &[f64], treated: bool, eps: f64) -> f64 {
    let t = if treated { 1.0 } else { 0.0 };
    5.0 * t + 10.0 * x[2] * t - 10.0 * x[1] * t + x[5] - 3.0 * x[7] + eps
}

/// Observed outcomes for the rows of `x` under assignment `t`.
pub fn gen_outcomes<R: Rng>(rng: &mut R, x: &DMatrix<f64>, t: &[bool]) -> Vec<f64> {
    (0..x.nrows())
        .map(|i| {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            potential_outcome(&row, t[i], normal(rng))
        })
        .collect()
}

/// Probability of entering the experiment for each pool row: the score
/// `-20 X4 + 20 X5`, standardized over the pool and scaled by 0.25, through
/// the logistic function.
pub fn sampling_probabilities(x: &DMatrix<f64>) -> Result<Vec<f64>, SimError> {
    let lp: Vec<f64> = (0..x.nrows()).map(|i| -20.0 * x[(i, 3)] + 20.0 * x[(i, 4)]).collect();
    let (mean, sd) = mean_sd(&lp);
    if !(sd > 1e-12) {
        return Err(SimError::Degenerate);
    }
    Ok(lp.iter().map(|v| 1.0 / (1.0 + (-0.25 * (v - mean) / sd).exp())).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDraw {
    /// Pool rows chosen for the experiment, in pool order.
    pub selected: Vec<usize>,
    pub prob: Vec<f64>,
}

/// Bernoulli membership over the pool in order, keeping the first `n`.
pub fn gen_sampling<R: Rng>(rng: &mut R, x: &DMatrix<f64>, n: usize) -> Result<SamplingDraw, SimError> {
    let prob = sampling_probabilities(x)?;
    let mut selected = Vec::with_capacity(n);
    for (i, p) in prob.iter().enumerate() {
        if selected.len() == n {
            break;
        }
        if rng.random_bool(*p) {
            selected.push(i);
        }
    }
    if selected.len() < n {
        return Err(SimError::PoolTooSmall {
            pool: x.nrows(),
            found: selected.len(),
            needed: n,
        });
    }
    Ok(SamplingDraw { selected, prob })
}

/// One simulated study: `n` experiment units with singleton clusters and
/// `m` population units.
pub fn generate_dataset<R: Rng>(
    rng: &mut R,
    n: usize,
    m: usize,
    pool_factor: usize,
) -> Result<StackedDataset, SimError> {
    let pool = gen_covariates(rng, pool_factor * n);
    let draw = gen_sampling(rng, &pool, n)?;
    let experiment = pool.select_rows(&draw.selected);
    let treatment: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    let outcome = gen_outcomes(rng, &experiment, &treatment);
    let population = gen_covariates(rng, m);
    let specs = COVARIATES.iter().map(|c| VariableSpec::continuous(*c)).collect();
    let ds = StackedDataset::new(specs, experiment, treatment, outcome, population)?
        .with_clusters((0..n as u32).collect())?;
    Ok(ds)
}

/// The design's independence structure among experiment units, with the
/// outcome and without the treatment.
pub fn oracle_graph() -> MarkovGraph {
    let mut names: Vec<&str> = COVARIATES.to_vec();
    names.push("Y");
    MarkovGraph::from_edges(
        &names,
        &[
            ("X1", "X2"),
            ("X1", "X3"),
            ("X1", "X4"),
            ("X1", "X9"),
            ("X9", "X5"),
            ("X2", "X8"),
            ("X4", "X5"),
            ("Y", "X2"),
            ("Y", "X3"),
            ("Y", "X6"),
            ("Y", "X8"),
            ("X2", "X3"),
            ("X2", "X6"),
            ("X3", "X6"),
            ("X3", "X8"),
            ("X6", "X8"),
        ],
    )
    .expect("fixed graph is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetType {
    MinSepset,
    SimilarSampling,
    SimilarHeterogeneity,
    OtherAppropriate,
    Inappropriate,
    Infeasible,
}

impl SetType {
    pub const ALL: [SetType; 6] = [
        SetType::MinSepset,
        SetType::SimilarSampling,
        SetType::SimilarHeterogeneity,
        SetType::OtherAppropriate,
        SetType::Inappropriate,
        SetType::Infeasible,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SetType::MinSepset => "min_sepset",
            SetType::SimilarSampling => "similar_sampling",
            SetType::SimilarHeterogeneity => "similar_heterogeneity",
            SetType::OtherAppropriate => "other_appropriate",
            SetType::Inappropriate => "inappropriate",
            SetType::Infeasible => "infeasible",
        }
    }
}

/// Buckets a covariate set by whether it separates the outcome from the
/// sampling set in the true structure, then by which known set it contains.
pub fn classify_set<S: AsRef<str>>(graph: &MarkovGraph, set: &[S]) -> SetType {
    let w: Vec<&str> = set.iter().map(|s| s.as_ref()).collect();
    let rest: Vec<&str> = SAMPLING_SET.iter().copied().filter(|x| !w.contains(x)).collect();
    let separated = graph
        .is_separated(&["Y"], &rest, &w)
        .expect("covariate sets are disjoint from the outcome");
    let contains = |sub: &[&str]| sub.iter().all(|v| w.contains(v));
    if !separated {
        SetType::Inappropriate
    } else if contains(&MIN_SEPSET) {
        SetType::MinSepset
    } else if contains(&SAMPLING_SET) {
        SetType::SimilarSampling
    } else if contains(&HETEROGENEITY_SET) {
        SetType::SimilarHeterogeneity
    } else {
        SetType::OtherAppropriate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    OracleSampling,
    OracleHeterogeneity,
    OracleMin,
    Marginal,
    Exact,
    MarginalConstrained,
    Naive,
}

impl SetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SetKind::OracleSampling => "oracle_sampling",
            SetKind::OracleHeterogeneity => "oracle_heterogeneity",
            SetKind::OracleMin => "oracle_min",
            SetKind::Marginal => "marginal",
            SetKind::Exact => "exact",
            SetKind::MarginalConstrained => "marginal_constrained",
            SetKind::Naive => "naive",
        }
    }

    fn is_estimated(self) -> bool {
        matches!(self, SetKind::Marginal | SetKind::Exact | SetKind::MarginalConstrained)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub sizes: Vec<usize>,
    pub m: usize,
    pub pool_factor: usize,
    pub reps: usize,
    pub seed: u64,
    /// Also solve with `X1` declared unmeasured.
    pub constrained: bool,
    pub estimators: Vec<EstimatorKind>,
    pub sepset: SepsetConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sizes: vec![100, 200, 500, 1000, 2000, 3000],
            m: 10_000,
            pool_factor: 8,
            reps: 500,
            seed: 1,
            constrained: true,
            estimators: EstimatorKind::ALL.to_vec(),
            sepset: SepsetConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.sizes.is_empty() {
            return Err(SimError::Config("no sample sizes given".into()));
        }
        if let Some(n) = self.sizes.iter().find(|&&n| n < 100) {
            return Err(SimError::Config(format!("sample size {n} is below 100")));
        }
        if self.reps == 0 {
            return Err(SimError::Config("reps must be at least 1".into()));
        }
        if self.m == 0 || self.pool_factor == 0 {
            return Err(SimError::Config("m and pool_factor must be positive".into()));
        }
        if self.estimators.is_empty() {
            return Err(SimError::Config("no estimators requested".into()));
        }
        Ok(())
    }

    fn set_kinds(&self) -> Vec<SetKind> {
        let mut kinds = vec![
            SetKind::OracleSampling,
            SetKind::OracleHeterogeneity,
            SetKind::OracleMin,
            SetKind::Marginal,
            SetKind::Exact,
        ];
        if self.constrained {
            kinds.push(SetKind::MarginalConstrained);
        }
        if self.estimators.contains(&EstimatorKind::SateDim) {
            kinds.push(SetKind::Naive);
        }
        kinds
    }

    fn set_estimators(&self) -> Vec<EstimatorKind> {
        self.estimators
            .iter()
            .copied()
            .filter(|k| *k != EstimatorKind::SateDim)
            .collect()
    }
}

/// Outcome of one set kind in one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub kind: SetKind,
    /// `None` when the set could not be estimated.
    pub selected: Option<Vec<String>>,
    pub set_type: Option<SetType>,
    /// One entry per estimator, `None` on failure.
    pub estimates: Vec<(EstimatorKind, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub n: usize,
    pub index: usize,
    pub cells: Vec<CellOutcome>,
}

fn run_replicate(config: &SimConfig, graph: &MarkovGraph, n: usize, index: usize) -> Replicate {
    let mut rng = stream(config.seed, n as u64, index as u64);
    let kinds = config.set_kinds();
    let estimators = config.set_estimators();
    let failed = |kind: SetKind| CellOutcome {
        kind,
        selected: None,
        set_type: None,
        estimates: if kind == SetKind::Naive {
            vec![(EstimatorKind::SateDim, None)]
        } else {
            estimators.iter().map(|&k| (k, None)).collect()
        },
    };
    let ds = match generate_dataset(&mut rng, n, config.m, config.pool_factor) {
        Ok(ds) => ds,
        Err(e) => {
            log::warn!("replicate {index} at n={n}: {e}");
            return Replicate {
                n,
                index,
                cells: kinds.into_iter().map(failed).collect(),
            };
        }
    };
    let cap = config.sepset.path_cap;
    let marginal_graph = crate::mgm::fit_mgm(&ds, true, &config.sepset.mgm);
    let exact_graph = crate::mgm::fit_mgm(&ds, false, &config.sepset.mgm);
    let none: [&str; 0] = [];
    let estimate = |kind: SetKind, w: &[String], set_type: Option<SetType>| CellOutcome {
        kind,
        selected: Some(w.to_vec()),
        set_type,
        estimates: estimates_for_set(&ds, w, &estimators, Some(0.5), None, None)
            .into_iter()
            .zip(&estimators)
            .map(|(r, k)| (*k, r.ok().map(|e| e.point)))
            .collect(),
    };
    let to_vec = |s: &[&str]| s.iter().map(|v| v.to_string()).collect::<Vec<_>>();
    let cells = kinds
        .into_iter()
        .map(|kind| {
            let solution = match kind {
                SetKind::OracleSampling => return estimate(kind, &to_vec(&SAMPLING_SET), None),
                SetKind::OracleHeterogeneity => return estimate(kind, &to_vec(&HETEROGENEITY_SET), None),
                SetKind::OracleMin => return estimate(kind, &to_vec(&MIN_SEPSET), None),
                SetKind::Naive => {
                    let point = crate::estimators::sate_dim(&ds).ok().map(|e| e.point);
                    return CellOutcome {
                        kind,
                        selected: Some(Vec::new()),
                        set_type: None,
                        estimates: vec![(EstimatorKind::SateDim, point)],
                    };
                }
                SetKind::Marginal | SetKind::MarginalConstrained => {
                    let excluded: &[&str] = if kind == SetKind::Marginal { &none } else { &MIN_SEPSET };
                    marginal_graph.as_ref().map_err(|e| e.to_string()).and_then(|g| {
                        marginal_sepset_from_graph(g, "Y", Some("T"), &SAMPLING_SET, excluded, cap)
                            .map_err(|e| e.to_string())
                    })
                }
                SetKind::Exact => exact_graph.as_ref().map_err(|e| e.to_string()).and_then(|g| {
                    exact_sepset_from_graph(g, Some("T"), &HETEROGENEITY_SET, &SAMPLING_SET, &none, cap)
                        .map_err(|e| e.to_string())
                }),
            };
            match solution {
                Err(e) => {
                    log::warn!("replicate {index} at n={n}, {}: {e}", kind.as_str());
                    failed(kind)
                }
                Ok(s) if s.status == SolutionStatus::Infeasible => CellOutcome {
                    set_type: Some(SetType::Infeasible),
                    ..failed(kind)
                },
                Ok(s) => estimate(kind, &s.selected, Some(classify_set(graph, &s.selected))),
            }
        })
        .collect();
    Replicate { n, index, cells }
}

/// Runs `reps` replicates at sample size `n` and returns them in index order.
pub fn run_replicates(config: &SimConfig, n: usize) -> Vec<Replicate> {
    let graph = oracle_graph();
    map_indexed(config.reps, |r| run_replicate(config, &graph, n, r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub n: usize,
    pub estimator: EstimatorKind,
    pub set_kind: SetKind,
    pub reps_used: usize,
    pub mean: f64,
    pub bias: f64,
    /// Standard deviation of the estimates across replicates.
    pub se: f64,
    pub rmse: f64,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeRow {
    pub n: usize,
    pub set_kind: SetKind,
    pub set_type: SetType,
    pub count: usize,
    /// Share of replicates where the set step ran.
    pub frequency: f64,
    /// Mean IPW estimate minus the truth over replicates of this type.
    pub ipw_bias: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetRow {
    pub n: usize,
    pub set_kind: SetKind,
    pub selected: String,
    pub count: usize,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimResult {
    pub bias: Vec<BiasRow>,
    pub types: Vec<TypeRow>,
    pub sets: Vec<SetRow>,
}

fn summarize(n: usize, reps: &[Replicate], out: &mut SimResult) {
    let Some(first) = reps.first() else { return };
    for (c, cell) in first.cells.iter().enumerate() {
        let kind = cell.kind;
        for (e, (estimator, _)) in cell.estimates.iter().enumerate() {
            let values: Vec<f64> = reps.iter().filter_map(|r| r.cells[c].estimates[e].1).collect();
            let used = values.len();
            let mean = values.iter().sum::<f64>() / used as f64;
            let se = if used > 1 { mean_sd(&values).1 } else { f64::NAN };
            let rmse = (values.iter().map(|v| (v - TRUE_PATE).powi(2)).sum::<f64>() / used as f64).sqrt();
            out.bias.push(BiasRow {
                n,
                estimator: *estimator,
                set_kind: kind,
                reps_used: used,
                mean,
                bias: mean - TRUE_PATE,
                se,
                rmse,
                failed: reps.len() - used,
            });
        }
        if !kind.is_estimated() {
            continue;
        }
        let ipw = cell.estimates.iter().position(|(k, _)| *k == EstimatorKind::Ipw);
        let typed: Vec<(SetType, Option<f64>)> = reps
            .iter()
            .filter_map(|r| {
                let cell = &r.cells[c];
                cell.set_type.map(|t| (t, ipw.and_then(|i| cell.estimates[i].1)))
            })
            .collect();
        for set_type in SetType::ALL {
            let hits: Vec<&(SetType, Option<f64>)> = typed.iter().filter(|(t, _)| *t == set_type).collect();
            let estimates: Vec<f64> = hits.iter().filter_map(|(_, v)| *v).collect();
            out.types.push(TypeRow {
                n,
                set_kind: kind,
                set_type,
                count: hits.len(),
                frequency: if typed.is_empty() { 0.0 } else { hits.len() as f64 / typed.len() as f64 },
                ipw_bias: (!estimates.is_empty())
                    .then(|| estimates.iter().sum::<f64>() / estimates.len() as f64 - TRUE_PATE),
            });
        }
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut total = 0;
        for r in reps {
            if let Some(sel) = &r.cells[c].selected {
                *counts.entry(format!("{{{}}}", sel.join(","))).or_default() += 1;
                total += 1;
            }
        }
        let mut rows: Vec<(String, usize)> = counts.into_iter().collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        for (selected, count) in rows {
            out.sets.push(SetRow {
                n,
                set_kind: kind,
                selected,
                count,
                frequency: count as f64 / total as f64,
            });
        }
    }
}

/// Runs every sample size and aggregates bias, set-type and selected-set
/// tables.
pub fn run_simulation(config: &SimConfig) -> Result<SimResult, SimError> {
    config.validate()?;
    let mut result = SimResult::default();
    for &n in &config.sizes {
        let reps = run_replicates(config, n);
        summarize(n, &reps, &mut result);
    }
    Ok(result)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite()).map_or_else(String::new, |x| x.to_string())
}

impl SimResult {
    pub fn bias_row(&self, n: usize, estimator: EstimatorKind, kind: SetKind) -> Option<&BiasRow> {
        self.bias
            .iter()
            .find(|r| r.n == n && r.estimator == estimator && r.set_kind == kind)
    }

    pub fn type_frequency(&self, n: usize, kind: SetKind, set_type: SetType) -> f64 {
        self.types
            .iter()
            .find(|r| r.n == n && r.set_kind == kind && r.set_type == set_type)
            .map_or(0.0, |r| r.frequency)
    }

    /// Share of replicates whose estimated set was exactly `set`.
    pub fn set_frequency(&self, n: usize, kind: SetKind, set: &[&str]) -> f64 {
        let key = format!("{{{}}}", set.join(","));
        self.sets
            .iter()
            .find(|r| r.n == n && r.set_kind == kind && r.selected == key)
            .map_or(0.0, |r| r.frequency)
    }

    pub fn write_bias_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["n", "estimator", "set_kind", "reps_used", "mean", "bias", "se", "rmse", "failed"])?;
        for r in &self.bias {
            out.write_record([
                r.n.to_string(),
                r.estimator.as_str().to_string(),
                r.set_kind.as_str().to_string(),
                r.reps_used.to_string(),
                fmt_opt(Some(r.mean)),
                fmt_opt(Some(r.bias)),
                fmt_opt(Some(r.se)),
                fmt_opt(Some(r.rmse)),
                r.failed.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_types_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["n", "set_kind", "set_type", "count", "frequency", "ipw_bias"])?;
        for r in &self.types {
            out.write_record([
                r.n.to_string(),
                r.set_kind.as_str().to_string(),
                r.set_type.as_str().to_string(),
                r.count.to_string(),
                r.frequency.to_string(),
                fmt_opt(r.ipw_bias),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_sets_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["n", "set_kind", "selected", "count", "frequency"])?;
        for r in &self.sets {
            out.write_record([
                r.n.to_string(),
                r.set_kind.as_str().to_string(),
                r.selected.clone(),
                r.count.to_string(),
                r.frequency.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_formula() {
        let zero = [0.0; 9];
        assert_eq!(potential_outcome(&zero, true, 0.0), 5.0);
        let x = [0.3, 1.0, 2.0, 0.0, 0.0, 0.5, 9.0, -1.0, 4.0];
        assert_eq!(potential_outcome(&x, false, 0.0), 0.5 + 3.0);
        assert_eq!(potential_outcome(&x, true, 0.0), 5.0 + 20.0 - 10.0 + 3.5);
    }

    #[test]
    fn equal_sampling_scores_are_degenerate() {
        let mut x = DMatrix::zeros(10, 9);
        for i in 0..10 {
            x[(i, 3)] = i as f64;
            x[(i, 4)] = i as f64;
        }
        assert!(matches!(sampling_probabilities(&x), Err(SimError::Degenerate)));
    }

    #[test]
    fn classification_buckets() {
        let g = oracle_graph();
        assert_eq!(classify_set(&g, &["X1"]), SetType::MinSepset);
        assert_eq!(classify_set(&g, &["X1", "X7"]), SetType::MinSepset);
        assert_eq!(classify_set(&g, &["X4", "X5"]), SetType::SimilarSampling);
        assert_eq!(classify_set(&g, &["X2", "X3"]), SetType::SimilarHeterogeneity);
        assert_eq!(classify_set(&g, &["X4", "X9"]), SetType::OtherAppropriate);
        assert_eq!(classify_set(&g, &["X2"]), SetType::Inappropriate);
        assert_eq!(classify_set::<&str>(&g, &[]), SetType::Inappropriate);
    }
}
