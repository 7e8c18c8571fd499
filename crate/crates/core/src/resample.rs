//! Cluster bootstrap over the whole pipeline.
//!
//! Each replicate resamples experiment clusters and population rows, then
//! refits the graph, the separating set, the weights and the estimates.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::StackedDataset;
use crate::estimators::EstimatorKind;
use crate::par::map_indexed;
use crate::pipeline::{estimates_for_set, fit_sepset, run_pipeline, PipelineConfig, PipelineError};
use crate::rng::{stream, StreamRng};

const BOOTSTRAP_TAG: u64 = 0xB0_07;

#[derive(Debug, Error)]
pub enum ResampleError {
    #[error("cluster bootstrap needs a cluster column on the experiment rows")]
    MissingClusters,
    #[error("need at least 2 bootstrap replicates, got {0}")]
    TooFewReplicates(usize),
    #[error("all {0} bootstrap replicates had no feasible separating set")]
    AllInfeasible(usize),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// What one replicate produced.
#[derive(Debug, Clone, PartialEq)]
pub enum ReplicateOutcome {
    /// A usable set and one value per requested estimator (`None` where that
    /// estimator failed).
    Feasible {
        selected: Vec<String>,
        values: Vec<Option<f64>>,
    },
    Infeasible,
    /// The replicate could not be run at all.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub estimator: String,
    /// Full-sample estimate, when the full sample gives one.
    pub point: Option<f64>,
    pub se: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    /// Feasible replicates where this estimator produced a value.
    pub replicates_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub replicates: usize,
    pub estimates: Vec<BootstrapSummary>,
    pub feasible: usize,
    pub infeasible: usize,
    pub failed: usize,
    pub infeasible_proportion: f64,
    /// Share of feasible replicates that selected each variable.
    pub selection_frequency: BTreeMap<String, f64>,
    /// Set size to number of feasible replicates.
    pub set_size_distribution: BTreeMap<usize, usize>,
}

/// Percentile by linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Experiment rows of whole clusters drawn with replacement, and population
/// rows drawn with replacement unless `freeze_population`.
pub fn resample_rows(
    rng: &mut StreamRng,
    clusters: &[u32],
    m: usize,
    freeze_population: bool,
) -> (Vec<usize>, Vec<usize>) {
    let mut members: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, c) in clusters.iter().enumerate() {
        members.entry(*c).or_default().push(i);
    }
    let groups: Vec<&Vec<usize>> = members.values().collect();
    let mut experiment = Vec::with_capacity(clusters.len());
    for _ in 0..groups.len() {
        experiment.extend_from_slice(groups[rng.random_range(0..groups.len())]);
    }
    let population = if freeze_population {
        (0..m).collect()
    } else {
        (0..m).map(|_| rng.random_range(0..m)).collect()
    };
    (experiment, population)
}

/// Runs `replicate` on `b` resampled datasets and summarizes the results.
/// `labels` names the values each feasible replicate returns and `points`
/// holds the matching full-sample estimates.
pub fn cluster_bootstrap_with<F>(
    ds: &StackedDataset,
    labels: &[String],
    points: &[Option<f64>],
    b: usize,
    seed: u64,
    freeze_population: bool,
    replicate: F,
) -> Result<BootstrapReport, ResampleError>
where
    F: Fn(&StackedDataset) -> ReplicateOutcome + Sync + Send,
{
    if b < 2 {
        return Err(ResampleError::TooFewReplicates(b));
    }
    let clusters = ds.clusters().ok_or(ResampleError::MissingClusters)?;
    let m = ds.m_population();
    let outcomes = map_indexed(b, |r| {
        let mut rng = stream(seed, BOOTSTRAP_TAG, r as u64);
        let (exp, pop) = resample_rows(&mut rng, clusters, m, freeze_population);
        replicate(&ds.resample(&exp, &pop))
    });

    let mut values: Vec<Vec<f64>> = vec![Vec::new(); labels.len()];
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    let (mut feasible, mut infeasible, mut failed) = (0, 0, 0);
    for outcome in &outcomes {
        match outcome {
            ReplicateOutcome::Feasible { selected, values: v } => {
                feasible += 1;
                *sizes.entry(selected.len()).or_default() += 1;
                for name in selected {
                    *counts.entry(name.clone()).or_default() += 1;
                }
                for (acc, x) in values.iter_mut().zip(v) {
                    acc.extend(*x);
                }
            }
            ReplicateOutcome::Infeasible => infeasible += 1,
            ReplicateOutcome::Failed(msg) => {
                log::warn!("bootstrap replicate failed: {msg}");
                failed += 1;
            }
        }
    }
    if infeasible == b {
        return Err(ResampleError::AllInfeasible(b));
    }

    let estimates = labels
        .iter()
        .zip(values)
        .enumerate()
        .map(|(k, (label, mut v))| {
            v.sort_by(f64::total_cmp);
            let used = v.len();
            let se = (used > 1).then(|| {
                let mean = v.iter().sum::<f64>() / used as f64;
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (used - 1) as f64).sqrt()
            });
            BootstrapSummary {
                estimator: label.clone(),
                point: points.get(k).copied().flatten(),
                se,
                ci_low: (used > 0).then(|| percentile(&v, 0.025)),
                ci_high: (used > 0).then(|| percentile(&v, 0.975)),
                replicates_used: used,
            }
        })
        .collect();
    let selection_frequency = counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / feasible.max(1) as f64))
        .collect();
    Ok(BootstrapReport {
        replicates: b,
        estimates,
        feasible,
        infeasible,
        failed,
        infeasible_proportion: infeasible as f64 / b as f64,
        selection_frequency,
        set_size_distribution: sizes,
    })
}

/// Full-pipeline bootstrap: graph, separating set, weights and estimates are
/// refitted on every replicate.
pub fn cluster_bootstrap(
    ds: &StackedDataset,
    config: &PipelineConfig,
    b: usize,
    seed: u64,
    freeze_population: bool,
) -> Result<BootstrapReport, ResampleError> {
    config.validate()?;
    let labels: Vec<String> = config.estimators.iter().map(|k| k.as_str().to_string()).collect();
    let full = run_pipeline(ds, config)?;
    let points: Vec<Option<f64>> = config
        .estimators
        .iter()
        .map(|k| full.estimates.iter().find(|e| e.estimator == *k).map(|e| e.point))
        .collect();
    cluster_bootstrap_with(ds, &labels, &points, b, seed, freeze_population, |rep| {
        replicate_pipeline(rep, config, &config.estimators)
    })
}

fn replicate_pipeline(ds: &StackedDataset, config: &PipelineConfig, kinds: &[EstimatorKind]) -> ReplicateOutcome {
    let fit = match fit_sepset(ds, config) {
        Ok(fit) => fit,
        Err(e) => return ReplicateOutcome::Failed(e.to_string()),
    };
    if !fit.solution.is_usable() {
        return ReplicateOutcome::Infeasible;
    }
    let selected = fit.solution.selected;
    let values = estimates_for_set(
        ds,
        &selected,
        kinds,
        config.treatment_prob,
        config.weight_cap,
        config.population_size,
    )
    .into_iter()
    .map(|r| r.ok().map(|e| e.point))
    .collect();
    ReplicateOutcome::Feasible { selected, values }
}
