//! The full estimation sequence: fit the graph, solve for a separating set,
//! then estimate the population effect with that set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::StackedDataset;
use crate::estimators::{
    aipw_pate, compute_weights, fit_sampling_model, ipw_pate, outcome_model_pate, sate_dim,
    treatment_probabilities, EstimatorError, EstimatorKind, PateEstimate,
};
use crate::sepset::{
    estimate_exact_sepset, estimate_marginal_sepset, SepsetConfig, SepsetError, SepsetFit,
    SepsetMode,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Sepset(#[from] SepsetError),
    #[error("{kind} estimator failed: {source}")]
    Estimator {
        kind: &'static str,
        #[source]
        source: EstimatorError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: SepsetMode,
    pub sampling: Vec<String>,
    pub heterogeneity: Vec<String>,
    /// Variables that may not enter the separating set, in addition to
    /// those declared unmeasured in the population.
    pub unmeasured: Vec<String>,
    pub sepset: SepsetConfig,
    pub estimators: Vec<EstimatorKind>,
    /// Known constant `Pr(T = 1)`; otherwise taken from the data.
    pub treatment_prob: Option<f64>,
    pub weight_cap: Option<f64>,
    pub population_size: Option<f64>,
}

impl PipelineConfig {
    pub fn marginal(sampling: &[&str]) -> Self {
        Self {
            mode: SepsetMode::Marginal,
            sampling: sampling.iter().map(|s| s.to_string()).collect(),
            heterogeneity: Vec::new(),
            unmeasured: Vec::new(),
            sepset: SepsetConfig::default(),
            estimators: vec![EstimatorKind::Ipw],
            treatment_prob: None,
            weight_cap: None,
            population_size: None,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.sampling.is_empty() {
            return Err(PipelineError::Config("sampling_set must not be empty".into()));
        }
        if self.mode == SepsetMode::Exact && self.heterogeneity.is_empty() {
            return Err(PipelineError::Config(
                "mode = exact requires a nonempty heterogeneity_set".into(),
            ));
        }
        if self.estimators.is_empty() {
            return Err(PipelineError::Config("no estimators requested".into()));
        }
        Ok(())
    }

    /// User exclusions plus every covariate missing from the population.
    pub fn exclusions(&self, ds: &StackedDataset) -> Vec<String> {
        let mut out = self.unmeasured.clone();
        for spec in ds.specs() {
            if !spec.measured_in_population && !out.contains(&spec.name) {
                out.push(spec.name.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub fit: SepsetFit,
    /// One estimate per requested estimator; empty when no usable set exists.
    pub estimates: Vec<PateEstimate>,
}

impl PipelineOutput {
    pub fn feasible(&self) -> bool {
        self.fit.solution.is_usable()
    }
}

/// Estimates for one covariate set `w`, in the order of `kinds`. The
/// sampling model is fitted once and shared by the weighting estimators.
pub fn estimates_for_set<S: AsRef<str>>(
    ds: &StackedDataset,
    w: &[S],
    kinds: &[EstimatorKind],
    treatment_prob: Option<f64>,
    weight_cap: Option<f64>,
    population_size: Option<f64>,
) -> Vec<Result<PateEstimate, EstimatorError>> {
    let needs_weights = kinds
        .iter()
        .any(|k| matches!(k, EstimatorKind::Ipw | EstimatorKind::Aipw));
    let weights = needs_weights.then(|| {
        let model = fit_sampling_model(ds, w, population_size)?;
        let p = treatment_probabilities(ds, treatment_prob)?;
        Ok::<_, EstimatorError>((compute_weights(&model, weight_cap), p))
    });
    kinds
        .iter()
        .map(|kind| match kind {
            EstimatorKind::SateDim => sate_dim(ds),
            EstimatorKind::OutcomeModel => outcome_model_pate(ds, w),
            EstimatorKind::Ipw | EstimatorKind::Aipw => {
                let (pi, p) = weights.as_ref().expect("weights fitted").as_ref().map_err(Clone::clone)?;
                if *kind == EstimatorKind::Ipw {
                    ipw_pate(ds, pi, p)
                } else {
                    aipw_pate(ds, w, pi, p)
                }
            }
        })
        .collect()
}

/// Graph fit and separating set, without estimation.
pub fn fit_sepset(ds: &StackedDataset, config: &PipelineConfig) -> Result<SepsetFit, PipelineError> {
    let excluded = config.exclusions(ds);
    Ok(match config.mode {
        SepsetMode::Marginal => estimate_marginal_sepset(ds, &config.sampling, &excluded, &config.sepset)?,
        SepsetMode::Exact => estimate_exact_sepset(
            ds,
            &config.sampling,
            &config.heterogeneity,
            &excluded,
            &config.sepset,
        )?,
    })
}

pub fn run_pipeline(ds: &StackedDataset, config: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    config.validate()?;
    let fit = fit_sepset(ds, config)?;
    if !fit.solution.is_usable() {
        return Ok(PipelineOutput {
            fit,
            estimates: Vec::new(),
        });
    }
    let estimates = estimates_for_set(
        ds,
        &fit.solution.selected,
        &config.estimators,
        config.treatment_prob,
        config.weight_cap,
        config.population_size,
    )
    .into_iter()
    .zip(&config.estimators)
    .map(|(r, k)| r.map_err(|source| PipelineError::Estimator { kind: k.as_str(), source }))
    .collect::<Result<Vec<_>, _>>()?;
    Ok(PipelineOutput { fit, estimates })
}
