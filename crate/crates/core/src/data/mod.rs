//! Stacked experiment/population data.
//!
//! Experiment rows (`S = 1`) always come first, followed by population rows
//! (`S = 0`). Row order within each block is the order the rows were supplied
//! in. Treatment, outcome, cluster and stratum values exist only for the
//! experiment block.

mod io;
mod standardize;

use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{load_csv, read_csv, write_csv, Schema};
pub use standardize::{standardize, Standardization};
pub(crate) use standardize::{mean_sd, standardized};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("non-numeric value {value:?} in column {column} (row {row})")]
    NonNumeric {
        column: String,
        row: usize,
        value: String,
    },
    #[error("categorical value {value} out of range 0..{levels} in column {column}")]
    LevelOutOfRange {
        column: String,
        value: f64,
        levels: u32,
    },
    #[error("treatment must be 0 or 1, found {value} (row {row})")]
    InvalidTreatment { value: f64, row: usize },
    #[error("cluster column required but not provided")]
    MissingCluster,
    #[error("variable {0} has zero variance on experiment rows")]
    Degenerate(String),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = DataError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Continuous,
    Categorical,
}

/// Declaration of one covariate column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VarKind,
    /// 1 for continuous variables, number of levels for categorical ones.
    pub level_count: u32,
    pub measured_in_population: bool,
}

impl VariableSpec {
    pub fn continuous(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: VarKind::Continuous,
            level_count: 1,
            measured_in_population: true,
        }
    }

    pub fn categorical(name: impl Into<String>, levels: u32) -> Self {
        Self {
            name: name.into(),
            kind: VarKind::Categorical,
            level_count: levels,
            measured_in_population: true,
        }
    }

    /// Marks the variable as not collected in the population data.
    pub fn unmeasured(mut self) -> Self {
        self.measured_in_population = false;
        self
    }

    pub fn is_categorical(&self) -> bool {
        self.kind == VarKind::Categorical
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            VarKind::Continuous if self.level_count != 1 => Err(DataError::Invalid(format!(
                "continuous variable {} must have level_count 1",
                self.name
            ))),
            VarKind::Categorical if self.level_count < 2 => Err(DataError::Invalid(format!(
                "categorical variable {} needs at least 2 levels",
                self.name
            ))),
            _ => Ok(()),
        }
    }
}

/// Experiment and population samples stacked into one table.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedDataset {
    specs: Vec<VariableSpec>,
    outcome_name: String,
    treatment_name: String,
    /// `(n + m) x p`; population cells of unmeasured variables are NaN.
    covariates: DMatrix<f64>,
    n_experiment: usize,
    treatment: Vec<bool>,
    outcome: Vec<f64>,
    cluster: Option<Vec<u32>>,
    strata: Option<Vec<u32>>,
    treatment_prob: Option<Vec<f64>>,
    population_size: Option<f64>,
}

impl StackedDataset {
    /// Builds and validates a dataset. `experiment` is `n x p`, `population`
    /// is `m x p` with NaN in the columns of variables not measured there.
    pub fn new(
        specs: Vec<VariableSpec>,
        experiment: DMatrix<f64>,
        treatment: Vec<bool>,
        outcome: Vec<f64>,
        population: DMatrix<f64>,
    ) -> Result<Self> {
        let p = specs.len();
        if experiment.ncols() != p || population.ncols() != p {
            return Err(DataError::Invalid(format!(
                "expected {p} covariate columns, got {} (experiment) and {} (population)",
                experiment.ncols(),
                population.ncols()
            )));
        }
        let n = experiment.nrows();
        if treatment.len() != n || outcome.len() != n {
            return Err(DataError::Invalid(
                "treatment and outcome must have one entry per experiment row".into(),
            ));
        }
        let mut seen = HashSet::new();
        for spec in &specs {
            spec.validate()?;
            if !seen.insert(spec.name.as_str()) {
                return Err(DataError::Invalid(format!("duplicate variable {}", spec.name)));
            }
        }
        if let Some(i) = outcome.iter().position(|y| !y.is_finite()) {
            return Err(DataError::Invalid(format!("non-finite outcome on experiment row {i}")));
        }

        let m = population.nrows();
        let mut covariates = DMatrix::zeros(n + m, p);
        covariates.rows_mut(0, n).copy_from(&experiment);
        covariates.rows_mut(n, m).copy_from(&population);

        let dataset = Self {
            specs,
            outcome_name: "Y".into(),
            treatment_name: "T".into(),
            covariates,
            n_experiment: n,
            treatment,
            outcome,
            cluster: None,
            strata: None,
            treatment_prob: None,
            population_size: None,
        };
        dataset.validate_cells()?;
        Ok(dataset)
    }

    fn validate_cells(&self) -> Result<()> {
        let n = self.n_experiment;
        for (j, spec) in self.specs.iter().enumerate() {
            let col = self.covariates.column(j);
            for (i, &v) in col.iter().enumerate() {
                let in_population = i >= n;
                if in_population && !spec.measured_in_population {
                    if !v.is_nan() {
                        return Err(DataError::Invalid(format!(
                            "{} is not measured in the population but has a value on population row {}",
                            spec.name,
                            i - n
                        )));
                    }
                    continue;
                }
                if !v.is_finite() {
                    return Err(DataError::Invalid(format!(
                        "missing or non-finite value for {} on row {i}",
                        spec.name
                    )));
                }
                if spec.is_categorical()
                    && (v < 0.0 || v.fract() != 0.0 || v >= spec.level_count as f64)
                {
                    return Err(DataError::LevelOutOfRange {
                        column: spec.name.clone(),
                        value: v,
                        levels: spec.level_count,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn with_names(mut self, outcome: impl Into<String>, treatment: impl Into<String>) -> Self {
        self.outcome_name = outcome.into();
        self.treatment_name = treatment.into();
        self
    }

    /// Attaches cluster identifiers, one per experiment row.
    pub fn with_clusters(mut self, cluster: Vec<u32>) -> Result<Self> {
        if cluster.len() != self.n_experiment {
            return Err(DataError::Invalid("one cluster id per experiment row required".into()));
        }
        self.cluster = Some(cluster);
        Ok(self)
    }

    pub fn with_strata(mut self, strata: Vec<u32>) -> Result<Self> {
        if strata.len() != self.n_experiment {
            return Err(DataError::Invalid("one stratum id per experiment row required".into()));
        }
        self.strata = Some(strata);
        Ok(self)
    }

    /// Per-row known treatment probabilities from the experimental design.
    pub fn with_treatment_prob(mut self, prob: Vec<f64>) -> Result<Self> {
        if prob.len() != self.n_experiment {
            return Err(DataError::Invalid(
                "one treatment probability per experiment row required".into(),
            ));
        }
        if prob.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(DataError::Invalid("treatment probabilities must lie in (0, 1)".into()));
        }
        self.treatment_prob = Some(prob);
        Ok(self)
    }

    /// Declared size of the actual target population. Must be at least
    /// `n + m`; equality disables the case-weight adjustment.
    pub fn with_population_size(mut self, size: f64) -> Result<Self> {
        let stacked = (self.n_experiment + self.m_population()) as f64;
        if !(size >= stacked) {
            return Err(DataError::Invalid(format!(
                "population size {size} is smaller than the stacked sample size {stacked}"
            )));
        }
        self.population_size = Some(size);
        Ok(self)
    }

    pub fn specs(&self) -> &[VariableSpec] {
        &self.specs
    }

    pub fn covariate_names(&self) -> impl Iterator<Item = &str> {
        self.specs.iter().map(|s| s.name.as_str())
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    pub fn outcome_name(&self) -> &str {
        &self.outcome_name
    }

    pub fn treatment_name(&self) -> &str {
        &self.treatment_name
    }

    pub fn n_experiment(&self) -> usize {
        self.n_experiment
    }

    pub fn m_population(&self) -> usize {
        self.covariates.nrows() - self.n_experiment
    }

    pub fn n_rows(&self) -> usize {
        self.covariates.nrows()
    }

    /// Sampling indicator: `true` for experiment rows.
    pub fn sampled(&self, row: usize) -> bool {
        row < self.n_experiment
    }

    pub fn sampling_indicator(&self) -> Vec<u8> {
        (0..self.n_rows()).map(|i| u8::from(self.sampled(i))).collect()
    }

    pub fn covariates(&self) -> &DMatrix<f64> {
        &self.covariates
    }

    /// All rows of covariate `j`.
    pub fn column(&self, j: usize) -> &[f64] {
        let rows = self.covariates.nrows();
        &self.covariates.as_slice()[j * rows..(j + 1) * rows]
    }

    pub fn experiment_column(&self, j: usize) -> &[f64] {
        &self.column(j)[..self.n_experiment]
    }

    pub fn population_column(&self, j: usize) -> &[f64] {
        &self.column(j)[self.n_experiment..]
    }

    pub fn treatment(&self) -> &[bool] {
        &self.treatment
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn clusters(&self) -> Option<&[u32]> {
        self.cluster.as_deref()
    }

    pub fn strata(&self) -> Option<&[u32]> {
        self.strata.as_deref()
    }

    pub fn treatment_prob(&self) -> Option<&[f64]> {
        self.treatment_prob.as_deref()
    }

    /// Declared target population size, defaulting to `n + m`.
    pub fn population_size(&self) -> f64 {
        self.population_size
            .unwrap_or((self.n_experiment + self.m_population()) as f64)
    }


    /// New dataset made of the given experiment rows and population rows
    /// (indices relative to each block, repeats allowed).
    pub fn resample(&self, experiment_rows: &[usize], population_rows: &[usize]) -> Self {
        let n = self.n_experiment;
        let p = self.specs.len();
        let total = experiment_rows.len() + population_rows.len();
        let covariates = DMatrix::from_fn(total, p, |i, j| {
            let src = if i < experiment_rows.len() {
                experiment_rows[i]
            } else {
                n + population_rows[i - experiment_rows.len()]
            };
            self.covariates[(src, j)]
        });
        let pick = |v: &[u32]| experiment_rows.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self {
            specs: self.specs.clone(),
            outcome_name: self.outcome_name.clone(),
            treatment_name: self.treatment_name.clone(),
            covariates,
            n_experiment: experiment_rows.len(),
            treatment: experiment_rows.iter().map(|&i| self.treatment[i]).collect(),
            outcome: experiment_rows.iter().map(|&i| self.outcome[i]).collect(),
            cluster: self.cluster.as_deref().map(pick),
            strata: self.strata.as_deref().map(pick),
            treatment_prob: self
                .treatment_prob
                .as_ref()
                .map(|v| experiment_rows.iter().map(|&i| v[i]).collect()),
            population_size: self.population_size,
        }
    }

    pub(crate) fn with_covariates(&self, covariates: DMatrix<f64>, outcome: Vec<f64>) -> Self {
        Self {
            covariates,
            outcome,
            ..self.clone()
        }
    }
}
