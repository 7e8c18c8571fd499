use serde::{Deserialize, Serialize};

use super::{DataError, Result, StackedDataset};

/// Location/scale pairs used to standardize a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    /// One entry per covariate; `None` for categorical variables.
    pub covariates: Vec<Option<(f64, f64)>>,
    pub outcome: (f64, f64),
}

pub(crate) fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Standardized copy of `values`, or a degenerate-variable error naming it.
pub(crate) fn standardized(values: &[f64], name: &str) -> Result<Vec<f64>> {
    let (loc, scale) = location_scale(values, name)?;
    Ok(values.iter().map(|v| (v - loc) / scale).collect())
}

fn location_scale(values: &[f64], name: &str) -> Result<(f64, f64)> {
    let (mean, sd) = mean_sd(values);
    if !(sd > 0.0) || sd <= 1e-12 * mean.abs().max(1.0) {
        return Err(DataError::Degenerate(name.to_string()));
    }
    Ok((mean, sd))
}

/// Centers and scales every continuous covariate and the outcome to mean 0
/// and standard deviation 1 over experiment rows. Population rows receive the
/// same affine map. Categorical variables are left as they are.
pub fn standardize(dataset: &StackedDataset) -> Result<(StackedDataset, Standardization)> {
    let mut covariates = dataset.covariates().clone();
    let mut record = Vec::with_capacity(dataset.specs().len());
    for (j, spec) in dataset.specs().iter().enumerate() {
        if spec.is_categorical() {
            record.push(None);
            continue;
        }
        let (loc, scale) = location_scale(dataset.experiment_column(j), &spec.name)?;
        for v in covariates.column_mut(j).iter_mut() {
            *v = (*v - loc) / scale;
        }
        record.push(Some((loc, scale)));
    }
    let (loc, scale) = location_scale(dataset.outcome(), dataset.outcome_name())?;
    let outcome = dataset.outcome().iter().map(|y| (y - loc) / scale).collect();
    Ok((
        dataset.with_covariates(covariates, outcome),
        Standardization {
            covariates: record,
            outcome: (loc, scale),
        },
    ))
}

impl Standardization {
    /// Maps a standardized dataset back to its original units.
    pub fn invert(&self, dataset: &StackedDataset) -> StackedDataset {
        let mut covariates = dataset.covariates().clone();
        for (j, entry) in self.covariates.iter().enumerate() {
            if let Some((loc, scale)) = entry {
                for v in covariates.column_mut(j).iter_mut() {
                    *v = *v * scale + loc;
                }
            }
        }
        let (loc, scale) = self.outcome;
        let outcome = dataset.outcome().iter().map(|y| y * scale + loc).collect();
        dataset.with_covariates(covariates, outcome)
    }
}
