//! Population average treatment effect estimators given a separating set.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{StackedDataset, VarKind};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EstimatorError {
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("{0} is not measured in the population data and cannot be used for weighting")]
    Unmeasured(String),
    #[error("sampling model separates the samples perfectly on {0:?}; try a smaller separating set")]
    Separation(Vec<String>),
    #[error("sampling model did not converge")]
    NoConvergence,
    #[error("treatment arm {0} has zero total weight")]
    DegenerateArm(&'static str),
    #[error("{arm} arm has {have} experiment rows, need at least {need}")]
    TooFewRows {
        arm: &'static str,
        have: usize,
        need: usize,
    },
    #[error("outcome model design is rank deficient; collinear columns: {0:?}")]
    Collinear(Vec<String>),
    #[error("invalid treatment probabilities: {0}")]
    TreatmentProbability(String),
    #[error("invalid argument: {0}")]
    Argument(String),
}

pub type Result<T, E = EstimatorError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Ipw,
    OutcomeModel,
    Aipw,
    SateDim,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::Ipw,
        EstimatorKind::OutcomeModel,
        EstimatorKind::Aipw,
        EstimatorKind::SateDim,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Ipw => "ipw",
            EstimatorKind::OutcomeModel => "outcome_model",
            EstimatorKind::Aipw => "aipw",
            EstimatorKind::SateDim => "sate_dim",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "naive" {
            return Ok(EstimatorKind::SateDim);
        }
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown estimator {s:?} (expected ipw, outcome_model, aipw, sate_dim or naive)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PateEstimate {
    pub estimator: EstimatorKind,
    pub point: f64,
    pub se: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n_used: usize,
    pub m_used: usize,
}

impl PateEstimate {
    fn new(estimator: EstimatorKind, point: f64, ds: &StackedDataset) -> Self {
        Self {
            estimator,
            point,
            se: None,
            ci_low: None,
            ci_high: None,
            n_used: ds.n_experiment(),
            m_used: ds.m_population(),
        }
    }
}

/// Design columns for the covariates in `w` over all stacked rows.
/// Categorical variables contribute one indicator per non-reference level.
struct Design {
    names: Vec<String>,
    dummy: Vec<bool>,
    columns: Vec<Vec<f64>>,
}

fn design<S: AsRef<str>>(ds: &StackedDataset, w: &[S], need_population: bool) -> Result<Design> {
    let mut out = Design {
        names: Vec::new(),
        dummy: Vec::new(),
        columns: Vec::new(),
    };
    for name in w {
        let name = name.as_ref();
        let j = ds
            .variable_index(name)
            .ok_or_else(|| EstimatorError::UnknownVariable(name.to_string()))?;
        let spec = &ds.specs()[j];
        if need_population && !spec.measured_in_population {
            return Err(EstimatorError::Unmeasured(name.to_string()));
        }
        let values = ds.column(j);
        match spec.kind {
            VarKind::Continuous => {
                out.names.push(name.to_string());
                out.dummy.push(false);
                out.columns.push(values.to_vec());
            }
            VarKind::Categorical => {
                for level in 1..spec.level_count {
                    out.names.push(format!("{name}={level}"));
                    out.dummy.push(true);
                    out.columns.push(
                        values
                            .iter()
                            .map(|&v| if v == level as f64 { 1.0 } else { 0.0 })
                            .collect(),
                    );
                }
            }
        }
    }
    Ok(out)
}

fn is_constant(col: &[f64], rows: &[usize]) -> bool {
    rows.iter().all(|&i| col[i] == col[rows[0]])
}

/// Weighted logistic regression of the sampling indicator on `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingModel {
    /// Design column names, intercept excluded.
    pub columns: Vec<String>,
    /// Intercept first, then one coefficient per design column.
    pub coefficients: Vec<f64>,
    /// Fitted `Pr(S = 1 | W)` for every stacked row.
    pub prob_sampled: Vec<f64>,
    pub case_weights: Vec<f64>,
    pub n_experiment: usize,
}

const NEWTON_TOLERANCE: f64 = 1e-8;
const MAX_NEWTON: usize = 100;

/// Fits `Pr(S = 1 | W)` with case weight 1 on experiment rows and
/// `m / (N - n)` on population rows. `population_size` defaults to the
/// dataset's declared size.
pub fn fit_sampling_model<S: AsRef<str>>(
    ds: &StackedDataset,
    w: &[S],
    population_size: Option<f64>,
) -> Result<SamplingModel> {
    let (n, m) = (ds.n_experiment(), ds.m_population());
    let big_n = population_size.unwrap_or_else(|| ds.population_size());
    if !(big_n > n as f64) {
        return Err(EstimatorError::Argument(format!(
            "population size {big_n} must exceed the experiment size {n}"
        )));
    }
    let d = design(ds, w, true)?;
    let all: Vec<usize> = (0..ds.n_rows()).collect();
    // Columns without variation are absorbed by the intercept.
    let keep: Vec<usize> = (0..d.columns.len())
        .filter(|&c| !(d.dummy[c] && is_constant(&d.columns[c], &all)))
        .collect();
    let k = keep.len() + 1;
    let rows = ds.n_rows();
    let mut x = DMatrix::from_element(rows, k, 1.0);
    for (c, &src) in keep.iter().enumerate() {
        x.column_mut(c + 1).copy_from_slice(&d.columns[src]);
    }
    let pop_weight = m as f64 / (big_n - n as f64);
    let weights: Vec<f64> = (0..rows).map(|i| if i < n { 1.0 } else { pop_weight }).collect();
    let s: Vec<f64> = (0..rows).map(|i| if i < n { 1.0 } else { 0.0 }).collect();
    let total: f64 = weights.iter().sum();

    let objective = |beta: &DVector<f64>| -> f64 {
        let eta = &x * beta;
        eta.iter()
            .zip(&s)
            .zip(&weights)
            .map(|((e, y), w)| w * (log1p_exp(*e) - y * e))
            .sum::<f64>()
            / total
    };
    let share = n as f64 / total;
    let mut beta = DVector::zeros(k);
    beta[0] = (share / (1.0 - share)).ln();
    let mut current = objective(&beta);
    let separation = || EstimatorError::Separation(d.names.iter().map(|s| s.to_string()).collect());
    let mut converged = false;
    for _ in 0..MAX_NEWTON {
        let eta = &x * &beta;
        let prob = eta.map(sigmoid);
        let resid = DVector::from_iterator(rows, (0..rows).map(|i| weights[i] / total * (s[i] - prob[i])));
        let curvature =
            DVector::from_iterator(rows, (0..rows).map(|i| weights[i] / total * prob[i] * (1.0 - prob[i])));
        let grad = x.tr_mul(&resid);
        let mut scaled = x.clone();
        for mut col in scaled.column_iter_mut() {
            col.component_mul_assign(&curvature);
        }
        let hess = x.tr_mul(&scaled);
        if grad.norm() < NEWTON_TOLERANCE {
            converged = true;
            break;
        }
        let step = match hess.cholesky() {
            Some(ch) => ch.solve(&grad),
            None => return Err(separation()),
        };
        let mut t = 1.0;
        loop {
            let candidate = &beta + &step * t;
            let value = objective(&candidate);
            if value <= current + 1e-12 * current.abs().max(1.0) {
                beta = candidate;
                current = value;
                break;
            }
            t *= 0.5;
            if t < 1e-10 {
                return Err(EstimatorError::NoConvergence);
            }
        }
    }
    let eta = &x * &beta;
    let prob: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
    if eta.iter().any(|e| e.abs() > 30.0) || beta.iter().any(|b| !b.is_finite()) {
        return Err(separation());
    }
    if !converged {
        return Err(EstimatorError::NoConvergence);
    }
    Ok(SamplingModel {
        columns: keep.iter().map(|&c| d.names[c].clone()).collect(),
        coefficients: beta.iter().copied().collect(),
        prob_sampled: prob,
        case_weights: weights,
        n_experiment: n,
    })
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn log1p_exp(v: f64) -> f64 {
    if v > 35.0 {
        v
    } else {
        v.exp().ln_1p()
    }
}

/// Generalization weights for experiment rows:
/// `(1 / Pr(S=1|W)) * Pr(S=0|W) / Pr(S=0)`, with `Pr(S=0)` the case-weighted
/// mean of the fitted `Pr(S=0|W)`. Weights above `cap` are set to `cap`.
pub fn compute_weights(model: &SamplingModel, cap: Option<f64>) -> Vec<f64> {
    let total: f64 = model.case_weights.iter().sum();
    let p0 = model
        .prob_sampled
        .iter()
        .zip(&model.case_weights)
        .map(|(p, w)| w * (1.0 - p))
        .sum::<f64>()
        / total;
    model.prob_sampled[..model.n_experiment]
        .iter()
        .map(|p| {
            let pi = (1.0 - p) / (p * p0);
            cap.map_or(pi, |c| pi.min(c))
        })
        .collect()
}

/// Per-experiment-row `Pr(T = 1)`. A constant overrides everything; otherwise
/// the dataset's probability column is used, then per-stratum treated
/// shares, then the overall treated share. Probabilities must be constant
/// within declared strata.
pub fn treatment_probabilities(ds: &StackedDataset, constant: Option<f64>) -> Result<Vec<f64>> {
    let n = ds.n_experiment();
    let bad = |p: f64| !(p > 0.0 && p < 1.0);
    if let Some(p) = constant {
        if bad(p) {
            return Err(EstimatorError::TreatmentProbability(format!("{p} is not in (0, 1)")));
        }
        return Ok(vec![p; n]);
    }
    if let Some(column) = ds.treatment_prob() {
        if let Some(strata) = ds.strata() {
            let mut seen = std::collections::HashMap::new();
            for (s, p) in strata.iter().zip(column) {
                if let Some(prev) = seen.insert(*s, *p) {
                    if prev != *p {
                        return Err(EstimatorError::TreatmentProbability(format!(
                            "stratum {s} has differing probabilities {prev} and {p}"
                        )));
                    }
                }
            }
        }
        return Ok(column.to_vec());
    }
    let groups: Vec<u32> = ds.strata().map_or_else(|| vec![0; n], <[u32]>::to_vec);
    let k = groups.iter().copied().max().map_or(0, |g| g as usize + 1);
    let mut treated = vec![0usize; k];
    let mut size = vec![0usize; k];
    for (g, t) in groups.iter().zip(ds.treatment()) {
        size[*g as usize] += 1;
        treated[*g as usize] += usize::from(*t);
    }
    let share: Vec<f64> = treated.iter().zip(&size).map(|(t, s)| *t as f64 / *s as f64).collect();
    if let Some(g) = (0..k).find(|&g| size[g] > 0 && bad(share[g])) {
        return Err(EstimatorError::TreatmentProbability(format!(
            "stratum {g} has no variation in treatment"
        )));
    }
    Ok(groups.iter().map(|g| share[*g as usize]).collect())
}

fn check_lengths(ds: &StackedDataset, pi: &[f64], p: &[f64]) -> Result<()> {
    let n = ds.n_experiment();
    if pi.len() != n || p.len() != n {
        return Err(EstimatorError::Argument(format!(
            "expected {n} weights and probabilities, got {} and {}",
            pi.len(),
            p.len()
        )));
    }
    if let Some(v) = p.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(EstimatorError::TreatmentProbability(format!("{v} is not in (0, 1)")));
    }
    Ok(())
}

/// Hajek-weighted arm means of `values` over experiment rows.
fn weighted_arm_means(ds: &StackedDataset, values: &[f64], pi: &[f64], p: &[f64]) -> Result<(f64, f64)> {
    let (mut n1, mut d1, mut n0, mut d0) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..ds.n_experiment() {
        if ds.treatment()[i] {
            let w = pi[i] / p[i];
            n1 += w * values[i];
            d1 += w;
        } else {
            let w = pi[i] / (1.0 - p[i]);
            n0 += w * values[i];
            d0 += w;
        }
    }
    if !(d1 > 0.0) {
        return Err(EstimatorError::DegenerateArm("treated"));
    }
    if !(d0 > 0.0) {
        return Err(EstimatorError::DegenerateArm("control"));
    }
    Ok((n1 / d1, n0 / d0))
}

/// Hajek inverse probability weighting estimate.
pub fn ipw_pate(ds: &StackedDataset, pi: &[f64], p: &[f64]) -> Result<PateEstimate> {
    check_lengths(ds, pi, p)?;
    let (m1, m0) = weighted_arm_means(ds, ds.outcome(), pi, p)?;
    Ok(PateEstimate::new(EstimatorKind::Ipw, m1 - m0, ds))
}

/// Per-arm least-squares predictions of both potential outcomes, for
/// experiment rows and population rows.
struct ArmPredictions {
    experiment: [Vec<f64>; 2],
    population: [Vec<f64>; 2],
}

fn ols_predictions<S: AsRef<str>>(ds: &StackedDataset, w: &[S]) -> Result<ArmPredictions> {
    let d = design(ds, w, true)?;
    let n = ds.n_experiment();
    let mut experiment = [vec![0.0; n], vec![0.0; n]];
    let mut population = [vec![0.0; ds.m_population()], vec![0.0; ds.m_population()]];
    for (arm, label) in [(false, "control"), (true, "treated")] {
        let rows: Vec<usize> = (0..n).filter(|&i| ds.treatment()[i] == arm).collect();
        let need = d.columns.len() + 2;
        if rows.len() < need {
            return Err(EstimatorError::TooFewRows {
                arm: label,
                have: rows.len(),
                need,
            });
        }
        // An indicator for a level absent from this arm carries no
        // information; its coefficient is taken as zero.
        let keep: Vec<usize> = (0..d.columns.len())
            .filter(|&c| !(d.dummy[c] && rows.iter().all(|&i| d.columns[c][i] == 0.0)))
            .collect();
        let mut names = vec!["(intercept)".to_string()];
        names.extend(keep.iter().map(|&c| d.names[c].clone()));
        let k = keep.len() + 1;
        let mut x = DMatrix::from_element(rows.len(), k, 1.0);
        for (c, &src) in keep.iter().enumerate() {
            for (r, &i) in rows.iter().enumerate() {
                x[(r, c + 1)] = d.columns[src][i];
            }
        }
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| ds.outcome()[i]));
        let beta = least_squares(&x, &y, &names)?;
        let predict = |i: usize| beta[0] + keep.iter().enumerate().map(|(c, &src)| beta[c + 1] * d.columns[src][i]).sum::<f64>();
        let a = usize::from(arm);
        for i in 0..n {
            experiment[a][i] = predict(i);
        }
        for r in 0..ds.m_population() {
            population[a][r] = predict(n + r);
        }
    }
    Ok(ArmPredictions {
        experiment,
        population,
    })
}

/// Normal-equation solve through a Cholesky factorization that reports
/// every column whose residual variance vanishes.
fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<DVector<f64>> {
    let k = x.ncols();
    let gram = x.transpose() * x;
    let rhs = x.transpose() * y;
    let mut l = DMatrix::<f64>::zeros(k, k);
    let mut collinear = Vec::new();
    for j in 0..k {
        let d = gram[(j, j)] - (0..j).map(|c| l[(j, c)].powi(2)).sum::<f64>();
        if d <= 1e-10 * gram[(j, j)].max(f64::MIN_POSITIVE) {
            collinear.push(names[j].clone());
            continue;
        }
        let root = d.sqrt();
        l[(j, j)] = root;
        for i in j + 1..k {
            let s = gram[(i, j)] - (0..j).map(|c| l[(i, c)] * l[(j, c)]).sum::<f64>();
            l[(i, j)] = s / root;
        }
    }
    if !collinear.is_empty() {
        return Err(EstimatorError::Collinear(collinear));
    }
    let mut z = rhs;
    for j in 0..k {
        let s = z[j] - (0..j).map(|c| l[(j, c)] * z[c]).sum::<f64>();
        z[j] = s / l[(j, j)];
    }
    for j in (0..k).rev() {
        let s = z[j] - (j + 1..k).map(|c| l[(c, j)] * z[c]).sum::<f64>();
        z[j] = s / l[(j, j)];
    }
    Ok(z)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Fully interacted linear outcome model: separate least-squares fits per
/// arm, averaged over population rows.
pub fn outcome_model_pate<S: AsRef<str>>(ds: &StackedDataset, w: &[S]) -> Result<PateEstimate> {
    let pred = ols_predictions(ds, w)?;
    let point = mean(&pred.population[1]) - mean(&pred.population[0]);
    Ok(PateEstimate::new(EstimatorKind::OutcomeModel, point, ds))
}

fn aipw_from(ds: &StackedDataset, pred: &ArmPredictions, pi: &[f64], p: &[f64]) -> Result<f64> {
    let residual: Vec<f64> = (0..ds.n_experiment())
        .map(|i| {
            let arm = usize::from(ds.treatment()[i]);
            ds.outcome()[i] - pred.experiment[arm][i]
        })
        .collect();
    let (r1, r0) = weighted_arm_means(ds, &residual, pi, p)?;
    Ok(mean(&pred.population[1]) - mean(&pred.population[0]) + r1 - r0)
}

/// Augmented IPW: outcome-model population contrast plus weighted residual
/// corrections from each arm.
pub fn aipw_pate<S: AsRef<str>>(ds: &StackedDataset, w: &[S], pi: &[f64], p: &[f64]) -> Result<PateEstimate> {
    check_lengths(ds, pi, p)?;
    let pred = ols_predictions(ds, w)?;
    Ok(PateEstimate::new(EstimatorKind::Aipw, aipw_from(ds, &pred, pi, p)?, ds))
}

/// Unweighted difference in means among experiment rows.
pub fn sate_dim(ds: &StackedDataset) -> Result<PateEstimate> {
    let (mut s1, mut c1, mut s0, mut c0) = (0.0, 0usize, 0.0, 0usize);
    for (y, t) in ds.outcome().iter().zip(ds.treatment()) {
        if *t {
            s1 += y;
            c1 += 1;
        } else {
            s0 += y;
            c0 += 1;
        }
    }
    if c1 == 0 {
        return Err(EstimatorError::DegenerateArm("treated"));
    }
    if c0 == 0 {
        return Err(EstimatorError::DegenerateArm("control"));
    }
    Ok(PateEstimate::new(EstimatorKind::SateDim, s1 / c1 as f64 - s0 / c0 as f64, ds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::VariableSpec;

    fn six_rows(y: &[f64]) -> StackedDataset {
        StackedDataset::new(
            vec![VariableSpec::continuous("x")],
            DMatrix::from_column_slice(6, 1, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
            vec![true, true, true, false, false, false],
            y.to_vec(),
            DMatrix::from_column_slice(2, 1, &[0.0, 10.0]),
        )
        .unwrap()
    }

    #[test]
    fn aipw_with_zero_outcome_model_is_ipw() {
        let ds = six_rows(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0]);
        let pi = [1.0, 2.0, 0.5, 1.5, 1.0, 3.0];
        let p = [0.5, 0.4, 0.5, 0.4, 0.6, 0.5];
        let zero = ArmPredictions {
            experiment: [vec![0.0; 6], vec![0.0; 6]],
            population: [vec![0.0; 2], vec![0.0; 2]],
        };
        let ipw = ipw_pate(&ds, &pi, &p).unwrap().point;
        assert_eq!(aipw_from(&ds, &zero, &pi, &p).unwrap(), ipw);
    }

    #[test]
    fn collinear_column_is_named() {
        let x = DMatrix::from_row_slice(4, 3, &[1.0, 1.0, 2.0, 1.0, 2.0, 4.0, 1.0, 3.0, 6.0, 1.0, 4.0, 8.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let names: Vec<String> = ["(intercept)", "a", "b"].iter().map(|s| s.to_string()).collect();
        assert_eq!(
            least_squares(&x, &y, &names).unwrap_err(),
            EstimatorError::Collinear(vec!["b".into()])
        );
    }

    #[test]
    fn least_squares_matches_exact_fit() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let y = DVector::from_vec(vec![2.0, 5.0, 8.0, 11.0]);
        let names = vec!["(intercept)".to_string(), "x".to_string()];
        let b = least_squares(&x, &y, &names).unwrap();
        assert!((b[0] - 2.0).abs() < 1e-12 && (b[1] - 3.0).abs() < 1e-12);
    }
}
