//! l1-penalized generalized linear models fitted by coordinate descent along
//! a descending lambda grid, with EBIC selection of the penalty.
//!
//! The objective for every family is the weighted mean negative
//! log-likelihood plus `lambda * |slopes|_1`; intercepts are unpenalized.
//! Weights are normalized to sum to one internally, so `lambda` is on the
//! scale of a per-observation score.

mod cd;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use cd::{Exhausted, Gram, Wls};

#[derive(Debug, Error, PartialEq)]
pub enum GlmError {
    #[error("lambda grid is empty")]
    EmptyGrid,
    #[error("lambda grid must be positive and strictly descending")]
    NonDescendingGrid,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("weights must be nonnegative, finite and not all zero")]
    InvalidWeights,
    #[error("invalid response: {0}")]
    InvalidResponse(String),
    #[error("coordinate descent did not converge at lambda {lambda:e} (achieved change {achieved:e})")]
    NoConvergence { lambda: f64, achieved: f64 },
}

pub type Result<T, E = GlmError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlmFamily {
    Gaussian,
    Binomial,
    /// Symmetric multinomial logistic over `classes` labels `0..classes`.
    Multinomial { classes: usize },
}

impl GlmFamily {
    fn outputs(self) -> usize {
        match self {
            GlmFamily::Multinomial { classes } => classes,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig {
    pub max_sweeps: usize,
    /// Convergence threshold on the largest coefficient change, measured in
    /// units of the column's weighted norm.
    pub tolerance: f64,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 10_000,
            tolerance: 1e-7,
        }
    }
}

/// Intercepts and slopes at one lambda. Gaussian and binomial fits have a
/// single output column; multinomial fits have one per class.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub intercept: Vec<f64>,
    /// `p x outputs`
    pub slopes: DMatrix<f64>,
}

impl Coefficients {
    /// Number of predictors with a nonzero slope in any output.
    pub fn df(&self) -> usize {
        self.slopes
            .row_iter()
            .filter(|row| row.iter().any(|&b| b != 0.0))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath {
    pub family: GlmFamily,
    pub lambdas: Vec<f64>,
    pub coefficients: Vec<Coefficients>,
    pub log_likelihoods: Vec<f64>,
    pub df: Vec<usize>,
    /// Sum of the case weights (the sample size for unit weights).
    pub n_obs: f64,
}

struct Problem<'a> {
    x: &'a DMatrix<f64>,
    /// Response indicator per output: `outputs x n`, or the raw response for
    /// gaussian fits.
    targets: Vec<Vec<f64>>,
    /// Normalized weights summing to one.
    weights: Vec<f64>,
    weight_total: f64,
}

fn check_inputs<'a>(
    x: &'a DMatrix<f64>,
    y: &[f64],
    family: GlmFamily,
    weights: Option<&[f64]>,
) -> Result<Problem<'a>> {
    let n = x.nrows();
    if y.len() != n {
        return Err(GlmError::Dimension(format!(
            "response has {} rows, design has {n}",
            y.len()
        )));
    }
    let raw: Vec<f64> = match weights {
        Some(w) if w.len() != n => {
            return Err(GlmError::Dimension(format!("{} weights for {n} rows", w.len())))
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; n],
    };
    if raw.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(GlmError::InvalidWeights);
    }
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(GlmError::InvalidWeights);
    }
    if y.iter().any(|v| !v.is_finite()) || x.iter().any(|v| !v.is_finite()) {
        return Err(GlmError::InvalidResponse("non-finite value in data".into()));
    }
    let targets = match family {
        GlmFamily::Gaussian => vec![y.to_vec()],
        GlmFamily::Binomial => {
            if y.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(GlmError::InvalidResponse("binomial response must be 0/1".into()));
            }
            vec![y.to_vec()]
        }
        GlmFamily::Multinomial { classes } => {
            if classes < 2 {
                return Err(GlmError::InvalidResponse("multinomial needs at least 2 classes".into()));
            }
            if y.iter().any(|&v| v < 0.0 || v.fract() != 0.0 || v >= classes as f64) {
                return Err(GlmError::InvalidResponse(format!(
                    "multinomial labels must be integers in 0..{classes}"
                )));
            }
            (0..classes)
                .map(|k| y.iter().map(|&v| f64::from(v as usize == k)).collect())
                .collect()
        }
    };
    if family != GlmFamily::Gaussian {
        for (k, t) in targets.iter().enumerate() {
            let share: f64 = t.iter().zip(&raw).map(|(a, w)| a * w).sum::<f64>() / total;
            if share <= 0.0 || share >= 1.0 {
                return Err(GlmError::InvalidResponse(format!(
                    "class {k} has {} of the weight; every class needs observations",
                    if share <= 0.0 { "none" } else { "all" }
                )));
            }
        }
    }
    Ok(Problem {
        x,
        targets,
        weights: raw.iter().map(|w| w / total).collect(),
        weight_total: total,
    })
}

fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    values.iter().zip(weights).map(|(v, w)| v * w).sum()
}

/// Smallest lambda at which every slope is zero.
pub fn lambda_max(
    x: &DMatrix<f64>,
    y: &[f64],
    family: GlmFamily,
    weights: Option<&[f64]>,
) -> Result<f64> {
    let problem = check_inputs(x, y, family, weights)?;
    Ok(problem.lambda_max())
}

impl Problem<'_> {
    fn lambda_max(&self) -> f64 {
        let n = self.x.nrows();
        let xs = self.x.as_slice();
        let mut best = 0.0f64;
        for t in &self.targets {
            let mean = weighted_mean(t, &self.weights);
            for j in 0..self.x.ncols() {
                let col = &xs[j * n..(j + 1) * n];
                let score: f64 = col
                    .iter()
                    .zip(t)
                    .zip(&self.weights)
                    .map(|((x, y), w)| x * w * (y - mean))
                    .sum();
                best = best.max(score.abs());
            }
        }
        best
    }
}

/// `count` log-spaced values from `max` down to `min_ratio * max`.
pub fn lambda_grid(max: f64, count: usize, min_ratio: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![max],
        _ => (0..count)
            .map(|i| max * min_ratio.powf(i as f64 / (count - 1) as f64))
            .collect(),
    }
}

fn linear_predictor(x: &DMatrix<f64>, intercept: f64, beta: &[f64], out: &mut [f64]) {
    let n = x.nrows();
    let xs = x.as_slice();
    out.fill(intercept);
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            for (o, v) in out.iter_mut().zip(&xs[j * n..(j + 1) * n]) {
                *o += v * b;
            }
        }
    }
}

fn log1p_exp(v: f64) -> f64 {
    if v > 35.0 {
        v
    } else if v < -35.0 {
        v.exp()
    } else {
        v.exp().ln_1p()
    }
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn l1(beta: &[f64]) -> f64 {
    beta.iter().map(|b| b.abs()).sum()
}

const MIN_VARIANCE: f64 = 1e-5;
const MAX_NEWTON_STEPS: usize = 200;

/// Fits the penalized model at every lambda of a strictly descending grid,
/// warm-starting each fit from the previous solution.
pub fn fit_path(
    x: &DMatrix<f64>,
    y: &[f64],
    family: GlmFamily,
    weights: Option<&[f64]>,
    lambdas: &[f64],
    config: &LassoConfig,
) -> Result<LassoPath> {
    if lambdas.is_empty() {
        return Err(GlmError::EmptyGrid);
    }
    if lambdas.iter().any(|l| !(*l > 0.0) || !l.is_finite())
        || lambdas.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(GlmError::NonDescendingGrid);
    }
    let problem = check_inputs(x, y, family, weights)?;
    let mut state = State::new(&problem, family);
    let gram = (family == GlmFamily::Gaussian)
        .then(|| Gram::new(problem.x, &problem.weights, &problem.targets[0]));
    let mut path = LassoPath {
        family,
        lambdas: lambdas.to_vec(),
        coefficients: Vec::with_capacity(lambdas.len()),
        log_likelihoods: Vec::with_capacity(lambdas.len()),
        df: Vec::with_capacity(lambdas.len()),
        n_obs: problem.weight_total,
    };
    // At or above lambda_max the solution is exactly the null model; solving
    // there only adds rounding-level slopes that would count toward df.
    let null_above = problem.lambda_max() * (1.0 - 1e-10);
    for &lambda in lambdas {
        match family {
            _ if lambda >= null_above => state = State::new(&problem, family),
            GlmFamily::Gaussian => state.fit_gaussian(gram.as_ref().expect("gram formed"), &problem, lambda, config)?,
            GlmFamily::Binomial => state.fit_binomial(&problem, lambda, config)?,
            GlmFamily::Multinomial { .. } => state.fit_multinomial(&problem, lambda, config)?,
        }
        let coefficients = state.coefficients();
        path.df.push(coefficients.df());
        path.log_likelihoods.push(state.log_likelihood(&problem));
        path.coefficients.push(coefficients);
    }
    Ok(path)
}

/// Current iterate: one intercept, slope vector and linear predictor per
/// output.
struct State {
    family: GlmFamily,
    intercept: Vec<f64>,
    beta: Vec<Vec<f64>>,
    eta: Vec<Vec<f64>>,
    /// Loss at the current `eta`, when known.
    loss_cache: Option<f64>,
}

impl State {
    fn new(problem: &Problem, family: GlmFamily) -> Self {
        let n = problem.x.nrows();
        let p = problem.x.ncols();
        let intercept: Vec<f64> = problem
            .targets
            .iter()
            .map(|t| {
                let mean = weighted_mean(t, &problem.weights);
                match family {
                    GlmFamily::Gaussian => mean,
                    GlmFamily::Binomial => (mean / (1.0 - mean)).ln(),
                    GlmFamily::Multinomial { .. } => mean.ln(),
                }
            })
            .collect();
        let outputs = family.outputs();
        Self {
            family,
            eta: intercept.iter().map(|&b| vec![b; n]).collect(),
            loss_cache: None,
            intercept,
            beta: vec![vec![0.0; p]; outputs],
        }
    }

    fn coefficients(&self) -> Coefficients {
        let p = self.beta[0].len();
        let k = self.beta.len();
        Coefficients {
            intercept: self.intercept.clone(),
            slopes: DMatrix::from_fn(p, k, |j, c| self.beta[c][j]),
        }
    }

    fn fit_gaussian(&mut self, gram: &Gram, problem: &Problem, lambda: f64, config: &LassoConfig) -> Result<()> {
        gram.solve(&mut self.beta[0], lambda, config.tolerance, config.max_sweeps)
            .map_err(|Exhausted { achieved }| GlmError::NoConvergence { lambda, achieved })?;
        self.intercept[0] = gram.intercept(&self.beta[0]);
        linear_predictor(problem.x, self.intercept[0], &self.beta[0], &mut self.eta[0]);
        Ok(())
    }

    /// Weighted mean negative log-likelihood.
    fn loss(&self, problem: &Problem) -> f64 {
        match self.family {
            GlmFamily::Gaussian => {
                0.5 * problem.targets[0]
                    .iter()
                    .zip(&self.eta[0])
                    .zip(&problem.weights)
                    .map(|((y, e), w)| w * (y - e).powi(2))
                    .sum::<f64>()
            }
            GlmFamily::Binomial => problem.targets[0]
                .iter()
                .zip(&self.eta[0])
                .zip(&problem.weights)
                .map(|((y, e), w)| w * (log1p_exp(*e) - y * e))
                .sum(),
            GlmFamily::Multinomial { .. } => {
                let n = problem.x.nrows();
                (0..n)
                    .map(|i| {
                        let lse = log_sum_exp(self.eta.iter().map(|e| e[i]));
                        let observed: f64 = problem
                            .targets
                            .iter()
                            .zip(&self.eta)
                            .map(|(t, e)| t[i] * e[i])
                            .sum();
                        problem.weights[i] * (lse - observed)
                    })
                    .sum()
            }
        }
    }

    fn log_likelihood(&self, problem: &Problem) -> f64 {
        let total = problem.weight_total;
        match self.family {
            GlmFamily::Gaussian => {
                -total * (self.loss(problem) + 0.5 * (2.0 * std::f64::consts::PI).ln())
            }
            _ => -total * self.loss(problem),
        }
    }

    /// Proximal Newton step on output `k` given the current class
    /// probabilities `prob`. Returns the scaled coefficient change and the
    /// number of inner sweeps.
    fn newton_step(
        &mut self,
        problem: &Problem,
        k: usize,
        prob: &[f64],
        lambda: f64,
        config: &LassoConfig,
        sweeps_left: usize,
    ) -> Result<(f64, usize)> {
        let target = &problem.targets[k];
        let mut working = Vec::with_capacity(prob.len());
        let mut resid = Vec::with_capacity(prob.len());
        for ((p, y), w) in prob.iter().zip(target).zip(&problem.weights) {
            let var = (p * (1.0 - p)).max(MIN_VARIANCE);
            working.push(w * var);
            resid.push((y - p) / var);
        }
        let wls = Wls::new(problem.x, &working);
        let old_beta = self.beta[k].clone();
        let old_intercept = self.intercept[k];
        let old_eta = self.eta[k].clone();
        let old_loss = match self.loss_cache {
            Some(v) => v,
            None => self.loss(problem),
        };
        let old_objective = old_loss + lambda * self.beta.iter().map(|b| l1(b)).sum::<f64>();

        let sweeps = wls
            .solve(
                &mut resid,
                &mut self.beta[k],
                &mut self.intercept[k],
                lambda,
                config.tolerance,
                sweeps_left.max(1),
            )
            .map_err(|Exhausted { achieved }| GlmError::NoConvergence { lambda, achieved })?;
        let new_beta = self.beta[k].clone();
        let new_intercept = self.intercept[k];

        // Backtrack along the Newton direction if the objective went up.
        let mut step = 1.0;
        loop {
            for j in 0..new_beta.len() {
                self.beta[k][j] = old_beta[j] + step * (new_beta[j] - old_beta[j]);
            }
            self.intercept[k] = old_intercept + step * (new_intercept - old_intercept);
            linear_predictor(problem.x, self.intercept[k], &self.beta[k], &mut self.eta[k]);
            let loss = self.loss(problem);
            let objective = loss + lambda * self.beta.iter().map(|b| l1(b)).sum::<f64>();
            if objective <= old_objective + 1e-15 * old_objective.abs().max(1.0) {
                self.loss_cache = Some(loss);
                break;
            }
            step *= 0.5;
            if step < 1e-10 {
                self.beta[k].copy_from_slice(&old_beta);
                self.intercept[k] = old_intercept;
                self.eta[k] = old_eta;
                self.loss_cache = Some(old_loss);
                return Ok((0.0, sweeps));
            }
        }
        let mut change = (self.intercept[k] - old_intercept).abs();
        for j in 0..old_beta.len() {
            change = change.max((self.beta[k][j] - old_beta[j]).abs() * wls.curvature()[j].sqrt());
        }
        Ok((change, sweeps))
    }

    fn fit_binomial(&mut self, problem: &Problem, lambda: f64, config: &LassoConfig) -> Result<()> {
        let mut used = 0;
        for _ in 0..MAX_NEWTON_STEPS {
            let prob: Vec<f64> = self.eta[0].iter().map(|&e| sigmoid(e)).collect();
            let (change, sweeps) = self.newton_step(
                problem,
                0,
                &prob,
                lambda,
                config,
                config.max_sweeps.saturating_sub(used),
            )?;
            used += sweeps;
            if change < config.tolerance {
                return Ok(());
            }
            if used >= config.max_sweeps {
                return Err(GlmError::NoConvergence { lambda, achieved: change });
            }
        }
        Err(GlmError::NoConvergence {
            lambda,
            achieved: f64::NAN,
        })
    }

    fn probabilities(&self, n: usize) -> Vec<Vec<f64>> {
        let k = self.eta.len();
        let mut prob = vec![vec![0.0; n]; k];
        for i in 0..n {
            let lse = log_sum_exp(self.eta.iter().map(|e| e[i]));
            for c in 0..k {
                prob[c][i] = (self.eta[c][i] - lse).exp();
            }
        }
        prob
    }

    fn fit_multinomial(
        &mut self,
        problem: &Problem,
        lambda: f64,
        config: &LassoConfig,
    ) -> Result<()> {
        let n = problem.x.nrows();
        let classes = self.eta.len();
        let mut used = 0;
        for _ in 0..MAX_NEWTON_STEPS {
            let mut change = 0.0f64;
            for k in 0..classes {
                let prob = self.probabilities(n);
                let (c, sweeps) = self.newton_step(
                    problem,
                    k,
                    &prob[k],
                    lambda,
                    config,
                    config.max_sweeps.saturating_sub(used),
                )?;
                used += sweeps;
                change = change.max(c);
            }
            // Intercepts are only identified up to a common shift.
            let center = self.intercept.iter().sum::<f64>() / classes as f64;
            for (b, e) in self.intercept.iter_mut().zip(self.eta.iter_mut()) {
                *b -= center;
                e.iter_mut().for_each(|v| *v -= center);
            }
            if change < config.tolerance {
                return Ok(());
            }
            if used >= config.max_sweeps {
                return Err(GlmError::NoConvergence { lambda, achieved: change });
            }
        }
        Err(GlmError::NoConvergence {
            lambda,
            achieved: f64::NAN,
        })
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Extended BIC at every grid point:
/// `-2 loglik + df log(n) + 2 gamma df log(p)`.
pub fn ebic_values(path: &LassoPath, n: f64, p: usize, gamma: f64) -> Vec<f64> {
    let log_p = (p.max(1) as f64).ln();
    path.log_likelihoods
        .iter()
        .zip(&path.df)
        .map(|(ll, &df)| -2.0 * ll + df as f64 * n.ln() + 2.0 * gamma * df as f64 * log_p)
        .collect()
}

/// Index of the EBIC-minimizing lambda; ties go to the larger lambda.
pub fn select_ebic(path: &LassoPath, n: f64, p: usize, gamma: f64) -> usize {
    let values = ebic_values(path, n, p, gamma);
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_with(ll: Vec<f64>, df: Vec<usize>) -> LassoPath {
        let k = ll.len();
        LassoPath {
            family: GlmFamily::Gaussian,
            lambdas: (0..k).map(|i| 1.0 / (i + 1) as f64).collect(),
            coefficients: vec![
                Coefficients {
                    intercept: vec![0.0],
                    slopes: DMatrix::zeros(1, 1)
                };
                k
            ],
            log_likelihoods: ll,
            df,
            n_obs: 100.0,
        }
    }

    #[test]
    fn single_lambda_selects_zero() {
        assert_eq!(select_ebic(&path_with(vec![-10.0], vec![0]), 100.0, 5, 0.25), 0);
    }

    #[test]
    fn ties_go_to_larger_lambda() {
        // identical likelihood and df give identical EBIC
        let path = path_with(vec![-10.0, -10.0, -10.0], vec![1, 1, 1]);
        assert_eq!(select_ebic(&path, 100.0, 5, 0.25), 0);
        let path = path_with(vec![-10.0, -5.0, -5.0], vec![0, 0, 0]);
        assert_eq!(select_ebic(&path, 100.0, 5, 0.25), 1);
    }

    #[test]
    fn ebic_formula() {
        let path = path_with(vec![-3.0], vec![2]);
        let v = ebic_values(&path, 50.0, 4, 0.5)[0];
        let expected = 6.0 + 2.0 * 50f64.ln() + 2.0 * 0.5 * 2.0 * 4f64.ln();
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn grid_errors() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let y = [1.0, 0.0];
        let cfg = LassoConfig::default();
        assert_eq!(
            fit_path(&x, &y, GlmFamily::Gaussian, None, &[], &cfg).unwrap_err(),
            GlmError::EmptyGrid
        );
        assert_eq!(
            fit_path(&x, &y, GlmFamily::Gaussian, None, &[0.1, 0.2], &cfg).unwrap_err(),
            GlmError::NonDescendingGrid
        );
        assert_eq!(
            fit_path(&x, &y, GlmFamily::Gaussian, Some(&[0.0, 0.0]), &[0.1], &cfg).unwrap_err(),
            GlmError::InvalidWeights
        );
        assert!(matches!(
            fit_path(&x, &[1.0, 1.0], GlmFamily::Binomial, None, &[0.1], &cfg),
            Err(GlmError::InvalidResponse(_))
        ));
    }

    #[test]
    fn non_convergence_reports_tolerance() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.9, -1.0, -0.8, 0.5, 0.6, -0.5, -0.7]);
        let y = [1.0, -1.0, 0.4, -0.4];
        let cfg = LassoConfig {
            max_sweeps: 1,
            tolerance: 1e-30,
        };
        let err = fit_path(&x, &y, GlmFamily::Gaussian, None, &[1e-4], &cfg).unwrap_err();
        assert!(matches!(err, GlmError::NoConvergence { achieved, .. } if achieved > 0.0));
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = lambda_grid(2.0, 3, 0.01);
        assert!((g[0] - 2.0).abs() < 1e-15);
        assert!((g[1] - 0.2).abs() < 1e-12);
        assert!((g[2] - 0.02).abs() < 1e-12);
    }
}
