//! Coordinate descent for the weighted least-squares lasso subproblem
//!
//!   minimize 1/2 * sum_i w_i (z_i - b0 - x_i' beta)^2 + lambda * |beta|_1
//!
//! shared by every family: gaussian solves it once per lambda, binomial and
//! multinomial solve it inside a proximal Newton loop.

use nalgebra::DMatrix;

pub(crate) fn soft_threshold(value: f64, threshold: f64) -> f64 {
    if value > threshold {
        value - threshold
    } else if value < -threshold {
        value + threshold
    } else {
        0.0
    }
}

pub(crate) struct Wls<'a> {
    x: &'a [f64],
    n: usize,
    weights: &'a [f64],
    weight_sum: f64,
    /// Weighted squared norm of each column.
    curvature: Vec<f64>,
}

pub(crate) struct Exhausted {
    pub achieved: f64,
}

impl<'a> Wls<'a> {
    pub fn new(x: &'a DMatrix<f64>, weights: &'a [f64]) -> Self {
        let n = x.nrows();
        let xs = x.as_slice();
        let curvature = (0..x.ncols())
            .map(|j| {
                xs[j * n..(j + 1) * n]
                    .iter()
                    .zip(weights)
                    .map(|(v, w)| w * v * v)
                    .sum()
            })
            .collect();
        Self {
            x: xs,
            n,
            weights,
            weight_sum: weights.iter().sum(),
            curvature,
        }
    }

    fn column(&self, j: usize) -> &[f64] {
        &self.x[j * self.n..(j + 1) * self.n]
    }

    fn update_coordinate(&self, j: usize, resid: &mut [f64], beta: &mut [f64], lambda: f64) -> f64 {
        let h = self.curvature[j];
        if h <= 0.0 {
            return 0.0;
        }
        let col = self.column(j);
        let score: f64 = col
            .iter()
            .zip(self.weights)
            .zip(resid.iter())
            .map(|((x, w), r)| x * w * r)
            .sum();
        let old = beta[j];
        let new = soft_threshold(score + h * old, lambda) / h;
        if new == old {
            return 0.0;
        }
        let delta = new - old;
        beta[j] = new;
        for (r, x) in resid.iter_mut().zip(col) {
            *r -= x * delta;
        }
        delta.abs() * h.sqrt()
    }

    fn update_intercept(&self, resid: &mut [f64], intercept: &mut f64) -> f64 {
        if self.weight_sum <= 0.0 {
            return 0.0;
        }
        let shift = resid
            .iter()
            .zip(self.weights)
            .map(|(r, w)| r * w)
            .sum::<f64>()
            / self.weight_sum;
        if shift == 0.0 {
            return 0.0;
        }
        *intercept += shift;
        for r in resid.iter_mut() {
            *r -= shift;
        }
        shift.abs() * self.weight_sum.sqrt()
    }

    /// Runs sweeps until the largest scaled coefficient change falls below
    /// `tolerance`. `resid` must hold `z - eta` on entry and is kept current.
    /// Returns the number of sweeps used.
    pub fn solve(
        &self,
        resid: &mut [f64],
        beta: &mut [f64],
        intercept: &mut f64,
        lambda: f64,
        tolerance: f64,
        max_sweeps: usize,
    ) -> Result<usize, Exhausted> {
        let p = beta.len();
        let mut sweeps = 0;
        let mut last = f64::INFINITY;
        loop {
            let mut change = self.update_intercept(resid, intercept);
            for j in 0..p {
                change = change.max(self.update_coordinate(j, resid, beta, lambda));
            }
            sweeps += 1;
            last = last.min(change);
            if change < tolerance {
                return Ok(sweeps);
            }
            // Iterate on the active set until it settles, then recheck all.
            let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
            loop {
                if sweeps >= max_sweeps {
                    return Err(Exhausted { achieved: last });
                }
                let mut change = self.update_intercept(resid, intercept);
                for &j in &active {
                    change = change.max(self.update_coordinate(j, resid, beta, lambda));
                }
                sweeps += 1;
                last = change;
                if change < tolerance {
                    break;
                }
            }
            if sweeps >= max_sweeps {
                return Err(Exhausted { achieved: last });
            }
        }
    }

    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }
}

/// Covariance-form coordinate descent for the weighted gaussian lasso with
/// an unpenalized intercept. The weighted Gram matrix of the centered design
/// is formed once, after which every coordinate update costs `O(p)`.
pub(crate) struct Gram {
    p: usize,
    /// Row-major `p x p`.
    gram: Vec<f64>,
    cross: Vec<f64>,
    x_mean: Vec<f64>,
    y_mean: f64,
    /// Sum of the caller's weights; the Gram matrix uses normalized ones.
    scale: f64,
}

impl Gram {
    pub fn new(x: &DMatrix<f64>, weights: &[f64], y: &[f64]) -> Self {
        let scale: f64 = weights.iter().sum();
        let normalized: Vec<f64> = weights.iter().map(|w| w / scale).collect();
        let weights = &normalized[..];
        let (n, p) = x.shape();
        let xs = x.as_slice();
        let col = |j: usize| &xs[j * n..(j + 1) * n];
        let x_mean: Vec<f64> = (0..p)
            .map(|j| col(j).iter().zip(weights).map(|(v, w)| v * w).sum())
            .collect();
        let y_mean: f64 = y.iter().zip(weights).map(|(v, w)| v * w).sum();
        let centered: Vec<Vec<f64>> = (0..p)
            .map(|j| col(j).iter().map(|v| v - x_mean[j]).collect())
            .collect();
        let mut gram = vec![0.0; p * p];
        for a in 0..p {
            for b in a..p {
                let v: f64 = centered[a]
                    .iter()
                    .zip(&centered[b])
                    .zip(weights)
                    .map(|((u, v), w)| u * v * w)
                    .sum();
                gram[a * p + b] = v;
                gram[b * p + a] = v;
            }
        }
        let cross = (0..p)
            .map(|j| {
                centered[j]
                    .iter()
                    .zip(y)
                    .zip(weights)
                    .map(|((u, v), w)| u * (v - y_mean) * w)
                    .sum()
            })
            .collect();
        Self {
            p,
            gram,
            cross,
            x_mean,
            y_mean,
            scale,
        }
    }

    pub fn intercept(&self, beta: &[f64]) -> f64 {
        self.y_mean - self.x_mean.iter().zip(beta).map(|(m, b)| m * b).sum::<f64>()
    }

    fn update(&self, j: usize, score: &mut [f64], beta: &mut [f64], lambda: f64) -> f64 {
        let p = self.p;
        let h = self.gram[j * p + j];
        if h <= 0.0 {
            return 0.0;
        }
        let old = beta[j];
        let new = soft_threshold(score[j] + h * old, lambda) / h;
        if new == old {
            return 0.0;
        }
        let delta = new - old;
        beta[j] = new;
        for (s, g) in score.iter_mut().zip(&self.gram[j * p..(j + 1) * p]) {
            *s -= g * delta;
        }
        delta.abs() * h.sqrt()
    }

    /// Same sweep schedule and stopping rule as [`Wls::solve`].
    pub fn solve(
        &self,
        beta: &mut [f64],
        lambda: f64,
        tolerance: f64,
        max_sweeps: usize,
    ) -> Result<usize, Exhausted> {
        let p = self.p;
        let lambda = lambda / self.scale;
        let tolerance = tolerance / self.scale.sqrt();
        // score_j = cross_j - (G beta)_j
        let mut score: Vec<f64> = (0..p)
            .map(|j| {
                self.cross[j]
                    - self.gram[j * p..(j + 1) * p]
                        .iter()
                        .zip(beta.iter())
                        .map(|(g, b)| g * b)
                        .sum::<f64>()
            })
            .collect();
        let mut sweeps = 0;
        let mut last = f64::INFINITY;
        loop {
            let mut change = 0.0f64;
            for j in 0..p {
                change = change.max(self.update(j, &mut score, beta, lambda));
            }
            sweeps += 1;
            last = last.min(change);
            if change < tolerance {
                return Ok(sweeps);
            }
            let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
            loop {
                if sweeps >= max_sweeps {
                    return Err(Exhausted { achieved: last * self.scale.sqrt() });
                }
                let mut change = 0.0f64;
                for &j in &active {
                    change = change.max(self.update(j, &mut score, beta, lambda));
                }
                sweeps += 1;
                last = change;
                if change < tolerance {
                    break;
                }
            }
            if sweeps >= max_sweeps {
                return Err(Exhausted { achieved: last * self.scale.sqrt() });
            }
        }
    }
}
