#![allow(dead_code)]
//! Oracles shared by several test targets.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sepset::glm::{Coefficients, GlmFamily};
use sepset::graph::MarkovGraph;

pub fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn standardize_columns(x: &mut DMatrix<f64>) {
    let n = x.nrows() as f64;
    for mut col in x.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / n).sqrt();
        col /= sd;
    }
}

/// Largest violation of the subgradient conditions of
/// `mean_w loss + lambda |b|_1`, computed from scratch.
pub fn kkt_violation(
    x: &DMatrix<f64>,
    y: &[f64],
    family: GlmFamily,
    w: &[f64],
    coef: &Coefficients,
    lambda: f64,
) -> f64 {
    let n = x.nrows();
    let total: f64 = w.iter().sum();
    let outputs = coef.intercept.len();
    // fitted means per output
    let eta: Vec<Vec<f64>> = (0..outputs)
        .map(|k| {
            (0..n)
                .map(|i| {
                    coef.intercept[k]
                        + (0..x.ncols()).map(|j| x[(i, j)] * coef.slopes[(j, k)]).sum::<f64>()
                })
                .collect()
        })
        .collect();
    let mean: Vec<Vec<f64>> = match family {
        GlmFamily::Gaussian => eta.clone(),
        GlmFamily::Binomial => vec![eta[0].iter().map(|e| 1.0 / (1.0 + (-e).exp())).collect()],
        GlmFamily::Multinomial { classes } => {
            let mut out = vec![vec![0.0; n]; classes];
            for i in 0..n {
                let z: f64 = (0..classes).map(|k| eta[k][i].exp()).sum();
                for k in 0..classes {
                    out[k][i] = eta[k][i].exp() / z;
                }
            }
            out
        }
    };
    let target = |k: usize, i: usize| match family {
        GlmFamily::Multinomial { .. } => f64::from(y[i] as usize == k),
        _ => y[i],
    };
    let mut worst = 0.0f64;
    for k in 0..outputs {
        let intercept_score: f64 =
            (0..n).map(|i| w[i] * (target(k, i) - mean[k][i])).sum::<f64>() / total;
        worst = worst.max(intercept_score.abs());
        for j in 0..x.ncols() {
            let score: f64 =
                (0..n).map(|i| w[i] * x[(i, j)] * (target(k, i) - mean[k][i])).sum::<f64>() / total;
            let b = coef.slopes[(j, k)];
            let v = if b != 0.0 {
                (score - lambda * b.signum()).abs()
            } else {
                (score.abs() - lambda).max(0.0)
            };
            worst = worst.max(v);
        }
    }
    worst
}

pub fn random_graph(rng: &mut ChaCha8Rng, k: usize, density: f64) -> MarkovGraph {
    let names: Vec<String> = (0..k).map(|i| format!("N{i}")).collect();
    let mut edges = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            if rng.random_bool(density) {
                edges.push((a, b, 1.0));
            }
        }
    }
    MarkovGraph::from_weighted_edges(names, &edges, Default::default()).unwrap()
}

pub fn covers(rows: &[Vec<u8>], set: u32) -> bool {
    rows.iter()
        .all(|r| r.iter().enumerate().any(|(j, &b)| b == 1 && set & (1 << j) != 0))
}

// Correlations among X1..X9 as printed alongside the design.
pub const PRINTED: [[f64; 9]; 9] = [
    [1.00, -0.70, 0.70, 0.70, -0.20, 0.00, 0.00, 0.50, -0.70],
    [-0.70, 1.00, -0.50, -0.50, 0.15, 0.00, 0.00, -0.70, 0.50],
    [0.70, -0.50, 1.00, 0.50, -0.15, 0.00, 0.00, 0.33, -0.50],
    [0.70, -0.50, 0.50, 1.00, -0.15, 0.00, 0.00, 0.33, -0.50],
    [-0.21, 0.15, -0.15, -0.15, 1.00, 0.00, 0.00, -0.10, 0.30],
    [0.00, 0.00, 0.00, 0.00, 0.00, 1.00, 0.00, 0.00, 0.00],
    [0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 1.00, 0.00, 0.00],
    [0.50, -0.70, 0.33, 0.33, -0.10, 0.00, 0.00, 1.00, -0.33],
    [-0.70, 0.50, -0.50, -0.50, 0.30, 0.00, 0.00, -0.33, 1.00],
];

pub fn correlation(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows() as f64;
    let means = x.row_mean();
    let centered = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - means[j]);
    let cov = centered.tr_mul(&centered) / n;
    DMatrix::from_fn(9, 9, |a, b| cov[(a, b)] / (cov[(a, a)] * cov[(b, b)]).sqrt())
}
