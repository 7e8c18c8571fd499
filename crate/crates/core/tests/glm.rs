mod common;

use common::{kkt_violation, normal_matrix, standardize_columns};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sepset::glm::{
    fit_path, lambda_grid, lambda_max, select_ebic, GlmFamily, LassoConfig,
};

fn gaussian_objective(x: &DMatrix<f64>, y: &[f64], b0: f64, b: &[f64], lambda: f64) -> f64 {
    let n = x.nrows();
    let rss: f64 = (0..n)
        .map(|i| {
            let fit = b0 + (0..b.len()).map(|j| x[(i, j)] * b[j]).sum::<f64>();
            (y[i] - fit).powi(2)
        })
        .sum();
    0.5 * rss / n as f64 + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
}

#[test]
fn orthonormal_design_matches_soft_threshold() {
    // Columns of a Hadamard-like matrix are centered and orthogonal.
    let n = 8;
    let x = DMatrix::from_fn(n, 3, |i, j| {
        let bit = (i >> j) & 1;
        if bit == 1 {
            1.0
        } else {
            -1.0
        }
    });
    // X'X / n = I
    let gram = x.transpose() * &x / n as f64;
    assert!((gram - DMatrix::identity(3, 3)).abs().max() < 1e-15);
    let y = [3.1, -0.4, 2.2, 0.7, -1.9, 0.3, 1.4, -2.6];
    let ols: Vec<f64> = (0..3)
        .map(|j| (0..n).map(|i| x[(i, j)] * y[i]).sum::<f64>() / n as f64)
        .collect();
    let lambdas = [0.9, 0.5, 0.2, 0.05];
    let path = fit_path(&x, &y, GlmFamily::Gaussian, None, &lambdas, &LassoConfig::default())
        .unwrap();
    for (coef, &lambda) in path.coefficients.iter().zip(&lambdas) {
        for j in 0..3 {
            let expected = ols[j].signum() * (ols[j].abs() - lambda).max(0.0);
            assert!(
                (coef.slopes[(j, 0)] - expected).abs() < 1e-8,
                "lambda {lambda} column {j}: {} vs {expected}",
                coef.slopes[(j, 0)]
            );
        }
    }
}

#[test]
fn lambda_max_zeroes_every_slope() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut x = normal_matrix(&mut rng, 60, 5);
    standardize_columns(&mut x);
    let y: Vec<f64> = (0..60).map(|i| x[(i, 0)] * 2.0 + rng.sample::<f64, _>(StandardNormal)).collect();
    let lmax = lambda_max(&x, &y, GlmFamily::Gaussian, None).unwrap();
    // direct formula
    let ybar = y.iter().sum::<f64>() / 60.0;
    let direct = (0..5)
        .map(|j| ((0..60).map(|i| x[(i, j)] * (y[i] - ybar)).sum::<f64>() / 60.0).abs())
        .fold(0.0, f64::max);
    assert!((lmax - direct).abs() < 1e-12);
    let grid = lambda_grid(lmax, 10, 0.01);
    let path = fit_path(&x, &y, GlmFamily::Gaussian, None, &grid, &LassoConfig::default()).unwrap();
    assert_eq!(path.df[0], 0);
    assert!(path.coefficients[0].slopes.iter().all(|&b| b == 0.0));
    assert!(path.df[9] > 0);

    let yb: Vec<f64> = (0..60).map(|i| f64::from(x[(i, 1)] > 0.3)).collect();
    let lmax = lambda_max(&x, &yb, GlmFamily::Binomial, None).unwrap();
    let path = fit_path(&x, &yb, GlmFamily::Binomial, None, &lambda_grid(lmax, 5, 0.05), &LassoConfig::default()).unwrap();
    assert_eq!(path.df[0], 0);
}

#[test]
fn first_grid_point_is_exactly_null() {
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = normal_matrix(&mut rng, 300, 3);
        let yg: Vec<f64> = (0..300).map(|_| rng.sample(StandardNormal)).collect();
        let yb: Vec<f64> = (0..300).map(|_| f64::from(rng.random_bool(0.5))).collect();
        let ym: Vec<f64> = (0..300).map(|_| rng.random_range(0..3) as f64).collect();
        for (y, family) in [
            (&yg, GlmFamily::Gaussian),
            (&yb, GlmFamily::Binomial),
            (&ym, GlmFamily::Multinomial { classes: 3 }),
        ] {
            let lmax = lambda_max(&x, y, family, None).unwrap();
            let path = fit_path(&x, y, family, None, &lambda_grid(lmax, 3, 0.5), &LassoConfig::default()).unwrap();
            assert_eq!(path.df[0], 0, "seed {seed} {family:?}");
        }
    }
}

#[test]
fn gaussian_solution_beats_random_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut x = normal_matrix(&mut rng, 50, 8);
    standardize_columns(&mut x);
    let y: Vec<f64> = (0..50)
        .map(|i| 1.5 * x[(i, 0)] - x[(i, 3)] + 0.5 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let lambda = 0.1;
    let path = fit_path(&x, &y, GlmFamily::Gaussian, None, &[lambda], &LassoConfig::default()).unwrap();
    let coef = &path.coefficients[0];
    let b: Vec<f64> = coef.slopes.column(0).iter().copied().collect();
    let best = gaussian_objective(&x, &y, coef.intercept[0], &b, lambda);
    for _ in 0..1000 {
        let scale = 10f64.powf(rng.random_range(-6.0..-1.0));
        let pb: Vec<f64> = b
            .iter()
            .map(|v| v + scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let pb0 = coef.intercept[0] + scale * rng.sample::<f64, _>(StandardNormal);
        assert!(gaussian_objective(&x, &y, pb0, &pb, lambda) >= best - 1e-12);
    }
}

#[test]
fn kkt_conditions_hold_for_random_problems() {
    let cfg = LassoConfig::default();
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(40..120);
        let p = rng.random_range(2..9);
        let mut x = normal_matrix(&mut rng, n, p);
        standardize_columns(&mut x);
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..2.0)).collect();
        let lin: Vec<f64> = (0..n).map(|i| x[(i, 0)] - 0.7 * x[(i, p - 1)]).collect();
        let y_classes: Vec<f64> = lin
            .iter()
            .map(|v| {
                let v = v + rng.sample::<f64, _>(StandardNormal);
                if v < -0.5 {
                    0.0
                } else if v < 0.5 {
                    1.0
                } else {
                    2.0
                }
            })
            .collect();
        let y_bin: Vec<f64> = y_classes.iter().map(|&c| f64::from(c == 2.0)).collect();
        let y_gauss: Vec<f64> = lin.iter().map(|v| v + rng.sample::<f64, _>(StandardNormal)).collect();
        for (family, y) in [
            (GlmFamily::Gaussian, &y_gauss),
            (GlmFamily::Binomial, &y_bin),
            (GlmFamily::Multinomial { classes: 3 }, &y_classes),
        ] {
            let lmax = lambda_max(&x, y, family, Some(&w)).unwrap();
            let grid = lambda_grid(lmax, 12, 0.01);
            let path = fit_path(&x, y, family, Some(&w), &grid, &cfg).unwrap();
            for (coef, &lambda) in path.coefficients.iter().zip(&grid) {
                let v = kkt_violation(&x, y, family, &w, coef, lambda);
                assert!(v < 1e-6, "seed {seed} {family:?} lambda {lambda}: violation {v}");
            }
        }
    }
}

#[test]
fn gaussian_scaling_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut x = normal_matrix(&mut rng, 80, 4);
    standardize_columns(&mut x);
    let y: Vec<f64> = (0..80).map(|i| x[(i, 2)] + rng.sample::<f64, _>(StandardNormal)).collect();
    let c = 3.5;
    let yc: Vec<f64> = y.iter().map(|v| v * c).collect();
    let grid = [0.3, 0.1, 0.03];
    let grid_c: Vec<f64> = grid.iter().map(|l| l * c).collect();
    let cfg = LassoConfig { tolerance: 1e-12, ..LassoConfig::default() };
    let a = fit_path(&x, &y, GlmFamily::Gaussian, None, &grid, &cfg).unwrap();
    let b = fit_path(&x, &yc, GlmFamily::Gaussian, None, &grid_c, &cfg).unwrap();
    for (ca, cb) in a.coefficients.iter().zip(&b.coefficients) {
        for (u, v) in ca.slopes.iter().zip(cb.slopes.iter()) {
            assert!((u * c - v).abs() < 1e-9, "{u} * {c} vs {v}");
        }
    }
}

#[test]
fn fits_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut x = normal_matrix(&mut rng, 100, 6);
    standardize_columns(&mut x);
    let y: Vec<f64> = (0..100).map(|i| f64::from(x[(i, 0)] + 0.3 * x[(i, 1)] > 0.1)).collect();
    let lmax = lambda_max(&x, &y, GlmFamily::Binomial, None).unwrap();
    let grid = lambda_grid(lmax, 20, 0.01);
    let a = fit_path(&x, &y, GlmFamily::Binomial, None, &grid, &LassoConfig::default()).unwrap();
    let b = fit_path(&x, &y, GlmFamily::Binomial, None, &grid, &LassoConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ebic_recovers_sparse_support() {
    // n = 500, p = 10, two true nonzeros, signal-to-noise variance ratio 5.
    let (n, p) = (500, 10);
    let mut hits = 0;
    let reps = 200;
    for seed in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let mut x = normal_matrix(&mut rng, n, p);
        standardize_columns(&mut x);
        // signal variance 1 + 1 = 2, noise variance 2 / 5
        let noise_sd = (2.0f64 / 5.0).sqrt();
        let y: Vec<f64> = (0..n)
            .map(|i| x[(i, 0)] - x[(i, 4)] + noise_sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let lmax = lambda_max(&x, &y, GlmFamily::Gaussian, None).unwrap();
        let grid = lambda_grid(lmax, 50, 0.01);
        let path = fit_path(&x, &y, GlmFamily::Gaussian, None, &grid, &LassoConfig::default()).unwrap();
        let best = select_ebic(&path, n as f64, p, 0.25);
        let support: Vec<usize> = (0..p)
            .filter(|&j| path.coefficients[best].slopes[(j, 0)] != 0.0)
            .collect();
        if support == vec![0, 4] {
            hits += 1;
        }
    }
    println!("EBIC support recovery: {hits}/{reps}");
    assert!(hits as f64 >= 0.95 * reps as f64, "{hits}/{reps}");
}
