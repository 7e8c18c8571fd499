mod common;

use common::{correlation, PRINTED};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sepset::graph::MarkovGraph;
use sepset::rng::stream;
use sepset::simulate::*;

#[test]
fn covariate_correlations_match_printed_matrix() {
    let x = gen_covariates(&mut ChaCha8Rng::seed_from_u64(1), 100_000);
    let r = correlation(&x);
    for a in 0..9 {
        for b in 0..9 {
            assert!(
                (r[(a, b)] - PRINTED[a][b]).abs() < 0.03,
                "X{} X{}: {:.3} vs {}",
                a + 1,
                b + 1,
                r[(a, b)],
                PRINTED[a][b]
            );
        }
    }
}

#[test]
fn population_effect_is_five() {
    // The unit-level effect has SD about 17, so 4e6 draws put 0.02 at 2.3 SE.
    let mut total = 0.0;
    let draws = 4_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..draws / 100_000 {
        let x = gen_covariates(&mut rng, 100_000);
        for i in 0..x.nrows() {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            total += potential_outcome(&row, true, 0.0) - potential_outcome(&row, false, 0.0);
        }
    }
    let mean = total / draws as f64;
    assert!((mean - TRUE_PATE).abs() < 0.02, "{mean}");
}

#[test]
fn potential_outcomes_follow_formula() {
    let x = [0.3, -1.0, 2.0, 0.0, 0.0, 0.5, 9.0, 1.5, 4.0];
    assert_eq!(potential_outcome(&x, false, 0.25), 0.5 - 4.5 + 0.25);
    assert_eq!(potential_outcome(&x, true, 0.0), 5.0 + 20.0 + 10.0 + 0.5 - 4.5);
}

#[test]
fn sampling_favours_high_x5_and_low_x4() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pool = gen_covariates(&mut rng, 40_000);
    let draw = gen_sampling(&mut rng, &pool, 5_000).unwrap();
    assert!(draw.prob.iter().all(|p| *p > 0.0 && *p < 1.0));
    let lo = draw.prob.iter().cloned().fold(1.0, f64::min);
    let hi = draw.prob.iter().cloned().fold(0.0, f64::max);
    // Standardized score times 0.25 stays within about +-1.2 here.
    assert!(lo > 0.15 && hi < 0.85, "{lo} {hi}");
    assert!(draw.selected.windows(2).all(|w| w[0] < w[1]));
    let mean = |rows: &mut dyn Iterator<Item = usize>, j: usize| {
        let v: Vec<f64> = rows.map(|i| pool[(i, j)]).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let sel_x5 = mean(&mut draw.selected.iter().copied(), 4);
    let all_x5 = mean(&mut (0..pool.nrows()), 4);
    let sel_x4 = mean(&mut draw.selected.iter().copied(), 3);
    let all_x4 = mean(&mut (0..pool.nrows()), 3);
    assert!(sel_x5 > all_x5 + 0.05, "{sel_x5} vs {all_x5}");
    assert!(sel_x4 < all_x4 - 0.05, "{sel_x4} vs {all_x4}");
}

#[test]
fn constant_score_is_degenerate() {
    let x = DMatrix::from_element(50, 9, 1.0);
    assert!(matches!(sampling_probabilities(&x), Err(SimError::Degenerate)));
}

#[test]
fn small_pool_is_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pool = gen_covariates(&mut rng, 100);
    assert!(matches!(
        gen_sampling(&mut rng, &pool, 99),
        Err(SimError::PoolTooSmall { pool: 100, .. })
    ));
}

#[test]
fn generated_dataset_shape() {
    let ds = generate_dataset(&mut stream(5, 200, 0), 200, 1000, 8).unwrap();
    assert_eq!(ds.n_experiment(), 200);
    assert_eq!(ds.m_population(), 1000);
    assert_eq!(ds.clusters().unwrap(), (0..200).collect::<Vec<u32>>().as_slice());
    let again = generate_dataset(&mut stream(5, 200, 0), 200, 1000, 8).unwrap();
    assert_eq!(ds, again);
}

/// Precision-matrix support of the covariate SEM, the outcome's parents
/// married, and the edge induced between the two causes of selection.
fn derived_graph() -> MarkovGraph {
    let mut b = DMatrix::<f64>::zeros(9, 9);
    for (child, parent, coef) in [(1, 0, -0.7), (2, 0, 0.7), (3, 0, 0.7), (8, 0, -0.7), (4, 8, 0.3), (7, 1, -0.7)] {
        b[(child, parent)] = coef;
    }
    let mut noise = DVector::from_element(9, 1.0);
    for (j, coef) in [(1, 0.7), (2, 0.7), (3, 0.7), (8, 0.7), (4, 0.3), (7, 0.7)] {
        noise[j] = 1.0 - coef * coef;
    }
    let a = DMatrix::identity(9, 9) - b;
    let precision = a.transpose() * DMatrix::from_diagonal(&noise.map(|v| 1.0 / v)) * a;
    let mut edges: Vec<(String, String)> = Vec::new();
    for i in 0..9 {
        for j in i + 1..9 {
            if precision[(i, j)].abs() > 1e-12 {
                edges.push((COVARIATES[i].into(), COVARIATES[j].into()));
            }
        }
    }
    let parents = ["X2", "X3", "X6", "X8"];
    for (k, a) in parents.iter().enumerate() {
        edges.push(((*a).into(), "Y".into()));
        for b in &parents[k + 1..] {
            edges.push(((*a).into(), (*b).into()));
        }
    }
    edges.push(("X4".into(), "X5".into()));
    let mut names: Vec<&str> = COVARIATES.to_vec();
    names.push("Y");
    let pairs: Vec<(&str, &str)> = edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    MarkovGraph::from_edges(&names, &pairs).unwrap()
}

#[test]
fn oracle_graph_matches_derivation() {
    let oracle = oracle_graph();
    let derived = derived_graph();
    assert_eq!(oracle.node_names(), derived.node_names());
    let mut a = oracle.edges();
    let mut b = derived.edges();
    a.sort();
    b.sort();
    assert_eq!(a, b);
}

#[test]
fn known_sets_are_classified() {
    let g = oracle_graph();
    assert_eq!(classify_set(&g, &["X1"]), SetType::MinSepset);
    assert_eq!(classify_set(&g, &["X4", "X5"]), SetType::SimilarSampling);
    assert_eq!(classify_set(&g, &["X2", "X3"]), SetType::SimilarHeterogeneity);
    assert_eq!(classify_set(&g, &["X2", "X3", "X4", "X5"]), SetType::SimilarSampling);
    assert_eq!(classify_set(&g, &["X2", "X3", "X6", "X8"]), SetType::SimilarHeterogeneity);
    assert_eq!(classify_set(&g, &["X4", "X9"]), SetType::OtherAppropriate);
    assert_eq!(classify_set(&g, &["X4"]), SetType::Inappropriate);
    assert_eq!(classify_set(&g, &[] as &[&str]), SetType::Inappropriate);
}

#[test]
fn simulation_is_reproducible_and_complete() {
    let config = SimConfig {
        sizes: vec![100, 200],
        m: 2000,
        reps: 6,
        seed: 11,
        ..SimConfig::default()
    };
    let a = run_simulation(&config).unwrap();
    let b = sepset::with_threads(Some(1), || run_simulation(&config).unwrap());
    assert_eq!(a, b);
    for n in [100, 200] {
        let row = a
            .bias_row(n, sepset::estimators::EstimatorKind::Ipw, SetKind::OracleSampling)
            .unwrap();
        assert_eq!(row.reps_used + row.failed, 6);
        let total: f64 = SetType::ALL
            .iter()
            .map(|t| a.type_frequency(n, SetKind::Marginal, *t))
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
    let mut out = Vec::new();
    a.write_bias_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("n,estimator,set_kind,"));
}

#[test]
fn config_rejects_small_sizes() {
    let config = SimConfig {
        sizes: vec![50],
        ..SimConfig::default()
    };
    assert!(matches!(config.validate(), Err(SimError::Config(_))));
}
