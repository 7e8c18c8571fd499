use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sepset::data::{StackedDataset, VariableSpec};
use sepset::estimators::EstimatorKind;
use sepset::pipeline::PipelineConfig;
use sepset::resample::*;
use sepset::rng::stream;
use sepset::sepset::SepsetMode;
use sepset::simulate::generate_dataset;
use sepset::with_threads;

fn iid(n: usize, seed: u64) -> StackedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let y: Vec<f64> = (0..n).map(|_| 3.0 + 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    StackedDataset::new(
        vec![VariableSpec::continuous("x")],
        DMatrix::from_column_slice(n, 1, &x),
        (0..n).map(|i| i % 2 == 0).collect(),
        y,
        DMatrix::from_column_slice(20, 1, &x[..20]),
    )
    .unwrap()
    .with_clusters((0..n as u32).collect())
    .unwrap()
}

fn mean_of_outcome(ds: &StackedDataset) -> ReplicateOutcome {
    let y = ds.outcome();
    ReplicateOutcome::Feasible {
        selected: vec![],
        values: vec![Some(y.iter().sum::<f64>() / y.len() as f64)],
    }
}

#[test]
fn constant_statistic_has_zero_se() {
    let ds = iid(30, 1);
    let report = cluster_bootstrap_with(&ds, &["c".into()], &[Some(1.0)], 2, 5, false, |_| {
        ReplicateOutcome::Feasible {
            selected: vec!["x".into()],
            values: vec![Some(1.0)],
        }
    })
    .unwrap();
    let est = &report.estimates[0];
    assert_eq!(est.se, Some(0.0));
    assert_eq!((est.ci_low, est.ci_high), (Some(1.0), Some(1.0)));
    assert_eq!(report.selection_frequency["x"], 1.0);
    assert_eq!(report.set_size_distribution[&1], 2);
}

#[test]
fn singleton_clusters_match_iid_standard_error() {
    let n = 400;
    let ds = iid(n, 2);
    let y = ds.outcome();
    let mean = y.iter().sum::<f64>() / n as f64;
    let s = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let analytic = s / (n as f64).sqrt();
    let report = cluster_bootstrap_with(&ds, &["mean".into()], &[Some(mean)], 2000, 9, false, mean_of_outcome).unwrap();
    let se = report.estimates[0].se.unwrap();
    assert!((se / analytic - 1.0).abs() < 0.10, "{se} vs {analytic}");
    assert_eq!(report.estimates[0].replicates_used, 2000);
}

#[test]
fn larger_clusters_move_together() {
    // Ten clusters of 40 identical outcomes: the bootstrap SE follows the
    // cluster count, not the row count.
    let n = 400;
    let mut ds = iid(n, 3);
    let cluster: Vec<u32> = (0..n as u32).map(|i| i / 40).collect();
    let y: Vec<f64> = cluster.iter().map(|&c| c as f64).collect();
    ds = StackedDataset::new(
        ds.specs().to_vec(),
        DMatrix::from_column_slice(n, 1, ds.experiment_column(0)),
        ds.treatment().to_vec(),
        y.clone(),
        DMatrix::from_column_slice(20, 1, ds.population_column(0)),
    )
    .unwrap()
    .with_clusters(cluster)
    .unwrap();
    let report = cluster_bootstrap_with(&ds, &["mean".into()], &[None], 2000, 4, true, mean_of_outcome).unwrap();
    let means: Vec<f64> = (0..10).map(|c| c as f64).collect();
    let sd = (means.iter().map(|v| (v - 4.5).powi(2)).sum::<f64>() / 9.0).sqrt();
    let analytic = sd / 10f64.sqrt();
    let se = report.estimates[0].se.unwrap();
    assert!((se / analytic - 1.0).abs() < 0.10, "{se} vs {analytic}");
}

#[test]
fn infeasible_replicates_are_counted_and_excluded() {
    let ds = iid(50, 4);
    let report = cluster_bootstrap_with(&ds, &["mean".into()], &[None], 40, 1, false, |rep| {
        if rep.outcome()[0] > 3.0 {
            ReplicateOutcome::Infeasible
        } else {
            mean_of_outcome(rep)
        }
    })
    .unwrap();
    assert_eq!(report.feasible + report.infeasible, 40);
    assert_eq!(report.infeasible_proportion, report.infeasible as f64 / 40.0);
    assert_eq!(report.estimates[0].replicates_used, report.feasible);
    let histogram: usize = report.set_size_distribution.values().sum();
    assert_eq!(histogram, report.feasible);
}

#[test]
fn argument_errors() {
    let ds = iid(20, 5);
    let labels = ["m".to_string()];
    assert!(matches!(
        cluster_bootstrap_with(&ds, &labels, &[None], 1, 1, false, mean_of_outcome),
        Err(ResampleError::TooFewReplicates(1))
    ));
    assert!(matches!(
        cluster_bootstrap_with(&ds, &labels, &[None], 5, 1, false, |_| ReplicateOutcome::Infeasible),
        Err(ResampleError::AllInfeasible(5))
    ));
    let bare = StackedDataset::new(
        ds.specs().to_vec(),
        DMatrix::from_column_slice(20, 1, ds.experiment_column(0)),
        ds.treatment().to_vec(),
        ds.outcome().to_vec(),
        DMatrix::from_column_slice(20, 1, ds.population_column(0)),
    )
    .unwrap();
    assert!(matches!(
        cluster_bootstrap_with(&bare, &labels, &[None], 5, 1, false, mean_of_outcome),
        Err(ResampleError::MissingClusters)
    ));
}

fn design(n: usize) -> StackedDataset {
    generate_dataset(&mut stream(31, n as u64, 0), n, 2000, 8).unwrap()
}

#[test]
fn full_pipeline_report_is_thread_independent() {
    let ds = design(300);
    let mut config = PipelineConfig::marginal(&["X4", "X5"]);
    config.estimators = vec![EstimatorKind::Ipw, EstimatorKind::SateDim];
    let runs: Vec<BootstrapReport> = [1, 2, 8]
        .into_iter()
        .map(|t| with_threads(Some(t), || cluster_bootstrap(&ds, &config, 12, 77, false).unwrap()))
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
    let report = &runs[0];
    assert_eq!(report.replicates, 12);
    assert!(report.estimates[0].point.is_some());
    for f in report.selection_frequency.values() {
        assert!((0.0..=1.0).contains(f));
    }
    let other = cluster_bootstrap(&ds, &config, 12, 78, false).unwrap();
    assert_ne!(&other, report);
}

#[test]
fn forced_members_are_always_selected() {
    let ds = design(400);
    let mut config = PipelineConfig::marginal(&["X2", "X4", "X5"]);
    config.mode = SepsetMode::Exact;
    config.heterogeneity = vec!["X2".into(), "X3".into()];
    let report = cluster_bootstrap(&ds, &config, 10, 3, false).unwrap();
    assert!(report.feasible > 0);
    assert_eq!(report.selection_frequency["X2"], 1.0);
}

/// `Y` and selection both depend on `Z` alone, and `Z` is not measured in
/// the population, so no usable set exists once the edge is detected.
fn no_alternative(n: usize, seed: u64) -> StackedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let t: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    let y: Vec<f64> = z.iter().map(|z| 0.8 * z + rng.sample::<f64, _>(StandardNormal)).collect();
    let mut x = DMatrix::zeros(n, 2);
    for i in 0..n {
        x[(i, 0)] = z[i];
        x[(i, 1)] = v[i];
    }
    let pop = DMatrix::from_fn(200, 2, |_, j| if j == 0 { f64::NAN } else { rng.sample(StandardNormal) });
    StackedDataset::new(
        vec![VariableSpec::continuous("Z").unmeasured(), VariableSpec::continuous("V")],
        x,
        t,
        y,
        pop,
    )
    .unwrap()
    .with_clusters((0..n as u32).collect())
    .unwrap()
}

#[test]
fn infeasibility_grows_with_sample_size() {
    let config = PipelineConfig::marginal(&["Z"]);
    let prop = |n| {
        let ds = no_alternative(n, 8);
        match cluster_bootstrap(&ds, &config, 20, 1, false) {
            Ok(r) => r.infeasible_proportion,
            Err(ResampleError::AllInfeasible(_)) => 1.0,
            Err(e) => panic!("{e}"),
        }
    };
    let small = prop(25);
    let large = prop(800);
    assert!(large >= small, "{small} {large}");
    assert_eq!(large, 1.0);
}
