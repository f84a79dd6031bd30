use eo_cluster::conflict::{full_cost_matrix, generate_scenario, ScenarioParams, TargetLayout};
use eo_cluster::harness::{compare_to_truth, run_experiment, ExperimentConfig};
use eo_cluster::model::{total_cost, Assignment};
use eo_cluster::oracle::exact_min_cost;

#[test]
fn single_run_average_is_the_run_itself() {
    let result = run_experiment(&ExperimentConfig {
        num_problems: 1,
        num_matrices_per_problem: 1,
        steps: 2_000,
        trace_every: 1,
        ..Default::default()
    })
    .unwrap();
    assert_eq!(result.runs.len(), 1);
    assert_eq!(result.average, result.runs[0].trace);
    assert_eq!(result.average.len(), 2_001);
}

#[test]
fn protocol_run_averages_a_hundred_traces() {
    let result = run_experiment(&ExperimentConfig {
        steps: 2_000,
        trace_every: 50,
        master_seed: 5,
        ..Default::default()
    })
    .unwrap();
    assert_eq!(result.runs.len(), 100);
    assert!(result.runs.iter().all(|r| r.trace.len() == result.average.len()));
    let best: Vec<f64> = result.average.rows().iter().map(|r| r.best_cost).collect();
    assert!(best.windows(2).all(|w| w[1] <= w[0]));
    assert!(result.average.is_valid());
    for r in &result.runs {
        assert!(r.truth.true_cost >= r.final_best);
        assert!(r.truth.accuracy.is_some_and(|a| (0.0..=1.0).contains(&a)));
        assert_eq!(r.wall_ms, 0);
    }
}

#[test]
fn experiments_depend_only_on_the_master_seed() {
    let config = ExperimentConfig {
        num_problems: 3,
        num_matrices_per_problem: 2,
        steps: 1_000,
        ..Default::default()
    };
    let a = run_experiment(&config).unwrap();
    let b = run_experiment(&config).unwrap();
    assert_eq!(a, b);
    let c = run_experiment(&ExperimentConfig { master_seed: 1, ..config }).unwrap();
    assert_ne!(a.summary_csv(), c.summary_csv());
}

#[test]
fn true_labels_score_full_accuracy() {
    let reports = generate_scenario(&ScenarioParams {
        reports_per_burst: 30,
        noise_sigma: 1e-3,
        targets: TargetLayout::Fixed(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        ..Default::default()
    })
    .unwrap();
    let dense = full_cost_matrix(&reports).unwrap();
    let truth = reports.true_labels().unwrap();
    let best = Assignment::new(truth, 3).unwrap();
    let report = compare_to_truth(&reports, &best, &dense).unwrap();
    assert_eq!(report.accuracy, Some(1.0));
    let renamed = compare_to_truth(&reports, &best.permuted(&[2, 0, 1]).unwrap(), &dense).unwrap();
    assert_eq!(renamed.accuracy, Some(1.0));
    assert_eq!(renamed.true_cost, report.true_cost);
}

#[test]
fn optimum_gap_on_small_instances() {
    let reports = generate_scenario(&ScenarioParams {
        reports_per_burst: 10,
        seed: 8,
        ..Default::default()
    })
    .unwrap();
    let dense = full_cost_matrix(&reports).unwrap();
    let guess = Assignment::new((0..10).map(|i| i % 3).collect(), 3).unwrap();
    let report = compare_to_truth(&reports, &guess, &dense).unwrap();
    let exact = exact_min_cost(&dense, 3).unwrap().0;
    let gap = report.optimum_gap.unwrap();
    assert!(gap >= 0.0);
    assert!((gap - (total_cost(&dense, &guess).unwrap() - exact)).abs() < 1e-12);
}
