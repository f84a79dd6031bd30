use std::collections::HashMap;

use eo_cluster::conflict::{
    full_cost_matrix, generate_scenario, sample_sparse_graph, ScenarioParams, SparseSamplerParams,
    SparseSource, WeightMode,
};
use eo_cluster::engine::PowerLawTable;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn pair_selection_is_uniform() {
    // n = 8, gamma = 2: M = 8 of the 28 pairs per draw.
    let draws = 10_000;
    let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
    for seed in 0..draws {
        let g = sample_sparse_graph(
            SparseSource::Vertices(8),
            &SparseSamplerParams { gamma: 2.0, seed, weight_mode: WeightMode::Unit },
        )
        .unwrap();
        assert_eq!(g.edges().len(), 8);
        for e in g.edges() {
            *counts.entry((e.i, e.j)).or_default() += 1;
        }
    }
    assert_eq!(counts.len(), 28);
    let p = 8.0 / 28.0;
    let mean = draws as f64 * p;
    let sd = (draws as f64 * p * (1.0 - p)).sqrt();
    for (&pair, &c) in &counts {
        assert!(
            (c as f64 - mean).abs() < 5.0 * sd,
            "pair {pair:?} drawn {c} times, expected {mean:.0} +- {:.0}",
            5.0 * sd
        );
    }
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let reports = generate_scenario(&ScenarioParams { seed: 3, ..Default::default() }).unwrap();
    let params = SparseSamplerParams { gamma: 4.6, seed: 99, weight_mode: WeightMode::Measured };
    let a = sample_sparse_graph(SparseSource::Reports(&reports), &params).unwrap();
    let b = sample_sparse_graph(SparseSource::Reports(&reports), &params).unwrap();
    assert_eq!(a, b);
    let c = sample_sparse_graph(
        SparseSource::Reports(&reports),
        &SparseSamplerParams { seed: 100, ..params },
    )
    .unwrap();
    assert_ne!(a, c);
}

#[test]
fn unit_weights_keep_the_sampled_structure() {
    let reports = generate_scenario(&ScenarioParams { seed: 4, ..Default::default() }).unwrap();
    let dense = full_cost_matrix(&reports).unwrap();
    let measured = sample_sparse_graph(
        SparseSource::Dense(&dense),
        &SparseSamplerParams { gamma: 3.0, seed: 5, weight_mode: WeightMode::Measured },
    )
    .unwrap();
    let unit = sample_sparse_graph(
        SparseSource::Dense(&dense),
        &SparseSamplerParams { gamma: 3.0, seed: 5, weight_mode: WeightMode::Unit },
    )
    .unwrap();
    for (m, u) in measured.edges().iter().zip(unit.edges()) {
        assert_eq!((m.i, m.j), (u.i, u.j));
        assert_eq!(u.weight, 1.0);
    }
}

/// Frequencies of `draws` ranks against the table's own probabilities,
/// computed independently as `k^-tau / sum_{j<=n} j^-tau`.
fn max_rank_deviation(tau: f64, n: usize, draws: usize, seed: u64) -> f64 {
    let table = PowerLawTable::new(tau, n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; n + 1];
    for _ in 0..draws {
        counts[table.sample_rank(n, &mut rng).unwrap()] += 1;
    }
    let norm: f64 = (1..=n).map(|j| (j as f64).powf(-tau)).sum();
    (1..=n)
        .map(|k| (counts[k] as f64 / draws as f64 - (k as f64).powf(-tau) / norm).abs())
        .fold(0.0, f64::max)
}

#[test]
fn uniform_ranks_at_tau_zero() {
    assert!(max_rank_deviation(0.0, 10, 1_000_000, 6) < 0.005);
}

#[test]
fn power_law_ranks_at_tau_one_and_a_half() {
    assert!(max_rank_deviation(1.5, 100, 1_000_000, 7) < 0.005);
}
