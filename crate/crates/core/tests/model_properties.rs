use eo_cluster::conflict::{
    full_cost_matrix, generate_scenario, sample_sparse_graph, ScenarioParams, SparseSamplerParams,
    SparseSource, WeightMode,
};
use eo_cluster::model::{
    all_local_fitness, local_fitness, total_cost, Assignment, ConflictGraph, GraphKind,
};
use proptest::prelude::*;

/// Random graph on up to 12 vertices with weights in [0, 3).
fn graph_strategy() -> impl Strategy<Value = ConflictGraph> {
    (2usize..12).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let len = pairs.len();
        prop::collection::vec((any::<bool>(), 0.0f64..3.0), len).prop_map(move |picks| {
            let triples = pairs
                .iter()
                .zip(picks)
                .filter(|(_, (keep, _))| *keep)
                .map(|(&(i, j), (_, w))| (i, j, w));
            ConflictGraph::from_triples(n, triples, GraphKind::Sparse).unwrap()
        })
    })
}

fn graph_and_labels() -> impl Strategy<Value = (ConflictGraph, Assignment)> {
    (graph_strategy(), 1usize..5).prop_flat_map(|(g, k)| {
        let n = g.n();
        prop::collection::vec(0..k, n)
            .prop_map(move |labels| (g.clone(), Assignment::new(labels, k).unwrap()))
    })
}

/// Direct double sum over ordered pairs, halved.
fn brute_force_cost(g: &ConflictGraph, a: &Assignment) -> f64 {
    let mut sum = 0.0;
    for i in 0..g.n() {
        for j in 0..g.n() {
            if i != j && a.label(i) == a.label(j) {
                sum += g.weight(i, j).unwrap_or(0.0);
            }
        }
    }
    sum / 2.0
}

proptest! {
    #[test]
    fn cost_matches_brute_force((g, a) in graph_and_labels()) {
        let c = total_cost(&g, &a).unwrap();
        prop_assert!(c >= 0.0);
        prop_assert!((c - brute_force_cost(&g, &a)).abs() <= 1e-9 * c.max(1.0));
    }

    #[test]
    fn fitness_sums_to_twice_the_cost((g, a) in graph_and_labels()) {
        let lambda = all_local_fitness(&g, &a).unwrap();
        let c = total_cost(&g, &a).unwrap();
        let sum: f64 = lambda.iter().sum();
        prop_assert!((sum - 2.0 * c).abs() <= 1e-9 * c.max(1.0));
        for (i, &l) in lambda.iter().enumerate() {
            prop_assert_eq!(l, local_fitness(&g, &a, i).unwrap());
        }
    }

    #[test]
    fn relabeling_clusters_changes_nothing(
        (g, a) in graph_and_labels(),
        shift in 0usize..5,
    ) {
        let k = a.k();
        let permutation: Vec<usize> = (0..k).map(|l| (l + shift) % k).collect();
        let b = a.permuted(&permutation).unwrap();
        prop_assert_eq!(total_cost(&g, &a).unwrap(), total_cost(&g, &b).unwrap());
        prop_assert_eq!(all_local_fitness(&g, &a).unwrap(), all_local_fitness(&g, &b).unwrap());
    }
}

#[test]
fn distinct_labels_cost_nothing() {
    let g = ConflictGraph::from_triples(
        4,
        [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 3.0), (0, 3, 4.0)],
        GraphKind::Sparse,
    )
    .unwrap();
    let a = Assignment::new(vec![0, 1, 2, 3], 5).unwrap();
    assert_eq!(total_cost(&g, &a).unwrap(), 0.0);
    assert_eq!(all_local_fitness(&g, &a).unwrap(), vec![0.0; 4]);
}

#[test]
fn sparse_cost_never_exceeds_dense_cost() {
    let reports = generate_scenario(&ScenarioParams { seed: 21, ..Default::default() }).unwrap();
    let dense = full_cost_matrix(&reports).unwrap();
    for seed in 0..20u64 {
        let sparse = sample_sparse_graph(
            SparseSource::Dense(&dense),
            &SparseSamplerParams { gamma: 4.0, seed, weight_mode: WeightMode::Measured },
        )
        .unwrap();
        let labels = (0..100).map(|i| (i * 7 + seed as usize) % 3).collect();
        let a = Assignment::new(labels, 3).unwrap();
        assert!(total_cost(&sparse, &a).unwrap() <= total_cost(&dense, &a).unwrap());
    }
}
