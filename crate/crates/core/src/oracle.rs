//! Exact answers for small instances.

use crate::error::{Error, Result};
use crate::model::{Assignment, ConflictGraph};

/// Largest number of label vectors `exact_min_cost` will consider.
pub const ENUMERATION_BUDGET: f64 = 1e8;

/// Largest number of search nodes `is_zero_cost_solvable` will expand.
pub const BACKTRACK_BUDGET: u64 = 100_000_000;

/// Globally minimal clustering cost into at most `k` clusters.
///
/// Enumerates label vectors in canonical form (each report uses an existing
/// label or the next unused one, so report 0 is always label 0) and prunes
/// partial assignments that already cost as much as the best complete one.
pub fn exact_min_cost(graph: &ConflictGraph, k: usize) -> Result<(f64, Assignment)> {
    if k == 0 {
        return Err(Error::InvalidClusterCount { k, reason: "need at least one cluster" });
    }
    let n = graph.n();
    let space = (k as f64).powi(n.saturating_sub(1) as i32);
    if space > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "{k}^{} label vectors exceed the budget of {ENUMERATION_BUDGET:e}",
            n.saturating_sub(1)
        )));
    }
    // Each vertex only looks back at already-labelled neighbors.
    let earlier: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            graph
                .neighbors(i)
                .iter()
                .filter(|nb| nb.vertex < i)
                .map(|nb| (nb.vertex, nb.weight))
                .collect()
        })
        .collect();

    struct Search<'a> {
        earlier: &'a [Vec<(usize, f64)>],
        k: usize,
        labels: Vec<usize>,
        best_cost: f64,
        best: Vec<usize>,
    }

    impl Search<'_> {
        fn descend(&mut self, i: usize, used: usize, partial: f64) {
            if partial >= self.best_cost {
                return;
            }
            if i == self.labels.len() {
                self.best_cost = partial;
                self.best.clone_from(&self.labels);
                return;
            }
            for label in 0..(used + 1).min(self.k) {
                let added: f64 = self.earlier[i]
                    .iter()
                    .filter(|&&(j, _)| self.labels[j] == label)
                    .map(|&(_, w)| w)
                    .sum();
                self.labels[i] = label;
                self.descend(i + 1, used.max(label + 1), partial + added);
            }
        }
    }

    let mut search = Search {
        earlier: &earlier,
        k,
        labels: vec![0; n],
        best_cost: f64::INFINITY,
        best: vec![0; n],
    };
    search.descend(0, 0, 0.0);
    let cost = if n == 0 { 0.0 } else { search.best_cost };
    Ok((cost, Assignment::new(search.best, k)?))
}

/// Whether the reports can be split into `k` clusters with no positive-weight
/// conflict inside any cluster, i.e. whether the positive-weight edges admit
/// a proper `k`-coloring.
///
/// Backtracking that always colors the most constrained report next and
/// gives up on a branch as soon as some uncolored report has no color left.
pub fn is_zero_cost_solvable(graph: &ConflictGraph, k: usize) -> Result<bool> {
    Ok(find_zero_cost_assignment(graph, k)?.is_some())
}

/// A zero-cost clustering into `k` clusters, if one exists.
pub fn find_zero_cost_assignment(graph: &ConflictGraph, k: usize) -> Result<Option<Assignment>> {
    if k == 0 {
        return Err(Error::InvalidClusterCount { k, reason: "need at least one cluster" });
    }
    let n = graph.n();
    let adjacency: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            graph
                .neighbors(i)
                .iter()
                .filter(|nb| nb.weight > 0.0)
                .map(|nb| nb.vertex)
                .collect()
        })
        .collect();
    let mut col = Coloring {
        adjacency: &adjacency,
        k,
        colors: vec![None; n],
        blocked: vec![0; n * k],
        saturation: vec![0; n],
        nodes: 0,
    };
    match col.solve(0, 0) {
        Some(true) => {
            let labels = col.colors.iter().map(|c| c.expect("complete")).collect();
            Ok(Some(Assignment::new(labels, k)?))
        }
        Some(false) => Ok(None),
        None => Err(Error::BudgetExceeded(format!(
            "colorability search expanded more than {BACKTRACK_BUDGET} nodes"
        ))),
    }
}

struct Coloring<'a> {
    adjacency: &'a [Vec<usize>],
    k: usize,
    colors: Vec<Option<usize>>,
    // blocked[v * k + c]: colored neighbors of v that use color c.
    blocked: Vec<u32>,
    // Distinct colors among v's colored neighbors.
    saturation: Vec<usize>,
    nodes: u64,
}

impl Coloring<'_> {
    /// `None` when the node budget ran out.
    fn solve(&mut self, colored: usize, used: usize) -> Option<bool> {
        if colored == self.colors.len() {
            return Some(true);
        }
        self.nodes += 1;
        if self.nodes > BACKTRACK_BUDGET {
            return None;
        }
        let v = self.pick();
        for c in 0..(used + 1).min(self.k) {
            if self.blocked[v * self.k + c] > 0 {
                continue;
            }
            self.colors[v] = Some(c);
            let feasible = self.assign(v, c);
            if feasible {
                match self.solve(colored + 1, used.max(c + 1)) {
                    Some(false) => {}
                    other => return other,
                }
            }
            self.unassign(v, c);
            self.colors[v] = None;
        }
        Some(false)
    }

    /// Uncolored vertex with the fewest remaining colors, ties broken by the
    /// most uncolored neighbors.
    fn pick(&self) -> usize {
        let mut best = None;
        let mut best_key = (0, 0);
        for v in 0..self.colors.len() {
            if self.colors[v].is_some() {
                continue;
            }
            let free_degree = self.adjacency[v]
                .iter()
                .filter(|&&u| self.colors[u].is_none())
                .count();
            let key = (self.saturation[v], free_degree);
            if best.is_none() || key > best_key {
                best = Some(v);
                best_key = key;
            }
        }
        best.expect("an uncolored vertex remains")
    }

    /// Blocks color `c` around `v`; false if a neighbor runs out of colors.
    fn assign(&mut self, v: usize, c: usize) -> bool {
        let mut ok = true;
        for &u in &self.adjacency[v] {
            let slot = &mut self.blocked[u * self.k + c];
            *slot += 1;
            if *slot == 1 {
                self.saturation[u] += 1;
                if self.colors[u].is_none() && self.saturation[u] == self.k {
                    ok = false;
                }
            }
        }
        ok
    }

    fn unassign(&mut self, v: usize, c: usize) {
        for &u in &self.adjacency[v] {
            let slot = &mut self.blocked[u * self.k + c];
            *slot -= 1;
            if *slot == 0 {
                self.saturation[u] -= 1;
            }
        }
    }
}
