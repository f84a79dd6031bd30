use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EngineConfig, Mode, PowerLawTable, RankHeap, Ranking};
use crate::error::{Error, Result};
use crate::model::{
    all_local_fitness, total_cost, vertex_fitness, Assignment, ConflictGraph, Edge, Trace,
};

/// A running search: current and best clustering plus cached local fitness.
///
/// Local fitness and cost are maintained incrementally over the moved
/// report's neighbors. Each report also tracks how many of its positive-weight
/// edges currently join same-cluster neighbors, so a fitness (and the total
/// cost) that returns to zero is exactly zero rather than a rounding residue.
#[derive(Debug, Clone)]
pub struct SearchState {
    graph: ConflictGraph,
    assignment: Assignment,
    lambda: Vec<f64>,
    hot: Vec<u32>,
    hot_edges: usize,
    current_cost: f64,
    best_cost: f64,
    best_assignment: Assignment,
    step: u64,
    rng: ChaCha8Rng,
    mode: Mode,
    table: Option<PowerLawTable>,
    heap: Option<RankHeap>,
    scratch: Vec<f64>,
    last_victim: Option<usize>,
}

impl SearchState {
    /// Starts from a uniformly random clustering drawn from the config seed.
    pub fn new(graph: ConflictGraph, config: &EngineConfig) -> Result<Self> {
        validate(&graph, config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let labels = (0..graph.n()).map(|_| rng.random_range(0..config.k)).collect();
        let assignment = Assignment::new(labels, config.k)?;
        Self::build(graph, assignment, config, rng)
    }

    /// Starts from a given clustering. The RNG is still seeded from the config.
    pub fn with_assignment(
        graph: ConflictGraph,
        assignment: Assignment,
        config: &EngineConfig,
    ) -> Result<Self> {
        validate(&graph, config)?;
        if assignment.k() != config.k {
            return Err(Error::InvalidClusterCount {
                k: assignment.k(),
                reason: "assignment and config disagree on k",
            });
        }
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self::build(graph, assignment, config, rng)
    }

    fn build(
        graph: ConflictGraph,
        assignment: Assignment,
        config: &EngineConfig,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        let table = match config.mode {
            Mode::Standard => None,
            Mode::Tau(tau) => {
                let capacity = config.table_capacity.unwrap_or(graph.n());
                if capacity < graph.n() {
                    return Err(Error::TableTooSmall {
                        requested: graph.n(),
                        capacity,
                    });
                }
                Some(PowerLawTable::new(tau, capacity)?)
            }
        };
        let n = graph.n();
        let mut state = Self {
            best_assignment: assignment.clone(),
            graph,
            assignment,
            lambda: Vec::new(),
            hot: Vec::new(),
            hot_edges: 0,
            current_cost: 0.0,
            best_cost: 0.0,
            step: 0,
            rng,
            mode: config.mode,
            table,
            heap: None,
            scratch: Vec::with_capacity(n),
            last_victim: None,
        };
        state.recompute()?;
        state.best_cost = state.current_cost;
        if config.ranking == Ranking::HeapApproximate {
            state.heap = Some(RankHeap::build(&state.lambda));
        }
        Ok(state)
    }

    pub fn graph(&self) -> &ConflictGraph {
        &self.graph
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn current_cost(&self) -> f64 {
        self.current_cost
    }

    pub fn best_cost(&self) -> f64 {
        self.best_cost
    }

    pub fn best_assignment(&self) -> &Assignment {
        &self.best_assignment
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn last_victim(&self) -> Option<usize> {
        self.last_victim
    }

    pub fn heap(&self) -> Option<&RankHeap> {
        self.heap.as_ref()
    }

    /// Rebuilds cached fitness and cost from scratch.
    pub fn recompute(&mut self) -> Result<()> {
        self.lambda = all_local_fitness(&self.graph, &self.assignment)?;
        self.current_cost = total_cost(&self.graph, &self.assignment)?;
        let labels = self.assignment.labels();
        self.hot = vec![0; self.graph.n()];
        self.hot_edges = 0;
        for e in self.graph.edges() {
            if e.weight > 0.0 && labels[e.i] == labels[e.j] {
                self.hot[e.i] += 1;
                self.hot[e.j] += 1;
                self.hot_edges += 1;
            }
        }
        if let Some(heap) = &mut self.heap {
            *heap = RankHeap::build(&self.lambda);
        }
        Ok(())
    }

    /// Checks cached fitness, current cost, and best cost against a
    /// from-scratch evaluation, within a relative tolerance.
    pub fn is_consistent(&self, rel_tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= rel_tol * a.abs().max(b.abs()).max(1.0);
        let Ok(lambda) = all_local_fitness(&self.graph, &self.assignment) else {
            return false;
        };
        let cost = total_cost(&self.graph, &self.assignment).unwrap();
        let best = total_cost(&self.graph, &self.best_assignment).unwrap();
        let lambda_sum: f64 = self.lambda.iter().sum();
        lambda.iter().zip(&self.lambda).all(|(&a, &b)| close(a, b))
            && close(cost, self.current_cost)
            && close(lambda_sum, 2.0 * self.current_cost)
            && close(best, self.best_cost)
            && self.best_cost <= self.current_cost
            && self.heap.as_ref().is_none_or(|h| h.is_heap(&self.lambda))
    }

    /// One extremal-optimization move.
    pub fn step(&mut self) {
        let victim = self.select_victim();
        let k = self.assignment.k();
        let old = self.assignment.label(victim);
        let mut new = self.rng.random_range(0..k - 1);
        if new >= old {
            new += 1;
        }
        self.move_vertex(victim, new);
        self.last_victim = Some(victim);
        self.step += 1;
        if self.current_cost < self.best_cost {
            self.best_cost = self.current_cost;
            self.best_assignment.clone_from(&self.assignment);
        }
    }

    /// Runs `steps` moves, recording a trace row every `trace_every` steps
    /// and after the last one.
    pub fn advance(&mut self, steps: u64, trace_every: u64, trace: &mut Trace) {
        let every = trace_every.max(1);
        let end = self.step + steps;
        while self.step < end {
            self.step();
            if self.step.is_multiple_of(every) || self.step == end {
                self.record(trace);
            }
        }
    }

    pub fn record(&self, trace: &mut Trace) {
        trace.push(self.step, self.current_cost, self.best_cost);
    }

    fn select_victim(&mut self) -> usize {
        let n = self.lambda.len();
        let rank = match (&self.mode, &self.table) {
            (Mode::Tau(_), Some(table)) => table
                .sample_rank(n, &mut self.rng)
                .expect("table capacity checked on construction and insertion"),
            _ => 1,
        };
        if let Some(heap) = &self.heap {
            return heap.at(rank - 1);
        }
        let value = if rank == 1 {
            self.lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        } else {
            self.scratch.clear();
            self.scratch.extend_from_slice(&self.lambda);
            let (_, v, _) = self
                .scratch
                .select_nth_unstable_by(rank - 1, |a, b| b.total_cmp(a));
            *v
        };
        // Under a uniformly random order of equal values, the report at any
        // fixed rank inside a tie block is uniform over that block.
        let ties = self.lambda.iter().filter(|&&l| l == value).count();
        let pick = if ties > 1 {
            self.rng.random_range(0..ties)
        } else {
            0
        };
        self.lambda
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == value)
            .nth(pick)
            .map(|(i, _)| i)
            .expect("rank value is present")
    }

    fn move_vertex(&mut self, v: usize, new: usize) {
        let old = self.assignment.label(v);
        self.assignment.set(v, new);
        let labels = self.assignment.labels();
        let mut own = 0.0;
        let mut own_hot = 0;
        for nb in self.graph.neighbors(v) {
            let u = nb.vertex;
            let w = nb.weight;
            let lu = labels[u];
            let hot = w > 0.0;
            if lu == old {
                self.hot[u] -= hot as u32;
                self.hot_edges -= hot as usize;
                self.lambda[u] = if self.hot[u] == 0 { 0.0 } else { self.lambda[u] - w };
            } else if lu == new {
                own += w;
                own_hot += hot as u32;
                self.hot[u] += hot as u32;
                self.hot_edges += hot as usize;
                self.lambda[u] += w;
            } else {
                continue;
            }
            if let Some(heap) = &mut self.heap {
                heap.update(u, &self.lambda);
            }
        }
        let delta = own - self.lambda[v];
        self.lambda[v] = own;
        self.hot[v] = own_hot;
        self.current_cost = if self.hot_edges == 0 {
            0.0
        } else {
            self.current_cost + delta
        };
        if let Some(heap) = &mut self.heap {
            heap.update(v, &self.lambda);
        }
    }

    /// Adds `n_new` reports (with uniformly random labels) and the given
    /// edges, then recomputes all fitness values. The best snapshot is reset
    /// to the current clustering, since costs over different report sets do
    /// not compare. Inserting nothing leaves the state untouched.
    pub fn insert_reports(&mut self, n_new: usize, new_edges: &[Edge]) -> Result<()> {
        if n_new == 0 && new_edges.is_empty() {
            return Ok(());
        }
        let n = self.graph.n() + n_new;
        if let Some(table) = &self.table {
            if table.capacity() < n {
                return Err(Error::TableTooSmall {
                    requested: n,
                    capacity: table.capacity(),
                });
            }
        }
        self.graph.grow(n_new, new_edges)?;
        let k = self.assignment.k();
        let labels: Vec<usize> = (0..n_new).map(|_| self.rng.random_range(0..k)).collect();
        self.assignment.extend(labels);
        self.recompute()?;
        self.best_cost = self.current_cost;
        self.best_assignment.clone_from(&self.assignment);
        Ok(())
    }

    /// Local fitness of `i` evaluated from scratch.
    pub fn fresh_fitness(&self, i: usize) -> f64 {
        vertex_fitness(&self.graph, self.assignment.labels(), i)
    }
}

fn validate(graph: &ConflictGraph, config: &EngineConfig) -> Result<()> {
    if config.k < 2 {
        return Err(Error::InvalidClusterCount {
            k: config.k,
            reason: "a move needs at least one alternative cluster",
        });
    }
    if graph.n() == 0 {
        return Err(Error::InvalidParameter("cannot search an empty graph".into()));
    }
    Ok(())
}
