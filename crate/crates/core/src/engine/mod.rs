//! Extremal optimization.
//!
//! Every step ranks the reports by local fitness (worst first), picks one
//! either as the single worst (standard EO) or at a rank drawn from a power
//! law `k^-tau` (tau-EO), and moves it to a different cluster no matter what
//! that does to the cost. The lowest-cost configuration seen so far is kept
//! as the answer.

mod heap;
mod powerlaw;
mod state;

pub use heap::RankHeap;
pub use powerlaw::PowerLawTable;
pub use state::SearchState;

use crate::error::Result;
use crate::model::{Assignment, ConflictGraph, Trace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// Always change the worst report.
    Standard,
    /// Change the report of rank `k` with probability proportional to `k^-tau`.
    Tau(f64),
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Standard => f.write_str("standard"),
            Mode::Tau(tau) => write!(f, "{tau}"),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    /// `standard` or a non-negative tau value.
    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("standard") {
            return Ok(Mode::Standard);
        }
        match s.parse::<f64>() {
            Ok(tau) if tau >= 0.0 && tau.is_finite() => Ok(Mode::Tau(tau)),
            _ => Err(format!("expected `standard` or a non-negative number, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ranking {
    /// Exact rank order with ties broken uniformly at random.
    #[default]
    ExactSort,
    /// Rank `r` is the `r`-th slot of a max-heap array; only rank 1 is exact.
    HeapApproximate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub mode: Mode,
    pub k: usize,
    pub max_steps: u64,
    pub seed: u64,
    pub ranking: Ranking,
    /// Record a trace row every this many steps. The initial and final
    /// steps are always recorded.
    pub trace_every: u64,
    /// Largest report count the power-law table must serve. Defaults to the
    /// initial graph size; raise it to leave room for inserted reports.
    pub table_capacity: Option<usize>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Tau(1.5),
            k: 3,
            max_steps: 100_000,
            seed: 0,
            ranking: Ranking::ExactSort,
            trace_every: 1,
            table_capacity: None,
        }
    }
}

/// Runs `max_steps` steps from a uniformly random initial clustering and
/// returns the best clustering found with the cost trace.
pub fn run(graph: &ConflictGraph, config: &EngineConfig) -> Result<(Assignment, Trace)> {
    let mut state = SearchState::new(graph.clone(), config)?;
    let mut trace = Trace::with_capacity(
        (config.max_steps / config.trace_every.max(1)) as usize + 2,
    );
    state.record(&mut trace);
    state.advance(config.max_steps, config.trace_every, &mut trace);
    Ok((state.best_assignment().clone(), trace))
}
