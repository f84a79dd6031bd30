//! Extremal optimization for clustering bursts of sensor reports.
//!
//! Reports are clustered by minimizing the summed pairwise conflict of
//! reports placed in the same cluster. Only a random sparse subset of the
//! conflicts is computed, sized by the average degree at which random graphs
//! stop being `k`-colorable, and the resulting problem is solved with
//! extremal optimization.
//!
//! - [`model`]: reports, conflict graphs, clusterings, cost and local fitness.
//! - [`conflict`]: synthetic scenarios, the conflict function, sparse sampling.
//! - [`engine`]: standard and tau extremal optimization.
//! - [`oracle`]: exact answers for small instances.
//! - [`harness`]: seeded experiments and CSV output.

pub mod conflict;
pub mod engine;
pub mod error;
pub mod harness;
pub mod model;
pub mod oracle;

pub use error::{Error, Result};
