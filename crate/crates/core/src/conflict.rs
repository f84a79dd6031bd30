//! Synthetic multi-target scenarios, pairwise conflicts, and sparse sampling
//! of the conflict matrix.
//!
//! Computing every pairwise conflict costs `n(n-1)/2` evaluations. Instead we
//! measure only `M = floor(gamma * n / 2)` uniformly chosen pairs, which
//! yields a member of the `G(n, M)` random-graph ensemble with average degree
//! `gamma`. Below the `k`-colorability threshold such graphs can almost
//! always be clustered without cost.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{pair_count, ConflictGraph, Edge, GraphKind, Report, ReportSet};

#[derive(Debug, Clone, PartialEq)]
pub enum TargetLayout {
    /// Explicit target positions; their count must equal `num_targets`.
    Fixed(Vec<[f64; 2]>),
    /// Targets drawn uniformly inside the unit square.
    RandomUnitBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub num_targets: usize,
    pub reports_per_burst: usize,
    pub targets: TargetLayout,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            num_targets: 3,
            reports_per_burst: 100,
            targets: TargetLayout::RandomUnitBox,
            noise_sigma: 0.1,
            seed: 0,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_targets == 0 {
            return Err(Error::InvalidParameter("scenario needs at least one target".into()));
        }
        if self.reports_per_burst < self.num_targets {
            return Err(Error::InvalidParameter(format!(
                "{} reports cannot cover {} targets",
                self.reports_per_burst, self.num_targets
            )));
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise sigma must be positive, got {}",
                self.noise_sigma
            )));
        }
        if let TargetLayout::Fixed(positions) = &self.targets {
            if positions.len() != self.num_targets {
                return Err(Error::InvalidParameter(format!(
                    "{} target positions given for {} targets",
                    positions.len(),
                    self.num_targets
                )));
            }
        }
        Ok(())
    }
}

/// Draws a burst of reports. Each report picks a target uniformly and is
/// displaced from it by isotropic Gaussian noise.
pub fn generate_scenario(params: &ScenarioParams) -> Result<ReportSet> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let targets: Vec<[f64; 2]> = match &params.targets {
        TargetLayout::Fixed(p) => p.clone(),
        TargetLayout::RandomUnitBox => (0..params.num_targets)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
            .collect(),
    };
    let sigma = params.noise_sigma;
    let reports = (0..params.reports_per_burst)
        .map(|id| {
            let target = rng.random_range(0..params.num_targets);
            let dx: f64 = StandardNormal.sample(&mut rng);
            let dy: f64 = StandardNormal.sample(&mut rng);
            let [tx, ty] = targets[target];
            Report {
                id,
                position: [tx + sigma * dx, ty + sigma * dy],
                noise_sigma: sigma,
                true_target: Some(target),
            }
        })
        .collect();
    ReportSet::new(reports)
}

/// Gaussian-overlap conflict `1 - exp(-d^2 / (2 (sa^2 + sb^2)))`, in `[0, 1)`.
///
/// Stands in for a belief-function conflict; it is zero exactly when the
/// positions coincide and grows monotonically with distance.
pub fn pairwise_conflict(a: &Report, b: &Report) -> f64 {
    let dx = a.position[0] - b.position[0];
    let dy = a.position[1] - b.position[1];
    let d2 = dx * dx + dy * dy;
    let s2 = a.noise_sigma * a.noise_sigma + b.noise_sigma * b.noise_sigma;
    -(-d2 / (2.0 * s2)).exp_m1()
}

/// Every pairwise conflict. Only used as a reference and a sampling source.
pub fn full_cost_matrix(reports: &ReportSet) -> Result<ConflictGraph> {
    let n = reports.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 reports for a cost matrix, got {n}"
        )));
    }
    let mut edges = Vec::with_capacity(pair_count(n));
    for i in 0..n {
        for j in i + 1..n {
            edges.push(Edge {
                i,
                j,
                weight: pairwise_conflict(&reports[i], &reports[j]),
            });
        }
    }
    ConflictGraph::new(n, edges, GraphKind::Dense)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// Edge weight is the conflict of the two reports.
    Measured,
    /// Every sampled edge has weight 1; zero cost then means a proper coloring.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseSamplerParams {
    pub gamma: f64,
    pub seed: u64,
    pub weight_mode: WeightMode,
}

/// Where sampled edge weights come from.
#[derive(Debug, Clone, Copy)]
pub enum SparseSource<'a> {
    /// Copy weights out of a fully computed matrix.
    Dense(&'a ConflictGraph),
    /// Compute conflicts only for the chosen pairs.
    Reports(&'a ReportSet),
    /// Structure only; requires [`WeightMode::Unit`].
    Vertices(usize),
}

impl SparseSource<'_> {
    pub fn n(&self) -> usize {
        match self {
            SparseSource::Dense(g) => g.n(),
            SparseSource::Reports(r) => r.len(),
            SparseSource::Vertices(n) => *n,
        }
    }

    fn weight(&self, i: usize, j: usize, mode: WeightMode) -> Result<f64> {
        match (mode, self) {
            (WeightMode::Unit, _) => Ok(1.0),
            (WeightMode::Measured, SparseSource::Dense(g)) => g.weight(i, j).ok_or_else(|| {
                Error::InvalidParameter(format!("source matrix has no entry for ({i}, {j})"))
            }),
            (WeightMode::Measured, SparseSource::Reports(r)) => {
                Ok(pairwise_conflict(&r[i], &r[j]))
            }
            (WeightMode::Measured, SparseSource::Vertices(_)) => Err(Error::InvalidParameter(
                "measured weights need reports or a dense matrix".into(),
            )),
        }
    }
}

/// Number of edges sampled at average degree `gamma`: `floor(gamma * n / 2)`.
pub fn edge_budget(gamma: f64, n: usize) -> Result<usize> {
    if !(gamma > 0.0 && gamma.is_finite()) || gamma > n.saturating_sub(1) as f64 {
        return Err(Error::InvalidGamma { gamma, n });
    }
    Ok(half_degree_sum(gamma, n).min(pair_count(n)))
}

/// `floor(gamma * n / 2)`, absorbing rounding error such as `4.6 * 100 / 2`
/// evaluating to `229.99999999999997`.
fn half_degree_sum(gamma: f64, n: usize) -> usize {
    let x = gamma * n as f64 / 2.0;
    (x + 1e-9 * x.max(1.0)).floor() as usize
}

/// Draws an unordered pair uniformly from all pairs of `0..n`.
fn random_pair<R: Rng>(rng: &mut R, n: usize) -> (usize, usize) {
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (a.min(b), a.max(b))
}

/// Samples `floor(gamma * n / 2)` distinct pairs uniformly without
/// replacement. Edges come back sorted by `(i, j)`.
pub fn sample_sparse_graph(
    source: SparseSource<'_>,
    params: &SparseSamplerParams,
) -> Result<ConflictGraph> {
    let n = source.n();
    let m = edge_budget(params.gamma, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut chosen = HashSet::with_capacity(m);
    while chosen.len() < m {
        chosen.insert(random_pair(&mut rng, n));
    }
    let mut pairs: Vec<_> = chosen.into_iter().collect();
    pairs.sort_unstable();
    let edges = pairs
        .into_iter()
        .map(|(i, j)| {
            Ok(Edge {
                i,
                j,
                weight: source.weight(i, j, params.weight_mode)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let kind = if m == pair_count(n) {
        GraphKind::Dense
    } else {
        GraphKind::Sparse
    };
    ConflictGraph::new(n, edges, kind)
}

/// Edges for `n_new` reports appended after the first `n_old`, keeping the
/// average degree at `gamma`: `floor(gamma (n_old + n_new) / 2) -
/// floor(gamma n_old / 2)` pairs, each touching at least one new report.
pub fn sample_insertion_edges(
    source: SparseSource<'_>,
    n_old: usize,
    params: &SparseSamplerParams,
) -> Result<Vec<Edge>> {
    let n = source.n();
    if n_old > n {
        return Err(Error::IndexOutOfRange { index: n_old, n });
    }
    if n_old == n {
        return Ok(Vec::new());
    }
    let m_total = edge_budget(params.gamma, n)?;
    let m_old = half_degree_sum(params.gamma, n_old);
    let m = m_total.saturating_sub(m_old);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut chosen = HashSet::with_capacity(m);
    while chosen.len() < m {
        let (i, j) = random_pair(&mut rng, n);
        if j >= n_old {
            chosen.insert((i, j));
        }
    }
    let mut pairs: Vec<_> = chosen.into_iter().collect();
    pairs.sort_unstable();
    pairs
        .into_iter()
        .map(|(i, j)| {
            Ok(Edge {
                i,
                j,
                weight: source.weight(i, j, params.weight_mode)?,
            })
        })
        .collect()
}

/// Average degree above which random graphs are almost surely not
/// `k`-colorable.
///
/// `k = 3` is the commonly quoted 4.6 (the cavity-method value is about
/// 4.69). `k = 2` is the giant-component threshold 1, past which odd cycles
/// appear almost surely. `k = 4..=7` are rounded cavity-method colorability
/// thresholds (Krzakala, Pagnani and Weigt, PRE 70, 2004). Larger `k` use the
/// leading asymptotic `2 k ln k - ln k - 1`.
pub fn critical_gamma(k: usize) -> Result<f64> {
    const TABLE: [f64; 6] = [1.0, 4.6, 8.90, 13.67, 18.88, 24.4];
    match k {
        0 | 1 => Err(Error::InvalidClusterCount {
            k,
            reason: "colorability threshold needs k >= 2",
        }),
        2..=7 => Ok(TABLE[k - 2]),
        _ => {
            let kf = k as f64;
            Ok(2.0 * kf * kf.ln() - kf.ln() - 1.0)
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ReportRow {
    id: usize,
    x: f64,
    y: f64,
    sigma: f64,
    true_target: Option<usize>,
}

/// CSV with header `id,x,y,sigma,true_target`; unknown targets are empty.
pub fn write_reports<W: Write>(reports: &ReportSet, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for r in reports.iter() {
        w.serialize(ReportRow {
            id: r.id,
            x: r.position[0],
            y: r.position[1],
            sigma: r.noise_sigma,
            true_target: r.true_target,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_reports<R: Read>(input: R) -> Result<ReportSet> {
    let mut rdr = csv::Reader::from_reader(input);
    let reports = rdr
        .deserialize::<ReportRow>()
        .map(|row| {
            let row = row?;
            Ok(Report {
                id: row.id,
                position: [row.x, row.y],
                noise_sigma: row.sigma,
                true_target: row.true_target,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ReportSet::new(reports)
}

pub fn save_reports(reports: &ReportSet, path: &Path) -> Result<()> {
    write_reports(reports, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn load_reports(path: &Path) -> Result<ReportSet> {
    read_reports(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(x: f64, y: f64, sigma: f64) -> Report {
        Report {
            id: 0,
            position: [x, y],
            noise_sigma: sigma,
            true_target: None,
        }
    }

    #[test]
    fn scenario_shape_and_determinism() {
        let params = ScenarioParams {
            seed: 17,
            ..Default::default()
        };
        let a = generate_scenario(&params).unwrap();
        assert_eq!(a.len(), 100);
        assert!(a.iter().all(|r| r.true_target.is_some_and(|t| t < 3)));
        assert_eq!(a, generate_scenario(&params).unwrap());
        let other = generate_scenario(&ScenarioParams { seed: 18, ..params }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn vanishing_noise_puts_reports_on_targets() {
        let targets = vec![[0.25, 0.5], [0.75, 0.125]];
        let params = ScenarioParams {
            num_targets: 2,
            reports_per_burst: 20,
            targets: TargetLayout::Fixed(targets.clone()),
            noise_sigma: 1e-300,
            seed: 3,
        };
        for r in generate_scenario(&params).unwrap().iter() {
            assert_eq!(r.position, targets[r.true_target.unwrap()]);
        }
    }

    #[test]
    fn scenario_rejects_bad_params() {
        let base = ScenarioParams::default();
        for bad in [
            ScenarioParams { noise_sigma: 0.0, ..base.clone() },
            ScenarioParams { noise_sigma: -1.0, ..base.clone() },
            ScenarioParams { num_targets: 0, ..base.clone() },
            ScenarioParams { reports_per_burst: 2, ..base.clone() },
            ScenarioParams {
                targets: TargetLayout::Fixed(vec![[0.0, 0.0]]),
                ..base.clone()
            },
        ] {
            assert!(generate_scenario(&bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn conflict_values() {
        assert_eq!(pairwise_conflict(&report(0.3, 0.4, 1.0), &report(0.3, 0.4, 2.0)), 0.0);
        let v = pairwise_conflict(&report(0.0, 0.0, 1.0), &report(1.0, 0.0, 1.0));
        assert!((v - (1.0 - (-0.25f64).exp())).abs() < 1e-15);
        assert!((v - 0.2212).abs() < 5e-5);
        let a = report(0.1, -2.0, 0.3);
        let b = report(1.7, 0.4, 0.9);
        assert_eq!(pairwise_conflict(&a, &b), pairwise_conflict(&b, &a));
    }

    #[test]
    fn full_matrix_matches_pairwise_conflicts() {
        let reports = generate_scenario(&ScenarioParams { seed: 5, ..Default::default() }).unwrap();
        let dense = full_cost_matrix(&reports).unwrap();
        assert_eq!(dense.kind(), GraphKind::Dense);
        assert_eq!(dense.edges().len(), 4950);
        assert!(dense.edges().iter().all(|e| (0.0..=1.0).contains(&e.weight)));
        for (i, j) in [(0, 1), (3, 97), (42, 43), (98, 99)] {
            assert_eq!(
                dense.weight(i, j).unwrap(),
                pairwise_conflict(&reports[i], &reports[j])
            );
        }
        let one = ReportSet::new(vec![report(0.0, 0.0, 1.0)]).unwrap();
        assert!(full_cost_matrix(&one).is_err());
    }

    #[test]
    fn sparse_edge_counts() {
        let reports = generate_scenario(&ScenarioParams { seed: 9, ..Default::default() }).unwrap();
        let dense = full_cost_matrix(&reports).unwrap();
        for (gamma, m) in [(3.0, 150), (5.0, 250), (4.6, 230), (0.5, 25)] {
            let params = SparseSamplerParams { gamma, seed: 1, weight_mode: WeightMode::Measured };
            let g = sample_sparse_graph(SparseSource::Dense(&dense), &params).unwrap();
            assert_eq!(g.edges().len(), m);
            assert_eq!(g.kind(), GraphKind::Sparse);
            for e in g.edges() {
                assert_eq!(e.weight.to_bits(), dense.weight(e.i, e.j).unwrap().to_bits());
            }
            let from_reports = sample_sparse_graph(SparseSource::Reports(&reports), &params).unwrap();
            assert_eq!(from_reports, g);
        }
    }

    #[test]
    fn odd_products_round_down() {
        let params = SparseSamplerParams { gamma: 3.0, seed: 0, weight_mode: WeightMode::Unit };
        let g = sample_sparse_graph(SparseSource::Vertices(7), &params).unwrap();
        assert_eq!(g.edges().len(), 10);
    }

    #[test]
    fn saturated_gamma_gives_complete_graph() {
        let params = SparseSamplerParams { gamma: 11.0, seed: 4, weight_mode: WeightMode::Unit };
        let g = sample_sparse_graph(SparseSource::Vertices(12), &params).unwrap();
        assert_eq!(g.edges().len(), 66);
        assert_eq!(g.kind(), GraphKind::Dense);
    }

    #[test]
    fn sampling_rejects_bad_gamma() {
        for gamma in [0.0, -1.0, f64::NAN, 9.5] {
            let params = SparseSamplerParams { gamma, seed: 0, weight_mode: WeightMode::Unit };
            assert!(matches!(
                sample_sparse_graph(SparseSource::Vertices(10), &params),
                Err(Error::InvalidGamma { .. })
            ));
        }
        let params = SparseSamplerParams { gamma: 2.0, seed: 0, weight_mode: WeightMode::Measured };
        assert!(sample_sparse_graph(SparseSource::Vertices(10), &params).is_err());
    }

    #[test]
    fn insertion_edges_touch_new_reports() {
        let reports = generate_scenario(&ScenarioParams {
            reports_per_burst: 120,
            seed: 2,
            ..Default::default()
        })
        .unwrap();
        let params = SparseSamplerParams { gamma: 4.0, seed: 8, weight_mode: WeightMode::Measured };
        let edges = sample_insertion_edges(SparseSource::Reports(&reports), 100, &params).unwrap();
        assert_eq!(edges.len(), 240 - 200);
        assert!(edges.iter().all(|e| e.j >= 100 && e.i < e.j));
        for e in &edges {
            assert_eq!(e.weight, pairwise_conflict(&reports[e.i], &reports[e.j]));
        }
    }

    #[test]
    fn critical_gamma_table() {
        assert_eq!(critical_gamma(3).unwrap(), 4.6);
        let g3 = critical_gamma(3).unwrap();
        assert!(3.0 < g3 && g3 < 5.0);
        assert!(critical_gamma(2).unwrap() < g3);
        let values: Vec<f64> = (2..40).map(|k| critical_gamma(k).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[0] < w[1]));
        assert!(critical_gamma(1).is_err());
        assert!(critical_gamma(0).is_err());
    }

    #[test]
    fn reports_csv_round_trip() {
        let mut reports = generate_scenario(&ScenarioParams {
            reports_per_burst: 5,
            seed: 1,
            ..Default::default()
        })
        .unwrap()
        .reports()
        .to_vec();
        reports[2].true_target = None;
        let set = ReportSet::new(reports).unwrap();
        let mut buf = Vec::new();
        write_reports(&set, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,x,y,sigma,true_target\n"));
        assert!(text.lines().nth(3).unwrap().ends_with(','));
        assert_eq!(read_reports(&buf[..]).unwrap(), set);
    }
}
