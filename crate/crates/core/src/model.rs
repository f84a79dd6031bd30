//! Domain types and the pairwise clustering cost.
//!
//! A clustering of `n` reports into `k` clusters is scored as the sum of the
//! conflict weights of every stored edge whose endpoints share a cluster. The
//! local fitness of a report is the part of that sum touching it, so a larger
//! value marks a worse variable, and the local fitnesses add up to exactly
//! twice the total cost.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// One sensor observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub id: usize,
    pub position: [f64; 2],
    pub noise_sigma: f64,
    /// Ground-truth target, only known for generated scenarios.
    pub true_target: Option<usize>,
}

/// An ordered collection of reports with unique ids.
///
/// Graph vertices refer to reports by their position in the set, not by id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportSet {
    reports: Vec<Report>,
}

impl ReportSet {
    pub fn new(reports: Vec<Report>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(reports.len());
        for r in &reports {
            if !(r.noise_sigma > 0.0 && r.noise_sigma.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "report {} has non-positive noise sigma {}",
                    r.id, r.noise_sigma
                )));
            }
            if !r.position.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "report {} has a non-finite position",
                    r.id
                )));
            }
            if !seen.insert(r.id) {
                return Err(Error::InvalidParameter(format!("duplicate report id {}", r.id)));
            }
        }
        Ok(Self { reports })
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }

    pub fn reports(&self) -> &[Report] {
        &self.reports
    }

    pub fn get(&self, index: usize) -> Option<&Report> {
        self.reports.get(index)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Report> {
        self.reports.iter()
    }

    /// Ground-truth labels, if every report carries one.
    pub fn true_labels(&self) -> Option<Vec<usize>> {
        self.reports.iter().map(|r| r.true_target).collect()
    }
}

impl std::ops::Index<usize> for ReportSet {
    type Output = Report;

    fn index(&self, index: usize) -> &Report {
        &self.reports[index]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    /// Every pair carries a weight.
    Dense,
    /// A sampled subset of the pairs.
    Sparse,
}

/// A stored conflict, always with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub vertex: usize,
    pub weight: f64,
}

/// Weighted undirected conflict graph with a per-vertex adjacency index.
///
/// Adjacency lists hold incident edges in edge-list order, so summing over a
/// vertex's neighbors visits the same terms in the same order as a pass over
/// the edge list.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictGraph {
    n: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<Neighbor>>,
    kind: GraphKind,
}

impl ConflictGraph {
    /// Builds a graph, reorienting edges to `i < j` and rejecting self-loops,
    /// duplicate pairs, out-of-range indices and negative or non-finite
    /// weights. A dense graph must list every pair.
    pub fn new(n: usize, edges: Vec<Edge>, kind: GraphKind) -> Result<Self> {
        let mut graph = Self {
            n,
            edges: Vec::with_capacity(edges.len()),
            adjacency: vec![Vec::new(); n],
            kind,
        };
        let mut seen = HashSet::with_capacity(edges.len());
        for e in edges {
            graph.push_edge(e, &mut seen)?;
        }
        if kind == GraphKind::Dense && graph.edges.len() != pair_count(n) {
            return Err(Error::InvalidParameter(format!(
                "dense graph on {n} vertices needs {} edges, got {}",
                pair_count(n),
                graph.edges.len()
            )));
        }
        Ok(graph)
    }

    pub fn from_triples(
        n: usize,
        triples: impl IntoIterator<Item = (usize, usize, f64)>,
        kind: GraphKind,
    ) -> Result<Self> {
        let edges = triples
            .into_iter()
            .map(|(i, j, weight)| Edge { i, j, weight })
            .collect();
        Self::new(n, edges, kind)
    }

    fn push_edge(&mut self, e: Edge, seen: &mut HashSet<(usize, usize)>) -> Result<()> {
        let (i, j) = if e.i <= e.j { (e.i, e.j) } else { (e.j, e.i) };
        if i == j {
            return Err(Error::InvalidEdge { i, j, reason: "self-loop" });
        }
        if j >= self.n {
            return Err(Error::IndexOutOfRange { index: j, n: self.n });
        }
        if !(e.weight >= 0.0 && e.weight.is_finite()) {
            return Err(Error::InvalidEdge {
                i,
                j,
                reason: "weight must be finite and non-negative",
            });
        }
        if !seen.insert((i, j)) {
            return Err(Error::InvalidEdge { i, j, reason: "duplicate pair" });
        }
        let weight = e.weight;
        self.edges.push(Edge { i, j, weight });
        self.adjacency[i].push(Neighbor { vertex: j, weight });
        self.adjacency[j].push(Neighbor { vertex: i, weight });
        Ok(())
    }

    /// Appends `n_new` vertices and the given edges. The result is always
    /// sparse unless it still lists every pair.
    pub fn grow(&mut self, n_new: usize, edges: &[Edge]) -> Result<()> {
        let n = self.n + n_new;
        for e in edges {
            let hi = e.i.max(e.j);
            if hi >= n {
                return Err(Error::IndexOutOfRange { index: hi, n });
            }
        }
        let mut next = self.clone();
        next.n = n;
        next.adjacency.resize(n, Vec::new());
        let mut seen: HashSet<(usize, usize)> = next.edges.iter().map(|e| (e.i, e.j)).collect();
        for &e in edges {
            next.push_edge(e, &mut seen)?;
        }
        next.kind = if next.edges.len() == pair_count(n) {
            GraphKind::Dense
        } else {
            GraphKind::Sparse
        };
        *self = next;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, vertex: usize) -> &[Neighbor] {
        &self.adjacency[vertex]
    }

    pub fn degree(&self, vertex: usize) -> usize {
        self.adjacency[vertex].len()
    }

    /// Weight of the pair, if stored. Linear in the degree of `i`.
    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.adjacency
            .get(i)?
            .iter()
            .find(|nb| nb.vertex == j)
            .map(|nb| nb.weight)
    }

    /// Writes the `n m k` header followed by one `i j weight` line per edge.
    pub fn write_to<W: Write>(&self, k: usize, mut out: W) -> Result<()> {
        let mut buf = String::with_capacity(32 * (self.edges.len() + 1));
        writeln!(buf, "{} {} {}", self.n, self.edges.len(), k).unwrap();
        for e in &self.edges {
            writeln!(buf, "{} {} {}", e.i, e.j, e.weight).unwrap();
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn save(&self, k: usize, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(k, std::io::BufWriter::new(file))
    }

    /// Parses the graph file format, returning the graph and the cluster
    /// count from its header.
    pub fn read_from<R: BufRead>(input: R, path: &Path) -> Result<(Self, usize)> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = input
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing `n m k` header".into()))?;
        let header = header?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [n, m, k] = fields[..] else {
            return Err(parse_err(1, format!("expected `n m k`, got `{header}`")));
        };
        let parse_usize = |s: &str, line: usize| {
            s.parse::<usize>()
                .map_err(|e| parse_err(line, format!("`{s}`: {e}")))
        };
        let (n, m, k) = (parse_usize(n, 1)?, parse_usize(m, 1)?, parse_usize(k, 1)?);

        let mut edges = Vec::with_capacity(m);
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [i, j, w] = fields[..] else {
                return Err(parse_err(lineno, format!("expected `i j weight`, got `{line}`")));
            };
            let weight = w
                .parse::<f64>()
                .map_err(|e| parse_err(lineno, format!("`{w}`: {e}")))?;
            edges.push(Edge {
                i: parse_usize(i, lineno)?,
                j: parse_usize(j, lineno)?,
                weight,
            });
        }
        if edges.len() != m {
            return Err(parse_err(1, format!("header declares {m} edges, found {}", edges.len())));
        }
        let kind = if m == pair_count(n) {
            GraphKind::Dense
        } else {
            GraphKind::Sparse
        };
        Ok((Self::new(n, edges, kind)?, k))
    }

    pub fn load(path: &Path) -> Result<(Self, usize)> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file), path)
    }
}

/// Number of unordered pairs on `n` vertices.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Cluster label per report.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    labels: Vec<usize>,
    k: usize,
}

impl Assignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&label) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::LabelOutOfRange { label, k });
        }
        Ok(Self { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn set(&mut self, i: usize, label: usize) {
        assert!(label < self.k, "label {label} >= k = {}", self.k);
        self.labels[i] = label;
    }

    pub(crate) fn extend(&mut self, labels: impl IntoIterator<Item = usize>) {
        let k = self.k;
        self.labels.extend(labels.into_iter().inspect(|&l| assert!(l < k)));
    }

    /// Applies a relabeling `label -> permutation[label]`.
    pub fn permuted(&self, permutation: &[usize]) -> Result<Self> {
        Self::new(self.labels.iter().map(|&l| permutation[l]).collect(), self.k)
    }

    /// One label per line.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = String::with_capacity(4 * self.labels.len());
        for l in &self.labels {
            writeln!(buf, "{l}").unwrap();
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path, k: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let labels = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(idx, l)| {
                l.trim().parse::<usize>().map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: format!("`{l}`: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels, k)
    }
}

fn check_dims(graph: &ConflictGraph, assignment: &Assignment) -> Result<()> {
    if assignment.len() != graph.n() {
        return Err(Error::DimensionMismatch {
            expected: graph.n(),
            actual: assignment.len(),
        });
    }
    Ok(())
}

/// Sum of the weights of all stored edges whose endpoints share a label.
pub fn total_cost(graph: &ConflictGraph, assignment: &Assignment) -> Result<f64> {
    check_dims(graph, assignment)?;
    let labels = assignment.labels();
    Ok(graph
        .edges()
        .iter()
        .filter(|e| labels[e.i] == labels[e.j])
        .map(|e| e.weight)
        .sum())
}

/// Local fitness of report `i`: the weight of its same-cluster conflicts.
pub fn local_fitness(graph: &ConflictGraph, assignment: &Assignment, i: usize) -> Result<f64> {
    check_dims(graph, assignment)?;
    if i >= graph.n() {
        return Err(Error::IndexOutOfRange { index: i, n: graph.n() });
    }
    Ok(vertex_fitness(graph, assignment.labels(), i))
}

pub(crate) fn vertex_fitness(graph: &ConflictGraph, labels: &[usize], i: usize) -> f64 {
    let own = labels[i];
    let mut sum = 0.0;
    for nb in graph.neighbors(i) {
        if labels[nb.vertex] == own {
            sum += nb.weight;
        }
    }
    sum
}

/// Local fitness of every report, in one pass over the edge list.
pub fn all_local_fitness(graph: &ConflictGraph, assignment: &Assignment) -> Result<Vec<f64>> {
    check_dims(graph, assignment)?;
    let labels = assignment.labels();
    let mut lambda = vec![0.0; graph.n()];
    for e in graph.edges() {
        if labels[e.i] == labels[e.j] {
            lambda[e.i] += e.weight;
            lambda[e.j] += e.weight;
        }
    }
    Ok(lambda)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: u64,
    pub current_cost: f64,
    pub best_cost: f64,
}

/// Current and best-so-far cost over the course of a search.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    rows: Vec<TraceRow>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            rows: Vec::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, step: u64, current_cost: f64, best_cost: f64) {
        debug_assert!(self.rows.last().is_none_or(|r| r.step < step));
        self.rows.push(TraceRow {
            step,
            current_cost,
            best_cost,
        });
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// First row at or after `step`.
    pub fn at_step(&self, step: u64) -> Option<&TraceRow> {
        let idx = self.rows.partition_point(|r| r.step < step);
        self.rows.get(idx)
    }

    /// Steps strictly increase, best never increases, and best never exceeds
    /// current.
    pub fn is_valid(&self) -> bool {
        self.rows.iter().all(|r| r.best_cost <= r.current_cost)
            && self
                .rows
                .windows(2)
                .all(|w| w[0].step < w[1].step && w[1].best_cost <= w[0].best_cost)
    }

    /// Point-wise mean of traces recorded at identical steps.
    pub fn mean(traces: &[Trace]) -> Result<Trace> {
        let first = traces
            .first()
            .ok_or_else(|| Error::InvalidParameter("cannot average zero traces".into()))?;
        if traces.iter().any(|t| {
            t.len() != first.len() || t.rows.iter().zip(&first.rows).any(|(a, b)| a.step != b.step)
        }) {
            return Err(Error::InvalidParameter(
                "traces were recorded at different steps".into(),
            ));
        }
        let count = traces.len() as f64;
        let rows = (0..first.len())
            .map(|idx| {
                let (cur, best) = traces.iter().fold((0.0, 0.0), |(c, b), t| {
                    (c + t.rows[idx].current_cost, b + t.rows[idx].best_cost)
                });
                TraceRow {
                    step: first.rows[idx].step,
                    current_cost: cur / count,
                    best_cost: best / count,
                }
            })
            .collect();
        Ok(Trace { rows })
    }

    /// CSV with header `step,current_cost,best_cost`.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.rows.len() + 1));
        out.push_str("step,current_cost,best_cost\n");
        for r in &self.rows {
            writeln!(out, "{},{},{}", r.step, r.current_cost, r.best_cost).unwrap();
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}
