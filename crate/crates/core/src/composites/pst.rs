use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::util;

/// Per (composite, sequence) label: `Some(true)`, `Some(false)` or unlabeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    /// `labels[z][d]`.
    pub labels: Vec<Vec<Option<bool>>>,
}

impl LabelSet {
    pub fn unlabeled(z: usize, d: usize) -> Self {
        Self { labels: vec![vec![None; d]; z] }
    }

    /// One positive composite per labeled sequence; `None` entries stay unlabeled.
    pub fn from_assignments(z: usize, assignments: &[Option<usize>]) -> Result<Self> {
        let mut labels = vec![vec![None; assignments.len()]; z];
        for (d, a) in assignments.iter().enumerate() {
            if let Some(c) = *a {
                if c >= z {
                    return Err(Error::IndexOutOfRange { index: c, len: z });
                }
                for (zz, row) in labels.iter_mut().enumerate() {
                    row[d] = Some(zz == c);
                }
            }
        }
        Ok(Self { labels })
    }

    pub fn is_labeled(&self, d: usize) -> bool {
        self.labels.iter().any(|row| row[d].is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaMode {
    /// Mean distance to the single nearest neighbour.
    #[default]
    Nearest,
    /// Mean distance to the k nearest neighbours.
    KMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKernel {
    /// `exp(−0.5 · σ^0.5 · ‖a − b‖)`.
    #[default]
    Literal,
    /// `exp(−‖a − b‖² / (2σ²))`.
    Squared,
}

impl FromStr for EdgeKernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(Self::Literal),
            "squared" => Ok(Self::Squared),
            _ => Err(Error::config("kernel", format!("unknown edge kernel `{s}`"))),
        }
    }
}

impl FromStr for SigmaMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(Self::Nearest),
            "k-mean" | "kmean" => Ok(Self::KMean),
            _ => Err(Error::config("sigma", format!("unknown sigma mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PstConfig {
    pub gamma: f64,
    pub delta: f64,
    pub k: usize,
    pub alpha: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub sigma: SigmaMode,
    pub kernel: EdgeKernel,
}

impl Default for PstConfig {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            delta: 0.25,
            k: 5,
            alpha: 0.9,
            tol: 1e-12,
            max_iters: 100_000,
            sigma: SigmaMode::Nearest,
            kernel: EdgeKernel::Literal,
        }
    }
}

impl PstConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma", "must lie in [0, 1]"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::config("delta", "must lie in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::config("alpha", "must lie in [0, 1)"));
        }
        if self.k == 0 {
            return Err(Error::config("k", "must be positive"));
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(Error::config("tol", "tolerance and iteration cap must be positive"));
        }
        Ok(())
    }
}

/// Indices kept by the top-δ rule among `candidates` (sorted by descending score).
///
/// Keeps `ceil(δ · count)` entries and extends the cut over equal scores.
fn top_delta(scores: &[f64], candidates: &[usize], delta: f64) -> Vec<usize> {
    if candidates.is_empty() {
        return Vec::new();
    }
    let mut order = candidates.to_vec();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let keep = ((delta * order.len() as f64 - 1e-9).ceil() as usize).clamp(1, order.len());
    let cut = scores[order[keep - 1]];
    order.into_iter().filter(|&d| scores[d] >= cut).collect()
}

/// Initial PST score table `[z][d]`.
///
/// In zero-shot mode γ is forced to 0 and every sequence is treated as unlabeled.
pub fn pst_init(script_scores: &[Vec<f64>], labels: Option<&LabelSet>, cfg: &PstConfig, zero_shot: bool) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let z = script_scores.len();
    let d = script_scores.first().map_or(0, Vec::len);
    for row in script_scores {
        ensure_dim(d, row.len())?;
        util::check_finite(row, "script scores")?;
    }
    let empty = LabelSet::unlabeled(z, d);
    let labels = if zero_shot { &empty } else { labels.unwrap_or(&empty) };
    ensure_dim(z, labels.labels.len())?;
    let gamma = if zero_shot { 0.0 } else { cfg.gamma };
    let mut out = vec![vec![0.0; d]; z];
    for (zi, row) in script_scores.iter().enumerate() {
        ensure_dim(d, labels.labels[zi].len())?;
        let unlabeled: Vec<usize> = (0..d).filter(|&k| labels.labels[zi][k].is_none()).collect();
        for k in top_delta(row, &unlabeled, cfg.delta) {
            out[zi][k] = (1.0 - gamma) * row[k];
        }
        for (k, l) in labels.labels[zi].iter().enumerate() {
            if let Some(l) = l {
                out[zi][k] = gamma * if *l { 1.0 } else { 0.0 };
            }
        }
    }
    Ok(out)
}

/// Symmetric weighted k-NN graph over sequence features.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    pub n: usize,
    /// Adjacency lists sorted by neighbour index; no self-loops.
    pub edges: Vec<Vec<(usize, f64)>>,
    pub sigma: f64,
}

impl NeighborGraph {
    /// Builds a graph from explicit undirected edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::IndexOutOfRange { index: a.max(b), len: n });
            }
            if a == b || !(w > 0.0 && w.is_finite()) {
                return Err(Error::Degenerate(format!("invalid edge ({a}, {b}, {w})")));
            }
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        for list in &mut adj {
            list.sort_by(|x, y| x.0.cmp(&y.0));
            list.dedup_by(|x, y| x.0 == y.0);
        }
        Ok(Self { n, edges: adj, sigma: 0.0 })
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        self.edges[a]
            .binary_search_by(|e| e.0.cmp(&b))
            .map_or(0.0, |k| self.edges[a][k].1)
    }

    pub fn degree(&self, a: usize) -> f64 {
        self.edges[a].iter().map(|e| e.1).sum()
    }
}

/// Connects each sequence to its `k` nearest neighbours (L2) and symmetrizes by union.
pub fn build_knn_graph(features: &[Vec<f64>], k: usize, sigma_mode: SigmaMode, kernel: EdgeKernel) -> Result<NeighborGraph> {
    let n = features.len();
    if k == 0 || k >= n {
        return Err(Error::TooFewSamples { need: k + 1, got: n });
    }
    let dim = features[0].len();
    for f in features {
        ensure_dim(dim, f.len())?;
        util::check_finite(f, "sequence feature")?;
    }
    let mut neighbours = Vec::with_capacity(n);
    for (a, fa) in features.iter().enumerate() {
        let mut d: Vec<(usize, f64)> = features
            .iter()
            .enumerate()
            .filter(|(b, _)| *b != a)
            .map(|(b, fb)| (b, util::l2_distance(fa, fb)))
            .collect();
        d.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
        d.truncate(k);
        neighbours.push(d);
    }
    let sigma = match sigma_mode {
        SigmaMode::Nearest => neighbours.iter().map(|d| d[0].1).sum::<f64>() / n as f64,
        SigmaMode::KMean => neighbours.iter().flatten().map(|e| e.1).sum::<f64>() / (n * k) as f64,
    };
    let weight = |dist: f64| match kernel {
        EdgeKernel::Literal => (-0.5 * sigma.sqrt() * dist).exp(),
        EdgeKernel::Squared if sigma > 0.0 => (-dist * dist / (2.0 * sigma * sigma)).exp(),
        EdgeKernel::Squared => if dist == 0.0 { 1.0 } else { 0.0 },
    };
    let mut edges = Vec::new();
    for (a, list) in neighbours.iter().enumerate() {
        for &(b, dist) in list {
            let w = weight(dist);
            if w > 0.0 {
                edges.push((a, b, w));
            }
        }
    }
    let mut g = NeighborGraph::from_edges(n, &edges)?;
    g.sigma = sigma;
    Ok(g)
}

/// Result of label propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    /// `scores[z][d]`.
    pub scores: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates `F ← α·S_n·F + (1−α)·Y` from `F = Y`, one composite row at a time.
///
/// `S_n = D^{-1/2} W D^{-1/2}`; isolated nodes get a unit self-loop so that
/// their rows pass through unchanged.
pub fn propagate(graph: &NeighborGraph, init: &[Vec<f64>], alpha: f64, tol: f64, max_iters: usize) -> Result<Propagation> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::config("alpha", "must lie in [0, 1)"));
    }
    for row in init {
        ensure_dim(graph.n, row.len())?;
        util::check_finite(row, "propagation input")?;
    }
    let inv_sqrt: Vec<f64> = (0..graph.n)
        .map(|a| {
            let d = graph.degree(a);
            if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }
        })
        .collect();
    let mut f: Vec<Vec<f64>> = init.to_vec();
    let mut next = f.clone();
    let mut iterations = 0;
    let mut converged = alpha == 0.0;
    while !converged && iterations < max_iters {
        iterations += 1;
        let mut change = 0.0f64;
        for (zi, y) in init.iter().enumerate() {
            for a in 0..graph.n {
                let spread = if graph.edges[a].is_empty() {
                    f[zi][a]
                } else {
                    graph.edges[a].iter().map(|&(b, w)| w * inv_sqrt[a] * inv_sqrt[b] * f[zi][b]).sum()
                };
                let v = alpha * spread + (1.0 - alpha) * y[a];
                if !v.is_finite() {
                    return Err(Error::NonFinite("label propagation diverged".into()));
                }
                change = change.max((v - f[zi][a]).abs());
                next[zi][a] = v;
            }
        }
        std::mem::swap(&mut f, &mut next);
        converged = change < tol;
    }
    if !converged {
        log::warn!("label propagation stopped after {iterations} iterations without converging");
    }
    Ok(Propagation { scores: f, iterations, converged })
}

/// One row of a composite prediction export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositePrediction {
    pub sequence: String,
    pub composite: String,
    pub score: f64,
}

/// CSV `sequence,composite,score` sorted by sequence, then by descending score.
pub fn predictions_csv(sequences: &[String], composites: &[String], scores: &[Vec<f64>]) -> Result<String> {
    ensure_dim(composites.len(), scores.len())?;
    let mut rows = Vec::new();
    for (zi, row) in scores.iter().enumerate() {
        ensure_dim(sequences.len(), row.len())?;
        for (d, s) in row.iter().enumerate() {
            rows.push(CompositePrediction {
                sequence: sequences[d].clone(),
                composite: composites[zi].clone(),
                score: *s,
            });
        }
    }
    rows.sort_by(|a, b| a.sequence.cmp(&b.sequence).then(b.score.total_cmp(&a.score)));
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn save_predictions(path: &Path, sequences: &[String], composites: &[String], scores: &[Vec<f64>]) -> Result<()> {
    util::write_string(path, &predictions_csv(sequences, composites, scores)?)
}
