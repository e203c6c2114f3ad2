use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::model::{PairwiseGaussian, PartGraph};
use crate::error::{Error, Result};
use crate::util;

/// Log value standing in for a zero likelihood.
pub const LOG_FLOOR: f64 = -1e30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Quadratic-time messages over all location pairs.
    Naive,
    /// Separable per-axis messages; lower-envelope distance transform for max-product.
    #[default]
    DistanceTransform,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Self::Naive),
            "dt" | "distance-transform" | "distance_transform" => Ok(Self::DistanceTransform),
            _ => Err(Error::config("algorithm", format!("unknown algorithm `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Reduce {
    Max,
    Sum,
}

fn log_grid(g: &Grid, name: &str) -> Result<Vec<f64>> {
    if g.values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::NonFinite(format!("likelihood grid of `{name}` must be finite and non-negative")));
    }
    if g.values.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate(format!("likelihood grid of `{name}` is all zero")));
    }
    Ok(g.values.iter().map(|&v| if v > 0.0 { v.ln().max(LOG_FLOOR) } else { LOG_FLOOR }).collect())
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `out(q) = reduce_l b(l) − ax·(lx − qx − sx)² − ay·(ly − qy − sy)²` for every cell `q`.
///
/// For max-reduction the second value holds the maximizing cell index of every `q`.
struct MessageOp {
    h: usize,
    w: usize,
    sx: f64,
    sy: f64,
    ax: f64,
    ay: f64,
}

impl MessageOp {
    fn new(h: usize, w: usize, e: &PairwiseGaussian, sign: f64) -> Self {
        Self {
            h,
            w,
            sx: sign * e.dx,
            sy: sign * e.dy,
            ax: 1.0 / (2.0 * e.var_x),
            ay: 1.0 / (2.0 * e.var_y),
        }
    }

    fn naive(&self, b: &[f64], reduce: Reduce) -> (Vec<f64>, Vec<usize>) {
        let (h, w) = (self.h, self.w);
        let mut out = vec![0.0; h * w];
        let mut arg = vec![0; h * w];
        for qy in 0..h {
            for qx in 0..w {
                let term = |l: usize| {
                    let ex = (l % w) as f64 - qx as f64 - self.sx;
                    let ey = (l / w) as f64 - qy as f64 - self.sy;
                    b[l] - self.ax * ex * ex - self.ay * ey * ey
                };
                let q = qy * w + qx;
                match reduce {
                    Reduce::Max => {
                        let (mut best, mut at) = (f64::NEG_INFINITY, 0);
                        for l in 0..h * w {
                            let v = term(l);
                            if v > best {
                                best = v;
                                at = l;
                            }
                        }
                        out[q] = best;
                        arg[q] = at;
                    }
                    Reduce::Sum => out[q] = log_sum_exp((0..h * w).map(term)),
                }
            }
        }
        (out, arg)
    }

    fn separable(&self, b: &[f64], reduce: Reduce) -> (Vec<f64>, Vec<usize>) {
        let (h, w) = (self.h, self.w);
        // pass over x within each source row
        let mut g = vec![0.0; h * w];
        let mut gx = vec![0; h * w];
        for ly in 0..h {
            let row = &b[ly * w..(ly + 1) * w];
            let queries: Vec<f64> = (0..w).map(|qx| qx as f64 + self.sx).collect();
            let (vals, args) = axis_pass(row, &queries, self.ax, reduce);
            g[ly * w..(ly + 1) * w].copy_from_slice(&vals);
            gx[ly * w..(ly + 1) * w].copy_from_slice(&args);
        }
        // pass over y for each query column
        let mut out = vec![0.0; h * w];
        let mut arg = vec![0; h * w];
        let queries: Vec<f64> = (0..h).map(|qy| qy as f64 + self.sy).collect();
        for qx in 0..w {
            let col: Vec<f64> = (0..h).map(|ly| g[ly * w + qx]).collect();
            let (vals, args) = axis_pass(&col, &queries, self.ay, reduce);
            for qy in 0..h {
                out[qy * w + qx] = vals[qy];
                let ly = args[qy];
                arg[qy * w + qx] = ly * w + gx[ly * w + qx];
            }
        }
        (out, arg)
    }
}

/// One-dimensional `reduce_l f(l) − a·(l − q)²` at increasing real queries `q`.
fn axis_pass(f: &[f64], queries: &[f64], a: f64, reduce: Reduce) -> (Vec<f64>, Vec<usize>) {
    match reduce {
        Reduce::Sum => {
            let vals = queries
                .iter()
                .map(|&q| log_sum_exp(f.iter().enumerate().map(move |(l, v)| v - a * (l as f64 - q).powi(2))))
                .collect();
            (vals, vec![0; queries.len()])
        }
        Reduce::Max => {
            let cost: Vec<f64> = f.iter().map(|v| -v).collect();
            let (vals, args) = lower_envelope(&cost, queries, a);
            (vals.into_iter().map(|v| -v).collect(), args)
        }
    }
}

/// Generalized distance transform `min_l cost(l) + a·(l − q)²` via the lower envelope of parabolas.
pub fn lower_envelope(cost: &[f64], queries: &[f64], a: f64) -> (Vec<f64>, Vec<usize>) {
    let n = cost.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let cross = |q: usize, p: usize| {
        let (qf, pf) = (q as f64, p as f64);
        ((cost[q] + a * qf * qf) - (cost[p] + a * pf * pf)) / (2.0 * a * (qf - pf))
    };
    for q in 1..n {
        let mut s = cross(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = cross(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    let mut vals = Vec::with_capacity(queries.len());
    let mut args = Vec::with_capacity(queries.len());
    let mut j = 0;
    for &q in queries {
        while z[j + 1] < q {
            j += 1;
        }
        let l = v[j];
        vals.push(cost[l] + a * (q - l as f64).powi(2));
        args.push(l);
    }
    (vals, args)
}

/// Max-product message from a child with log belief `belief` to its parent on an `h × w` grid.
pub fn max_message(h: usize, w: usize, edge: &PairwiseGaussian, belief: &[f64], algo: Algorithm) -> Vec<f64> {
    message(&MessageOp::new(h, w, edge, 1.0), belief, Reduce::Max, algo).0
}

fn message(op: &MessageOp, b: &[f64], reduce: Reduce, algo: Algorithm) -> (Vec<f64>, Vec<usize>) {
    match algo {
        Algorithm::Naive => op.naive(b, reduce),
        Algorithm::DistanceTransform => op.separable(b, reduce),
    }
}

fn check_inputs(grids: &[Grid], graph: &PartGraph) -> Result<(usize, usize, Vec<Vec<f64>>)> {
    graph.validate()?;
    crate::error::ensure_dim(graph.len(), grids.len())?;
    let (h, w) = (grids[0].h, grids[0].w);
    let mut logs = Vec::with_capacity(grids.len());
    for (g, name) in grids.iter().zip(&graph.parts) {
        if (g.h, g.w) != (h, w) {
            return Err(Error::DimensionMismatch {
                expected: h * w,
                got: g.h * g.w,
            });
        }
        logs.push(log_grid(g, name)?);
    }
    Ok((h, w, logs))
}

/// Joint MAP configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct MapResult {
    /// `(x, y)` per part.
    pub placements: Vec<(usize, usize)>,
    /// Log of the unnormalized joint at the placements.
    pub log_score: f64,
}

/// Max-product belief propagation; ties in the root belief go to the lowest `(y, x)`.
pub fn infer_map(grids: &[Grid], graph: &PartGraph, algo: Algorithm) -> Result<MapResult> {
    let (h, w, logs) = check_inputs(grids, graph)?;
    let order = graph.order();
    let mut belief = logs.clone();
    let mut backptr: Vec<Vec<usize>> = vec![Vec::new(); graph.len()];
    for &c in order.iter().rev() {
        let Some(p) = graph.parent[c] else { continue };
        let op = MessageOp::new(h, w, &graph.pairwise[c], 1.0);
        let (msg, arg) = message(&op, &belief[c], Reduce::Max, algo);
        for (bp, m) in belief[p].iter_mut().zip(&msg) {
            *bp = (*bp + m).max(LOG_FLOOR * 4.0);
        }
        backptr[c] = arg;
    }
    let root = graph.root();
    let best = util::argmax(&belief[root]).expect("non-empty grid");
    let mut cell = vec![0usize; graph.len()];
    cell[root] = best;
    for &c in order.iter().skip(1) {
        cell[c] = backptr[c][cell[graph.parent[c].expect("non-root")]];
    }
    Ok(MapResult {
        placements: cell.iter().map(|&k| (k % w, k / w)).collect(),
        log_score: belief[root][best],
    })
}

/// Per-part posterior marginals from sum-product, each summing to one.
pub fn infer_marginals(grids: &[Grid], graph: &PartGraph, algo: Algorithm) -> Result<Vec<Grid>> {
    let (h, w, logs) = check_inputs(grids, graph)?;
    let n = graph.len();
    let order = graph.order();
    let mut up: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut inner = logs.clone();
    for &c in order.iter().rev() {
        let Some(p) = graph.parent[c] else { continue };
        let op = MessageOp::new(h, w, &graph.pairwise[c], 1.0);
        up[c] = message(&op, &inner[c], Reduce::Sum, algo).0;
        for (bp, m) in inner[p].iter_mut().zip(&up[c]) {
            *bp += m;
        }
    }
    let mut down: Vec<Vec<f64>> = vec![vec![0.0; h * w]; n];
    for &c in order.iter().skip(1) {
        let p = graph.parent[c].expect("non-root");
        let cavity: Vec<f64> = (0..h * w).map(|k| inner[p][k] - up[c][k] + down[p][k]).collect();
        let op = MessageOp::new(h, w, &graph.pairwise[c], -1.0);
        down[c] = message(&op, &cavity, Reduce::Sum, algo).0;
    }
    (0..n)
        .map(|i| {
            let b: Vec<f64> = (0..h * w).map(|k| inner[i][k] + down[i][k]).collect();
            let m = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = b.iter().map(|v| (v - m).exp()).collect();
            let z: f64 = e.iter().sum();
            let vals: Vec<f64> = e.into_iter().map(|v| v / z).collect();
            util::check_finite(&vals, "posterior marginal")?;
            Grid::from_values(h, w, vals)
        })
        .collect()
}

/// Log of the unnormalized joint of a full configuration.
pub fn joint_log_score(grids: &[Grid], graph: &PartGraph, placements: &[(usize, usize)]) -> Result<f64> {
    let (_, _, logs) = check_inputs(grids, graph)?;
    crate::error::ensure_dim(graph.len(), placements.len())?;
    let w = grids[0].w;
    let mut s = 0.0;
    for (i, &(x, y)) in placements.iter().enumerate() {
        s += logs[i][y * w + x];
        if let Some(p) = graph.parent[i] {
            let (xp, yp) = placements[p];
            s += graph.pairwise[i].log_potential(x as f64, y as f64, xp as f64, yp as f64);
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PlacementRow {
    part: String,
    x: usize,
    y: usize,
}

/// CSV `part,x,y`.
pub fn save_placements(path: &Path, graph: &PartGraph, placements: &[(usize, usize)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (name, &(x, y)) in graph.parts.iter().zip(placements) {
        w.serialize(PlacementRow { part: name.clone(), x, y })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    util::write_string(path, &String::from_utf8(bytes).expect("utf-8"))
}

pub fn load_placements(path: &Path) -> Result<Vec<(String, usize, usize)>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize::<PlacementRow>().map(|row| row.map(|p| (p.part, p.x, p.y)).map_err(Error::from)).collect()
}
