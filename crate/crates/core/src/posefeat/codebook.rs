use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};

pub const KMEANS_MAX_ITERS: usize = 100;
pub const KMEANS_REL_TOL: f64 = 1e-6;

/// k-means centers for one sub-feature, with k = 2·dim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub sub_feature: String,
    pub dim: usize,
    pub seed: u64,
    pub centers: Vec<Vec<f64>>,
    /// Inertia after each Lloyd iteration.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inertia_trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Codebook {
    pub fn k(&self) -> usize {
        self.centers.len()
    }

    /// Nearest center by L2 distance; ties resolve to the lowest index.
    pub fn quantize(&self, sample: &[f64]) -> Result<usize> {
        ensure_dim(self.dim, sample.len())?;
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, center) in self.centers.iter().enumerate() {
            let d = sq_dist(sample, center);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        Ok(best)
    }
}

fn nearest(centers: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(x, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Builds a codebook of `2 · dim` centers with seeded k-means++ and Lloyd iterations.
///
/// Stops after [`KMEANS_MAX_ITERS`] iterations or once the relative inertia
/// decrease falls below [`KMEANS_REL_TOL`]. Clusters that become empty are
/// re-seeded at the sample farthest from its current center.
pub fn build_codebook(sub_feature: &str, samples: &[Vec<f64>], seed: u64) -> Result<Codebook> {
    let dim = samples.first().map(Vec::len).ok_or(Error::TooFewSamples { need: 2, got: 0 })?;
    if dim == 0 {
        return Err(Error::Degenerate(format!("sub-feature `{sub_feature}` has dimension 0")));
    }
    for s in samples {
        ensure_dim(dim, s.len())?;
        crate::util::check_finite(s, sub_feature)?;
    }
    let k = 2 * dim;
    if samples.len() < k {
        return Err(Error::TooFewSamples {
            need: k,
            got: samples.len(),
        });
    }
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    for s in samples {
        if !distinct.iter().any(|d| *d == s) {
            distinct.push(s);
            if distinct.len() >= k {
                break;
            }
        }
    }
    if distinct.len() < k {
        return Err(Error::Degenerate(format!(
            "sub-feature `{sub_feature}` has {} distinct samples, need {k}",
            distinct.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(samples[rng.gen_range(0..samples.len())].clone());
    let mut d2: Vec<f64> = samples.iter().map(|s| sq_dist(s, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.gen::<f64>() * total;
        let mut pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(0);
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 && target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        centers.push(samples[pick].clone());
        let newest = centers.last().expect("just pushed");
        for (i, s) in samples.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(s, newest));
        }
    }

    let mut assign = vec![0usize; samples.len()];
    let mut trace = Vec::new();
    let mut prev_inertia = f64::INFINITY;
    for _ in 0..KMEANS_MAX_ITERS {
        let mut dists = vec![0.0; samples.len()];
        for (i, s) in samples.iter().enumerate() {
            let (c, d) = nearest(&centers, s);
            assign[i] = c;
            dists[i] = d;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (s, &c) in samples.iter().zip(&assign) {
            counts[c] += 1;
            sums[c].iter_mut().zip(s).for_each(|(a, b)| *a += b);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|v| v / counts[c] as f64).collect();
            } else {
                let far = (0..samples.len())
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .expect("samples non-empty");
                centers[c] = samples[far].clone();
                dists[far] = 0.0;
            }
        }
        let inertia: f64 = samples.iter().map(|s| nearest(&centers, s).1).sum();
        trace.push(inertia);
        let converged = prev_inertia.is_finite() && (prev_inertia - inertia) <= KMEANS_REL_TOL * prev_inertia.max(f64::MIN_POSITIVE);
        prev_inertia = inertia;
        if converged {
            break;
        }
    }

    Ok(Codebook {
        sub_feature: sub_feature.to_string(),
        dim,
        seed,
        centers,
        inertia_trace: trace,
    })
}
