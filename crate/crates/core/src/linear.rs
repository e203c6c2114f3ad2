//! One-vs-all L2-regularized hinge-loss linear classifiers.
//!
//! Training is deterministic full-batch subgradient descent with step
//! `1 / (λ t)` and projection onto the ball of radius `1 / √λ`. The bias is
//! folded in as a constant feature. Subgradient steps are not descent steps,
//! so the iterate with the lowest primal objective is the one kept.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::util;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearConfig {
    pub lambda: f64,
    pub epochs: usize,
    /// Recorded with the models; training itself is deterministic full-batch.
    pub seed: u64,
    /// Weight positives and negatives so each class carries half the loss.
    pub balanced: bool,
    /// Report scores as (raw − mean) / std using training-score statistics.
    pub znorm: bool,
    /// Score assigned to categories that could not be trained.
    pub floor: f64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            epochs: 300,
            seed: 0,
            balanced: true,
            znorm: true,
            floor: -10.0,
        }
    }
}

impl LinearConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("lambda", "must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Mean of training scores.
    pub mean: f64,
    /// Standard deviation of training scores (1 when `constant`).
    pub std: f64,
    /// Training scores had (numerically) zero spread.
    pub constant: bool,
    /// Objective of the kept (best so far) iterate after each epoch.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective_trace: Vec<f64>,
    /// Objective of the raw iterate after each epoch.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub iterate_trace: Vec<f64>,
}

impl LinearModel {
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        util::dot(&self.weights, x) + self.bias
    }

    pub fn score(&self, x: &[f64], znorm: bool) -> f64 {
        let raw = self.raw_score(x);
        if znorm {
            (raw - self.mean) / self.std
        } else {
            raw
        }
    }
}

fn objective(w: &[f64], b: f64, xs: &[Vec<f64>], ys: &[f64], cs: &[f64], lambda: f64) -> f64 {
    let reg = 0.5 * lambda * (w.iter().map(|v| v * v).sum::<f64>() + b * b);
    let loss: f64 = xs
        .iter()
        .zip(ys)
        .zip(cs)
        .map(|((x, y), c)| c * (1.0 - y * (util::dot(w, x) + b)).max(0.0))
        .sum();
    reg + loss
}

/// Trains one binary classifier. Returns `None` when only one class is present.
pub fn train_binary(features: &[Vec<f64>], targets: &[bool], cfg: &LinearConfig) -> Result<Option<LinearModel>> {
    cfg.validate()?;
    ensure_dim(features.len(), targets.len())?;
    let n_pos = targets.iter().filter(|t| **t).count();
    let n_neg = targets.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Ok(None);
    }
    let dim = features[0].len();
    for x in features {
        ensure_dim(dim, x.len())?;
        util::check_finite(x, "classifier features")?;
    }
    let ys: Vec<f64> = targets.iter().map(|&t| if t { 1.0 } else { -1.0 }).collect();
    let cs: Vec<f64> = targets
        .iter()
        .map(|&t| {
            if cfg.balanced {
                0.5 / if t { n_pos } else { n_neg } as f64
            } else {
                1.0 / targets.len() as f64
            }
        })
        .collect();

    let lambda = cfg.lambda;
    let radius = 1.0 / lambda.sqrt();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut best = (w.clone(), b, objective(&w, b, features, &ys, &cs, lambda));
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut raw_trace = Vec::with_capacity(cfg.epochs);
    let mut grad = vec![0.0; dim];
    for t in 1..=cfg.epochs {
        let eta = 1.0 / (lambda * t as f64);
        grad.iter_mut().zip(&w).for_each(|(g, wi)| *g = lambda * wi);
        let mut grad_b = lambda * b;
        for ((x, y), c) in features.iter().zip(&ys).zip(&cs) {
            if y * (util::dot(&w, x) + b) < 1.0 {
                grad.iter_mut().zip(x).for_each(|(g, xi)| *g -= c * y * xi);
                grad_b -= c * y;
            }
        }
        w.iter_mut().zip(&grad).for_each(|(wi, g)| *wi -= eta * g);
        b -= eta * grad_b;
        let norm = (w.iter().map(|v| v * v).sum::<f64>() + b * b).sqrt();
        if norm > radius {
            let s = radius / norm;
            w.iter_mut().for_each(|v| *v *= s);
            b *= s;
        }
        let obj = objective(&w, b, features, &ys, &cs, lambda);
        raw_trace.push(obj);
        if obj < best.2 {
            best = (w.clone(), b, obj);
        }
        trace.push(best.2);
    }
    let (w, b, _) = best;
    if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
        return Err(Error::NonFinite("classifier weights".into()));
    }

    let scores: Vec<f64> = features.iter().map(|x| util::dot(&w, x) + b).collect();
    let mean = util::mean(&scores);
    let sd = util::std_dev(&scores);
    let constant = sd <= 1e-12 * (1.0 + mean.abs());
    Ok(Some(LinearModel {
        weights: w,
        bias: b,
        mean,
        std: if constant { 1.0 } else { sd },
        constant,
        objective_trace: trace,
        iterate_trace: raw_trace,
    }))
}

/// One classifier per category; untrainable categories are recorded in `skipped`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModelSet {
    pub dim: usize,
    pub labels: Vec<String>,
    pub config: LinearConfig,
    pub models: Vec<Option<LinearModel>>,
    pub skipped: Vec<usize>,
}

impl LinearModelSet {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Scores of every category for `x`; skipped categories get the floor value.
    pub fn score(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dim, x.len())?;
        Ok(self
            .models
            .iter()
            .map(|m| m.as_ref().map_or(self.config.floor, |m| m.score(x, self.config.znorm)))
            .collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut slim = self.clone();
        for m in slim.models.iter_mut().flatten() {
            m.objective_trace.clear();
            m.iterate_trace.clear();
        }
        util::write_string(path, &serde_json::to_string(&slim)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&util::read_to_string(path)?)?)
    }
}

/// Trains one-vs-all classifiers; `labels[k]` lists the categories present in sample `k`.
pub fn train_linear_ova(
    features: &[Vec<f64>],
    labels: &[Vec<usize>],
    category_names: &[String],
    cfg: &LinearConfig,
) -> Result<LinearModelSet> {
    ensure_dim(features.len(), labels.len())?;
    if features.is_empty() {
        return Err(Error::TooFewSamples { need: 2, got: 0 });
    }
    let n = category_names.len();
    for set in labels {
        if let Some(&bad) = set.iter().find(|&&c| c >= n) {
            return Err(Error::IndexOutOfRange { index: bad, len: n });
        }
    }
    let mut models = Vec::with_capacity(n);
    let mut skipped = Vec::new();
    for c in 0..n {
        let targets: Vec<bool> = labels.iter().map(|set| set.contains(&c)).collect();
        let model = train_binary(features, &targets, cfg)?;
        if model.is_none() {
            log::warn!("category `{}` has single-class training data; skipped", category_names[c]);
            skipped.push(c);
        }
        models.push(model);
    }
    Ok(LinearModelSet {
        dim: features[0].len(),
        labels: category_names.to_vec(),
        config: cfg.clone(),
        models,
        skipped,
    })
}
