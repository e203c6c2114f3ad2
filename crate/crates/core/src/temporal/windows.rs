use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::linear::LinearModelSet;
use crate::posefeat::normalize_blocks;
use crate::util;

/// One sliding-window level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowLevel {
    pub size: usize,
    pub step: usize,
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Window sizes `round(min_size · factor^k)` with steps `round(min_step · factor^k)`,
/// while the size stays within `max_size`.
pub fn window_schedule(min_size: usize, min_step: usize, factor: f64, max_size: usize) -> Result<Vec<WindowLevel>> {
    if min_size == 0 || min_step == 0 {
        return Err(Error::config("window", "minimum size and step must be positive"));
    }
    if !(factor > 1.0) {
        return Err(Error::config("window.factor", "growth factor must exceed 1"));
    }
    let mut out = Vec::new();
    for k in 0.. {
        let g = factor.powi(k);
        let size = round_half_up(min_size as f64 * g);
        if size > max_size {
            break;
        }
        let step = round_half_up(min_step as f64 * g).max(1);
        out.push(WindowLevel { size, step });
    }
    Ok(out)
}

pub fn default_schedule() -> Vec<WindowLevel> {
    window_schedule(30, 6, std::f64::consts::SQRT_2, 1800).expect("valid defaults")
}

/// Prefix sums of per-frame codebook counts.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralHistogram {
    /// Row `f` holds the counts of frames `0..f`; `frames + 1` rows.
    prefix: Vec<Vec<f64>>,
    pub block_sizes: Vec<usize>,
}

impl IntegralHistogram {
    /// `counts[f]` is the raw assignment histogram of frame `f`.
    pub fn new(counts: &[Vec<f64>], block_sizes: Vec<usize>) -> Result<Self> {
        let dim: usize = block_sizes.iter().sum();
        let mut prefix = Vec::with_capacity(counts.len() + 1);
        let mut acc = vec![0.0; dim];
        prefix.push(acc.clone());
        for c in counts {
            ensure_dim(dim, c.len())?;
            for (a, v) in acc.iter_mut().zip(c) {
                if !(*v >= 0.0 && v.is_finite()) {
                    return Err(Error::NonFinite("frame counts must be finite and non-negative".into()));
                }
                *a += v;
            }
            prefix.push(acc.clone());
        }
        Ok(Self { prefix, block_sizes })
    }

    pub fn frames(&self) -> usize {
        self.prefix.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.prefix[0].len()
    }

    /// Summed counts over frames `start..=end`.
    pub fn raw_window(&self, start: usize, end: usize) -> Result<Vec<f64>> {
        if start > end || end >= self.frames() {
            return Err(Error::WindowOutOfRange {
                start: start as i64,
                end: end as i64,
                first: 0,
                last: self.frames() as i64 - 1,
            });
        }
        Ok(self.prefix[end + 1].iter().zip(&self.prefix[start]).map(|(a, b)| a - b).collect())
    }

    /// Block-normalized histogram over frames `start..=end`.
    pub fn window_histogram(&self, start: usize, end: usize) -> Result<Vec<f64>> {
        Ok(normalize_blocks(&self.raw_window(start, end)?, &self.block_sizes))
    }
}

/// A scored temporal window; frames are 0-based and inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub video: String,
    pub attribute: String,
    pub start: usize,
    pub end: usize,
    pub score: f64,
}

impl Detection {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn intersection(&self, other: &Detection) -> usize {
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        if lo > hi { 0 } else { hi - lo + 1 }
    }

    pub fn iou(&self, other: &Detection) -> f64 {
        let i = self.intersection(other) as f64;
        i / ((self.len() + other.len()) as f64 - i)
    }
}

/// Scores every window of every level with every trained attribute classifier.
///
/// Attributes without a trained classifier produce no candidates.
pub fn score_windows(integral: &IntegralHistogram, models: &LinearModelSet, schedule: &[WindowLevel], video: &str) -> Result<Vec<Detection>> {
    ensure_dim(models.dim, integral.dim())?;
    let frames = integral.frames();
    let mut out = Vec::new();
    for level in schedule {
        if level.size > frames {
            continue;
        }
        for start in (0..=frames - level.size).step_by(level.step) {
            let end = start + level.size - 1;
            let h = integral.window_histogram(start, end)?;
            let scores = models.score(&h)?;
            for (i, s) in scores.into_iter().enumerate() {
                if models.models[i].is_some() {
                    out.push(Detection {
                        video: video.to_string(),
                        attribute: models.labels[i].clone(),
                        start,
                        end,
                        score: s,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Suppression rule for [`nms`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Overlap {
    /// Any shared frame suppresses.
    #[default]
    Any,
    /// Suppress when IoU exceeds the threshold.
    Iou(f64),
}

impl Overlap {
    fn suppresses(self, a: &Detection, b: &Detection) -> bool {
        match self {
            Overlap::Any => a.intersection(b) > 0,
            Overlap::Iou(t) => a.iou(b) > t,
        }
    }
}

/// Greedy non-maximum suppression, applied separately per (video, attribute).
///
/// Order: score descending, then earlier start, then shorter window.
pub fn nms(candidates: &[Detection], overlap: Overlap) -> Vec<Detection> {
    let mut order: Vec<&Detection> = candidates.iter().collect();
    order.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.start.cmp(&b.start))
            .then(a.len().cmp(&b.len()))
    });
    let mut kept: Vec<Detection> = Vec::new();
    for d in order {
        let clash = kept
            .iter()
            .any(|k| k.video == d.video && k.attribute == d.attribute && overlap.suppresses(k, d));
        if !clash {
            kept.push(d.clone());
        }
    }
    kept
}

pub fn detections_csv(dets: &[Detection]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for d in dets {
        w.serialize(d)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn save_detections(path: &Path, dets: &[Detection]) -> Result<()> {
    util::write_string(path, &detections_csv(dets)?)
}

pub fn load_detections(path: &Path) -> Result<Vec<Detection>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}
