use std::path::Path;

use serde::{Deserialize, Serialize};

use super::windows::IntegralHistogram;
use crate::attributes::ScoreMatrix;
use crate::error::{ensure_dim, Error, Result};
use crate::linear::{train_binary, LinearConfig, LinearModel, LinearModelSet};
use crate::util;

/// A contiguous run of frames with its attribute score vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub scores: Vec<f64>,
    #[serde(default)]
    pub background: bool,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }
}

/// Consecutive `(start, end)` frame ranges of `size` frames; the remainder forms a shorter last interval.
pub fn uniform_intervals(frames: usize, size: usize) -> Vec<(usize, usize)> {
    if size == 0 {
        return Vec::new();
    }
    (0..frames).step_by(size).map(|s| (s, (s + size).min(frames) - 1)).collect()
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = util::dot(a, a).sqrt();
    let nb = util::dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        util::dot(a, b) / (na * nb)
    }
}

/// How a merged segment gets its score vector.
pub enum Rescore<'a> {
    /// Length-weighted mean of the two children.
    Mean,
    /// Classifier scores of the union window's histogram.
    Integral {
        integral: &'a IntegralHistogram,
        models: &'a LinearModelSet,
    },
}

impl Rescore<'_> {
    fn merge(&self, a: &Segment, b: &Segment) -> Result<Vec<f64>> {
        match self {
            Rescore::Mean => {
                let (la, lb) = (a.len() as f64, b.len() as f64);
                Ok(a.scores.iter().zip(&b.scores).map(|(x, y)| (la * x + lb * y) / (la + lb)).collect())
            }
            Rescore::Integral { integral, models } => models.score(&integral.window_histogram(a.start, b.end)?),
        }
    }
}

/// Greedy agglomerative merging of adjacent intervals by cosine similarity.
///
/// `ranges[t]` is the frame range of column `t` of `scores`. The most similar
/// adjacent pair (leftmost on ties) is merged while its similarity reaches
/// `threshold`.
pub fn segment_agglomerative(scores: &ScoreMatrix, ranges: &[(usize, usize)], threshold: f64, rescore: &Rescore) -> Result<Vec<Segment>> {
    ensure_dim(scores.t(), ranges.len())?;
    let mut segs: Vec<Segment> = ranges
        .iter()
        .enumerate()
        .map(|(t, &(start, end))| Segment {
            start,
            end,
            scores: scores.column(t),
            background: false,
        })
        .collect();
    for w in segs.windows(2) {
        if w[0].start > w[0].end || w[1].start != w[0].end + 1 {
            return Err(Error::Degenerate("segment intervals must be ordered and contiguous".into()));
        }
    }
    while segs.len() > 1 {
        let mut best: Option<(usize, f64)> = None;
        for k in 0..segs.len() - 1 {
            let c = cosine(&segs[k].scores, &segs[k + 1].scores);
            if best.map_or(true, |(_, bc)| c > bc) {
                best = Some((k, c));
            }
        }
        let (k, c) = best.expect("at least one adjacent pair");
        if c < threshold {
            break;
        }
        let merged = rescore.merge(&segs[k], &segs[k + 1])?;
        util::check_finite(&merged, "merged segment scores")?;
        let right = segs.remove(k + 1);
        segs[k].end = right.end;
        segs[k].scores = merged;
    }
    Ok(segs)
}

/// Linear classifier separating background spans from annotated ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundModel {
    pub model: LinearModel,
    pub znorm: bool,
    /// Segments scoring above this value are background.
    pub threshold: f64,
}

impl BackgroundModel {
    pub fn is_background(&self, x: &[f64]) -> bool {
        self.model.score(x, self.znorm) > self.threshold
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        util::write_string(path, &serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&util::read_to_string(path)?)?)
    }
}

/// Trains the background classifier; `None` when only one class is present.
pub fn train_background(features: &[Vec<f64>], is_background: &[bool], cfg: &LinearConfig) -> Result<Option<BackgroundModel>> {
    Ok(train_binary(features, is_background, cfg)?.map(|model| BackgroundModel {
        model,
        znorm: cfg.znorm,
        threshold: 0.0,
    }))
}

/// Flags background segments; without a model every segment passes through unchanged.
///
/// `features[k]` is the interval feature of `segments[k]`.
pub fn filter_background(mut segments: Vec<Segment>, features: &[Vec<f64>], model: Option<&BackgroundModel>) -> Result<Vec<Segment>> {
    let Some(model) = model else {
        return Ok(segments);
    };
    ensure_dim(segments.len(), features.len())?;
    for (s, x) in segments.iter_mut().zip(features) {
        ensure_dim(model.model.weights.len(), x.len())?;
        s.background = model.is_background(x);
    }
    Ok(segments)
}

/// Histogram features of each segment's frame range.
pub fn segment_features(integral: &IntegralHistogram, segments: &[Segment]) -> Result<Vec<Vec<f64>>> {
    segments.iter().map(|s| integral.window_histogram(s.start, s.end)).collect()
}

/// Element-wise max over non-background segments; all-background yields `floor` everywhere.
pub fn pool_segments(segments: &[Segment], n: usize, floor: f64) -> Result<Vec<f64>> {
    let mut out = vec![f64::NEG_INFINITY; n];
    let mut any = false;
    for s in segments.iter().filter(|s| !s.background) {
        ensure_dim(n, s.scores.len())?;
        any = true;
        for (o, v) in out.iter_mut().zip(&s.scores) {
            *o = o.max(*v);
        }
    }
    if !any {
        log::warn!("every segment was flagged as background; pooled feature set to the floor value");
        return Ok(vec![floor; n]);
    }
    Ok(out)
}

pub fn segments_jsonl(segments: &[Segment]) -> Result<String> {
    let mut out = String::new();
    for s in segments {
        out.push_str(&serde_json::to_string(s)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn save_segments(path: &Path, segments: &[Segment]) -> Result<()> {
    util::write_string(path, &segments_jsonl(segments)?)
}

pub fn load_segments(path: &Path) -> Result<Vec<Segment>> {
    util::read_to_string(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: k + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composites::seq_feature;
    use proptest::prelude::*;

    fn columns(cols: Vec<Vec<f64>>) -> ScoreMatrix {
        let n = cols[0].len();
        ScoreMatrix::from_columns((0..n).map(|i| format!("a{i}")).collect(), (0..cols.len()).map(|t| t.to_string()).collect(), &cols).unwrap()
    }

    #[test]
    fn uniform_intervals_remainder() {
        assert_eq!(uniform_intervals(150, 60), [(0, 59), (60, 119), (120, 149)]);
        assert_eq!(uniform_intervals(120, 60), [(0, 59), (60, 119)]);
        assert!(uniform_intervals(0, 60).is_empty());
    }

    #[test]
    fn hand_run_merge() {
        let s = columns(vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        let segs = segment_agglomerative(&s, &uniform_intervals(180, 60), 0.5, &Rescore::Mean).unwrap();
        assert_eq!(segs.iter().map(|s| (s.start, s.end)).collect::<Vec<_>>(), [(0, 119), (120, 179)]);
        assert_eq!(segs[0].scores, [1.0, 0.0]);
    }

    #[test]
    fn threshold_above_one_keeps_everything() {
        let s = columns(vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(segment_agglomerative(&s, &uniform_intervals(180, 60), 1.01, &Rescore::Mean).unwrap().len(), 3);
        let same = columns(vec![vec![0.3, 0.7]; 5]);
        let one = segment_agglomerative(&same, &uniform_intervals(290, 60), 0.9, &Rescore::Mean).unwrap();
        assert_eq!((one.len(), one[0].start, one[0].end), (1, 0, 289));
    }

    #[test]
    fn zero_vectors_never_similar() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
        let s = columns(vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(segment_agglomerative(&s, &uniform_intervals(120, 60), 0.1, &Rescore::Mean).unwrap().len(), 2);
    }

    #[test]
    fn integral_rescoring() {
        use crate::linear::LinearModel;
        let counts: Vec<Vec<f64>> = (0..120).map(|f| if f < 60 { vec![1.0, 0.0] } else { vec![0.0, 1.0] }).collect();
        let ih = IntegralHistogram::new(&counts, vec![2]).unwrap();
        let models = LinearModelSet {
            dim: 2,
            labels: vec!["a".into()],
            config: LinearConfig { znorm: false, ..LinearConfig::default() },
            models: vec![Some(LinearModel {
                weights: vec![1.0, 3.0],
                bias: 0.0,
                mean: 0.0,
                std: 1.0,
                constant: false,
                objective_trace: vec![],
                iterate_trace: vec![],
            })],
            skipped: vec![],
        };
        let s = columns(vec![vec![1.0], vec![3.0]]);
        let segs = segment_agglomerative(&s, &uniform_intervals(120, 60), 0.5, &Rescore::Integral { integral: &ih, models: &models }).unwrap();
        assert_eq!(segs.len(), 1);
        assert!((segs[0].scores[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn background_filtering() {
        let feats = vec![vec![1.0, 0.0], vec![0.9, 0.1], vec![0.0, 1.0], vec![0.1, 0.9]];
        let bg = [true, true, false, false];
        let model = train_background(&feats, &bg, &LinearConfig::default()).unwrap().unwrap();
        let segs: Vec<Segment> = (0..4)
            .map(|k| Segment {
                start: 10 * k,
                end: 10 * k + 9,
                scores: vec![k as f64],
                background: false,
            })
            .collect();
        let flagged = filter_background(segs.clone(), &feats, Some(&model)).unwrap();
        assert_eq!(flagged.iter().map(|s| s.background).collect::<Vec<_>>(), bg);
        assert_eq!(filter_background(segs.clone(), &[], None).unwrap(), segs);
        assert_eq!(pool_segments(&flagged, 1, -10.0).unwrap(), [3.0]);
        let all: Vec<Segment> = flagged.into_iter().map(|s| Segment { background: true, ..s }).collect();
        assert_eq!(pool_segments(&all, 1, -10.0).unwrap(), [-10.0]);
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.jsonl");
        let segs = vec![Segment {
            start: 0,
            end: 59,
            scores: vec![0.5, -1.0],
            background: true,
        }];
        save_segments(&p, &segs).unwrap();
        assert_eq!(load_segments(&p).unwrap(), segs);
    }

    proptest! {
        #[test]
        fn segments_partition_and_pool(cols in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..12), threshold in -0.5f64..1.2, tail in 1usize..60) {
            let t = cols.len();
            let frames = 60 * (t - 1) + tail;
            let ranges = uniform_intervals(frames, 60);
            let s = columns(cols);
            let segs = segment_agglomerative(&s, &ranges, threshold, &Rescore::Mean).unwrap();
            prop_assert_eq!(segs[0].start, 0);
            prop_assert_eq!(segs.last().unwrap().end, frames - 1);
            for w in segs.windows(2) {
                prop_assert_eq!(w[1].start, w[0].end + 1);
            }
            let unmerged = segment_agglomerative(&s, &ranges, 1.5, &Rescore::Mean).unwrap();
            prop_assert_eq!(pool_segments(&unmerged, 3, -10.0).unwrap(), seq_feature(&s));
        }
    }
}
