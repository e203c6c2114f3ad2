use serde::{Deserialize, Serialize};

use crate::temporal::Detection;

/// Non-interpolated average precision: mean of precision at each positive.
///
/// Ranking is by descending score with ties in original order. `None` when
/// there is no positive.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let positives = labels.iter().filter(|l| **l).count();
    if positives == 0 {
        return None;
    }
    ranked_ap(&rank(scores).into_iter().map(|k| labels[k]).collect::<Vec<_>>(), positives)
}

fn rank(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// AP of an already ranked hit list against `total` relevant items.
fn ranked_ap(hits: &[bool], total: usize) -> Option<f64> {
    if total == 0 {
        return None;
    }
    let mut tp = 0usize;
    let mut sum = 0.0;
    for (k, &hit) in hits.iter().enumerate() {
        if hit {
            tp += 1;
            sum += tp as f64 / (k + 1) as f64;
        }
    }
    Some(sum / total as f64)
}

/// Unweighted mean over the defined values.
pub fn mean_defined(values: &[Option<f64>]) -> Option<f64> {
    let v: Vec<f64> = values.iter().flatten().copied().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// A ground-truth attribute occurrence in one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub video: String,
    pub attribute: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MatchCriterion {
    /// The detection's midpoint lies inside the ground-truth interval.
    #[default]
    Midpoint,
    /// Intersection over union at least the threshold.
    Iou(f64),
}

fn iou(d: &Detection, g: &GroundTruth) -> f64 {
    let inter = {
        let lo = d.start.max(g.start);
        let hi = d.end.min(g.end);
        if lo > hi { 0.0 } else { (hi - lo + 1) as f64 }
    };
    inter / (((d.end - d.start + 1) + (g.end - g.start + 1)) as f64 - inter)
}

impl MatchCriterion {
    pub fn matches(self, d: &Detection, g: &GroundTruth) -> bool {
        if d.video != g.video || d.attribute != g.attribute {
            return false;
        }
        match self {
            MatchCriterion::Midpoint => {
                let mid2 = d.start + d.end;
                2 * g.start <= mid2 && mid2 <= 2 * g.end
            }
            MatchCriterion::Iou(t) => iou(d, g) >= t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEval {
    pub attributes: Vec<String>,
    pub ap: Vec<Option<f64>>,
    pub mean_ap: Option<f64>,
}

/// Marks each detection (in score order) as a hit when it claims a still unmatched ground truth.
///
/// Among several candidates the one with the largest overlap is claimed, ties to the earliest.
pub fn match_detections(dets: &[Detection], gt: &[GroundTruth], criterion: MatchCriterion) -> Vec<bool> {
    let scores: Vec<f64> = dets.iter().map(|d| d.score).collect();
    let mut taken = vec![false; gt.len()];
    let mut hits = Vec::with_capacity(dets.len());
    for k in rank(&scores) {
        let d = &dets[k];
        let mut best: Option<(usize, f64)> = None;
        for (j, g) in gt.iter().enumerate() {
            if !taken[j] && criterion.matches(d, g) {
                let o = iou(d, g);
                if best.map_or(true, |(_, bo)| o > bo) {
                    best = Some((j, o));
                }
            }
        }
        if let Some((j, _)) = best {
            taken[j] = true;
        }
        hits.push(best.is_some());
    }
    hits
}

/// Per-attribute detection AP with `P` = number of ground-truth intervals of the attribute.
pub fn eval_detection(dets: &[Detection], gt: &[GroundTruth], attributes: &[String], criterion: MatchCriterion) -> DetectionEval {
    let ap: Vec<Option<f64>> = attributes
        .iter()
        .map(|a| {
            let d: Vec<Detection> = dets.iter().filter(|d| &d.attribute == a).cloned().collect();
            let g: Vec<GroundTruth> = gt.iter().filter(|g| &g.attribute == a).cloned().collect();
            ranked_ap(&match_detections(&d, &g, criterion), g.len())
        })
        .collect();
    DetectionEval {
        attributes: attributes.to_vec(),
        mean_ap: mean_defined(&ap),
        ap,
    }
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    predicted.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64
}

/// `table[truth][predicted]` counts.
pub fn confusion(predicted: &[usize], truth: &[usize], classes: usize) -> Vec<Vec<usize>> {
    let mut m = vec![vec![0; classes]; classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        if p < classes && t < classes {
            m[t][p] += 1;
        }
    }
    m
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut k = 0;
    while k < order.len() {
        let mut j = k;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[k]] {
            j += 1;
        }
        let r = (k + j) as f64 / 2.0 + 1.0;
        for &o in &order[k..=j] {
            ranks[o] = r;
        }
        k = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties; `None` for constant input.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let (ma, mb) = (crate::util::mean(&ra), crate::util::mean(&rb));
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    (va > 0.0 && vb > 0.0).then(|| cov / (va * vb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det(video: &str, start: usize, end: usize, score: f64) -> Detection {
        Detection {
            video: video.into(),
            attribute: "cut".into(),
            start,
            end,
            score,
        }
    }

    fn gt(video: &str, start: usize, end: usize) -> GroundTruth {
        GroundTruth {
            video: video.into(),
            attribute: "cut".into(),
            start,
            end,
        }
    }

    #[test]
    fn ap_examples() {
        let ap = average_precision(&[0.9, 0.8, 0.7], &[true, false, true]).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert!((ap - 0.8333).abs() < 1e-4);
        assert_eq!(average_precision(&[0.1, 0.9, 0.5], &[false, true, true]), Some(1.0));
        assert_eq!(average_precision(&[0.3, 0.2], &[true, true]), Some(1.0));
        assert_eq!(average_precision(&[0.3, 0.2], &[false, false]), None);
        // tie: original order decides
        assert_eq!(average_precision(&[0.5, 0.5], &[false, true]), Some(0.5));
    }

    #[test]
    fn detection_examples() {
        let names = vec!["cut".to_string()];
        let e = eval_detection(&[det("v", 10, 20, 1.0)], &[gt("v", 10, 20)], &names, MatchCriterion::Midpoint);
        assert_eq!(e.mean_ap, Some(1.0));
        let e = eval_detection(&[det("v", 10, 20, 1.0), det("v", 12, 18, 0.5)], &[gt("v", 10, 20)], &names, MatchCriterion::Midpoint);
        assert_eq!(match_detections(&[det("v", 10, 20, 1.0), det("v", 12, 18, 0.5)], &[gt("v", 10, 20)], MatchCriterion::Midpoint), [true, false]);
        assert_eq!(e.mean_ap, Some(1.0));
        let e = eval_detection(&[det("w", 10, 20, 1.0)], &[gt("v", 10, 20)], &names, MatchCriterion::Iou(0.5));
        assert_eq!(e.mean_ap, Some(0.0));
        assert!(MatchCriterion::Iou(0.5).matches(&det("v", 0, 9, 0.0), &gt("v", 0, 14)));
        assert!(!MatchCriterion::Iou(0.5).matches(&det("v", 0, 9, 0.0), &gt("v", 5, 24)));
    }

    #[test]
    fn spearman_and_confusion() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 1.0], &[0.0, 1.0]), None);
        assert_eq!(confusion(&[0, 1, 1], &[0, 0, 1], 2), [[1, 1], [0, 1]]);
        assert!((accuracy(&[0, 1, 1], &[0, 0, 1]) - 2.0 / 3.0).abs() < 1e-12);
    }

    fn reference_ap(scores: &[f64], labels: &[bool]) -> Option<f64> {
        // precision at the rank of each positive, counting items ranked strictly before it
        let p = labels.iter().filter(|l| **l).count();
        if p == 0 {
            return None;
        }
        let before = |k: usize| (0..scores.len()).filter(move |&j| scores[j] > scores[k] || (scores[j] == scores[k] && j < k));
        let total: f64 = (0..scores.len())
            .filter(|&k| labels[k])
            .map(|k| {
                let above = before(k).count();
                let pos_above = before(k).filter(|&j| labels[j]).count();
                (pos_above + 1) as f64 / (above + 1) as f64
            })
            .sum();
        Some(total / p as f64)
    }

    fn reference_match(dets: &[Detection], g: &[GroundTruth], c: MatchCriterion) -> Vec<bool> {
        let mut order: Vec<usize> = (0..dets.len()).collect();
        order.sort_by(|&a, &b| dets[b].score.partial_cmp(&dets[a].score).unwrap().then(a.cmp(&b)));
        let mut free: Vec<usize> = (0..g.len()).collect();
        let mut hits = Vec::new();
        for k in order {
            let cands: Vec<usize> = free.iter().copied().filter(|&j| c.matches(&dets[k], &g[j])).collect();
            let pick = cands.iter().copied().fold(None, |best: Option<usize>, j| match best {
                Some(b) if iou(&dets[k], &g[b]) >= iou(&dets[k], &g[j]) => Some(b),
                _ => Some(j),
            });
            if let Some(j) = pick {
                free.retain(|&f| f != j);
            }
            hits.push(pick.is_some());
        }
        hits
    }

    proptest! {
        #[test]
        fn ap_matches_reference(data in prop::collection::vec((0u8..10, any::<bool>()), 1..30)) {
            let scores: Vec<f64> = data.iter().map(|d| f64::from(d.0)).collect();
            let labels: Vec<bool> = data.iter().map(|d| d.1).collect();
            let ap = average_precision(&scores, &labels);
            let r = reference_ap(&scores, &labels);
            prop_assert_eq!(ap.is_some(), r.is_some());
            if let (Some(a), Some(b)) = (ap, r) {
                prop_assert!((a - b).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&a));
            }
        }

        #[test]
        fn matching_matches_reference(
            ds in prop::collection::vec((0usize..50, 1usize..20, 0u8..5), 0..8),
            gs in prop::collection::vec((0usize..50, 1usize..20), 0..5),
            use_iou in any::<bool>(),
        ) {
            let dets: Vec<Detection> = ds.iter().map(|&(s, l, sc)| det("v", s, s + l - 1, f64::from(sc))).collect();
            let g: Vec<GroundTruth> = gs.iter().map(|&(s, l)| gt("v", s, s + l - 1)).collect();
            let c = if use_iou { MatchCriterion::Iou(0.3) } else { MatchCriterion::Midpoint };
            let ours = match_detections(&dets, &g, c);
            prop_assert!(ours.iter().filter(|h| **h).count() <= g.len());
            prop_assert_eq!(ours, reference_match(&dets, &g, c));
        }
    }
}
