use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Result};
use crate::posefeat::{BodyPart, Point};

/// A limb segment between two joints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stick {
    pub name: String,
    pub a: usize,
    pub b: usize,
}

impl Stick {
    fn new(name: &str, a: BodyPart, b: BodyPart) -> Self {
        Self {
            name: name.to_string(),
            a: a.index(),
            b: b.index(),
        }
    }
}

/// Head, upper arms, lower arms and hands.
pub fn default_sticks() -> Vec<Stick> {
    use BodyPart::*;
    vec![
        Stick::new("head", Head, Torso),
        Stick::new("r_upper_arm", RShoulder, RElbow),
        Stick::new("l_upper_arm", LShoulder, LElbow),
        Stick::new("r_lower_arm", RElbow, RWrist),
        Stick::new("l_lower_arm", LElbow, LWrist),
        Stick::new("r_hand", RWrist, RHand),
        Stick::new("l_hand", LWrist, LHand),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StickScore {
    pub name: String,
    /// Fraction of frames with the stick correct; `None` when never evaluated.
    pub pcp: Option<f64>,
    pub evaluated: usize,
    /// Frames skipped because the ground-truth stick has zero length.
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcpReport {
    pub sticks: Vec<StickScore>,
    /// Mean of the per-stick values that were evaluated.
    pub mean: Option<f64>,
}

fn dist(a: Point, b: Point) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Percentage of correct parts: both predicted endpoints within half the
/// ground-truth stick length of their ground-truth positions.
///
/// `pred[f][j]` and `gt[f][j]` are joint positions for frame `f`.
pub fn pcp_eval(pred: &[Vec<Point>], gt: &[Vec<Point>], sticks: &[Stick]) -> Result<PcpReport> {
    ensure_dim(gt.len(), pred.len())?;
    let mut out = Vec::with_capacity(sticks.len());
    for s in sticks {
        let (mut correct, mut evaluated, mut degenerate) = (0usize, 0usize, 0usize);
        for (p, g) in pred.iter().zip(gt) {
            ensure_dim(g.len(), p.len())?;
            if s.a >= g.len() || s.b >= g.len() {
                return Err(crate::Error::IndexOutOfRange {
                    index: s.a.max(s.b),
                    len: g.len(),
                });
            }
            let len = dist(g[s.a], g[s.b]);
            if len == 0.0 {
                degenerate += 1;
                continue;
            }
            evaluated += 1;
            if dist(p[s.a], g[s.a]) <= 0.5 * len && dist(p[s.b], g[s.b]) <= 0.5 * len {
                correct += 1;
            }
        }
        if degenerate > 0 {
            log::warn!("stick `{}`: {degenerate} frames with zero-length ground truth excluded", s.name);
        }
        out.push(StickScore {
            name: s.name.clone(),
            pcp: (evaluated > 0).then(|| correct as f64 / evaluated as f64),
            evaluated,
            degenerate,
        });
    }
    let vals: Vec<f64> = out.iter().filter_map(|s| s.pcp).collect();
    let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
    Ok(PcpReport { sticks: out, mean })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skeleton() -> Vec<Point> {
        vec![
            (50.0, 10.0),
            (50.0, 60.0),
            (30.0, 30.0),
            (70.0, 30.0),
            (25.0, 60.0),
            (75.0, 60.0),
            (25.0, 90.0),
            (75.0, 90.0),
            (25.0, 100.0),
            (75.0, 100.0),
        ]
    }

    #[test]
    fn identical_is_perfect() {
        let r = pcp_eval(&[skeleton()], &[skeleton()], &default_sticks()).unwrap();
        assert_eq!(r.mean, Some(1.0));
        assert!(r.sticks.iter().all(|s| s.pcp == Some(1.0)));
    }

    #[test]
    fn displaced_endpoint() {
        // right hand stick: wrist (25,90) to hand (25,100), length 10
        let mut pred = skeleton();
        pred[BodyPart::RHand.index()].0 += 0.6 * 10.0;
        let r = pcp_eval(&[pred.clone()], &[skeleton()], &default_sticks()).unwrap();
        let hand = r.sticks.iter().find(|s| s.name == "r_hand").unwrap();
        assert_eq!(hand.pcp, Some(0.0));
        pred[BodyPart::RHand.index()].0 = 25.0 + 0.4 * 10.0;
        let r = pcp_eval(&[pred], &[skeleton()], &default_sticks()).unwrap();
        assert_eq!(r.mean, Some(1.0));
    }

    #[test]
    fn zero_length_excluded() {
        let mut gt = skeleton();
        gt[BodyPart::LHand.index()] = gt[BodyPart::LWrist.index()];
        let r = pcp_eval(&[skeleton()], &[gt], &default_sticks()).unwrap();
        let hand = r.sticks.iter().find(|s| s.name == "l_hand").unwrap();
        assert_eq!((hand.pcp, hand.degenerate), (None, 1));
        assert_eq!(r.mean, Some(1.0));
    }
}
