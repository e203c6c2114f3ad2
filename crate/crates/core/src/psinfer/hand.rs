use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::Result;

/// A detector hypothesis for a hand position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandHypothesis {
    pub x: f64,
    pub y: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandHypothesisSet {
    pub hypotheses: Vec<HandHypothesis>,
    /// Multiplier of the squared pixel distance in the kernel exponent.
    pub precision: f64,
    /// Score offset; hypotheses scoring below it are dropped.
    pub offset: f64,
}

/// Precision giving a kernel standard deviation of 10 pixels.
pub const DEFAULT_PRECISION: f64 = 1.0 / 200.0;
pub const DEFAULT_OFFSET: f64 = -1.0;

impl HandHypothesisSet {
    pub fn new(hypotheses: Vec<HandHypothesis>) -> Self {
        Self {
            hypotheses,
            precision: DEFAULT_PRECISION,
            offset: DEFAULT_OFFSET,
        }
    }

    /// Reads a CSV with header `x,y,score`.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let hyps = r.deserialize().collect::<std::result::Result<Vec<HandHypothesis>, _>>()?;
        Ok(Self::new(hyps))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for h in &self.hypotheses {
            w.serialize(h)?;
        }
        let bytes = w.into_inner().map_err(|e| crate::Error::Format(e.to_string()))?;
        crate::util::write_string(path, &String::from_utf8(bytes).expect("utf-8"))
    }
}

/// Dense hand likelihood `Σ_k (s_k − m) · exp(−precision · ‖d_k − l‖²)`.
///
/// The flag is set when no hypothesis survives the offset filter; the grid is then all zero.
pub fn hand_likelihood_map(set: &HandHypothesisSet, h: usize, w: usize) -> Result<(Grid, bool)> {
    let mut g = Grid::from_values(h, w, vec![0.0; h * w])?;
    let kept: Vec<&HandHypothesis> = set.hypotheses.iter().filter(|hy| hy.score >= set.offset).collect();
    for y in 0..h {
        for x in 0..w {
            let v: f64 = kept
                .iter()
                .map(|hy| {
                    let d2 = (hy.x - x as f64).powi(2) + (hy.y - y as f64).powi(2);
                    (hy.score - set.offset) * (-set.precision * d2).exp()
                })
                .sum();
            g.set(x, y, v);
        }
    }
    if kept.is_empty() {
        log::warn!("no hand hypothesis above the score offset; likelihood map is empty");
    }
    Ok((g, kept.is_empty()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hyp(x: f64, y: f64, score: f64) -> HandHypothesis {
        HandHypothesis { x, y, score }
    }

    #[test]
    fn single_hypothesis_peak() {
        let (g, flagged) = hand_likelihood_map(&HandHypothesisSet::new(vec![hyp(5.0, 5.0, 0.0)]), 10, 10).unwrap();
        assert_eq!(g.get(5, 5), 1.0);
        assert!(!flagged);
        assert!((g.get(5, 9) - (-16.0f64 / 200.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn low_scores_dropped() {
        let (g, flagged) = hand_likelihood_map(&HandHypothesisSet::new(vec![hyp(1.0, 1.0, -1.5)]), 3, 3).unwrap();
        assert!(flagged);
        assert_eq!(g.sum(), 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        let set = HandHypothesisSet::new(vec![hyp(1.5, 2.0, 0.25), hyp(0.0, 9.0, -0.5)]);
        set.save_csv(&p).unwrap();
        assert_eq!(HandHypothesisSet::load_csv(&p).unwrap(), set);
    }

    proptest! {
        #[test]
        fn linear_and_order_free(hs in prop::collection::vec((0.0f64..8.0, 0.0f64..6.0, -2.0f64..2.0), 0..6)) {
            let hyps: Vec<HandHypothesis> = hs.iter().map(|&(x, y, s)| hyp(x, y, s)).collect();
            let (all, _) = hand_likelihood_map(&HandHypothesisSet::new(hyps.clone()), 6, 8).unwrap();
            let mut sum = vec![0.0; 48];
            for h in &hyps {
                let (g, _) = hand_likelihood_map(&HandHypothesisSet::new(vec![*h]), 6, 8).unwrap();
                for (a, b) in sum.iter_mut().zip(&g.values) { *a += b; }
            }
            let rev: Vec<HandHypothesis> = hyps.iter().rev().copied().collect();
            let (r, _) = hand_likelihood_map(&HandHypothesisSet::new(rev), 6, 8).unwrap();
            for k in 0..48 {
                prop_assert!((all.values[k] - sum[k]).abs() < 1e-12);
                prop_assert!((all.values[k] - r.values[k]).abs() < 1e-12);
                prop_assert!(all.values[k] >= 0.0);
            }
        }
    }
}
