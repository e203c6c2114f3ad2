use serde::{Deserialize, Serialize};

use crate::attributes::ScoreMatrix;
use crate::corpus::WeightMatrix;
use crate::error::{ensure_dim, Error, Result};
use crate::linear::{train_linear_ova, LinearConfig, LinearModelSet};
use crate::util;

/// Max-pooled attribute scores of one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceFeature {
    pub id: String,
    pub values: Vec<f64>,
}

/// Element-wise max over all intervals of a score matrix.
pub fn seq_feature(s: &ScoreMatrix) -> Vec<f64> {
    s.rows()
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// A training sequence with its composite index.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequence {
    pub feature: SequenceFeature,
    pub composite: usize,
}

/// One-vs-all composite classifiers over sequence features.
pub fn train_composite_svm(train: &[LabeledSequence], composite_names: &[String], cfg: &LinearConfig) -> Result<LinearModelSet> {
    let xs: Vec<Vec<f64>> = train.iter().map(|s| s.feature.values.clone()).collect();
    let ys: Vec<Vec<usize>> = train.iter().map(|s| vec![s.composite]).collect();
    train_linear_ova(&xs, &ys, composite_names, cfg)
}

/// Trains composite classifiers on `train` and scores `test` for every composite.
///
/// Composites without training sequences score the configured floor and are
/// listed in the returned model set's `skipped`.
pub fn classify_svm(
    train: &[LabeledSequence],
    composite_names: &[String],
    test: &[f64],
    cfg: &LinearConfig,
) -> Result<(Vec<f64>, LinearModelSet)> {
    let models = train_composite_svm(train, composite_names, cfg)?;
    Ok((models.score(test)?, models))
}

/// Result of a nearest-neighbour query.
#[derive(Debug, Clone, PartialEq)]
pub struct NnPrediction {
    pub composite: usize,
    /// Index of the winning training sequence.
    pub neighbor: usize,
    pub distance: f64,
    /// Distance to every training sequence (`None` where excluded).
    pub distances: Vec<Option<f64>>,
}

fn pick_nearest(train: &[LabeledSequence], distances: Vec<Option<f64>>) -> Option<NnPrediction> {
    let mut best: Option<(usize, f64)> = None;
    for (k, d) in distances.iter().enumerate() {
        if let Some(d) = *d {
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((k, d));
            }
        }
    }
    best.map(|(k, d)| NnPrediction {
        composite: train[k].composite,
        neighbor: k,
        distance: d,
        distances,
    })
}

/// L2 nearest neighbour in sequence-feature space; ties go to the earliest training sequence.
pub fn classify_nn(train: &[LabeledSequence], test: &[f64]) -> Result<NnPrediction> {
    if train.is_empty() {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    let mut distances = Vec::with_capacity(train.len());
    for s in train {
        ensure_dim(test.len(), s.feature.values.len())?;
        distances.push(Some(util::l2_distance(&s.feature.values, test)));
    }
    Ok(pick_nearest(train, distances).expect("non-empty training set"))
}

/// Weighted sum `Σ_i w_{z,i} g_i` for every composite row of `w`.
pub fn script_score(g: &[f64], w: &WeightMatrix) -> Result<Vec<f64>> {
    ensure_dim(w.cols(), g.len())?;
    Ok(w.values.iter().map(|row| util::dot(row, g)).collect())
}

/// Class-dependent weighted L2 distance `sqrt(Σ_i w_{z,i} (a_i − b_i)²)`.
pub fn weighted_l2(weights: &[f64], a: &[f64], b: &[f64]) -> f64 {
    weights
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Nearest neighbour under the weighted L2 of each training sequence's composite.
///
/// Row `z` of `w` belongs to composite `z`. Training sequences whose
/// composite row is all-zero are excluded; the second return value lists
/// the excluded composites.
pub fn nn_script_classify(g_test: &[f64], train: &[LabeledSequence], w: &WeightMatrix) -> Result<(NnPrediction, Vec<usize>)> {
    ensure_dim(w.cols(), g_test.len())?;
    let empty: Vec<usize> = (0..w.rows()).filter(|&z| w.values[z].iter().all(|v| *v == 0.0)).collect();
    let mut distances = Vec::with_capacity(train.len());
    for s in train {
        if s.composite >= w.rows() {
            return Err(Error::IndexOutOfRange {
                index: s.composite,
                len: w.rows(),
            });
        }
        ensure_dim(g_test.len(), s.feature.values.len())?;
        distances.push(if empty.contains(&s.composite) {
            None
        } else {
            Some(weighted_l2(&w.values[s.composite], g_test, &s.feature.values))
        });
    }
    let pred = pick_nearest(train, distances)
        .ok_or_else(|| Error::Degenerate("every training composite has an all-zero weight row".into()))?;
    if !empty.is_empty() {
        log::warn!("{} composites with empty weight rows excluded from weighted NN", empty.len());
    }
    Ok((pred, empty))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{binarize_weights, normalize_l1};
    use proptest::prelude::*;

    fn seq(values: Vec<f64>, composite: usize) -> LabeledSequence {
        LabeledSequence {
            feature: SequenceFeature { id: String::new(), values },
            composite,
        }
    }

    fn wm(rows: Vec<Vec<f64>>) -> WeightMatrix {
        let n = rows[0].len();
        let z = rows.len();
        WeightMatrix::new(rows, (0..z).map(|k| format!("z{k}")).collect(), (0..n).map(|k| format!("a{k}")).collect()).unwrap()
    }

    fn sm(rows: Vec<Vec<f64>>) -> ScoreMatrix {
        let t = rows[0].len();
        ScoreMatrix::new((0..rows.len()).map(|i| format!("a{i}")).collect(), (0..t).map(|k| k.to_string()).collect(), rows).unwrap()
    }

    #[test]
    fn seq_feature_examples() {
        assert_eq!(seq_feature(&sm(vec![vec![1.0, 3.0], vec![2.0, 0.0]])), [3.0, 2.0]);
        assert_eq!(seq_feature(&sm(vec![vec![-1.0], vec![4.0]])), [-1.0, 4.0]);
    }

    #[test]
    fn nn_exact_match_and_nearer() {
        let train = vec![seq(vec![0.0, 0.0], 0), seq(vec![1.0, 0.0], 1), seq(vec![0.0, 2.0], 2)];
        let p = classify_nn(&train, &[1.0, 0.0]).unwrap();
        assert_eq!((p.composite, p.distance), (1, 0.0));
        let p = classify_nn(&train[..1].iter().chain(&train[2..]).cloned().collect::<Vec<_>>(), &[0.0, 0.9]).unwrap();
        assert_eq!(p.composite, 0);
    }

    #[test]
    fn nn_ties_prefer_first() {
        let train = vec![seq(vec![1.0], 3), seq(vec![-1.0], 4)];
        assert_eq!(classify_nn(&train, &[0.0]).unwrap().composite, 3);
    }

    #[test]
    fn script_score_examples() {
        let w = wm(vec![vec![0.0, 1.0, 0.0], vec![0.5, 0.5, 0.0]]);
        assert_eq!(script_score(&[1.0, 3.0, 7.0], &w).unwrap(), [3.0, 2.0]);
        assert!(script_score(&[1.0, 3.0], &w).is_err());
    }

    #[test]
    fn weighted_nn_hand_value() {
        let w = wm(vec![vec![0.5, 0.5, 0.0]]);
        let train = vec![seq(vec![0.0, 1.0, 9.0], 0)];
        let (p, excluded) = nn_script_classify(&[1.0, 3.0, 2.0], &train, &w).unwrap();
        assert!((p.distance - 2.5f64.sqrt()).abs() < 1e-12);
        assert!((p.distance - 1.5811).abs() < 1e-4);
        assert!(excluded.is_empty());
    }

    #[test]
    fn weighted_nn_skips_empty_rows() {
        let w = normalize_l1(&wm(vec![vec![0.0, 0.0], vec![1.0, 1.0]]));
        let train = vec![seq(vec![0.0, 0.0], 0), seq(vec![5.0, 5.0], 1)];
        let (p, excluded) = nn_script_classify(&[0.0, 0.0], &train, &w).unwrap();
        assert_eq!((p.composite, excluded), (1, vec![0]));
        let all_empty = wm(vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert!(nn_script_classify(&[0.0, 0.0], &train, &all_empty).is_err());
    }

    #[test]
    fn svm_separates_clean_composites() {
        let train: Vec<LabeledSequence> = (0..20)
            .map(|k| {
                let z = k % 2;
                let jitter = (k as f64 * 0.37).sin() * 0.1;
                seq(if z == 0 { vec![1.0 + jitter, 0.0] } else { vec![0.0, 1.0 + jitter] }, z)
            })
            .collect();
        let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let (scores, models) = classify_svm(&train, &names, &[0.9, 0.05], &LinearConfig::default()).unwrap();
        assert!(scores[0] > scores[1]);
        assert_eq!(models.skipped, [2]);
        let (again, _) = classify_svm(&train, &names, &[0.9, 0.05], &LinearConfig::default()).unwrap();
        assert_eq!(scores, again);
    }

    proptest! {
        #[test]
        fn uniform_weights_match_plain_nn(
            train in prop::collection::vec((prop::collection::vec(-3.0f64..3.0, 4), 0usize..3), 1..12),
            test in prop::collection::vec(-3.0f64..3.0, 4),
        ) {
            let train: Vec<LabeledSequence> = train.into_iter().map(|(v, z)| seq(v, z)).collect();
            let w = binarize_weights(&wm(vec![vec![1.0; 4]; 3]));
            let (p, _) = nn_script_classify(&test, &train, &w).unwrap();
            let q = classify_nn(&train, &test).unwrap();
            prop_assert_eq!(p.neighbor, q.neighbor);
            prop_assert!((p.distance * 2.0 - q.distance).abs() < 1e-9);
        }

        #[test]
        fn masked_coordinates_do_not_matter(a in prop::collection::vec(-3.0f64..3.0, 3), b in prop::collection::vec(-3.0f64..3.0, 3), junk in -100.0f64..100.0) {
            let w = [0.5, 0.0, 0.5];
            let mut b2 = b.clone();
            b2[1] = junk;
            prop_assert_eq!(weighted_l2(&w, &a, &b), weighted_l2(&w, &a, &b2));
        }

        #[test]
        fn seq_feature_permutation_and_monotone(rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 6), 1..5), bump in 0.0f64..2.0, at in 0usize..30) {
            let s = sm(rows.clone());
            let g = seq_feature(&s);
            let reversed: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().rev().copied().collect()).collect();
            prop_assert_eq!(seq_feature(&sm(reversed)), g.clone());
            let mut raised = rows.clone();
            let (i, t) = ((at / 6) % rows.len(), at % 6);
            raised[i][t] += bump;
            let g2 = seq_feature(&sm(raised));
            prop_assert!(g.iter().zip(&g2).all(|(a, b)| b >= a));
        }
    }
}
