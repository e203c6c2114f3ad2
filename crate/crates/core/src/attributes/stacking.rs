use serde::{Deserialize, Serialize};

use super::scores::ScoreMatrix;
use crate::error::{ensure_dim, Error, Result};
use crate::linear::{train_binary, LinearConfig, LinearModel};

/// Default empty-max value for the context of a single-interval sequence.
pub const DEFAULT_FLOOR: f64 = -10.0;

/// Element-wise max over all columns of `s` except `t`.
///
/// With a single interval there is nothing to pool and the result is `floor` everywhere.
pub fn context_feature(s: &ScoreMatrix, t: usize, floor: f64) -> Result<Vec<f64>> {
    if t >= s.t() {
        return Err(Error::IndexOutOfRange { index: t, len: s.t() });
    }
    Ok(s.rows()
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|&(u, _)| u != t)
                .map(|(_, &v)| v)
                .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
                .unwrap_or(floor)
        })
        .collect())
}

/// The score column `s_t` with attribute `i` (0-based) removed.
pub fn cooccurrence_feature(column: &[f64], i: usize) -> Result<Vec<f64>> {
    if i >= column.len() {
        return Err(Error::IndexOutOfRange { index: i, len: column.len() });
    }
    let mut out = column.to_vec();
    out.remove(i);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StackMode {
    Context,
    Cooccurrence,
    BaseContext,
    BaseCooccurrence,
    All,
}

impl StackMode {
    fn uses_base(self) -> bool {
        matches!(self, StackMode::BaseContext | StackMode::BaseCooccurrence | StackMode::All)
    }

    fn uses_context(self) -> bool {
        matches!(self, StackMode::Context | StackMode::BaseContext | StackMode::All)
    }

    fn uses_cooccurrence(self) -> bool {
        matches!(self, StackMode::Cooccurrence | StackMode::BaseCooccurrence | StackMode::All)
    }

    /// Second-level feature dimension for `n` attributes and base features of dimension `base_dim`.
    pub fn feature_dim(self, n: usize, base_dim: usize) -> usize {
        let mut d = 0;
        if self.uses_base() {
            d += base_dim;
        }
        if self.uses_context() {
            d += n;
        }
        if self.uses_cooccurrence() {
            d += n - 1;
        }
        d
    }
}

impl std::str::FromStr for StackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "context" => Ok(StackMode::Context),
            "cooccurrence" => Ok(StackMode::Cooccurrence),
            "base+context" | "base-context" => Ok(StackMode::BaseContext),
            "base+cooccurrence" | "base-cooccurrence" => Ok(StackMode::BaseCooccurrence),
            "all" => Ok(StackMode::All),
            _ => Err(Error::config("stack_mode", format!("unknown mode `{s}`"))),
        }
    }
}

/// One sequence (video) as seen by the stacking stage.
#[derive(Debug, Clone, Copy)]
pub struct StackSequence<'a> {
    pub scores: &'a ScoreMatrix,
    /// Base interval features `x_t`, required by the `base+…` and `all` modes.
    pub features: Option<&'a [Vec<f64>]>,
    /// Ground-truth attribute indices per interval (training only).
    pub labels: Option<&'a [Vec<usize>]>,
}

fn stacked_feature(mode: StackMode, seq: &StackSequence, context: &[f64], t: usize, i: usize) -> Result<Vec<f64>> {
    let mut f = Vec::new();
    if mode.uses_base() {
        let feats = seq
            .features
            .ok_or_else(|| Error::config("stack_mode", "base modes need interval features"))?;
        f.extend_from_slice(&feats[t]);
    }
    if mode.uses_context() {
        f.extend_from_slice(context);
    }
    if mode.uses_cooccurrence() {
        f.extend(cooccurrence_feature(&seq.scores.column(t), i)?);
    }
    Ok(f)
}

/// Builds the second-level feature of every (interval, attribute) pair of a sequence.
fn sequence_features(mode: StackMode, seq: &StackSequence, floor: f64) -> Result<Vec<Vec<Vec<f64>>>> {
    let s = seq.scores;
    if let Some(f) = seq.features {
        ensure_dim(s.t(), f.len())?;
    }
    (0..s.t())
        .map(|t| {
            let context = if mode.uses_context() {
                context_feature(s, t, floor)?
            } else {
                Vec::new()
            };
            (0..s.n()).map(|i| stacked_feature(mode, seq, &context, t, i)).collect()
        })
        .collect()
}

/// Second-level attribute classifiers over context and/or co-occurrence features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedModels {
    pub mode: StackMode,
    pub floor: f64,
    pub config: LinearConfig,
    pub labels: Vec<String>,
    pub models: Vec<Option<LinearModel>>,
}

impl StackedModels {
    /// Refined score matrix `s^{mode}` for one sequence.
    pub fn score(&self, seq: &StackSequence) -> Result<ScoreMatrix> {
        ensure_dim(self.labels.len(), seq.scores.n())?;
        let feats = sequence_features(self.mode, seq, self.floor)?;
        let columns: Vec<Vec<f64>> = feats
            .iter()
            .map(|per_attr| {
                per_attr
                    .iter()
                    .zip(&self.models)
                    .map(|(x, m)| m.as_ref().map_or(self.config.floor, |m| m.score(x, self.config.znorm)))
                    .collect()
            })
            .collect();
        let mut out = ScoreMatrix::from_columns(self.labels.clone(), seq.scores.interval_ids.clone(), &columns)?;
        out.flagged_rows = (0..self.models.len()).filter(|&i| self.models[i].is_none()).collect();
        Ok(out)
    }
}

/// Trains one second-level classifier per attribute on ground-truth intervals.
pub fn train_stacked(train: &[StackSequence], mode: StackMode, cfg: &LinearConfig, floor: f64) -> Result<StackedModels> {
    let first = train.first().ok_or(Error::TooFewSamples { need: 1, got: 0 })?;
    let n = first.scores.n();
    if n < 2 && mode.uses_cooccurrence() {
        return Err(Error::config("stack_mode", "co-occurrence needs at least two attributes"));
    }
    let mut per_attr_x: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n];
    let mut per_attr_y: Vec<Vec<bool>> = vec![Vec::new(); n];
    for seq in train {
        ensure_dim(n, seq.scores.n())?;
        let labels = seq
            .labels
            .ok_or_else(|| Error::config("labels", "stacked training needs interval labels"))?;
        ensure_dim(seq.scores.t(), labels.len())?;
        for (t, per_attr) in sequence_features(mode, seq, floor)?.into_iter().enumerate() {
            for (i, x) in per_attr.into_iter().enumerate() {
                per_attr_x[i].push(x);
                per_attr_y[i].push(labels[t].contains(&i));
            }
        }
    }
    let mut models = Vec::with_capacity(n);
    for i in 0..n {
        let m = train_binary(&per_attr_x[i], &per_attr_y[i], cfg)?;
        if m.is_none() {
            log::warn!("stacked attribute `{}` has single-class training data; skipped", first.scores.labels[i]);
        }
        models.push(m);
    }
    Ok(StackedModels {
        mode,
        floor,
        config: cfg.clone(),
        labels: first.scores.labels.clone(),
        models,
    })
}

/// Trains on `train` and returns refined scores for every sequence of `eval`.
pub fn train_and_score_stacked(
    train: &[StackSequence],
    eval: &[StackSequence],
    mode: StackMode,
    cfg: &LinearConfig,
    floor: f64,
) -> Result<Vec<ScoreMatrix>> {
    let models = train_stacked(train, mode, cfg, floor)?;
    eval.iter().map(|seq| models.score(seq)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sm(rows: Vec<Vec<f64>>) -> ScoreMatrix {
        let t = rows[0].len();
        ScoreMatrix::new(
            (0..rows.len()).map(|i| format!("a{i}")).collect(),
            (0..t).map(|k| k.to_string()).collect(),
            rows,
        )
        .unwrap()
    }

    #[test]
    fn context_examples() {
        // columns s_1 = [1, 2], s_2 = [3, 0]
        let s = sm(vec![vec![1.0, 3.0], vec![2.0, 0.0]]);
        assert_eq!(context_feature(&s, 0, DEFAULT_FLOOR).unwrap(), [3.0, 0.0]);
        let s = sm(vec![vec![1.0, 5.0, 2.0]]);
        assert_eq!(context_feature(&s, 1, DEFAULT_FLOOR).unwrap(), [2.0]);
        let s = sm(vec![vec![4.0], vec![1.0]]);
        assert_eq!(context_feature(&s, 0, DEFAULT_FLOOR).unwrap(), [-10.0, -10.0]);
        assert!(context_feature(&s, 1, DEFAULT_FLOOR).is_err());
    }

    #[test]
    fn cooccurrence_examples() {
        assert_eq!(cooccurrence_feature(&[5.0, 1.0, 2.0], 1).unwrap(), [5.0, 2.0]);
        assert_eq!(cooccurrence_feature(&[5.0, 1.0], 0).unwrap(), [1.0]);
        assert_eq!(cooccurrence_feature(&[5.0, 1.0, 2.0], 2).unwrap(), [5.0, 1.0]);
        assert!(cooccurrence_feature(&[5.0], 1).is_err());
    }

    #[test]
    fn mode_all_dimension() {
        assert_eq!(StackMode::All.feature_dim(5, 12), 12 + 5 + 4);
        let s = sm(vec![vec![1.0, 2.0], vec![0.0, 1.0], vec![3.0, 3.0]]);
        let feats = vec![vec![0.1; 7], vec![0.2; 7]];
        let seq = StackSequence { scores: &s, features: Some(&feats), labels: None };
        let f = sequence_features(StackMode::All, &seq, DEFAULT_FLOOR).unwrap();
        assert_eq!(f[0][0].len(), StackMode::All.feature_dim(3, 7));
    }

    #[test]
    fn base_mode_without_features_is_config_error() {
        let s = sm(vec![vec![1.0], vec![0.0]]);
        let seq = StackSequence { scores: &s, features: None, labels: None };
        assert!(matches!(sequence_features(StackMode::BaseContext, &seq, 0.0), Err(Error::Config { .. })));
    }

    #[test]
    fn single_interval_context_is_constant() {
        let mats: Vec<ScoreMatrix> = (0..12).map(|k| sm(vec![vec![k as f64 * 0.1], vec![1.0 - k as f64 * 0.1]])).collect();
        let labels: Vec<Vec<Vec<usize>>> = (0..12).map(|k| vec![if k % 2 == 0 { vec![0] } else { vec![1] }]).collect();
        let train: Vec<StackSequence> = mats
            .iter()
            .zip(&labels)
            .map(|(s, l)| StackSequence { scores: s, features: None, labels: Some(l) })
            .collect();
        // every context is the floor vector, so each attribute sees one constant feature
        let out = train_and_score_stacked(&train, &train, StackMode::Context, &LinearConfig::default(), DEFAULT_FLOOR).unwrap();
        for i in 0..2 {
            let first = out[0].get(i, 0);
            assert!(out.iter().all(|m| (m.get(i, 0) - first).abs() < 1e-12));
        }
    }

    fn matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..6, 1usize..8).prop_flat_map(|(n, t)| prop::collection::vec(prop::collection::vec(-5.0f64..5.0, t), n))
    }

    proptest! {
        #[test]
        fn context_dominates_and_is_attained((rows, t_pick) in matrix().prop_flat_map(|r| { let t = r[0].len(); (Just(r), 0..t) })) {
            let s = sm(rows);
            let c = context_feature(&s, t_pick, DEFAULT_FLOOR).unwrap();
            if s.t() > 1 {
                for i in 0..s.n() {
                    let others: Vec<f64> = (0..s.t()).filter(|&u| u != t_pick).map(|u| s.get(i, u)).collect();
                    prop_assert!(others.iter().all(|&v| c[i] >= v));
                    prop_assert!(others.contains(&c[i]));
                }
            }
        }

        #[test]
        fn cooccurrence_reinsertion(col in prop::collection::vec(-3.0f64..3.0, 1..10), pick in 0usize..10) {
            let i = pick % col.len();
            let mut g = cooccurrence_feature(&col, i).unwrap();
            g.insert(i, col[i]);
            prop_assert_eq!(g, col);
        }
    }
}
