use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attributes::{score_intervals, ScoreMatrix, StackMode, StackSequence, StackedModels, train_stacked};
use crate::composites::{
    build_knn_graph, classify_nn, nn_script_classify, propagate, pst_init, save_predictions, script_score,
    train_composite_svm, EdgeKernel, LabelSet, LabeledSequence, PstConfig, SequenceFeature, SigmaMode,
};
use crate::corpus::{binarize_weights, build_documents, mine_weights, MatchMode, WeightMatrix, Weighting};
use crate::error::{Error, Result};
use crate::linear::{train_linear_ova, LinearConfig, LinearModelSet};
use crate::temporal::{filter_background, pool_segments, save_segments, segment_agglomerative, train_background, BackgroundModel, Detection, Rescore, Segment};
use crate::util;

use super::metrics::{accuracy, average_precision, confusion, eval_detection, mean_defined, DetectionEval, GroundTruth, MatchCriterion};
use super::synthetic::{gen_synthetic, load_bundle, Split, SyntheticBundle, SyntheticConfig};

/// Composite classification mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompositeMode {
    #[default]
    Svm,
    Nn,
    Script,
    NnScript,
    Pst,
    PstZeroShot,
}

impl CompositeMode {
    pub fn name(self) -> &'static str {
        match self {
            CompositeMode::Svm => "svm",
            CompositeMode::Nn => "nn",
            CompositeMode::Script => "script",
            CompositeMode::NnScript => "nn-script",
            CompositeMode::Pst => "pst",
            CompositeMode::PstZeroShot => "pst-zero-shot",
        }
    }

    fn needs_weights(self) -> bool {
        !matches!(self, CompositeMode::Svm | CompositeMode::Nn)
    }
}

impl std::str::FromStr for CompositeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svm" => Ok(CompositeMode::Svm),
            "nn" => Ok(CompositeMode::Nn),
            "script" => Ok(CompositeMode::Script),
            "nn-script" | "nn+script" => Ok(CompositeMode::NnScript),
            "pst" | "pst+script" => Ok(CompositeMode::Pst),
            "pst-zero-shot" => Ok(CompositeMode::PstZeroShot),
            _ => Err(Error::config("mode", format!("unknown mode `{s}`"))),
        }
    }
}

/// Where composite/attribute weights come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightSource {
    /// Mined from the bundle's scripts.
    #[default]
    Mined,
    /// The generator's planted matrix.
    Planted,
    /// Read from `weights_file`.
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segmentation {
    /// One segment per annotated interval.
    #[default]
    Annotated,
    /// Agglomerative merging of annotated intervals, threshold picked on validation.
    Agglomerative,
}

/// PST search grid and propagation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PstSearch {
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub delta: Vec<f64>,
    pub k: Vec<usize>,
    pub tol: f64,
    pub max_iters: usize,
    pub sigma: SigmaMode,
    pub kernel: EdgeKernel,
}

impl Default for PstSearch {
    fn default() -> Self {
        let base = PstConfig::default();
        Self {
            alpha: vec![0.5, 0.75, 0.9, 0.99],
            gamma: vec![0.25, 0.5, 0.75, 1.0],
            delta: vec![0.1, 0.25, 0.5, 1.0],
            k: vec![3, 5, 10],
            tol: base.tol,
            max_iters: base.max_iters,
            sigma: base.sigma,
            kernel: base.kernel,
        }
    }
}

impl PstSearch {
    fn validate(&self) -> Result<()> {
        for (key, empty) in [("pst.alpha", self.alpha.is_empty()), ("pst.gamma", self.gamma.is_empty()), ("pst.delta", self.delta.is_empty()), ("pst.k", self.k.is_empty())] {
            if empty {
                return Err(Error::config(key, "grid must not be empty"));
            }
        }
        for &alpha in &self.alpha {
            for &gamma in &self.gamma {
                for &delta in &self.delta {
                    for &k in &self.k {
                        self.point(alpha, gamma, delta, k).validate().map_err(|e| match e {
                            Error::Config { key, msg } => Error::config(format!("pst.{key}"), msg),
                            e => e,
                        })?;
                    }
                }
            }
        }
        Ok(())
    }

    fn point(&self, alpha: f64, gamma: f64, delta: f64, k: usize) -> PstConfig {
        PstConfig {
            gamma,
            delta,
            k,
            alpha,
            tol: self.tol,
            max_iters: self.max_iters,
            sigma: self.sigma,
            kernel: self.kernel,
        }
    }
}

/// A full experiment as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: CompositeMode,
    /// Bundle directory written by `gen-synthetic`; when absent the `[synthetic]` section is generated in memory.
    pub bundle: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub weights: WeightSource,
    pub weights_file: Option<PathBuf>,
    pub weighting: Weighting,
    pub match_mode: MatchMode,
    pub stack_mode: Option<StackMode>,
    /// Split the stacked classifiers are trained on.
    pub stack_split: Split,
    pub segmentation: Segmentation,
    pub segment_thresholds: Vec<f64>,
    /// Flag background segments with a classifier trained on unannotated intervals (feature bundles only).
    pub background: bool,
    pub detection_criterion: MatchCriterion,
    pub synthetic: SyntheticConfig,
    pub attribute_svm: LinearConfig,
    pub composite_svm: LinearConfig,
    pub pst: PstSearch,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: CompositeMode::Svm,
            bundle: None,
            output_dir: None,
            weights: WeightSource::Mined,
            weights_file: None,
            weighting: Weighting::Tfidf,
            match_mode: MatchMode::Synonym,
            stack_mode: None,
            stack_split: Split::Val,
            segmentation: Segmentation::Annotated,
            segment_thresholds: vec![0.5, 0.6, 0.7, 0.8, 0.9, 0.95],
            background: false,
            detection_criterion: MatchCriterion::Midpoint,
            synthetic: SyntheticConfig::default(),
            attribute_svm: LinearConfig::default(),
            composite_svm: LinearConfig::default(),
            pst: PstSearch::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let key = e.message().split('`').nth(1).unwrap_or("config").to_string();
            Error::config(key, e.message().trim().to_string())
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// Makes relative paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.bundle, &mut self.output_dir, &mut self.weights_file].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.attribute_svm.validate().map_err(|e| prefix("attribute_svm", e))?;
        self.composite_svm.validate().map_err(|e| prefix("composite_svm", e))?;
        if self.bundle.is_none() {
            self.synthetic.validate().map_err(|e| prefix("synthetic", e))?;
        }
        if matches!(self.mode, CompositeMode::Pst | CompositeMode::PstZeroShot) {
            self.pst.validate()?;
        }
        if self.weights == WeightSource::File && self.weights_file.is_none() {
            return Err(Error::config("weights_file", "required when weights = \"file\""));
        }
        if self.segmentation == Segmentation::Agglomerative && self.segment_thresholds.is_empty() {
            return Err(Error::config("segment_thresholds", "must not be empty"));
        }
        if let MatchCriterion::Iou(t) = self.detection_criterion {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::config("detection_criterion", "IoU threshold must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

fn prefix(section: &str, e: Error) -> Error {
    match e {
        Error::Config { key, msg } => Error::config(format!("{section}.{key}"), msg),
        e => e,
    }
}

/// Per-category AP with the categories that had no positives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryAp {
    pub names: Vec<String>,
    pub ap: Vec<Option<f64>>,
    pub mean_ap: Option<f64>,
    pub excluded: Vec<String>,
}

impl CategoryAp {
    /// `scores[c][k]` and `labels[c][k]` for category `c` and sample `k`.
    pub fn compute(names: &[String], scores: &[Vec<f64>], labels: &[Vec<bool>]) -> Self {
        let ap: Vec<Option<f64>> = scores.iter().zip(labels).map(|(s, l)| average_precision(s, l)).collect();
        let excluded = names.iter().zip(&ap).filter(|(_, a)| a.is_none()).map(|(n, _)| n.clone()).collect();
        Self {
            names: names.to_vec(),
            mean_ap: mean_defined(&ap),
            ap,
            excluded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub video: String,
    pub truth: String,
    pub predicted: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeEval {
    pub ap: CategoryAp,
    pub accuracy: f64,
    /// `confusion[truth][predicted]` over test videos.
    pub confusion: Vec<Vec<usize>>,
    pub predictions: Vec<PredictionRow>,
}

/// Everything an experiment measured, with the resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: CompositeMode,
    pub config: ExperimentConfig,
    /// Generator settings of the bundle actually used.
    pub bundle_config: SyntheticConfig,
    /// Interval-level attribute AP of the base scores on test videos.
    pub attributes: CategoryAp,
    pub stacked_attributes: Option<CategoryAp>,
    /// Annotated intervals scored as detections.
    pub detection: DetectionEval,
    pub composites: CompositeEval,
    /// Parameters picked by validation search.
    pub selected: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{:.4}", x))
}

impl EvalReport {
    /// Human-readable summary.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode: {}", self.mode.name());
        let _ = writeln!(s, "\n{:<24} {:>8}", "attribute", "AP");
        for (n, a) in self.attributes.names.iter().zip(&self.attributes.ap) {
            let _ = writeln!(s, "{:<24} {:>8}", n, fmt_opt(*a));
        }
        let _ = writeln!(s, "{:<24} {:>8}", "mean", fmt_opt(self.attributes.mean_ap));
        if let Some(st) = &self.stacked_attributes {
            let _ = writeln!(s, "{:<24} {:>8}", "mean (stacked)", fmt_opt(st.mean_ap));
        }
        let _ = writeln!(s, "{:<24} {:>8}", "mean detection AP", fmt_opt(self.detection.mean_ap));
        let _ = writeln!(s, "\n{:<24} {:>8}", "composite", "AP");
        for (n, a) in self.composites.ap.names.iter().zip(&self.composites.ap.ap) {
            let _ = writeln!(s, "{:<24} {:>8}", n, fmt_opt(*a));
        }
        let _ = writeln!(s, "{:<24} {:>8}", "mean", fmt_opt(self.composites.ap.mean_ap));
        let _ = writeln!(s, "{:<24} {:>8.4}", "accuracy", self.composites.accuracy);
        let _ = writeln!(s, "\nconfusion (rows: truth, columns: predicted)");
        for (n, row) in self.composites.ap.names.iter().zip(&self.composites.confusion) {
            let cells: Vec<String> = row.iter().map(|c| format!("{c:>3}")).collect();
            let _ = writeln!(s, "{:<24} {}", n, cells.join(" "));
        }
        if !self.selected.is_empty() {
            let _ = writeln!(s, "\nselected on validation");
            for (k, v) in &self.selected {
                let _ = writeln!(s, "  {k} = {v}");
            }
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }
}

/// Composite scores `[video][composite]` and hard predictions.
struct Classified {
    scores: Vec<Vec<f64>>,
    predicted: Vec<usize>,
    selected: BTreeMap<String, f64>,
}

/// Weights with rows in the bundle's composite order; missing composites get a zero row.
fn aligned_weights(w: &WeightMatrix, composites: &[String], attributes: &[String]) -> Result<WeightMatrix> {
    if w.col_labels != attributes {
        return Err(Error::config("weights", "weight columns do not match the attribute vocabulary"));
    }
    let values = composites
        .iter()
        .map(|c| w.row_index(c).map_or_else(|| vec![0.0; w.cols()], |z| w.values[z].clone()))
        .collect();
    let mut out = WeightMatrix::new(values, composites.to_vec(), attributes.to_vec())?;
    out.normalized = w.normalized;
    out.empty_rows = (0..out.rows()).filter(|&z| out.values[z].iter().all(|v| *v == 0.0)).collect();
    Ok(out)
}

fn resolve_weights(bundle: &SyntheticBundle, cfg: &ExperimentConfig) -> Result<WeightMatrix> {
    let attrs = bundle.vocab.labels();
    let w = match cfg.weights {
        WeightSource::Planted => bundle.planted.clone(),
        WeightSource::File => WeightMatrix::load_csv(cfg.weights_file.as_deref().expect("validated"))?,
        WeightSource::Mined => {
            let docs = build_documents(&bundle.scripts);
            mine_weights(&docs, &bundle.vocab, &bundle.lexicon, cfg.match_mode, cfg.weighting)
        }
    };
    aligned_weights(&w, &bundle.composites, &attrs)
}

fn split_accuracy(predicted: &[usize], videos: &[&super::synthetic::VideoRecord], split: Split) -> Option<f64> {
    let idx: Vec<usize> = (0..videos.len()).filter(|&d| videos[d].split == split).collect();
    if idx.is_empty() {
        return None;
    }
    let p: Vec<usize> = idx.iter().map(|&d| predicted[d]).collect();
    let t: Vec<usize> = idx.iter().map(|&d| videos[d].composite).collect();
    Some(accuracy(&p, &t))
}

fn argmax_rows(scores: &[Vec<f64>]) -> Vec<usize> {
    scores.iter().map(|r| util::argmax(r).unwrap_or(0)).collect()
}

/// Scores from per-training-sequence distances: the negated distance to the nearest sequence of each composite.
fn distance_scores(distances: &[Option<f64>], train: &[LabeledSequence], z: usize) -> Vec<f64> {
    let mut out = vec![f64::MIN; z];
    for (d, s) in distances.iter().zip(train) {
        if let Some(d) = d {
            out[s.composite] = out[s.composite].max(-d);
        }
    }
    out
}

fn classify_composites(
    mode: CompositeMode,
    videos: &[&super::synthetic::VideoRecord],
    g: &[Vec<f64>],
    names: &[String],
    w: Option<&WeightMatrix>,
    cfg: &ExperimentConfig,
) -> Result<Classified> {
    let z = names.len();
    let train: Vec<LabeledSequence> = videos
        .iter()
        .zip(g)
        .filter(|(v, _)| v.split == Split::Train)
        .map(|(v, g)| LabeledSequence {
            feature: SequenceFeature { id: v.id.clone(), values: g.clone() },
            composite: v.composite,
        })
        .collect();
    let mut selected = BTreeMap::new();
    let (scores, predicted) = match mode {
        CompositeMode::Svm => {
            let models = train_composite_svm(&train, names, &cfg.composite_svm)?;
            let scores = g.iter().map(|x| models.score(x)).collect::<Result<Vec<_>>>()?;
            let p = argmax_rows(&scores);
            (scores, p)
        }
        CompositeMode::Nn => {
            let mut scores = Vec::with_capacity(g.len());
            let mut p = Vec::with_capacity(g.len());
            for x in g {
                let pred = classify_nn(&train, x)?;
                scores.push(distance_scores(&pred.distances, &train, z));
                p.push(pred.composite);
            }
            (scores, p)
        }
        CompositeMode::Script => {
            let w = w.expect("weights resolved");
            let scores = g.iter().map(|x| script_score(x, w)).collect::<Result<Vec<_>>>()?;
            let p = argmax_rows(&scores);
            (scores, p)
        }
        CompositeMode::NnScript => {
            let wb = binarize_weights(w.expect("weights resolved"));
            let mut scores = Vec::with_capacity(g.len());
            let mut p = Vec::with_capacity(g.len());
            for x in g {
                let (pred, _) = nn_script_classify(x, &train, &wb)?;
                scores.push(distance_scores(&pred.distances, &train, z));
                p.push(pred.composite);
            }
            (scores, p)
        }
        CompositeMode::Pst | CompositeMode::PstZeroShot => {
            let zero_shot = mode == CompositeMode::PstZeroShot;
            let w = w.expect("weights resolved");
            let per_video = g.iter().map(|x| script_score(x, w)).collect::<Result<Vec<_>>>()?;
            let script: Vec<Vec<f64>> = (0..z).map(|zi| per_video.iter().map(|r| r[zi]).collect()).collect();
            let assignments: Vec<Option<usize>> = videos.iter().map(|v| (v.split == Split::Train).then_some(v.composite)).collect();
            let labels = LabelSet::from_assignments(z, &assignments)?;
            let gammas: &[f64] = if zero_shot { &cfg.pst.gamma[..1] } else { &cfg.pst.gamma };
            let mut best: Option<(f64, Vec<Vec<f64>>, [f64; 4])> = None;
            for &k in &cfg.pst.k {
                if k >= videos.len() {
                    log::warn!("k = {k} skipped: only {} sequences", videos.len());
                    continue;
                }
                let graph = build_knn_graph(g, k, cfg.pst.sigma, cfg.pst.kernel)?;
                for &gamma in gammas {
                    for &delta in &cfg.pst.delta {
                        let point = cfg.pst.point(cfg.pst.alpha[0], gamma, delta, k);
                        let init = pst_init(&script, Some(&labels), &point, zero_shot)?;
                        for &alpha in &cfg.pst.alpha {
                            let prop = propagate(&graph, &init, alpha, cfg.pst.tol, cfg.pst.max_iters)?;
                            if !prop.converged {
                                log::warn!("propagation did not converge within {} iterations (alpha {alpha})", cfg.pst.max_iters);
                            }
                            let scores: Vec<Vec<f64>> = (0..videos.len()).map(|d| (0..z).map(|zi| prop.scores[zi][d]).collect()).collect();
                            let acc = split_accuracy(&argmax_rows(&scores), videos, Split::Val).unwrap_or(0.0);
                            if best.as_ref().map_or(true, |(b, _, _)| acc > *b) {
                                best = Some((acc, scores, [alpha, gamma, delta, k as f64]));
                            }
                        }
                    }
                }
            }
            let (acc, scores, params) =
                best.ok_or_else(|| Error::config("pst.k", "every neighbourhood size is at least the number of sequences"))?;
            selected.insert("pst.alpha".into(), params[0]);
            if !zero_shot {
                selected.insert("pst.gamma".into(), params[1]);
            }
            selected.insert("pst.delta".into(), params[2]);
            selected.insert("pst.k".into(), params[3]);
            selected.insert("pst.val_accuracy".into(), acc);
            let p = argmax_rows(&scores);
            (scores, p)
        }
    };
    Ok(Classified { scores, predicted, selected })
}

/// Segment features: the length-weighted mean of the interval features it spans.
fn merged_features(video: &super::synthetic::VideoRecord, feats: &[Vec<f64>], segs: &[Segment]) -> Vec<Vec<f64>> {
    segs.iter()
        .map(|s| {
            let mut acc = vec![0.0; feats[0].len()];
            let mut total = 0.0;
            for (iv, x) in video.intervals.iter().zip(feats) {
                if iv.start_frame >= s.start && iv.end_frame <= s.end {
                    let len = (iv.end_frame - iv.start_frame + 1) as f64;
                    total += len;
                    acc.iter_mut().zip(x).for_each(|(a, v)| *a += len * v);
                }
            }
            acc.iter_mut().for_each(|a| *a /= total.max(1.0));
            acc
        })
        .collect()
}

fn segment_video(
    video: &super::synthetic::VideoRecord,
    scores: &ScoreMatrix,
    seg: Segmentation,
    threshold: f64,
    background: Option<&BackgroundModel>,
) -> Result<Vec<Segment>> {
    let ranges: Vec<(usize, usize)> = video.intervals.iter().map(|i| (i.start_frame, i.end_frame)).collect();
    let segs = match seg {
        Segmentation::Annotated => ranges
            .iter()
            .enumerate()
            .map(|(t, &(start, end))| Segment {
                start,
                end,
                scores: scores.column(t),
                background: false,
            })
            .collect(),
        Segmentation::Agglomerative => segment_agglomerative(scores, &ranges, threshold, &Rescore::Mean)?,
    };
    match (background, &video.features) {
        (Some(model), Some(feats)) => {
            let f = merged_features(video, feats, &segs);
            filter_background(segs, &f, Some(model))
        }
        _ => Ok(segs),
    }
}

/// Artifacts kept for writing to the output directory.
struct Artifacts {
    weights: Option<WeightMatrix>,
    attribute_models: Option<LinearModelSet>,
    stacked: Option<StackedModels>,
    background: Option<BackgroundModel>,
    segments: Vec<Vec<Segment>>,
    features: Vec<Vec<f64>>,
    scores: Vec<Vec<f64>>,
}

/// Runs the full pipeline on a loaded bundle.
pub fn run_on_bundle(bundle: &SyntheticBundle, cfg: &ExperimentConfig) -> Result<EvalReport> {
    run_inner(bundle, cfg).map(|(r, _)| r)
}

fn run_inner(bundle: &SyntheticBundle, cfg: &ExperimentConfig) -> Result<(EvalReport, Artifacts)> {
    cfg.validate()?;
    let names = bundle.vocab.labels();
    let n = names.len();
    let videos: Vec<&super::synthetic::VideoRecord> = bundle.videos.iter().collect();
    if videos.is_empty() {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    let mut notes = Vec::new();
    let floor = cfg.attribute_svm.floor;

    // attribute scores
    let mut attribute_models = None;
    let base: Vec<ScoreMatrix> = if videos.iter().all(|v| v.scores.is_some()) {
        videos.iter().map(|v| v.scores.clone().expect("checked")).collect()
    } else {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for v in videos.iter().filter(|v| v.split == Split::Train) {
            let f = v.features.as_ref().ok_or_else(|| Error::Format(format!("video `{}` has neither scores nor features", v.id)))?;
            xs.extend(f.iter().cloned());
            ys.extend(v.labels());
        }
        let models = train_linear_ova(&xs, &ys, &names, &cfg.attribute_svm)?;
        let out = videos
            .iter()
            .map(|v| {
                let f = v.features.as_ref().ok_or_else(|| Error::Format(format!("video `{}` has no features", v.id)))?;
                score_intervals(&models, f, v.interval_ids())
            })
            .collect::<Result<Vec<_>>>()?;
        attribute_models = Some(models);
        out
    };

    let test: Vec<usize> = (0..videos.len()).filter(|&d| videos[d].split == Split::Test).collect();
    if test.is_empty() {
        return Err(Error::config("synthetic.train_fraction", "the test split is empty"));
    }
    let interval_ap = |mats: &[ScoreMatrix]| {
        let mut scores = vec![Vec::new(); n];
        let mut labels = vec![Vec::new(); n];
        for &d in &test {
            for (t, iv) in videos[d].intervals.iter().enumerate() {
                for i in 0..n {
                    scores[i].push(mats[d].get(i, t));
                    labels[i].push(iv.attributes.contains(&i));
                }
            }
        }
        CategoryAp::compute(&names, &scores, &labels)
    };
    let attributes = interval_ap(&base);

    // stacking
    let mut stacked_models = None;
    let (attr_scores, stacked_attributes) = match cfg.stack_mode {
        None => (base, None),
        Some(mode) => {
            let labels: Vec<Vec<Vec<usize>>> = videos.iter().map(|v| v.labels()).collect();
            let seqs: Vec<StackSequence> = (0..videos.len())
                .map(|d| StackSequence {
                    scores: &base[d],
                    features: videos[d].features.as_deref(),
                    labels: Some(&labels[d]),
                })
                .collect();
            let train: Vec<StackSequence> = seqs.iter().zip(&videos).filter(|(_, v)| v.split == cfg.stack_split).map(|(s, _)| *s).collect();
            if train.is_empty() {
                return Err(Error::config("stack_split", "no videos in the stacking split"));
            }
            let models = train_stacked(&train, mode, &cfg.attribute_svm, floor)?;
            let refined = seqs.iter().map(|s| models.score(s)).collect::<Result<Vec<_>>>()?;
            stacked_models = Some(models);
            let ap = interval_ap(&refined);
            (refined, Some(ap))
        }
    };

    log::info!("attribute scores ready for {} videos", videos.len());

    // annotated intervals as detections
    let mut dets = Vec::new();
    let mut gt = Vec::new();
    for &d in &test {
        let v = videos[d];
        for (t, iv) in v.intervals.iter().enumerate() {
            for i in 0..n {
                dets.push(Detection {
                    video: v.id.clone(),
                    attribute: names[i].clone(),
                    start: iv.start_frame,
                    end: iv.end_frame,
                    score: attr_scores[d].get(i, t),
                });
            }
            for &i in &iv.attributes {
                gt.push(GroundTruth {
                    video: v.id.clone(),
                    attribute: names[i].clone(),
                    start: iv.start_frame,
                    end: iv.end_frame,
                });
            }
        }
    }
    let detection = eval_detection(&dets, &gt, &names, cfg.detection_criterion);

    // background
    let mut background = None;
    if cfg.background {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for v in videos.iter().filter(|v| v.split == Split::Train) {
            if let Some(f) = &v.features {
                xs.extend(f.iter().cloned());
                ys.extend(v.intervals.iter().map(|iv| iv.attributes.is_empty()));
            }
        }
        if xs.is_empty() {
            notes.push("background filtering needs interval features; skipped".into());
        } else {
            background = train_background(&xs, &ys, &cfg.attribute_svm)?;
            if background.is_none() {
                notes.push("no background intervals in training data; background filtering skipped".into());
            }
        }
    }

    // weights
    let weights = if cfg.mode.needs_weights() {
        let w = resolve_weights(bundle, cfg)?;
        if !w.empty_rows.is_empty() {
            notes.push(format!("{} composites have empty weight rows", w.empty_rows.len()));
        }
        Some(w)
    } else {
        None
    };

    // segmentation, pooling and classification
    let thresholds: Vec<f64> = match cfg.segmentation {
        Segmentation::Annotated => vec![f64::NAN],
        Segmentation::Agglomerative => cfg.segment_thresholds.clone(),
    };
    let mut best: Option<(f64, f64, Vec<Vec<Segment>>, Vec<Vec<f64>>, Classified)> = None;
    for &th in &thresholds {
        let segments = videos
            .iter()
            .zip(&attr_scores)
            .map(|(v, s)| segment_video(v, s, cfg.segmentation, th, background.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let g = segments.iter().map(|s| pool_segments(s, n, floor)).collect::<Result<Vec<_>>>()?;
        let c = classify_composites(cfg.mode, &videos, &g, &bundle.composites, weights.as_ref(), cfg)?;
        let acc = split_accuracy(&c.predicted, &videos, Split::Val).unwrap_or(0.0);
        log::info!("{}: threshold {th}, validation accuracy {acc:.4}", cfg.mode.name());
        if best.as_ref().map_or(true, |b| acc > b.0) {
            best = Some((acc, th, segments, g, c));
        }
    }
    let (_, th, segments, g, mut classified) = best.expect("at least one threshold");
    if cfg.segmentation == Segmentation::Agglomerative {
        classified.selected.insert("segment_threshold".into(), th);
    }
    if !videos.iter().any(|v| v.split == Split::Val) && (thresholds.len() > 1 || matches!(cfg.mode, CompositeMode::Pst | CompositeMode::PstZeroShot)) {
        notes.push("no validation videos; the first grid entry was used".into());
    }

    // composite evaluation on test videos
    let z = bundle.composites.len();
    let comp_scores: Vec<Vec<f64>> = (0..z).map(|zi| test.iter().map(|&d| classified.scores[d][zi]).collect()).collect();
    let comp_labels: Vec<Vec<bool>> = (0..z).map(|zi| test.iter().map(|&d| videos[d].composite == zi).collect()).collect();
    let truth: Vec<usize> = test.iter().map(|&d| videos[d].composite).collect();
    let pred: Vec<usize> = test.iter().map(|&d| classified.predicted[d]).collect();
    let composites = CompositeEval {
        ap: CategoryAp::compute(&bundle.composites, &comp_scores, &comp_labels),
        accuracy: accuracy(&pred, &truth),
        confusion: confusion(&pred, &truth, z),
        predictions: test
            .iter()
            .map(|&d| PredictionRow {
                video: videos[d].id.clone(),
                truth: bundle.composites[videos[d].composite].clone(),
                predicted: bundle.composites[classified.predicted[d]].clone(),
            })
            .collect(),
    };
    if !composites.ap.excluded.is_empty() {
        notes.push(format!("composites without test videos excluded from the mean: {}", composites.ap.excluded.join(", ")));
    }
    if !attributes.excluded.is_empty() {
        notes.push(format!("attributes without test positives excluded from the mean: {}", attributes.excluded.join(", ")));
    }

    let report = EvalReport {
        mode: cfg.mode,
        config: cfg.clone(),
        bundle_config: bundle.config.clone(),
        attributes,
        stacked_attributes,
        detection,
        composites,
        selected: classified.selected,
        notes,
    };
    let artifacts = Artifacts {
        weights,
        attribute_models,
        stacked: stacked_models,
        background,
        segments,
        features: g,
        scores: classified.scores,
    };
    Ok((report, artifacts))
}

fn write_artifacts(dir: &Path, bundle: &SyntheticBundle, report: &EvalReport, a: &Artifacts) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    log::info!("writing artifacts to {}", dir.display());
    util::write_string(&dir.join("report.json"), &serde_json::to_string_pretty(report)?)?;
    util::write_string(&dir.join("report.txt"), &report.table())?;
    util::write_string(&dir.join("config.toml"), &report.config.to_toml()?)?;
    if let Some(w) = &a.weights {
        w.save_csv(&dir.join("weights.csv"))?;
    }
    if let Some(m) = &a.attribute_models {
        m.save(&dir.join("attribute_models.json"))?;
    }
    if let Some(m) = &a.stacked {
        util::write_string(&dir.join("stacked_models.json"), &serde_json::to_string(m)?)?;
    }
    if let Some(m) = &a.background {
        m.save(&dir.join("background_model.json"))?;
    }
    let seg_dir = dir.join("segments");
    std::fs::create_dir_all(&seg_dir).map_err(|e| Error::io(&seg_dir, e))?;
    for (v, s) in bundle.videos.iter().zip(&a.segments) {
        save_segments(&seg_dir.join(format!("{}.jsonl", v.id)), s)?;
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["video".to_string()];
    header.extend(bundle.vocab.labels());
    w.write_record(&header)?;
    for (v, g) in bundle.videos.iter().zip(&a.features) {
        let mut rec = vec![v.id.clone()];
        rec.extend(g.iter().map(|x| util::fmt_sig9(*x)));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    util::write_string(&dir.join("sequence_features.csv"), &String::from_utf8(bytes).expect("utf-8"))?;
    let ids: Vec<String> = bundle.videos.iter().map(|v| v.id.clone()).collect();
    let by_comp: Vec<Vec<f64>> = (0..bundle.composites.len()).map(|z| a.scores.iter().map(|r| r[z]).collect()).collect();
    save_predictions(&dir.join("composite_scores.csv"), &ids, &bundle.composites, &by_comp)
}

/// Runs on a loaded bundle and writes the report and artifacts to `dir`.
pub fn run_bundle_to_dir(bundle: &SyntheticBundle, cfg: &ExperimentConfig, dir: &Path) -> Result<EvalReport> {
    let (report, artifacts) = run_inner(bundle, cfg)?;
    write_artifacts(dir, bundle, &report, &artifacts)?;
    Ok(report)
}

/// Runs a resolved configuration: loads or generates the bundle, runs, and writes outputs.
pub fn run_config(cfg: &ExperimentConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let bundle = match &cfg.bundle {
        Some(dir) => load_bundle(dir)?,
        None => gen_synthetic(&cfg.synthetic)?,
    };
    let (report, artifacts) = run_inner(&bundle, cfg)?;
    if let Some(dir) = &cfg.output_dir {
        write_artifacts(dir, &bundle, &report, &artifacts)?;
    }
    Ok(report)
}

/// Reads a TOML experiment file; paths inside are relative to the file's directory.
pub fn run_experiment(path: &Path) -> Result<EvalReport> {
    let mut cfg = ExperimentConfig::from_toml(&util::read_to_string(path)?)?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    run_config(&cfg)
}
