use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use actattr::attributes::{score_intervals, train_stacked, ScoreMatrix, StackMode, StackSequence};
use actattr::corpus::{build_documents, mine_weights, AttributeVocab, MatchMode, ScriptCorpus, SynonymLexicon, Weighting};
use actattr::harness::{
    accuracy, average_precision, eval_detection, gen_synthetic, load_bundle, mean_defined, run_bundle_to_dir, run_experiment,
    write_bundle, CompositeMode, ExperimentConfig, GroundTruth, MatchCriterion, Split, SyntheticBundle, SyntheticConfig,
    SyntheticOutput, WeightSource,
};
use actattr::linear::{train_linear_ova, LinearConfig, LinearModelSet};
use actattr::posefeat::{build_codebooks, describe_frames, encode_bow, CodebookBundle, JointTrackSet, PoseFeatureKind, TRAJECTORY_LENGTHS};
use actattr::psinfer::{hand_likelihood_map, infer_map, infer_marginals, load_grids, save_grids, save_placements, Algorithm, HandHypothesisSet, PartGraph};
use actattr::temporal::{
    nms, save_detections, save_segments, score_windows, segment_agglomerative, window_schedule, IntegralHistogram, Overlap, Rescore,
};
use actattr::util;
use actattr::{Error, Result};

#[derive(Parser)]
#[command(name = "actattr", version, about = "Attribute-based composite activity recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine composite × attribute weights from a script corpus.
    MineScripts(MineArgs),
    /// Write a synthetic bundle with planted weights.
    GenSynthetic(GenArgs),
    /// Train one-vs-all attribute classifiers on a bundle's training intervals.
    TrainAttributes(TrainArgs),
    /// Score every video of a bundle with trained attribute classifiers.
    Score(ScoreArgs),
    /// Refine score matrices with context and/or co-occurrence classifiers.
    Stack(StackArgs),
    /// Sliding-window detection over per-frame codeword counts.
    Detect(DetectArgs),
    /// Agglomerative segmentation of one score matrix.
    Segment(SegmentArgs),
    /// Composite classification of a bundle in one of the supported modes.
    ClassifyComposites(ClassifyArgs),
    /// Pictorial-structures inference over likelihood grids.
    PoseInfer(PoseArgs),
    /// Evaluate detections or composite predictions.
    Eval(EvalArgs),
    /// Run a full experiment from a TOML configuration.
    Run(RunArgs),
    /// Pose-trajectory bag-of-words for a frame range.
    EncodePose(EncodeArgs),
}

#[derive(Args)]
struct MineArgs {
    /// Directory with one sub-directory of sequence files per scenario.
    #[arg(long)]
    scripts: PathBuf,
    /// Attribute vocabulary (`label<TAB>kind`).
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long = "match", default_value = "synonym")]
    match_mode: MatchMode,
    #[arg(long, default_value = "tfidf")]
    weighting: Weighting,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    /// TOML file with generator settings; defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// `features` or `scores`.
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// TOML file with classifier settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    models: PathBuf,
    /// Directory receiving one `<video>.csv` score matrix per video.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StackArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// Directory of `<video>.csv` base score matrices; the bundle's own scores otherwise.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long, default_value = "cooccurrence")]
    mode: StackMode,
    /// Split whose videos train the stacked classifiers.
    #[arg(long, default_value = "val")]
    train_split: Split,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    /// CSV of raw per-frame codeword counts, one row per frame, no header.
    #[arg(long)]
    counts: PathBuf,
    /// Codebook bundle supplying the block sizes.
    #[arg(long, conflicts_with = "block_sizes")]
    codebooks: Option<PathBuf>,
    /// Comma-separated block sizes.
    #[arg(long, value_delimiter = ',')]
    block_sizes: Vec<usize>,
    #[arg(long)]
    models: PathBuf,
    #[arg(long)]
    video: String,
    #[arg(long, default_value_t = 30)]
    min_size: usize,
    #[arg(long, default_value_t = 6)]
    min_step: usize,
    #[arg(long, default_value_t = 1800)]
    max_size: usize,
    /// `any` or `iou:<threshold>`.
    #[arg(long, default_value = "any")]
    overlap: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SegmentArgs {
    /// Score matrix CSV; column `t` covers frames `t·size ..= (t+1)·size − 1`.
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    interval_size: usize,
    #[arg(long, default_value_t = 0.8)]
    threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long, default_value = "svm")]
    mode: CompositeMode,
    #[arg(long)]
    bundle: PathBuf,
    /// Directory of `<video>.csv` score matrices replacing the bundle's own scores.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Weight matrix CSV; mined from the bundle's scripts otherwise.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Use the bundle's planted weights.
    #[arg(long, conflicts_with = "weights")]
    planted: bool,
    /// Experiment TOML supplying the remaining settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the report, `composite_scores.csv` and intermediate artifacts.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PoseArgs {
    #[arg(long)]
    grids: PathBuf,
    /// Part graph JSON; the ten-part upper body otherwise.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Hand hypotheses CSV multiplied into the grid of `--hand-part`.
    #[arg(long)]
    hands: Option<PathBuf>,
    #[arg(long, default_value = "r_hand")]
    hand_part: String,
    #[arg(long, default_value = "distance-transform")]
    algorithm: Algorithm,
    /// Also write posterior marginals to this grid file.
    #[arg(long)]
    marginals: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Detections CSV `video,attribute,start,end,score`.
    #[arg(long, requires = "intervals")]
    detections: Option<PathBuf>,
    /// Interval annotations (JSON lines).
    #[arg(long)]
    intervals: Option<PathBuf>,
    /// `midpoint` or `iou:<threshold>`.
    #[arg(long, default_value = "midpoint")]
    criterion: String,
    /// Composite scores `sequence,composite,score`.
    #[arg(long, requires = "videos")]
    predictions: Option<PathBuf>,
    /// Ground-truth `video,composite[,split]` CSV.
    #[arg(long)]
    videos: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    /// Joint tracks CSV `frame,part,x,y`.
    #[arg(long)]
    tracks: PathBuf,
    #[arg(long, default_value = "fft")]
    kind: PoseFeatureKind,
    /// Codebook bundle; built from the tracks and written here when `--train` is set.
    #[arg(long)]
    codebooks: PathBuf,
    #[arg(long)]
    train: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    first: Option<i64>,
    #[arg(long)]
    last: Option<i64>,
    #[arg(long)]
    out: PathBuf,
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    toml::from_str(&util::read_to_string(path)?).map_err(|e| Error::config(path.display().to_string(), e.message().trim().to_string()))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn parse_overlap(s: &str) -> Result<Overlap> {
    match s.split_once(':') {
        None if s == "any" => Ok(Overlap::Any),
        Some(("iou", t)) => t.parse().map(Overlap::Iou).map_err(|_| Error::config("overlap", format!("bad threshold `{t}`"))),
        _ => Err(Error::config("overlap", format!("expected `any` or `iou:<t>`, got `{s}`"))),
    }
}

fn parse_criterion(s: &str) -> Result<MatchCriterion> {
    match s.split_once(':') {
        None if s == "midpoint" => Ok(MatchCriterion::Midpoint),
        Some(("iou", t)) => t.parse().map(MatchCriterion::Iou).map_err(|_| Error::config("criterion", format!("bad threshold `{t}`"))),
        _ => Err(Error::config("criterion", format!("expected `midpoint` or `iou:<t>`, got `{s}`"))),
    }
}

/// Replaces every video's scores by `<dir>/<video>.csv`.
fn override_scores(bundle: &mut SyntheticBundle, dir: &Path) -> Result<()> {
    for v in bundle.videos.iter_mut() {
        let s = ScoreMatrix::load_csv(&dir.join(format!("{}.csv", v.id)))?;
        if s.t() != v.intervals.len() {
            return Err(Error::DimensionMismatch { expected: v.intervals.len(), got: s.t() });
        }
        v.scores = Some(s);
        v.features = None;
    }
    Ok(())
}

fn bundle_scores(bundle: &SyntheticBundle) -> Result<Vec<ScoreMatrix>> {
    bundle
        .videos
        .iter()
        .map(|v| v.scores.clone().ok_or_else(|| Error::config("scores", format!("video `{}` has no scores; pass --scores", v.id))))
        .collect()
}

fn mine(a: MineArgs) -> Result<()> {
    let corpus = ScriptCorpus::load_dir(&a.scripts)?;
    let vocab = AttributeVocab::load_tsv(&a.vocab)?;
    let lexicon = match &a.lexicon {
        Some(p) => SynonymLexicon::load_tsv(p)?,
        None => SynonymLexicon::new(),
    };
    let w = mine_weights(&build_documents(&corpus), &vocab, &lexicon, a.match_mode, a.weighting);
    w.save_csv(&a.out)?;
    println!("{} composites × {} attributes -> {}", w.rows(), w.cols(), a.out.display());
    Ok(())
}

fn gen(a: GenArgs) -> Result<()> {
    let mut cfg: SyntheticConfig = match &a.config {
        Some(p) => read_toml(p)?,
        None => SyntheticConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(o) = &a.output {
        cfg.output = match o.as_str() {
            "features" => SyntheticOutput::Features,
            "scores" => SyntheticOutput::Scores,
            _ => return Err(Error::config("output", format!("expected `features` or `scores`, got `{o}`"))),
        };
    }
    let bundle = gen_synthetic(&cfg)?;
    create_dir(&a.out)?;
    write_bundle(&bundle, &a.out)?;
    println!("{} videos, {} composites -> {}", bundle.videos.len(), bundle.composites.len(), a.out.display());
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let cfg: LinearConfig = match &a.config {
        Some(p) => read_toml(p)?,
        None => LinearConfig::default(),
    };
    cfg.validate()?;
    let bundle = load_bundle(&a.bundle)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for v in bundle.split(Split::Train) {
        let f = v.features.as_ref().ok_or_else(|| Error::config("bundle", "training needs a feature bundle"))?;
        xs.extend(f.iter().cloned());
        ys.extend(v.labels());
    }
    let models = train_linear_ova(&xs, &ys, &bundle.vocab.labels(), &cfg)?;
    models.save(&a.out)?;
    println!("{} classifiers ({} skipped) -> {}", models.len(), models.skipped.len(), a.out.display());
    Ok(())
}

fn score(a: ScoreArgs) -> Result<()> {
    let bundle = load_bundle(&a.bundle)?;
    let models = LinearModelSet::load(&a.models)?;
    create_dir(&a.out)?;
    for v in &bundle.videos {
        let f = v.features.as_ref().ok_or_else(|| Error::config("bundle", "scoring needs a feature bundle"))?;
        score_intervals(&models, f, v.interval_ids())?.save_csv(&a.out.join(format!("{}.csv", v.id)))?;
    }
    println!("{} score matrices -> {}", bundle.videos.len(), a.out.display());
    Ok(())
}

fn stack(a: StackArgs) -> Result<()> {
    let cfg: LinearConfig = match &a.config {
        Some(p) => read_toml(p)?,
        None => LinearConfig::default(),
    };
    cfg.validate()?;
    let mut bundle = load_bundle(&a.bundle)?;
    let features: Vec<Option<Vec<Vec<f64>>>> = bundle.videos.iter().map(|v| v.features.clone()).collect();
    if let Some(dir) = &a.scores {
        override_scores(&mut bundle, dir)?;
    }
    let scores = bundle_scores(&bundle)?;
    let labels: Vec<Vec<Vec<usize>>> = bundle.videos.iter().map(|v| v.labels()).collect();
    let seqs: Vec<StackSequence> = (0..scores.len())
        .map(|d| StackSequence {
            scores: &scores[d],
            features: features[d].as_deref(),
            labels: Some(&labels[d]),
        })
        .collect();
    let train: Vec<StackSequence> = seqs.iter().zip(&bundle.videos).filter(|(_, v)| v.split == a.train_split).map(|(s, _)| *s).collect();
    let models = train_stacked(&train, a.mode, &cfg, cfg.floor)?;
    create_dir(&a.out)?;
    for (s, v) in seqs.iter().zip(&bundle.videos) {
        models.score(s)?.save_csv(&a.out.join(format!("{}.csv", v.id)))?;
    }
    println!("stacked scores for {} videos -> {}", seqs.len(), a.out.display());
    Ok(())
}

fn read_counts(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    r.records()
        .enumerate()
        .map(|(k, rec)| {
            rec?.iter()
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|e| Error::Parse {
                        path: path.to_path_buf(),
                        line: k + 1,
                        msg: e.to_string(),
                    })
                })
                .collect()
        })
        .collect()
}

fn detect(a: DetectArgs) -> Result<()> {
    let blocks = match &a.codebooks {
        Some(p) => CodebookBundle::load(p)?.block_sizes(),
        None if !a.block_sizes.is_empty() => a.block_sizes.clone(),
        None => return Err(Error::config("block_sizes", "pass --codebooks or --block-sizes")),
    };
    let overlap = parse_overlap(&a.overlap)?;
    let integral = IntegralHistogram::new(&read_counts(&a.counts)?, blocks)?;
    let models = LinearModelSet::load(&a.models)?;
    let schedule = window_schedule(a.min_size, a.min_step, std::f64::consts::SQRT_2, a.max_size)?;
    let dets = nms(&score_windows(&integral, &models, &schedule, &a.video)?, overlap);
    save_detections(&a.out, &dets)?;
    println!("{} detections -> {}", dets.len(), a.out.display());
    Ok(())
}

fn segment(a: SegmentArgs) -> Result<()> {
    if a.interval_size == 0 {
        return Err(Error::config("interval_size", "must be positive"));
    }
    let s = ScoreMatrix::load_csv(&a.scores)?;
    let ranges: Vec<(usize, usize)> = (0..s.t()).map(|t| (t * a.interval_size, (t + 1) * a.interval_size - 1)).collect();
    let segs = segment_agglomerative(&s, &ranges, a.threshold, &Rescore::Mean)?;
    save_segments(&a.out, &segs)?;
    println!("{} intervals -> {} segments -> {}", s.t(), segs.len(), a.out.display());
    Ok(())
}

fn classify(a: ClassifyArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => {
            let mut c = ExperimentConfig::from_toml(&util::read_to_string(p)?)?;
            c.resolve_paths(p.parent().unwrap_or(Path::new(".")));
            c
        }
        None => ExperimentConfig::default(),
    };
    cfg.mode = a.mode;
    cfg.bundle = Some(a.bundle.clone());
    cfg.output_dir = None;
    if a.planted {
        cfg.weights = WeightSource::Planted;
    } else if let Some(w) = &a.weights {
        cfg.weights = WeightSource::File;
        cfg.weights_file = Some(w.clone());
    }
    let mut bundle = load_bundle(&a.bundle)?;
    if let Some(dir) = &a.scores {
        override_scores(&mut bundle, dir)?;
    }
    let report = run_bundle_to_dir(&bundle, &cfg, &a.out)?;
    print!("{}", report.table());
    Ok(())
}

fn pose(a: PoseArgs) -> Result<()> {
    let mut grids = load_grids(&a.grids)?;
    let graph = match &a.graph {
        Some(p) => PartGraph::load(p)?,
        None => PartGraph::upper_body(),
    };
    if let Some(h) = &a.hands {
        let part = graph
            .parts
            .iter()
            .position(|p| *p == a.hand_part)
            .ok_or_else(|| Error::config("hand_part", format!("no part named `{}`", a.hand_part)))?;
        let g = grids.get_mut(part).ok_or(Error::IndexOutOfRange { index: part, len: graph.len() })?;
        let (map, empty) = hand_likelihood_map(&HandHypothesisSet::load_csv(h)?, g.h, g.w)?;
        if empty {
            log::warn!("no usable hand hypotheses; `{}` grid left unchanged", a.hand_part);
        } else {
            g.values.iter_mut().zip(&map.values).for_each(|(v, m)| *v *= m);
        }
    }
    let map = infer_map(&grids, &graph, a.algorithm)?;
    save_placements(&a.out, &graph, &map.placements)?;
    if let Some(m) = &a.marginals {
        save_grids(m, &infer_marginals(&grids, &graph, a.algorithm)?)?;
    }
    println!("log score {:.6} -> {}", map.log_score, a.out.display());
    Ok(())
}

#[derive(Deserialize)]
struct IntervalLine {
    video: String,
    start_frame: usize,
    end_frame: usize,
    attributes: Vec<String>,
}

#[derive(Deserialize)]
struct ScoreRow {
    sequence: String,
    composite: String,
    score: f64,
}

#[derive(Deserialize)]
struct TruthRow {
    video: String,
    composite: String,
}

fn eval(a: EvalArgs) -> Result<()> {
    let mut out = serde_json::Map::new();
    if let (Some(dp), Some(ip)) = (&a.detections, &a.intervals) {
        let dets = actattr::temporal::load_detections(dp)?;
        let mut gt = Vec::new();
        for (k, line) in util::read_to_string(ip)?.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let rec: IntervalLine = serde_json::from_str(line).map_err(|e| Error::Parse {
                path: ip.clone(),
                line: k + 1,
                msg: e.to_string(),
            })?;
            for attr in rec.attributes {
                gt.push(GroundTruth {
                    video: rec.video.clone(),
                    attribute: attr,
                    start: rec.start_frame,
                    end: rec.end_frame,
                });
            }
        }
        let videos: std::collections::BTreeSet<&str> = dets.iter().map(|d| d.video.as_str()).collect();
        gt.retain(|g| videos.contains(g.video.as_str()));
        let mut attrs: Vec<String> = gt.iter().map(|g| g.attribute.clone()).chain(dets.iter().map(|d| d.attribute.clone())).collect();
        attrs.sort();
        attrs.dedup();
        let ev = eval_detection(&dets, &gt, &attrs, parse_criterion(&a.criterion)?);
        for (n, ap) in ev.attributes.iter().zip(&ev.ap) {
            println!("{n:<24} {}", ap.map_or("-".to_string(), |v| format!("{v:.4}")));
        }
        println!("{:<24} {}", "mean detection AP", ev.mean_ap.map_or("-".to_string(), |v| format!("{v:.4}")));
        out.insert("detection".into(), serde_json::to_value(&ev)?);
    }
    if let (Some(pp), Some(vp)) = (&a.predictions, &a.videos) {
        let rows: Vec<ScoreRow> = csv::Reader::from_path(pp)?.deserialize().collect::<std::result::Result<_, _>>()?;
        let truth: Vec<TruthRow> = csv::Reader::from_path(vp)?.deserialize().collect::<std::result::Result<_, _>>()?;
        let mut composites: Vec<String> = rows.iter().map(|r| r.composite.clone()).collect();
        composites.sort();
        composites.dedup();
        let mut aps = Vec::new();
        for c in &composites {
            let mut s = Vec::new();
            let mut l = Vec::new();
            for t in &truth {
                if let Some(r) = rows.iter().find(|r| r.sequence == t.video && &r.composite == c) {
                    s.push(r.score);
                    l.push(&t.composite == c);
                }
            }
            aps.push(average_precision(&s, &l));
        }
        let mut pred = Vec::new();
        let mut gold = Vec::new();
        for t in &truth {
            let best = rows
                .iter()
                .filter(|r| r.sequence == t.video)
                .fold(None::<&ScoreRow>, |b, r| if b.map_or(true, |b| r.score > b.score) { Some(r) } else { b });
            if let Some(b) = best {
                pred.push(composites.iter().position(|c| *c == b.composite).expect("listed"));
                gold.push(composites.iter().position(|c| *c == t.composite).unwrap_or(usize::MAX));
            }
        }
        let acc = accuracy(&pred, &gold);
        for (c, ap) in composites.iter().zip(&aps) {
            println!("{c:<24} {}", ap.map_or("-".to_string(), |v| format!("{v:.4}")));
        }
        let mean = mean_defined(&aps);
        println!("{:<24} {}", "mean composite AP", mean.map_or("-".to_string(), |v| format!("{v:.4}")));
        println!("{:<24} {acc:.4}", "accuracy");
        out.insert(
            "composites".into(),
            serde_json::json!({ "names": composites, "ap": aps, "mean_ap": mean, "accuracy": acc }),
        );
    }
    if out.is_empty() {
        return Err(Error::config("eval", "pass --detections with --intervals and/or --predictions with --videos"));
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let report = run_experiment(&a.config)?;
    print!("{}", report.table());
    Ok(())
}

fn encode(a: EncodeArgs) -> Result<()> {
    let tracks = JointTrackSet::load_csv(&a.tracks)?;
    let first = a.first.unwrap_or(tracks.first_frame());
    let last = a.last.unwrap_or(tracks.last_frame());
    let desc = describe_frames(&tracks, a.kind, &TRAJECTORY_LENGTHS, first, last)?;
    let bundle = if a.train {
        let b = build_codebooks(a.kind, &TRAJECTORY_LENGTHS, &desc, a.seed)?;
        b.save(&a.codebooks)?;
        b
    } else {
        CodebookBundle::load(&a.codebooks)?
    };
    let h = encode_bow(&desc, &bundle)?;
    let line: Vec<String> = h.values.iter().map(|v| util::fmt_sig9(*v)).collect();
    util::write_string(&a.out, &format!("{}\n", line.join(",")))?;
    println!("{} bins over frames {first}..={last} -> {}", h.values.len(), a.out.display());
    Ok(())
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::MineScripts(a) => mine(a),
        Command::GenSynthetic(a) => gen(a),
        Command::TrainAttributes(a) => train(a),
        Command::Score(a) => score(a),
        Command::Stack(a) => stack(a),
        Command::Detect(a) => detect(a),
        Command::Segment(a) => segment(a),
        Command::ClassifyComposites(a) => classify(a),
        Command::PoseInfer(a) => pose(a),
        Command::Eval(a) => eval(a),
        Command::Run(a) => run(a),
        Command::EncodePose(a) => encode(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
