use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::attributes::ScoreMatrix;
use crate::corpus::{AttributeKind, AttributeVocab, PartOfSpeech, ScriptCorpus, ScriptSequence, SynonymLexicon, WeightMatrix};
use crate::error::{Error, Result};
use crate::util;

const ACTIVITY_WORDS: &[&str] = &[
    "cut", "peel", "slice", "wash", "stir", "pour", "open", "rinse", "dice", "grate", "spread", "mix", "fry", "squeeze", "scrape",
    "shake",
];
const OBJECT_WORDS: &[&str] = &[
    "knife", "bowl", "cucumber", "carrot", "pan", "spoon", "plate", "bread", "onion", "egg", "oil", "water", "lemon", "board", "pot",
    "towel", "cheese", "butter", "salt", "pepper", "garlic", "apple", "orange", "herb",
];
const FILLER_WORDS: &[&str] = &["the", "then", "and", "take", "a", "into", "with", "some", "now", "carefully", "it", "again", "first", "next"];

/// What the generator emits per interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticOutput {
    /// Feature vectors `x_t = Σ μ_i + noise` to be scored by trained attribute classifiers.
    #[default]
    Features,
    /// Attribute scores `s_{i,t} = signal · [i present] + noise` directly.
    Scores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub composites: usize,
    pub activities: usize,
    pub objects: usize,
    /// Activities in the support of each composite.
    pub support_activities: usize,
    /// Objects in the support of each composite when objects are not paired.
    pub support_objects: usize,
    /// Each activity always appears with two dedicated partner objects.
    pub paired_objects: bool,
    pub videos_per_composite: usize,
    pub intervals_min: usize,
    pub intervals_max: usize,
    pub interval_frames_min: usize,
    pub interval_frames_max: usize,
    /// Probability that an interval carries no attribute.
    pub background_rate: f64,
    pub signal: f64,
    pub noise: f64,
    pub output: SyntheticOutput,
    pub feature_dim: usize,
    pub scripts_per_composite: usize,
    pub steps_min: usize,
    pub steps_max: usize,
    /// Chance of one more filler token before each mention (repeated draws).
    pub filler_rate: f64,
    /// Chance that a mention uses the lexicon synonym instead of the label.
    pub synonym_rate: f64,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            composites: 6,
            activities: 8,
            objects: 16,
            support_activities: 3,
            support_objects: 4,
            paired_objects: true,
            videos_per_composite: 12,
            intervals_min: 6,
            intervals_max: 12,
            interval_frames_min: 40,
            interval_frames_max: 120,
            background_rate: 0.1,
            signal: 1.0,
            noise: 0.5,
            output: SyntheticOutput::Features,
            feature_dim: 64,
            scripts_per_composite: 20,
            steps_min: 4,
            steps_max: 9,
            filler_rate: 0.5,
            synonym_rate: 0.2,
            train_fraction: 0.5,
            val_fraction: 0.25,
            seed: 7,
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("composites", self.composites),
            ("activities", self.activities),
            ("support_activities", self.support_activities),
            ("videos_per_composite", self.videos_per_composite),
            ("intervals_min", self.intervals_min),
            ("interval_frames_min", self.interval_frames_min),
            ("feature_dim", self.feature_dim),
            ("scripts_per_composite", self.scripts_per_composite),
            ("steps_min", self.steps_min),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::config(key, "must be at least 1"));
            }
        }
        if self.intervals_max < self.intervals_min || self.interval_frames_max < self.interval_frames_min || self.steps_max < self.steps_min {
            return Err(Error::config("intervals_max", "maximum below minimum"));
        }
        if self.support_activities > self.activities || self.intervals_min < self.support_activities {
            return Err(Error::config("support_activities", "support larger than the activity vocabulary or the shortest video"));
        }
        if binomial(self.activities, self.support_activities) < self.composites as f64 {
            return Err(Error::config("support_activities", "not enough distinct activity supports for every composite"));
        }
        if self.paired_objects {
            if self.objects < 2 * self.activities {
                return Err(Error::config("objects", "paired objects need two objects per activity"));
            }
        } else if self.support_objects > self.objects {
            return Err(Error::config("support_objects", "support larger than the object vocabulary"));
        }
        for (key, v) in [("background_rate", self.background_rate), ("filler_rate", self.filler_rate), ("synonym_rate", self.synonym_rate)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::config(key, "must lie in [0, 1)"));
            }
        }
        if !(self.noise >= 0.0) || !self.signal.is_finite() {
            return Err(Error::config("noise", "noise must be non-negative and signal finite"));
        }
        if !(self.train_fraction > 0.0 && self.val_fraction >= 0.0 && self.train_fraction + self.val_fraction < 1.0) {
            return Err(Error::config("train_fraction", "split fractions must leave room for a test split"));
        }
        Ok(())
    }

    pub fn attribute_count(&self) -> usize {
        self.activities + self.objects
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::Format(format!("unknown split `{s}`"))),
        }
    }
}

/// One annotated interval; frames are 0-based and inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub start_frame: usize,
    pub end_frame: usize,
    /// Attribute indices present in the interval.
    pub attributes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoRecord {
    pub id: String,
    pub composite: usize,
    pub split: Split,
    pub intervals: Vec<IntervalRecord>,
    /// Interval feature vectors (feature output).
    pub features: Option<Vec<Vec<f64>>>,
    /// Interval scores (score output).
    pub scores: Option<ScoreMatrix>,
}

impl VideoRecord {
    pub fn frames(&self) -> usize {
        self.intervals.last().map_or(0, |i| i.end_frame + 1)
    }

    pub fn interval_ids(&self) -> Vec<String> {
        (0..self.intervals.len()).map(|t| t.to_string()).collect()
    }

    pub fn labels(&self) -> Vec<Vec<usize>> {
        self.intervals.iter().map(|i| i.attributes.clone()).collect()
    }
}

/// Everything produced by [`gen_synthetic`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBundle {
    pub config: SyntheticConfig,
    pub vocab: AttributeVocab,
    pub composites: Vec<String>,
    pub videos: Vec<VideoRecord>,
    /// Planted composite × attribute weights, rows L1-normalized.
    pub planted: WeightMatrix,
    pub scripts: ScriptCorpus,
    pub lexicon: SynonymLexicon,
}

impl SyntheticBundle {
    pub fn split(&self, split: Split) -> Vec<&VideoRecord> {
        self.videos.iter().filter(|v| v.split == split).collect()
    }
}

fn word(list: &[&str], prefix: &str, k: usize) -> String {
    list.get(k).map_or_else(|| format!("{prefix}{k:02}"), |w| w.to_string())
}

fn synonym_of(label: &str) -> String {
    format!("{label}s")
}

fn partners(activity: usize, activities: usize) -> [usize; 2] {
    [activities + 2 * activity, activities + 2 * activity + 1]
}

/// Draws a planted dataset: supports, weights, videos, interval features or scores, and scripts.
///
/// Every video covers its composite's full support and contains no other
/// attribute, so that planted weights separate composites exactly when noise is zero.
pub fn gen_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticBundle> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_act = cfg.activities;
    let n = cfg.attribute_count();

    let mut vocab = AttributeVocab::new();
    let mut lexicon = SynonymLexicon::new();
    for k in 0..n_act {
        let l = word(ACTIVITY_WORDS, "activity", k);
        vocab.push(&l, AttributeKind::Activity)?;
        lexicon.insert(&l, PartOfSpeech::Verb, &[&synonym_of(&l)])?;
    }
    for k in 0..cfg.objects {
        let l = word(OBJECT_WORDS, "object", k);
        vocab.push(&l, AttributeKind::Object)?;
        lexicon.insert(&l, PartOfSpeech::Noun, &[&synonym_of(&l)])?;
    }
    let composites: Vec<String> = (0..cfg.composites).map(|z| format!("composite_{z:02}")).collect();

    // supports and planted weights
    let mut supports_act: Vec<Vec<usize>> = Vec::new();
    while supports_act.len() < cfg.composites {
        let mut s: Vec<usize> = (0..n_act).collect::<Vec<_>>().choose_multiple(&mut rng, cfg.support_activities).copied().collect();
        s.sort_unstable();
        if !supports_act.contains(&s) {
            supports_act.push(s);
        }
    }
    let mut supports_obj = Vec::new();
    let mut planted = vec![vec![0.0; n]; cfg.composites];
    for (z, acts) in supports_act.iter().enumerate() {
        let objs: Vec<usize> = if cfg.paired_objects {
            acts.iter().flat_map(|&a| partners(a, n_act)).collect()
        } else {
            let mut o: Vec<usize> = (n_act..n).collect::<Vec<_>>().choose_multiple(&mut rng, cfg.support_objects).copied().collect();
            o.sort_unstable();
            o
        };
        for &i in acts.iter().chain(&objs) {
            planted[z][i] = rng.gen_range(0.5..1.5);
        }
        let sum: f64 = planted[z].iter().sum();
        planted[z].iter_mut().for_each(|v| *v /= sum);
        supports_obj.push(objs);
    }
    let planted = WeightMatrix::new(planted, composites.clone(), vocab.labels())?;

    // prototypes for feature output
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let prototypes: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..cfg.feature_dim).map(|_| cfg.signal * unit.sample(&mut rng)).collect())
        .collect();

    let n_train = ((cfg.videos_per_composite as f64 * cfg.train_fraction).round() as usize).max(1);
    let n_val = (cfg.videos_per_composite as f64 * cfg.val_fraction).round() as usize;
    let mut videos = Vec::new();
    for z in 0..cfg.composites {
        let acts = &supports_act[z];
        let objs = &supports_obj[z];
        let act_w = WeightedIndex::new(acts.iter().map(|&a| planted.values[z][a])).expect("positive weights");
        for k in 0..cfg.videos_per_composite {
            let t_len = rng.gen_range(cfg.intervals_min..=cfg.intervals_max);
            let mut background: Vec<bool> = (0..t_len).map(|_| rng.gen_bool(cfg.background_rate)).collect();
            let mut fg: Vec<usize> = (0..t_len).filter(|&t| !background[t]).collect();
            let mut spare = (0..t_len).filter(|&t| background[t]).collect::<Vec<_>>().into_iter();
            while fg.len() < acts.len() {
                let t = spare.next().expect("intervals_min covers the support");
                background[t] = false;
                fg.push(t);
            }
            fg.shuffle(&mut rng);
            let mut attrs: Vec<Vec<usize>> = vec![Vec::new(); t_len];
            for (j, &t) in fg.iter().enumerate() {
                let a = if j < acts.len() { acts[j] } else { acts[act_w.sample(&mut rng)] };
                attrs[t].push(a);
                if cfg.paired_objects {
                    attrs[t].extend(partners(a, n_act));
                } else {
                    let m = rng.gen_range(0..=3usize.min(objs.len()));
                    let picked = objs
                        .choose_multiple_weighted(&mut rng, m, |&o| planted.values[z][o])
                        .map_err(|e| Error::Degenerate(e.to_string()))?;
                    attrs[t].extend(picked.copied());
                }
            }
            if !cfg.paired_objects {
                for (j, &o) in objs.iter().enumerate() {
                    if !attrs.iter().any(|a| a.contains(&o)) {
                        attrs[fg[j % fg.len()]].push(o);
                    }
                }
            }
            let mut start = 0;
            let intervals: Vec<IntervalRecord> = attrs
                .into_iter()
                .map(|mut a| {
                    a.sort_unstable();
                    a.dedup();
                    let len = rng.gen_range(cfg.interval_frames_min..=cfg.interval_frames_max);
                    let rec = IntervalRecord {
                        start_frame: start,
                        end_frame: start + len - 1,
                        attributes: a,
                    };
                    start += len;
                    rec
                })
                .collect();
            let noise = |rng: &mut ChaCha8Rng| if cfg.noise > 0.0 { cfg.noise * unit.sample(rng) } else { 0.0 };
            let (features, scores) = match cfg.output {
                SyntheticOutput::Features => {
                    let f = intervals
                        .iter()
                        .map(|iv| {
                            (0..cfg.feature_dim)
                                .map(|d| iv.attributes.iter().map(|&i| prototypes[i][d]).sum::<f64>() + noise(&mut rng))
                                .collect()
                        })
                        .collect();
                    (Some(f), None)
                }
                SyntheticOutput::Scores => {
                    let rows: Vec<Vec<f64>> = (0..n)
                        .map(|i| {
                            intervals
                                .iter()
                                .map(|iv| if iv.attributes.contains(&i) { cfg.signal } else { 0.0 } + noise(&mut rng))
                                .collect()
                        })
                        .collect();
                    let ids = (0..intervals.len()).map(|t| t.to_string()).collect();
                    (None, Some(ScoreMatrix::new(vocab.labels(), ids, rows)?))
                }
            };
            let split = if k < n_train {
                Split::Train
            } else if k < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
            videos.push(VideoRecord {
                id: format!("v{z:02}_{k:03}"),
                composite: z,
                split,
                intervals,
                features,
                scores,
            });
        }
    }

    // scripts
    let mut scripts = ScriptCorpus::new();
    for z in 0..cfg.composites {
        let support: Vec<usize> = (0..n).filter(|&i| planted.values[z][i] > 0.0).collect();
        let w = WeightedIndex::new(support.iter().map(|&i| planted.values[z][i])).expect("positive weights");
        for _ in 0..cfg.scripts_per_composite {
            let steps: Vec<String> = (0..rng.gen_range(cfg.steps_min..=cfg.steps_max))
                .map(|_| {
                    let mut words = Vec::new();
                    while words.len() < 8 && rng.gen_bool(cfg.filler_rate) {
                        words.push(*FILLER_WORDS.choose(&mut rng).expect("non-empty"));
                    }
                    let label = vocab.entries()[support[w.sample(&mut rng)]].label.clone();
                    let mention = if rng.gen_bool(cfg.synonym_rate) { synonym_of(&label) } else { label };
                    let mut step = words.join(" ");
                    if !step.is_empty() {
                        step.push(' ');
                    }
                    step.push_str(&mention);
                    step
                })
                .collect();
            scripts.add_sequence(&composites[z], ScriptSequence::new(&steps)?);
        }
    }

    Ok(SyntheticBundle {
        config: cfg.clone(),
        vocab,
        composites,
        videos,
        planted,
        scripts,
        lexicon,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct IntervalLine {
    video: String,
    start_frame: usize,
    end_frame: usize,
    attributes: Vec<String>,
    composite: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct VideoLine {
    video: String,
    composite: String,
    split: Split,
}

/// Writes the bundle as plain files under `dir`.
///
/// Layout: `config.toml`, `vocab.tsv`, `lexicon.tsv`, `videos.csv`,
/// `intervals.jsonl`, `interval_features.csv` or `interval_scores.csv`,
/// `planted_weights.csv` and `scripts/<composite>/NNNN.txt`.
pub fn write_bundle(bundle: &SyntheticBundle, dir: &Path) -> Result<()> {
    let toml = toml::to_string(&bundle.config).map_err(|e| Error::Format(e.to_string()))?;
    util::write_string(&dir.join("config.toml"), &toml)?;
    util::write_string(&dir.join("vocab.tsv"), &bundle.vocab.to_tsv())?;
    util::write_string(&dir.join("lexicon.tsv"), &bundle.lexicon.to_tsv())?;
    bundle.planted.save_csv(&dir.join("planted_weights.csv"))?;
    bundle.scripts.write_dir(&dir.join("scripts"))?;

    let labels = bundle.vocab.labels();
    let mut videos = csv::Writer::from_writer(Vec::new());
    let mut jsonl = String::new();
    let mut table = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = match bundle.config.output {
        SyntheticOutput::Features => (0..bundle.config.feature_dim).map(|d| format!("x{d}")).collect(),
        SyntheticOutput::Scores => labels.clone(),
    };
    table.write_record(["video", "interval"].iter().map(|s| s.to_string()).chain(header))?;
    for v in &bundle.videos {
        videos.serialize(VideoLine {
            video: v.id.clone(),
            composite: bundle.composites[v.composite].clone(),
            split: v.split,
        })?;
        for (t, iv) in v.intervals.iter().enumerate() {
            jsonl.push_str(&serde_json::to_string(&IntervalLine {
                video: v.id.clone(),
                start_frame: iv.start_frame,
                end_frame: iv.end_frame,
                attributes: iv.attributes.iter().map(|&i| labels[i].clone()).collect(),
                composite: bundle.composites[v.composite].clone(),
            })?);
            jsonl.push('\n');
            let values: Vec<f64> = match (&v.features, &v.scores) {
                (Some(f), _) => f[t].clone(),
                (None, Some(s)) => s.column(t),
                (None, None) => return Err(Error::Format(format!("video `{}` has neither features nor scores", v.id))),
            };
            table.write_record([v.id.clone(), t.to_string()].into_iter().chain(values.iter().map(|x| util::fmt_sig9(*x))))?;
        }
    }
    let finish = |w: csv::Writer<Vec<u8>>| -> Result<String> {
        Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Format(e.to_string()))?).expect("utf-8"))
    };
    util::write_string(&dir.join("videos.csv"), &finish(videos)?)?;
    util::write_string(&dir.join("intervals.jsonl"), &jsonl)?;
    let table_name = match bundle.config.output {
        SyntheticOutput::Features => "interval_features.csv",
        SyntheticOutput::Scores => "interval_scores.csv",
    };
    util::write_string(&dir.join(table_name), &finish(table)?)
}

/// Reads a bundle written by [`write_bundle`].
pub fn load_bundle(dir: &Path) -> Result<SyntheticBundle> {
    let config: SyntheticConfig =
        toml::from_str(&util::read_to_string(&dir.join("config.toml"))?).map_err(|e| Error::config("config.toml", e.to_string()))?;
    let vocab = AttributeVocab::load_tsv(&dir.join("vocab.tsv"))?;
    let lexicon = SynonymLexicon::load_tsv(&dir.join("lexicon.tsv"))?;
    let planted = WeightMatrix::load_csv(&dir.join("planted_weights.csv"))?;
    let scripts = ScriptCorpus::load_dir(&dir.join("scripts"))?;
    let composites = planted.row_labels.clone();
    let comp_index = |name: &str| {
        composites
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Format(format!("unknown composite `{name}`")))
    };

    let mut r = csv::Reader::from_path(dir.join("videos.csv"))?;
    let mut videos = Vec::new();
    for line in r.deserialize::<VideoLine>() {
        let line = line?;
        videos.push(VideoRecord {
            id: line.video,
            composite: comp_index(&line.composite)?,
            split: line.split,
            intervals: Vec::new(),
            features: None,
            scores: None,
        });
    }
    let video_index = |id: &str, videos: &[VideoRecord]| {
        videos
            .iter()
            .position(|v| v.id == id)
            .ok_or_else(|| Error::Format(format!("unknown video `{id}`")))
    };
    let path = dir.join("intervals.jsonl");
    for (k, line) in util::read_to_string(&path)?.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let rec: IntervalLine = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.clone(),
            line: k + 1,
            msg: e.to_string(),
        })?;
        let v = video_index(&rec.video, &videos)?;
        let attributes = rec
            .attributes
            .iter()
            .map(|l| vocab.position(l).ok_or_else(|| Error::Format(format!("unknown attribute `{l}`"))))
            .collect::<Result<Vec<_>>>()?;
        videos[v].intervals.push(IntervalRecord {
            start_frame: rec.start_frame,
            end_frame: rec.end_frame,
            attributes,
        });
    }

    let (table, is_features) = match config.output {
        SyntheticOutput::Features => ("interval_features.csv", true),
        SyntheticOutput::Scores => ("interval_scores.csv", false),
    };
    let mut rows: Vec<Vec<Vec<f64>>> = vec![Vec::new(); videos.len()];
    let table_path = dir.join(table);
    let mut r = csv::Reader::from_path(&table_path)?;
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let v = video_index(rec.get(0).unwrap_or_default(), &videos)?;
        let vals = rec
            .iter()
            .skip(2)
            .map(|s| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    path: table_path.clone(),
                    line: k + 2,
                    msg: e.to_string(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows[v].push(vals);
    }
    for (v, cols) in videos.iter_mut().zip(rows) {
        if cols.len() != v.intervals.len() {
            return Err(Error::Format(format!("video `{}`: {} table rows for {} intervals", v.id, cols.len(), v.intervals.len())));
        }
        if is_features {
            v.features = Some(cols);
        } else {
            v.scores = Some(ScoreMatrix::from_columns(vocab.labels(), v.interval_ids(), &cols)?);
        }
    }
    Ok(SyntheticBundle {
        config,
        vocab,
        composites,
        videos,
        planted,
        scripts,
        lexicon,
    })
}
