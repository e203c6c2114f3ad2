use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lexicon::SynonymLexicon;
use super::matching::{match_count, MatchMode};
use super::vocab::AttributeVocab;
use crate::error::{Error, Result};
use crate::util;

/// Composite × attribute association weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    pub values: Vec<Vec<f64>>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub normalized: bool,
    /// Rows that were all-zero at normalization time.
    pub empty_rows: Vec<usize>,
}

/// How association weights are derived from the documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Freq,
    #[default]
    Tfidf,
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "freq" => Ok(Weighting::Freq),
            "tfidf" => Ok(Weighting::Tfidf),
            _ => Err(Error::config("weighting", format!("unknown weighting `{s}`"))),
        }
    }
}

impl WeightMatrix {
    pub fn new(values: Vec<Vec<f64>>, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        if values.len() != row_labels.len() {
            return Err(Error::DimensionMismatch {
                expected: row_labels.len(),
                got: values.len(),
            });
        }
        for row in &values {
            crate::error::ensure_dim(col_labels.len(), row.len())?;
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Format("weights must be finite and non-negative".into()));
            }
        }
        Ok(Self {
            values,
            row_labels,
            col_labels,
            normalized: false,
            empty_rows: Vec::new(),
        })
    }

    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn row(&self, z: usize) -> &[f64] {
        &self.values[z]
    }

    pub fn row_index(&self, label: &str) -> Option<usize> {
        self.row_labels.iter().position(|l| l == label)
    }

    /// CSV with a header of attribute labels and composite ids in the first column.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["composite".to_string()];
        header.extend(self.col_labels.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.row_labels.iter().zip(&self.values) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|v| util::fmt_sig9(*v)));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        util::write_string(path, &self.to_csv()?)
    }

    /// Loads a weight CSV; the `normalized` flag is inferred from the row sums.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let col_labels: Vec<String> = r.headers()?.iter().skip(1).map(String::from).collect();
        let mut row_labels = Vec::new();
        let mut values = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse_err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: k + 2,
                msg,
            };
            row_labels.push(rec.get(0).unwrap_or_default().to_string());
            let row: Vec<f64> = rec
                .iter()
                .skip(1)
                .map(|s| s.trim().parse::<f64>().map_err(|e| parse_err(e.to_string())))
                .collect::<Result<_>>()?;
            values.push(row);
        }
        let mut w = Self::new(values, row_labels, col_labels)?;
        let sums_ok = w
            .values
            .iter()
            .all(|r| r.iter().sum::<f64>() == 0.0 || (r.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        if sums_ok {
            w.normalized = true;
            w.empty_rows = (0..w.rows()).filter(|&z| w.values[z].iter().all(|v| *v == 0.0)).collect();
        }
        Ok(w)
    }
}

fn count_matrix(
    documents: &BTreeMap<String, Vec<String>>,
    vocab: &AttributeVocab,
    lexicon: &SynonymLexicon,
    mode: MatchMode,
) -> Vec<Vec<f64>> {
    documents
        .values()
        .map(|doc| {
            vocab
                .entries()
                .iter()
                .map(|e| match_count(&e.label, e.kind, doc, lexicon, mode) as f64)
                .collect()
        })
        .collect()
}

fn assemble(values: Vec<Vec<f64>>, documents: &BTreeMap<String, Vec<String>>, vocab: &AttributeVocab) -> WeightMatrix {
    WeightMatrix {
        values,
        row_labels: documents.keys().cloned().collect(),
        col_labels: vocab.labels(),
        normalized: false,
        empty_rows: Vec::new(),
    }
}

/// Raw match counts of every attribute in every composite document.
pub fn freq_weights(
    documents: &BTreeMap<String, Vec<String>>,
    vocab: &AttributeVocab,
    lexicon: &SynonymLexicon,
    mode: MatchMode,
) -> WeightMatrix {
    assemble(count_matrix(documents, vocab, lexicon, mode), documents, vocab)
}

/// Term frequency times inverse document frequency with natural log.
///
/// `tfidf(a, d) = freq(a, d) * ln(|D| / df(a))`; attributes found in no
/// document get weight 0.
pub fn tfidf_weights(
    documents: &BTreeMap<String, Vec<String>>,
    vocab: &AttributeVocab,
    lexicon: &SynonymLexicon,
    mode: MatchMode,
) -> WeightMatrix {
    let counts = count_matrix(documents, vocab, lexicon, mode);
    let n_docs = counts.len() as f64;
    let doc_freq: Vec<usize> = (0..vocab.len())
        .map(|i| counts.iter().filter(|row| row[i] > 0.0).count())
        .collect();
    let values = counts
        .iter()
        .map(|row| {
            row.iter()
                .zip(&doc_freq)
                .map(|(&f, &df)| if df == 0 { 0.0 } else { f * (n_docs / df as f64).ln() })
                .collect()
        })
        .collect();
    assemble(values, documents, vocab)
}

/// Mines a weight matrix with the chosen weighting, L1-normalized.
pub fn mine_weights(
    documents: &BTreeMap<String, Vec<String>>,
    vocab: &AttributeVocab,
    lexicon: &SynonymLexicon,
    mode: MatchMode,
    weighting: Weighting,
) -> WeightMatrix {
    let raw = match weighting {
        Weighting::Freq => freq_weights(documents, vocab, lexicon, mode),
        Weighting::Tfidf => tfidf_weights(documents, vocab, lexicon, mode),
    };
    let w = normalize_l1(&raw);
    for &z in &w.empty_rows {
        log::warn!("composite `{}` has no matched attributes; its weight row is empty", w.row_labels[z]);
    }
    w
}

/// Divides each row by its sum. All-zero rows stay zero and are listed in `empty_rows`.
pub fn normalize_l1(w: &WeightMatrix) -> WeightMatrix {
    let mut out = w.clone();
    out.empty_rows.clear();
    for (z, row) in out.values.iter_mut().enumerate() {
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row.iter_mut().for_each(|v| *v /= sum);
        } else {
            out.empty_rows.push(z);
        }
    }
    out.normalized = true;
    out
}

/// Sets every nonzero weight to 1, then L1-normalizes the rows.
pub fn binarize_weights(w: &WeightMatrix) -> WeightMatrix {
    let mut bin = w.clone();
    for row in bin.values.iter_mut() {
        row.iter_mut().for_each(|v| *v = if *v != 0.0 { 1.0 } else { 0.0 });
    }
    normalize_l1(&bin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::vocab::AttributeKind;
    use proptest::prelude::*;

    fn docs(list: &[(&str, &str)]) -> BTreeMap<String, Vec<String>> {
        list.iter()
            .map(|(k, v)| (k.to_string(), v.split_whitespace().map(String::from).collect()))
            .collect()
    }

    fn wm(rows: Vec<Vec<f64>>) -> WeightMatrix {
        let cols = rows[0].len();
        let n = rows.len();
        WeightMatrix::new(
            rows,
            (0..n).map(|z| format!("z{z}")).collect(),
            (0..cols).map(|i| format!("a{i}")).collect(),
        )
        .unwrap()
    }

    #[test]
    fn freq_single_term() {
        let vocab = AttributeVocab::from_pairs([("cucumber", AttributeKind::Object)]).unwrap();
        let w = freq_weights(
            &docs(&[("z", "wash the cucumber peel the cucumber")]),
            &vocab,
            &SynonymLexicon::new(),
            MatchMode::Literal,
        );
        assert_eq!(w.values, vec![vec![2.0]]);
    }

    #[test]
    fn freq_absent_attribute_is_zero() {
        let vocab = AttributeVocab::from_pairs([("cucumber", AttributeKind::Object), ("leek", AttributeKind::Object)]).unwrap();
        let w = freq_weights(&docs(&[("z", "cucumber")]), &vocab, &SynonymLexicon::new(), MatchMode::Literal);
        assert_eq!(w.values, vec![vec![1.0, 0.0]]);
    }

    #[test]
    fn freq_matches_brute_force_on_toy_corpus() {
        let d = docs(&[
            ("a", "peel carrot peel carrot cut"),
            ("b", "cut cut bread"),
            ("c", "peel bread bread bread"),
        ]);
        let vocab = AttributeVocab::from_pairs([("peel", AttributeKind::Activity), ("bread", AttributeKind::Object)]).unwrap();
        let w = freq_weights(&d, &vocab, &SynonymLexicon::new(), MatchMode::Literal);
        let brute: Vec<Vec<f64>> = d
            .values()
            .map(|doc| {
                ["peel", "bread"]
                    .iter()
                    .map(|lab| doc.iter().filter(|t| t == lab).count() as f64)
                    .collect()
            })
            .collect();
        assert_eq!(w.values, brute);
        assert_eq!(w.row_labels, ["a", "b", "c"]);
    }

    #[test]
    fn tfidf_hand_values() {
        let d = docs(&[
            ("d1", "stir stir stir stir"),
            ("d2", "stir bowl"),
            ("d3", "bowl"),
        ]);
        let vocab = AttributeVocab::from_pairs([
            ("stir", AttributeKind::Activity),
            ("bowl", AttributeKind::Object),
            ("pan", AttributeKind::Object),
        ])
        .unwrap();
        let w = tfidf_weights(&d, &vocab, &SynonymLexicon::new(), MatchMode::Literal);
        assert!((w.values[0][0] - 4.0 * (1.5f64).ln()).abs() < 1e-12);
        assert!((w.values[0][0] - 1.6219).abs() < 1e-4);
        assert_eq!(w.values[2][2], 0.0);
    }

    #[test]
    fn tfidf_vanishes_for_ubiquitous_terms() {
        let d = docs(&[("x", "salt"), ("y", "salt salt")]);
        let vocab = AttributeVocab::from_pairs([("salt", AttributeKind::Object)]).unwrap();
        let w = tfidf_weights(&d, &vocab, &SynonymLexicon::new(), MatchMode::Literal);
        assert_eq!(w.values, vec![vec![0.0], vec![0.0]]);
    }

    #[test]
    fn normalize_examples() {
        let w = normalize_l1(&wm(vec![vec![2.0, 0.0, 3.0], vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0]]));
        assert_eq!(w.values[0], [0.4, 0.0, 0.6]);
        assert_eq!(w.values[1], [0.0, 0.0, 0.0]);
        assert_eq!(w.values[2], [1.0 / 3.0; 3]);
        assert_eq!(w.empty_rows, [1]);
        assert!(w.normalized);
        let u = normalize_l1(&wm(vec![vec![1.0; 4]]));
        assert_eq!(u.values[0], [0.25; 4]);
    }

    #[test]
    fn binarize_examples() {
        let w = binarize_weights(&wm(vec![vec![0.4, 0.0, 0.6], vec![0.0, 0.0, 7.0], vec![0.0; 3]]));
        assert_eq!(w.values[0], [0.5, 0.0, 0.5]);
        assert_eq!(w.values[1], [0.0, 0.0, 1.0]);
        assert_eq!(w.values[2], [0.0; 3]);
        assert_eq!(w.empty_rows, [2]);
    }

    #[test]
    fn csv_round_trip_keeps_nine_digits() {
        let w = normalize_l1(&wm(vec![vec![1.0, 2.0], vec![0.0, 0.0]]));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.csv");
        w.save_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("composite,a0,a1\nz0,0.333333333,0.666666667\n"));
        let back = WeightMatrix::load_csv(&p).unwrap();
        assert!(back.normalized);
        assert_eq!(back.empty_rows, [1]);
    }

    #[test]
    fn rejects_negative_values() {
        assert!(WeightMatrix::new(vec![vec![-1.0]], vec!["z".into()], vec!["a".into()]).is_err());
    }

    fn word_docs() -> impl Strategy<Value = Vec<Vec<String>>> {
        prop::collection::vec(
            prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "x"]), 0..15)
                .prop_map(|v| v.into_iter().map(String::from).collect()),
            1..5,
        )
    }

    fn vocab_abc() -> AttributeVocab {
        AttributeVocab::from_pairs([("a", AttributeKind::Activity), ("b", AttributeKind::Object), ("c", AttributeKind::Object)]).unwrap()
    }

    fn to_map(docs: Vec<Vec<String>>) -> BTreeMap<String, Vec<String>> {
        docs.into_iter().enumerate().map(|(k, d)| (format!("d{k:02}"), d)).collect()
    }

    proptest! {
        #[test]
        fn tfidf_zero_where_freq_zero(ds in word_docs()) {
            let d = to_map(ds);
            let lex = SynonymLexicon::new();
            let f = freq_weights(&d, &vocab_abc(), &lex, MatchMode::Literal);
            let t = tfidf_weights(&d, &vocab_abc(), &lex, MatchMode::Literal);
            for (fr, tr) in f.values.iter().zip(&t.values) {
                for (a, b) in fr.iter().zip(tr) {
                    if *a == 0.0 { prop_assert_eq!(*b, 0.0); }
                    prop_assert!(*b >= 0.0);
                }
            }
            if d.len() == 1 {
                prop_assert!(t.values[0].iter().all(|v| *v == 0.0));
            }
        }

        #[test]
        fn normalize_and_binarize_idempotent(rows in prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..10.0], 4), 1..6)) {
            let w = wm(rows);
            let n1 = normalize_l1(&w);
            let n2 = normalize_l1(&n1);
            for (a, b) in n1.values.iter().flatten().zip(n2.values.iter().flatten()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            for (z, row) in n1.values.iter().enumerate() {
                let s: f64 = row.iter().sum();
                prop_assert!(n1.empty_rows.contains(&z) || (s - 1.0).abs() < 1e-9);
            }
            let b1 = binarize_weights(&w);
            prop_assert_eq!(binarize_weights(&b1), b1);
        }

        #[test]
        fn scaling_document_scales_tfidf_row(ds in word_docs(), c in 2usize..4) {
            let d = to_map(ds.clone());
            let mut scaled = ds;
            let first = scaled[0].clone();
            for _ in 1..c { scaled[0].extend(first.iter().cloned()); }
            let ds2 = to_map(scaled);
            let lex = SynonymLexicon::new();
            let t1 = tfidf_weights(&d, &vocab_abc(), &lex, MatchMode::Literal);
            let t2 = tfidf_weights(&ds2, &vocab_abc(), &lex, MatchMode::Literal);
            for (a, b) in t1.values[0].iter().zip(&t2.values[0]) {
                prop_assert!((a * c as f64 - b).abs() < 1e-9);
            }
            let n1 = normalize_l1(&t1);
            let n2 = normalize_l1(&t2);
            for (a, b) in n1.values[0].iter().zip(&n2.values[0]) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
