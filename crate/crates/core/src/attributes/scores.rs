use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::linear::LinearModelSet;
use crate::util;

const BINARY_MAGIC: &[u8; 4] = b"ASM1";

/// Attribute × interval confidence matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub labels: Vec<String>,
    pub interval_ids: Vec<String>,
    /// `values[i][t]`, one row per attribute.
    values: Vec<Vec<f64>>,
    /// Rows filled with the floor value because their classifier was not trained.
    #[serde(default)]
    pub flagged_rows: Vec<usize>,
}

impl ScoreMatrix {
    pub fn new(labels: Vec<String>, interval_ids: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        ensure_dim(labels.len(), values.len())?;
        if interval_ids.is_empty() {
            return Err(Error::Degenerate("score matrix has no intervals".into()));
        }
        for row in &values {
            ensure_dim(interval_ids.len(), row.len())?;
            util::check_finite(row, "score matrix")?;
        }
        Ok(Self {
            labels,
            interval_ids,
            values,
            flagged_rows: Vec::new(),
        })
    }

    /// Builds a matrix from per-interval score columns.
    pub fn from_columns(labels: Vec<String>, interval_ids: Vec<String>, columns: &[Vec<f64>]) -> Result<Self> {
        ensure_dim(interval_ids.len(), columns.len())?;
        for c in columns {
            ensure_dim(labels.len(), c.len())?;
        }
        let values = (0..labels.len()).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
        Self::new(labels, interval_ids, values)
    }

    /// Number of attributes.
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Number of intervals.
    pub fn t(&self) -> usize {
        self.interval_ids.len()
    }

    pub fn get(&self, i: usize, t: usize) -> f64 {
        self.values[i][t]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn column(&self, t: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[t]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.t()).map(|t| self.column(t)).collect()
    }

    /// CSV: attribute labels as rows, interval ids as columns.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["attribute".to_string()];
        header.extend(self.interval_ids.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.values) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|v| format!("{v}")));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        util::write_string(path, &self.to_csv()?)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let ids: Vec<String> = r.headers()?.iter().skip(1).map(String::from).collect();
        let mut labels = Vec::new();
        let mut values = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let rec = rec?;
            labels.push(rec.get(0).unwrap_or_default().to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|e| Error::Parse {
                        path: path.to_path_buf(),
                        line: k + 2,
                        msg: e.to_string(),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            values.push(row);
        }
        Self::new(labels, ids, values)
    }

    /// Binary layout: magic `ASM1`, then little-endian u64 n, u64 T, u64 vocab
    /// fingerprint, followed by n·T f64 values in row-major order.
    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(28 + 8 * self.n() * self.t());
        out.extend_from_slice(BINARY_MAGIC);
        out.extend_from_slice(&(self.n() as u64).to_le_bytes());
        out.extend_from_slice(&(self.t() as u64).to_le_bytes());
        out.extend_from_slice(&label_fingerprint(&self.labels).to_le_bytes());
        for v in self.values.iter().flatten() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Decodes [`ScoreMatrix::to_binary`] output; `labels` must hash to the stored fingerprint.
    pub fn from_binary(bytes: &[u8], labels: &[String]) -> Result<Self> {
        let bad = |msg: &str| Error::Format(format!("binary score matrix: {msg}"));
        if bytes.len() < 28 || &bytes[..4] != BINARY_MAGIC {
            return Err(bad("missing header"));
        }
        let word = |k: usize| u64::from_le_bytes(bytes[4 + 8 * k..12 + 8 * k].try_into().expect("8 bytes"));
        let (n, t, hash) = (word(0) as usize, word(1) as usize, word(2));
        if hash != label_fingerprint(labels) || n != labels.len() {
            return Err(bad("vocabulary fingerprint does not match"));
        }
        if bytes.len() != 28 + 8 * n * t {
            return Err(bad("truncated payload"));
        }
        let vals: Vec<f64> = bytes[28..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let values = vals.chunks(t.max(1)).take(n).map(<[f64]>::to_vec).collect();
        Self::new(labels.to_vec(), (0..t).map(|k| k.to_string()).collect(), values)
    }
}

pub fn label_fingerprint(labels: &[String]) -> u64 {
    util::fnv1a64(labels.iter().map(|l| l.as_bytes()))
}

/// Scores every interval feature with every attribute classifier.
///
/// Rows of skipped attributes hold the configured floor and are flagged.
pub fn score_intervals(models: &LinearModelSet, features: &[Vec<f64>], interval_ids: Vec<String>) -> Result<ScoreMatrix> {
    ensure_dim(features.len(), interval_ids.len())?;
    let columns = features.iter().map(|x| models.score(x)).collect::<Result<Vec<_>>>()?;
    let mut s = ScoreMatrix::from_columns(models.labels.clone(), interval_ids, &columns)?;
    s.flagged_rows = models.skipped.clone();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{LinearConfig, LinearModel};

    fn model(w: Vec<f64>, b: f64, mean: f64, std: f64) -> LinearModel {
        LinearModel {
            weights: w,
            bias: b,
            mean,
            std,
            constant: false,
            objective_trace: vec![],
            iterate_trace: vec![],
        }
    }

    fn set(models: Vec<Option<LinearModel>>, znorm: bool) -> LinearModelSet {
        let n = models.len();
        LinearModelSet {
            dim: 2,
            labels: (0..n).map(|i| format!("a{i}")).collect(),
            config: LinearConfig { znorm, ..LinearConfig::default() },
            skipped: (0..n).filter(|&i| models[i].is_none()).collect(),
            models,
        }
    }

    #[test]
    fn dot_product_score() {
        let s = score_intervals(&set(vec![Some(model(vec![1.0, 0.0], 0.0, 0.0, 1.0))], false), &[vec![3.0, 5.0]], vec!["t0".into()]).unwrap();
        assert_eq!(s.get(0, 0), 3.0);
    }

    #[test]
    fn znormalized_score() {
        let s = score_intervals(&set(vec![Some(model(vec![1.0, 0.0], 0.0, 3.0, 2.0))], true), &[vec![5.0, 0.0]], vec!["t0".into()]).unwrap();
        assert_eq!(s.get(0, 0), 1.0);
    }

    #[test]
    fn skipped_rows_use_floor() {
        let s = score_intervals(
            &set(vec![Some(model(vec![1.0, 1.0], 0.0, 0.0, 1.0)), None], true),
            &[vec![1.0, 1.0], vec![0.0, 0.0]],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert_eq!(s.row(1), [-10.0, -10.0]);
        assert_eq!(s.flagged_rows, [1]);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(score_intervals(&set(vec![None], true), &[vec![1.0]], vec!["t".into()]).is_err());
    }

    #[test]
    fn affine_equivariance_without_bias() {
        let m = set(vec![Some(model(vec![0.5, -2.0], 0.0, 0.0, 1.0))], false);
        let x = vec![vec![1.5, 0.25]];
        let a = score_intervals(&m, &x, vec!["t".into()]).unwrap();
        let b = score_intervals(&m, &[vec![4.5, 0.75]], vec!["t".into()]).unwrap();
        assert!((3.0 * a.get(0, 0) - b.get(0, 0)).abs() < 1e-12);
    }

    #[test]
    fn binary_and_csv_round_trip() {
        let s = ScoreMatrix::new(
            vec!["cut".into(), "knife".into()],
            vec!["0".into(), "1".into(), "2".into()],
            vec![vec![0.5, -1.25, 3.0], vec![1e-9, 2.0, -0.0]],
        )
        .unwrap();
        let back = ScoreMatrix::from_binary(&s.to_binary(), &s.labels).unwrap();
        assert_eq!(back, s);
        assert!(ScoreMatrix::from_binary(&s.to_binary(), &["cut".into(), "spoon".into()]).is_err());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        s.save_csv(&p).unwrap();
        assert_eq!(ScoreMatrix::load_csv(&p).unwrap(), s);
    }

    #[test]
    fn rejects_empty_and_nan() {
        assert!(ScoreMatrix::new(vec!["a".into()], vec![], vec![vec![]]).is_err());
        assert!(ScoreMatrix::new(vec!["a".into()], vec!["t".into()], vec![vec![f64::NAN]]).is_err());
    }
}
