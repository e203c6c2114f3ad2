use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::tokenize::normalize_label;
use crate::error::{Error, Result};
use crate::util;

/// Whether an attribute names a fine-grained activity or a participating object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Activity,
    Object,
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttributeKind::Activity => "activity",
            AttributeKind::Object => "object",
        })
    }
}

impl FromStr for AttributeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "activity" => Ok(AttributeKind::Activity),
            "object" => Ok(AttributeKind::Object),
            other => Err(Error::Format(format!("unknown attribute kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub label: String,
    pub kind: AttributeKind,
}

/// Ordered attribute vocabulary with label lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<VocabEntry>", into = "Vec<VocabEntry>")]
pub struct AttributeVocab {
    entries: Vec<VocabEntry>,
    index: HashMap<String, usize>,
}

impl From<Vec<VocabEntry>> for AttributeVocab {
    fn from(entries: Vec<VocabEntry>) -> Self {
        let mut vocab = AttributeVocab::default();
        for e in entries {
            // duplicates are rejected by `push`; deserialized input keeps the first
            let _ = vocab.push(&e.label, e.kind);
        }
        vocab
    }
}

impl From<AttributeVocab> for Vec<VocabEntry> {
    fn from(v: AttributeVocab) -> Self {
        v.entries
    }
}

impl AttributeVocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, AttributeKind)>) -> Result<Self> {
        let mut vocab = Self::new();
        for (label, kind) in pairs {
            vocab.push(label, kind)?;
        }
        Ok(vocab)
    }

    /// Appends a label; fails if its normalized form is empty or already present.
    pub fn push(&mut self, label: &str, kind: AttributeKind) -> Result<usize> {
        let label = normalize_label(label);
        if label.is_empty() {
            return Err(Error::Format("empty attribute label".into()));
        }
        if self.index.contains_key(&label) {
            return Err(Error::Format(format!("duplicate attribute label `{label}`")));
        }
        let idx = self.entries.len();
        self.index.insert(label.clone(), idx);
        self.entries.push(VocabEntry { label, kind });
        Ok(idx)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn get(&self, idx: usize) -> Option<&VocabEntry> {
        self.entries.get(idx)
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.index.get(&normalize_label(label)).copied()
    }

    pub fn labels(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.label.clone()).collect()
    }

    pub fn indices_of_kind(&self, kind: AttributeKind) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.entries[i].kind == kind).collect()
    }

    /// Hash over the ordered labels, used to tag binary score files.
    pub fn fingerprint(&self) -> u64 {
        util::fnv1a64(self.entries.iter().map(|e| e.label.as_bytes()))
    }

    /// Reads `label<TAB>kind` lines; blank lines and `#` comments are skipped.
    pub fn load_tsv(path: &Path) -> Result<Self> {
        let text = util::read_to_string(path)?;
        let mut vocab = Self::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg,
            };
            let (label, kind) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected `label<TAB>kind`".into()))?;
            let kind: AttributeKind = kind.parse().map_err(|e: Error| parse_err(e.to_string()))?;
            vocab.push(label, kind).map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(vocab)
    }

    pub fn to_tsv(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{}\t{}\n", e.label, e.kind))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_and_rejects_duplicates() {
        let mut v = AttributeVocab::new();
        v.push("Cutting-Board", AttributeKind::Object).unwrap();
        assert_eq!(v.position("cutting board"), Some(0));
        assert!(v.push("cutting  board", AttributeKind::Object).is_err());
        assert!(v.push("  ", AttributeKind::Object).is_err());
    }

    #[test]
    fn tsv_round_trip() {
        let v = AttributeVocab::from_pairs([
            ("wash", AttributeKind::Activity),
            ("cucumber", AttributeKind::Object),
        ])
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("vocab.tsv");
        std::fs::write(&p, v.to_tsv()).unwrap();
        assert_eq!(AttributeVocab::load_tsv(&p).unwrap(), v);
    }

    #[test]
    fn bad_kind_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("vocab.tsv");
        std::fs::write(&p, "wash\tactivity\nknife\ttool\n").unwrap();
        match AttributeVocab::load_tsv(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
