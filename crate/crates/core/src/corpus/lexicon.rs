use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tokenize::normalize_label;
use super::vocab::AttributeKind;
use crate::error::{Error, Result};
use crate::util;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartOfSpeech {
    Verb,
    Noun,
}

impl PartOfSpeech {
    /// Verbs expand activities, nouns expand objects.
    pub fn for_kind(kind: AttributeKind) -> Self {
        match kind {
            AttributeKind::Activity => PartOfSpeech::Verb,
            AttributeKind::Object => PartOfSpeech::Noun,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_lowercase().as_str() {
            "verb" | "v" => Some(PartOfSpeech::Verb),
            "noun" | "n" => Some(PartOfSpeech::Noun),
            _ => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            PartOfSpeech::Verb => "verb",
            PartOfSpeech::Noun => "noun",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconRow {
    pub headword: String,
    pub part_of_speech: PartOfSpeech,
    pub synonyms: Vec<String>,
}

/// Synonym sets keyed by (headword, part of speech); stands in for a WordNet lookup.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynonymLexicon {
    rows: Vec<LexiconRow>,
    index: HashMap<(String, PartOfSpeech), usize>,
}

impl SynonymLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a row. Headwords and synonyms are normalized; duplicate synonyms
    /// and synonyms equal to the headword are dropped. A repeated
    /// (headword, part of speech) pair is an error.
    pub fn insert(&mut self, headword: &str, pos: PartOfSpeech, synonyms: &[&str]) -> Result<()> {
        let headword = normalize_label(headword);
        if headword.is_empty() {
            return Err(Error::Format("empty lexicon headword".into()));
        }
        let key = (headword.clone(), pos);
        if self.index.contains_key(&key) {
            return Err(Error::Format(format!(
                "duplicate lexicon headword `{headword}` ({})",
                pos.as_str()
            )));
        }
        let mut syns: Vec<String> = Vec::new();
        for s in synonyms {
            let s = normalize_label(s);
            if !s.is_empty() && s != headword && !syns.contains(&s) {
                syns.push(s);
            }
        }
        self.index.insert(key, self.rows.len());
        self.rows.push(LexiconRow {
            headword,
            part_of_speech: pos,
            synonyms: syns,
        });
        Ok(())
    }

    pub fn rows(&self) -> &[LexiconRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Synonyms of `label` whose part of speech matches `kind`; empty when absent.
    pub fn synonyms(&self, label: &str, kind: AttributeKind) -> &[String] {
        let key = (normalize_label(label), PartOfSpeech::for_kind(kind));
        self.index
            .get(&key)
            .map(|&i| self.rows[i].synonyms.as_slice())
            .unwrap_or(&[])
    }

    /// Reads `headword<TAB>pos<TAB>syn1,syn2,...` lines.
    pub fn load_tsv(path: &Path) -> Result<Self> {
        let text = util::read_to_string(path)?;
        let mut lex = Self::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg,
            };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 2 || cols.len() > 3 {
                return Err(parse_err("expected `headword<TAB>pos<TAB>synonyms`".into()));
            }
            let pos = PartOfSpeech::parse(cols[1])
                .ok_or_else(|| parse_err(format!("unknown part of speech `{}`", cols[1])))?;
            let syns: Vec<&str> = cols
                .get(2)
                .map(|s| s.split(',').map(str::trim).filter(|s| !s.is_empty()).collect())
                .unwrap_or_default();
            lex.insert(cols[0], pos, &syns).map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(lex)
    }

    pub fn to_tsv(&self) -> String {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{}\t{}\t{}\n",
                    r.headword,
                    r.part_of_speech.as_str(),
                    r.synonyms.join(",")
                )
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_respects_part_of_speech() {
        let mut lex = SynonymLexicon::new();
        lex.insert("cut", PartOfSpeech::Verb, &["slice", "chop", "slice"]).unwrap();
        lex.insert("cut", PartOfSpeech::Noun, &["incision"]).unwrap();
        assert_eq!(lex.synonyms("cut", AttributeKind::Activity), ["slice", "chop"]);
        assert_eq!(lex.synonyms("cut", AttributeKind::Object), ["incision"]);
        assert!(lex.synonyms("peel", AttributeKind::Activity).is_empty());
    }

    #[test]
    fn duplicate_headword_rejected() {
        let mut lex = SynonymLexicon::new();
        lex.insert("wash", PartOfSpeech::Verb, &["rinse"]).unwrap();
        assert!(lex.insert("Wash", PartOfSpeech::Verb, &["clean"]).is_err());
    }

    #[test]
    fn parses_tsv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lex.tsv");
        std::fs::write(&p, "wash\tverb\trinse, clean\n# note\ncucumber\tnoun\n").unwrap();
        let lex = SynonymLexicon::load_tsv(&p).unwrap();
        assert_eq!(lex.synonyms("wash", AttributeKind::Activity), ["rinse", "clean"]);
        assert!(lex.synonyms("cucumber", AttributeKind::Object).is_empty());
        std::fs::write(&p, "wash\tadverb\trinse\n").unwrap();
        assert!(matches!(SynonymLexicon::load_tsv(&p), Err(Error::Parse { line: 1, .. })));
    }
}
