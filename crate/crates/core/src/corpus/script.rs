use std::collections::BTreeMap;
use std::path::Path;

use super::tokenize::tokenize_document;
use crate::error::{Error, Result};
use crate::util;

/// One crowd-written instruction sequence: ordered steps plus their tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptSequence {
    pub steps: Vec<String>,
    pub tokens: Vec<Vec<String>>,
}

impl ScriptSequence {
    /// Builds a sequence from raw step strings; blank steps are dropped.
    pub fn new<S: AsRef<str>>(steps: &[S]) -> Result<Self> {
        let steps: Vec<String> = steps
            .iter()
            .map(|s| s.as_ref().trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if steps.is_empty() {
            return Err(Error::Format("script sequence has no non-empty step".into()));
        }
        let tokens = steps.iter().map(|s| tokenize_document(s)).collect();
        Ok(Self { steps, tokens })
    }
}

/// Script sequences grouped by scenario (composite activity id).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScriptCorpus {
    scenarios: BTreeMap<String, Vec<ScriptSequence>>,
}

impl ScriptCorpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_sequence(&mut self, scenario: &str, seq: ScriptSequence) {
        self.scenarios.entry(scenario.to_string()).or_default().push(seq);
    }

    pub fn scenarios(&self) -> impl Iterator<Item = (&str, &[ScriptSequence])> {
        self.scenarios.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn scenario_ids(&self) -> Vec<String> {
        self.scenarios.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    /// Loads `<root>/<scenario>/<sequence file>` with one step per line.
    /// Scenarios and files are read in lexicographic order.
    pub fn load_dir(root: &Path) -> Result<Self> {
        let mut corpus = Self::new();
        for scenario_dir in sorted_entries(root)? {
            if !scenario_dir.is_dir() {
                continue;
            }
            let scenario = file_name(&scenario_dir);
            for file in sorted_entries(&scenario_dir)? {
                if !file.is_file() {
                    continue;
                }
                let text = util::read_to_string(&file)?;
                let lines: Vec<&str> = text.lines().collect();
                let seq = ScriptSequence::new(&lines).map_err(|e| Error::Parse {
                    path: file.clone(),
                    line: 1,
                    msg: e.to_string(),
                })?;
                corpus.add_sequence(&scenario, seq);
            }
        }
        if corpus.is_empty() {
            return Err(Error::Format(format!(
                "no scenario directories with sequences under {}",
                root.display()
            )));
        }
        Ok(corpus)
    }

    pub fn write_dir(&self, root: &Path) -> Result<()> {
        for (scenario, seqs) in &self.scenarios {
            for (k, seq) in seqs.iter().enumerate() {
                let path = root.join(scenario).join(format!("{k:04}.txt"));
                let mut body = seq.steps.join("\n");
                body.push('\n');
                util::write_string(&path, &body)?;
            }
        }
        Ok(())
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    out.sort();
    Ok(out)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Concatenates every step of every sequence of a scenario into one token document.
pub fn build_documents(corpus: &ScriptCorpus) -> BTreeMap<String, Vec<String>> {
    corpus
        .scenarios()
        .map(|(id, seqs)| {
            let doc = seqs
                .iter()
                .flat_map(|s| s.tokens.iter().flatten().cloned())
                .collect();
            (id.to_string(), doc)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(steps: &[&str]) -> ScriptSequence {
        ScriptSequence::new(steps).unwrap()
    }

    #[test]
    fn documents_preserve_order() {
        let mut c = ScriptCorpus::new();
        c.add_sequence("salad", seq(&["a b", "c"]));
        c.add_sequence("salad", seq(&["d"]));
        let docs = build_documents(&c);
        assert_eq!(docs["salad"], ["a", "b", "c", "d"]);
    }

    #[test]
    fn two_by_two_sequences() {
        let mut c = ScriptCorpus::new();
        c.add_sequence("z", seq(&["wash it", "peel it"]));
        c.add_sequence("z", seq(&["cut", "eat now"]));
        let docs = build_documents(&c);
        assert_eq!(docs["z"], ["wash", "it", "peel", "it", "cut", "eat", "now"]);
    }

    #[test]
    fn single_step() {
        let mut c = ScriptCorpus::new();
        c.add_sequence("z", seq(&["Take the knife."]));
        assert_eq!(build_documents(&c)["z"], ["take", "the", "knife"]);
    }

    #[test]
    fn empty_sequence_rejected() {
        assert!(ScriptSequence::new(&["", "   "]).is_err());
    }

    #[test]
    fn dir_round_trip() {
        let mut c = ScriptCorpus::new();
        c.add_sequence("b", seq(&["x y", "z"]));
        c.add_sequence("a", seq(&["q"]));
        c.add_sequence("a", seq(&["r s"]));
        let dir = tempfile::tempdir().unwrap();
        c.write_dir(dir.path()).unwrap();
        let back = ScriptCorpus::load_dir(dir.path()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.scenario_ids(), ["a", "b"]);
    }
}
