use serde::{Deserialize, Serialize};

use super::lexicon::SynonymLexicon;
use super::vocab::AttributeKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    #[default]
    Literal,
    Synonym,
}

impl std::str::FromStr for MatchMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "literal" => Ok(MatchMode::Literal),
            "synonym" | "wordnet" => Ok(MatchMode::Synonym),
            _ => Err(crate::Error::config("match_mode", format!("unknown mode `{s}`"))),
        }
    }
}

fn split_pattern(label: &str) -> Vec<&str> {
    label.split(' ').filter(|s| !s.is_empty()).collect()
}

fn matches_at(tokens: &[String], at: usize, pattern: &[&str], used: &[bool]) -> bool {
    at + pattern.len() <= tokens.len()
        && pattern
            .iter()
            .enumerate()
            .all(|(k, p)| !used[at + k] && tokens[at + k] == *p)
}

/// Greedy left-to-right scan; every match marks its token positions as used.
fn greedy_scan(tokens: &[String], patterns: &[Vec<&str>], used: &mut [bool]) -> usize {
    let mut count = 0;
    let mut at = 0;
    while at < tokens.len() {
        let hit = patterns
            .iter()
            .filter(|p| !p.is_empty())
            .find(|p| matches_at(tokens, at, p, used));
        match hit {
            Some(p) => {
                used[at..at + p.len()].iter_mut().for_each(|u| *u = true);
                count += 1;
                at += p.len();
            }
            None => at += 1,
        }
    }
    count
}

/// Counts occurrences of a normalized attribute label in a token list.
///
/// Multi-word labels match as contiguous, non-overlapping n-grams. In
/// synonym mode the label's own occurrences are claimed first, then
/// lexicon synonyms of the matching part of speech are counted on the
/// remaining positions (longest synonym first), so no token position is
/// counted twice and the result never falls below the literal count.
pub fn match_count(
    label: &str,
    kind: AttributeKind,
    tokens: &[String],
    lexicon: &SynonymLexicon,
    mode: MatchMode,
) -> usize {
    let mut used = vec![false; tokens.len()];
    let literal = greedy_scan(tokens, &[split_pattern(label)], &mut used);
    if mode == MatchMode::Literal {
        return literal;
    }
    let mut synonyms: Vec<Vec<&str>> = lexicon
        .synonyms(label, kind)
        .iter()
        .map(|s| split_pattern(s))
        .collect();
    synonyms.sort_by(|a, b| b.len().cmp(&a.len()));
    literal + greedy_scan(tokens, &synonyms, &mut used)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::lexicon::PartOfSpeech;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn lex() -> SynonymLexicon {
        let mut l = SynonymLexicon::new();
        l.insert("wash", PartOfSpeech::Verb, &["rinse"]).unwrap();
        l.insert("cut apart", PartOfSpeech::Verb, &["halve", "cut"]).unwrap();
        l.insert("wash", PartOfSpeech::Noun, &["laundry"]).unwrap();
        l
    }

    #[test]
    fn literal_single_token() {
        let n = match_count(
            "cucumber",
            AttributeKind::Object,
            &toks("wash the cucumber peel the cucumber"),
            &SynonymLexicon::new(),
            MatchMode::Literal,
        );
        assert_eq!(n, 2);
    }

    #[test]
    fn literal_ngram() {
        let n = match_count(
            "cut apart",
            AttributeKind::Activity,
            &toks("cut apart the bun"),
            &SynonymLexicon::new(),
            MatchMode::Literal,
        );
        assert_eq!(n, 1);
    }

    #[test]
    fn ngram_matches_do_not_overlap() {
        let n = match_count(
            "a a",
            AttributeKind::Object,
            &toks("a a a"),
            &SynonymLexicon::new(),
            MatchMode::Literal,
        );
        assert_eq!(n, 1);
    }

    #[test]
    fn synonym_adds_verbal_synonyms() {
        // rinse (synonym) + wash (label)
        let n = match_count(
            "wash",
            AttributeKind::Activity,
            &toks("rinse then wash"),
            &lex(),
            MatchMode::Synonym,
        );
        assert_eq!(n, 2);
    }

    #[test]
    fn synonym_pos_must_match_kind() {
        let n = match_count(
            "wash",
            AttributeKind::Object,
            &toks("rinse then wash"),
            &lex(),
            MatchMode::Synonym,
        );
        assert_eq!(n, 1);
    }

    #[test]
    fn synonym_positions_claimed_once() {
        // "cut" inside "cut apart" is already claimed by the label itself
        let n = match_count(
            "cut apart",
            AttributeKind::Activity,
            &toks("cut apart then cut and halve"),
            &lex(),
            MatchMode::Synonym,
        );
        assert_eq!(n, 3);
    }

    #[test]
    fn absent_from_lexicon_is_literal() {
        let t = toks("peel the peel");
        let a = match_count("peel", AttributeKind::Activity, &t, &lex(), MatchMode::Synonym);
        let b = match_count("peel", AttributeKind::Activity, &t, &lex(), MatchMode::Literal);
        assert_eq!((a, b), (2, 2));
    }

    fn token_list() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec(
            prop::sample::select(vec!["wash", "rinse", "cut", "apart", "halve", "the", "a"]),
            0..30,
        )
        .prop_map(|v| v.into_iter().map(String::from).collect())
    }

    proptest! {
        #[test]
        fn literal_never_exceeds_synonym(tokens in token_list(), which in 0usize..3) {
            let (label, kind) = [("wash", AttributeKind::Activity), ("cut apart", AttributeKind::Activity), ("the", AttributeKind::Object)][which];
            let lit = match_count(label, kind, &tokens, &lex(), MatchMode::Literal);
            let syn = match_count(label, kind, &tokens, &lex(), MatchMode::Synonym);
            prop_assert!(lit <= syn);
        }

        #[test]
        fn appending_tokens_is_monotone(tokens in token_list(), extra in token_list(), which in 0usize..2) {
            let label = ["wash", "cut apart"][which];
            let mut longer = tokens.clone();
            longer.extend(extra);
            let before = match_count(label, AttributeKind::Activity, &tokens, &lex(), MatchMode::Literal);
            let after = match_count(label, AttributeKind::Activity, &longer, &lex(), MatchMode::Literal);
            prop_assert!(after >= before);
            // single-token label with single-token synonyms
            let before = match_count("wash", AttributeKind::Activity, &tokens, &lex(), MatchMode::Synonym);
            let after = match_count("wash", AttributeKind::Activity, &longer, &lex(), MatchMode::Synonym);
            prop_assert!(after >= before);
        }
    }
}
