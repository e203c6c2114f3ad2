const STRIPPED: &[char] = &['.', ',', ';', ':', '!', '?', '(', ')', '"', '\''];

/// Splits free text into lowercase tokens.
///
/// Punctuation in `.,;:!?()"'` is removed, hyphens act as token boundaries
/// and empty tokens are dropped.
pub fn tokenize_document(raw_text: &str) -> Vec<String> {
    raw_text
        .to_lowercase()
        .replace('-', " ")
        .split_whitespace()
        .map(|tok| tok.chars().filter(|c| !STRIPPED.contains(c)).collect::<String>())
        .filter(|tok| !tok.is_empty())
        .collect()
}

/// Canonical form of an attribute label: lowercase, hyphens as spaces, single spaces.
pub fn normalize_label(label: &str) -> String {
    label
        .to_lowercase()
        .replace('-', " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn sentence_is_lowercased_and_stripped() {
        assert_eq!(
            tokenize_document("Wash the cucumber."),
            toks(&["wash", "the", "cucumber"])
        );
    }

    #[test]
    fn hyphen_splits() {
        assert_eq!(tokenize_document("cutting-board"), toks(&["cutting", "board"]));
    }

    #[test]
    fn empty_input() {
        assert!(tokenize_document("").is_empty());
        assert!(tokenize_document(" ... !! ").is_empty());
    }

    #[test]
    fn quotes_and_parens() {
        assert_eq!(
            tokenize_document("(Peel) the \"onion\", then: dice!"),
            toks(&["peel", "the", "onion", "then", "dice"])
        );
    }

    #[test]
    fn label_normalization() {
        assert_eq!(normalize_label("  Cutting-Board "), "cutting board");
        assert_eq!(normalize_label("cut   apart"), "cut apart");
    }
}
