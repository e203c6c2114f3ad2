//! Script-corpus mining: tokenization, label matching and composite/attribute weights.

mod lexicon;
mod matching;
mod script;
mod tokenize;
mod vocab;
mod weights;

pub use lexicon::{LexiconRow, PartOfSpeech, SynonymLexicon};
pub use matching::{match_count, MatchMode};
pub use script::{build_documents, ScriptCorpus, ScriptSequence};
pub use tokenize::{normalize_label, tokenize_document};
pub use vocab::{AttributeKind, AttributeVocab, VocabEntry};
pub use weights::{
    binarize_weights, freq_weights, mine_weights, normalize_l1, tfidf_weights, WeightMatrix, Weighting,
};
