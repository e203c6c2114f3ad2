use actattr::corpus::{build_documents, mine_weights, MatchMode, Weighting};
use actattr::harness::{gen_synthetic, spearman, SyntheticConfig};

#[test]
fn mined_tfidf_rows_rank_correlate_with_planted() {
    let b = gen_synthetic(&SyntheticConfig::default()).unwrap();
    let w = mine_weights(&build_documents(&b.scripts), &b.vocab, &b.lexicon, MatchMode::Synonym, Weighting::Tfidf);
    for (z, name) in b.composites.iter().enumerate() {
        let mined = w.row(w.row_index(name).unwrap());
        let rho = spearman(mined, b.planted.row(z)).unwrap();
        eprintln!("{name}: {rho:.4}");
        assert!(rho >= 0.8, "{name}: spearman {rho:.4}");
    }
}
