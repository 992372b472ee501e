//! Pseudo-relevance feedback: candidate terms ranked by spectral similarity
//! to the query in the top documents, then an expanded search.
//!
//! cargo run --example query_expansion

use fvs::corpus::{Corpus, TokenizerConfig};
use fvs::eval::precision_at_k;
use fvs::expansion::{candidate_terms, expanded_search, ExpansionConfig, ExpansionParams};
use fvs::index::Index;
use fvs::retrieval::{tfidf_search, Query};
use fvs::synth::{generate, presets};

fn main() -> fvs::Result<()> {
    let cfg = TokenizerConfig::default();

    // `alpha` is planted next to `query`, `beta` far from it.
    let synth = generate(&presets::colocation(11))?;
    let corpus = Corpus::from_documents(&synth.documents, &cfg)?;
    let index = Index::build(corpus.streams(), 3, cfg.fingerprint())?;
    let query = Query::parse("query", &cfg)?;
    let top = tfidf_search(&index, &query, 1000)?;
    let cands = candidate_terms(&index, &query, &top, 10, 40, &ExpansionConfig::default())?;
    println!("top candidates:");
    for c in cands.terms.iter().take(5) {
        println!("  {:<8} {:.4}", c.term, c.score);
    }
    println!("  beta at rank {:?}", cands.position("beta").map(|p| p + 1));

    // End to end on planted topics.
    let synth = generate(&presets::planted_topics(3))?;
    let corpus = Corpus::from_documents(&synth.documents, &cfg)?;
    let index = Index::build(corpus.streams(), 3, cfg.fingerprint())?;
    let params = ExpansionParams::default();
    println!("\ntopic  P@10 tfidf  P@10 expanded");
    for t in &synth.topics {
        let q = Query::parse(&t.title, &cfg)?;
        let base = tfidf_search(&index, &q, 1000)?;
        let exp = expanded_search(&index, &q, &params, 1000)?;
        println!(
            "{:>5}  {:>10.2}  {:>13.2}",
            t.id,
            precision_at_k(&base, &synth.qrels, t.id, 10)?,
            precision_at_k(&exp.ranked, &synth.qrels, t.id, 10)?
        );
    }
    Ok(())
}
