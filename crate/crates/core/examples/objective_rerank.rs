//! Re-ranking tf-idf candidates so query terms sit in a chosen region.
//!
//! cargo run --example objective_rerank

use std::collections::BTreeSet;

use fvs::corpus::{Corpus, TokenizerConfig};
use fvs::index::Index;
use fvs::objective::parse_objective;
use fvs::retrieval::{fvs_rerank, tfidf_search, Query};
use fvs::synth::{generate, presets};

fn main() -> fvs::Result<()> {
    // Half the documents hold `target` in their first third, half in their last.
    let synth = generate(&presets::region_pair(1))?;
    let cfg = TokenizerConfig::default();
    let corpus = Corpus::from_documents(&synth.documents, &cfg)?;
    let index = Index::build(corpus.streams(), 3, cfg.fingerprint())?;
    let head: BTreeSet<&str> = synth.group_members(0).collect();

    let query = Query::parse("target", &cfg)?;
    let baseline = tfidf_search(&index, &query, 1000)?;
    for text in ["1|3", "3|3", "1|3+3|3", "1|1"] {
        let objective = parse_objective(text)?;
        let ranked = fvs_rerank(&index, &query, &objective, &baseline, 1000)?;
        let top: Vec<String> = ranked
            .top(5)
            .iter()
            .map(|e| {
                let side = if head.contains(e.docno.as_str()) {
                    "head"
                } else {
                    "tail"
                };
                format!("{}({side}, {:.3})", e.docno, e.score)
            })
            .collect();
        let head_in_top100 = ranked
            .top(100)
            .iter()
            .filter(|e| head.contains(e.docno.as_str()))
            .count();
        println!(
            "{text:<8} head docs in top 100: {head_in_top100:>3}  top: {}",
            top.join(" ")
        );
    }
    Ok(())
}
