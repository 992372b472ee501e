//! Scoring runs against qrels with positional diagnostics: skewness of
//! query-term placement and the fitting rate of an objective.
//!
//! cargo run --example evaluate_runs

use std::collections::BTreeMap;

use fvs::corpus::{Corpus, TokenizerConfig};
use fvs::eval::{evaluate, Diagnostics, EvalOptions};
use fvs::index::Index;
use fvs::objective::parse_objective;
use fvs::retrieval::{fvs_rerank, tfidf_search, Query};
use fvs::synth::{generate, presets};

fn main() -> fvs::Result<()> {
    let synth = generate(&presets::objective_benchmark(2))?;
    let cfg = TokenizerConfig::default();
    let corpus = Corpus::from_documents(&synth.documents, &cfg)?;
    let index = Index::build(corpus.streams(), 3, cfg.fingerprint())?;
    let queries: BTreeMap<u32, Query> = synth
        .topics
        .iter()
        .map(|t| Ok((t.id, Query::parse(&t.title, &cfg)?)))
        .collect::<fvs::Result<_>>()?;

    let head = parse_objective("1|3")?;
    let tail = parse_objective("3|3")?;
    let mut runs = vec![
        ("tfidf".to_string(), BTreeMap::new()),
        ("fvs-1|3".to_string(), BTreeMap::new()),
        ("fvs-3|3".to_string(), BTreeMap::new()),
    ];
    for (&topic, q) in &queries {
        let base = tfidf_search(&index, q, 1000)?;
        runs[1]
            .1
            .insert(topic, fvs_rerank(&index, q, &head, &base, 1000)?);
        runs[2]
            .1
            .insert(topic, fvs_rerank(&index, q, &tail, &base, 1000)?);
        runs[0].1.insert(topic, base);
    }

    let options = EvalOptions {
        objective: Some(head),
        ..EvalOptions::default()
    };
    let diagnostics = Diagnostics {
        corpus: &corpus,
        queries: &queries,
    };
    let report = evaluate(&runs, &synth.qrels, Some(&diagnostics), &options)?;
    report.write_summary(std::io::stdout().lock())?;
    println!();
    report.write_diagnostics_csv(std::io::stdout().lock())?;
    Ok(())
}
