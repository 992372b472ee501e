//! Building a spectral index, inspecting postings and round-tripping the
//! binary file.
//!
//! cargo run --example index_roundtrip

use fvs::corpus::{Corpus, RawDocument, TokenizerConfig};
use fvs::index::Index;

fn main() -> fvs::Result<()> {
    let docs = [
        RawDocument::new(
            "d1",
            "Solar power output rose while solar panel prices fell.",
        ),
        RawDocument::new("d2", "Wind farms and solar farms share the grid."),
        RawDocument::new("d3", "Grid operators balance wind output at night."),
    ];
    let cfg = TokenizerConfig::default();
    let corpus = Corpus::from_documents(&docs, &cfg)?;
    let index = Index::build(corpus.streams(), 3, cfg.fingerprint())?;
    println!(
        "{} docs, {} terms, order {}",
        index.doc_count(),
        index.vocabulary_size(),
        index.order()
    );

    for term in ["solar", "grid", "wind"] {
        println!("{term}: df={} idf={:.3}", index.df(term), index.idf(term));
        for p in index.postings(term) {
            let coeffs: Vec<String> = p
                .vector
                .coeffs()
                .iter()
                .map(|c| format!("{c:+.3}"))
                .collect();
            println!(
                "  {} tf={} [{}]",
                index.doc(p.doc).docno,
                p.tf(),
                coeffs.join(" ")
            );
        }
    }

    let dir = std::env::temp_dir().join(format!("fvs-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("demo.fvsi");
    index.save(&path)?;
    let loaded = Index::load(&path)?;
    let same = loaded.to_bytes() == std::fs::read(&path)?;
    println!(
        "\nsaved {} bytes, reload identical: {same}",
        std::fs::metadata(&path)?.len()
    );
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
