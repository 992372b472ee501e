//! Parsing TREC SGML and tokenizing with and without stemming.
//!
//! cargo run --example trec_ingest

use fvs::corpus::{parse_trec_str, tokenize, TokenizerConfig, TrecOptions};

const SAMPLE: &str = "\
<DOC>
<DOCNO> FT911-3 </DOCNO>
<HEADLINE>Hazardous waste sites face new rules</HEADLINE>
<TEXT>
Regulators proposed stricter limits on hazardous waste facilities near rivers.
</TEXT>
</DOC>
<DOC>
<TEXT>A document without a DOCNO is skipped.</TEXT>
</DOC>
<doc><docno>FT911-4</docno><text>Lower-case tags are accepted too.</text></doc>
";

fn main() {
    let parsed = parse_trec_str(SAMPLE, TrecOptions::default());
    for w in &parsed.warnings {
        println!("warning at line {}: {}", w.line, w.message);
    }
    let plain = TokenizerConfig::default();
    let stemmed = TokenizerConfig {
        stem: true,
        ..TokenizerConfig::default()
    };
    for doc in &parsed.documents {
        for (label, cfg) in [("plain", &plain), ("stemmed", &stemmed)] {
            let stream = tokenize(doc, cfg);
            let terms: Vec<String> = stream
                .tokens
                .iter()
                .filter(|t| t.indexable)
                .map(|t| format!("{}@{}", t.term, t.position))
                .collect();
            println!(
                "{} ({label}, L={}): {}",
                doc.docno,
                stream.len(),
                terms.join(" ")
            );
        }
    }

    let body_only = parse_trec_str(
        SAMPLE,
        TrecOptions {
            include_headers: false,
        },
    );
    println!(
        "\nwithout headers: {:?}",
        body_only.documents[0].text.trim()
    );
}
