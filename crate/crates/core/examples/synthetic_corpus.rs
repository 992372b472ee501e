//! Describing a corpus with planted term placements and generating it.
//!
//! cargo run --example synthetic_corpus

use fvs::corpus::{tokenize, TokenizerConfig};
use fvs::synth::{generate, DocGroup, Placement, Plant, SynthSpec, TopicSpec};

fn main() -> fvs::Result<()> {
    let spec = SynthSpec {
        min_len: 30,
        max_len: 40,
        vocab_size: 200,
        groups: vec![DocGroup {
            fraction: 0.4,
            topic: Some(1),
            plants: vec![
                Plant::new("reactor", Placement::Region { x: 1, y: 4 }, 2),
                Plant::new(
                    "coolant",
                    Placement::Near {
                        anchor: "reactor".into(),
                        window: 2,
                    },
                    1,
                ),
                Plant::new(
                    "turbine",
                    Placement::Far {
                        anchor: "reactor".into(),
                        min_gap: 0.5,
                    },
                    1,
                ),
            ],
        }],
        topics: vec![TopicSpec {
            id: 1,
            title: "reactor".into(),
        }],
        ..SynthSpec::new(42, 5)
    };
    let synth = generate(&spec)?;
    let cfg = TokenizerConfig::default();
    for (doc, group) in synth.documents.iter().zip(&synth.groups) {
        let stream = tokenize(doc, &cfg);
        let at = |t: &str| {
            stream
                .positions_of(t)
                .map(|p| p.positions().to_vec())
                .unwrap_or_default()
        };
        println!(
            "{} L={} group={group:?} reactor={:?} coolant={:?} turbine={:?}",
            doc.docno,
            stream.len(),
            at("reactor"),
            at("coolant"),
            at("turbine")
        );
    }
    println!("\nqrels:");
    synth.write_qrels(std::io::stdout().lock())?;
    println!("\nspec as JSON (accepted by `fvs gen-synthetic --spec`):");
    println!(
        "{}",
        serde_json::to_string_pretty(&spec).expect("serializable")
    );
    Ok(())
}
