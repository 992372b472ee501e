//! Deterministic synthetic corpora with planted positional structure.
//!
//! # Generator
//!
//! All randomness comes from SplitMix64 seeded with `SynthSpec::seed`:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! return z ^ (z >> 31)
//! ```
//!
//! (wrapping arithmetic). `below(n)` is `next % n`; `unit()` is
//! `(next >> 11) * 2^-53`. Draws happen in this order:
//!
//! 1. Group assignment: group `g` receives `round(fraction_g * docs)` slots in
//!    spec order, the rest are background-only; the slot vector is shuffled
//!    by Fisher-Yates from the last index down, `j = below(i + 1)`.
//! 2. Per document, in docno order: length `min_len + below(max_len - min_len + 1)`,
//!    then each plant of the document's group in spec order (each occurrence
//!    picks `below(#remaining candidates)` from the ascending list of free
//!    allowed positions and removes it), then every still-empty position in
//!    ascending order draws `unit()`: below `stopword_rate` it takes
//!    `FILLER_STOPWORDS[below(8)]`, otherwise word `w{:05}` with index
//!    `floor(vocab_size * unit()^skew)`.
//!
//! Docnos are `{prefix}-{i:05}`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{QrelSet, RawDocument, Topic};
use crate::error::{Error, Result};
use crate::objective::{ObjectiveSpec, Section};

/// Stopwords sprinkled into background text.
pub const FILLER_STOPWORDS: [&str; 8] = ["the", "of", "and", "to", "in", "is", "that", "for"];

/// SplitMix64, the pinned generator of this module.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Where a plant's occurrences may go.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Placement {
    /// Inside section `x` of `y`, judged by pulse midpoint.
    Region {
        x: u32,
        y: u32,
    },
    Uniform,
    /// Within `window` tokens of some occurrence of `anchor`.
    Near {
        anchor: String,
        window: u32,
    },
    /// At least `min_gap * L` tokens away from every occurrence of `anchor`.
    Far {
        anchor: String,
        min_gap: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plant {
    pub term: String,
    pub placement: Placement,
    /// Occurrences per document.
    pub count: u32,
}

impl Plant {
    pub fn new(term: &str, placement: Placement, count: u32) -> Self {
        Self {
            term: term.to_string(),
            placement,
            count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocGroup {
    /// Share of the corpus in this group, in `(0, 1]`.
    pub fraction: f64,
    /// Documents of the group are judged relevant to this topic.
    #[serde(default)]
    pub topic: Option<u32>,
    pub plants: Vec<Plant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSpec {
    pub id: u32,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub docs: usize,
    pub min_len: u32,
    pub max_len: u32,
    pub vocab_size: u32,
    /// Exponent of the rank-frequency skew; 1 is uniform.
    pub skew: f64,
    pub stopword_rate: f64,
    pub docno_prefix: String,
    pub groups: Vec<DocGroup>,
    #[serde(default)]
    pub topics: Vec<TopicSpec>,
}

impl SynthSpec {
    /// Background-only spec with default shape parameters.
    pub fn new(seed: u64, docs: usize) -> Self {
        Self {
            seed,
            docs,
            min_len: 150,
            max_len: 300,
            vocab_size: 2000,
            skew: 2.0,
            stopword_rate: 0.3,
            docno_prefix: "SYN".into(),
            groups: Vec::new(),
            topics: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Synth(m));
        if self.min_len == 0 || self.min_len > self.max_len {
            return bad(format!(
                "need 1 <= min_len <= max_len, got {}..{}",
                self.min_len, self.max_len
            ));
        }
        if self.vocab_size == 0 {
            return bad("vocab_size must be positive".into());
        }
        if !(self.skew.is_finite() && self.skew >= 1.0) {
            return bad(format!("skew must be >= 1, got {}", self.skew));
        }
        if !(0.0..1.0).contains(&self.stopword_rate) {
            return bad(format!(
                "stopword_rate must be in [0, 1), got {}",
                self.stopword_rate
            ));
        }
        if self.docno_prefix.is_empty() || self.docno_prefix.chars().any(char::is_whitespace) {
            return bad("docno_prefix must be non-empty without whitespace".into());
        }
        for (g, group) in self.groups.iter().enumerate() {
            if !(group.fraction > 0.0 && group.fraction <= 1.0) {
                return bad(format!(
                    "group {g}: fraction must be in (0, 1], got {}",
                    group.fraction
                ));
            }
            for (i, p) in group.plants.iter().enumerate() {
                if p.term.is_empty()
                    || p.term.chars().any(|c| !c.is_alphanumeric())
                    || p.term != p.term.to_lowercase()
                {
                    return bad(format!(
                        "group {g}: plant term `{}` must be lowercase alphanumeric",
                        p.term
                    ));
                }
                if p.count == 0 {
                    return bad(format!("group {g}: plant `{}` has zero count", p.term));
                }
                match &p.placement {
                    Placement::Region { x, y } => {
                        ObjectiveSpec::new(vec![Section { x: *x, y: *y }]).map_err(|e| {
                            Error::Synth(format!("group {g}: plant `{}`: {e}", p.term))
                        })?;
                    }
                    Placement::Uniform => {}
                    Placement::Near { anchor, window } => {
                        if *window == 0 {
                            return bad(format!("group {g}: plant `{}` needs window >= 1", p.term));
                        }
                        if !group.plants[..i].iter().any(|q| &q.term == anchor) {
                            return bad(format!(
                                "group {g}: anchor `{anchor}` of `{}` is not planted earlier",
                                p.term
                            ));
                        }
                    }
                    Placement::Far { anchor, min_gap } => {
                        if !(min_gap.is_finite() && *min_gap > 0.0 && *min_gap < 1.0) {
                            return bad(format!(
                                "group {g}: plant `{}` needs 0 < min_gap < 1",
                                p.term
                            ));
                        }
                        if !group.plants[..i].iter().any(|q| &q.term == anchor) {
                            return bad(format!(
                                "group {g}: anchor `{anchor}` of `{}` is not planted earlier",
                                p.term
                            ));
                        }
                    }
                }
            }
        }
        let slots: usize = self.group_sizes().iter().sum();
        if slots > self.docs {
            return bad(format!(
                "group fractions cover {slots} documents but the corpus has {}",
                self.docs
            ));
        }
        for t in &self.topics {
            if t.id == 0 || t.title.trim().is_empty() {
                return bad(format!("topic {} needs a positive id and a title", t.id));
            }
        }
        Ok(())
    }

    fn group_sizes(&self) -> Vec<usize> {
        self.groups
            .iter()
            .map(|g| (g.fraction * self.docs as f64).round() as usize)
            .collect()
    }
}

/// Generated documents with their ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub documents: Vec<RawDocument>,
    /// Group index of every document, `None` for background-only ones.
    pub groups: Vec<Option<usize>>,
    pub qrels: QrelSet,
    pub topics: Vec<Topic>,
}

impl SynthCorpus {
    /// `docno<TAB>text` lines.
    pub fn write_plain(&self, mut out: impl Write) -> Result<()> {
        for d in &self.documents {
            writeln!(out, "{}\t{}", d.docno, d.text)?;
        }
        Ok(())
    }

    /// Ground truth as qrels: `topic 0 docno 1` for every group member.
    pub fn write_qrels(&self, mut out: impl Write) -> Result<()> {
        let mut rows: BTreeMap<(u32, &str), ()> = BTreeMap::new();
        for t in self.qrels.topics() {
            for d in &self.documents {
                if self.qrels.is_relevant(t, &d.docno) {
                    rows.insert((t, d.docno.as_str()), ());
                }
            }
        }
        for (t, d) in rows.keys() {
            writeln!(out, "{t} 0 {d} 1")?;
        }
        Ok(())
    }

    /// Topics in TREC `<top>` markup.
    pub fn write_topics(&self, mut out: impl Write) -> Result<()> {
        for t in &self.topics {
            writeln!(
                out,
                "<top>\n<num> Number: {}\n<title> {}\n</top>",
                t.id, t.title
            )?;
        }
        Ok(())
    }

    /// `docno<TAB>group` lines, `-` for background documents.
    pub fn write_labels(&self, mut out: impl Write) -> Result<()> {
        for (d, g) in self.documents.iter().zip(&self.groups) {
            match g {
                Some(g) => writeln!(out, "{}\t{g}", d.docno)?,
                None => writeln!(out, "{}\t-", d.docno)?,
            }
        }
        Ok(())
    }

    /// Docnos of the documents in group `g`.
    pub fn group_members(&self, g: usize) -> impl Iterator<Item = &str> {
        self.documents
            .iter()
            .zip(&self.groups)
            .filter(move |(_, grp)| **grp == Some(g))
            .map(|(d, _)| d.docno.as_str())
    }
}

fn allowed_positions(placement: &Placement, len: u32, slots: &[Option<String>]) -> Vec<u32> {
    let occurrences = |anchor: &str| -> Vec<u32> {
        (1..=len)
            .filter(|&p| slots[p as usize - 1].as_deref() == Some(anchor))
            .collect()
    };
    match placement {
        Placement::Region { x, y } => {
            let spec = ObjectiveSpec::new(vec![Section { x: *x, y: *y }]).expect("validated");
            (1..=len)
                .filter(|&p| spec.in_region(p, len).expect("p in range"))
                .collect()
        }
        Placement::Uniform => (1..=len).collect(),
        Placement::Near { anchor, window } => {
            let anchors = occurrences(anchor);
            (1..=len)
                .filter(|&p| anchors.iter().any(|&a| a != p && a.abs_diff(p) <= *window))
                .collect()
        }
        Placement::Far { anchor, min_gap } => {
            let anchors = occurrences(anchor);
            let gap = (min_gap * f64::from(len)).ceil() as u32;
            (1..=len)
                .filter(|&p| anchors.iter().all(|&a| a.abs_diff(p) >= gap))
                .collect()
        }
    }
}

/// Generates the corpus described by `spec`. Identical specs give identical output.
pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let mut rng = SplitMix64::new(spec.seed);

    let mut assignment: Vec<Option<usize>> = Vec::with_capacity(spec.docs);
    for (g, size) in spec.group_sizes().into_iter().enumerate() {
        assignment.extend(std::iter::repeat_n(Some(g), size));
    }
    assignment.resize(spec.docs, None);
    for i in (1..assignment.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        assignment.swap(i, j);
    }

    let mut documents = Vec::with_capacity(spec.docs);
    let mut qrels = QrelSet::default();
    for (i, group) in assignment.iter().enumerate() {
        let docno = format!("{}-{i:05}", spec.docno_prefix);
        let len = spec.min_len + rng.below(u64::from(spec.max_len - spec.min_len) + 1) as u32;
        let mut slots: Vec<Option<String>> = vec![None; len as usize];

        if let Some(g) = *group {
            let grp = &spec.groups[g];
            for plant in &grp.plants {
                let mut free: Vec<u32> = allowed_positions(&plant.placement, len, &slots)
                    .into_iter()
                    .filter(|&p| slots[p as usize - 1].is_none())
                    .collect();
                if free.len() < plant.count as usize {
                    return Err(Error::Synth(format!(
                        "{docno}: plant `{}` needs {} positions but only {} are available (L = {len})",
                        plant.term,
                        plant.count,
                        free.len()
                    )));
                }
                for _ in 0..plant.count {
                    let k = rng.below(free.len() as u64) as usize;
                    let p = free.remove(k);
                    slots[p as usize - 1] = Some(plant.term.clone());
                }
            }
            if let Some(t) = grp.topic {
                qrels.insert(t, docno.clone(), 1)?;
            }
        }

        let words: Vec<String> = slots
            .into_iter()
            .map(|s| match s {
                Some(w) => w,
                None => {
                    if rng.unit() < spec.stopword_rate {
                        FILLER_STOPWORDS[rng.below(8) as usize].to_string()
                    } else {
                        let idx = (f64::from(spec.vocab_size) * rng.unit().powf(spec.skew)) as u32;
                        format!("w{:05}", idx.min(spec.vocab_size - 1))
                    }
                }
            })
            .collect();
        documents.push(RawDocument::new(docno, words.join(" ")));
    }

    let topics = spec
        .topics
        .iter()
        .map(|t| Topic {
            id: t.id,
            title: t.title.clone(),
        })
        .collect();
    Ok(SynthCorpus {
        documents,
        groups: assignment,
        qrels,
        topics,
    })
}

/// Named specs used by the examples, the CLI and the acceptance tests.
pub mod presets {
    use super::*;

    pub const NAMES: [&str; 4] = ["region-pair", "objective", "colocation", "planted-topics"];

    pub fn by_name(name: &str, seed: u64) -> Option<SynthSpec> {
        match name {
            "region-pair" => Some(region_pair(seed)),
            "objective" => Some(objective_benchmark(seed)),
            "colocation" => Some(colocation(seed)),
            "planted-topics" => Some(planted_topics(seed)),
            _ => None,
        }
    }

    /// 200 documents, all with five occurrences of `target`: half inside the
    /// first third, half inside the last third.
    pub fn region_pair(seed: u64) -> SynthSpec {
        let group = |x| DocGroup {
            fraction: 0.5,
            topic: None,
            plants: vec![Plant::new("target", Placement::Region { x, y: 3 }, 5)],
        };
        SynthSpec {
            groups: vec![group(1), group(3)],
            topics: vec![TopicSpec {
                id: 1,
                title: "target".into(),
            }],
            ..SynthSpec::new(seed, 200)
        }
    }

    /// Ten topics. Each has 30 documents spreading its query term uniformly
    /// (tf 8), 30 head-heavy ones (4 in the first third plus 2 anywhere) and
    /// 30 tail-heavy ones (4 in the last third plus 2 anywhere).
    pub fn objective_benchmark(seed: u64) -> SynthSpec {
        let topics = 10u32;
        let fraction = 1.0 / 30.0;
        let mut groups = Vec::new();
        let mut specs = Vec::new();
        for t in 1..=topics {
            let term = format!("topic{t:02}");
            groups.push(DocGroup {
                fraction,
                topic: Some(t),
                plants: vec![Plant::new(&term, Placement::Uniform, 8)],
            });
            for x in [1, 3] {
                groups.push(DocGroup {
                    fraction,
                    topic: Some(t),
                    plants: vec![
                        Plant::new(&term, Placement::Region { x, y: 3 }, 4),
                        Plant::new(&term, Placement::Uniform, 2),
                    ],
                });
            }
            specs.push(TopicSpec { id: t, title: term });
        }
        SynthSpec {
            groups,
            topics: specs,
            ..SynthSpec::new(seed, 900)
        }
    }

    /// Half of 200 documents carry `query` three times in the first quarter,
    /// `alpha` three times within 3 tokens of it and `beta` twice at least
    /// half a document away.
    pub fn colocation(seed: u64) -> SynthSpec {
        SynthSpec {
            groups: vec![DocGroup {
                fraction: 0.5,
                topic: Some(1),
                plants: vec![
                    Plant::new("query", Placement::Region { x: 1, y: 4 }, 3),
                    Plant::new(
                        "alpha",
                        Placement::Near {
                            anchor: "query".into(),
                            window: 3,
                        },
                        3,
                    ),
                    Plant::new(
                        "beta",
                        Placement::Far {
                            anchor: "query".into(),
                            min_gap: 0.5,
                        },
                        2,
                    ),
                ],
            }],
            topics: vec![TopicSpec {
                id: 1,
                title: "query".into(),
            }],
            ..SynthSpec::new(seed, 200)
        }
    }

    /// Eight topics over 400 documents. Per topic: 4 relevant documents with
    /// the query term twice and three related terms next to it, 12 relevant
    /// documents with only the related terms, and 16 non-relevant documents
    /// mentioning the query term once.
    pub fn planted_topics(seed: u64) -> SynthSpec {
        let docs = 400usize;
        let frac = |n: usize| n as f64 / docs as f64;
        let mut groups = Vec::new();
        let mut topics = Vec::new();
        for t in 1..=8u32 {
            let q = format!("subject{t}");
            let rel: Vec<String> = ["a", "b", "c"]
                .iter()
                .map(|s| format!("related{t}{s}"))
                .collect();
            let near = |anchor: &str, term: &str| {
                Plant::new(
                    term,
                    Placement::Near {
                        anchor: anchor.into(),
                        window: 3,
                    },
                    2,
                )
            };
            groups.push(DocGroup {
                fraction: frac(4),
                topic: Some(t),
                plants: vec![
                    Plant::new(&q, Placement::Uniform, 2),
                    near(&q, &rel[0]),
                    near(&q, &rel[1]),
                    near(&q, &rel[2]),
                ],
            });
            groups.push(DocGroup {
                fraction: frac(12),
                topic: Some(t),
                plants: vec![
                    Plant::new(&rel[0], Placement::Uniform, 2),
                    near(&rel[0], &rel[1]),
                    near(&rel[0], &rel[2]),
                ],
            });
            groups.push(DocGroup {
                fraction: frac(16),
                topic: None,
                plants: vec![Plant::new(&q, Placement::Uniform, 1)],
            });
            topics.push(TopicSpec { id: t, title: q });
        }
        SynthSpec {
            groups,
            topics,
            ..SynthSpec::new(seed, docs)
        }
    }
}
