//! Retrieval metrics and positional diagnostics of ranked lists.

use std::collections::BTreeMap;
use std::io::Write;

use crate::corpus::{Corpus, QrelSet};
use crate::error::{Error, Result};
use crate::objective::ObjectiveSpec;
use crate::retrieval::{Query, RankedList};

fn relevant_total(qrels: &QrelSet, topic: u32) -> Result<usize> {
    qrels
        .relevant_count(topic)
        .ok_or_else(|| Error::invalid(format!("topic {topic} has no relevance judgments")))
}

/// Fraction of the first `k` ranks holding relevant documents.
pub fn precision_at_k(ranked: &RankedList, qrels: &QrelSet, topic: u32, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    relevant_total(qrels, topic)?;
    let hits = ranked
        .top(k)
        .iter()
        .filter(|e| qrels.is_relevant(topic, &e.docno))
        .count();
    Ok(hits as f64 / k as f64)
}

/// Mean of the precision values at each relevant rank, over all relevant
/// documents of the topic (unretrieved ones contribute 0).
pub fn average_precision(ranked: &RankedList, qrels: &QrelSet, topic: u32) -> Result<f64> {
    let total = relevant_total(qrels, topic)?;
    if total == 0 {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    let mut acc = 0.0;
    for (i, e) in ranked.entries().iter().enumerate() {
        if qrels.is_relevant(topic, &e.docno) {
            hits += 1;
            acc += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(acc / total as f64)
}

/// Precision at rank R, R being the number of relevant documents.
pub fn r_precision(ranked: &RankedList, qrels: &QrelSet, topic: u32) -> Result<f64> {
    let total = relevant_total(qrels, topic)?;
    if total == 0 {
        return Ok(0.0);
    }
    precision_at_k(ranked, qrels, topic, total)
}

/// Sample skewness `m3 / m2^(3/2)`; `None` for fewer than 3 values or zero spread.
pub fn sample_skewness(values: &[f64]) -> Option<f64> {
    if values.len() < 3 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3) = (0.0, 0.0);
    for v in values {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if m2 <= 1e-18 {
        return None;
    }
    Some(m3 / m2.powf(1.5))
}

/// Relative positions `(p - 0.5) / L` of every query-term occurrence in the
/// first `depth` documents, grouped per document.
pub fn relative_positions(
    corpus: &Corpus,
    query: &Query,
    ranked: &RankedList,
    depth: usize,
) -> Result<Vec<Vec<f64>>> {
    ranked
        .top(depth)
        .iter()
        .map(|e| {
            let stream = corpus.get(&e.docno).ok_or_else(|| {
                Error::invalid(format!("document {} is not in the corpus", e.docno))
            })?;
            let len = f64::from(stream.len());
            let mut rel: Vec<f64> = query
                .terms()
                .iter()
                .filter_map(|q| stream.positions_of(&q.term))
                .flat_map(|tp| tp.positions().to_vec())
                .map(|p| (f64::from(p) - 0.5) / len)
                .collect();
            rel.sort_by(f64::total_cmp);
            Ok(rel)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SkewnessMode {
    /// One skewness over all occurrences of all top documents.
    #[default]
    Pooled,
    /// Mean of the per-document skewness values that are defined.
    PerDocMean,
}

/// Skewness of query-term placement in the top `depth` documents. `None`
/// when undefined (too few occurrences or no spread).
pub fn position_skewness(
    corpus: &Corpus,
    query: &Query,
    ranked: &RankedList,
    depth: usize,
    mode: SkewnessMode,
) -> Result<Option<f64>> {
    let per_doc = relative_positions(corpus, query, ranked, depth)?;
    Ok(match mode {
        SkewnessMode::Pooled => sample_skewness(&per_doc.concat()),
        SkewnessMode::PerDocMean => {
            let vals: Vec<f64> = per_doc.iter().filter_map(|v| sample_skewness(v)).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        }
    })
}

/// Share of query-term occurrences in the top `depth` documents that lie in
/// the objective region. `None` when there are no occurrences.
pub fn fitting_rate(
    corpus: &Corpus,
    query: &Query,
    ranked: &RankedList,
    depth: usize,
    objective: &ObjectiveSpec,
) -> Result<Option<f64>> {
    let (mut inside, mut total) = (0usize, 0usize);
    for e in ranked.top(depth) {
        let stream = corpus
            .get(&e.docno)
            .ok_or_else(|| Error::invalid(format!("document {} is not in the corpus", e.docno)))?;
        for q in query.terms() {
            if let Some(tp) = stream.positions_of(&q.term) {
                for &p in tp.positions() {
                    total += 1;
                    if objective.in_region(p, tp.length())? {
                        inside += 1;
                    }
                }
            }
        }
    }
    Ok((total > 0).then(|| inside as f64 / total as f64))
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Cutoff of the precision metric.
    pub k: usize,
    /// Documents inspected by the positional diagnostics.
    pub depth: usize,
    /// Diagnostics are computed only for topics with at least this many hits.
    pub min_hits: usize,
    pub skewness_mode: SkewnessMode,
    /// Region used for the fitting rate.
    pub objective: Option<ObjectiveSpec>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            k: 10,
            depth: 10,
            min_hits: 11,
            skewness_mode: SkewnessMode::Pooled,
            objective: None,
        }
    }
}

/// Corpus and topic queries needed for positional diagnostics.
pub struct Diagnostics<'a> {
    pub corpus: &'a Corpus,
    pub queries: &'a BTreeMap<u32, Query>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicRow {
    pub run: String,
    pub topic: u32,
    pub hits: usize,
    pub precision: f64,
    pub average_precision: f64,
    pub r_precision: f64,
    pub skewness: Option<f64>,
    pub fitting_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub run: String,
    pub topics: usize,
    pub mean_precision: f64,
    pub mean_average_precision: f64,
    pub mean_r_precision: f64,
    pub mean_skewness: Option<f64>,
    pub mean_fitting_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub k: usize,
    pub rows: Vec<TopicRow>,
    pub summaries: Vec<RunSummary>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Scores every run over the topics it shares with `qrels`.
pub fn evaluate(
    runs: &[(String, BTreeMap<u32, RankedList>)],
    qrels: &QrelSet,
    diagnostics: Option<&Diagnostics<'_>>,
    options: &EvalOptions,
) -> Result<EvalReport> {
    if qrels.is_empty() {
        return Err(Error::invalid("qrels contain no judgments"));
    }
    if options.k == 0 || options.depth == 0 {
        return Err(Error::invalid("k and depth must be at least 1"));
    }
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (name, results) in runs {
        let first = rows.len();
        for (&topic, ranked) in results {
            if !qrels.contains_topic(topic) {
                continue;
            }
            let mut row = TopicRow {
                run: name.clone(),
                topic,
                hits: ranked.len(),
                precision: precision_at_k(ranked, qrels, topic, options.k)?,
                average_precision: average_precision(ranked, qrels, topic)?,
                r_precision: r_precision(ranked, qrels, topic)?,
                skewness: None,
                fitting_rate: None,
            };
            if let Some(d) = diagnostics {
                if let Some(query) = d
                    .queries
                    .get(&topic)
                    .filter(|_| ranked.len() >= options.min_hits)
                {
                    row.skewness = position_skewness(
                        d.corpus,
                        query,
                        ranked,
                        options.depth,
                        options.skewness_mode,
                    )?;
                    if let Some(obj) = &options.objective {
                        row.fitting_rate =
                            fitting_rate(d.corpus, query, ranked, options.depth, obj)?;
                    }
                }
            }
            rows.push(row);
        }
        let mine = &rows[first..];
        summaries.push(RunSummary {
            run: name.clone(),
            topics: mine.len(),
            mean_precision: mean(mine.iter().map(|r| r.precision)).unwrap_or(0.0),
            mean_average_precision: mean(mine.iter().map(|r| r.average_precision)).unwrap_or(0.0),
            mean_r_precision: mean(mine.iter().map(|r| r.r_precision)).unwrap_or(0.0),
            mean_skewness: mean(mine.iter().filter_map(|r| r.skewness)),
            mean_fitting_rate: mean(mine.iter().filter_map(|r| r.fitting_rate)),
        });
    }
    Ok(EvalReport {
        k: options.k,
        rows,
        summaries,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl EvalReport {
    /// Columns: `run,topic,hits,p_at_k,ap,r_prec`.
    pub fn write_metrics_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "run,topic,hits,p_at_{},ap,r_prec", self.k)?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{:.6},{:.6},{:.6}",
                r.run, r.topic, r.hits, r.precision, r.average_precision, r.r_precision
            )?;
        }
        Ok(())
    }

    /// Columns: `run,topic,hits,skewness,fitting_rate`; undefined values are empty.
    pub fn write_diagnostics_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "run,topic,hits,skewness,fitting_rate")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.run,
                r.topic,
                r.hits,
                opt(r.skewness),
                opt(r.fitting_rate)
            )?;
        }
        Ok(())
    }

    pub fn write_summary(&self, mut out: impl Write) -> Result<()> {
        for s in &self.summaries {
            writeln!(
                out,
                "{}\ttopics={}\tP@{}={:.4}\tMAP={:.4}\tR-prec={:.4}\tskew={}\tfit={}",
                s.run,
                s.topics,
                self.k,
                s.mean_precision,
                s.mean_average_precision,
                s.mean_r_precision,
                s.mean_skewness.map_or("NA".into(), |v| format!("{v:.4}")),
                s.mean_fitting_rate
                    .map_or("NA".into(), |v| format!("{v:.4}")),
            )?;
        }
        Ok(())
    }
}
