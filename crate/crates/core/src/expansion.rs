//! Pseudo-relevance feedback driven by spectral overlap with the query.
//!
//! For every top-ranked document the query spectrum is compared with the
//! spectrum of each other term in the document; terms that sit near the
//! query terms score close to 1. Per-document similarities are aggregated
//! across the feedback set and the best `k` terms extend the query.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::index::{Index, TermId};
use crate::retrieval::{query_spectral, tfidf_search, Query, RankedList};

pub const DEFAULT_FEEDBACK_DOCS: usize = 10;
pub const DEFAULT_EXPANSION_TERMS: usize = 40;
pub const DEFAULT_ORIGINAL_WEIGHT: f64 = 2.0;
pub const DEFAULT_MIN_DF: usize = 2;

/// How per-document similarities combine across the feedback documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregator {
    #[default]
    Sum,
    Max,
    /// Mean over the feedback documents the term occurs in.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    /// Every expansion term gets weight 1.
    #[default]
    Unit,
    /// Weight proportional to the aggregated similarity, the best term at 1.
    Similarity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionConfig {
    pub aggregator: Aggregator,
    /// Terms with lower collection df are never proposed; 0 or 1 disables.
    pub min_df: usize,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self {
            aggregator: Aggregator::Sum,
            min_df: DEFAULT_MIN_DF,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub term: String,
    pub score: f64,
}

/// Expansion terms ordered by aggregated similarity desc, then term asc.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionCandidates {
    pub terms: Vec<Candidate>,
    pub feedback_docs: usize,
    pub cutoff: usize,
}

impl ExpansionCandidates {
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn position(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|c| c.term == term)
    }

    pub fn score(&self, term: &str) -> Option<f64> {
        self.terms.iter().find(|c| c.term == term).map(|c| c.score)
    }

    /// `term<TAB>score` lines.
    pub fn write_tsv(&self, mut out: impl Write) -> Result<()> {
        for c in &self.terms {
            writeln!(out, "{}\t{:.6}", c.term, c.score)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    sum: f64,
    max: f64,
    count: u32,
}

/// Per-document similarities of every non-query term against the query
/// spectrum, clamped to `[0, 1]`. Empty when no query term occurs in `doc`.
fn doc_similarities(
    index: &Index,
    query: &Query,
    query_ids: &[TermId],
    doc: u32,
    min_df: usize,
) -> Vec<(TermId, f64)> {
    let qs = query_spectral(index, query, doc);
    if qs.is_zero() {
        return Vec::new();
    }
    let q = qs.coeffs();
    let q_norm = qs.norm();
    index
        .doc_terms(doc)
        .filter(|(t, _)| !query_ids.contains(t) && index.df_by_id(*t) >= min_df)
        .map(|(t, c)| {
            let (dot, norm2) = c
                .iter()
                .zip(q)
                .fold((0.0, 0.0), |(d, n), (x, y)| (d + x * y, n + x * x));
            // Stored postings always have a0 > 0, so the norm is positive.
            (t, (dot / (q_norm * norm2.sqrt())).clamp(0.0, 1.0))
        })
        .collect()
}

/// Ranks the terms of the first `r` documents of `top_docs` by aggregated
/// spectral similarity to the query and keeps the best `k`.
///
/// Terms whose aggregate is 0 carry no positional affinity and are dropped.
pub fn candidate_terms(
    index: &Index,
    query: &Query,
    top_docs: &RankedList,
    r: usize,
    k: usize,
    config: &ExpansionConfig,
) -> Result<ExpansionCandidates> {
    if r == 0 || k == 0 {
        return Err(Error::invalid("r and k must be at least 1"));
    }
    let query_ids: Vec<TermId> = query
        .terms()
        .iter()
        .filter_map(|q| index.term_id(&q.term))
        .collect();
    let docs = top_docs
        .top(r)
        .iter()
        .map(|e| {
            index.doc_id(&e.docno).ok_or_else(|| {
                Error::invalid(format!("feedback document {} is not in the index", e.docno))
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let per_doc: Vec<Vec<(TermId, f64)>> = docs
        .par_iter()
        .map(|&d| doc_similarities(index, query, &query_ids, d, config.min_df))
        .collect();

    let mut acc: HashMap<TermId, Acc> = HashMap::new();
    for sims in &per_doc {
        for &(t, s) in sims {
            let a = acc.entry(t).or_default();
            a.sum += s;
            a.max = a.max.max(s);
            a.count += 1;
        }
    }
    let mut scored: Vec<(TermId, f64)> = acc
        .into_iter()
        .map(|(t, a)| {
            let score = match config.aggregator {
                Aggregator::Sum => a.sum,
                Aggregator::Max => a.max,
                Aggregator::Mean => a.sum / f64::from(a.count),
            };
            (t, score)
        })
        .filter(|&(_, score)| score > 0.0)
        .collect();
    // Term ids follow the sorted vocabulary, so id order is term order.
    scored.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    let terms = scored
        .into_iter()
        .map(|(t, score)| Candidate {
            term: index.term(t).to_string(),
            score,
        })
        .collect();
    Ok(ExpansionCandidates {
        terms,
        feedback_docs: docs.len(),
        cutoff: k,
    })
}

/// Builds `{w0 * q} ∪ {w_i * τ_i}` from the candidates.
pub fn expand_query(
    query: &Query,
    candidates: &ExpansionCandidates,
    mode: WeightMode,
    original_weight: f64,
) -> Result<Query> {
    if !(original_weight.is_finite() && original_weight > 0.0) {
        return Err(Error::invalid(format!(
            "w0 must be positive, got {original_weight}"
        )));
    }
    if candidates.is_empty() {
        return Ok(query.clone());
    }
    let max = candidates
        .terms
        .iter()
        .map(|c| c.score)
        .fold(0.0f64, f64::max);
    let mut terms: Vec<(String, f64)> = query
        .terms()
        .iter()
        .map(|q| (q.term.clone(), q.weight * original_weight))
        .collect();
    for c in &candidates.terms {
        if query.contains(&c.term) {
            continue;
        }
        let w = match mode {
            WeightMode::Unit => 1.0,
            WeightMode::Similarity => c.score / max,
        };
        if w > 0.0 {
            terms.push((c.term.clone(), w));
        }
    }
    Query::new(terms)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionParams {
    pub r: usize,
    pub k: usize,
    pub mode: WeightMode,
    pub original_weight: f64,
    pub config: ExpansionConfig,
}

impl Default for ExpansionParams {
    fn default() -> Self {
        Self {
            r: DEFAULT_FEEDBACK_DOCS,
            k: DEFAULT_EXPANSION_TERMS,
            mode: WeightMode::Unit,
            original_weight: DEFAULT_ORIGINAL_WEIGHT,
            config: ExpansionConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExpansionOutcome {
    pub candidates: ExpansionCandidates,
    pub expanded: Query,
    pub ranked: RankedList,
}

/// Baseline search, candidate harvesting, then tf-idf with the expanded query.
/// `k = 0` returns the plain baseline.
pub fn expanded_search(
    index: &Index,
    query: &Query,
    params: &ExpansionParams,
    top_n: usize,
) -> Result<ExpansionOutcome> {
    if params.k == 0 {
        return Ok(ExpansionOutcome {
            candidates: ExpansionCandidates {
                terms: Vec::new(),
                feedback_docs: 0,
                cutoff: 0,
            },
            expanded: query.clone(),
            ranked: tfidf_search(index, query, top_n)?,
        });
    }
    let r = params.r.max(1);
    let feedback = tfidf_search(index, query, r)?;
    let candidates = candidate_terms(index, query, &feedback, r, params.k, &params.config)?;
    let expanded = expand_query(query, &candidates, params.mode, params.original_weight)?;
    let ranked = tfidf_search(index, &expanded, top_n)?;
    Ok(ExpansionOutcome {
        candidates,
        expanded,
        ranked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, RawDocument, TokenizerConfig};

    fn build(docs: &[(&str, String)]) -> Index {
        let cfg = TokenizerConfig {
            stopwords: Default::default(),
            min_len: 1,
            stem: false,
        };
        let streams: Vec<_> = docs
            .iter()
            .map(|(id, t)| tokenize(&RawDocument::new(*id, t.as_str()), &cfg))
            .collect();
        Index::build(&streams, 3, 0).unwrap()
    }

    fn doc_with(near: &str, far: &str, len: usize, at: usize) -> String {
        let mut w: Vec<String> = (0..len).map(|i| format!("f{}", i % 7)).collect();
        w[at] = "q".into();
        w[at + 2] = near.into();
        w[(at + len / 2) % len] = far.into();
        w.join(" ")
    }

    #[test]
    fn near_terms_outrank_far_terms() {
        let docs: Vec<_> = (0..6)
            .map(|i| (format!("d{i}"), doc_with("alpha", "beta", 40, 3 + i)))
            .collect();
        let refs: Vec<_> = docs.iter().map(|(a, b)| (a.as_str(), b.clone())).collect();
        let idx = build(&refs);
        let q = Query::new([("q", 1.0)]).unwrap();
        let top = tfidf_search(&idx, &q, 10).unwrap();
        let cands = candidate_terms(&idx, &q, &top, 6, 40, &ExpansionConfig::default()).unwrap();
        assert_eq!(cands.terms[0].term, "alpha");
        let a = cands.score("alpha").unwrap();
        let b = cands.score("beta").unwrap_or(0.0);
        assert!(a > 5.0 * b, "alpha {a} beta {b}");
        assert!(cands.position("q").is_none());
        assert!(cands.terms.iter().all(|c| c.score > 0.0 && c.score <= 6.0));
    }

    #[test]
    fn lone_query_term_gives_no_candidates() {
        let idx = build(&[("d", "q q q".into())]);
        let q = Query::new([("q", 1.0)]).unwrap();
        let top = tfidf_search(&idx, &q, 10).unwrap();
        let cands = candidate_terms(&idx, &q, &top, 1, 5, &ExpansionConfig::default()).unwrap();
        assert!(cands.is_empty());
        assert!(candidate_terms(&idx, &q, &top, 0, 5, &ExpansionConfig::default()).is_err());
    }

    #[test]
    fn df_floor_filters_hapax() {
        let idx = build(&[("a", "q x y".into()), ("b", "q x z".into())]);
        let q = Query::new([("q", 1.0)]).unwrap();
        let top = tfidf_search(&idx, &q, 10).unwrap();
        let floor = candidate_terms(&idx, &q, &top, 2, 5, &ExpansionConfig::default()).unwrap();
        assert_eq!(
            floor
                .terms
                .iter()
                .map(|c| c.term.as_str())
                .collect::<Vec<_>>(),
            ["x"]
        );
        let open = ExpansionConfig {
            min_df: 0,
            ..Default::default()
        };
        let all = candidate_terms(&idx, &q, &top, 2, 5, &open).unwrap();
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn aggregators() {
        let idx = build(&[("a", "q x w w w w".into()), ("b", "q w w w w x".into())]);
        let q = Query::new([("q", 1.0)]).unwrap();
        let top = tfidf_search(&idx, &q, 10).unwrap();
        let run = |aggregator| {
            candidate_terms(
                &idx,
                &q,
                &top,
                2,
                5,
                &ExpansionConfig {
                    aggregator,
                    min_df: 0,
                },
            )
            .unwrap()
            .score("x")
            .unwrap()
        };
        let (sum, max, mean) = (
            run(Aggregator::Sum),
            run(Aggregator::Max),
            run(Aggregator::Mean),
        );
        assert!((mean - sum / 2.0).abs() < 1e-12);
        assert!(max >= mean && max <= sum);
    }

    fn cands(list: &[(&str, f64)]) -> ExpansionCandidates {
        ExpansionCandidates {
            terms: list
                .iter()
                .map(|(t, s)| Candidate {
                    term: t.to_string(),
                    score: *s,
                })
                .collect(),
            feedback_docs: 10,
            cutoff: list.len(),
        }
    }

    #[test]
    fn expand_query_modes() {
        let q = Query::new([("q", 1.0)]).unwrap();
        let empty = cands(&[]);
        assert_eq!(expand_query(&q, &empty, WeightMode::Unit, 2.0).unwrap(), q);
        assert!(expand_query(&q, &empty, WeightMode::Unit, 0.0).is_err());

        let c = cands(&[("a", 3.0), ("b", 1.5)]);
        let unit = expand_query(&q, &c, WeightMode::Unit, 2.0).unwrap();
        let w: Vec<_> = unit
            .terms()
            .iter()
            .map(|t| (t.term.as_str(), t.weight))
            .collect();
        assert_eq!(w, [("q", 2.0), ("a", 1.0), ("b", 1.0)]);

        let sim = expand_query(&q, &c, WeightMode::Similarity, 2.0).unwrap();
        let w: Vec<_> = sim
            .terms()
            .iter()
            .map(|t| (t.term.as_str(), t.weight))
            .collect();
        assert_eq!(w, [("q", 2.0), ("a", 1.0), ("b", 0.5)]);
    }

    #[test]
    fn k_zero_is_baseline() {
        let idx = build(&[("a", "q x".into()), ("b", "x y".into())]);
        let q = Query::new([("q", 1.0)]).unwrap();
        let params = ExpansionParams {
            k: 0,
            ..Default::default()
        };
        let out = expanded_search(&idx, &q, &params, 10).unwrap();
        assert_eq!(out.ranked, tfidf_search(&idx, &q, 10).unwrap());
        assert_eq!(out.expanded, q);
    }

    #[test]
    fn tsv_export() {
        let mut out = Vec::new();
        cands(&[("bone", 2.5)]).write_tsv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "bone\t2.500000\n");
    }
}
