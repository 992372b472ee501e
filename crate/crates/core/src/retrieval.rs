//! Baseline tf-idf search, query spectra and objective re-ranking.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::corpus::TokenizerConfig;
use crate::error::{Error, Result};
use crate::index::{DocId, Index};
use crate::objective::ObjectiveSpec;
use crate::spectral::{cosine_sim, SpectralVector};

/// Default number of baseline candidates handed to the re-ranker.
pub const DEFAULT_RERANK_DEPTH: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct QueryTerm {
    pub term: String,
    pub weight: f64,
}

/// Weighted bag of query terms. Repeated terms are merged by summing weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    terms: Vec<QueryTerm>,
}

impl Query {
    pub fn new<S: Into<String>>(terms: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let mut merged: Vec<QueryTerm> = Vec::new();
        for (term, weight) in terms {
            let term = term.into();
            if !(weight.is_finite() && weight > 0.0) {
                return Err(Error::invalid(format!(
                    "weight of `{term}` must be finite and positive, got {weight}"
                )));
            }
            if term.is_empty() {
                return Err(Error::invalid("empty query term"));
            }
            match merged.iter_mut().find(|q| q.term == term) {
                Some(q) => q.weight += weight,
                None => merged.push(QueryTerm { term, weight }),
            }
        }
        if merged.is_empty() {
            return Err(Error::invalid("query has no terms"));
        }
        Ok(Self { terms: merged })
    }

    /// Tokenizes free text with the index's tokenizer; each occurrence adds weight 1.
    pub fn parse(text: &str, config: &TokenizerConfig) -> Result<Self> {
        Self::new(config.query_terms(text).into_iter().map(|t| (t, 1.0)))
    }

    pub fn terms(&self) -> &[QueryTerm] {
        &self.terms
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.iter().any(|q| q.term == term)
    }

    /// Same terms with every weight multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.terms
                .iter()
                .map(|q| (q.term.clone(), q.weight * factor)),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedDoc {
    pub docno: String,
    pub score: f64,
    /// Baseline score, used as the first tie-breaker.
    pub baseline: f64,
}

/// Results ordered by score desc, then baseline desc, then docno asc.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankedList {
    entries: Vec<RankedDoc>,
}

fn rank_order(a: &RankedDoc, b: &RankedDoc) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| b.baseline.total_cmp(&a.baseline))
        .then_with(|| a.docno.cmp(&b.docno))
}

impl RankedList {
    pub fn from_unsorted(mut entries: Vec<RankedDoc>) -> Self {
        entries.sort_by(rank_order);
        Self { entries }
    }

    pub fn entries(&self) -> &[RankedDoc] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncate(&mut self, n: usize) {
        self.entries.truncate(n);
    }

    pub fn top(&self, n: usize) -> &[RankedDoc] {
        &self.entries[..n.min(self.entries.len())]
    }

    pub fn docnos(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.docno.as_str())
    }
}

/// Baseline term weight `(1 + ln tf) * ln(1 + N/df)`.
pub fn tfidf_weight(tf: u32, n_docs: usize, df: usize) -> f64 {
    if tf == 0 || df == 0 {
        return 0.0;
    }
    (1.0 + f64::from(tf).ln()) * (1.0 + n_docs as f64 / df as f64).ln()
}

/// Scores every document containing a query term and returns the top `top_n`.
pub fn tfidf_search(index: &Index, query: &Query, top_n: usize) -> Result<RankedList> {
    if top_n == 0 {
        return Err(Error::invalid("topN must be at least 1"));
    }
    let mut scores = vec![0.0f64; index.doc_count()];
    let mut touched = Vec::new();
    for q in query.terms() {
        let Some(t) = index.term_id(&q.term) else {
            continue;
        };
        let df = index.df_by_id(t);
        for (doc, c) in index.posting_slices(t) {
            let s = &mut scores[doc as usize];
            if *s == 0.0 {
                touched.push(doc);
            }
            *s += q.weight * tfidf_weight(index.tf(doc, c), index.doc_count(), df);
        }
    }
    let entries = touched
        .into_iter()
        .filter(|&d| scores[d as usize] > 0.0)
        .map(|d| {
            let score = scores[d as usize];
            RankedDoc {
                docno: index.doc(d).docno.clone(),
                score,
                baseline: score,
            }
        })
        .collect();
    let mut list = RankedList::from_unsorted(entries);
    list.truncate(top_n);
    Ok(list)
}

/// Weighted sum of the query terms' spectral vectors in `doc`; the zero
/// vector when no query term occurs there.
pub fn query_spectral(index: &Index, query: &Query, doc: DocId) -> SpectralVector {
    let length = f64::from(index.doc(doc).length.max(1));
    let mut acc = SpectralVector::zeros(index.order(), length);
    for q in query.terms() {
        if let Some(c) = index.term_id(&q.term).and_then(|t| index.coeffs(t, doc)) {
            acc.add_scaled(c, q.weight);
        }
    }
    acc
}

/// Re-scores `candidates` by the cosine between each document's query
/// spectrum and the objective, clamped to `[0, 1]`.
///
/// Documents without any query term score 0. Unknown docnos are rejected.
pub fn fvs_rerank(
    index: &Index,
    query: &Query,
    objective: &ObjectiveSpec,
    candidates: &RankedList,
    top_n: usize,
) -> Result<RankedList> {
    if top_n == 0 {
        return Err(Error::invalid("topN must be at least 1"));
    }
    let entries = candidates
        .entries()
        .par_iter()
        .map(|c| {
            let doc = index.doc_id(&c.docno).ok_or_else(|| {
                Error::invalid(format!("candidate {} is not in the index", c.docno))
            })?;
            let qs = query_spectral(index, query, doc);
            let score = if qs.is_zero() {
                0.0
            } else {
                let obj = objective.spectral(qs.length(), index.order())?;
                cosine_sim(&qs, &obj).clamp(0.0, 1.0)
            };
            Ok(RankedDoc {
                docno: c.docno.clone(),
                score,
                baseline: c.baseline,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut list = RankedList::from_unsorted(entries);
    list.truncate(top_n);
    Ok(list)
}

/// Writes `topic Q0 docno rank score tag` lines, preceded by optional `#`
/// header lines.
pub fn write_trec_run(
    mut out: impl Write,
    runs: &BTreeMap<u32, RankedList>,
    tag: &str,
    header: &[String],
) -> Result<()> {
    for h in header {
        writeln!(out, "# {h}")?;
    }
    for (topic, list) in runs {
        for (i, e) in list.entries().iter().enumerate() {
            writeln!(out, "{topic} Q0 {} {} {:.6} {tag}", e.docno, i + 1, e.score)?;
        }
    }
    Ok(())
}

/// Reads a TREC run file; lines starting with `#` are skipped. Results are
/// ordered by the file's rank column.
pub fn parse_trec_run(mut input: impl Read) -> Result<BTreeMap<u32, RankedList>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let text = String::from_utf8_lossy(&bytes);
    let mut rows: BTreeMap<u32, Vec<(u64, RankedDoc)>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        let [topic, _, docno, rank, score, _tag] = f[..] else {
            return Err(Error::parse(
                "run",
                line_no,
                format!("expected 6 fields, found {}", f.len()),
            ));
        };
        let topic: u32 = topic
            .parse()
            .map_err(|_| Error::parse("run", line_no, format!("bad topic `{topic}`")))?;
        let rank: u64 = rank
            .parse()
            .map_err(|_| Error::parse("run", line_no, format!("bad rank `{rank}`")))?;
        let score: f64 = score
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| Error::parse("run", line_no, format!("bad score `{score}`")))?;
        rows.entry(topic).or_default().push((
            rank,
            RankedDoc {
                docno: docno.to_string(),
                score,
                baseline: score,
            },
        ));
    }
    Ok(rows
        .into_iter()
        .map(|(topic, mut v)| {
            v.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.docno.cmp(&b.1.docno)));
            (
                topic,
                RankedList {
                    entries: v.into_iter().map(|(_, d)| d).collect(),
                },
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, RawDocument};
    use crate::spectral::{compute_spectral, reconstruct, TermPositions};

    fn cfg() -> TokenizerConfig {
        TokenizerConfig {
            stopwords: Default::default(),
            min_len: 1,
            stem: false,
        }
    }

    fn index(docs: &[(&str, &str)], order: usize) -> Index {
        let c = cfg();
        let streams: Vec<_> = docs
            .iter()
            .map(|(id, t)| tokenize(&RawDocument::new(*id, *t), &c))
            .collect();
        Index::build(&streams, order, c.fingerprint()).unwrap()
    }

    fn q(terms: &[(&str, f64)]) -> Query {
        Query::new(terms.iter().map(|(t, w)| (t.to_string(), *w))).unwrap()
    }

    #[test]
    fn query_validation() {
        assert!(Query::new(Vec::<(String, f64)>::new()).is_err());
        assert!(Query::new([("a", 0.0)]).is_err());
        assert!(Query::new([("a", f64::NAN)]).is_err());
        let merged = Query::new([("a", 1.0), ("b", 2.0), ("a", 0.5)]).unwrap();
        assert_eq!(merged.terms().len(), 2);
        assert_eq!(merged.terms()[0].weight, 1.5);
        assert!(Query::parse("the", &TokenizerConfig::default()).is_err());
    }

    #[test]
    fn single_term_formula() {
        let idx = index(&[("d1", "x y x"), ("d2", "y z")], 3);
        let res = tfidf_search(&idx, &q(&[("x", 1.0)]), 10).unwrap();
        assert_eq!(res.len(), 1);
        let expect = (1.0 + 2f64.ln()) * (1.0 + 2.0f64 / 1.0).ln();
        assert_eq!(res.entries()[0].docno, "d1");
        assert!((res.entries()[0].score - expect).abs() < 1e-12);
        assert!(tfidf_search(&idx, &q(&[("nope", 1.0)]), 10)
            .unwrap()
            .is_empty());
        assert!(tfidf_search(&idx, &q(&[("x", 1.0)]), 0).is_err());
    }

    #[test]
    fn hand_ranking() {
        // N = 3; df(apple) = 2, df(pear) = 2.
        let idx = index(
            &[
                ("d1", "apple apple apple pear"),
                ("d2", "pear pear fig"),
                ("d3", "apple fig fig"),
            ],
            2,
        );
        let res = tfidf_search(&idx, &q(&[("apple", 1.0), ("pear", 1.0)]), 10).unwrap();
        let idf = (1.0 + 3.0f64 / 2.0).ln();
        let d1 = (1.0 + 3f64.ln()) * idf + idf;
        let d2 = (1.0 + 2f64.ln()) * idf;
        let d3 = idf;
        let got: Vec<_> = res
            .entries()
            .iter()
            .map(|e| (e.docno.as_str(), e.score))
            .collect();
        assert_eq!(
            got.iter().map(|g| g.0).collect::<Vec<_>>(),
            ["d1", "d2", "d3"]
        );
        for ((_, s), e) in got.iter().zip([d1, d2, d3]) {
            assert!((s - e).abs() < 1e-12);
        }
    }

    #[test]
    fn ties_break_by_docno() {
        let idx = index(&[("b", "x"), ("a", "x"), ("c", "x")], 2);
        let res = tfidf_search(&idx, &q(&[("x", 1.0)]), 2).unwrap();
        assert_eq!(res.docnos().collect::<Vec<_>>(), ["a", "b"]);
    }

    #[test]
    fn query_spectral_cases() {
        let idx = index(&[("d", "x p p y p p p p p p")], 3);
        let one = query_spectral(&idx, &q(&[("x", 1.0)]), 0);
        assert_eq!(one, idx.postings("x")[0].vector);

        let both = query_spectral(&idx, &q(&[("x", 1.0), ("y", 1.0)]), 0);
        let union = compute_spectral(&TermPositions::new(vec![1, 4], 10).unwrap(), 3);
        for (a, b) in both.coeffs().iter().zip(union.coeffs()) {
            assert!((a - b).abs() < 1e-12);
        }

        let weighted = query_spectral(&idx, &q(&[("x", 2.0), ("y", 0.5)]), 0);
        let vx = &idx.postings("x")[0].vector;
        let vy = &idx.postings("y")[0].vector;
        for i in 0..=100 {
            let t = 10.0 * f64::from(i) / 100.0;
            let oracle = 2.0 * reconstruct(vx, t).unwrap() + 0.5 * reconstruct(vy, t).unwrap();
            assert!((reconstruct(&weighted, t).unwrap() - oracle).abs() < 1e-9);
        }

        assert!(query_spectral(&idx, &q(&[("nope", 1.0)]), 0).is_zero());
    }

    #[test]
    fn rerank_prefers_region() {
        let fill = |head: bool| {
            let mut w = vec!["p"; 30];
            let range = if head { 0..10 } else { 20..30 };
            for i in range {
                w[i] = "x";
            }
            w.join(" ")
        };
        let idx = index(
            &[
                ("head", &fill(true)),
                ("tail", &fill(false)),
                ("none", "p p p"),
            ],
            3,
        );
        let query = q(&[("x", 1.0)]);
        let cands = RankedList::from_unsorted(
            ["tail", "head", "none"]
                .iter()
                .map(|d| RankedDoc {
                    docno: d.to_string(),
                    score: 1.0,
                    baseline: 1.0,
                })
                .collect(),
        );
        let first = ObjectiveSpec::parse("1|3").unwrap();
        let res = fvs_rerank(&idx, &query, &first, &cands, 10).unwrap();
        assert_eq!(res.entries()[0].docno, "head");
        assert!(res.entries()[0].score > 0.9);
        let none = res.entries().iter().find(|e| e.docno == "none").unwrap();
        assert_eq!(none.score, 0.0);
        assert!(res.entries().iter().all(|e| (0.0..=1.0).contains(&e.score)));

        let last = ObjectiveSpec::parse("3|3").unwrap();
        let res = fvs_rerank(&idx, &query, &last, &cands, 1).unwrap();
        assert_eq!(res.docnos().collect::<Vec<_>>(), ["tail"]);
    }

    #[test]
    fn rerank_rejects_unknown_docs() {
        let idx = index(&[("d", "x")], 2);
        let cands = RankedList::from_unsorted(vec![RankedDoc {
            docno: "zz".into(),
            score: 1.0,
            baseline: 1.0,
        }]);
        let obj = ObjectiveSpec::parse("1|1").unwrap();
        assert!(fvs_rerank(&idx, &q(&[("x", 1.0)]), &obj, &cands, 5).is_err());
    }

    #[test]
    fn run_file_round_trip() {
        let mut runs = BTreeMap::new();
        runs.insert(
            7,
            RankedList::from_unsorted(vec![
                RankedDoc {
                    docno: "a".into(),
                    score: 0.5,
                    baseline: 0.5,
                },
                RankedDoc {
                    docno: "b".into(),
                    score: 0.25,
                    baseline: 0.25,
                },
            ]),
        );
        let mut out = Vec::new();
        write_trec_run(&mut out, &runs, "t", &["cfg=abc".into()]).unwrap();
        let text = String::from_utf8(out.clone()).unwrap();
        assert_eq!(
            text,
            "# cfg=abc\n7 Q0 a 1 0.500000 t\n7 Q0 b 2 0.250000 t\n"
        );
        let back = parse_trec_run(&out[..]).unwrap();
        assert_eq!(back[&7].docnos().collect::<Vec<_>>(), ["a", "b"]);
        assert!(parse_trec_run("1 Q0 a x 0.1 t".as_bytes()).is_err());
    }
}
