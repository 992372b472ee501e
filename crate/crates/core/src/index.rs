//! Inverted file whose postings carry spectral vectors instead of positions.
//!
//! # File format (version 1)
//!
//! All integers are unsigned little-endian; coefficients are IEEE-754
//! binary64 little-endian.
//!
//! ```text
//! header      magic "FVSI" (4 bytes)
//!             version        u32   = 1
//!             order n        u32
//!             doc count N    u64
//!             tokenizer fp   u64
//!             term count T   u64
//! doc table   N x { docno_len u32, docno UTF-8 bytes, token count L u32 }
//! vocabulary  T x { term_len u32, term UTF-8 bytes, df u32, offset u64 }
//!             terms strictly ascending (byte order); offset is the byte
//!             position of the term's first posting inside the postings body
//! postings    body_len u64
//!             per term, df x { doc ordinal u32, (2n+1) x f64 }
//! ```
//!
//! `df` is stored redundantly: on load, each offset must equal the running
//! sum of `df * (4 + 8(2n+1))` and `body_len` must match the total.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::TokenStream;
use crate::error::{Error, Result};
use crate::spectral::{compute_spectral, SpectralVector, TermPositions, MAX_ORDER};

pub const MAGIC: &[u8; 4] = b"FVSI";
pub const FORMAT_VERSION: u32 = 1;

pub type DocId = u32;
pub type TermId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocEntry {
    pub docno: String,
    /// Token count, stopwords included.
    pub length: u32,
}

/// One `(document, spectral vector)` entry of an inverted list.
#[derive(Debug, Clone, PartialEq)]
pub struct Posting {
    pub doc: DocId,
    pub vector: SpectralVector,
}

impl Posting {
    /// Occurrence count recovered from `a0 = tf / sqrt(L)`.
    pub fn tf(&self) -> u32 {
        recover_tf(self.vector.a0(), self.vector.length())
    }
}

pub(crate) fn recover_tf(a0: f64, length: f64) -> u32 {
    (a0 * length.sqrt()).round() as u32
}

#[derive(Debug, Clone, Default, PartialEq)]
struct PostingList {
    docs: Vec<DocId>,
    coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    order: usize,
    fingerprint: u64,
    docs: Vec<DocEntry>,
    terms: Vec<String>,
    lists: Vec<PostingList>,
    docno_ids: HashMap<String, DocId>,
    term_ids: HashMap<String, TermId>,
    // (term, slot in that term's list) per document
    forward: Vec<Vec<(TermId, u32)>>,
}

impl Index {
    /// Builds the index from tokenized documents. `fingerprint` identifies the
    /// tokenizer configuration that produced the streams.
    ///
    /// Per-document coefficients are computed in parallel and merged in input
    /// order, so the result does not depend on thread count.
    pub fn build(streams: &[TokenStream], order: usize, fingerprint: u64) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::Build(format!(
                "Fourier order must be in 1..={MAX_ORDER}, got {order}"
            )));
        }
        let mut seen = HashSet::with_capacity(streams.len());
        for s in streams {
            if s.docno.is_empty() {
                return Err(Error::Build("empty docno".into()));
            }
            if !seen.insert(s.docno.as_str()) {
                return Err(Error::Build(format!("duplicate docno {}", s.docno)));
            }
        }
        if streams.len() > u32::MAX as usize {
            return Err(Error::Build("too many documents".into()));
        }

        let per_doc: Vec<Vec<(String, Vec<f64>)>> = streams
            .par_iter()
            .map(|s| doc_vectors(s, order))
            .collect::<Result<_>>()?;

        let mut merged: BTreeMap<String, PostingList> = BTreeMap::new();
        for (doc, vectors) in per_doc.into_iter().enumerate() {
            for (term, coeffs) in vectors {
                let list = merged.entry(term).or_default();
                list.docs.push(doc as DocId);
                list.coeffs.extend_from_slice(&coeffs);
            }
        }
        let docs = streams
            .iter()
            .map(|s| DocEntry {
                docno: s.docno.clone(),
                length: s.len(),
            })
            .collect();
        let (terms, lists) = merged.into_iter().unzip();
        Ok(Self::assemble(order, fingerprint, docs, terms, lists))
    }

    fn assemble(
        order: usize,
        fingerprint: u64,
        docs: Vec<DocEntry>,
        terms: Vec<String>,
        lists: Vec<PostingList>,
    ) -> Self {
        let docno_ids = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.docno.clone(), i as DocId))
            .collect();
        let term_ids = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TermId))
            .collect();
        let mut forward = vec![Vec::new(); docs.len()];
        for (t, list) in lists.iter().enumerate() {
            for (slot, &d) in list.docs.iter().enumerate() {
                forward[d as usize].push((t as TermId, slot as u32));
            }
        }
        Self {
            order,
            fingerprint,
            docs,
            terms,
            lists,
            docno_ids,
            term_ids,
            forward,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn docs(&self) -> &[DocEntry] {
        &self.docs
    }

    pub fn doc(&self, id: DocId) -> &DocEntry {
        &self.docs[id as usize]
    }

    pub fn doc_id(&self, docno: &str) -> Option<DocId> {
        self.docno_ids.get(docno).copied()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.terms.len()
    }

    /// Vocabulary in ascending order.
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.term_ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id as usize]
    }

    pub fn df(&self, term: &str) -> usize {
        self.term_id(term).map_or(0, |t| self.df_by_id(t))
    }

    pub fn df_by_id(&self, term: TermId) -> usize {
        self.lists[term as usize].docs.len()
    }

    /// `ln(1 + N/df)`; 0 for unknown terms.
    pub fn idf(&self, term: &str) -> f64 {
        self.term_id(term).map_or(0.0, |t| self.idf_by_id(t))
    }

    pub fn idf_by_id(&self, term: TermId) -> f64 {
        let df = self.df_by_id(term);
        if df == 0 {
            return 0.0;
        }
        (1.0 + self.docs.len() as f64 / df as f64).ln()
    }

    fn width(&self) -> usize {
        2 * self.order + 1
    }

    /// Postings of `term` ordered by document; empty when absent.
    pub fn postings(&self, term: &str) -> Vec<Posting> {
        let Some(t) = self.term_id(term) else {
            return Vec::new();
        };
        let list = &self.lists[t as usize];
        let w = self.width();
        list.docs
            .iter()
            .zip(list.coeffs.chunks_exact(w))
            .map(|(&doc, c)| Posting {
                doc,
                vector: self.vector(doc, c),
            })
            .collect()
    }

    /// Raw `(doc, coefficients)` pairs of a term's list.
    pub fn posting_slices(&self, term: TermId) -> impl Iterator<Item = (DocId, &[f64])> + '_ {
        let list = &self.lists[term as usize];
        list.docs
            .iter()
            .copied()
            .zip(list.coeffs.chunks_exact(self.width()))
    }

    /// Coefficients of `term` in `doc`, if the term occurs there.
    pub fn coeffs(&self, term: TermId, doc: DocId) -> Option<&[f64]> {
        let list = &self.lists[term as usize];
        let slot = list.docs.binary_search(&doc).ok()?;
        Some(self.slot(term, slot as u32))
    }

    fn slot(&self, term: TermId, slot: u32) -> &[f64] {
        let w = self.width();
        let start = slot as usize * w;
        &self.lists[term as usize].coeffs[start..start + w]
    }

    /// Every indexed term of `doc` with its coefficients, in term-id order.
    pub fn doc_terms(&self, doc: DocId) -> impl Iterator<Item = (TermId, &[f64])> + '_ {
        self.forward[doc as usize]
            .iter()
            .map(move |&(t, slot)| (t, self.slot(t, slot)))
    }

    /// Wraps a coefficient slice as a vector over `doc`'s length.
    pub fn vector(&self, doc: DocId, coeffs: &[f64]) -> SpectralVector {
        SpectralVector::from_coeffs(coeffs.to_vec(), f64::from(self.doc(doc).length.max(1)))
            .expect("index coefficients are validated")
    }

    pub fn tf(&self, doc: DocId, coeffs: &[f64]) -> u32 {
        recover_tf(coeffs[0], f64::from(self.doc(doc).length))
    }

    /// Serializes to the version-1 binary layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let w = self.width();
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.order as u32).to_le_bytes());
        out.extend_from_slice(&(self.docs.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.fingerprint.to_le_bytes());
        out.extend_from_slice(&(self.terms.len() as u64).to_le_bytes());
        for d in &self.docs {
            out.extend_from_slice(&(d.docno.len() as u32).to_le_bytes());
            out.extend_from_slice(d.docno.as_bytes());
            out.extend_from_slice(&d.length.to_le_bytes());
        }
        let record = (4 + 8 * w) as u64;
        let mut offset = 0u64;
        for (term, list) in self.terms.iter().zip(&self.lists) {
            out.extend_from_slice(&(term.len() as u32).to_le_bytes());
            out.extend_from_slice(term.as_bytes());
            out.extend_from_slice(&(list.docs.len() as u32).to_le_bytes());
            out.extend_from_slice(&offset.to_le_bytes());
            offset += list.docs.len() as u64 * record;
        }
        out.extend_from_slice(&offset.to_le_bytes());
        for list in &self.lists {
            for (doc, c) in list.docs.iter().zip(list.coeffs.chunks_exact(w)) {
                out.extend_from_slice(&doc.to_le_bytes());
                for v in c {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        let magic = r.take(4, "header")?;
        if magic != MAGIC {
            return Err(load_err("header", "bad magic"));
        }
        let version = r.u32("header")?;
        if version != FORMAT_VERSION {
            return Err(load_err(
                "header",
                format!("unsupported format version {version} (expected {FORMAT_VERSION})"),
            ));
        }
        let order = r.u32("header")? as usize;
        if order > MAX_ORDER {
            return Err(load_err(
                "header",
                format!("Fourier order {order} exceeds {MAX_ORDER}"),
            ));
        }
        let n_docs = r.len_u64("header")?;
        let fingerprint = r.u64("header")?;
        let n_terms = r.len_u64("header")?;
        let w = 2 * order + 1;

        let mut docs = Vec::with_capacity(n_docs.min(bytes.len()));
        let mut docnos = HashSet::new();
        for _ in 0..n_docs {
            let docno = r.string("doc table")?;
            let length = r.u32("doc table")?;
            if docno.is_empty() || !docnos.insert(docno.clone()) {
                return Err(load_err(
                    "doc table",
                    format!("empty or duplicate docno `{docno}`"),
                ));
            }
            docs.push(DocEntry { docno, length });
        }

        let record = (4 + 8 * w) as u64;
        let mut vocab = Vec::with_capacity(n_terms.min(bytes.len()));
        let mut expected = 0u64;
        for _ in 0..n_terms {
            let term = r.string("vocabulary")?;
            let df = r.u32("vocabulary")?;
            let offset = r.u64("vocabulary")?;
            if offset != expected {
                return Err(load_err(
                    "vocabulary",
                    format!(
                        "df/offset mismatch for `{term}`: offset {offset}, expected {expected}"
                    ),
                ));
            }
            if let Some((prev, _)) = vocab.last() {
                if *prev >= term {
                    return Err(load_err(
                        "vocabulary",
                        format!("terms out of order at `{term}`"),
                    ));
                }
            }
            expected += u64::from(df) * record;
            vocab.push((term, df));
        }

        let body_len = r.u64("postings")?;
        if body_len != expected {
            return Err(load_err(
                "postings",
                format!("body length {body_len} disagrees with df total {expected}"),
            ));
        }
        let mut terms = Vec::with_capacity(vocab.len());
        let mut lists = Vec::with_capacity(vocab.len());
        for (term, df) in vocab {
            let mut list = PostingList {
                docs: Vec::with_capacity(df as usize),
                coeffs: Vec::with_capacity(df as usize * w),
            };
            for _ in 0..df {
                let doc = r.u32("postings")?;
                if doc as usize >= docs.len() || list.docs.last().is_some_and(|&p| p >= doc) {
                    return Err(load_err(
                        "postings",
                        format!("bad doc ordinal {doc} in `{term}`"),
                    ));
                }
                list.docs.push(doc);
                for _ in 0..w {
                    let v = r.f64("postings")?;
                    if !v.is_finite() {
                        return Err(load_err(
                            "postings",
                            format!("non-finite coefficient in `{term}`"),
                        ));
                    }
                    list.coeffs.push(v);
                }
                if list.coeffs[list.coeffs.len() - w] <= 0.0 {
                    return Err(load_err("postings", format!("non-positive a0 in `{term}`")));
                }
            }
            terms.push(term);
            lists.push(list);
        }
        if r.pos != bytes.len() {
            return Err(load_err(
                "postings",
                format!("{} trailing bytes", bytes.len() - r.pos),
            ));
        }
        Ok(Self::assemble(order, fingerprint, docs, terms, lists))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Diagnostic dump: one `term<TAB>docno<TAB>tf<TAB>coefficients` line per
    /// posting, coefficients space-separated.
    pub fn export_postings(&self, mut out: impl Write) -> Result<()> {
        for (t, term) in self.terms.iter().enumerate() {
            for (doc, c) in self.posting_slices(t as TermId) {
                let coeffs = c
                    .iter()
                    .map(|v| format!("{v:.17e}"))
                    .collect::<Vec<_>>()
                    .join(" ");
                writeln!(
                    out,
                    "{term}\t{}\t{}\t{coeffs}",
                    self.doc(doc).docno,
                    self.tf(doc, c)
                )?;
            }
        }
        Ok(())
    }
}

fn doc_vectors(stream: &TokenStream, order: usize) -> Result<Vec<(String, Vec<f64>)>> {
    let length = stream.len();
    if length == 0 {
        return Ok(Vec::new());
    }
    stream
        .term_positions()
        .into_iter()
        .map(|(term, positions)| {
            let tp = TermPositions::new(positions, length)
                .map_err(|e| Error::Build(format!("{}: {e}", stream.docno)))?;
            Ok((term.to_string(), compute_spectral(&tp, order).into_coeffs()))
        })
        .collect()
}

fn load_err(section: &'static str, message: impl Into<String>) -> Error {
    Error::Load {
        section,
        message: message.into(),
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, section: &'static str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(load_err(section, "truncated file"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, section: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4, section)?.try_into().unwrap(),
        ))
    }

    fn u64(&mut self, section: &'static str) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8, section)?.try_into().unwrap(),
        ))
    }

    fn len_u64(&mut self, section: &'static str) -> Result<usize> {
        let v = self.u64(section)?;
        usize::try_from(v).map_err(|_| load_err(section, format!("count {v} too large")))
    }

    fn f64(&mut self, section: &'static str) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8, section)?.try_into().unwrap(),
        ))
    }

    fn string(&mut self, section: &'static str) -> Result<String> {
        let n = self.u32(section)? as usize;
        let raw = self.take(n, section)?;
        String::from_utf8(raw.to_vec()).map_err(|_| load_err(section, "invalid UTF-8"))
    }
}
