//! Corpus ingestion: TREC SGML, `docno<TAB>text` line corpora, topics, qrels,
//! and the position-numbering tokenizer.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use rust_stemmers::{Algorithm, Stemmer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::spectral::TermPositions;

/// Environment variable that replaces the built-in stopword list.
pub const STOPWORDS_ENV: &str = "FVS_STOPWORDS";

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// A document body with markup removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub docno: String,
    pub text: String,
}

impl RawDocument {
    pub fn new(docno: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            docno: docno.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizerConfig {
    pub stopwords: BTreeSet<String>,
    pub min_len: usize,
    pub stem: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            stopwords: parse_stopwords(DEFAULT_STOPWORDS),
            min_len: 2,
            stem: false,
        }
    }
}

fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

impl TokenizerConfig {
    /// Default settings with the stopword list read from `path`
    /// (one word per line, `#` comments allowed).
    pub fn with_stopword_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self {
            stopwords: parse_stopwords(&text),
            ..Self::default()
        })
    }

    /// Default settings, honouring [`STOPWORDS_ENV`] when set.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(STOPWORDS_ENV) {
            Some(path) => Self::with_stopword_file(path),
            None => Ok(Self::default()),
        }
    }

    /// Stable 64-bit digest of every setting that affects the token stream.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Sha256::new();
        h.update(b"fvs-tokenizer-v1\0");
        for w in &self.stopwords {
            h.update(w.as_bytes());
            h.update(b"\0");
        }
        h.update((self.min_len as u64).to_le_bytes());
        h.update([u8::from(self.stem)]);
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }

    /// Indexable terms of a free-text query, in order of appearance.
    pub fn query_terms(&self, text: &str) -> Vec<String> {
        tokenize(&RawDocument::new("", text), self)
            .tokens
            .into_iter()
            .filter(|t| t.indexable)
            .map(|t| t.term)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub position: u32,
    pub term: String,
    pub indexable: bool,
}

/// Tokens of one document, numbered `1..=L` without gaps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub docno: String,
    pub tokens: Vec<Token>,
}

impl TokenStream {
    /// Token count `L`, stopwords included.
    pub fn len(&self) -> u32 {
        self.tokens.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Positions of every indexable term, keyed by term.
    pub fn term_positions(&self) -> BTreeMap<&str, Vec<u32>> {
        let mut map: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
        for t in self.tokens.iter().filter(|t| t.indexable) {
            map.entry(t.term.as_str()).or_default().push(t.position);
        }
        map
    }

    /// Positions of `term` if it is indexable in this document.
    pub fn positions_of(&self, term: &str) -> Option<TermPositions> {
        let positions: Vec<u32> = self
            .tokens
            .iter()
            .filter(|t| t.indexable && t.term == term)
            .map(|t| t.position)
            .collect();
        if positions.is_empty() {
            return None;
        }
        TermPositions::new(positions, self.len()).ok()
    }
}

/// Splits on non-alphanumeric characters and lowercases. Every token takes a
/// position; stopwords and short tokens are kept but marked non-indexable.
pub fn tokenize(raw: &RawDocument, config: &TokenizerConfig) -> TokenStream {
    let stemmer = config.stem.then(|| Stemmer::create(Algorithm::English));
    let mut tokens = Vec::new();
    for piece in raw.text.split(|c: char| !c.is_alphanumeric()) {
        if piece.is_empty() {
            continue;
        }
        let lower = piece.to_lowercase();
        let indexable =
            lower.chars().count() >= config.min_len && !config.stopwords.contains(&lower);
        let term = match (&stemmer, indexable) {
            (Some(s), true) => s.stem(&lower).into_owned(),
            _ => lower,
        };
        tokens.push(Token {
            position: tokens.len() as u32 + 1,
            term,
            indexable,
        });
    }
    TokenStream {
        docno: raw.docno.clone(),
        tokens,
    }
}

fn read_lossy(mut input: impl Read) -> Result<String> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrecOptions {
    /// Index header and headline text inside `<DOC>`; when false only
    /// `<TEXT>` elements contribute.
    pub include_headers: bool,
}

impl Default for TrecOptions {
    fn default() -> Self {
        Self {
            include_headers: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrecWarning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct TrecParse {
    pub documents: Vec<RawDocument>,
    pub warnings: Vec<TrecWarning>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text.as_bytes()[..offset]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
        + 1
}

/// Finds an opening tag `<name>` or `<name attr...>` at or after `from`.
/// `upper` is the ASCII-uppercased text, `name` is uppercase.
fn find_open(upper: &str, name: &str, from: usize) -> Option<(usize, usize)> {
    let pat = format!("<{name}");
    let mut at = from;
    while let Some(rel) = upper[at..].find(&pat) {
        let start = at + rel;
        let after = start + pat.len();
        match upper.as_bytes().get(after) {
            Some(b'>') => return Some((start, after + 1)),
            Some(b) if b.is_ascii_whitespace() => {
                let end = upper[after..].find('>').map(|e| after + e + 1)?;
                return Some((start, end));
            }
            _ => at = after,
        }
    }
    None
}

fn find_close(upper: &str, name: &str, from: usize) -> Option<(usize, usize)> {
    let pat = format!("</{name}>");
    upper[from..]
        .find(&pat)
        .map(|rel| (from + rel, from + rel + pat.len()))
}

/// Replaces every markup tag with a space.
fn strip_tags(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find('<') {
        out.push_str(&rest[..i]);
        let tail = &rest[i + 1..];
        let is_tag = tail
            .chars()
            .next()
            .is_some_and(|c| c == '/' || c.is_ascii_alphabetic());
        match (is_tag, tail.find('>')) {
            (true, Some(end)) => {
                out.push(' ');
                rest = &tail[end + 1..];
            }
            _ => {
                out.push('<');
                rest = tail;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Parses a concatenation of `<DOC>...</DOC>` blocks.
///
/// Documents without `<DOCNO>` are skipped with a warning; a block missing
/// `</DOC>` ends at the next `<DOC>` (or end of input).
pub fn parse_trec_sgml(input: impl Read, options: TrecOptions) -> Result<TrecParse> {
    let text = read_lossy(input)?;
    Ok(parse_trec_str(&text, options))
}

pub fn parse_trec_str(text: &str, options: TrecOptions) -> TrecParse {
    let upper = text.to_ascii_uppercase();
    let mut out = TrecParse::default();
    let mut seen = BTreeSet::new();
    let mut at = 0;
    while let Some((start, body_start)) = find_open(&upper, "DOC", at) {
        let next_open = find_open(&upper, "DOC", body_start).map(|(s, _)| s);
        let close = find_close(&upper, "DOC", body_start);
        let (body_end, resume) = match (close, next_open) {
            (Some((cs, ce)), Some(no)) if cs < no => (cs, ce),
            (Some((cs, ce)), None) => (cs, ce),
            (_, Some(no)) => {
                out.warnings.push(TrecWarning {
                    line: line_of(text, start),
                    message: "unterminated <DOC>; resuming at next <DOC>".into(),
                });
                (no, no)
            }
            (None, None) => {
                out.warnings.push(TrecWarning {
                    line: line_of(text, start),
                    message: "unterminated <DOC> at end of input".into(),
                });
                (text.len(), text.len())
            }
        };
        at = resume;
        let body = &text[body_start..body_end];
        let body_upper = &upper[body_start..body_end];

        let docno_span = find_open(body_upper, "DOCNO", 0)
            .and_then(|(s, e)| find_close(body_upper, "DOCNO", e).map(|(cs, ce)| (s, e, cs, ce)));
        let Some((dn_s, dn_e, dn_cs, dn_ce)) = docno_span else {
            out.warnings.push(TrecWarning {
                line: line_of(text, start),
                message: "document without <DOCNO> skipped".into(),
            });
            continue;
        };
        let docno = strip_tags(&body[dn_e..dn_cs]).trim().to_string();
        if docno.is_empty() {
            out.warnings.push(TrecWarning {
                line: line_of(text, start),
                message: "empty <DOCNO>; document skipped".into(),
            });
            continue;
        }
        if !seen.insert(docno.clone()) {
            out.warnings.push(TrecWarning {
                line: line_of(text, start),
                message: format!("duplicate docno {docno}; later copy skipped"),
            });
            continue;
        }

        let content = if options.include_headers {
            let mut s = String::with_capacity(body.len());
            s.push_str(&body[..dn_s]);
            s.push(' ');
            s.push_str(&body[dn_ce..]);
            strip_tags(&s)
        } else {
            let mut s = String::new();
            let mut from = 0;
            while let Some((_, te)) = find_open(body_upper, "TEXT", from) {
                let (cs, ce) =
                    find_close(body_upper, "TEXT", te).unwrap_or((body.len(), body.len()));
                s.push_str(&strip_tags(&body[te..cs]));
                s.push(' ');
                from = ce;
            }
            s
        };
        out.documents.push(RawDocument {
            docno,
            text: content,
        });
    }
    out
}

/// Parses `docno<TAB>text` lines; blank lines are ignored.
pub fn parse_plain(input: impl Read) -> Result<Vec<RawDocument>> {
    let text = read_lossy(input)?;
    let mut docs = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (docno, body) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse("plain corpus", i + 1, "expected docno<TAB>text"))?;
        let docno = docno.trim();
        if docno.is_empty() {
            return Err(Error::parse("plain corpus", i + 1, "empty docno"));
        }
        if !seen.insert(docno.to_string()) {
            return Err(Error::parse(
                "plain corpus",
                i + 1,
                format!("duplicate docno {docno}"),
            ));
        }
        docs.push(RawDocument::new(docno, body));
    }
    Ok(docs)
}

/// Layout of a corpus file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DocFormat {
    Trec,
    Plain,
    /// TREC when a `<DOC>` tag appears, plain otherwise.
    #[default]
    Auto,
}

/// Reads a corpus file. TREC warnings are returned alongside the documents.
pub fn load_documents(
    path: impl AsRef<Path>,
    format: DocFormat,
    options: TrecOptions,
) -> Result<(Vec<RawDocument>, Vec<TrecWarning>)> {
    let text = read_lossy(std::fs::File::open(path)?)?;
    let trec = match format {
        DocFormat::Trec => true,
        DocFormat::Plain => false,
        DocFormat::Auto => text.to_ascii_uppercase().contains("<DOC>"),
    };
    if trec {
        let parsed = parse_trec_str(&text, options);
        Ok((parsed.documents, parsed.warnings))
    } else {
        Ok((parse_plain(text.as_bytes())?, Vec::new()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topic {
    pub id: u32,
    pub title: String,
}

/// Parses TREC `<top>` blocks, taking `<num>` and `<title>`.
pub fn parse_topics(input: impl Read) -> Result<Vec<Topic>> {
    let text = read_lossy(input)?;
    let upper = text.to_ascii_uppercase();
    let mut topics = Vec::new();
    let mut at = 0;
    while let Some((start, body_start)) = find_open(&upper, "TOP", at) {
        let end = find_close(&upper, "TOP", body_start)
            .ok_or_else(|| Error::parse("topics", line_of(&text, start), "unterminated <top>"))?;
        at = end.1;
        let body = &text[body_start..end.0];
        let body_upper = &upper[body_start..end.0];
        let field = |name: &str| -> Option<(usize, String)> {
            let (s, e) = find_open(body_upper, name, 0)?;
            let stop = body[e..].find('<').map_or(body.len(), |x| e + x);
            let value = body[e..stop]
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ");
            Some((body_start + s, value))
        };
        let (num_at, num) = field("NUM")
            .ok_or_else(|| Error::parse("topics", line_of(&text, start), "missing <num>"))?;
        let num = num
            .strip_prefix("Number:")
            .unwrap_or(&num)
            .trim()
            .to_string();
        let id: u32 = num.parse().ok().filter(|&id| id > 0).ok_or_else(|| {
            Error::parse(
                "topics",
                line_of(&text, num_at),
                format!("bad topic number `{num}`"),
            )
        })?;
        let (title_at, title) = field("TITLE")
            .ok_or_else(|| Error::parse("topics", line_of(&text, start), "missing <title>"))?;
        let title = title
            .strip_prefix("Topic:")
            .unwrap_or(&title)
            .trim()
            .to_string();
        if title.is_empty() {
            return Err(Error::parse(
                "topics",
                line_of(&text, title_at),
                "empty title",
            ));
        }
        topics.push(Topic { id, title });
    }
    Ok(topics)
}

/// Relevance judgments keyed by topic then docno.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QrelSet {
    judgments: BTreeMap<u32, BTreeMap<String, u32>>,
}

impl QrelSet {
    pub fn insert(&mut self, topic: u32, docno: impl Into<String>, grade: u32) -> Result<()> {
        let docno = docno.into();
        let entry = self.judgments.entry(topic).or_default();
        if entry.contains_key(&docno) {
            return Err(Error::invalid(format!(
                "duplicate judgment for topic {topic}, doc {docno}"
            )));
        }
        entry.insert(docno, grade);
        Ok(())
    }

    pub fn grade(&self, topic: u32, docno: &str) -> Option<u32> {
        self.judgments.get(&topic)?.get(docno).copied()
    }

    pub fn is_relevant(&self, topic: u32, docno: &str) -> bool {
        self.grade(topic, docno).is_some_and(|g| g > 0)
    }

    pub fn contains_topic(&self, topic: u32) -> bool {
        self.judgments.contains_key(&topic)
    }

    /// Number of relevant documents, `None` for unjudged topics.
    pub fn relevant_count(&self, topic: u32) -> Option<usize> {
        self.judgments
            .get(&topic)
            .map(|m| m.values().filter(|&&g| g > 0).count())
    }

    pub fn topics(&self) -> impl Iterator<Item = u32> + '_ {
        self.judgments.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parses whitespace-separated `topic iteration docno grade` lines.
pub fn parse_qrels(input: impl Read) -> Result<QrelSet> {
    let text = read_lossy(input)?;
    let mut set = QrelSet::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let [topic, _iter, docno, grade] = fields[..] else {
            return Err(Error::parse(
                "qrels",
                line_no,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        };
        let topic: u32 = topic
            .parse()
            .map_err(|_| Error::parse("qrels", line_no, format!("bad topic id `{topic}`")))?;
        let grade: u32 = grade.parse().map_err(|_| {
            Error::parse("qrels", line_no, format!("bad relevance grade `{grade}`"))
        })?;
        set.insert(topic, docno, grade)
            .map_err(|e| Error::parse("qrels", line_no, e.to_string()))?;
    }
    Ok(set)
}

/// Tokenized documents kept in memory for positional diagnostics.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    streams: Vec<TokenStream>,
    by_docno: HashMap<String, usize>,
}

impl Corpus {
    pub fn from_documents(docs: &[RawDocument], config: &TokenizerConfig) -> Result<Self> {
        let mut corpus = Self::default();
        for d in docs {
            corpus.push(tokenize(d, config))?;
        }
        Ok(corpus)
    }

    pub fn push(&mut self, stream: TokenStream) -> Result<()> {
        if self.by_docno.contains_key(&stream.docno) {
            return Err(Error::invalid(format!("duplicate docno {}", stream.docno)));
        }
        self.by_docno
            .insert(stream.docno.clone(), self.streams.len());
        self.streams.push(stream);
        Ok(())
    }

    pub fn get(&self, docno: &str) -> Option<&TokenStream> {
        self.by_docno.get(docno).map(|&i| &self.streams[i])
    }

    pub fn streams(&self) -> &[TokenStream] {
        &self.streams
    }

    pub fn into_streams(self) -> Vec<TokenStream> {
        self.streams
    }

    pub fn len(&self) -> usize {
        self.streams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }
}
