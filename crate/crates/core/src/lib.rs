//! Fourier vector scoring for text retrieval.
//!
//! Each term's occurrences inside a document are modelled as a pulse train
//! over the document body and summarised by a truncated Fourier series. The
//! resulting spectral vectors live in the postings of an inverted file and
//! support two operations beyond plain tf-idf:
//!
//! - re-ranking by cosine similarity between the query-term spectrum and a
//!   region objective such as `1|3` (first third) or `1|3+3|3`;
//! - pseudo-relevance feedback that harvests terms whose spectra overlap the
//!   query's spectrum in the top-ranked documents.
//!
//! The [`eval`] module scores runs against qrels and measures where query
//! terms sit in the top documents; [`synth`] builds deterministic corpora
//! with planted positional structure for testing all of the above.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod expansion;
pub mod index;
pub mod objective;
pub mod retrieval;
pub mod spectral;
pub mod synth;

pub use corpus::{
    load_documents, parse_plain, parse_qrels, parse_topics, parse_trec_sgml, tokenize, Corpus,
    DocFormat, QrelSet, RawDocument, Token, TokenStream, TokenizerConfig, Topic, TrecOptions,
};
pub use error::{Error, Result};
pub use eval::{
    average_precision, fitting_rate, position_skewness, precision_at_k, r_precision, EvalOptions,
    EvalReport, SkewnessMode,
};
pub use expansion::{
    candidate_terms, expand_query, expanded_search, Aggregator, ExpansionCandidates,
    ExpansionConfig, ExpansionParams, WeightMode,
};
pub use index::{DocId, Index, Posting};
pub use objective::{in_region, objective_spectral, parse_objective, ObjectiveSpec};
pub use retrieval::{fvs_rerank, query_spectral, tfidf_search, Query, RankedDoc, RankedList};
pub use spectral::{
    add, compute_spectral, cosine_sim, dot, reconstruct, rect_spectral, scale, SpectralVector,
    TermPositions,
};
pub use synth::{generate, SynthSpec};
