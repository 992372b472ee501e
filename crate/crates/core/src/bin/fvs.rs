use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use fvs::corpus::{load_documents, parse_qrels, parse_topics, DocFormat, TrecOptions};
use fvs::eval::{evaluate, Diagnostics, EvalOptions, SkewnessMode};
use fvs::expansion::{expanded_search, Aggregator, ExpansionConfig, ExpansionParams, WeightMode};
use fvs::index::Index;
use fvs::retrieval::{fvs_rerank, parse_trec_run, tfidf_search, write_trec_run, Query, RankedList};
use fvs::spectral::DEFAULT_ORDER;
use fvs::synth::{generate, presets, SynthSpec};
use fvs::{Corpus, Error, ObjectiveSpec, Result, TokenizerConfig};

#[derive(Parser)]
#[command(
    name = "fvs",
    version,
    about = "Fourier vector scoring for text retrieval"
)]
struct Cli {
    /// Worker threads; defaults to the number of available cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize corpora and write a spectral index.
    Index(IndexArgs),
    /// Rank documents with the tf-idf baseline.
    Search(SearchArgs),
    /// Re-rank baseline candidates against a region objective.
    Rerank(RerankArgs),
    /// Pseudo-relevance feedback with spectral candidate terms.
    Expand(ExpandArgs),
    /// Score run files against qrels, optionally with positional diagnostics.
    Eval(EvalArgs),
    /// Write a synthetic corpus with qrels and topics.
    GenSynthetic(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Trec,
    Plain,
    Auto,
}

impl From<FormatArg> for DocFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Trec => DocFormat::Trec,
            FormatArg::Plain => DocFormat::Plain,
            FormatArg::Auto => DocFormat::Auto,
        }
    }
}

#[derive(Args)]
struct TokenizerArgs {
    /// Stopword list, one word per line; overrides $FVS_STOPWORDS.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Apply the English Snowball stemmer.
    #[arg(long)]
    stem: bool,
    /// Shortest indexable token.
    #[arg(long, default_value_t = 2)]
    min_len: usize,
}

impl TokenizerArgs {
    fn config(&self) -> Result<TokenizerConfig> {
        let mut cfg = match &self.stopwords {
            Some(path) => TokenizerConfig::with_stopword_file(path)?,
            None => TokenizerConfig::from_env()?,
        };
        cfg.min_len = self.min_len;
        cfg.stem = self.stem;
        Ok(cfg)
    }
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus file; repeat for several.
    #[arg(long = "corpus", required = true)]
    corpora: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    format: FormatArg,
    /// Index only <TEXT> elements of TREC documents.
    #[arg(long)]
    no_headers: bool,
}

impl CorpusArgs {
    fn load(&self, config: &TokenizerConfig) -> Result<Corpus> {
        let options = TrecOptions {
            include_headers: !self.no_headers,
        };
        let mut docs = Vec::new();
        for path in &self.corpora {
            let (mut d, warnings) = load_documents(path, self.format.into(), options)
                .map_err(|e| with_path(e, path))?;
            for w in warnings {
                eprintln!("fvs: warning: {}:{}: {}", path.display(), w.line, w.message);
            }
            docs.append(&mut d);
        }
        Corpus::from_documents(&docs, config)
    }
}

#[derive(Args)]
struct IndexArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
    /// Output index file.
    #[arg(short, long)]
    output: PathBuf,
    /// Fourier order n.
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    order: usize,
    /// Also dump postings as `term<TAB>docno<TAB>tf<TAB>coeffs`.
    #[arg(long)]
    export_postings: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    /// TREC topics file; titles become queries.
    #[arg(long, conflicts_with = "query")]
    topics: Option<PathBuf>,
    /// Single free-text query, reported as topic `--topic-id`.
    #[arg(long, required_unless_present = "topics")]
    query: Option<String>,
    #[arg(long, default_value_t = 1)]
    topic_id: u32,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
    /// Documents kept per topic.
    #[arg(long, default_value_t = 1000)]
    top_n: usize,
    /// Run file; standard output when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Run tag written in the last column.
    #[arg(long)]
    tag: Option<String>,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    query: QueryArgs,
}

#[derive(Args)]
struct RerankArgs {
    #[command(flatten)]
    query: QueryArgs,
    /// Region objective such as "1|3+3|3".
    #[arg(long)]
    objective: ObjectiveSpec,
    /// Baseline candidates re-ranked per topic.
    #[arg(long, default_value_t = fvs::retrieval::DEFAULT_RERANK_DEPTH)]
    candidates: usize,
    /// Take candidates from this run file instead of a fresh baseline.
    #[arg(long)]
    baseline: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightArg {
    Unit,
    Similarity,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregateArg {
    Sum,
    Max,
    Mean,
}

#[derive(Args)]
struct ExpandArgs {
    #[command(flatten)]
    query: QueryArgs,
    /// Feedback documents.
    #[arg(long, default_value_t = fvs::expansion::DEFAULT_FEEDBACK_DOCS)]
    r: usize,
    /// Expansion terms.
    #[arg(long, default_value_t = fvs::expansion::DEFAULT_EXPANSION_TERMS)]
    k: usize,
    #[arg(long, value_enum, default_value_t = WeightArg::Unit)]
    weights: WeightArg,
    /// Weight of the original query terms.
    #[arg(long, default_value_t = fvs::expansion::DEFAULT_ORIGINAL_WEIGHT)]
    w0: f64,
    #[arg(long, value_enum, default_value_t = AggregateArg::Sum)]
    aggregate: AggregateArg,
    /// Smallest collection df of a candidate term.
    #[arg(long, default_value_t = fvs::expansion::DEFAULT_MIN_DF)]
    min_df: usize,
    /// Write `topic<TAB>rank<TAB>term<TAB>score` candidate lists here.
    #[arg(long)]
    candidates_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    qrels: PathBuf,
    /// Run file; repeat to compare several.
    #[arg(long = "run", required = true)]
    runs: Vec<PathBuf>,
    /// Precision cutoff.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Top documents inspected by the positional diagnostics.
    #[arg(long, default_value_t = 10)]
    depth: usize,
    /// Topics with fewer hits get no diagnostics.
    #[arg(long, default_value_t = 11)]
    min_hits: usize,
    /// Corpus files for positional diagnostics (needs --topics).
    #[arg(long = "corpus", requires = "topics")]
    corpora: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    format: FormatArg,
    #[arg(long)]
    no_headers: bool,
    #[arg(long, requires = "corpora")]
    topics: Option<PathBuf>,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
    /// Region used for the fitting rate.
    #[arg(long)]
    objective: Option<ObjectiveSpec>,
    /// Average per-document skewness instead of pooling positions.
    #[arg(long)]
    per_doc_skewness: bool,
    /// Per-topic metrics CSV.
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    /// Per-topic diagnostics CSV.
    #[arg(long)]
    diagnostics_out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Named preset.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(presets::NAMES), required_unless_present = "spec")]
    preset: Option<String>,
    /// JSON generator spec.
    #[arg(long, conflicts_with = "preset")]
    spec: Option<PathBuf>,
    /// Overrides the seed of the preset or spec.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory receiving corpus.tsv, qrels.txt, topics.txt and labels.tsv.
    #[arg(long)]
    out_dir: PathBuf,
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Io(io) => Error::Io(io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        other => other,
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| with_path(e.into(), path))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| with_path(e.into(), path))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Header lines of a run file, ending with a digest of the lines before it.
fn run_header(fields: &[(&str, String)]) -> Vec<String> {
    let mut lines: Vec<String> = fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let mut h = Sha256::new();
    for l in &lines {
        h.update(l.as_bytes());
        h.update(b"\n");
    }
    let digest = h.finalize();
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    lines.insert(0, "fvs-run v1".into());
    lines.push(format!("config_fingerprint={hex}"));
    lines
}

struct Loaded {
    index: Index,
    queries: BTreeMap<u32, Query>,
    tokenizer_fingerprint: u64,
}

fn load_topics(path: &Path, config: &TokenizerConfig) -> Result<BTreeMap<u32, Query>> {
    let mut queries = BTreeMap::new();
    for t in parse_topics(open(path)?)? {
        match Query::parse(&t.title, config) {
            Ok(q) => {
                queries.insert(t.id, q);
            }
            Err(_) => eprintln!(
                "fvs: warning: topic {} has no indexable terms, skipped",
                t.id
            ),
        }
    }
    Ok(queries)
}

fn load_queries(args: &QueryArgs, config: &TokenizerConfig) -> Result<BTreeMap<u32, Query>> {
    let mut queries = BTreeMap::new();
    match (&args.topics, &args.query) {
        (Some(path), _) => return load_topics(path, config),
        (None, Some(text)) => {
            queries.insert(args.topic_id, Query::parse(text, config)?);
        }
        (None, None) => return Err(Error::invalid("either --topics or --query is required")),
    }
    Ok(queries)
}

fn load(args: &QueryArgs) -> Result<Loaded> {
    if args.top_n == 0 {
        return Err(Error::invalid("--top-n must be at least 1"));
    }
    let config = args.tokenizer.config()?;
    let index = Index::load(&args.index).map_err(|e| with_path(e, &args.index))?;
    if index.fingerprint() != config.fingerprint() {
        return Err(Error::invalid(format!(
            "{} was built with a different tokenizer configuration (index {:016x}, flags {:016x})",
            args.index.display(),
            index.fingerprint(),
            config.fingerprint()
        )));
    }
    let queries = load_queries(args, &config)?;
    Ok(Loaded {
        index,
        queries,
        tokenizer_fingerprint: config.fingerprint(),
    })
}

fn base_fields(args: &QueryArgs, loaded: &Loaded, command: &str) -> Vec<(&'static str, String)> {
    vec![
        ("command", command.to_string()),
        ("index", args.index.display().to_string()),
        ("order", loaded.index.order().to_string()),
        (
            "tokenizer",
            format!("{:016x}", loaded.tokenizer_fingerprint),
        ),
        ("top_n", args.top_n.to_string()),
    ]
}

fn emit(
    args: &QueryArgs,
    default_tag: &str,
    fields: &[(&str, String)],
    runs: &BTreeMap<u32, RankedList>,
) -> Result<()> {
    let mut out = output(args.output.as_deref())?;
    let tag = args.tag.as_deref().unwrap_or(default_tag);
    write_trec_run(&mut out, runs, tag, &run_header(fields))?;
    out.flush()?;
    Ok(())
}

fn cmd_index(args: &IndexArgs) -> Result<()> {
    let config = args.tokenizer.config()?;
    let corpus = args.corpus.load(&config)?;
    let index = Index::build(corpus.streams(), args.order, config.fingerprint())?;
    index
        .save(&args.output)
        .map_err(|e| with_path(e, &args.output))?;
    if let Some(path) = &args.export_postings {
        let mut out = create(path)?;
        index.export_postings(&mut out)?;
        out.flush()?;
    }
    eprintln!(
        "fvs: indexed {} documents, {} terms, order {}",
        index.doc_count(),
        index.vocabulary_size(),
        index.order()
    );
    Ok(())
}

fn cmd_search(args: &SearchArgs) -> Result<()> {
    let loaded = load(&args.query)?;
    let mut runs = BTreeMap::new();
    for (&topic, q) in &loaded.queries {
        runs.insert(topic, tfidf_search(&loaded.index, q, args.query.top_n)?);
    }
    let fields = base_fields(&args.query, &loaded, "search");
    emit(&args.query, "tfidf", &fields, &runs)
}

fn cmd_rerank(args: &RerankArgs) -> Result<()> {
    if args.candidates == 0 {
        return Err(Error::invalid("--candidates must be at least 1"));
    }
    let loaded = load(&args.query)?;
    let baseline = match &args.baseline {
        Some(path) => Some(parse_trec_run(open(path)?)?),
        None => None,
    };
    let mut runs = BTreeMap::new();
    for (&topic, q) in &loaded.queries {
        let mut cands = match &baseline {
            Some(b) => b.get(&topic).cloned().unwrap_or_default(),
            None => tfidf_search(&loaded.index, q, args.candidates)?,
        };
        cands.truncate(args.candidates);
        runs.insert(
            topic,
            fvs_rerank(&loaded.index, q, &args.objective, &cands, args.query.top_n)?,
        );
    }
    let mut fields = base_fields(&args.query, &loaded, "rerank");
    fields.push(("objective", args.objective.to_string()));
    fields.push(("candidates", args.candidates.to_string()));
    if let Some(b) = &args.baseline {
        fields.push(("baseline", b.display().to_string()));
    }
    emit(&args.query, "fvs", &fields, &runs)
}

fn cmd_expand(args: &ExpandArgs) -> Result<()> {
    let loaded = load(&args.query)?;
    let params = ExpansionParams {
        r: args.r,
        k: args.k,
        mode: match args.weights {
            WeightArg::Unit => WeightMode::Unit,
            WeightArg::Similarity => WeightMode::Similarity,
        },
        original_weight: args.w0,
        config: ExpansionConfig {
            aggregator: match args.aggregate {
                AggregateArg::Sum => Aggregator::Sum,
                AggregateArg::Max => Aggregator::Max,
                AggregateArg::Mean => Aggregator::Mean,
            },
            min_df: args.min_df,
        },
    };
    let mut runs = BTreeMap::new();
    let mut cand_out = args.candidates_out.as_deref().map(create).transpose()?;
    for (&topic, q) in &loaded.queries {
        let outcome = expanded_search(&loaded.index, q, &params, args.query.top_n)?;
        if let Some(out) = cand_out.as_mut() {
            for (i, c) in outcome.candidates.terms.iter().enumerate() {
                writeln!(out, "{topic}\t{}\t{}\t{:.6}", i + 1, c.term, c.score)?;
            }
        }
        runs.insert(topic, outcome.ranked);
    }
    if let Some(mut out) = cand_out {
        out.flush()?;
    }
    let mut fields = base_fields(&args.query, &loaded, "expand");
    fields.push(("r", args.r.to_string()));
    fields.push(("k", args.k.to_string()));
    fields.push(("weights", format!("{:?}", params.mode).to_lowercase()));
    fields.push(("w0", args.w0.to_string()));
    fields.push((
        "aggregate",
        format!("{:?}", params.config.aggregator).to_lowercase(),
    ));
    fields.push(("min_df", args.min_df.to_string()));
    emit(&args.query, "fvs-expand", &fields, &runs)
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let qrels = parse_qrels(open(&args.qrels)?)?;
    if qrels.is_empty() {
        return Err(Error::invalid(format!(
            "{} contains no judgments",
            args.qrels.display()
        )));
    }
    let mut runs = Vec::new();
    for path in &args.runs {
        let name = path.file_name().map_or_else(
            || path.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        );
        runs.push((name, parse_trec_run(open(path)?)?));
    }
    let options = EvalOptions {
        k: args.k,
        depth: args.depth,
        min_hits: args.min_hits,
        skewness_mode: if args.per_doc_skewness {
            SkewnessMode::PerDocMean
        } else {
            SkewnessMode::Pooled
        },
        objective: args.objective.clone(),
    };
    let mut corpus_holder = None;
    let mut queries = BTreeMap::new();
    if let Some(topics) = &args.topics {
        let config = args.tokenizer.config()?;
        let corpus_args = CorpusArgs {
            corpora: args.corpora.clone(),
            format: args.format,
            no_headers: args.no_headers,
        };
        let docs: Vec<_> = corpus_args.load(&config)?.into_streams();
        // Only documents that appear in some run are needed for diagnostics.
        let wanted: std::collections::BTreeSet<&str> = runs
            .iter()
            .flat_map(|(_, r)| {
                r.values()
                    .flat_map(|l| l.top(args.depth).iter().map(|e| e.docno.as_str()))
            })
            .collect();
        let mut corpus = Corpus::default();
        for s in docs
            .into_iter()
            .filter(|s| wanted.contains(s.docno.as_str()))
        {
            corpus.push(s)?;
        }
        corpus_holder = Some(corpus);
        queries = load_topics(topics, &config)?;
    }
    let diagnostics = corpus_holder.as_ref().map(|corpus| Diagnostics {
        corpus,
        queries: &queries,
    });
    let report = evaluate(&runs, &qrels, diagnostics.as_ref(), &options)?;
    if let Some(path) = &args.metrics_out {
        let mut out = create(path)?;
        report.write_metrics_csv(&mut out)?;
        out.flush()?;
    }
    if let Some(path) = &args.diagnostics_out {
        let mut out = create(path)?;
        report.write_diagnostics_csv(&mut out)?;
        out.flush()?;
    }
    let mut out = output(None)?;
    report.write_summary(&mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let mut spec: SynthSpec = match (&args.preset, &args.spec) {
        (Some(name), _) => presets::by_name(name, args.seed.unwrap_or(0))
            .ok_or_else(|| Error::invalid(format!("unknown preset {name}")))?,
        (None, Some(path)) => serde_json::from_reader(open(path)?)
            .map_err(|e| Error::Synth(format!("{}: {e}", path.display())))?,
        (None, None) => return Err(Error::invalid("either --preset or --spec is required")),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let corpus = generate(&spec)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| with_path(e.into(), &args.out_dir))?;
    let write = |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> Result<()>| -> Result<()> {
        let path = args.out_dir.join(name);
        let mut out = create(&path)?;
        f(&mut out)?;
        out.flush()?;
        Ok(())
    };
    write("corpus.tsv", &|o| corpus.write_plain(o))?;
    write("qrels.txt", &|o| corpus.write_qrels(o))?;
    write("topics.txt", &|o| corpus.write_topics(o))?;
    write("labels.tsv", &|o| corpus.write_labels(o))?;
    write("spec.json", &|o| {
        serde_json::to_writer_pretty(&mut *o, &spec).map_err(|e| Error::Synth(e.to_string()))?;
        writeln!(o)?;
        Ok(())
    })?;
    eprintln!(
        "fvs: wrote {} documents to {}",
        corpus.documents.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::invalid(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Index(a) => cmd_index(a),
        Command::Search(a) => cmd_search(a),
        Command::Rerank(a) => cmd_rerank(a),
        Command::Expand(a) => cmd_expand(a),
        Command::Eval(a) => cmd_eval(a),
        Command::GenSynthetic(a) => cmd_synth(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fvs: error: {}", e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
