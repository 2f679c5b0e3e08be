mod config;
mod records;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pathkeep::corpus::{self, CorpusConfig};
use pathkeep::ingest::{self, IngestConfig};
use pathkeep::link::{builtin_stopwords, read_stopwords};
use pathkeep::scorer::score_answer_sentence;
use pathkeep::snapshot::{self, MAGIC};
use pathkeep::{
    DirectionPolicy, EntityLinker, Error, FrequencyTable, KnowledgeGraph, LinkConfig, RelationTable, RemoteScorer,
    ScoreError, Scorer, SearchConfig,
};
use rayon::prelude::*;

use config::{pick, require, FileConfig};
use records::QuestionRecord;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or unreadable input path. Exit 2.
    Usage(String),
    /// Bad data inside an input. Exit 1.
    Data(String),
    /// Scorer failure. Exit 3.
    Scorer(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Data(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Scorer(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Scorer(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Score(s) => CliError::Scorer(s.to_string()),
            Error::Config(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        match e {
            ScoreError::InvalidRequest(m) => CliError::Usage(m),
            other => CliError::Scorer(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(format!("i/o error: {e}"))
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "pathkeep",
    version,
    about = "Multi-hop question answering over a commonsense knowledge graph"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a graph snapshot from a ConceptNet dump or a fixture TSV.
    Ingest(IngestArgs),
    /// Answer questions and print one JSON record per question.
    Answer(AnswerArgs),
    /// Generate masked finetuning sentences from question/answer pairs.
    Corpus(CorpusArgs),
    /// Score "<question> <answer>" with a scorer.
    Score(ScoreArgs),
    /// Show which graph concepts a question links to.
    Link(LinkArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// ConceptNet assertions CSV, optionally gzipped.
    #[arg(required_unless_present = "fixture", conflicts_with = "fixture")]
    dump: Option<PathBuf>,
    /// head<TAB>relation<TAB>tail fixture instead of a dump.
    #[arg(long)]
    fixture: Option<PathBuf>,
    #[arg(short, long, env = "PATHKEEP_OUTPUT")]
    output: PathBuf,
    /// Fail on the first malformed line.
    #[arg(long, env = "PATHKEEP_STRICT")]
    strict: bool,
    /// Extra relation templates, canonical<TAB>surface<TAB>inverse.
    #[arg(long, env = "PATHKEEP_TEMPLATES")]
    templates: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    /// Graph snapshot (or fixture TSV).
    #[arg(long, env = "PATHKEEP_GRAPH")]
    graph: Option<PathBuf>,
    /// Stopword list, one word per line.
    #[arg(long, env = "PATHKEEP_STOPWORDS")]
    stopwords: Option<PathBuf>,
    /// TOML config file.
    #[arg(long, env = "PATHKEEP_CONFIG")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AnswerArgs {
    question: Option<String>,
    /// File with one question per line.
    #[arg(long, conflicts_with = "question")]
    batch: Option<PathBuf>,
    #[command(flatten)]
    graph: GraphArgs,
    /// `oracle:<table.tsv>` or `remote:<base url>`.
    #[arg(long, env = "PATHKEEP_SCORER")]
    scorer: Option<String>,
    #[arg(long, env = "PATHKEEP_HOPS")]
    hops: Option<usize>,
    #[arg(long, env = "PATHKEEP_BEAM")]
    beam: Option<usize>,
    /// Answers listed per question.
    #[arg(long, env = "PATHKEEP_TOP")]
    top: Option<usize>,
    /// `out` or `both`.
    #[arg(long, env = "PATHKEEP_DIRECTION")]
    direction: Option<String>,
    /// Questions answered concurrently.
    #[arg(long, env = "PATHKEEP_WORKERS")]
    workers: Option<usize>,
    /// Human-readable output instead of JSON lines.
    #[arg(long)]
    pretty: bool,
    #[arg(short, long, env = "PATHKEEP_OUTPUT")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CorpusArgs {
    /// question<TAB>answer pairs.
    #[arg(long)]
    qa: PathBuf,
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, env = "PATHKEEP_SEED")]
    seed: Option<u64>,
    /// Sentence cap.
    #[arg(long, env = "PATHKEEP_MAX")]
    max: Option<usize>,
    #[arg(long, env = "PATHKEEP_HOPS")]
    hops: Option<usize>,
    #[arg(long, env = "PATHKEEP_MASK_RATE")]
    mask_rate: Option<f64>,
    #[arg(short, long, env = "PATHKEEP_OUTPUT")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    question: String,
    answer: String,
    #[arg(long, env = "PATHKEEP_SCORER")]
    scorer: Option<String>,
    #[arg(long, env = "PATHKEEP_CONFIG")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct LinkArgs {
    question: String,
    #[command(flatten)]
    graph: GraphArgs,
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))
}

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Snapshot if the magic matches, fixture TSV otherwise.
fn load_graph(path: &Path) -> CliResult<KnowledgeGraph> {
    let mut reader = open(path)?;
    let head = reader.fill_buf()?;
    if head.len() >= MAGIC.len() && &head[..MAGIC.len()] == MAGIC {
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        Ok(snapshot::read_snapshot(bytes.as_slice())?)
    } else {
        Ok(ingest::load_fixture(reader, RelationTable::builtin())?)
    }
}

fn build_scorer(choice: &str) -> CliResult<Box<dyn Scorer>> {
    match choice.split_once(':') {
        Some(("oracle", path)) => {
            let table = FrequencyTable::read_tsv(open(Path::new(path))?)?;
            Ok(Box::new(table))
        }
        Some(("remote", url)) if !url.is_empty() => Ok(Box::new(RemoteScorer::new(url))),
        _ => Err(CliError::Usage(format!(
            "scorer must be oracle:<path> or remote:<url>, got {choice:?}"
        ))),
    }
}

fn link_config(graph_args: &GraphArgs, file: &FileConfig) -> CliResult<LinkConfig> {
    let stopwords = match graph_args.stopwords.as_ref().or(file.stopwords.as_ref()) {
        Some(p) => read_stopwords(open(p)?)?,
        None => builtin_stopwords(),
    };
    Ok(LinkConfig {
        stopwords,
        ..LinkConfig::default()
    })
}

fn relation_table(templates: Option<&Path>) -> CliResult<RelationTable> {
    match templates {
        Some(p) => Ok(RelationTable::with_templates(open(p)?)?),
        None => Ok(RelationTable::builtin().clone()),
    }
}

fn cmd_ingest(args: IngestArgs) -> CliResult<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let table = relation_table(args.templates.as_deref().or(file.templates.as_deref()))?;
    let (graph, report) = match (&args.fixture, &args.dump) {
        (Some(fixture), _) => ingest::load_fixture_counted(open(fixture)?, &table)?,
        (None, Some(dump)) => {
            let reader = ingest::open_input(dump)
                .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", dump.display())))?;
            let cfg = IngestConfig {
                strict: args.strict,
                table,
            };
            ingest::ingest_conceptnet(reader, &cfg)?
        }
        (None, None) => return Err(CliError::Usage("give a dump path or --fixture".into())),
    };
    let mut out = create(&args.output)?;
    snapshot::write_snapshot(&graph, &mut out)?;
    out.flush()?;
    println!("{report}");
    println!("nodes={}", graph.node_count());
    println!("edges={}", graph.edge_count());
    for (relation, count) in graph.relation_histogram() {
        println!("relation.{relation}={count}");
    }
    Ok(())
}

fn search_config(args: &AnswerArgs, file: &FileConfig) -> CliResult<SearchConfig> {
    let defaults = SearchConfig::default();
    let direction: DirectionPolicy = match args.direction.clone().or(file.direction.clone()) {
        Some(d) => d.parse()?,
        None => defaults.direction,
    };
    let cfg = SearchConfig {
        max_hops: pick(args.hops, file.hops, defaults.max_hops),
        beam_width: pick(args.beam, file.beam, defaults.beam_width),
        answers_returned: pick(args.top, file.top, defaults.answers_returned),
        direction,
        workers: 1,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn answer_one(
    question: &str,
    linker: &EntityLinker<'_>,
    graph: &KnowledgeGraph,
    scorer: &dyn Scorer,
    cfg: &SearchConfig,
) -> CliResult<QuestionRecord> {
    let link = match linker.link(question) {
        Ok(link) => link,
        Err(Error::NoLinkableEntities(_)) => return Ok(QuestionRecord::unlinked(question, cfg)),
        Err(e) => return Err(e.into()),
    };
    let answers = pathkeep::search_from_seeds(question, &link.nodes(), graph, scorer, cfg)?;
    let entities = link.nodes().into_iter().map(|n| graph.label(n).to_owned()).collect();
    Ok(QuestionRecord::from_answers(question, entities, &answers, graph, cfg))
}

fn cmd_answer(args: AnswerArgs) -> CliResult<()> {
    let file = FileConfig::load(args.graph.config.as_deref())?;
    let cfg = search_config(&args, &file)?;
    let workers = pick(args.workers, file.workers, 1);
    if workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let questions: Vec<String> = match (&args.question, &args.batch) {
        (Some(q), None) => vec![q.clone()],
        (None, Some(path)) => open(path)?
            .lines()
            .filter_map(|l| match l {
                Ok(l) if l.trim().is_empty() => None,
                Ok(l) => Some(Ok(l.trim().to_owned())),
                Err(e) => Some(Err(e)),
            })
            .collect::<io::Result<_>>()?,
        _ => return Err(CliError::Usage("give a question or --batch <file>".into())),
    };
    if questions.iter().any(|q| q.trim().is_empty()) {
        return Err(CliError::Usage("question is empty".into()));
    }
    let graph_path = require(args.graph.graph.clone(), file.graph.clone(), "graph")?;
    let scorer_choice = require(args.scorer.clone(), file.scorer.clone(), "scorer")?;
    let graph = load_graph(&graph_path)?;
    let scorer = build_scorer(&scorer_choice)?;
    let linker = EntityLinker::new(&graph, link_config(&args.graph, &file)?);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let records: Vec<CliResult<QuestionRecord>> = pool.install(|| {
        questions
            .par_iter()
            .map(|q| answer_one(q, &linker, &graph, scorer.as_ref(), &cfg))
            .collect()
    });

    let mut out = output(args.output.as_deref())?;
    for record in records {
        let record = record?;
        if args.pretty {
            writeln!(out, "{}", record.pretty())?;
        } else {
            let line = serde_json::to_string(&record).map_err(|e| CliError::Data(e.to_string()))?;
            writeln!(out, "{line}")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_corpus(args: CorpusArgs) -> CliResult<()> {
    let file = FileConfig::load(args.graph.config.as_deref())?;
    let defaults = CorpusConfig::default();
    let cfg = CorpusConfig {
        seed: require(args.seed, file.seed, "seed")?,
        max_sentences: pick(args.max, file.max, defaults.max_sentences),
        max_hops: pick(args.hops, file.hops, defaults.max_hops),
        mask_rate: pick(args.mask_rate, file.mask_rate, defaults.mask_rate),
    };
    if !(0.0..=1.0).contains(&cfg.mask_rate) {
        return Err(CliError::Usage(format!(
            "--mask-rate must be in [0, 1], got {}",
            cfg.mask_rate
        )));
    }
    let pairs = corpus::read_qa_pairs(open(&args.qa)?)?;
    let graph_path = require(args.graph.graph.clone(), file.graph.clone(), "graph")?;
    let graph = load_graph(&graph_path)?;
    let linker = EntityLinker::new(&graph, link_config(&args.graph, &file)?);
    let (sentences, report) = corpus::generate_corpus(&pairs, &graph, &linker, &cfg)?;
    let mut out = output(args.output.as_deref())?;
    corpus::write_corpus(&sentences, &mut out)?;
    eprintln!("{report}");
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> CliResult<()> {
    if args.question.trim().is_empty() || args.answer.trim().is_empty() {
        return Err(CliError::Usage("question and answer must be non-empty".into()));
    }
    let file = FileConfig::load(args.config.as_deref())?;
    let choice = require(args.scorer, file.scorer, "scorer")?;
    let scorer = build_scorer(&choice)?;
    let score = score_answer_sentence(scorer.as_ref(), &args.question, &args.answer)?;
    println!("{:.6}\ttokens={}", score.value, score.tokens_scored);
    Ok(())
}

fn cmd_link(args: LinkArgs) -> CliResult<()> {
    let file = FileConfig::load(args.graph.config.as_deref())?;
    let graph_path = require(args.graph.graph.clone(), file.graph.clone(), "graph")?;
    let graph = load_graph(&graph_path)?;
    let linker = EntityLinker::new(&graph, link_config(&args.graph, &file)?);
    let record = match linker.link(&args.question) {
        Ok(link) => link.to_record(&graph),
        Err(Error::NoLinkableEntities(_)) => pathkeep::link::LinkRecord {
            question: args.question.clone(),
            mentions: Vec::new(),
        },
        Err(e) => return Err(e.into()),
    };
    println!(
        "{}",
        serde_json::to_string(&record).map_err(|e| CliError::Data(e.to_string()))?
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Answer(a) => cmd_answer(a),
        Command::Corpus(a) => cmd_corpus(a),
        Command::Score(a) => cmd_score(a),
        Command::Link(a) => cmd_link(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pathkeep: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
