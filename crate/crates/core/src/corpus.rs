//! Finetuning corpus: verbalized paths from question entities to gold
//! answers, each paired with a randomly masked copy.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead, Write};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Direction, KnowledgeGraph, NodeId, Step};
use crate::ingest::normalize_label;
use crate::link::EntityLinker;
use crate::path::ReasoningPath;
use crate::verbalize::render_path;

pub const MASK_TOKEN: &str = "[MASK]";
pub const DEFAULT_MASK_RATE: f64 = 0.15;
pub const DEFAULT_MAX_SENTENCES: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAPair {
    pub question: String,
    pub gold_answer: String,
}

/// Reads `question<TAB>answer` lines.
pub fn read_qa_pairs<R: BufRead>(reader: R) -> Result<Vec<QAPair>> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        match line.split_once('\t') {
            Some((q, a)) if !q.trim().is_empty() && !a.trim().is_empty() && !a.contains('\t') => pairs.push(QAPair {
                question: q.trim().to_owned(),
                gold_answer: a.trim().to_owned(),
            }),
            _ => {
                return Err(Error::Malformed {
                    line: idx + 1,
                    reason: "expected question<TAB>answer".into(),
                })
            }
        }
    }
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceSource {
    pub pair_index: usize,
    pub path: ReasoningPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSentence {
    pub text: String,
    pub masked_text: String,
    /// Whitespace-token indices replaced by `[MASK]`, ascending.
    pub masked_positions: Vec<usize>,
    pub source: Option<SentenceSource>,
}

impl CorpusSentence {
    /// `text<TAB>masked_text<TAB>p1,p2,...`
    pub fn to_line(&self) -> String {
        let positions: Vec<String> = self.masked_positions.iter().map(usize::to_string).collect();
        format!("{}\t{}\t{}", self.text, self.masked_text, positions.join(","))
    }
}

/// Byte spans of whitespace-separated tokens.
fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

fn replace_tokens(text: &str, positions: &[usize], replacement: impl Fn(usize) -> String) -> String {
    let spans = token_spans(text);
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for &p in positions {
        let (s, e) = spans[p];
        out.push_str(&text[cursor..s]);
        out.push_str(&replacement(p));
        cursor = e;
    }
    out.push_str(&text[cursor..]);
    out
}

/// Number of positions to mask: `rate * n` rounded stochastically (floor
/// plus a Bernoulli draw on the fractional part), at least 1 and at most `n`.
pub fn mask_count<R: Rng + ?Sized>(n: usize, rate: f64, rng: &mut R) -> usize {
    let x = rate * n as f64;
    let nearest = x.round();
    let count = if (x - nearest).abs() < 1e-9 {
        nearest as usize
    } else {
        let floor = x.floor();
        floor as usize + usize::from(rng.gen_bool(x - floor))
    };
    count.max(1).min(n)
}

/// Masks whitespace tokens of `sentence`, sampling positions without
/// replacement. Whitespace between tokens is preserved byte for byte.
pub fn mask_tokens<R: Rng + ?Sized>(sentence: &str, rate: f64, rng: &mut R) -> Result<CorpusSentence> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::Config(format!("mask rate must be in (0, 1), got {rate}")));
    }
    let n = token_spans(sentence).len();
    if n == 0 {
        return Err(Error::EmptyInput("sentence has no tokens"));
    }
    let count = mask_count(n, rate, rng);
    let mut positions = sample(rng, n, count).into_vec();
    positions.sort_unstable();
    Ok(CorpusSentence {
        text: sentence.to_owned(),
        masked_text: replace_tokens(sentence, &positions, |_| MASK_TOKEN.to_owned()),
        masked_positions: positions,
        source: None,
    })
}

/// Restores `original_tokens` at `positions` of `masked_text`.
pub fn unmask(masked_text: &str, positions: &[usize], original_tokens: &[&str]) -> String {
    replace_tokens(masked_text, positions, |p| original_tokens[p].to_owned())
}

/// Every simple path of 1..=`max_hops` edges from any source to `target`,
/// walking edges in both directions. Sources equal to the target are skipped.
pub fn find_paths_between(
    graph: &KnowledgeGraph,
    sources: &[NodeId],
    target: NodeId,
    max_hops: usize,
) -> Result<Vec<ReasoningPath>> {
    if !graph.contains(target) {
        return Err(Error::UnknownNode(target.0));
    }
    let mut found = Vec::new();
    let mut seen_sources = HashSet::new();
    for &source in sources {
        if !graph.contains(source) {
            return Err(Error::UnknownNode(source.0));
        }
        if source == target || !seen_sources.insert(source) {
            continue;
        }
        let mut steps = Vec::new();
        let mut on_path = vec![source];
        dfs(graph, source, target, max_hops, &mut steps, &mut on_path, &mut found)?;
    }
    Ok(found)
}

fn dfs(
    graph: &KnowledgeGraph,
    origin: NodeId,
    target: NodeId,
    remaining: usize,
    steps: &mut Vec<Step>,
    on_path: &mut Vec<NodeId>,
    found: &mut Vec<ReasoningPath>,
) -> Result<()> {
    if remaining == 0 {
        return Ok(());
    }
    let here = *on_path.last().expect("path has an origin");
    for step in graph.steps(here, Direction::Both)? {
        let next = step.target();
        if on_path.contains(&next) {
            continue;
        }
        steps.push(step);
        if next == target {
            found.push(ReasoningPath::unscored(origin, steps.clone()));
        } else {
            on_path.push(next);
            dfs(graph, origin, target, remaining - 1, steps, on_path, found)?;
            on_path.pop();
        }
        steps.pop();
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub max_hops: usize,
    pub max_sentences: usize,
    pub seed: u64,
    pub mask_rate: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            max_hops: 3,
            max_sentences: DEFAULT_MAX_SENTENCES,
            seed: 0,
            mask_rate: DEFAULT_MASK_RATE,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub pairs_processed: usize,
    pub pairs_unlinked_question: usize,
    pub pairs_unlinked_answer: usize,
    pub pairs_zero_paths: usize,
    pub duplicates_dropped: usize,
    pub truncated: usize,
    pub sentences_emitted: usize,
}

impl fmt::Display for CorpusReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pairs_processed={}", self.pairs_processed)?;
        writeln!(f, "pairs_unlinked_question={}", self.pairs_unlinked_question)?;
        writeln!(f, "pairs_unlinked_answer={}", self.pairs_unlinked_answer)?;
        writeln!(f, "pairs_zero_paths={}", self.pairs_zero_paths)?;
        writeln!(f, "duplicates_dropped={}", self.duplicates_dropped)?;
        writeln!(f, "truncated={}", self.truncated)?;
        write!(f, "sentences_emitted={}", self.sentences_emitted)
    }
}

enum PairOutcome {
    UnlinkedQuestion,
    UnlinkedAnswer,
    Paths(Vec<(String, ReasoningPath)>),
}

fn process_pair(
    pair: &QAPair,
    graph: &KnowledgeGraph,
    linker: &EntityLinker<'_>,
    max_hops: usize,
) -> Result<PairOutcome> {
    let Some(target) = graph.node(&normalize_label(&pair.gold_answer)) else {
        return Ok(PairOutcome::UnlinkedAnswer);
    };
    let link = match linker.link(&pair.question) {
        Ok(link) => link,
        Err(Error::NoLinkableEntities(_)) => return Ok(PairOutcome::UnlinkedQuestion),
        Err(e) => return Err(e),
    };
    let paths = find_paths_between(graph, &link.nodes(), target, max_hops)?;
    paths
        .into_iter()
        .map(|p| Ok((render_path(graph, &p)?.text, p)))
        .collect::<Result<Vec<_>>>()
        .map(PairOutcome::Paths)
}

/// Builds the corpus. Pairs are processed in parallel, then merged in input
/// order, deduplicated by exact text, truncated, and masked with one RNG
/// seeded from `config.seed`; output depends only on inputs and seed.
pub fn generate_corpus(
    pairs: &[QAPair],
    graph: &KnowledgeGraph,
    linker: &EntityLinker<'_>,
    config: &CorpusConfig,
) -> Result<(Vec<CorpusSentence>, CorpusReport)> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("no QA pairs"));
    }
    if config.max_hops == 0 {
        return Err(Error::Config("max_hops must be at least 1".into()));
    }
    let outcomes: Vec<Result<PairOutcome>> = pairs
        .par_iter()
        .map(|pair| process_pair(pair, graph, linker, config.max_hops))
        .collect();

    let mut report = CorpusReport::default();
    let mut seen = HashSet::new();
    let mut kept: Vec<(String, SentenceSource)> = Vec::new();
    for (pair_index, outcome) in outcomes.into_iter().enumerate() {
        report.pairs_processed += 1;
        match outcome? {
            PairOutcome::UnlinkedQuestion => report.pairs_unlinked_question += 1,
            PairOutcome::UnlinkedAnswer => report.pairs_unlinked_answer += 1,
            PairOutcome::Paths(paths) if paths.is_empty() => report.pairs_zero_paths += 1,
            PairOutcome::Paths(paths) => {
                for (text, path) in paths {
                    if seen.insert(text.clone()) {
                        kept.push((text, SentenceSource { pair_index, path }));
                    } else {
                        report.duplicates_dropped += 1;
                    }
                }
            }
        }
    }
    if kept.len() > config.max_sentences {
        report.truncated = kept.len() - config.max_sentences;
        kept.truncate(config.max_sentences);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let sentences = kept
        .into_iter()
        .map(|(text, source)| {
            let mut s = mask_tokens(&text, config.mask_rate, &mut rng)?;
            s.source = Some(source);
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    report.sentences_emitted = sentences.len();
    Ok((sentences, report))
}

pub fn write_corpus<W: Write>(sentences: &[CorpusSentence], mut out: W) -> io::Result<()> {
    for s in sentences {
        writeln!(out, "{}", s.to_line())?;
    }
    out.flush()
}
