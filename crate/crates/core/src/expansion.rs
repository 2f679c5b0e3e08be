//! Hop-by-hop local graph expansion with beam pruning, and answer selection.
//!
//! Starting from one zero-length path per linked entity, each hop extends
//! every surviving path by one admissible edge, scores the cloze prompt of
//! each extension and keeps the `beam_width` best by cumulative score. A
//! path's cumulative score is the sum of the scores of all its prefixes'
//! prompts. Every surviving path of length 1..=L is an answer candidate for
//! its terminal node; per node the best path wins.
//!
//! All orderings use the same total order: cumulative score descending,
//! then terminal label ascending, then statement text ascending.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Direction, KnowledgeGraph, NodeId};
use crate::link::{EntityLinker, LinkConfig, LinkResult};
use crate::path::ReasoningPath;
use crate::scorer::{next_batch_id, Score, ScoreError, ScoreRequest, Scorer};
use crate::verbalize::{build_prompt, render_path, Statement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionPolicy {
    Out,
    Both,
}

impl DirectionPolicy {
    pub fn as_direction(self) -> Direction {
        match self {
            DirectionPolicy::Out => Direction::Out,
            DirectionPolicy::Both => Direction::Both,
        }
    }
}

impl std::str::FromStr for DirectionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "out" => Ok(DirectionPolicy::Out),
            "both" => Ok(DirectionPolicy::Both),
            other => Err(Error::Config(format!("direction must be out or both, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub max_hops: usize,
    pub beam_width: usize,
    pub direction: DirectionPolicy,
    pub answers_returned: usize,
    /// Scoring batches in flight at once within a hop.
    pub workers: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_hops: 3,
            beam_width: 100,
            direction: DirectionPolicy::Both,
            answers_returned: 5,
            workers: 1,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_hops == 0 {
            return Err(Error::Config("max_hops must be at least 1".into()));
        }
        if self.beam_width == 0 {
            return Err(Error::Config("beam_width must be at least 1".into()));
        }
        if self.answers_returned == 0 {
            return Err(Error::Config("answers_returned must be at least 1".into()));
        }
        Ok(())
    }
}

/// A path on the frontier with its rendered statement, kept for
/// tie-breaking.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierPath {
    pub path: ReasoningPath,
    pub statement_text: String,
    pub terminal_label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frontier {
    pub hop: usize,
    pub alive: Vec<FrontierPath>,
}

impl Frontier {
    /// Hop-0 frontier: one zero-length path per distinct seed.
    pub fn seeds(graph: &KnowledgeGraph, seeds: &[NodeId]) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut alive = Vec::new();
        for &s in seeds {
            if !graph.contains(s) {
                return Err(Error::UnknownNode(s.0));
            }
            if seen.insert(s) {
                alive.push(FrontierPath {
                    path: ReasoningPath::seed(s),
                    statement_text: String::new(),
                    terminal_label: graph.label(s).to_owned(),
                });
            }
        }
        Ok(Frontier { hop: 0, alive })
    }

    pub fn is_empty(&self) -> bool {
        self.alive.is_empty()
    }
}

/// The global ranking order: better first.
pub fn rank_order(a_score: f64, a_label: &str, a_text: &str, b_score: f64, b_label: &str, b_text: &str) -> Ordering {
    b_score
        .total_cmp(&a_score)
        .then_with(|| a_label.cmp(b_label))
        .then_with(|| a_text.cmp(b_text))
}

fn frontier_order(a: &FrontierPath, b: &FrontierPath) -> Ordering {
    rank_order(
        a.path.cumulative,
        &a.terminal_label,
        &a.statement_text,
        b.path.cumulative,
        &b.terminal_label,
        &b.statement_text,
    )
}

/// Scores prompts in `max_batch` chunks, fanning chunks out over rayon
/// when `workers > 1`. Output order matches input order.
fn score_prompts<S: Scorer + ?Sized>(scorer: &S, prompts: &[String], workers: usize) -> Result<Vec<Score>, ScoreError> {
    let batch = scorer.max_batch().max(1);
    let chunks: Vec<&[String]> = prompts.chunks(batch).collect();
    let score_chunk = |chunk: &&[String]| -> Result<Vec<Score>, ScoreError> {
        let request = ScoreRequest::new(next_batch_id(), chunk.to_vec())?;
        let scores = scorer.score(&request)?;
        if scores.len() != chunk.len() {
            return Err(ScoreError::LengthMismatch {
                expected: chunk.len(),
                got: scores.len(),
            });
        }
        Ok(scores)
    };
    let results: Vec<Result<Vec<Score>, ScoreError>> = if workers > 1 && chunks.len() > 1 {
        chunks.par_iter().with_max_len(1).map(score_chunk).collect()
    } else {
        chunks.iter().map(score_chunk).collect()
    };
    let mut out = Vec::with_capacity(prompts.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// One expansion hop. A frontier with no admissible extensions yields an
/// empty frontier; any scorer failure aborts the hop.
pub fn expand_hop<S: Scorer + ?Sized>(
    frontier: &Frontier,
    graph: &KnowledgeGraph,
    scorer: &S,
    question: &str,
    config: &SearchConfig,
) -> Result<Frontier> {
    config.validate()?;
    if frontier.hop >= config.max_hops {
        return Err(Error::Config(format!(
            "frontier is already at hop {} of {}",
            frontier.hop, config.max_hops
        )));
    }
    let direction = config.direction.as_direction();
    let mut candidates = Vec::new();
    let mut prompts = Vec::new();
    for alive in &frontier.alive {
        for step in graph.steps(alive.path.terminal(), direction)? {
            let next = step.target();
            if alive.path.visits(next) {
                continue;
            }
            let path = alive.path.extended(step);
            let prompt = build_prompt(graph, question, &path)?;
            prompts.push(prompt.text);
            candidates.push(FrontierPath {
                path,
                statement_text: prompt.statement.text,
                terminal_label: graph.label(next).to_owned(),
            });
        }
    }
    if !candidates.is_empty() {
        let scores = score_prompts(scorer, &prompts, config.workers)?;
        for (cand, score) in candidates.iter_mut().zip(scores) {
            cand.path.push_score(score.value);
        }
    }
    candidates.sort_by(frontier_order);
    candidates.truncate(config.beam_width);
    Ok(Frontier {
        hop: frontier.hop + 1,
        alive: candidates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub entity: NodeId,
    pub label: String,
    pub path: ReasoningPath,
    pub statement: Statement,
    pub score: f64,
}

fn answer_order(a: &Answer, b: &Answer) -> Ordering {
    rank_order(
        a.score,
        &a.label,
        &a.statement.text,
        b.score,
        &b.label,
        &b.statement.text,
    )
}

/// Ranks answers in place under the global order.
pub fn rank_answers(answers: &mut [Answer]) {
    answers.sort_by(answer_order);
}

/// The single best answer.
pub fn predict_answer(answers: &[Answer]) -> Result<Answer> {
    answers
        .iter()
        .min_by(|a, b| answer_order(a, b))
        .cloned()
        .ok_or(Error::EmptyInput("no answers to choose from"))
}

/// Runs expansion from explicit seeds. Seeds themselves are never answers.
/// An empty result means no answer was found.
pub fn search_from_seeds<S: Scorer + ?Sized>(
    question: &str,
    seeds: &[NodeId],
    graph: &KnowledgeGraph,
    scorer: &S,
    config: &SearchConfig,
) -> Result<Vec<Answer>> {
    config.validate()?;
    let excluded: HashSet<NodeId> = seeds.iter().copied().collect();
    let mut frontier = Frontier::seeds(graph, seeds)?;
    let mut best: HashMap<NodeId, FrontierPath> = HashMap::new();
    for _ in 0..config.max_hops {
        frontier = expand_hop(&frontier, graph, scorer, question, config)?;
        if frontier.is_empty() {
            break;
        }
        for cand in &frontier.alive {
            let entity = cand.path.terminal();
            if excluded.contains(&entity) {
                continue;
            }
            match best.get(&entity) {
                Some(current) if frontier_order(current, cand) != Ordering::Greater => {}
                _ => {
                    best.insert(entity, cand.clone());
                }
            }
        }
    }
    let mut winners: Vec<FrontierPath> = best.into_values().collect();
    winners.sort_by(frontier_order);
    winners.truncate(config.answers_returned);
    winners
        .into_iter()
        .map(|w| {
            let statement = render_path(graph, &w.path)?;
            Ok(Answer {
                entity: w.path.terminal(),
                label: w.terminal_label,
                score: w.path.cumulative,
                path: w.path,
                statement,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub link: LinkResult,
    pub answers: Vec<Answer>,
}

impl SearchResult {
    pub fn no_answer(&self) -> bool {
        self.answers.is_empty()
    }

    pub fn best(&self) -> Option<&Answer> {
        self.answers.first()
    }
}

/// Links the question and searches from its entities.
pub fn search_with_linker<S: Scorer + ?Sized>(
    question: &str,
    linker: &EntityLinker<'_>,
    graph: &KnowledgeGraph,
    scorer: &S,
    config: &SearchConfig,
) -> Result<SearchResult> {
    let link = linker.link(question)?;
    let answers = search_from_seeds(question, &link.nodes(), graph, scorer, config)?;
    Ok(SearchResult { link, answers })
}

/// One-shot search with default linking.
pub fn search<S: Scorer + ?Sized>(
    question: &str,
    graph: &KnowledgeGraph,
    scorer: &S,
    config: &SearchConfig,
) -> Result<SearchResult> {
    let linker = EntityLinker::new(graph, LinkConfig::default());
    search_with_linker(question, &linker, graph, scorer, config)
}
