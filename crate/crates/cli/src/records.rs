//! JSON-lines output for `answer`.

use pathkeep::{Answer, KnowledgeGraph, SearchConfig};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    NoAnswer,
    NoLinkableEntities,
}

#[derive(Debug, Clone, Serialize)]
pub struct HopRecord {
    pub head: String,
    pub relation: String,
    pub tail: String,
    /// `forward` when the edge was walked head to tail.
    pub direction: &'static str,
    pub hop_score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnswerRecord {
    pub rank: usize,
    pub answer_label: String,
    pub score: f64,
    pub path: Vec<HopRecord>,
    pub statement_text: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigRecord {
    pub hops: usize,
    pub beam: usize,
    pub top: usize,
    pub direction: pathkeep::DirectionPolicy,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuestionRecord {
    pub question: String,
    pub status: Status,
    pub entities: Vec<String>,
    pub answer_label: Option<String>,
    pub score: Option<f64>,
    pub path: Vec<HopRecord>,
    pub statement_text: Option<String>,
    pub answers: Vec<AnswerRecord>,
    pub config: ConfigRecord,
}

impl ConfigRecord {
    pub fn from_search(cfg: &SearchConfig) -> Self {
        ConfigRecord {
            hops: cfg.max_hops,
            beam: cfg.beam_width,
            top: cfg.answers_returned,
            direction: cfg.direction,
        }
    }
}

pub fn hops(graph: &KnowledgeGraph, answer: &Answer) -> Vec<HopRecord> {
    answer
        .path
        .steps
        .iter()
        .zip(&answer.path.per_hop_scores)
        .map(|(step, &hop_score)| HopRecord {
            head: graph.label(step.edge.head).to_owned(),
            relation: graph.relation(step.edge.relation).canonical_name.clone(),
            tail: graph.label(step.edge.tail).to_owned(),
            direction: if step.reversed { "reverse" } else { "forward" },
            hop_score,
        })
        .collect()
}

impl QuestionRecord {
    pub fn unlinked(question: &str, cfg: &SearchConfig) -> Self {
        QuestionRecord {
            question: question.to_owned(),
            status: Status::NoLinkableEntities,
            entities: Vec::new(),
            answer_label: None,
            score: None,
            path: Vec::new(),
            statement_text: None,
            answers: Vec::new(),
            config: ConfigRecord::from_search(cfg),
        }
    }

    pub fn from_answers(
        question: &str,
        entities: Vec<String>,
        answers: &[Answer],
        graph: &KnowledgeGraph,
        cfg: &SearchConfig,
    ) -> Self {
        let ranked: Vec<AnswerRecord> = answers
            .iter()
            .enumerate()
            .map(|(i, a)| AnswerRecord {
                rank: i + 1,
                answer_label: a.label.clone(),
                score: a.score,
                path: hops(graph, a),
                statement_text: a.statement.text.clone(),
            })
            .collect();
        let best = ranked.first();
        QuestionRecord {
            question: question.to_owned(),
            status: if best.is_some() { Status::Ok } else { Status::NoAnswer },
            entities,
            answer_label: best.map(|b| b.answer_label.clone()),
            score: best.map(|b| b.score),
            path: best.map(|b| b.path.clone()).unwrap_or_default(),
            statement_text: best.map(|b| b.statement_text.clone()),
            answers: ranked,
            config: ConfigRecord::from_search(cfg),
        }
    }

    /// Human-readable block for `--pretty`.
    pub fn pretty(&self) -> String {
        let mut out = format!("Q: {}\n", self.question);
        match self.status {
            Status::NoLinkableEntities => out.push_str("   no concepts from the graph found in the question\n"),
            Status::NoAnswer => out.push_str("   no answer reachable from the question concepts\n"),
            Status::Ok => {
                for a in &self.answers {
                    let label = a.answer_label.replace('_', " ");
                    if a.rank == 1 {
                        out.push_str(&format!("A: {label}  (score {:.6})\n", a.score));
                        out.push_str(&format!("   because {}\n", a.statement_text));
                    } else {
                        out.push_str(&format!(
                            "   {}. {label}  (score {:.6}): {}\n",
                            a.rank, a.score, a.statement_text
                        ));
                    }
                }
            }
        }
        out
    }
}
