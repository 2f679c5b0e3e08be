//! Sentence scoring: average per-token log-probability,
//! `sum_n log p(w_n | W without w_n) / N`.
//!
//! Implementations own their tokenization and report their own `N`.

mod oracle;
mod remote;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use oracle::{oracle_tokens, FrequencyTable};
pub use remote::{RemoteScorer, ScoreReply, ScoreRequestBody, SCORE_PATH};

/// Per-token log-probability floor.
pub const LOG_PROB_FLOOR: f64 = -30.0;

pub const DEFAULT_MAX_BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("invalid score request: {0}")]
    InvalidRequest(String),
    #[error("scorer transport failure: {0}")]
    Transport(String),
    #[error("scorer rejected request (400): {0}")]
    BadRequest(String),
    #[error("scorer model unavailable (503): {0}")]
    Unavailable(String),
    #[error("scorer replied with unexpected status {status}: {body}")]
    UnexpectedStatus { status: u16, body: String },
    #[error("malformed scorer reply: {0}")]
    MalformedReply(String),
    #[error("scorer reply length mismatch: sent {expected} sentences, got {got} scores")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub id: String,
    pub sentences: Vec<String>,
}

impl ScoreRequest {
    pub fn new(id: impl Into<String>, sentences: Vec<String>) -> Result<Self, ScoreError> {
        let request = ScoreRequest {
            id: id.into(),
            sentences,
        };
        request.validate()?;
        Ok(request)
    }

    pub fn validate(&self) -> Result<(), ScoreError> {
        if self.sentences.is_empty() {
            return Err(ScoreError::InvalidRequest("no sentences".into()));
        }
        if let Some(i) = self.sentences.iter().position(|s| s.trim().is_empty()) {
            return Err(ScoreError::InvalidRequest(format!("sentence {i} is empty")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub tokens_scored: usize,
}

/// The scoring contract. One score per sentence, in request order, and the
/// same request always yields the same scores.
pub trait Scorer: Send + Sync {
    fn score(&self, request: &ScoreRequest) -> Result<Vec<Score>, ScoreError>;

    /// Largest batch callers should send in one request.
    fn max_batch(&self) -> usize {
        DEFAULT_MAX_BATCH
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn score(&self, request: &ScoreRequest) -> Result<Vec<Score>, ScoreError> {
        (**self).score(request)
    }

    fn max_batch(&self) -> usize {
        (**self).max_batch()
    }
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn score(&self, request: &ScoreRequest) -> Result<Vec<Score>, ScoreError> {
        (**self).score(request)
    }

    fn max_batch(&self) -> usize {
        (**self).max_batch()
    }
}

static BATCH_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Fresh opaque batch id.
pub fn next_batch_id() -> String {
    format!("b{}", BATCH_COUNTER.fetch_add(1, Ordering::Relaxed))
}

/// Scores `sentences` in chunks of at most `scorer.max_batch()`, checking
/// that every reply lines up with its chunk.
pub fn score_batched<S: Scorer + ?Sized>(scorer: &S, sentences: &[String]) -> Result<Vec<Score>, ScoreError> {
    let batch = scorer.max_batch().max(1);
    let mut out = Vec::with_capacity(sentences.len());
    for chunk in sentences.chunks(batch) {
        let request = ScoreRequest::new(next_batch_id(), chunk.to_vec())?;
        let scores = scorer.score(&request)?;
        if scores.len() != chunk.len() {
            return Err(ScoreError::LengthMismatch {
                expected: chunk.len(),
                got: scores.len(),
            });
        }
        out.extend(scores);
    }
    Ok(out)
}

/// Scores `"<question> <answer>"`.
pub fn score_answer_sentence<S: Scorer + ?Sized>(
    scorer: &S,
    question: &str,
    answer: &str,
) -> Result<Score, ScoreError> {
    if question.trim().is_empty() || answer.trim().is_empty() {
        return Err(ScoreError::InvalidRequest(
            "question and answer must be non-empty".into(),
        ));
    }
    let request = ScoreRequest::new(next_batch_id(), vec![format!("{question} {answer}")])?;
    let scores = scorer.score(&request)?;
    match scores.as_slice() {
        [score] => Ok(*score),
        other => Err(ScoreError::LengthMismatch {
            expected: 1,
            got: other.len(),
        }),
    }
}

/// Per-token floor and finite check shared by implementations.
pub(crate) fn floored_log(p: f64) -> f64 {
    if p > 0.0 {
        p.ln().max(LOG_PROB_FLOOR)
    } else {
        LOG_PROB_FLOOR
    }
}
