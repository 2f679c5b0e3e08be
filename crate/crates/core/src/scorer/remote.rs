//! Client for the `/v1/score` HTTP protocol.
//!
//! Request: `POST {base}/v1/score` with `{"id": str, "sentences": [str]}`.
//! Success: `200 {"id": str, "scores": [f64], "tokens": [int]}`, arrays in
//! request order. Failures: `400` (malformed request) or `503` (model not
//! ready), each with `{"error": str}`.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Score, ScoreError, ScoreRequest, Scorer, DEFAULT_MAX_BATCH};

pub const SCORE_PATH: &str = "/v1/score";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequestBody {
    pub id: String,
    pub sentences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReply {
    pub id: String,
    pub scores: Vec<f64>,
    pub tokens: Vec<u64>,
}

#[derive(Debug, Deserialize)]
struct ErrorReply {
    error: String,
}

#[derive(Debug, Clone)]
pub struct RemoteScorer {
    endpoint: String,
    agent: ureq::Agent,
    max_batch: usize,
}

impl RemoteScorer {
    pub fn new(base_url: &str) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(10))
            .timeout(Duration::from_secs(600))
            .build();
        RemoteScorer {
            endpoint: format!("{}{SCORE_PATH}", base_url.trim_end_matches('/')),
            agent,
            max_batch: DEFAULT_MAX_BATCH,
        }
    }

    pub fn with_max_batch(mut self, max_batch: usize) -> Self {
        self.max_batch = max_batch.max(1);
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    #[allow(clippy::result_large_err)]
    fn post(&self, body: &str) -> Result<ureq::Response, ScoreError> {
        let send = || {
            self.agent
                .post(&self.endpoint)
                .set("Content-Type", "application/json")
                .send_string(body)
        };
        // one retry, transport failures only
        let first = send();
        let result = match first {
            Err(ureq::Error::Transport(_)) => send(),
            other => other,
        };
        match result {
            Ok(resp) => Ok(resp),
            Err(ureq::Error::Transport(t)) => Err(ScoreError::Transport(t.to_string())),
            Err(ureq::Error::Status(status, resp)) => {
                let text = resp.into_string().unwrap_or_default();
                let message = serde_json::from_str::<ErrorReply>(&text)
                    .map(|e| e.error)
                    .unwrap_or(text);
                Err(match status {
                    400 => ScoreError::BadRequest(message),
                    503 => ScoreError::Unavailable(message),
                    status => ScoreError::UnexpectedStatus { status, body: message },
                })
            }
        }
    }

    fn score_chunk(&self, id: &str, sentences: &[String]) -> Result<Vec<Score>, ScoreError> {
        let body = serde_json::to_string(&ScoreRequestBody {
            id: id.to_owned(),
            sentences: sentences.to_vec(),
        })
        .expect("request body serializes");
        let resp = self.post(&body)?;
        if resp.status() != 200 {
            let status = resp.status();
            return Err(ScoreError::UnexpectedStatus {
                status,
                body: resp.into_string().unwrap_or_default(),
            });
        }
        let text = resp
            .into_string()
            .map_err(|e| ScoreError::Transport(format!("reading reply body: {e}")))?;
        parse_reply(&text, id, sentences.len())
    }
}

/// Validates a success body against the request it answers.
pub(crate) fn parse_reply(text: &str, id: &str, expected: usize) -> Result<Vec<Score>, ScoreError> {
    let reply: ScoreReply = serde_json::from_str(text).map_err(|e| ScoreError::MalformedReply(e.to_string()))?;
    if reply.id != id {
        return Err(ScoreError::MalformedReply(format!(
            "reply id {:?} does not match request id {id:?}",
            reply.id
        )));
    }
    if reply.scores.len() != expected {
        return Err(ScoreError::LengthMismatch {
            expected,
            got: reply.scores.len(),
        });
    }
    if reply.tokens.len() != expected {
        return Err(ScoreError::LengthMismatch {
            expected,
            got: reply.tokens.len(),
        });
    }
    reply
        .scores
        .iter()
        .zip(&reply.tokens)
        .map(|(&value, &tokens)| {
            if !value.is_finite() {
                return Err(ScoreError::MalformedReply(format!("non-finite score {value}")));
            }
            if tokens == 0 {
                return Err(ScoreError::MalformedReply("token count must be at least 1".into()));
            }
            Ok(Score {
                value,
                tokens_scored: tokens as usize,
            })
        })
        .collect()
}

impl Scorer for RemoteScorer {
    fn score(&self, request: &ScoreRequest) -> Result<Vec<Score>, ScoreError> {
        request.validate()?;
        if request.sentences.len() <= self.max_batch {
            return self.score_chunk(&request.id, &request.sentences);
        }
        let mut out = Vec::with_capacity(request.sentences.len());
        for (k, chunk) in request.sentences.chunks(self.max_batch).enumerate() {
            out.extend(self.score_chunk(&format!("{}.{k}", request.id), chunk)?);
        }
        Ok(out)
    }

    fn max_batch(&self) -> usize {
        self.max_batch
    }
}
