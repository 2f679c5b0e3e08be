//! Unigram frequency-table scorer. `p(w | context)` degenerates to `p(w)`,
//! which is enough to exercise the averaging and all of the plumbing
//! without a neural model.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::{floored_log, Score, ScoreError, ScoreRequest, Scorer};
use crate::error::{Error, Result};

/// Reserved token for the out-of-vocabulary probability in table files.
pub const UNK_TOKEN: &str = "<unk>";
pub const DEFAULT_OOV_PROB: f64 = 1e-6;

/// Lowercased whitespace tokens with every punctuation character split out
/// as its own token: "Sky, blue?" -> ["sky", ",", "blue", "?"].
pub fn oracle_tokens(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let mut word = String::new();
        for c in chunk.chars() {
            if c.is_alphanumeric() {
                word.extend(c.to_lowercase());
            } else {
                if !word.is_empty() {
                    tokens.push(std::mem::take(&mut word));
                }
                tokens.push(c.to_string());
            }
        }
        if !word.is_empty() {
            tokens.push(word);
        }
    }
    tokens
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    probs: BTreeMap<String, f64>,
    default_prob: f64,
}

fn check_prob(p: f64) -> bool {
    p.is_finite() && p > 0.0 && p <= 1.0
}

impl FrequencyTable {
    pub fn new(probs: BTreeMap<String, f64>, default_prob: f64) -> Result<Self> {
        if !check_prob(default_prob) {
            return Err(Error::Config(format!(
                "default probability {default_prob} outside (0, 1]"
            )));
        }
        if let Some((t, p)) = probs.iter().find(|(_, p)| !check_prob(**p)) {
            return Err(Error::Config(format!("probability {p} for {t:?} outside (0, 1]")));
        }
        Ok(FrequencyTable { probs, default_prob })
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>, default_prob: f64) -> Result<Self> {
        Self::new(
            pairs.into_iter().map(|(t, p)| (t.to_owned(), p)).collect(),
            default_prob,
        )
    }

    /// Unigram model with add-one smoothing and one reserved OOV slot:
    /// `p(w) = (c(w) + 1) / (T + V + 1)`, `default = 1 / (T + V + 1)`.
    pub fn from_corpus<R: BufRead>(reader: R) -> Result<Self> {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        let mut total = 0u64;
        for line in reader.lines() {
            for token in oracle_tokens(&line?) {
                *counts.entry(token).or_insert(0) += 1;
                total += 1;
            }
        }
        if total == 0 {
            return Err(Error::EmptyInput("corpus has no tokens"));
        }
        let denom = (total + counts.len() as u64 + 1) as f64;
        let probs = counts.into_iter().map(|(t, c)| (t, (c + 1) as f64 / denom)).collect();
        Self::new(probs, 1.0 / denom)
    }

    /// `token<TAB>probability` lines; a `<unk>` row sets the OOV probability.
    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut probs = BTreeMap::new();
        let mut default_prob = DEFAULT_OOV_PROB;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |reason: String| Error::Malformed { line: idx + 1, reason };
            let (token, prob) = line
                .split_once('\t')
                .ok_or_else(|| malformed("expected token<TAB>probability".into()))?;
            let prob: f64 = prob
                .trim()
                .parse()
                .map_err(|e| malformed(format!("bad probability {prob:?}: {e}")))?;
            if !check_prob(prob) {
                return Err(malformed(format!("probability {prob} outside (0, 1]")));
            }
            if token == UNK_TOKEN {
                default_prob = prob;
            } else {
                probs.insert(token.to_owned(), prob);
            }
        }
        if probs.is_empty() {
            return Err(Error::EmptyInput("frequency table has no tokens"));
        }
        Self::new(probs, default_prob)
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{UNK_TOKEN}\t{:e}", self.default_prob)?;
        for (t, p) in &self.probs {
            writeln!(out, "{t}\t{p:e}")?;
        }
        out.flush()
    }

    pub fn prob(&self, token: &str) -> f64 {
        self.probs.get(token).copied().unwrap_or(self.default_prob)
    }

    pub fn default_prob(&self) -> f64 {
        self.default_prob
    }

    pub fn vocab_len(&self) -> usize {
        self.probs.len()
    }

    pub fn tokens(&self) -> impl Iterator<Item = (&str, f64)> {
        self.probs.iter().map(|(t, p)| (t.as_str(), *p))
    }

    pub fn score_sentence(&self, sentence: &str) -> Result<Score, ScoreError> {
        let tokens = oracle_tokens(sentence);
        if tokens.is_empty() {
            return Err(ScoreError::InvalidRequest(format!("no tokens in {sentence:?}")));
        }
        let sum: f64 = tokens.iter().map(|t| floored_log(self.prob(t))).sum();
        Ok(Score {
            value: sum / tokens.len() as f64,
            tokens_scored: tokens.len(),
        })
    }
}

impl Scorer for FrequencyTable {
    fn score(&self, request: &ScoreRequest) -> Result<Vec<Score>, ScoreError> {
        request.validate()?;
        request.sentences.iter().map(|s| self.score_sentence(s)).collect()
    }
}
