use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, Step};

/// A simple path from a question entity, with one commonsense score per hop.
///
/// `cumulative` is always recomputed as the in-order sum of
/// `per_hop_scores`, never accumulated incrementally from another source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningPath {
    pub origin: NodeId,
    pub steps: Vec<Step>,
    pub per_hop_scores: Vec<f64>,
    pub cumulative: f64,
}

impl ReasoningPath {
    /// Zero-length path at `origin`.
    pub fn seed(origin: NodeId) -> Self {
        ReasoningPath {
            origin,
            steps: Vec::new(),
            per_hop_scores: Vec::new(),
            cumulative: 0.0,
        }
    }

    /// Unscored path; `per_hop_scores` stays empty.
    pub fn unscored(origin: NodeId, steps: Vec<Step>) -> Self {
        ReasoningPath {
            origin,
            steps,
            per_hop_scores: Vec::new(),
            cumulative: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn terminal(&self) -> NodeId {
        self.steps.last().map_or(self.origin, Step::target)
    }

    /// Origin followed by each step's target.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::once(self.origin).chain(self.steps.iter().map(Step::target))
    }

    pub fn visits(&self, node: NodeId) -> bool {
        self.nodes().any(|n| n == node)
    }

    pub fn is_simple(&self) -> bool {
        let nodes: Vec<NodeId> = self.nodes().collect();
        let mut sorted = nodes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        sorted.len() == nodes.len()
    }

    /// Copy extended by `step` without a score; used to build the prompt
    /// that will produce the score.
    pub fn extended(&self, step: Step) -> Self {
        let mut steps = Vec::with_capacity(self.steps.len() + 1);
        steps.extend_from_slice(&self.steps);
        steps.push(step);
        ReasoningPath {
            origin: self.origin,
            steps,
            per_hop_scores: self.per_hop_scores.clone(),
            cumulative: self.cumulative,
        }
    }

    /// Appends the score of the newest hop and recomputes `cumulative`.
    pub fn push_score(&mut self, hop_score: f64) {
        self.per_hop_scores.push(hop_score);
        self.cumulative = sum_scores(&self.per_hop_scores);
    }

    /// Prefix of the first `hops` steps, with matching scores.
    pub fn prefix(&self, hops: usize) -> Self {
        let per_hop_scores: Vec<f64> = self.per_hop_scores.iter().take(hops).copied().collect();
        ReasoningPath {
            origin: self.origin,
            steps: self.steps[..hops].to_vec(),
            cumulative: sum_scores(&per_hop_scores),
            per_hop_scores,
        }
    }

    /// Concatenation; `other` must start where `self` ends.
    pub fn concat(&self, other: &ReasoningPath) -> Option<Self> {
        if other.origin != self.terminal() {
            return None;
        }
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&other.steps);
        let mut per_hop_scores = self.per_hop_scores.clone();
        per_hop_scores.extend_from_slice(&other.per_hop_scores);
        Some(ReasoningPath {
            origin: self.origin,
            steps,
            cumulative: sum_scores(&per_hop_scores),
            per_hop_scores,
        })
    }
}

/// Left-to-right sum.
pub fn sum_scores(scores: &[f64]) -> f64 {
    scores.iter().fold(0.0, |acc, s| acc + s)
}
