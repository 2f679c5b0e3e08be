//! Triples and paths to sentences, and the cloze prompt
//! `"<question> <candidate>, because <statement>"`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, KnowledgeGraph, Step};
use crate::path::ReasoningPath;

pub const CLAUSE_JOINER: &str = ", ";
pub const PROMPT_JOINER: &str = ", because ";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statement {
    pub text: String,
    pub source_edges: Vec<Edge>,
    /// Per-edge flag, true when the edge was rendered tail to head.
    pub reversed: Vec<bool>,
}

impl Statement {
    pub fn clause_count(&self) -> usize {
        self.source_edges.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClozePrompt {
    pub question: String,
    pub candidate: String,
    pub statement: Statement,
    pub text: String,
}

/// Label as prompt text: underscores become spaces.
pub fn display_label(label: &str) -> String {
    label.replace('_', " ")
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn clause(graph: &KnowledgeGraph, step: &Step) -> String {
    let e = &step.edge;
    let rel = graph.relation(e.relation);
    let (subject, phrase, object) = if step.reversed {
        (e.tail, &rel.inverse_surface_text, e.head)
    } else {
        (e.head, &rel.surface_text, e.tail)
    };
    format!(
        "{} {} {}",
        display_label(graph.label(subject)),
        phrase,
        display_label(graph.label(object))
    )
}

fn render_steps(graph: &KnowledgeGraph, steps: &[Step]) -> Result<Statement> {
    if steps.is_empty() {
        return Err(Error::EmptyPath);
    }
    let clauses: Vec<String> = steps.iter().map(|s| clause(graph, s)).collect();
    Ok(Statement {
        text: capitalize(clauses.join(CLAUSE_JOINER).trim_end()),
        source_edges: steps.iter().map(|s| s.edge).collect(),
        reversed: steps.iter().map(|s| s.reversed).collect(),
    })
}

/// "<head> <surface> <tail>" forward, "<tail> <inverse> <head>" reversed.
pub fn render_triplet(graph: &KnowledgeGraph, edge: &Edge, reverse: bool) -> Statement {
    render_steps(
        graph,
        &[Step {
            edge: *edge,
            reversed: reverse,
        }],
    )
    .expect("one step is never empty")
}

/// Comma-joined clauses, first letter capitalized.
pub fn render_path(graph: &KnowledgeGraph, path: &ReasoningPath) -> Result<Statement> {
    render_steps(graph, &path.steps)
}

pub fn build_prompt(graph: &KnowledgeGraph, question: &str, path: &ReasoningPath) -> Result<ClozePrompt> {
    let statement = render_path(graph, path)?;
    let candidate = display_label(graph.label(path.terminal()));
    let text = format!("{question} {candidate}{PROMPT_JOINER}{}", statement.text);
    Ok(ClozePrompt {
        question: question.to_owned(),
        candidate,
        statement,
        text,
    })
}
