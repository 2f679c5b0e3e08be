//! Lexical entity linking: question text to graph nodes.
//!
//! Tokens are lowercased and reduced by a small suffix-stripping lemmatizer.
//! Graph labels go through the same lemmatizer, so a span links to a label
//! when both reduce to the same lemma sequence. Longer n-grams are tried
//! first and shadow anything they overlap; among equal lengths the leftmost
//! wins.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{KnowledgeGraph, NodeId};

const BUILTIN_STOPWORDS: &str = include_str!("stopwords.txt");

const IRREGULAR: &[(&str, &str)] = &[
    ("children", "child"),
    ("men", "man"),
    ("women", "woman"),
    ("mice", "mouse"),
    ("feet", "foot"),
    ("teeth", "tooth"),
    ("geese", "goose"),
    ("wolves", "wolf"),
    ("knives", "knife"),
    ("leaves", "leaf"),
    ("lives", "life"),
    ("wives", "wife"),
    ("went", "go"),
    ("ran", "run"),
    ("ate", "eat"),
];

const INVARIANT: &[&str] = &[
    "this",
    "his",
    "its",
    "is",
    "was",
    "has",
    "does",
    "always",
    "perhaps",
    "yes",
    "thus",
    "news",
    "series",
    "species",
    "physics",
    "mathematics",
    "lens",
    "chaos",
    "bias",
    "analysis",
    "basis",
    "crisis",
    "thing",
    "something",
    "nothing",
    "anything",
    "everything",
    "morning",
    "evening",
    "ceiling",
    "during",
    "king",
    "ring",
    "sing",
    "wing",
    "bring",
    "spring",
    "string",
    "swing",
    "need",
    "seed",
    "feed",
    "bed",
    "red",
    "bread",
    "speed",
    "hundred",
    "shed",
    "indeed",
    "proceed",
    "succeed",
    "exceed",
];

fn undouble(stem: &str) -> &str {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 3 && b[n - 1] == b[n - 2] && !b"aeioulsz".contains(&b[n - 1]) && b[n - 1].is_ascii_alphabetic() {
        &stem[..n - 1]
    } else {
        stem
    }
}

/// Reduces a lowercase word to a crude lemma: plural `-s`/`-es`/`-ies`,
/// `-ing` and `-ed` are stripped, with a short exception list. The result
/// need not be a dictionary word; it only has to be consistent.
pub fn lemmatize(word: &str) -> String {
    if let Some((_, lemma)) = IRREGULAR.iter().find(|(w, _)| *w == word) {
        return (*lemma).to_owned();
    }
    if INVARIANT.contains(&word) || word.chars().count() <= 3 || !word.is_ascii() {
        return word.to_owned();
    }
    let len = word.len();
    if let Some(stem) = word.strip_suffix("ies").filter(|_| len > 4) {
        return format!("{stem}y");
    }
    if word.ends_with("sses") {
        return word[..len - 2].to_owned();
    }
    if ["ches", "shes", "xes", "zes"].iter().any(|s| word.ends_with(s)) {
        return word[..len - 2].to_owned();
    }
    if word.ends_with('s') && !["ss", "us", "is"].iter().any(|s| word.ends_with(s)) {
        return word[..len - 1].to_owned();
    }
    if let Some(stem) = word.strip_suffix("ing").filter(|_| len >= 6) {
        return undouble(stem).to_owned();
    }
    if let Some(stem) = word.strip_suffix("ied").filter(|_| len > 4) {
        return format!("{stem}y");
    }
    if let Some(stem) = word.strip_suffix("ed").filter(|_| len >= 5) {
        return undouble(stem).to_owned();
    }
    word.to_owned()
}

/// Lemma key of a graph label: words split on `_`, lemmatized, space-joined.
pub fn label_key(label: &str) -> String {
    label
        .split('_')
        .map(|w| lemmatize(&w.to_lowercase()))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn builtin_stopwords() -> HashSet<String> {
    parse_stopwords(BUILTIN_STOPWORDS)
}

fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// Reads a one-token-per-line stopword file.
pub fn read_stopwords<R: BufRead>(mut reader: R) -> Result<HashSet<String>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    Ok(parse_stopwords(&text))
}

#[derive(Debug, Clone)]
pub struct LinkConfig {
    pub max_ngram: usize,
    pub stopwords: HashSet<String>,
    /// Optional cap on returned mentions; no cap by default.
    pub max_mentions: Option<usize>,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            max_ngram: 4,
            stopwords: builtin_stopwords(),
            max_mentions: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub surface: String,
    /// Character offsets into the normalized question, end exclusive.
    pub start: usize,
    pub end: usize,
    pub node: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkResult {
    pub question: String,
    pub mentions: Vec<EntityMention>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionRecord {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub node_label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub question: String,
    pub mentions: Vec<MentionRecord>,
}

impl LinkResult {
    pub fn nodes(&self) -> Vec<NodeId> {
        self.mentions.iter().map(|m| m.node).collect()
    }

    pub fn to_record(&self, graph: &KnowledgeGraph) -> LinkRecord {
        LinkRecord {
            question: self.question.clone(),
            mentions: self
                .mentions
                .iter()
                .map(|m| MentionRecord {
                    surface: m.surface.clone(),
                    start: m.start,
                    end: m.end,
                    node_label: graph.label(m.node).to_owned(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    start: usize,
    end: usize,
    lower: String,
    lemma: String,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Word tokens with char offsets. Apostrophes and hyphens stay inside a
/// token when flanked by word characters ("don't", "x-ray").
fn tokenize(chars: &[char]) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !is_word_char(chars[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len()
            && (is_word_char(chars[i])
                || (matches!(chars[i], '\'' | '-') && i + 1 < chars.len() && is_word_char(chars[i + 1]) && i > start))
        {
            i += 1;
        }
        let lower: String = chars[start..i].iter().flat_map(|c| c.to_lowercase()).collect();
        let lemma = lemmatize(&lower);
        tokens.push(Token {
            start,
            end: i,
            lower,
            lemma,
        });
    }
    tokens
}

/// Linker with a precomputed lemma index over the graph's labels. Build once
/// and reuse; linking itself is a pure function of the question.
#[derive(Debug)]
pub struct EntityLinker<'g> {
    graph: &'g KnowledgeGraph,
    config: LinkConfig,
    index: HashMap<String, Vec<NodeId>>,
}

impl<'g> EntityLinker<'g> {
    pub fn new(graph: &'g KnowledgeGraph, config: LinkConfig) -> Self {
        let mut index: HashMap<String, Vec<NodeId>> = HashMap::new();
        for (id, label) in graph.labels() {
            let words = label.split('_').count();
            if words > config.max_ngram || label.split('_').any(str::is_empty) {
                continue;
            }
            index.entry(label_key(label)).or_default().push(id);
        }
        for ids in index.values_mut() {
            ids.sort_by(|a, b| graph.label(*a).cmp(graph.label(*b)));
        }
        EntityLinker { graph, config, index }
    }

    pub fn config(&self) -> &LinkConfig {
        &self.config
    }

    pub fn link(&self, question: &str) -> Result<LinkResult> {
        let normalized = question.split_whitespace().collect::<Vec<_>>().join(" ");
        if normalized.is_empty() {
            return Err(Error::NoLinkableEntities(question.to_owned()));
        }
        let chars: Vec<char> = normalized.chars().collect();
        let tokens = tokenize(&chars);

        let mut taken = vec![false; tokens.len()];
        let mut linked: HashSet<NodeId> = HashSet::new();
        let mut mentions = Vec::new();
        let max_n = self.config.max_ngram.min(tokens.len());
        for n in (1..=max_n).rev() {
            for i in 0..=tokens.len() - n {
                let window = &tokens[i..i + n];
                if taken[i..i + n].iter().any(|&t| t) {
                    continue;
                }
                // multi-word spans only across single spaces
                if window
                    .windows(2)
                    .any(|w| w[1].start != w[0].end + 1 || chars[w[0].end] != ' ')
                {
                    continue;
                }
                if n == 1 && self.config.stopwords.contains(&window[0].lower) {
                    continue;
                }
                let key = window.iter().map(|t| t.lemma.as_str()).collect::<Vec<_>>().join(" ");
                let Some(candidates) = self.index.get(&key) else {
                    continue;
                };
                let exact = window.iter().map(|t| t.lower.as_str()).collect::<Vec<_>>().join("_");
                let node = self
                    .graph
                    .node(&exact)
                    .filter(|id| candidates.contains(id))
                    .unwrap_or(candidates[0]);
                if !linked.insert(node) {
                    continue;
                }
                taken[i..i + n].iter_mut().for_each(|t| *t = true);
                let (start, end) = (window[0].start, window[n - 1].end);
                mentions.push(EntityMention {
                    surface: chars[start..end].iter().collect(),
                    start,
                    end,
                    node,
                });
            }
        }
        mentions.sort_by_key(|m| m.start);
        if let Some(cap) = self.config.max_mentions {
            mentions.truncate(cap);
        }
        if mentions.is_empty() {
            return Err(Error::NoLinkableEntities(normalized));
        }
        Ok(LinkResult {
            question: normalized,
            mentions,
        })
    }
}

/// One-shot linking. Builds the label index on every call; prefer
/// [`EntityLinker`] when linking many questions against one graph.
pub fn extract_entities(question: &str, graph: &KnowledgeGraph, config: &LinkConfig) -> Result<LinkResult> {
    EntityLinker::new(graph, config.clone()).link(question)
}
