//! Multi-hop commonsense reasoning over a ConceptNet-style knowledge graph.
//!
//! A question is linked to graph concepts, reasoning paths are grown from
//! those concepts hop by hop, and each candidate path is verbalized into a
//! cloze prompt and scored by a pluggable sentence scorer. The best-scoring
//! terminal concept is the answer, and its path is the explanation.
//!
//! Modules follow the pipeline:
//!
//! - [`relation`], [`graph`], [`ingest`], [`snapshot`]: the graph store
//! - [`link`]: question text to seed concepts
//! - [`verbalize`]: triples and paths to sentences and prompts
//! - [`scorer`]: the scoring contract, a unigram oracle and an HTTP client
//! - [`expansion`]: beam-pruned search and answer prediction
//! - [`corpus`]: finetuning sentences with token masking

pub mod corpus;
pub mod error;
pub mod expansion;
pub mod graph;
pub mod ingest;
pub mod link;
pub mod path;
pub mod relation;
pub mod scorer;
pub mod snapshot;
pub mod verbalize;

pub use error::{Error, Result};
pub use expansion::{
    expand_hop, predict_answer, search, search_from_seeds, search_with_linker, Answer, DirectionPolicy, Frontier,
    SearchConfig, SearchResult,
};
pub use graph::{Direction, Edge, GraphBuilder, KnowledgeGraph, NodeId, RelationId, Step};
pub use link::{extract_entities, EntityLinker, LinkConfig, LinkResult};
pub use path::ReasoningPath;
pub use relation::{merge_relation, RelationTable, RelationType};
pub use scorer::{FrequencyTable, RemoteScorer, Score, ScoreError, ScoreRequest, Scorer};
pub use verbalize::{build_prompt, render_path, render_triplet, ClozePrompt, Statement};
