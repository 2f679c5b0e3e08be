//! Immutable multi-relational graph with sorted out/in adjacency.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::{RelationTable, RelationType};

/// Dense node handle, valid only for the graph that issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

/// Index into the graph's relation vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationId(pub u16);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub head: NodeId,
    pub relation: RelationId,
    pub tail: NodeId,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Out,
    In,
    Both,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "out" => Ok(Direction::Out),
            "in" => Ok(Direction::In),
            "both" => Ok(Direction::Both),
            other => Err(Error::Config(format!("unknown direction {other:?}"))),
        }
    }
}

/// One traversal step: an edge plus whether it was walked tail to head.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub edge: Edge,
    pub reversed: bool,
}

impl Step {
    pub fn source(&self) -> NodeId {
        if self.reversed {
            self.edge.tail
        } else {
            self.edge.head
        }
    }

    pub fn target(&self) -> NodeId {
        if self.reversed {
            self.edge.head
        } else {
            self.edge.tail
        }
    }
}

/// Minimum stored weight; zero and negative assertion weights are clamped.
pub const MIN_WEIGHT: f64 = 0.01;

pub(crate) fn clamp_weight(w: f64) -> f64 {
    if w.is_nan() {
        1.0
    } else {
        w.max(MIN_WEIGHT)
    }
}

/// Accumulates nodes and deduplicated edges, then freezes into a
/// [`KnowledgeGraph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
    relations: Vec<RelationType>,
    relation_index: HashMap<String, RelationId>,
    edges: Vec<Edge>,
    seen: HashSet<(u32, u16, u32)>,
    table_hash: [u8; 32],
}

/// Result of [`GraphBuilder::add_edge`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddOutcome {
    Added,
    Duplicate,
    SelfLoop,
}

impl GraphBuilder {
    pub fn new(table: &RelationTable) -> Self {
        GraphBuilder {
            table_hash: table.version_hash(),
            ..Default::default()
        }
    }

    pub fn node(&mut self, label: &str) -> NodeId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = NodeId(u32::try_from(self.labels.len()).expect("node count exceeds u32"));
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), id);
        id
    }

    pub fn relation(&mut self, relation: &RelationType) -> RelationId {
        if let Some(&id) = self.relation_index.get(&relation.canonical_name) {
            return id;
        }
        let id = RelationId(u16::try_from(self.relations.len()).expect("relation count exceeds u16"));
        self.relations.push(relation.clone());
        self.relation_index.insert(relation.canonical_name.clone(), id);
        id
    }

    /// Adds `head -relation-> tail`. Self-loops are rejected before any node
    /// is created, so a graph never holds a node that only appeared in a loop.
    pub fn add_edge(&mut self, head: &str, relation: &RelationType, tail: &str, weight: f64) -> AddOutcome {
        if head == tail {
            return AddOutcome::SelfLoop;
        }
        let h = self.node(head);
        let t = self.node(tail);
        let r = self.relation(relation);
        self.push_edge(h, r, t, weight)
    }

    pub(crate) fn push_edge(&mut self, head: NodeId, relation: RelationId, tail: NodeId, weight: f64) -> AddOutcome {
        if head == tail {
            return AddOutcome::SelfLoop;
        }
        if !self.seen.insert((head.0, relation.0, tail.0)) {
            return AddOutcome::Duplicate;
        }
        self.edges.push(Edge {
            head,
            relation,
            tail,
            weight: clamp_weight(weight),
        });
        AddOutcome::Added
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn build(self) -> Result<KnowledgeGraph> {
        if self.edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        Ok(KnowledgeGraph::assemble(
            self.labels,
            self.index,
            self.relations,
            self.edges,
            self.table_hash,
        ))
    }
}

/// Concept graph. Immutable once built and `Sync`, so one instance can be
/// shared by concurrent searches.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
    relations: Vec<RelationType>,
    edges: Vec<Edge>,
    // edge indices, sorted by (relation name, neighbor label)
    out_adj: Vec<Vec<u32>>,
    in_adj: Vec<Vec<u32>>,
    table_hash: [u8; 32],
}

impl KnowledgeGraph {
    fn assemble(
        labels: Vec<String>,
        index: HashMap<String, NodeId>,
        relations: Vec<RelationType>,
        edges: Vec<Edge>,
        table_hash: [u8; 32],
    ) -> Self {
        let mut out_adj = vec![Vec::new(); labels.len()];
        let mut in_adj = vec![Vec::new(); labels.len()];
        for (i, e) in edges.iter().enumerate() {
            out_adj[e.head.0 as usize].push(i as u32);
            in_adj[e.tail.0 as usize].push(i as u32);
        }
        let rel_name = |e: &Edge| relations[e.relation.0 as usize].canonical_name.as_str();
        for list in &mut out_adj {
            list.sort_by(|&a, &b| {
                let (ea, eb) = (&edges[a as usize], &edges[b as usize]);
                rel_name(ea)
                    .cmp(rel_name(eb))
                    .then_with(|| labels[ea.tail.0 as usize].cmp(&labels[eb.tail.0 as usize]))
            });
        }
        for list in &mut in_adj {
            list.sort_by(|&a, &b| {
                let (ea, eb) = (&edges[a as usize], &edges[b as usize]);
                rel_name(ea)
                    .cmp(rel_name(eb))
                    .then_with(|| labels[ea.head.0 as usize].cmp(&labels[eb.head.0 as usize]))
            });
        }
        KnowledgeGraph {
            labels,
            index,
            relations,
            edges,
            out_adj,
            in_adj,
            table_hash,
        }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in insertion order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn relations(&self) -> &[RelationType] {
        &self.relations
    }

    pub fn relation(&self, id: RelationId) -> &RelationType {
        &self.relations[id.0 as usize]
    }

    pub fn label(&self, node: NodeId) -> &str {
        &self.labels[node.0 as usize]
    }

    pub fn labels(&self) -> impl Iterator<Item = (NodeId, &str)> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, l)| (NodeId(i as u32), l.as_str()))
    }

    pub fn node(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        (node.0 as usize) < self.labels.len()
    }

    pub fn table_hash(&self) -> [u8; 32] {
        self.table_hash
    }

    fn check(&self, node: NodeId) -> Result<()> {
        if self.contains(node) {
            Ok(())
        } else {
            Err(Error::UnknownNode(node.0))
        }
    }

    /// Incident edges in deterministic order: sorted by relation name, then
    /// neighbor label. `Both` yields out edges first, then in edges.
    pub fn neighbors(&self, node: NodeId, direction: Direction) -> Result<Vec<Edge>> {
        Ok(self.steps(node, direction)?.map(|s| s.edge).collect())
    }

    /// Like [`neighbors`](Self::neighbors) but tags each edge with the
    /// traversal direction. `In` edges come back as reversed steps.
    pub fn steps(&self, node: NodeId, direction: Direction) -> Result<impl Iterator<Item = Step> + '_> {
        self.check(node)?;
        let n = node.0 as usize;
        let outs: &[u32] = if direction == Direction::In {
            &[]
        } else {
            &self.out_adj[n]
        };
        let ins: &[u32] = if direction == Direction::Out {
            &[]
        } else {
            &self.in_adj[n]
        };
        let out_steps = outs.iter().map(move |&i| Step {
            edge: self.edges[i as usize],
            reversed: false,
        });
        let in_steps = ins.iter().map(move |&i| Step {
            edge: self.edges[i as usize],
            reversed: true,
        });
        Ok(out_steps.chain(in_steps))
    }

    pub fn out_degree(&self, node: NodeId) -> usize {
        self.out_adj.get(node.0 as usize).map_or(0, Vec::len)
    }

    pub fn in_degree(&self, node: NodeId) -> usize {
        self.in_adj.get(node.0 as usize).map_or(0, Vec::len)
    }

    /// Edge count per canonical relation name.
    pub fn relation_histogram(&self) -> BTreeMap<String, usize> {
        let mut hist = BTreeMap::new();
        for e in &self.edges {
            *hist
                .entry(self.relation(e.relation).canonical_name.clone())
                .or_insert(0) += 1;
        }
        hist
    }

    pub(crate) fn from_parts(
        labels: Vec<String>,
        relations: Vec<RelationType>,
        edges: Vec<Edge>,
        table_hash: [u8; 32],
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), NodeId(i as u32)).is_some() {
                return Err(Error::Snapshot(format!("duplicate label {l:?}")));
            }
        }
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.head.0 as usize >= labels.len()
                || e.tail.0 as usize >= labels.len()
                || e.relation.0 as usize >= relations.len()
            {
                return Err(Error::Snapshot("edge references missing node or relation".into()));
            }
            if e.head == e.tail || !seen.insert((e.head, e.relation, e.tail)) {
                return Err(Error::Snapshot("self-loop or duplicate edge".into()));
            }
        }
        if edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        Ok(Self::assemble(labels, index, relations, edges, table_hash))
    }
}
