//! Independent reference implementations used by the integration tests.
//! Nothing here calls the search, verbalizer or path-finding code under test.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use pathkeep::{FrequencyTable, GraphBuilder, KnowledgeGraph, NodeId, RelationTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RELATIONS: &[&str] = &[
    "relatedto",
    "isa",
    "atlocation",
    "usedfor",
    "partof",
    "causes",
    "antonym",
    "hasa",
];

/// One walked edge: index into `graph.edges()` and whether it was walked tail to head.
pub type RawStep = (usize, bool);

#[derive(Debug, Clone)]
pub struct RawPath {
    pub origin: NodeId,
    pub steps: Vec<RawStep>,
}

fn ends(graph: &KnowledgeGraph, (i, rev): RawStep) -> (NodeId, NodeId) {
    let e = graph.edges()[i];
    if rev {
        (e.tail, e.head)
    } else {
        (e.head, e.tail)
    }
}

pub fn raw_terminal(graph: &KnowledgeGraph, p: &RawPath) -> NodeId {
    p.steps.last().map(|&s| ends(graph, s).1).unwrap_or(p.origin)
}

/// Every simple path of 1..=`max_hops` edges starting at `origin`, found by
/// scanning the full edge list at each step. `both` also walks edges backwards.
pub fn enumerate_simple_paths(graph: &KnowledgeGraph, origin: NodeId, max_hops: usize, both: bool) -> Vec<RawPath> {
    let mut out = Vec::new();
    let mut stack = vec![RawPath {
        origin,
        steps: Vec::new(),
    }];
    while let Some(p) = stack.pop() {
        if p.steps.len() == max_hops {
            continue;
        }
        let here = raw_terminal(graph, &p);
        let mut visited = vec![p.origin];
        visited.extend(p.steps.iter().map(|&s| ends(graph, s).1));
        for (i, e) in graph.edges().iter().enumerate() {
            for rev in [false, true] {
                if rev && !both {
                    continue;
                }
                let (from, to) = if rev { (e.tail, e.head) } else { (e.head, e.tail) };
                if from != here || visited.contains(&to) {
                    continue;
                }
                let mut next = p.clone();
                next.steps.push((i, rev));
                out.push(next.clone());
                stack.push(next);
            }
        }
    }
    out
}

fn words(label: &str) -> String {
    label.replace('_', " ")
}

/// Statement text for a raw path, built directly from relation templates.
pub fn statement(graph: &KnowledgeGraph, steps: &[RawStep]) -> String {
    let clauses: Vec<String> = steps
        .iter()
        .map(|&(i, rev)| {
            let e = graph.edges()[i];
            let rel = graph.relation(e.relation);
            if rev {
                format!(
                    "{} {} {}",
                    words(graph.label(e.tail)),
                    rel.inverse_surface_text,
                    words(graph.label(e.head))
                )
            } else {
                format!(
                    "{} {} {}",
                    words(graph.label(e.head)),
                    rel.surface_text,
                    words(graph.label(e.tail))
                )
            }
        })
        .collect();
    let joined = clauses.join(", ");
    let mut chars = joined.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => joined,
    }
}

pub fn prompt(graph: &KnowledgeGraph, question: &str, steps: &[RawStep]) -> String {
    let terminal = ends(graph, *steps.last().unwrap()).1;
    format!(
        "{question} {}, because {}",
        words(graph.label(terminal)),
        statement(graph, steps)
    )
}

/// Per-hop scores and their sum for every prefix of `p`.
pub fn path_scores(graph: &KnowledgeGraph, table: &FrequencyTable, question: &str, p: &RawPath) -> (Vec<f64>, f64) {
    let hops: Vec<f64> = (1..=p.steps.len())
        .map(|h| {
            table
                .score_sentence(&prompt(graph, question, &p.steps[..h]))
                .unwrap()
                .value
        })
        .collect();
    let total = hops.iter().fold(0.0, |acc, s| acc + s);
    (hops, total)
}

/// Best cumulative score per non-seed entity over all simple paths.
pub fn exhaustive_answers(
    graph: &KnowledgeGraph,
    table: &FrequencyTable,
    question: &str,
    seeds: &[NodeId],
    max_hops: usize,
    both: bool,
) -> BTreeMap<String, f64> {
    let mut best: HashMap<NodeId, f64> = HashMap::new();
    let mut distinct = seeds.to_vec();
    distinct.sort();
    distinct.dedup();
    for &s in &distinct {
        for p in enumerate_simple_paths(graph, s, max_hops, both) {
            let t = raw_terminal(graph, &p);
            if seeds.contains(&t) {
                continue;
            }
            let (_, total) = path_scores(graph, table, question, &p);
            let slot = best.entry(t).or_insert(f64::NEG_INFINITY);
            if total > *slot {
                *slot = total;
            }
        }
    }
    best.into_iter().map(|(n, s)| (graph.label(n).to_owned(), s)).collect()
}

pub fn path_count(graph: &KnowledgeGraph, seeds: &[NodeId], max_hops: usize, both: bool) -> usize {
    seeds
        .iter()
        .map(|&s| enumerate_simple_paths(graph, s, max_hops, both).len())
        .sum()
}

pub struct RandomCase {
    pub graph: KnowledgeGraph,
    pub table: FrequencyTable,
    pub seeds: Vec<NodeId>,
    pub question: String,
}

fn label_for(i: usize, rng: &mut ChaCha8Rng) -> String {
    if rng.gen_bool(0.25) {
        format!("w{i}_x{}", rng.gen_range(0..5))
    } else {
        format!("w{i}")
    }
}

/// Random graph with `nodes` nodes and up to `edges` edges over builtin
/// relations, a random unigram table over its vocabulary, and 1 to 3 seeds.
pub fn random_case(seed: u64, nodes: usize, edges: usize) -> RandomCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = RelationTable::builtin();
    let labels: Vec<String> = (0..nodes).map(|i| label_for(i, &mut rng)).collect();
    let mut builder = GraphBuilder::new(table);
    while builder.edge_count() == 0 {
        for _ in 0..edges {
            let h = rng.gen_range(0..nodes);
            let t = rng.gen_range(0..nodes);
            let rel = table.merge(RELATIONS[rng.gen_range(0..RELATIONS.len())]);
            builder.add_edge(&labels[h], &rel, &labels[t], 1.0);
        }
    }
    let graph = builder.build().unwrap();

    let mut vocab: Vec<String> = Vec::new();
    for (_, l) in graph.labels() {
        vocab.extend(l.split('_').map(str::to_owned));
    }
    for r in graph.relations() {
        vocab.extend(r.surface_text.split(' ').map(str::to_owned));
        vocab.extend(r.inverse_surface_text.split(' ').map(str::to_owned));
    }
    vocab.extend(["which", "thing", "links", "?", ",", "because"].map(str::to_owned));
    vocab.sort();
    vocab.dedup();
    let probs: BTreeMap<String, f64> = vocab.into_iter().map(|w| (w, rng.gen_range(0.001..1.0))).collect();
    let freq = FrequencyTable::new(probs, 1e-4).unwrap();

    let node_ids: Vec<NodeId> = graph.labels().map(|(n, _)| n).collect();
    let k = rng.gen_range(1..=3.min(node_ids.len()));
    let seeds: Vec<NodeId> = (0..k).map(|_| node_ids[rng.gen_range(0..node_ids.len())]).collect();
    let question = format!(
        "Which thing links {}?",
        seeds
            .iter()
            .map(|&s| words(graph.label(s)))
            .collect::<Vec<_>>()
            .join(" ")
    );
    RandomCase {
        graph,
        table: freq,
        seeds,
        question,
    }
}

/// Raw relation URIs used in synthetic dumps and the canonical group each
/// one is expected to land in.
pub const RAW_RELATIONS: &[(&str, &str)] = &[
    ("/r/IsA", "isa"),
    ("/r/InstanceOf", "isa"),
    ("/r/Synonym", "relatedto"),
    ("/r/SimilarTo", "relatedto"),
    ("/r/RelatedTo", "relatedto"),
    ("/r/DistinctFrom", "antonym"),
    ("/r/Antonym", "antonym"),
    ("/r/LocatedNear", "atlocation"),
    ("/r/AtLocation", "atlocation"),
    ("/r/MotivatedByGoal", "causes"),
    ("/r/CausesDesire", "causes"),
    ("/r/UsedFor", "usedfor"),
    ("/r/PartOf", "partof"),
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExpectedCounts {
    pub total: u64,
    pub kept: u64,
    pub non_english: u64,
    pub malformed: u64,
    pub dedup: u64,
    pub self_loops: u64,
}

pub struct SyntheticDump {
    pub text: String,
    pub counts: ExpectedCounts,
    /// (head, canonical relation, tail) of every kept edge.
    pub edges: std::collections::BTreeSet<(String, String, String)>,
}

/// A ConceptNet-shaped assertion dump with a known mix of English edges,
/// other-language lines, malformed lines, duplicates and self-loops.
pub fn synthetic_dump(seed: u64, lines: usize, concepts: usize) -> SyntheticDump {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    let mut counts = ExpectedCounts::default();
    let mut edges = std::collections::BTreeSet::new();
    let concept = |rng: &mut ChaCha8Rng| -> (String, String) {
        let i = rng.gen_range(0..concepts);
        let label = if i % 7 == 0 {
            format!("term_{i}_x")
        } else {
            format!("term{i}")
        };
        let surface = if rng.gen_bool(0.3) {
            label.to_uppercase()
        } else {
            label.clone()
        };
        let uri = match rng.gen_range(0..3) {
            0 => format!("/c/en/{surface}"),
            1 => format!("/c/en/{surface}/n"),
            _ => format!("/c/en/{surface}/n/wn/thing"),
        };
        (uri, label)
    };
    for _ in 0..lines {
        counts.total += 1;
        let (raw, canonical) = RAW_RELATIONS[rng.gen_range(0..RAW_RELATIONS.len())];
        let weight = rng.gen_range(0.1..5.0);
        let meta = format!("{{\"dataset\": \"/d/test\", \"weight\": {weight}}}");
        match rng.gen_range(0..100) {
            0..=14 => {
                counts.non_english += 1;
                let (h, _) = concept(&mut rng);
                let lang = ["fr", "de", "ja"][rng.gen_range(0..3)];
                let t = format!("/c/{lang}/mot{}", rng.gen_range(0..50));
                let (s, e) = if rng.gen_bool(0.5) { (h, t) } else { (t, h) };
                text.push_str(&format!("/a/[{raw}/,{s}/,{e}/]\t{raw}\t{s}\t{e}\t{meta}\n"));
            }
            15..=19 => {
                counts.malformed += 1;
                let (h, _) = concept(&mut rng);
                let (t, _) = concept(&mut rng);
                let line = match rng.gen_range(0..4) {
                    0 => format!("/a/[x]\t{raw}\t{h}\n"),
                    1 => format!("/a/[x]\t{raw}\t{h}\t{t}\t{{not json\n"),
                    2 => format!("/a/[x]\t{raw}\t{h}\t{t}\t{{\"weight\": \"heavy\"}}\n"),
                    _ => format!("/a/[x]\tIsA\t{h}\t{t}\t{meta}\n"),
                };
                text.push_str(&line);
            }
            20..=22 => {
                let (h, _) = concept(&mut rng);
                counts.self_loops += 1;
                text.push_str(&format!("/a/[x]\t{raw}\t{h}\t{h}\t{meta}\n"));
            }
            _ => {
                let (h, hl) = concept(&mut rng);
                let (t, tl) = concept(&mut rng);
                if hl == tl {
                    counts.self_loops += 1;
                } else if edges.insert((hl, canonical.to_owned(), tl)) {
                    counts.kept += 1;
                } else {
                    counts.dedup += 1;
                }
                text.push_str(&format!("/a/[{raw}/,{h}/,{t}/]\t{raw}\t{h}\t{t}\t{meta}\n"));
            }
        }
    }
    SyntheticDump { text, counts, edges }
}
