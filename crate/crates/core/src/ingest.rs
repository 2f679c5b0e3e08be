//! ConceptNet 5.6 assertion dump and head/relation/tail fixture loaders.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;

use crate::error::{Error, Result};
use crate::graph::{AddOutcome, GraphBuilder, KnowledgeGraph};
use crate::relation::RelationTable;

#[derive(Debug, Clone)]
pub struct IngestConfig {
    /// Abort on the first malformed line instead of counting it.
    pub strict: bool,
    pub table: RelationTable,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            strict: false,
            table: RelationTable::builtin().clone(),
        }
    }
}

/// Per-line disposition counts. `total` is the sum of the other five.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub total: u64,
    pub kept: u64,
    pub non_english: u64,
    pub malformed: u64,
    pub dedup: u64,
    pub self_loops: u64,
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "total={}", self.total)?;
        writeln!(f, "kept={}", self.kept)?;
        writeln!(f, "non_english={}", self.non_english)?;
        writeln!(f, "malformed={}", self.malformed)?;
        writeln!(f, "dedup={}", self.dedup)?;
        write!(f, "self_loops={}", self.self_loops)
    }
}

/// Opens a plain or gzip-compressed file, sniffing the gzip magic bytes.
pub fn open_input(path: &Path) -> io::Result<Box<dyn BufRead>> {
    let mut file = BufReader::new(File::open(path)?);
    let magic = file.fill_buf()?;
    if magic.len() >= 2 && magic[0] == 0x1f && magic[1] == 0x8b {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(file))
    }
}

/// Normalizes an English concept URI to a node label:
/// "/c/en/Ice_Cream/n/wn/food" -> "ice_cream". Returns `None` for
/// non-English or non-concept URIs.
pub fn english_label(uri: &str) -> Option<String> {
    let rest = uri.strip_prefix("/c/en/")?;
    let term = rest.split('/').next().unwrap_or_default();
    Some(normalize_label(term))
}

/// Lowercase, whitespace runs to single underscores.
pub fn normalize_label(text: &str) -> String {
    text.split(|c: char| c.is_whitespace() || c == '_')
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

enum LineKind {
    Edge {
        head: String,
        relation: String,
        tail: String,
        weight: f64,
    },
    NonEnglish,
}

fn parse_assertion(line: &str) -> std::result::Result<LineKind, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() < 5 {
        return Err(format!(
            "expected at least 5 tab-separated fields, found {}",
            fields.len()
        ));
    }
    let (relation, start, end, meta) = (fields[1], fields[2], fields[3], fields[4]);
    if !relation.starts_with("/r/") || relation.len() <= 3 {
        return Err(format!("bad relation URI {relation:?}"));
    }
    if start.is_empty() || end.is_empty() {
        return Err("empty start or end URI".to_owned());
    }
    let meta: serde_json::Value = serde_json::from_str(meta).map_err(|e| format!("bad metadata JSON: {e}"))?;
    let weight = match meta.get("weight") {
        None => 1.0,
        Some(w) => w.as_f64().ok_or_else(|| format!("non-numeric weight {w}"))?,
    };
    match (english_label(start), english_label(end)) {
        (Some(head), Some(tail)) => {
            if head.is_empty() || tail.is_empty() {
                return Err("empty concept label".to_owned());
            }
            Ok(LineKind::Edge {
                head,
                relation: relation.to_owned(),
                tail,
                weight,
            })
        }
        _ => Ok(LineKind::NonEnglish),
    }
}

/// Builds a graph from ConceptNet 5.6 assertion lines. Lines keep the
/// English-English assertions, merged and deduplicated, minus self-loops.
pub fn ingest_conceptnet<R: BufRead>(mut reader: R, config: &IngestConfig) -> Result<(KnowledgeGraph, IngestReport)> {
    let mut builder = GraphBuilder::new(&config.table);
    let mut report = IngestReport::default();
    let mut buf = Vec::new();
    let mut line_no = 0usize;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        while matches!(buf.last(), Some(b'\n' | b'\r')) {
            buf.pop();
        }
        if buf.is_empty() {
            continue;
        }
        report.total += 1;
        let parsed = std::str::from_utf8(&buf)
            .map_err(|e| format!("invalid UTF-8: {e}"))
            .and_then(parse_assertion);
        match parsed {
            Err(reason) => {
                if config.strict {
                    return Err(Error::Malformed { line: line_no, reason });
                }
                report.malformed += 1;
            }
            Ok(LineKind::NonEnglish) => report.non_english += 1,
            Ok(LineKind::Edge {
                head,
                relation,
                tail,
                weight,
            }) => {
                let relation = config.table.merge(&relation);
                match builder.add_edge(&head, &relation, &tail, weight) {
                    AddOutcome::Added => report.kept += 1,
                    AddOutcome::Duplicate => report.dedup += 1,
                    AddOutcome::SelfLoop => report.self_loops += 1,
                }
            }
        }
    }
    Ok((builder.build()?, report))
}

/// Loads `head<TAB>relation<TAB>tail` lines. Blank lines and `#` comments
/// are skipped; duplicates collapse and self-loops are dropped.
pub fn load_fixture<R: BufRead>(reader: R, table: &RelationTable) -> Result<KnowledgeGraph> {
    load_fixture_counted(reader, table).map(|(g, _)| g)
}

/// [`load_fixture`] plus per-line counts. `non_english` and `malformed`
/// stay zero since bad fixture lines are errors.
pub fn load_fixture_counted<R: BufRead>(reader: R, table: &RelationTable) -> Result<(KnowledgeGraph, IngestReport)> {
    let mut builder = GraphBuilder::new(table);
    let mut report = IngestReport::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 || cols.iter().any(|c| c.trim().is_empty()) {
            return Err(Error::Malformed {
                line: idx + 1,
                reason: format!("expected 3 non-empty tab-separated columns, found {}", cols.len()),
            });
        }
        report.total += 1;
        let relation = table.merge(cols[1].trim());
        match builder.add_edge(cols[0].trim(), &relation, cols[2].trim(), 1.0) {
            AddOutcome::Added => report.kept += 1,
            AddOutcome::Duplicate => report.dedup += 1,
            AddOutcome::SelfLoop => report.self_loops += 1,
        }
    }
    Ok((builder.build()?, report))
}

/// Writes the graph as fixture TSV in edge insertion order.
pub fn write_fixture<W: Write>(graph: &KnowledgeGraph, mut out: W) -> io::Result<()> {
    for e in graph.edges() {
        writeln!(
            out,
            "{}\t{}\t{}",
            graph.label(e.head),
            graph.relation(e.relation).canonical_name,
            graph.label(e.tail)
        )?;
    }
    out.flush()
}
