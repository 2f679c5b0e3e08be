//! Versioned binary graph snapshot.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic      8 bytes  "PKGRAPH\0"
//! version    u32
//! table_hash 32 bytes  SHA-256 of the relation table used at build time
//! relations  u32 count, then per relation: canonical, surface, inverse (u32 len + UTF-8)
//! labels     u32 count, then u32 len + UTF-8 each, in NodeId order
//! edges      u64 count, then head u32, relation u16, tail u32, weight f64
//! ```
//!
//! Adjacency lists are rebuilt on load, so neighbor orderings round-trip.

use std::io::{self, Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::graph::{Edge, KnowledgeGraph, NodeId, RelationId};
use crate::relation::RelationType;

pub const MAGIC: &[u8; 8] = b"PKGRAPH\0";
pub const VERSION: u32 = 1;

fn write_str<W: Write>(out: &mut W, s: &str) -> io::Result<()> {
    out.write_u32::<LE>(s.len() as u32)?;
    out.write_all(s.as_bytes())
}

fn read_str<R: Read>(input: &mut R) -> Result<String> {
    let len = input.read_u32::<LE>()? as usize;
    let mut buf = vec![0; len];
    input.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Snapshot(format!("label is not UTF-8: {e}")))
}

pub fn write_snapshot<W: Write>(graph: &KnowledgeGraph, mut out: W) -> io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_u32::<LE>(VERSION)?;
    out.write_all(&graph.table_hash())?;

    out.write_u32::<LE>(graph.relations().len() as u32)?;
    for r in graph.relations() {
        write_str(&mut out, &r.canonical_name)?;
        write_str(&mut out, &r.surface_text)?;
        write_str(&mut out, &r.inverse_surface_text)?;
    }

    out.write_u32::<LE>(graph.node_count() as u32)?;
    for (_, label) in graph.labels() {
        write_str(&mut out, label)?;
    }

    out.write_u64::<LE>(graph.edge_count() as u64)?;
    for e in graph.edges() {
        out.write_u32::<LE>(e.head.0)?;
        out.write_u16::<LE>(e.relation.0)?;
        out.write_u32::<LE>(e.tail.0)?;
        out.write_f64::<LE>(e.weight)?;
    }
    out.flush()
}

pub fn read_snapshot<R: Read>(mut input: R) -> Result<KnowledgeGraph> {
    let mut magic = [0u8; 8];
    input
        .read_exact(&mut magic)
        .map_err(|_| Error::Snapshot("file too short".into()))?;
    if &magic != MAGIC {
        return Err(Error::Snapshot("bad magic; not a graph snapshot".into()));
    }
    let version = input.read_u32::<LE>()?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported snapshot version {version}")));
    }
    let mut table_hash = [0u8; 32];
    input.read_exact(&mut table_hash)?;

    let n_rel = input.read_u32::<LE>()? as usize;
    if n_rel > u16::MAX as usize + 1 {
        return Err(Error::Snapshot("too many relations".into()));
    }
    let mut relations = Vec::with_capacity(n_rel);
    for _ in 0..n_rel {
        relations.push(RelationType {
            canonical_name: read_str(&mut input)?,
            surface_text: read_str(&mut input)?,
            inverse_surface_text: read_str(&mut input)?,
        });
    }

    let n_nodes = input.read_u32::<LE>()? as usize;
    let mut labels = Vec::with_capacity(n_nodes.min(1 << 24));
    for _ in 0..n_nodes {
        labels.push(read_str(&mut input)?);
    }

    let n_edges = input.read_u64::<LE>()? as usize;
    let mut edges = Vec::with_capacity(n_edges.min(1 << 26));
    for _ in 0..n_edges {
        edges.push(Edge {
            head: NodeId(input.read_u32::<LE>()?),
            relation: RelationId(input.read_u16::<LE>()?),
            tail: NodeId(input.read_u32::<LE>()?),
            weight: input.read_f64::<LE>()?,
        });
    }
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(Error::Snapshot("trailing bytes after edge section".into()));
    }
    KnowledgeGraph::from_parts(labels, relations, edges, table_hash)
}

pub fn to_bytes(graph: &KnowledgeGraph) -> Vec<u8> {
    let mut buf = Vec::new();
    write_snapshot(graph, &mut buf).expect("writing to a Vec cannot fail");
    buf
}
