//! Relation vocabulary: merging raw ConceptNet relations into canonical types
//! and the sentence templates used to verbalize them.
//!
//! Five groups of near-synonymous relations collapse into one canonical type
//! each (`antonym`, `atlocation`, `causes`, `relatedto`, `isa`). Every other
//! ConceptNet 5.6 relation keeps its own canonical name with a hand-written
//! template, and names outside the built-in table get a generated template.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A merged relation type together with its forward and reverse templates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelationType {
    pub canonical_name: String,
    /// Phrase placed between head and tail, e.g. "is the antonym of".
    pub surface_text: String,
    /// Phrase used when the edge is traversed tail to head.
    pub inverse_surface_text: String,
}

/// (canonical, surface, inverse, merged aliases)
const MERGE_GROUPS: &[(&str, &str, &str, &[&str])] = &[
    (
        "antonym",
        "is the antonym of",
        "is the antonym of",
        &["antonym", "distinctfrom"],
    ),
    (
        "atlocation",
        "is at location of",
        "is the location of",
        &["atlocation", "locatednear"],
    ),
    (
        "causes",
        "causes",
        "is caused by",
        &["causes", "causesdesire", "motivatedby", "motivatedbygoal"],
    ),
    (
        "relatedto",
        "is related to",
        "is related to",
        &["relatedto", "similarto", "synonym"],
    ),
    (
        "isa",
        "is a type of",
        "has a subtype",
        &["isa", "instanceof", "definedas"],
    ),
];

/// Remaining ConceptNet 5.6 relations, unmerged.
const CONCEPTNET_TEMPLATES: &[(&str, &str, &str)] = &[
    ("partof", "is part of", "has part"),
    ("hasa", "has a", "belongs to"),
    ("usedfor", "is used for", "is the purpose of"),
    ("capableof", "is capable of", "can be done by"),
    ("hassubevent", "has subevent", "is a subevent of"),
    ("hasfirstsubevent", "starts with", "is the first subevent of"),
    ("haslastsubevent", "ends with", "is the last subevent of"),
    ("hasprerequisite", "requires", "is required for"),
    ("hasproperty", "has property", "is a property of"),
    ("obstructedby", "is obstructed by", "obstructs"),
    ("desires", "desires to", "is desired by"),
    ("createdby", "is created by", "creates"),
    ("derivedfrom", "is derived from", "is the origin of"),
    ("symbolof", "is a symbol of", "is symbolized by"),
    ("mannerof", "is a manner of", "has the manner"),
    ("hascontext", "is used in the context of", "is the context of"),
    (
        "etymologicallyrelatedto",
        "is etymologically related to",
        "is etymologically related to",
    ),
    (
        "etymologicallyderivedfrom",
        "is etymologically derived from",
        "is the etymological origin of",
    ),
    ("madeof", "is made of", "is used to make"),
    ("receivesaction", "can be", "can be done to"),
    ("formof", "is a form of", "has the form"),
    ("entails", "entails", "is entailed by"),
    ("notdesires", "does not desire", "is not desired by"),
    ("notusedfor", "is not used for", "is not a purpose of"),
    ("notcapableof", "is not capable of", "cannot be done by"),
    ("nothasproperty", "does not have property", "is not a property of"),
    ("externalurl", "has external url", "is the external url of"),
];

const PREPOSITIONS: &[&str] = &[
    "of", "to", "for", "by", "at", "in", "on", "from", "with", "as", "into", "near",
];

/// Lookup key: "/r/Distinct_From/" -> "distinctfrom".
fn alias_key(raw: &str) -> String {
    strip_prefix(raw)
        .chars()
        .filter(|c| !matches!(c, '_' | '-' | ' ' | '/'))
        .flat_map(char::to_lowercase)
        .collect()
}

fn strip_prefix(raw: &str) -> &str {
    let s = raw.trim().trim_end_matches('/');
    s.strip_prefix("/r/").unwrap_or(s)
}

/// Splits a relation name into lowercase words on separators and camel-case
/// boundaries: "RequiredFor" -> ["required", "for"].
pub fn split_relation_name(raw: &str) -> Vec<String> {
    let mut words = Vec::new();
    for part in strip_prefix(raw).split(['_', '-', ' ', '/']) {
        let mut current = String::new();
        let mut prev_lower = false;
        for c in part.chars() {
            if c.is_uppercase() && prev_lower && !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            prev_lower = c.is_lowercase() || c.is_ascii_digit();
            current.extend(c.to_lowercase());
        }
        if !current.is_empty() {
            words.push(current);
        }
    }
    words
}

/// Template for a relation that is not in the table.
fn pass_through(raw: &str) -> RelationType {
    let mut words = split_relation_name(raw);
    if words.is_empty() {
        words.push("related".to_owned());
    }
    let phrase = words.join(" ");
    let ends_in_preposition = PREPOSITIONS.contains(&words[words.len() - 1].as_str());
    let surface_text = if ends_in_preposition {
        format!("is {phrase}")
    } else {
        format!("is {phrase} of")
    };
    RelationType {
        canonical_name: words.join("_"),
        surface_text,
        inverse_surface_text: format!("is the inverse-{phrase} of"),
    }
}

/// Alias map plus templates. The table hash is embedded into graph snapshots
/// so a snapshot can be matched to the templates it was built with.
#[derive(Debug, Clone)]
pub struct RelationTable {
    aliases: BTreeMap<String, String>,
    templates: BTreeMap<String, RelationType>,
}

impl RelationTable {
    pub fn builtin() -> &'static RelationTable {
        static TABLE: OnceLock<RelationTable> = OnceLock::new();
        TABLE.get_or_init(RelationTable::new_builtin)
    }

    fn new_builtin() -> Self {
        let mut aliases = BTreeMap::new();
        let mut templates = BTreeMap::new();
        let mut insert = |canonical: &str, surface: &str, inverse: &str| {
            templates.insert(
                canonical.to_owned(),
                RelationType {
                    canonical_name: canonical.to_owned(),
                    surface_text: surface.to_owned(),
                    inverse_surface_text: inverse.to_owned(),
                },
            );
        };
        for (canonical, surface, inverse, members) in MERGE_GROUPS {
            insert(canonical, surface, inverse);
            for member in *members {
                aliases.insert((*member).to_owned(), (*canonical).to_owned());
            }
        }
        for (canonical, surface, inverse) in CONCEPTNET_TEMPLATES {
            insert(canonical, surface, inverse);
            aliases.insert((*canonical).to_owned(), (*canonical).to_owned());
        }
        RelationTable { aliases, templates }
    }

    /// Builtin merge groups with templates overridden or added from a
    /// `canonical_name<TAB>surface_text<TAB>inverse_surface_text` file.
    /// Added canonical names become aliases of themselves.
    pub fn with_templates<R: BufRead>(reader: R) -> Result<Self> {
        let mut table = Self::builtin().clone();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::Malformed {
                    line: idx + 1,
                    reason: format!("expected 3 tab-separated columns, found {}", cols.len()),
                });
            }
            let (name, surface, inverse) = (cols[0].trim(), cols[1].trim(), cols[2].trim());
            if name.is_empty() || surface.is_empty() || inverse.is_empty() {
                return Err(Error::Malformed {
                    line: idx + 1,
                    reason: "empty template column".to_owned(),
                });
            }
            if [surface, inverse].iter().any(|t| t.contains('{') || t.contains('}')) {
                return Err(Error::Malformed {
                    line: idx + 1,
                    reason: "templates must not contain placeholder markers".to_owned(),
                });
            }
            let key = alias_key(name);
            let canonical = table.aliases.get(&key).cloned().unwrap_or_else(|| {
                let canonical = pass_through(name).canonical_name;
                table.aliases.insert(key, canonical.clone());
                canonical
            });
            table.templates.insert(
                canonical.clone(),
                RelationType {
                    canonical_name: canonical,
                    surface_text: surface.to_owned(),
                    inverse_surface_text: inverse.to_owned(),
                },
            );
        }
        Ok(table)
    }

    /// Maps a raw relation (URI or bare name) to its canonical type. Total.
    pub fn merge(&self, raw: &str) -> RelationType {
        let key = alias_key(raw);
        if let Some(template) = self.aliases.get(&key).and_then(|c| self.templates.get(c)) {
            return template.clone();
        }
        let generated = pass_through(raw);
        // a pass-through canonical name ("required_for") can itself be a
        // template-file entry
        self.templates
            .get(&generated.canonical_name)
            .cloned()
            .unwrap_or(generated)
    }

    pub fn templates(&self) -> impl Iterator<Item = &RelationType> {
        self.templates.values()
    }

    /// Members of each merged group, keyed by canonical name.
    pub fn aliases_of(&self, canonical: &str) -> Vec<&str> {
        self.aliases
            .iter()
            .filter(|(_, c)| c.as_str() == canonical)
            .map(|(a, _)| a.as_str())
            .collect()
    }

    /// SHA-256 over aliases and templates in sorted order.
    pub fn version_hash(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(b"pathkeep-relations-v1\n");
        for (alias, canonical) in &self.aliases {
            hasher.update(format!("a\t{alias}\t{canonical}\n").as_bytes());
        }
        for t in self.templates.values() {
            hasher.update(
                format!(
                    "t\t{}\t{}\t{}\n",
                    t.canonical_name, t.surface_text, t.inverse_surface_text
                )
                .as_bytes(),
            );
        }
        hasher.finalize().into()
    }
}

/// Merge against the built-in table.
pub fn merge_relation(raw: &str) -> RelationType {
    RelationTable::builtin().merge(raw)
}
