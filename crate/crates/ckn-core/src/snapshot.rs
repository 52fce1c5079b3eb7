//! Canonical line-oriented snapshot codec for [`GraphStore`].
//!
//! Layout:
//!
//! ```text
//! CKN-SNAPSHOT v1 <node-count> <edge-count>
//! N <id>\t<kind>\t<properties>
//! ...
//! E <src>\t<dst>\t<relation>
//! ...
//! CKSUM <sha-256 hex of everything above>
//! ```
//!
//! Node lines come first, sorted by id; edge lines follow, sorted by
//! (src, dst, relation). Properties are `key=value` pairs joined by `&`,
//! with keys and values percent-encoded (RFC 3986 unreserved characters kept
//! verbatim, everything else as uppercase `%XX`). Because the encoding is
//! canonical, equal stores produce byte-identical snapshots and the trailing
//! checksum doubles as a content hash.
//!
//! Decoding replays the lines through the ordinary store API, so a snapshot
//! can never smuggle in states the API would reject.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;
use core::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{EdgeRelation, GraphEdge, GraphNode, GraphStore, NodeId, NodeKind};

const HEADER_PREFIX: &str = "CKN-SNAPSHOT v1";

/// Lowercase hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

fn is_unreserved(byte: u8) -> bool {
    byte.is_ascii_alphanumeric() || matches!(byte, b'-' | b'.' | b'_' | b'~')
}

fn percent_encode(raw: &str, out: &mut String) {
    for &byte in raw.as_bytes() {
        if is_unreserved(byte) {
            out.push(byte as char);
        } else {
            let _ = write!(out, "%{byte:02X}");
        }
    }
}

fn hex_val(byte: u8) -> Option<u8> {
    match byte {
        b'0'..=b'9' => Some(byte - b'0'),
        b'a'..=b'f' => Some(byte - b'a' + 10),
        b'A'..=b'F' => Some(byte - b'A' + 10),
        _ => None,
    }
}

fn percent_decode(encoded: &str) -> Result<String> {
    let bytes = encoded.as_bytes();
    let mut out: Vec<u8> = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'%' => {
                let (hi, lo) = match (bytes.get(i + 1), bytes.get(i + 2)) {
                    (Some(&hi), Some(&lo)) => (hi, lo),
                    _ => {
                        return Err(Error::CorruptSnapshot(format!(
                            "truncated percent escape in {encoded:?}"
                        )));
                    }
                };
                let (hi, lo) = match (hex_val(hi), hex_val(lo)) {
                    (Some(hi), Some(lo)) => (hi, lo),
                    _ => {
                        return Err(Error::CorruptSnapshot(format!(
                            "invalid percent escape in {encoded:?}"
                        )));
                    }
                };
                out.push(hi << 4 | lo);
                i += 3;
            }
            byte if byte.is_ascii_control() => {
                return Err(Error::CorruptSnapshot(format!(
                    "raw control character in {encoded:?}"
                )));
            }
            byte => {
                out.push(byte);
                i += 1;
            }
        }
    }
    String::from_utf8(out)
        .map_err(|_| Error::CorruptSnapshot(format!("escape sequence is not UTF-8 in {encoded:?}")))
}

fn encode_properties(properties: &BTreeMap<String, String>, out: &mut String) {
    let mut first = true;
    for (key, value) in properties {
        if !first {
            out.push('&');
        }
        first = false;
        percent_encode(key, out);
        out.push('=');
        percent_encode(value, out);
    }
}

fn decode_properties(field: &str) -> Result<BTreeMap<String, String>> {
    let mut properties = BTreeMap::new();
    if field.is_empty() {
        return Ok(properties);
    }
    for pair in field.split('&') {
        let (key, value) = pair.split_once('=').ok_or_else(|| {
            Error::CorruptSnapshot(format!("property pair without `=`: {pair:?}"))
        })?;
        properties.insert(percent_decode(key)?, percent_decode(value)?);
    }
    Ok(properties)
}

/// Serialize a store into the canonical snapshot text.
pub fn encode_snapshot(store: &GraphStore) -> String {
    let mut body = format!(
        "{HEADER_PREFIX} {} {}\n",
        store.node_count(),
        store.edge_count()
    );
    for node in store.nodes() {
        let _ = write!(body, "N {}\t{}\t", node.id, node.kind);
        encode_properties(&node.properties, &mut body);
        body.push('\n');
    }
    for edge in store.edges() {
        let _ = writeln!(body, "E {}\t{}\t{}", edge.src, edge.dst, edge.relation);
    }
    let checksum = sha256_hex(body.as_bytes());
    let _ = writeln!(body, "CKSUM {checksum}");
    body
}

/// Parse and verify a snapshot, replaying it through the store API.
pub fn decode_snapshot(text: &str) -> Result<GraphStore> {
    let cksum_at = text.rfind("CKSUM ").ok_or_else(|| {
        Error::CorruptSnapshot("missing CKSUM trailer".to_string())
    })?;
    if cksum_at > 0 && text.as_bytes()[cksum_at - 1] != b'\n' {
        return Err(Error::CorruptSnapshot("CKSUM not on its own line".to_string()));
    }
    let body = &text[..cksum_at];
    let stated = text[cksum_at + "CKSUM ".len()..].trim_end_matches('\n');
    if stated.len() != 64 || stated.bytes().any(|b| hex_val(b).is_none()) {
        return Err(Error::CorruptSnapshot(format!("malformed checksum {stated:?}")));
    }
    let actual = sha256_hex(body.as_bytes());
    if !stated.eq_ignore_ascii_case(&actual) {
        return Err(Error::CorruptSnapshot(format!(
            "checksum mismatch: stated {stated}, computed {actual}"
        )));
    }

    let mut lines = body.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::CorruptSnapshot("empty snapshot".to_string()))?;
    let counts = header.strip_prefix(HEADER_PREFIX).ok_or_else(|| {
        Error::CorruptSnapshot(format!("unrecognized header {header:?}"))
    })?;
    let mut counts = counts.split_ascii_whitespace();
    let node_count: usize = counts
        .next()
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| Error::CorruptSnapshot("header missing node count".to_string()))?;
    let edge_count: usize = counts
        .next()
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| Error::CorruptSnapshot("header missing edge count".to_string()))?;
    if counts.next().is_some() {
        return Err(Error::CorruptSnapshot("trailing tokens in header".to_string()));
    }

    let mut store = GraphStore::new();
    let mut nodes_seen = 0usize;
    let mut edges_seen = 0usize;
    for line in lines {
        if let Some(rest) = line.strip_prefix("N ") {
            let mut fields = rest.split('\t');
            let (id, kind, props) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
                (Some(id), Some(kind), Some(props), None) => (id, kind, props),
                _ => {
                    return Err(Error::CorruptSnapshot(format!(
                        "node line needs 3 tab-separated fields: {line:?}"
                    )));
                }
            };
            let kind = NodeKind::from_str(kind)
                .map_err(|e| Error::CorruptSnapshot(e.to_string()))?;
            let node = GraphNode {
                id: NodeId::from(id),
                kind,
                properties: decode_properties(props)?,
            };
            store
                .add_node(node)
                .map_err(|e| Error::CorruptSnapshot(format!("replay rejected node: {e}")))?;
            nodes_seen += 1;
        } else if let Some(rest) = line.strip_prefix("E ") {
            let mut fields = rest.split('\t');
            let (src, dst, relation) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
                (Some(src), Some(dst), Some(relation), None) => (src, dst, relation),
                _ => {
                    return Err(Error::CorruptSnapshot(format!(
                        "edge line needs 3 tab-separated fields: {line:?}"
                    )));
                }
            };
            let relation = EdgeRelation::from_str(relation)
                .map_err(|e| Error::CorruptSnapshot(e.to_string()))?;
            store
                .add_edge(GraphEdge::new(src, dst, relation))
                .map_err(|e| Error::CorruptSnapshot(format!("replay rejected edge: {e}")))?;
            edges_seen += 1;
        } else {
            return Err(Error::CorruptSnapshot(format!("unrecognized line {line:?}")));
        }
    }
    if nodes_seen != node_count || edges_seen != edge_count {
        return Err(Error::CorruptSnapshot(format!(
            "header counts {node_count}/{edge_count} disagree with body {nodes_seen}/{edges_seen}"
        )));
    }
    Ok(store)
}
