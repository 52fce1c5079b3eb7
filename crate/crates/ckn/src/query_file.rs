//! Query request documents: small XML files whose root element selects the
//! operation, as produced by provenance-query tooling.
//!
//! ```xml
//! <q:findActivityRequest xmlns:q="urn:example:query">
//!   <q:name>grayscott</q:name>
//!   <q:attributeList>
//!     <q:attribute><q:property>U</q:property><q:value>10</q:value></q:attribute>
//!   </q:attributeList>
//! </q:findActivityRequest>
//! ```
//!
//! Recognized roots: `findActivityRequest` (attribute search),
//! `getEntityGraphRequest` (full lineage), `getEntityBackwardGraphRequest`
//! (sources), `getEntityForwardGraphRequest` (products). Namespace prefixes
//! are ignored everywhere; `entityType` is accepted and ignored;
//! `informationDetailLevel` defaults to FINE. Unknown child elements are
//! skipped so documents with extra fields still parse.

use std::fs;
use std::path::Path;

use ckn_core::{DetailLevel, NodeId};
use quick_xml::events::Event;
use quick_xml::Reader;

use crate::error::{Error, Result};

/// A parsed request, ready for dispatch against a store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryRequest {
    Find { name: Option<String>, attributes: Vec<(String, String)> },
    Lineage { entity: NodeId, detail: DetailLevel },
    Sources { entity: NodeId, detail: DetailLevel },
    Products { entity: NodeId, detail: DetailLevel },
}

pub fn read_query_file(path: &Path) -> Result<QueryRequest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_query_request(&text, path)
}

pub fn parse_query_request(text: &str, path: &Path) -> Result<QueryRequest> {
    let bad = |message: String| Error::format(path, message);

    let mut reader = Reader::from_str(text);

    let mut root: Option<String> = None;
    // (local element name, accumulated text) per open element.
    let mut stack: Vec<(String, String)> = Vec::new();
    let mut name_field = None;
    let mut entity = None;
    let mut detail = None;
    let mut attributes = Vec::new();
    let mut property = None;
    let mut value = None;

    let mut dispatch = |element: &str, text: String| match element {
        "name" => name_field = Some(text),
        "entityURI" => entity = Some(text),
        "informationDetailLevel" => detail = Some(text),
        "property" => property = Some(text),
        "value" => value = Some(text),
        "attribute" => match (property.take(), value.take()) {
            (Some(p), Some(v)) => attributes.push((p, v)),
            _ => attributes.push((String::new(), String::new())), // flagged below
        },
        _ => {} // entityType and anything else we don't model
    };

    loop {
        match reader.read_event().map_err(|e| bad(format!("invalid XML: {e}")))? {
            Event::Start(start) => {
                let local = String::from_utf8_lossy(start.local_name().as_ref()).into_owned();
                if root.is_none() {
                    root = Some(local.clone());
                }
                stack.push((local, String::new()));
            }
            Event::Empty(empty) => {
                let local = String::from_utf8_lossy(empty.local_name().as_ref()).into_owned();
                if root.is_none() {
                    root = Some(local.clone());
                }
                dispatch(&local, String::new());
            }
            Event::End(_) => {
                if let Some((element, text)) = stack.pop() {
                    dispatch(&element, text.trim().to_string());
                }
            }
            Event::Text(text) => {
                let content = text.decode().map_err(|e| bad(format!("bad text: {e}")))?;
                if let Some((_, buffer)) = stack.last_mut() {
                    buffer.push_str(&content);
                }
            }
            Event::GeneralRef(reference) => {
                let resolved = match reference
                    .resolve_char_ref()
                    .map_err(|e| bad(format!("bad character reference: {e}")))?
                {
                    Some(ch) => ch.to_string(),
                    None => {
                        let name = reference.decode().map_err(|e| bad(format!("bad text: {e}")))?;
                        quick_xml::escape::resolve_predefined_entity(&name)
                            .ok_or_else(|| bad(format!("unknown entity &{name};")))?
                            .to_string()
                    }
                };
                if let Some((_, buffer)) = stack.last_mut() {
                    buffer.push_str(&resolved);
                }
            }
            Event::Eof => break,
            _ => {} // declarations, comments, CDATA, PIs
        }
    }

    if attributes.iter().any(|(p, v)| p.is_empty() && v.is_empty()) {
        return Err(bad("attribute needs both <property> and <value>".to_string()));
    }

    let detail = match detail {
        None => DetailLevel::Fine,
        Some(d) if d.eq_ignore_ascii_case("FINE") => DetailLevel::Fine,
        Some(d) if d.eq_ignore_ascii_case("COARSE") => DetailLevel::Coarse,
        Some(d) => return Err(bad(format!("unknown detail level {d:?}"))),
    };
    let entity_for = |operation: &str| {
        entity
            .clone()
            .map(NodeId::new)
            .ok_or_else(|| bad(format!("{operation} needs an <entityURI>")))
    };

    match root.as_deref() {
        Some("findActivityRequest") => Ok(QueryRequest::Find { name: name_field, attributes }),
        Some("getEntityGraphRequest") => {
            Ok(QueryRequest::Lineage { entity: entity_for("getEntityGraphRequest")?, detail })
        }
        Some("getEntityBackwardGraphRequest") => Ok(QueryRequest::Sources {
            entity: entity_for("getEntityBackwardGraphRequest")?,
            detail,
        }),
        Some("getEntityForwardGraphRequest") => Ok(QueryRequest::Products {
            entity: entity_for("getEntityForwardGraphRequest")?,
            detail,
        }),
        Some(other) => Err(bad(format!("unsupported request element {other:?}"))),
        None => Err(bad("empty document".to_string())),
    }
}
