//! Discovery queries over the knowledge network: attribute/name search,
//! combined lineage, and exact-run lookup.
//!
//! These are the read-side entry points a CLI or service exposes. All of them
//! are pure reads with deterministic, id-sorted results.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{Direction, EdgeRelation, GraphStore, NodeId, NodeKind};
use crate::provenance::{self, DetailLevel, LineageEdge, LineageGraph};

/// Search criteria: an optional name substring and a conjunction of exact
/// attribute pairs. At least one criterion must be present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeQuery {
    name_filter: Option<String>,
    attributes: Vec<(String, String)>,
}

impl AttributeQuery {
    pub fn new(
        name_filter: Option<String>,
        attributes: Vec<(String, String)>,
    ) -> Result<Self> {
        if name_filter.is_none() && attributes.is_empty() {
            return Err(Error::EmptyQuery);
        }
        Ok(AttributeQuery { name_filter, attributes })
    }

    pub fn by_name(name: impl Into<String>) -> Self {
        AttributeQuery { name_filter: Some(name.into()), attributes: Vec::new() }
    }

    pub fn name_filter(&self) -> Option<&str> {
        self.name_filter.as_deref()
    }

    pub fn attributes(&self) -> &[(String, String)] {
        &self.attributes
    }
}

/// Ids matching a query, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryResult {
    pub matches: Vec<NodeId>,
    pub total: usize,
}

/// Find every node of an admitted kind whose `name` property contains the
/// name filter (case-sensitive) and whose properties include all attribute
/// pairs with exact string equality.
///
/// Nodes without a `name` property never match a name filter. An empty kind
/// set admits nothing.
pub fn find(store: &GraphStore, query: &AttributeQuery, kinds: &BTreeSet<NodeKind>) -> QueryResult {
    let mut matches = Vec::new();
    for node in store.nodes() {
        if !kinds.contains(&node.kind) {
            continue;
        }
        if let Some(filter) = query.name_filter() {
            match node.property("name") {
                Some(name) if name.contains(filter) => {}
                _ => continue,
            }
        }
        if query
            .attributes()
            .iter()
            .all(|(key, value)| node.property(key) == Some(value.as_str()))
        {
            matches.push(node.id.clone());
        }
    }
    QueryResult { total: matches.len(), matches }
}

/// Full lineage of an entity: the union of its ancestors and descendants,
/// rooted at the entity itself.
pub fn lineage(store: &GraphStore, entity: &NodeId, detail: DetailLevel) -> Result<LineageGraph> {
    let backward = provenance::ancestors(store, entity, detail)?;
    let forward = provenance::descendants(store, entity, detail)?;
    let mut nodes: BTreeMap<NodeId, _> = BTreeMap::new();
    for node in backward.nodes.into_iter().chain(forward.nodes) {
        nodes.insert(node.id.clone(), node);
    }
    let edges: BTreeSet<LineageEdge> =
        backward.edges.into_iter().chain(forward.edges).collect();
    Ok(LineageGraph {
        nodes: nodes.into_values().collect(),
        edges: edges.into_iter().collect(),
        root: entity.clone(),
    })
}

/// Backward lineage only. Named alias of [`provenance::ancestors`].
pub fn sources(store: &GraphStore, entity: &NodeId, detail: DetailLevel) -> Result<LineageGraph> {
    provenance::ancestors(store, entity, detail)
}

/// Forward lineage only. Named alias of [`provenance::descendants`].
pub fn products(store: &GraphStore, entity: &NodeId, detail: DetailLevel) -> Result<LineageGraph> {
    provenance::descendants(store, entity, detail)
}

/// All instances belonging to a campaign, walked through its sweep groups
/// and sweeps. Sorted by id.
pub fn campaign_instances(store: &GraphStore, campaign: &NodeId) -> Result<Vec<NodeId>> {
    store.get_node_of_kind(campaign, NodeKind::Campaign)?;
    let mut instances = BTreeSet::new();
    for group in store.neighbors(campaign, EdgeRelation::PartOf, Direction::Incoming)? {
        for sweep in store.neighbors(&group, EdgeRelation::PartOf, Direction::Incoming)? {
            for instance in
                store.neighbors(&sweep, EdgeRelation::Instantiates, Direction::Incoming)?
            {
                instances.insert(instance);
            }
        }
    }
    Ok(instances.into_iter().collect())
}

/// Instances of a campaign whose parameter map (the `param.`-prefixed
/// properties, prefix stripped) equals `sweep_params` exactly. This answers
/// "has this exact experiment already been run?".
pub fn find_exact_run(
    store: &GraphStore,
    sweep_params: &BTreeMap<String, String>,
    campaign: &NodeId,
) -> Result<Vec<NodeId>> {
    let mut hits = Vec::new();
    for id in campaign_instances(store, campaign)? {
        let node = store.get_node(&id)?;
        let params: BTreeMap<&str, &str> = node
            .properties
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("param.").map(|k| (k, v.as_str())))
            .collect();
        let wanted: BTreeMap<&str, &str> = sweep_params
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect();
        if params == wanted {
            hits.push(id);
        }
    }
    Ok(hits)
}
