//! Embedded property graph holding the two-layer campaign knowledge network.
//!
//! The logical layer (Campaign / SweepGroup / Sweep) describes what was
//! planned; the physical layer (Instance, Activity / Entity / Agent) records
//! what actually ran. Distilled status nodes (SweepSummary, SweepGroupStatus,
//! CampaignStatus) sit on top of both.
//!
//! The store is append/update-only: nodes and edges are never removed, only
//! properties may be rewritten. All iteration orders are deterministic
//! (`BTreeMap`/`BTreeSet` throughout), so two stores with equal content
//! serialize identically regardless of insertion order.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Node identifier, unique within one store and immutable after creation.
///
/// Ids must be non-empty and free of ASCII control characters so that the
/// line-oriented snapshot format stays unambiguous.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(value: impl Into<String>) -> Self {
        NodeId(value.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::InvalidNode("empty node id".to_string()));
        }
        if self.0.chars().any(|c| c.is_ascii_control()) {
            return Err(Error::InvalidNode(alloc::format!(
                "node id contains control characters: {:?}",
                self.0
            )));
        }
        Ok(())
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(value: &str) -> Self {
        NodeId(value.to_string())
    }
}

impl From<String> for NodeId {
    fn from(value: String) -> Self {
        NodeId(value)
    }
}

/// Closed set of node kinds, spanning the logical layer, the physical layer,
/// and the distilled status layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Campaign,
    SweepGroup,
    Sweep,
    Instance,
    WorkflowNode,
    Activity,
    Entity,
    Agent,
    SweepSummary,
    SweepGroupStatus,
    CampaignStatus,
}

impl NodeKind {
    pub const ALL: [NodeKind; 11] = [
        NodeKind::Campaign,
        NodeKind::SweepGroup,
        NodeKind::Sweep,
        NodeKind::Instance,
        NodeKind::WorkflowNode,
        NodeKind::Activity,
        NodeKind::Entity,
        NodeKind::Agent,
        NodeKind::SweepSummary,
        NodeKind::SweepGroupStatus,
        NodeKind::CampaignStatus,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            NodeKind::Campaign => "Campaign",
            NodeKind::SweepGroup => "SweepGroup",
            NodeKind::Sweep => "Sweep",
            NodeKind::Instance => "Instance",
            NodeKind::WorkflowNode => "WorkflowNode",
            NodeKind::Activity => "Activity",
            NodeKind::Entity => "Entity",
            NodeKind::Agent => "Agent",
            NodeKind::SweepSummary => "SweepSummary",
            NodeKind::SweepGroupStatus => "SweepGroupStatus",
            NodeKind::CampaignStatus => "CampaignStatus",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NodeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidNode(alloc::format!("unknown node kind: {s:?}")))
    }
}

/// A typed property-graph node. Property values are plain strings; numeric
/// interpretation happens at signature-extraction time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub properties: BTreeMap<String, String>,
}

impl GraphNode {
    pub fn new(id: impl Into<NodeId>, kind: NodeKind) -> Self {
        GraphNode { id: id.into(), kind, properties: BTreeMap::new() }
    }

    /// Builder-style property insertion.
    pub fn with_property(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.properties.insert(key.into(), value.into());
        self
    }

    pub fn property(&self, key: &str) -> Option<&str> {
        self.properties.get(key).map(String::as_str)
    }

    fn validate(&self) -> Result<()> {
        self.id.validate()?;
        validate_properties(self.kind, &self.properties)
    }
}

fn validate_properties(kind: NodeKind, properties: &BTreeMap<String, String>) -> Result<()> {
    if properties.keys().any(|k| k.is_empty()) {
        return Err(Error::InvalidNode("empty property key".to_string()));
    }
    if kind == NodeKind::Instance {
        match properties.get("sweep") {
            Some(s) if !s.is_empty() => {}
            _ => {
                return Err(Error::InvalidNode(
                    "instance node must carry a non-empty `sweep` property".to_string(),
                ));
            }
        }
    }
    Ok(())
}

/// Closed set of stored edge relations. Lineage queries may additionally
/// synthesize `DERIVED_FROM` edges in their results, but those never persist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeRelation {
    PartOf,
    Instantiates,
    HasNode,
    Used,
    WasGeneratedBy,
    WasAssociatedWith,
    Summarizes,
    HasStatus,
}

impl EdgeRelation {
    pub const ALL: [EdgeRelation; 8] = [
        EdgeRelation::PartOf,
        EdgeRelation::Instantiates,
        EdgeRelation::HasNode,
        EdgeRelation::Used,
        EdgeRelation::WasGeneratedBy,
        EdgeRelation::WasAssociatedWith,
        EdgeRelation::Summarizes,
        EdgeRelation::HasStatus,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeRelation::PartOf => "PART_OF",
            EdgeRelation::Instantiates => "INSTANTIATES",
            EdgeRelation::HasNode => "HAS_NODE",
            EdgeRelation::Used => "USED",
            EdgeRelation::WasGeneratedBy => "WAS_GENERATED_BY",
            EdgeRelation::WasAssociatedWith => "WAS_ASSOCIATED_WITH",
            EdgeRelation::Summarizes => "SUMMARIZES",
            EdgeRelation::HasStatus => "HAS_STATUS",
        }
    }

    /// Kind pairs (src, dst) this relation is allowed to connect.
    fn allowed_pairs(&self) -> &'static [(NodeKind, NodeKind)] {
        match self {
            EdgeRelation::PartOf => &[
                (NodeKind::Sweep, NodeKind::SweepGroup),
                (NodeKind::SweepGroup, NodeKind::Campaign),
            ],
            EdgeRelation::Instantiates => &[(NodeKind::Instance, NodeKind::Sweep)],
            EdgeRelation::HasNode => &[(NodeKind::WorkflowNode, NodeKind::Instance)],
            EdgeRelation::Used => &[(NodeKind::Activity, NodeKind::Entity)],
            EdgeRelation::WasGeneratedBy => &[(NodeKind::Entity, NodeKind::Activity)],
            EdgeRelation::WasAssociatedWith => &[(NodeKind::Activity, NodeKind::Agent)],
            EdgeRelation::Summarizes => &[(NodeKind::SweepSummary, NodeKind::Sweep)],
            EdgeRelation::HasStatus => &[
                (NodeKind::SweepGroup, NodeKind::SweepGroupStatus),
                (NodeKind::Campaign, NodeKind::CampaignStatus),
            ],
        }
    }

    /// Relations whose subgraph must stay acyclic (causal provenance flow).
    pub fn is_provenance(&self) -> bool {
        matches!(self, EdgeRelation::Used | EdgeRelation::WasGeneratedBy)
    }
}

impl fmt::Display for EdgeRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeRelation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EdgeRelation::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::InvalidNode(alloc::format!("unknown edge relation: {s:?}")))
    }
}

/// A directed, typed edge. Edges are a set: re-adding an existing edge is a
/// no-op.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GraphEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub relation: EdgeRelation,
}

impl GraphEdge {
    pub fn new(src: impl Into<NodeId>, dst: impl Into<NodeId>, relation: EdgeRelation) -> Self {
        GraphEdge { src: src.into(), dst: dst.into(), relation }
    }
}

/// Traversal direction for [`GraphStore::neighbors`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Outgoing,
    Incoming,
}

/// The in-memory campaign knowledge graph.
///
/// Mutations are `&mut self`; any number of shared references may query
/// concurrently. Callers that need the single-writer / multi-reader contract
/// across threads wrap the store in a reader-writer lock.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraphStore {
    nodes: BTreeMap<NodeId, GraphNode>,
    edges: BTreeSet<GraphEdge>,
    outgoing: BTreeMap<NodeId, BTreeSet<(EdgeRelation, NodeId)>>,
    incoming: BTreeMap<NodeId, BTreeSet<(EdgeRelation, NodeId)>>,
    version: u64,
}

impl GraphStore {
    pub fn new() -> Self {
        GraphStore::default()
    }

    /// Monotone counter bumped by every successful mutation.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_node(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id)
    }

    /// Nodes in id order.
    pub fn nodes(&self) -> impl Iterator<Item = &GraphNode> {
        self.nodes.values()
    }

    /// Edges in (src, dst, relation) order.
    pub fn edges(&self) -> impl Iterator<Item = &GraphEdge> {
        self.edges.iter()
    }

    /// Insert a new node. Fails on duplicate ids and invariant violations.
    pub fn add_node(&mut self, node: GraphNode) -> Result<NodeId> {
        node.validate()?;
        if self.nodes.contains_key(&node.id) {
            return Err(Error::DuplicateId(node.id));
        }
        let id = node.id.clone();
        self.nodes.insert(id.clone(), node);
        self.version += 1;
        Ok(id)
    }

    pub fn get_node(&self, id: &NodeId) -> Result<&GraphNode> {
        self.nodes.get(id).ok_or_else(|| Error::NotFound(id.clone()))
    }

    /// Fetch a node and check its kind in one step.
    pub fn get_node_of_kind(&self, id: &NodeId, kind: NodeKind) -> Result<&GraphNode> {
        let node = self.get_node(id)?;
        if node.kind != kind {
            return Err(Error::WrongKind { id: id.clone(), expected: kind, actual: node.kind });
        }
        Ok(node)
    }

    /// Set (or overwrite) one property. Last write wins.
    pub fn set_property(&mut self, id: &NodeId, key: &str, value: &str) -> Result<()> {
        let node = self.nodes.get(id).ok_or_else(|| Error::NotFound(id.clone()))?;
        let mut updated = node.properties.clone();
        updated.insert(key.to_string(), value.to_string());
        validate_properties(node.kind, &updated)?;
        self.nodes.get_mut(id).expect("checked above").properties = updated;
        self.version += 1;
        Ok(())
    }

    /// Replace a node's whole property map. Used by distillation, which
    /// rebuilds status nodes in place.
    pub fn replace_properties(
        &mut self,
        id: &NodeId,
        properties: BTreeMap<String, String>,
    ) -> Result<()> {
        let node = self.nodes.get(id).ok_or_else(|| Error::NotFound(id.clone()))?;
        validate_properties(node.kind, &properties)?;
        self.nodes.get_mut(id).expect("checked above").properties = properties;
        self.version += 1;
        Ok(())
    }

    /// Insert an edge after checking endpoints, kind constraints, and
    /// provenance acyclicity. Re-adding an existing edge is a no-op.
    pub fn add_edge(&mut self, edge: GraphEdge) -> Result<()> {
        let src = self.nodes.get(&edge.src).ok_or_else(|| Error::MissingEndpoint(edge.src.clone()))?;
        let dst = self.nodes.get(&edge.dst).ok_or_else(|| Error::MissingEndpoint(edge.dst.clone()))?;
        let pair = (src.kind, dst.kind);
        if !edge.relation.allowed_pairs().contains(&pair) {
            return Err(Error::KindViolation {
                relation: edge.relation,
                src: src.kind,
                dst: dst.kind,
            });
        }
        if self.edges.contains(&edge) {
            return Ok(());
        }
        if edge.relation.is_provenance() && self.provenance_reaches(&edge.dst, &edge.src) {
            return Err(Error::CycleViolation);
        }
        self.outgoing
            .entry(edge.src.clone())
            .or_default()
            .insert((edge.relation, edge.dst.clone()));
        self.incoming
            .entry(edge.dst.clone())
            .or_default()
            .insert((edge.relation, edge.src.clone()));
        self.edges.insert(edge);
        self.version += 1;
        Ok(())
    }

    /// Neighbor ids over one relation, sorted ascending.
    pub fn neighbors(
        &self,
        id: &NodeId,
        relation: EdgeRelation,
        direction: Direction,
    ) -> Result<Vec<NodeId>> {
        if !self.nodes.contains_key(id) {
            return Err(Error::NotFound(id.clone()));
        }
        let index = match direction {
            Direction::Outgoing => &self.outgoing,
            Direction::Incoming => &self.incoming,
        };
        Ok(index
            .get(id)
            .map(|set| {
                set.iter()
                    .filter(|(r, _)| *r == relation)
                    .map(|(_, n)| n.clone())
                    .collect()
            })
            .unwrap_or_default())
    }

    /// True if `to` is reachable from `from` along {USED, WAS_GENERATED_BY}
    /// edges. Used for cycle prevention at write time.
    pub fn provenance_reaches(&self, from: &NodeId, to: &NodeId) -> bool {
        if from == to {
            return true;
        }
        let mut seen: BTreeSet<&NodeId> = BTreeSet::new();
        let mut stack: Vec<&NodeId> = alloc::vec![from];
        while let Some(current) = stack.pop() {
            if !seen.insert(current) {
                continue;
            }
            if let Some(out) = self.outgoing.get(current) {
                for (relation, next) in out {
                    if !relation.is_provenance() {
                        continue;
                    }
                    if next == to {
                        return true;
                    }
                    stack.push(next);
                }
            }
        }
        false
    }
}
