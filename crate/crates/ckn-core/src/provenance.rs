//! Provenance recording and lineage traversal.
//!
//! A [`ProvenanceRecord`] captures one activity (a run, a conversion, an
//! analysis step) together with the entities it consumed and produced and the
//! agent responsible for it. Records are validated as a whole before anything
//! is written, so a rejected record leaves the store untouched.
//!
//! Lineage queries walk the `USED` / `WAS_GENERATED_BY` subgraph:
//! [`ancestors`] goes backward (what did this data come from?),
//! [`descendants`] forward (what was made from it?). `FINE` detail returns
//! activities and entities with the stored edges; `COARSE` collapses each
//! generated→used pair through an activity into a synthesized entity-level
//! `DERIVED_FROM` edge that exists only in query results.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::graph::{
    Direction, EdgeRelation, GraphEdge, GraphNode, GraphStore, NodeId, NodeKind,
};

/// One unit of retrospective provenance: an activity with its consumed and
/// produced entities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvenanceRecord {
    pub activity_id: NodeId,
    pub agent_id: Option<NodeId>,
    pub inputs: Vec<NodeId>,
    pub outputs: Vec<NodeId>,
    pub attributes: BTreeMap<String, String>,
    /// Seconds since the epoch; informational only, never used for traversal.
    pub timestamp: i64,
}

impl ProvenanceRecord {
    pub fn new(activity_id: impl Into<NodeId>, timestamp: i64) -> Self {
        ProvenanceRecord {
            activity_id: activity_id.into(),
            agent_id: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            attributes: BTreeMap::new(),
            timestamp,
        }
    }

    pub fn input(mut self, id: impl Into<NodeId>) -> Self {
        self.inputs.push(id.into());
        self
    }

    pub fn output(mut self, id: impl Into<NodeId>) -> Self {
        self.outputs.push(id.into());
        self
    }

    pub fn agent(mut self, id: impl Into<NodeId>) -> Self {
        self.agent_id = Some(id.into());
        self
    }

    pub fn attribute(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.insert(key.into(), value.into());
        self
    }
}

/// How much of the lineage to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetailLevel {
    /// Activities and entities with the stored provenance edges.
    #[default]
    Fine,
    /// Entities only, joined by synthesized `DERIVED_FROM` edges.
    Coarse,
}

impl fmt::Display for DetailLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetailLevel::Fine => "FINE",
            DetailLevel::Coarse => "COARSE",
        })
    }
}

/// Relation label on a lineage-result edge: either a stored relation or the
/// query-only `DERIVED_FROM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LineageRelation {
    Stored(EdgeRelation),
    DerivedFrom,
}

impl LineageRelation {
    pub fn as_str(&self) -> &'static str {
        match self {
            LineageRelation::Stored(r) => r.as_str(),
            LineageRelation::DerivedFrom => "DERIVED_FROM",
        }
    }
}

impl fmt::Display for LineageRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Directed edge in a lineage result.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LineageEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub relation: LineageRelation,
}

/// Result of a lineage query: a connected subgraph anchored at `root`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineageGraph {
    /// Nodes in id order; always contains the root.
    pub nodes: Vec<GraphNode>,
    /// Edges in (src, dst, relation) order; endpoints are always in `nodes`.
    pub edges: Vec<LineageEdge>,
    pub root: NodeId,
}

impl LineageGraph {
    pub fn contains(&self, id: &NodeId) -> bool {
        self.nodes.binary_search_by(|n| n.id.cmp(id)).is_ok()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.iter().map(|n| &n.id)
    }
}

/// Validate and apply one provenance record.
///
/// All checks run before any write, so on error the store is unchanged.
/// Referenced entities and the agent are created on first use (with a `name`
/// property equal to their id); already-present nodes are kind-checked.
pub fn record(store: &mut GraphStore, rec: &ProvenanceRecord) -> Result<()> {
    let input_set: BTreeSet<&NodeId> = rec.inputs.iter().collect();
    if let Some(overlap) = rec.outputs.iter().find(|o| input_set.contains(o)) {
        return Err(Error::InputOutputOverlap(overlap.clone()));
    }
    if store.contains_node(&rec.activity_id) {
        return Err(Error::DuplicateId(rec.activity_id.clone()));
    }
    rec.activity_id.validate()?;
    for id in rec.inputs.iter().chain(&rec.outputs) {
        id.validate()?;
        if store.contains_node(id) {
            store.get_node_of_kind(id, NodeKind::Entity)?;
        }
    }
    if let Some(agent) = &rec.agent_id {
        agent.validate()?;
        if store.contains_node(agent) {
            store.get_node_of_kind(agent, NodeKind::Agent)?;
        }
    }
    // An output that already (transitively) feeds one of the inputs would
    // close a causal loop through the new activity.
    for input in &rec.inputs {
        if !store.contains_node(input) {
            continue;
        }
        for output in &rec.outputs {
            if store.contains_node(output) && store.provenance_reaches(input, output) {
                return Err(Error::CycleViolation);
            }
        }
    }

    let mut activity = GraphNode::new(rec.activity_id.clone(), NodeKind::Activity);
    activity.properties = rec.attributes.clone();
    activity
        .properties
        .insert("timestamp".to_string(), rec.timestamp.to_string());
    store.add_node(activity)?;
    for id in rec.inputs.iter().chain(&rec.outputs) {
        ensure_node(store, id, NodeKind::Entity)?;
    }
    for input in &rec.inputs {
        store.add_edge(GraphEdge::new(
            rec.activity_id.clone(),
            input.clone(),
            EdgeRelation::Used,
        ))?;
    }
    for output in &rec.outputs {
        store.add_edge(GraphEdge::new(
            output.clone(),
            rec.activity_id.clone(),
            EdgeRelation::WasGeneratedBy,
        ))?;
    }
    if let Some(agent) = &rec.agent_id {
        ensure_node(store, agent, NodeKind::Agent)?;
        store.add_edge(GraphEdge::new(
            rec.activity_id.clone(),
            agent.clone(),
            EdgeRelation::WasAssociatedWith,
        ))?;
    }
    Ok(())
}

fn ensure_node(store: &mut GraphStore, id: &NodeId, kind: NodeKind) -> Result<()> {
    if store.contains_node(id) {
        return Ok(());
    }
    store.add_node(GraphNode::new(id.clone(), kind).with_property("name", id.as_str()))?;
    Ok(())
}

/// Backward lineage: everything the entity was (transitively) derived from.
pub fn ancestors(store: &GraphStore, entity: &NodeId, detail: DetailLevel) -> Result<LineageGraph> {
    lineage(store, entity, detail, Flow::Backward)
}

/// Forward lineage: everything (transitively) derived from the entity.
pub fn descendants(
    store: &GraphStore,
    entity: &NodeId,
    detail: DetailLevel,
) -> Result<LineageGraph> {
    lineage(store, entity, detail, Flow::Forward)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Flow {
    Backward,
    Forward,
}

fn lineage(
    store: &GraphStore,
    root: &NodeId,
    detail: DetailLevel,
    flow: Flow,
) -> Result<LineageGraph> {
    store.get_node_of_kind(root, NodeKind::Entity)?;

    let mut seen: BTreeSet<NodeId> = BTreeSet::new();
    let mut fine_edges: BTreeSet<GraphEdge> = BTreeSet::new();
    let mut queue: VecDeque<NodeId> = VecDeque::new();
    queue.push_back(root.clone());
    while let Some(id) = queue.pop_front() {
        if !seen.insert(id.clone()) {
            continue;
        }
        let kind = store.get_node(&id)?.kind;
        // Walk one provenance hop. Stored directions are
        // activity -USED-> input and output -WAS_GENERATED_BY-> activity,
        // so backward follows outgoing edges and forward incoming ones.
        let hops: &[(EdgeRelation, Direction, bool)] = match (kind, flow) {
            (NodeKind::Entity, Flow::Backward) => {
                &[(EdgeRelation::WasGeneratedBy, Direction::Outgoing, true)]
            }
            (NodeKind::Activity, Flow::Backward) => {
                &[(EdgeRelation::Used, Direction::Outgoing, true)]
            }
            (NodeKind::Entity, Flow::Forward) => {
                &[(EdgeRelation::Used, Direction::Incoming, false)]
            }
            (NodeKind::Activity, Flow::Forward) => {
                &[(EdgeRelation::WasGeneratedBy, Direction::Incoming, false)]
            }
            _ => &[],
        };
        for &(relation, direction, id_is_src) in hops {
            for neighbor in store.neighbors(&id, relation, direction)? {
                let edge = if id_is_src {
                    GraphEdge::new(id.clone(), neighbor.clone(), relation)
                } else {
                    GraphEdge::new(neighbor.clone(), id.clone(), relation)
                };
                fine_edges.insert(edge);
                queue.push_back(neighbor);
            }
        }
    }

    match detail {
        DetailLevel::Fine => {
            let nodes = seen
                .iter()
                .map(|id| store.get_node(id).cloned())
                .collect::<Result<Vec<_>>>()?;
            let edges = fine_edges
                .into_iter()
                .map(|e| LineageEdge {
                    src: e.src,
                    dst: e.dst,
                    relation: LineageRelation::Stored(e.relation),
                })
                .collect();
            Ok(LineageGraph { nodes, edges, root: root.clone() })
        }
        DetailLevel::Coarse => {
            // Collapse entity -> activity -> entity spans into DERIVED_FROM.
            let mut generated: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
            let mut consumed: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
            for edge in &fine_edges {
                match edge.relation {
                    EdgeRelation::WasGeneratedBy => generated
                        .entry(edge.dst.clone())
                        .or_default()
                        .push(edge.src.clone()),
                    EdgeRelation::Used => consumed
                        .entry(edge.src.clone())
                        .or_default()
                        .push(edge.dst.clone()),
                    _ => {}
                }
            }
            let mut derived: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
            for (activity, outputs) in &generated {
                let Some(inputs) = consumed.get(activity) else { continue };
                for output in outputs {
                    for input in inputs {
                        derived.insert((output.clone(), input.clone()));
                    }
                }
            }
            let nodes = seen
                .iter()
                .filter(|id| {
                    store
                        .get_node(id)
                        .map(|n| n.kind == NodeKind::Entity)
                        .unwrap_or(false)
                })
                .map(|id| store.get_node(id).cloned())
                .collect::<Result<Vec<_>>>()?;
            let edges = derived
                .into_iter()
                .map(|(src, dst)| LineageEdge {
                    src,
                    dst,
                    relation: LineageRelation::DerivedFrom,
                })
                .collect();
            Ok(LineageGraph { nodes, edges, root: root.clone() })
        }
    }
}
