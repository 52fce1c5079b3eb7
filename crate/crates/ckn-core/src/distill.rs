//! Status distillation: aggregate run data upward through the logical layer.
//!
//! Instances roll up into one `SweepSummary` per sweep, summaries into one
//! `SweepGroupStatus` per group, and group statuses into one
//! `CampaignStatus`. Each level is computed only from the level below —
//! the campaign status never re-reads instances. Status nodes are replaced
//! in place, so distilling twice with no new data leaves the store
//! canonically identical.
//!
//! Status node ids are derived (`summary:<sweep>`, `status:<group-or-campaign>`)
//! and linked with `SUMMARIZES` / `HAS_STATUS` edges.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::Result;
use crate::graph::{Direction, EdgeRelation, GraphEdge, GraphNode, GraphStore, NodeId, NodeKind};

/// Id of the summary node of a sweep.
pub fn summary_id(sweep: &NodeId) -> NodeId {
    NodeId::from(format!("summary:{sweep}"))
}

/// Id of the status node of a group or campaign.
pub fn status_id(target: &NodeId) -> NodeId {
    NodeId::from(format!("status:{target}"))
}

/// Create or replace a derived node, keeping exactly one per target.
fn upsert(
    store: &mut GraphStore,
    id: NodeId,
    kind: NodeKind,
    properties: BTreeMap<String, String>,
    edge: GraphEdge,
) -> Result<NodeId> {
    if store.contains_node(&id) {
        store.get_node_of_kind(&id, kind)?;
        store.replace_properties(&id, properties)?;
    } else {
        let mut node = GraphNode::new(id.clone(), kind);
        node.properties = properties;
        store.add_node(node)?;
        store.add_edge(edge)?;
    }
    Ok(id)
}

fn runtime_stats(store: &GraphStore, instances: &[NodeId]) -> Result<Option<(f64, f64, f64)>> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut n = 0usize;
    for id in instances {
        let Some(runtime) = store
            .get_node(id)?
            .property("metric.runtime")
            .and_then(|v| v.parse::<f64>().ok())
        else {
            continue;
        };
        min = min.min(runtime);
        max = max.max(runtime);
        sum += runtime;
        n += 1;
    }
    Ok((n > 0).then(|| (min, sum / n as f64, max)))
}

/// Roll all instances of a sweep into its summary node.
///
/// `success` means exit code 0. Runtime statistics cover every instance
/// reporting a `metric.runtime` and are omitted when there are none.
pub fn distill_sweep(store: &mut GraphStore, sweep: &NodeId) -> Result<NodeId> {
    let sweep_node = store.get_node_of_kind(sweep, NodeKind::Sweep)?;

    let mut properties: BTreeMap<String, String> = sweep_node
        .properties
        .iter()
        .filter(|(k, _)| k.starts_with("param."))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();

    let instances = store.neighbors(sweep, EdgeRelation::Instantiates, Direction::Incoming)?;
    let successes = instances
        .iter()
        .filter(|id| {
            store
                .get_node(id)
                .ok()
                .and_then(|n| n.property("exit_code"))
                == Some("0")
        })
        .count();
    properties.insert("sweep".to_string(), sweep.as_str().to_string());
    properties.insert("instance_count".to_string(), instances.len().to_string());
    properties.insert("success_count".to_string(), successes.to_string());
    if let Some((min, mean, max)) = runtime_stats(store, &instances)? {
        properties.insert("runtime_min".to_string(), format!("{min}"));
        properties.insert("runtime_mean".to_string(), format!("{mean}"));
        properties.insert("runtime_max".to_string(), format!("{max}"));
    }
    let id = summary_id(sweep);
    properties.insert("name".to_string(), id.as_str().to_string());
    upsert(
        store,
        id.clone(),
        NodeKind::SweepSummary,
        properties,
        GraphEdge::new(id.clone(), sweep.clone(), EdgeRelation::Summarizes),
    )
}

/// Rebuild every sweep summary of a group, then roll them into the group's
/// status node: sweep counts, per-parameter coverage over executed sweeps,
/// and instance-weighted runtime statistics.
pub fn distill_group(store: &mut GraphStore, group: &NodeId) -> Result<NodeId> {
    store.get_node_of_kind(group, NodeKind::SweepGroup)?;
    let sweeps = store.neighbors(group, EdgeRelation::PartOf, Direction::Incoming)?;
    for sweep in &sweeps {
        distill_sweep(store, sweep)?;
    }

    let mut swept = 0usize;
    let mut instance_total = 0usize;
    let mut success_total = 0usize;
    let mut coverage: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut weighted_sum = 0.0;
    let mut weighted_n = 0usize;
    for sweep in &sweeps {
        let summary = store.get_node(&summary_id(sweep))?;
        let count: usize = summary
            .property("instance_count")
            .and_then(|v| v.parse().ok())
            .unwrap_or(0);
        instance_total += count;
        success_total += summary
            .property("success_count")
            .and_then(|v| v.parse::<usize>().ok())
            .unwrap_or(0);
        if count == 0 {
            continue;
        }
        swept += 1;
        for (key, value) in &summary.properties {
            let Some(param) = key.strip_prefix("param.") else { continue };
            let Ok(value) = value.parse::<f64>() else { continue };
            coverage
                .entry(param.to_string())
                .and_modify(|(lo, hi)| {
                    *lo = lo.min(value);
                    *hi = hi.max(value);
                })
                .or_insert((value, value));
        }
        if let (Some(s_min), Some(s_mean), Some(s_max)) = (
            summary.property("runtime_min").and_then(|v| v.parse::<f64>().ok()),
            summary.property("runtime_mean").and_then(|v| v.parse::<f64>().ok()),
            summary.property("runtime_max").and_then(|v| v.parse::<f64>().ok()),
        ) {
            min = min.min(s_min);
            max = max.max(s_max);
            weighted_sum += s_mean * count as f64;
            weighted_n += count;
        }
    }

    let mut properties = BTreeMap::new();
    properties.insert("group".to_string(), group.as_str().to_string());
    properties.insert("sweep_count".to_string(), sweeps.len().to_string());
    properties.insert("swept_sweep_count".to_string(), swept.to_string());
    properties.insert("instance_count".to_string(), instance_total.to_string());
    properties.insert("success_count".to_string(), success_total.to_string());
    for (param, (lo, hi)) in &coverage {
        properties.insert(format!("coverage.{param}.min"), format!("{lo}"));
        properties.insert(format!("coverage.{param}.max"), format!("{hi}"));
    }
    if weighted_n > 0 {
        properties.insert("runtime_min".to_string(), format!("{min}"));
        properties.insert(
            "runtime_mean".to_string(),
            format!("{}", weighted_sum / weighted_n as f64),
        );
        properties.insert("runtime_max".to_string(), format!("{max}"));
    }
    let id = status_id(group);
    properties.insert("name".to_string(), id.as_str().to_string());
    upsert(
        store,
        id.clone(),
        NodeKind::SweepGroupStatus,
        properties,
        GraphEdge::new(group.clone(), id.clone(), EdgeRelation::HasStatus),
    )
}

/// Rebuild every group status of a campaign, then roll them into the
/// campaign's status node. The completion fraction — executed sweeps over
/// all sweeps — is computed from the group status nodes alone. `now` is
/// stamped as `last_updated` and is excluded from canonical comparisons.
pub fn distill_campaign(store: &mut GraphStore, campaign: &NodeId, now: i64) -> Result<NodeId> {
    store.get_node_of_kind(campaign, NodeKind::Campaign)?;
    let groups = store.neighbors(campaign, EdgeRelation::PartOf, Direction::Incoming)?;
    let mut statuses = Vec::with_capacity(groups.len());
    for group in &groups {
        statuses.push(distill_group(store, group)?);
    }

    let mut total_sweeps = 0usize;
    let mut total_swept = 0usize;
    for status in &statuses {
        let node = store.get_node(status)?;
        total_sweeps += node
            .property("sweep_count")
            .and_then(|v| v.parse::<usize>().ok())
            .unwrap_or(0);
        total_swept += node
            .property("swept_sweep_count")
            .and_then(|v| v.parse::<usize>().ok())
            .unwrap_or(0);
    }
    let fraction = if total_sweeps == 0 {
        0.0
    } else {
        total_swept as f64 / total_sweeps as f64
    };

    let mut properties = BTreeMap::new();
    properties.insert("campaign".to_string(), campaign.as_str().to_string());
    properties.insert(
        "group_statuses".to_string(),
        statuses
            .iter()
            .map(|s| s.as_str().to_string())
            .collect::<Vec<_>>()
            .join(";"),
    );
    properties.insert("sweep_count".to_string(), total_sweeps.to_string());
    properties.insert("swept_sweep_count".to_string(), total_swept.to_string());
    properties.insert("completion_fraction".to_string(), format!("{fraction}"));
    properties.insert("last_updated".to_string(), now.to_string());
    let id = status_id(campaign);
    properties.insert("name".to_string(), id.as_str().to_string());
    upsert(
        store,
        id.clone(),
        NodeKind::CampaignStatus,
        properties,
        GraphEdge::new(campaign.clone(), id.clone(), EdgeRelation::HasStatus),
    )
}

/// Hook to run when a sweep group finishes: refresh the group's status and
/// the owning campaign's. Groups without an owning campaign (possible only
/// in hand-built stores) stop after the group level.
pub fn on_sweep_group_complete(store: &mut GraphStore, group: &NodeId, now: i64) -> Result<()> {
    distill_group(store, group)?;
    let campaigns = store.neighbors(group, EdgeRelation::PartOf, Direction::Outgoing)?;
    if let Some(campaign) = campaigns.first() {
        distill_campaign(store, &campaign.clone(), now)?;
    }
    Ok(())
}

/// Canonical snapshot with the volatile `last_updated` stamp removed; equal
/// stores modulo clock produce equal strings.
pub fn snapshot_without_timestamps(store: &GraphStore) -> String {
    let mut scrubbed = store.clone();
    let status_ids: Vec<NodeId> = scrubbed
        .nodes()
        .filter(|n| n.kind == NodeKind::CampaignStatus)
        .map(|n| n.id.clone())
        .collect();
    for id in status_ids {
        let _ = scrubbed.set_property(&id, "last_updated", "");
    }
    crate::snapshot::encode_snapshot(&scrubbed)
}
