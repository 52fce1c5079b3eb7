//! Campaign ingestion: planned structure from campaign specifications and
//! executed runs from instance logs.
//!
//! A campaign specification is prospective provenance — it declares sweep
//! groups and, per group, an ordered list of parameters whose value-list
//! cross-product defines the sweeps. A run log is retrospective provenance —
//! it reports one executed instance of a sweep, including consumed and
//! produced files. Both ingest operations are atomic: on any error the store
//! is left exactly as it was.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{Direction, EdgeRelation, GraphEdge, GraphNode, GraphStore, NodeId, NodeKind};
use crate::provenance::{self, ProvenanceRecord};

/// Planned campaign: groups of sweeps owned by one responsible agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CampaignSpec {
    pub name: String,
    pub owner: String,
    pub sweep_groups: Vec<SweepGroupSpec>,
}

/// One sweep group: a parameter study set up by a single researcher. The
/// parameter order is meaningful — it fixes sweep ids and enumeration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepGroupSpec {
    pub name: String,
    pub researcher: String,
    /// Ordered parameter name → candidate values.
    pub parameters: Vec<(String, Vec<String>)>,
}

/// One executed run of a sweep, as reported by the job's log.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub instance_id: String,
    pub sweep_id: String,
    /// Seconds since the epoch.
    pub start: i64,
    pub end: i64,
    pub exit_code: i64,
    /// Parameter values the run actually used (bare names, no prefix).
    pub params: BTreeMap<String, String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
}

impl RunLog {
    pub fn new(instance_id: impl Into<String>, sweep_id: impl Into<String>) -> Self {
        RunLog {
            instance_id: instance_id.into(),
            sweep_id: sweep_id.into(),
            start: 0,
            end: 0,
            exit_code: 0,
            params: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            metrics: BTreeMap::new(),
        }
    }
}

/// Enumerate a group's sweeps as ordered (name, value) combinations.
///
/// The last parameter varies fastest, like the innermost loop of a nest
/// written in spec order. This order is what run-generation harnesses use to
/// number instances, so it is part of the public contract.
pub fn sweep_combos(group: &SweepGroupSpec) -> Result<Vec<Vec<(String, String)>>> {
    for (name, values) in &group.parameters {
        if name.is_empty() {
            return Err(Error::MalformedSpec(format!(
                "group {:?} has an unnamed parameter",
                group.name
            )));
        }
        if values.is_empty() {
            return Err(Error::EmptyParameterList {
                group: group.name.clone(),
                parameter: name.clone(),
            });
        }
    }
    let mut combos = Vec::new();
    let mut indexes = alloc::vec![0usize; group.parameters.len()];
    loop {
        combos.push(
            group
                .parameters
                .iter()
                .zip(&indexes)
                .map(|((name, values), &i)| (name.clone(), values[i].clone()))
                .collect(),
        );
        // Odometer increment, last position fastest.
        let mut pos = indexes.len();
        loop {
            if pos == 0 {
                return Ok(combos);
            }
            pos -= 1;
            indexes[pos] += 1;
            if indexes[pos] < group.parameters[pos].1.len() {
                break;
            }
            indexes[pos] = 0;
        }
    }
}

/// Deterministic sweep id: `<campaign>/<group>/<p1=v1;p2=v2;…>` in spec order.
pub fn sweep_id(campaign: &str, group: &str, combo: &[(String, String)]) -> String {
    let mut id = format!("{campaign}/{group}/");
    for (i, (name, value)) in combo.iter().enumerate() {
        if i > 0 {
            id.push(';');
        }
        id.push_str(name);
        id.push('=');
        id.push_str(value);
    }
    id
}

fn agent_node_id(name: &str) -> NodeId {
    NodeId::from(format!("agent/{name}"))
}

fn ensure_agent(store: &mut GraphStore, name: &str) -> Result<NodeId> {
    let id = agent_node_id(name);
    if store.contains_node(&id) {
        store.get_node_of_kind(&id, NodeKind::Agent)?;
    } else {
        store.add_node(GraphNode::new(id.clone(), NodeKind::Agent).with_property("name", name))?;
    }
    Ok(id)
}

/// Ingest a campaign specification: one Campaign node, one SweepGroup per
/// group, one Sweep per parameter combination, plus Agent nodes for the
/// owner and each researcher.
pub fn ingest_spec(store: &mut GraphStore, spec: &CampaignSpec) -> Result<NodeId> {
    let mut work = store.clone();
    let id = apply_spec(&mut work, spec)?;
    *store = work;
    Ok(id)
}

fn apply_spec(store: &mut GraphStore, spec: &CampaignSpec) -> Result<NodeId> {
    if spec.name.is_empty() {
        return Err(Error::MalformedSpec("campaign name is empty".to_string()));
    }
    let campaign_id = NodeId::from(spec.name.as_str());
    if store.contains_node(&campaign_id) {
        return Err(Error::DuplicateCampaign(spec.name.clone()));
    }
    for (i, group) in spec.sweep_groups.iter().enumerate() {
        if group.name.is_empty() {
            return Err(Error::MalformedSpec(format!(
                "campaign {:?}: sweep group #{i} has no name",
                spec.name
            )));
        }
        if spec.sweep_groups[..i].iter().any(|g| g.name == group.name) {
            return Err(Error::MalformedSpec(format!(
                "campaign {:?}: duplicate sweep group name {:?}",
                spec.name, group.name
            )));
        }
    }

    store.add_node(
        GraphNode::new(campaign_id.clone(), NodeKind::Campaign)
            .with_property("name", spec.name.as_str())
            .with_property("owner", spec.owner.as_str()),
    )?;
    ensure_agent(store, &spec.owner)?;
    for group in &spec.sweep_groups {
        let group_id = NodeId::from(format!("{}/{}", spec.name, group.name));
        store.add_node(
            GraphNode::new(group_id.clone(), NodeKind::SweepGroup)
                .with_property("name", group.name.as_str())
                .with_property("researcher", group.researcher.as_str()),
        )?;
        store.add_edge(GraphEdge::new(
            group_id.clone(),
            campaign_id.clone(),
            EdgeRelation::PartOf,
        ))?;
        ensure_agent(store, &group.researcher)?;
        for combo in sweep_combos(group)? {
            let sweep = NodeId::from(sweep_id(&spec.name, &group.name, &combo));
            let mut node = GraphNode::new(sweep.clone(), NodeKind::Sweep);
            let mut label = String::new();
            for (i, (name, value)) in combo.iter().enumerate() {
                if i > 0 {
                    label.push(';');
                }
                label.push_str(name);
                label.push('=');
                label.push_str(value);
                node.properties.insert(format!("param.{name}"), value.clone());
            }
            node.properties.insert("name".to_string(), label);
            store.add_node(node)?;
            store.add_edge(GraphEdge::new(sweep, group_id.clone(), EdgeRelation::PartOf))?;
        }
    }
    Ok(campaign_id)
}

/// Ingest one run log: an Instance node under its Sweep plus a provenance
/// record for the run itself (activity `run/<instance_id>`, file entities,
/// and the group researcher as agent).
pub fn ingest_run(store: &mut GraphStore, log: &RunLog) -> Result<NodeId> {
    let mut work = store.clone();
    let id = apply_run(&mut work, log)?;
    *store = work;
    Ok(id)
}

fn apply_run(store: &mut GraphStore, log: &RunLog) -> Result<NodeId> {
    if log.instance_id.is_empty() {
        return Err(Error::MalformedLog("instance_id is empty".to_string()));
    }
    if log.end < log.start {
        return Err(Error::MalformedLog(format!(
            "instance {:?}: end {} before start {}",
            log.instance_id, log.end, log.start
        )));
    }
    let sweep_ref = NodeId::from(log.sweep_id.as_str());
    let sweep = match store.get_node_of_kind(&sweep_ref, NodeKind::Sweep) {
        Ok(node) => node,
        Err(_) => return Err(Error::UnknownSweep(log.sweep_id.clone())),
    };

    // The sweep's fixed values are authoritative; a contradicting log means
    // the run did not execute the sweep it claims.
    let mut properties: BTreeMap<String, String> = sweep
        .properties
        .iter()
        .filter(|(k, _)| k.starts_with("param."))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    for (name, value) in &log.params {
        let key = format!("param.{name}");
        if let Some(fixed) = properties.get(&key) {
            if fixed != value {
                return Err(Error::ParamMismatch {
                    name: name.clone(),
                    sweep_value: fixed.clone(),
                    log_value: value.clone(),
                });
            }
        } else {
            properties.insert(key, value.clone());
        }
    }
    for (name, value) in &log.metrics {
        properties.insert(format!("metric.{name}"), format!("{value}"));
    }
    if !log.metrics.contains_key("runtime") {
        properties.insert(
            "metric.runtime".to_string(),
            format!("{}", (log.end - log.start) as f64),
        );
    }
    properties.insert("name".to_string(), log.instance_id.clone());
    properties.insert("sweep".to_string(), log.sweep_id.clone());
    properties.insert("start".to_string(), log.start.to_string());
    properties.insert("end".to_string(), log.end.to_string());
    properties.insert("exit_code".to_string(), log.exit_code.to_string());

    let instance_id = NodeId::from(log.instance_id.as_str());
    let mut instance = GraphNode::new(instance_id.clone(), NodeKind::Instance);
    instance.properties = properties;
    store.add_node(instance)?;
    store.add_edge(GraphEdge::new(
        instance_id.clone(),
        sweep_ref.clone(),
        EdgeRelation::Instantiates,
    ))?;

    // Agent: the researcher of the sweep's group, when recorded.
    let group_researcher = store
        .neighbors(&sweep_ref, EdgeRelation::PartOf, Direction::Outgoing)?
        .first()
        .and_then(|group| store.get_node(group).ok())
        .and_then(|group| group.property("researcher").map(str::to_string));

    let mut rec = ProvenanceRecord::new(format!("run/{}", log.instance_id), log.start)
        .attribute("instance", log.instance_id.as_str());
    for input in &log.inputs {
        rec = rec.input(input.as_str());
    }
    for output in &log.outputs {
        rec = rec.output(output.as_str());
    }
    if let Some(researcher) = group_researcher {
        rec = rec.agent(ensure_agent(store, &researcher)?);
    }
    provenance::record(store, &rec)?;
    Ok(instance_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::encode_snapshot;

    fn two_by_one_spec() -> CampaignSpec {
        CampaignSpec {
            name: "camp".to_string(),
            owner: "olive".to_string(),
            sweep_groups: alloc::vec![SweepGroupSpec {
                name: "g".to_string(),
                researcher: "rex".to_string(),
                parameters: alloc::vec![
                    ("F".to_string(), alloc::vec!["0.01".to_string(), "0.02".to_string()]),
                    ("k".to_string(), alloc::vec!["0.05".to_string()]),
                ],
            }],
        }
    }

    #[test]
    fn cross_product_of_two_by_one_gives_two_sweeps() {
        let mut store = GraphStore::new();
        ingest_spec(&mut store, &two_by_one_spec()).unwrap();
        let sweeps: Vec<_> = store
            .nodes()
            .filter(|n| n.kind == NodeKind::Sweep)
            .map(|n| n.id.as_str().to_string())
            .collect();
        assert_eq!(sweeps, ["camp/g/F=0.01;k=0.05", "camp/g/F=0.02;k=0.05"]);
        let sweep = store
            .get_node(&NodeId::from("camp/g/F=0.01;k=0.05"))
            .unwrap();
        assert_eq!(sweep.property("param.F"), Some("0.01"));
        assert_eq!(sweep.property("param.k"), Some("0.05"));
        assert_eq!(sweep.property("name"), Some("F=0.01;k=0.05"));
    }

    #[test]
    fn last_parameter_varies_fastest() {
        let group = SweepGroupSpec {
            name: "g".to_string(),
            researcher: "r".to_string(),
            parameters: alloc::vec![
                ("a".to_string(), alloc::vec!["1".to_string(), "2".to_string()]),
                ("b".to_string(), alloc::vec!["x".to_string(), "y".to_string()]),
            ],
        };
        let combos = sweep_combos(&group).unwrap();
        let flat: Vec<String> = combos
            .iter()
            .map(|c| {
                c.iter()
                    .map(|(n, v)| format!("{n}={v}"))
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .collect();
        assert_eq!(flat, ["a=1;b=x", "a=1;b=y", "a=2;b=x", "a=2;b=y"]);
    }

    #[test]
    fn two_groups_make_seven_sweeps() {
        // 2×2 plus 3 = 7, counted by enumeration.
        let spec = CampaignSpec {
            name: "camp".to_string(),
            owner: "olive".to_string(),
            sweep_groups: alloc::vec![
                SweepGroupSpec {
                    name: "grid".to_string(),
                    researcher: "rex".to_string(),
                    parameters: alloc::vec![
                        ("F".to_string(), alloc::vec!["0.01".to_string(), "0.02".to_string()]),
                        ("k".to_string(), alloc::vec!["0.05".to_string(), "0.06".to_string()]),
                    ],
                },
                SweepGroupSpec {
                    name: "line".to_string(),
                    researcher: "sam".to_string(),
                    parameters: alloc::vec![(
                        "L".to_string(),
                        alloc::vec!["32".to_string(), "64".to_string(), "128".to_string()],
                    )],
                },
            ],
        };
        let mut store = GraphStore::new();
        let campaign = ingest_spec(&mut store, &spec).unwrap();
        assert_eq!(campaign, NodeId::from("camp"));
        let sweep_count = store.nodes().filter(|n| n.kind == NodeKind::Sweep).count();
        assert_eq!(sweep_count, 7);
        // Every sweep has exactly one PART_OF edge to its group.
        for node in store.nodes().filter(|n| n.kind == NodeKind::Sweep) {
            let parents = store
                .neighbors(&node.id, EdgeRelation::PartOf, Direction::Outgoing)
                .unwrap();
            assert_eq!(parents.len(), 1);
        }
        // Agents for owner and both researchers.
        for agent in ["agent/olive", "agent/rex", "agent/sam"] {
            assert_eq!(store.get_node(&NodeId::from(agent)).unwrap().kind, NodeKind::Agent);
        }
    }

    #[test]
    fn duplicate_campaign_rejected_without_side_effects() {
        let mut store = GraphStore::new();
        ingest_spec(&mut store, &two_by_one_spec()).unwrap();
        let before = encode_snapshot(&store);
        let err = ingest_spec(&mut store, &two_by_one_spec()).unwrap_err();
        assert_eq!(err, Error::DuplicateCampaign("camp".to_string()));
        assert_eq!(encode_snapshot(&store), before);
    }

    #[test]
    fn empty_parameter_list_rejected() {
        let mut spec = two_by_one_spec();
        spec.sweep_groups[0].parameters[1].1.clear();
        let mut store = GraphStore::new();
        let err = ingest_spec(&mut store, &spec).unwrap_err();
        assert_eq!(
            err,
            Error::EmptyParameterList { group: "g".to_string(), parameter: "k".to_string() }
        );
        assert_eq!(store.node_count(), 0);
    }

    #[test]
    fn duplicate_group_names_rejected() {
        let mut spec = two_by_one_spec();
        spec.sweep_groups.push(spec.sweep_groups[0].clone());
        let mut store = GraphStore::new();
        assert!(matches!(
            ingest_spec(&mut store, &spec),
            Err(Error::MalformedSpec(_))
        ));
        assert_eq!(store.node_count(), 0);
    }

    #[test]
    fn empty_campaign_name_rejected() {
        let mut spec = two_by_one_spec();
        spec.name.clear();
        let mut store = GraphStore::new();
        assert!(matches!(
            ingest_spec(&mut store, &spec),
            Err(Error::MalformedSpec(_))
        ));
    }

    fn sample_log() -> RunLog {
        let mut log = RunLog::new("camp.g.run-0", "camp/g/F=0.01;k=0.05");
        log.start = 1000;
        log.end = 1086;
        log.exit_code = 0;
        log.params.insert("F".to_string(), "0.01".to_string());
        log.params.insert("seed".to_string(), "7".to_string());
        log.inputs.push("camp.g.run-0-settings.txt".to_string());
        log.outputs.push("camp.g.run-0-histogram.tsv".to_string());
        log.metrics.insert("bytes_written".to_string(), 4096.0);
        log
    }

    #[test]
    fn run_log_creates_instance_with_merged_params() {
        let mut store = GraphStore::new();
        ingest_spec(&mut store, &two_by_one_spec()).unwrap();
        let id = ingest_run(&mut store, &sample_log()).unwrap();
        assert_eq!(id, NodeId::from("camp.g.run-0"));

        let instance = store.get_node(&id).unwrap();
        assert_eq!(instance.kind, NodeKind::Instance);
        assert_eq!(instance.property("param.F"), Some("0.01"));
        assert_eq!(instance.property("param.k"), Some("0.05")); // from the sweep
        assert_eq!(instance.property("param.seed"), Some("7")); // log-only
        assert_eq!(instance.property("metric.bytes_written"), Some("4096"));
        assert_eq!(instance.property("metric.runtime"), Some("86")); // end − start
        assert_eq!(instance.property("exit_code"), Some("0"));
        assert_eq!(instance.property("sweep"), Some("camp/g/F=0.01;k=0.05"));

        let sweeps = store
            .neighbors(&id, EdgeRelation::Instantiates, Direction::Outgoing)
            .unwrap();
        assert_eq!(sweeps, alloc::vec![NodeId::from("camp/g/F=0.01;k=0.05")]);

        // The run's provenance: activity, file entities, researcher agent.
        let activity = store.get_node(&NodeId::from("run/camp.g.run-0")).unwrap();
        assert_eq!(activity.kind, NodeKind::Activity);
        assert_eq!(activity.property("instance"), Some("camp.g.run-0"));
        let used = store
            .neighbors(&activity.id, EdgeRelation::Used, Direction::Outgoing)
            .unwrap();
        assert_eq!(used, alloc::vec![NodeId::from("camp.g.run-0-settings.txt")]);
        let agents = store
            .neighbors(&activity.id, EdgeRelation::WasAssociatedWith, Direction::Outgoing)
            .unwrap();
        assert_eq!(agents, alloc::vec![NodeId::from("agent/rex")]);
    }

    #[test]
    fn explicit_runtime_metric_wins() {
        let mut store = GraphStore::new();
        ingest_spec(&mut store, &two_by_one_spec()).unwrap();
        let mut log = sample_log();
        log.metrics.insert("runtime".to_string(), 79.25);
        ingest_run(&mut store, &log).unwrap();
        let instance = store.get_node(&NodeId::from("camp.g.run-0")).unwrap();
        assert_eq!(instance.property("metric.runtime"), Some("79.25"));
    }

    #[test]
    fn unknown_sweep_rejected() {
        let mut store = GraphStore::new();
        ingest_spec(&mut store, &two_by_one_spec()).unwrap();
        let mut log = sample_log();
        log.sweep_id = "camp/g/F=0.09;k=0.05".to_string();
        let err = ingest_run(&mut store, &log).unwrap_err();
        assert_eq!(err, Error::UnknownSweep("camp/g/F=0.09;k=0.05".to_string()));
    }

    #[test]
    fn param_contradiction_rejected_without_side_effects() {
        let mut store = GraphStore::new();
        ingest_spec(&mut store, &two_by_one_spec()).unwrap();
        let before = encode_snapshot(&store);
        let mut log = sample_log();
        log.params.insert("F".to_string(), "0.03".to_string());
        let err = ingest_run(&mut store, &log).unwrap_err();
        assert_eq!(
            err,
            Error::ParamMismatch {
                name: "F".to_string(),
                sweep_value: "0.01".to_string(),
                log_value: "0.03".to_string(),
            }
        );
        assert_eq!(encode_snapshot(&store), before);
    }

    #[test]
    fn end_before_start_rejected() {
        let mut store = GraphStore::new();
        ingest_spec(&mut store, &two_by_one_spec()).unwrap();
        let mut log = sample_log();
        log.end = log.start - 1;
        assert!(matches!(
            ingest_run(&mut store, &log),
            Err(Error::MalformedLog(_))
        ));
    }

    #[test]
    fn duplicate_instance_rejected() {
        let mut store = GraphStore::new();
        ingest_spec(&mut store, &two_by_one_spec()).unwrap();
        ingest_run(&mut store, &sample_log()).unwrap();
        let before = encode_snapshot(&store);
        let err = ingest_run(&mut store, &sample_log()).unwrap_err();
        assert_eq!(err, Error::DuplicateId(NodeId::from("camp.g.run-0")));
        assert_eq!(encode_snapshot(&store), before);
    }

    #[test]
    fn log_order_does_not_change_snapshot() {
        let mut log_a = sample_log();
        log_a.instance_id = "camp.g.run-0".to_string();
        let mut log_b = sample_log();
        log_b.instance_id = "camp.g.run-1".to_string();
        log_b.sweep_id = "camp/g/F=0.02;k=0.05".to_string();
        log_b.params.insert("F".to_string(), "0.02".to_string());
        log_b.inputs = alloc::vec!["camp.g.run-1-settings.txt".to_string()];
        log_b.outputs = alloc::vec!["camp.g.run-1-histogram.tsv".to_string()];

        let mut forward = GraphStore::new();
        ingest_spec(&mut forward, &two_by_one_spec()).unwrap();
        ingest_run(&mut forward, &log_a).unwrap();
        ingest_run(&mut forward, &log_b).unwrap();

        let mut reverse = GraphStore::new();
        ingest_spec(&mut reverse, &two_by_one_spec()).unwrap();
        ingest_run(&mut reverse, &log_b).unwrap();
        ingest_run(&mut reverse, &log_a).unwrap();

        assert_eq!(encode_snapshot(&forward), encode_snapshot(&reverse));
    }
}
