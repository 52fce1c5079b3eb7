//! Randomized whole-store invariants.
//!
//! The unit suites pin exact values; these properties instead throw arbitrary
//! mutation sequences, pipeline shapes, signature sets, and ingest orderings
//! at the crate and check the guarantees that must survive all of them:
//! referential integrity, acyclic provenance, canonical snapshots, lineage
//! duality, similarity-matrix structure, and order-independent ingestion.

use std::collections::BTreeSet;

use ckn_core::{
    ancestors, descendants, encode_snapshot, decode_snapshot, ingest_run, ingest_spec, record,
    similarity_matrix, simulate, sweep_combos, sweep_id, CampaignSpec, DetailLevel, GraphNode,
    GraphStore, GrayScottParams, LineageRelation, NodeId, NodeKind, ProvenanceRecord, RunLog,
    SchemaRegistry, SimilarityMetric, SweepGroupSpec, GRAY_SCOTT_SCHEMA,
};
use proptest::prelude::*;

// ---------------------------------------------------------------------------
// Arbitrary mutation sequences

fn entity_id(slot: u8) -> String {
    format!("file-{}", slot % 8)
}

fn agent_id(slot: u8) -> String {
    format!("person-{}", slot % 3)
}

fn activity_id(slot: u8) -> String {
    format!("task-{}", slot % 8)
}

fn key_strategy() -> impl Strategy<Value = String> {
    "[a-z%&=./: ]{1,8}"
}

fn value_strategy() -> impl Strategy<Value = String> {
    prop_oneof![
        "[ -~]{0,12}",
        Just("tab\tand\nnewline".to_string()),
        Just("路径=值&更多".to_string()),
    ]
}

/// One best-effort store mutation. Slots collide on purpose so that duplicate
/// ids, unknown targets, overlapping input/output sets, and would-be cycles
/// all occur; the store must shrug those off without losing consistency.
#[derive(Debug, Clone)]
enum Op {
    AddEntity { slot: u8, props: Vec<(String, String)> },
    AddAgent { slot: u8 },
    Record { slot: u8, timestamp: i64, inputs: Vec<u8>, outputs: Vec<u8>, agent: Option<u8> },
    SetProperty { slot: u8, key: String, value: String },
}

fn op_strategy() -> impl Strategy<Value = Op> {
    prop_oneof![
        (any::<u8>(), prop::collection::vec((key_strategy(), value_strategy()), 0..3))
            .prop_map(|(slot, props)| Op::AddEntity { slot, props }),
        any::<u8>().prop_map(|slot| Op::AddAgent { slot }),
        (
            any::<u8>(),
            -1_000_000i64..1_000_000,
            prop::collection::vec(any::<u8>(), 0..3),
            prop::collection::vec(any::<u8>(), 0..3),
            prop::option::of(any::<u8>()),
        )
            .prop_map(|(slot, timestamp, inputs, outputs, agent)| Op::Record {
                slot,
                timestamp,
                inputs,
                outputs,
                agent,
            }),
        (any::<u8>(), key_strategy(), value_strategy())
            .prop_map(|(slot, key, value)| Op::SetProperty { slot, key, value }),
    ]
}

fn apply(store: &mut GraphStore, op: &Op) {
    match op {
        Op::AddEntity { slot, props } => {
            let mut node = GraphNode::new(entity_id(*slot), NodeKind::Entity);
            for (key, value) in props {
                node = node.with_property(key.clone(), value.clone());
            }
            let _ = store.add_node(node);
        }
        Op::AddAgent { slot } => {
            let _ = store.add_node(GraphNode::new(agent_id(*slot), NodeKind::Agent));
        }
        Op::Record { slot, timestamp, inputs, outputs, agent } => {
            let mut rec = ProvenanceRecord::new(activity_id(*slot), *timestamp);
            for input in inputs {
                rec = rec.input(entity_id(*input));
            }
            for output in outputs {
                rec = rec.output(entity_id(*output));
            }
            if let Some(agent) = agent {
                rec = rec.agent(agent_id(*agent));
            }
            let _ = record(store, &rec);
        }
        Op::SetProperty { slot, key, value } => {
            let _ = store.set_property(&NodeId::new(entity_id(*slot)), key, value);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// Whatever sequence of successful and failed mutations produced a store,
    /// it stays internally consistent and snapshots canonically.
    #[test]
    fn any_reachable_store_is_consistent_and_roundtrips(
        ops in prop::collection::vec(op_strategy(), 0..40),
    ) {
        let mut store = GraphStore::new();
        let mut last_version = store.version();
        for op in &ops {
            apply(&mut store, op);
            prop_assert!(store.version() >= last_version, "version went backwards");
            last_version = store.version();
        }

        // Referential integrity and acyclic provenance.
        for edge in store.edges() {
            prop_assert!(store.contains_node(&edge.src), "dangling src {:?}", edge.src);
            prop_assert!(store.contains_node(&edge.dst), "dangling dst {:?}", edge.dst);
            if edge.relation.is_provenance() {
                prop_assert!(
                    !store.provenance_reaches(&edge.dst, &edge.src),
                    "provenance cycle through {:?} -> {:?}",
                    edge.src,
                    edge.dst
                );
            }
        }

        // Snapshot bytes are canonical and lossless.
        let bytes = encode_snapshot(&store);
        let decoded = decode_snapshot(&bytes).expect("own snapshot must decode");
        prop_assert_eq!(&encode_snapshot(&decoded), &bytes);
        prop_assert_eq!(decoded.node_count(), store.node_count());
        prop_assert_eq!(decoded.edge_count(), store.edge_count());
        for node in store.nodes() {
            let restored = decoded.get_node(&node.id).expect("node lost in roundtrip");
            prop_assert_eq!(restored, node);
        }
    }
}

// ---------------------------------------------------------------------------
// Lineage on arbitrary layered pipelines

/// Build a processing pipeline: layer 0 entities come from seed activities,
/// every later entity is produced by an activity consuming a chosen subset of
/// earlier entities. Returns all entity ids.
fn build_pipeline(store: &mut GraphStore, seed_width: usize, wiring: &[Vec<Vec<u8>>]) -> Vec<NodeId> {
    let mut entities: Vec<NodeId> = Vec::new();
    for j in 0..seed_width {
        let out = NodeId::new(format!("data-0-{j}"));
        record(
            store,
            &ProvenanceRecord::new(format!("seed-{j}"), j as i64).output(out.clone()),
        )
        .unwrap();
        entities.push(out);
    }
    for (layer, nodes) in wiring.iter().enumerate() {
        let prior = entities.len();
        let mut new_entities = Vec::new();
        for (j, picks) in nodes.iter().enumerate() {
            let out = NodeId::new(format!("data-{}-{j}", layer + 1));
            let mut rec =
                ProvenanceRecord::new(format!("stage-{}-{j}", layer + 1), (layer + 1) as i64)
                    .output(out.clone());
            let chosen: BTreeSet<usize> =
                picks.iter().map(|p| *p as usize % prior).collect();
            for index in chosen {
                rec = rec.input(entities[index].clone());
            }
            record(store, &rec).unwrap();
            new_entities.push(out);
        }
        entities.extend(new_entities);
    }
    entities
}

fn pipeline_strategy() -> impl Strategy<Value = (usize, Vec<Vec<Vec<u8>>>)> {
    (
        1usize..4,
        prop::collection::vec(
            prop::collection::vec(prop::collection::vec(any::<u8>(), 1..4), 1..4),
            1..4,
        ),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Forward and backward traversal agree: y is downstream of x exactly
    /// when x is upstream of y — and the coarse view stays inside the fine
    /// one.
    #[test]
    fn lineage_duality_and_coarse_containment((seed_width, wiring) in pipeline_strategy()) {
        let mut store = GraphStore::new();
        let entities = build_pipeline(&mut store, seed_width, &wiring);

        let down: Vec<_> = entities
            .iter()
            .map(|e| descendants(&store, e, DetailLevel::Fine).unwrap())
            .collect();
        let up: Vec<_> = entities
            .iter()
            .map(|e| ancestors(&store, e, DetailLevel::Fine).unwrap())
            .collect();

        for (i, x) in entities.iter().enumerate() {
            for (j, y) in entities.iter().enumerate() {
                prop_assert_eq!(
                    down[i].contains(y),
                    up[j].contains(x),
                    "duality broken for {:?} / {:?}",
                    x,
                    y
                );
            }
        }

        for (entity, fine) in entities.iter().zip(&up) {
            let coarse = ancestors(&store, entity, DetailLevel::Coarse).unwrap();
            for node in &coarse.nodes {
                prop_assert!(fine.contains(&node.id), "coarse node outside fine lineage");
                prop_assert_eq!(node.kind, NodeKind::Entity);
            }
            for edge in &coarse.edges {
                prop_assert_eq!(&edge.relation, &LineageRelation::DerivedFrom);
                prop_assert!(coarse.contains(&edge.src));
                prop_assert!(coarse.contains(&edge.dst));
            }
            prop_assert!(coarse.contains(entity));
        }
    }
}

// ---------------------------------------------------------------------------
// Similarity matrices over random parameter sets

fn instance_params_strategy() -> impl Strategy<Value = [f64; 5]> {
    [
        8.0f64..256.0,   // L
        0.01f64..0.3,    // Du
        0.01f64..0.3,    // Dv
        0.0f64..0.1,     // F
        0.0f64..0.1,     // k
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Every metric yields a symmetric matrix with a unit diagonal and values
    /// inside the metric's range.
    #[test]
    fn similarity_matrices_are_symmetric_unit_diagonal_and_bounded(
        param_sets in prop::collection::vec(instance_params_strategy(), 2..7),
    ) {
        let mut store = GraphStore::new();
        let mut ids = Vec::new();
        for (i, [l, du, dv, f, k]) in param_sets.iter().enumerate() {
            let id = format!("inst-{i}");
            store
                .add_node(
                    GraphNode::new(id.clone(), NodeKind::Instance)
                        .with_property("sweep", "s")
                        .with_property("param.L", format!("{l}"))
                        .with_property("param.Du", format!("{du}"))
                        .with_property("param.Dv", format!("{dv}"))
                        .with_property("param.F", format!("{f}"))
                        .with_property("param.k", format!("{k}")),
                )
                .unwrap();
            ids.push(NodeId::new(id));
        }

        let registry = SchemaRegistry::builtin();
        for metric in SimilarityMetric::ALL {
            let matrix =
                similarity_matrix(&store, &ids, metric, &registry, GRAY_SCOTT_SCHEMA).unwrap();
            let n = matrix.len();
            prop_assert_eq!(n, ids.len());
            for i in 0..n {
                prop_assert_eq!(matrix.values[i][i], 1.0);
                for j in 0..n {
                    let v = matrix.values[i][j];
                    prop_assert_eq!(
                        v.to_bits(),
                        matrix.values[j][i].to_bits(),
                        "asymmetry at ({}, {}) for {}",
                        i,
                        j,
                        metric.as_str()
                    );
                    match metric {
                        SimilarityMetric::Cosine => {
                            prop_assert!((-1.0..=1.0).contains(&v));
                        }
                        _ => prop_assert!(v > 0.0 && v <= 1.0, "out of range: {v}"),
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Ingest order independence

fn spec_plan_strategy() -> impl Strategy<Value = Vec<Vec<u8>>> {
    // Groups of 1..3 parameters with 1..3 values each.
    prop::collection::vec(prop::collection::vec(1u8..4, 1..3), 1..3)
}

fn plan_to_spec(plan: &[Vec<u8>]) -> CampaignSpec {
    CampaignSpec {
        name: "camp".to_string(),
        owner: "owner".to_string(),
        sweep_groups: plan
            .iter()
            .enumerate()
            .map(|(g, params)| SweepGroupSpec {
                name: format!("group-{g}"),
                researcher: format!("researcher-{g}"),
                parameters: params
                    .iter()
                    .enumerate()
                    .map(|(p, count)| {
                        (format!("p{p}"), (0..*count).map(|v| format!("v{v}")).collect())
                    })
                    .collect(),
            })
            .collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The snapshot of an ingested campaign depends only on the set of run
    /// logs, not on the order they arrived in.
    #[test]
    fn ingest_result_is_independent_of_log_order(
        plan in spec_plan_strategy(),
        runs_per_sweep in prop::collection::vec(0u8..3, 0..20),
        shuffle_keys in prop::collection::vec(any::<u64>(), 1..20),
    ) {
        let spec = plan_to_spec(&plan);

        // Enumerate every sweep of every group, then fabricate logs.
        let mut logs: Vec<RunLog> = Vec::new();
        let mut counter = 0usize;
        for group in &spec.sweep_groups {
            for combo in sweep_combos(group).unwrap() {
                let sweep = sweep_id(&spec.name, &group.name, &combo);
                let wanted = runs_per_sweep.get(counter % runs_per_sweep.len().max(1)).copied().unwrap_or(0);
                for r in 0..wanted {
                    let mut log = RunLog::new(format!("run-{counter}-{r}"), sweep.clone());
                    log.start = 1_000 + counter as i64;
                    log.end = 1_000 + counter as i64 + 30 + r as i64;
                    log.exit_code = i64::from(r % 2);
                    if r == 0 {
                        log.metrics.insert("runtime".to_string(), 12.5 + counter as f64);
                    }
                    logs.push(log);
                }
                counter += 1;
            }
        }

        let ingest_all = |logs: &[RunLog]| {
            let mut store = GraphStore::new();
            ingest_spec(&mut store, &spec).unwrap();
            for log in logs {
                ingest_run(&mut store, log).unwrap();
            }
            encode_snapshot(&store)
        };

        let natural = ingest_all(&logs);

        let mut keyed: Vec<(u64, RunLog)> = logs
            .iter()
            .enumerate()
            .map(|(i, log)| (shuffle_keys[i % shuffle_keys.len()], log.clone()))
            .collect();
        keyed.sort_by_key(|(key, _)| *key);
        let shuffled: Vec<RunLog> = keyed.into_iter().map(|(_, log)| log).collect();

        prop_assert_eq!(ingest_all(&shuffled), natural);
    }
}

// ---------------------------------------------------------------------------
// Solver output sanity across the stable parameter region

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Within the stability region, short runs stay finite, histograms stay
    /// normalized, and reruns reproduce bit-identical fields.
    #[test]
    fn solver_is_finite_normalized_and_deterministic(
        grid_size in 8usize..24,
        diffusion_u in 0.0f64..0.2,
        diffusion_v in 0.0f64..0.15,
        feed_rate in 0.0f64..0.08,
        kill_rate in 0.0f64..0.08,
        steps in 0u64..40,
        seed in any::<u64>(),
    ) {
        let params = GrayScottParams {
            grid_size,
            diffusion_u,
            diffusion_v,
            feed_rate,
            kill_rate,
            steps,
            dt: 1.0,
            seed,
        };
        let (state, pdf) = simulate(&params).unwrap();
        prop_assert!(state.u_values().iter().chain(state.v_values()).all(|v| v.is_finite()));
        prop_assert!((pdf.u.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!((pdf.v.iter().sum::<f64>() - 1.0).abs() <= 1e-9);

        let (again, pdf_again) = simulate(&params).unwrap();
        prop_assert_eq!(state, again);
        prop_assert_eq!(pdf, pdf_again);
    }
}
