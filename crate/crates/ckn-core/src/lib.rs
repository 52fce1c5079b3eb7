//! Embeddable campaign-knowledge-graph engine.
//!
//! This crate holds the algorithmic core: the property graph, provenance
//! recording and lineage queries, campaign ingestion, discovery queries,
//! experiment signatures with similarity metrics, status distillation, and a
//! small reaction-diffusion kernel for generating real campaign data.
//!
//! The crate is `no_std` (with `alloc`); everything that touches files,
//! clocks, or threads lives in the companion `ckn` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod distill;
pub mod error;
pub mod graph;
pub mod grayscott;
pub mod ingest;
pub mod provenance;
pub mod query;
pub mod signature;
pub mod snapshot;

pub use distill::{
    distill_campaign, distill_group, distill_sweep, on_sweep_group_complete,
    snapshot_without_timestamps,
};
pub use error::{Error, Result};
pub use graph::{Direction, EdgeRelation, GraphEdge, GraphNode, GraphStore, NodeId, NodeKind};
pub use grayscott::{
    evolve, histogram, initial_state, params_from_map, params_to_map, simulate, step,
    GrayScottParams, GridState, PdfHistogram, HISTOGRAM_BINS,
};
pub use ingest::{
    ingest_run, ingest_spec, sweep_combos, sweep_id, CampaignSpec, RunLog, SweepGroupSpec,
};
pub use provenance::{
    ancestors, descendants, record, DetailLevel, LineageEdge, LineageGraph, LineageRelation,
    ProvenanceRecord,
};
pub use query::{
    campaign_instances, find, find_exact_run, lineage, products, sources, AttributeQuery,
    QueryResult,
};
pub use signature::{
    build_norm_context, cosine_similarity, distance_similarity, extract_signature, find_similar,
    signature_of, similarity_matrix, DistanceMetric, NormContext, SchemaRegistry, Signature,
    SimilarityMatrix, SimilarityMetric, GRAY_SCOTT_SCHEMA, OSU_BW_SCHEMA,
};
pub use snapshot::{decode_snapshot, encode_snapshot, sha256_hex};
