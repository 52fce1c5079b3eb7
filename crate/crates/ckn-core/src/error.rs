//! Crate-wide error type.

use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

use crate::graph::{EdgeRelation, NodeId, NodeKind};

/// Result alias used across the crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Every failure the engine can report.
///
/// One flat enum rather than one enum per module: errors cross module
/// boundaries constantly (ingest surfaces store errors, matrices surface
/// extraction errors), and callers match on the variant, not the module.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A node with this id already exists.
    DuplicateId(NodeId),
    /// A node violates a structural invariant (empty id, control characters,
    /// empty property key, instance without a `sweep` property, ...).
    InvalidNode(String),
    /// An edge endpoint does not resolve to a stored node.
    MissingEndpoint(NodeId),
    /// An edge connects node kinds its relation does not allow.
    KindViolation {
        relation: EdgeRelation,
        src: NodeKind,
        dst: NodeKind,
    },
    /// The edge would close a cycle in the provenance subgraph.
    CycleViolation,
    /// No node stored under this id.
    NotFound(NodeId),
    /// The node exists but has the wrong kind for the operation.
    WrongKind {
        id: NodeId,
        expected: NodeKind,
        actual: NodeKind,
    },
    /// A snapshot failed to parse or its checksum does not match.
    CorruptSnapshot(String),
    /// A provenance record lists the same entity as input and output.
    InputOutputOverlap(NodeId),
    /// A campaign with this name has already been ingested.
    DuplicateCampaign(String),
    /// A sweep-group parameter has no values to sweep over.
    EmptyParameterList { group: String, parameter: String },
    /// A campaign spec is structurally invalid beyond the cases above.
    MalformedSpec(String),
    /// A run log names a sweep that is not in the graph.
    UnknownSweep(String),
    /// A run log is missing a mandatory field or is internally inconsistent.
    MalformedLog(String),
    /// A run log parameter contradicts the value its sweep fixes.
    ParamMismatch {
        name: String,
        sweep_value: String,
        log_value: String,
    },
    /// No schema registered under this name.
    UnknownSchema(String),
    /// The schema is registered but defines no features yet.
    EmptySchema(String),
    /// The instance lacks a `param.<name>` property the schema requires.
    MissingFeature(String),
    /// A required feature value does not parse as a finite float.
    NonNumericFeature { name: String, value: String },
    /// Two signatures (or a signature and a norm context) use different schemas.
    SchemaMismatch { left: String, right: String },
    /// Cosine similarity is undefined for an all-zero vector.
    ZeroVector,
    /// The norm context was built for a different schema or feature list.
    NormMismatch { expected: String, actual: String },
    /// An operation over a set of signatures received an empty set.
    EmptyInput,
    /// No instance in the campaign has an extractable signature.
    NoSignatures,
    /// An attribute query must carry a name filter or at least one attribute.
    EmptyQuery,
    /// The simulation produced a non-finite value.
    InstabilityDetected { step: u64 },
    /// Parameters violate a precondition (stability bound, grid size, ...).
    InvalidParams(String),
    /// An error attributed to a specific instance, e.g. during matrix assembly.
    AtInstance { id: NodeId, source: Box<Error> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DuplicateId(id) => write!(f, "node id already in use: {id}"),
            Error::InvalidNode(reason) => write!(f, "invalid node: {reason}"),
            Error::MissingEndpoint(id) => write!(f, "edge endpoint not found: {id}"),
            Error::KindViolation { relation, src, dst } => {
                write!(f, "relation {relation} does not allow {src} -> {dst}")
            }
            Error::CycleViolation => write!(f, "edge would create a provenance cycle"),
            Error::NotFound(id) => write!(f, "node not found: {id}"),
            Error::WrongKind { id, expected, actual } => {
                write!(f, "node {id} has kind {actual}, expected {expected}")
            }
            Error::CorruptSnapshot(reason) => write!(f, "corrupt snapshot: {reason}"),
            Error::InputOutputOverlap(id) => {
                write!(f, "entity {id} appears as both input and output")
            }
            Error::DuplicateCampaign(name) => write!(f, "campaign already ingested: {name}"),
            Error::EmptyParameterList { group, parameter } => {
                write!(f, "group {group}: parameter {parameter} has no values")
            }
            Error::MalformedSpec(reason) => write!(f, "malformed campaign spec: {reason}"),
            Error::UnknownSweep(id) => write!(f, "unknown sweep: {id}"),
            Error::MalformedLog(reason) => write!(f, "malformed run log: {reason}"),
            Error::ParamMismatch { name, sweep_value, log_value } => write!(
                f,
                "parameter {name}: log value {log_value} contradicts sweep value {sweep_value}"
            ),
            Error::UnknownSchema(name) => write!(f, "unknown signature schema: {name}"),
            Error::EmptySchema(name) => write!(f, "schema {name} defines no features"),
            Error::MissingFeature(name) => write!(f, "missing feature: {name}"),
            Error::NonNumericFeature { name, value } => {
                write!(f, "feature {name} is not numeric: {value:?}")
            }
            Error::SchemaMismatch { left, right } => {
                write!(f, "schema mismatch: {left} vs {right}")
            }
            Error::ZeroVector => write!(f, "cosine similarity undefined for zero vector"),
            Error::NormMismatch { expected, actual } => {
                write!(f, "norm context built for {actual}, need {expected}")
            }
            Error::EmptyInput => write!(f, "empty signature set"),
            Error::NoSignatures => write!(f, "campaign has no signed instances"),
            Error::EmptyQuery => write!(f, "query needs a name filter or attributes"),
            Error::InstabilityDetected { step } => {
                write!(f, "simulation became non-finite at step {step}")
            }
            Error::InvalidParams(reason) => write!(f, "invalid parameters: {reason}"),
            Error::AtInstance { id, source } => write!(f, "instance {id}: {source}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::AtInstance { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}

impl Error {
    /// Wrap an error with the instance it occurred on.
    pub fn at_instance(id: NodeId, source: Error) -> Self {
        Error::AtInstance { id, source: Box::new(source) }
    }
}
