//! Experiment signatures and similarity metrics.
//!
//! A signature is an ordered feature vector extracted from an instance's
//! parameters under a named schema (for the reaction-diffusion workflow:
//! ⟨L, Du, Dv, F, k⟩). Signatures of one schema can be compared with cosine
//! similarity (on raw values) or with Euclidean/Manhattan distance
//! similarities (on per-set min-max normalized values, mapped through
//! 1/(1+d)). All formulas are order-independent, so every metric is exactly
//! symmetric.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{GraphStore, NodeId, NodeKind};
use crate::query::campaign_instances;

/// Ordered feature vector of one instance under a schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    schema: String,
    features: Vec<(String, f64)>,
}

impl Signature {
    /// Build a signature directly. Values must be finite and names unique.
    pub fn new(schema: impl Into<String>, features: Vec<(String, f64)>) -> Result<Self> {
        for (i, (name, value)) in features.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonNumericFeature {
                    name: name.clone(),
                    value: format!("{value}"),
                });
            }
            if features[..i].iter().any(|(other, _)| other == name) {
                return Err(Error::InvalidParams(format!("duplicate feature {name:?}")));
            }
        }
        Ok(Signature { schema: schema.into(), features })
    }

    pub fn schema(&self) -> &str {
        &self.schema
    }

    pub fn features(&self) -> &[(String, f64)] {
        &self.features
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.features.iter().map(|(_, v)| *v)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// Named feature schemas: schema name → ordered feature list.
#[derive(Debug, Clone, Default)]
pub struct SchemaRegistry {
    schemas: BTreeMap<String, Vec<String>>,
}

/// Schema of the reaction-diffusion workflow: grid edge length and the four
/// solver coefficients.
pub const GRAY_SCOTT_SCHEMA: &str = "gray-scott-v1";

/// Reserved slot for a bandwidth-benchmark workflow; has no features yet, so
/// extraction under it always fails with `EmptySchema`.
pub const OSU_BW_SCHEMA: &str = "osu-bw-v1";

impl SchemaRegistry {
    /// Registry with the built-in schemas.
    pub fn builtin() -> Self {
        let mut registry = SchemaRegistry::default();
        registry.register(
            GRAY_SCOTT_SCHEMA,
            ["L", "Du", "Dv", "F", "k"].map(String::from).into(),
        );
        registry.register(OSU_BW_SCHEMA, Vec::new());
        registry
    }

    pub fn register(&mut self, name: impl Into<String>, features: Vec<String>) {
        self.schemas.insert(name.into(), features);
    }

    pub fn feature_names(&self, schema: &str) -> Result<&[String]> {
        self.schemas
            .get(schema)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownSchema(schema.to_string()))
    }

    pub fn schema_names(&self) -> impl Iterator<Item = &str> {
        self.schemas.keys().map(String::as_str)
    }
}

/// Read an instance's signature without touching the store. Every schema
/// feature must be present as a `param.<name>` property parseable as a
/// finite float.
pub fn signature_of(
    store: &GraphStore,
    instance: &NodeId,
    registry: &SchemaRegistry,
    schema: &str,
) -> Result<Signature> {
    let names = registry.feature_names(schema)?;
    if names.is_empty() {
        return Err(Error::EmptySchema(schema.to_string()));
    }
    let node = store.get_node_of_kind(instance, NodeKind::Instance)?;
    let mut features = Vec::with_capacity(names.len());
    for name in names {
        let raw = node
            .property(&format!("param.{name}"))
            .ok_or_else(|| Error::MissingFeature(name.clone()))?;
        let value: f64 = raw.parse().map_err(|_| Error::NonNumericFeature {
            name: name.clone(),
            value: raw.to_string(),
        })?;
        if !value.is_finite() {
            return Err(Error::NonNumericFeature { name: name.clone(), value: raw.to_string() });
        }
        features.push((name.clone(), value));
    }
    Ok(Signature { schema: schema.to_string(), features })
}

/// Extract an instance's signature and materialize it on the node as
/// `sig.<name>` properties (the stored form is the shortest string that
/// parses back to the same float).
pub fn extract_signature(
    store: &mut GraphStore,
    instance: &NodeId,
    registry: &SchemaRegistry,
    schema: &str,
) -> Result<Signature> {
    let signature = signature_of(store, instance, registry, schema)?;
    for (name, value) in signature.features() {
        store.set_property(instance, &format!("sig.{name}"), &format!("{value}"))?;
    }
    Ok(signature)
}

/// Similarity metric selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityMetric {
    /// Cosine of the raw feature vectors.
    Cosine,
    /// 1/(1+d) with d the Euclidean distance on min-max normalized features.
    Euclidean,
    /// 1/(1+d) with d the Manhattan distance on min-max normalized features.
    Manhattan,
}

impl SimilarityMetric {
    pub const ALL: [SimilarityMetric; 3] = [
        SimilarityMetric::Cosine,
        SimilarityMetric::Euclidean,
        SimilarityMetric::Manhattan,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SimilarityMetric::Cosine => "cosine",
            SimilarityMetric::Euclidean => "euclidean",
            SimilarityMetric::Manhattan => "manhattan",
        }
    }

    /// The underlying distance, when this is a distance-based similarity.
    pub fn distance(&self) -> Option<DistanceMetric> {
        match self {
            SimilarityMetric::Cosine => None,
            SimilarityMetric::Euclidean => Some(DistanceMetric::Euclidean),
            SimilarityMetric::Manhattan => Some(DistanceMetric::Manhattan),
        }
    }

    /// Label of the feature scaling the metric works on.
    pub fn norm_label(&self) -> &'static str {
        match self {
            SimilarityMetric::Cosine => "raw",
            _ => "minmax",
        }
    }
}

impl fmt::Display for SimilarityMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SimilarityMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SimilarityMetric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown metric {s:?}")))
    }
}

/// Distance selector for [`distance_similarity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMetric {
    Euclidean,
    Manhattan,
}

fn check_comparable(a: &Signature, b: &Signature) -> Result<()> {
    let names_match = a.len() == b.len()
        && a.features
            .iter()
            .zip(&b.features)
            .all(|((x, _), (y, _))| x == y);
    if a.schema != b.schema || !names_match {
        return Err(Error::SchemaMismatch { left: a.schema.clone(), right: b.schema.clone() });
    }
    Ok(())
}

/// Cosine similarity on raw feature values, clamped into [-1, 1].
pub fn cosine_similarity(a: &Signature, b: &Signature) -> Result<f64> {
    check_comparable(a, b)?;
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    for (x, y) in a.values().zip(b.values()) {
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(Error::ZeroVector);
    }
    let cos = dot / (libm::sqrt(norm_a) * libm::sqrt(norm_b));
    Ok(cos.clamp(-1.0, 1.0))
}

/// Per-feature (min, max) ranges of a comparison set; distances are computed
/// on values scaled into these ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct NormContext {
    schema: String,
    ranges: Vec<(String, f64, f64)>,
}

impl NormContext {
    pub fn schema(&self) -> &str {
        &self.schema
    }

    pub fn ranges(&self) -> &[(String, f64, f64)] {
        &self.ranges
    }

    /// Scale a signature into this context: (x−min)/(max−min), with features
    /// that were constant across the set pinned to 0.
    pub fn normalize(&self, sig: &Signature) -> Result<Vec<f64>> {
        let names_match = sig.len() == self.ranges.len()
            && sig
                .features
                .iter()
                .zip(&self.ranges)
                .all(|((x, _), (y, _, _))| x == y);
        if sig.schema != self.schema || !names_match {
            return Err(Error::NormMismatch {
                expected: self.schema.clone(),
                actual: sig.schema.clone(),
            });
        }
        Ok(sig
            .values()
            .zip(&self.ranges)
            .map(|(value, &(_, min, max))| {
                if max == min {
                    0.0
                } else {
                    (value - min) / (max - min)
                }
            })
            .collect())
    }
}

/// Build the min-max normalization context of a comparison set.
pub fn build_norm_context(signatures: &[Signature]) -> Result<NormContext> {
    let first = signatures.first().ok_or(Error::EmptyInput)?;
    for other in &signatures[1..] {
        check_comparable(first, other)?;
    }
    let ranges = first
        .features
        .iter()
        .enumerate()
        .map(|(i, (name, _))| {
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for sig in signatures {
                let value = sig.features[i].1;
                min = min.min(value);
                max = max.max(value);
            }
            (name.clone(), min, max)
        })
        .collect();
    Ok(NormContext { schema: first.schema.clone(), ranges })
}

fn raw_distance(metric: DistanceMetric, a: &[f64], b: &[f64]) -> f64 {
    match metric {
        DistanceMetric::Euclidean => {
            let sum: f64 = a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            libm::sqrt(sum)
        }
        DistanceMetric::Manhattan => a.iter().zip(b).map(|(x, y)| libm::fabs(x - y)).sum(),
    }
}

/// Distance-based similarity 1/(1+d) on normalized features. Exactly 1 iff
/// the signatures coincide under the context; always in (0, 1].
pub fn distance_similarity(
    a: &Signature,
    b: &Signature,
    metric: DistanceMetric,
    norm: &NormContext,
) -> Result<f64> {
    check_comparable(a, b)?;
    let na = norm.normalize(a)?;
    let nb = norm.normalize(b)?;
    Ok(1.0 / (1.0 + raw_distance(metric, &na, &nb)))
}

/// Square pairwise-similarity matrix over an ordered instance list.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub ids: Vec<NodeId>,
    pub metric: SimilarityMetric,
    pub schema: String,
    pub values: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Compute the pairwise similarity matrix of a set of instances. For the
/// distance metrics the normalization context is built over exactly this
/// instance set. Extraction and zero-vector failures are annotated with the
/// offending instance id.
pub fn similarity_matrix(
    store: &GraphStore,
    instances: &[NodeId],
    metric: SimilarityMetric,
    registry: &SchemaRegistry,
    schema: &str,
) -> Result<SimilarityMatrix> {
    if instances.len() < 2 {
        return Err(Error::EmptyInput);
    }
    let signatures: Vec<Signature> = instances
        .iter()
        .map(|id| {
            signature_of(store, id, registry, schema)
                .map_err(|e| Error::at_instance(id.clone(), e))
        })
        .collect::<Result<_>>()?;

    let n = signatures.len();
    let mut values = alloc::vec![alloc::vec![0.0; n]; n];
    match metric.distance() {
        None => {
            // Cosine needs every vector nonzero; report the culprit, not the pair.
            for (id, sig) in instances.iter().zip(&signatures) {
                if sig.values().all(|v| v == 0.0) {
                    return Err(Error::at_instance(id.clone(), Error::ZeroVector));
                }
            }
            for i in 0..n {
                values[i][i] = 1.0;
                for j in (i + 1)..n {
                    let s = cosine_similarity(&signatures[i], &signatures[j])?;
                    values[i][j] = s;
                    values[j][i] = s;
                }
            }
        }
        Some(distance) => {
            let norm = build_norm_context(&signatures)?;
            let normalized: Vec<Vec<f64>> = signatures
                .iter()
                .map(|s| norm.normalize(s))
                .collect::<Result<_>>()?;
            for i in 0..n {
                values[i][i] = 1.0;
                for j in (i + 1)..n {
                    let s = 1.0 / (1.0 + raw_distance(distance, &normalized[i], &normalized[j]));
                    values[i][j] = s;
                    values[j][i] = s;
                }
            }
        }
    }
    Ok(SimilarityMatrix {
        ids: instances.to_vec(),
        metric,
        schema: schema.to_string(),
        values,
    })
}

/// Rank a campaign's instances by similarity to a target signature.
///
/// Instances without an extractable signature are skipped; if none has one,
/// the campaign is unsigned and `NoSignatures` is returned. For distance
/// metrics the normalization context covers the target plus all signed
/// instances. Results are sorted by similarity descending, ties broken by id
/// ascending, truncated to `top_k`.
pub fn find_similar(
    store: &GraphStore,
    target: &Signature,
    campaign: &NodeId,
    metric: SimilarityMetric,
    registry: &SchemaRegistry,
    top_k: usize,
) -> Result<Vec<(NodeId, f64)>> {
    if top_k == 0 {
        return Err(Error::InvalidParams("top_k must be at least 1".to_string()));
    }
    let mut signed: Vec<(NodeId, Signature)> = Vec::new();
    for id in campaign_instances(store, campaign)? {
        if let Ok(sig) = signature_of(store, &id, registry, target.schema()) {
            signed.push((id, sig));
        }
    }
    if signed.is_empty() {
        return Err(Error::NoSignatures);
    }

    let mut scored: Vec<(NodeId, f64)> = match metric.distance() {
        None => signed
            .iter()
            .map(|(id, sig)| {
                cosine_similarity(target, sig)
                    .map(|s| (id.clone(), s))
                    .map_err(|e| Error::at_instance(id.clone(), e))
            })
            .collect::<Result<_>>()?,
        Some(distance) => {
            let mut all: Vec<Signature> =
                signed.iter().map(|(_, sig)| sig.clone()).collect();
            all.push(target.clone());
            let norm = build_norm_context(&all)?;
            signed
                .iter()
                .map(|(id, sig)| {
                    distance_similarity(target, sig, distance, &norm)
                        .map(|s| (id.clone(), s))
                        .map_err(|e| Error::at_instance(id.clone(), e))
                })
                .collect::<Result<_>>()?
        }
    };
    scored.sort_by(|(id_a, sim_a), (id_b, sim_b)| {
        sim_b.total_cmp(sim_a).then_with(|| id_a.cmp(id_b))
    });
    scored.truncate(top_k);
    Ok(scored)
}
