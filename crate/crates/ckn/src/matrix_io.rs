//! Similarity-matrix file formats: a commented TSV for numbers and a plain
//! PGM (P2) heatmap for eyes.
//!
//! TSV layout — commented metadata, a header row of instance ids, then one
//! row per instance:
//!
//! ```text
//! # metric=euclidean
//! # schema=gray-scott-v1
//! # norm=minmax
//! id<TAB>a<TAB>b
//! a<TAB>1<TAB>0.72
//! b<TAB>0.72<TAB>1
//! ```
//!
//! The heatmap maps the matrix linearly onto 0..=255 gray levels, darker =
//! less similar; a constant matrix renders fully bright.

use std::path::Path;
use std::str::FromStr;

use ckn_core::{NodeId, SimilarityMatrix, SimilarityMetric};

use crate::error::{Error, Result};

pub fn matrix_to_tsv(matrix: &SimilarityMatrix) -> String {
    let mut out = String::new();
    out.push_str(&format!("# metric={}\n", matrix.metric.as_str()));
    out.push_str(&format!("# schema={}\n", matrix.schema));
    out.push_str(&format!("# norm={}\n", matrix.metric.norm_label()));
    out.push_str("id");
    for id in &matrix.ids {
        out.push('\t');
        out.push_str(id.as_str());
    }
    out.push('\n');
    for (id, row) in matrix.ids.iter().zip(&matrix.values) {
        out.push_str(id.as_str());
        for value in row {
            out.push_str(&format!("\t{value}"));
        }
        out.push('\n');
    }
    out
}

pub fn parse_matrix_tsv(text: &str, path: &Path) -> Result<SimilarityMatrix> {
    let bad = |message: String| Error::format(path, message);

    let mut metric = None;
    let mut schema = None;
    let mut norm = None;
    let mut rows = Vec::new();
    let mut ids: Option<Vec<NodeId>> = None;

    for (number, line) in text.lines().enumerate() {
        let position = number + 1;
        if let Some(comment) = line.strip_prefix('#') {
            match comment.trim().split_once('=') {
                Some(("metric", v)) => {
                    metric = Some(SimilarityMetric::from_str(v).map_err(|_| {
                        bad(format!("line {position}: unknown metric {v:?}"))
                    })?);
                }
                Some(("schema", v)) => schema = Some(v.to_string()),
                Some(("norm", v)) => norm = Some(v.to_string()),
                _ => {} // unknown comments are fine
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut cells = line.split('\t');
        let first = cells.next().unwrap_or_default();
        match &ids {
            None => {
                if first != "id" {
                    return Err(bad(format!("line {position}: expected header row, got {first:?}")));
                }
                ids = Some(cells.map(NodeId::new).collect());
            }
            Some(ids) => {
                let row_index = rows.len();
                let expected = ids.get(row_index).map(NodeId::as_str).unwrap_or_default();
                if first != expected {
                    return Err(bad(format!(
                        "line {position}: row label {first:?} does not match column {expected:?}"
                    )));
                }
                let row: Vec<f64> = cells
                    .map(|cell| {
                        cell.parse().map_err(|_| {
                            bad(format!("line {position}: bad value {cell:?}"))
                        })
                    })
                    .collect::<Result<_>>()?;
                if row.len() != ids.len() {
                    return Err(bad(format!(
                        "line {position}: expected {} values, got {}",
                        ids.len(),
                        row.len()
                    )));
                }
                rows.push(row);
            }
        }
    }

    let ids = ids.ok_or_else(|| bad("missing header row".into()))?;
    if rows.len() != ids.len() {
        return Err(bad(format!("expected {} rows, got {}", ids.len(), rows.len())));
    }
    let metric = metric.ok_or_else(|| bad("missing '# metric=' comment".into()))?;
    let schema = schema.ok_or_else(|| bad("missing '# schema=' comment".into()))?;
    let norm = norm.ok_or_else(|| bad("missing '# norm=' comment".into()))?;
    if norm != metric.norm_label() {
        return Err(bad(format!(
            "norm {norm:?} contradicts metric {} (expects {:?})",
            metric.as_str(),
            metric.norm_label()
        )));
    }
    Ok(SimilarityMatrix { ids, metric, schema, values: rows })
}

/// Render the matrix as a PGM (P2) grayscale image, one pixel per pair.
pub fn matrix_to_pgm(matrix: &SimilarityMatrix) -> String {
    let n = matrix.len();
    let flat: Vec<f64> = matrix.values.iter().flatten().copied().collect();
    let min = flat.iter().copied().fold(f64::INFINITY, f64::min);
    let max = flat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = |v: f64| -> u8 {
        if max > min { (((v - min) / (max - min)) * 255.0).round() as u8 } else { 255 }
    };
    let mut out = String::new();
    out.push_str("P2\n");
    out.push_str(&format!(
        "# similarity heatmap: metric={} schema={}\n",
        matrix.metric.as_str(),
        matrix.schema
    ));
    out.push_str(&format!("{n} {n}\n255\n"));
    for row in &matrix.values {
        let pixels: Vec<String> = row.iter().map(|&v| scale(v).to_string()).collect();
        out.push_str(&pixels.join(" "));
        out.push('\n');
    }
    out
}
