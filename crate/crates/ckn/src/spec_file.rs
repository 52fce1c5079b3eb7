//! Campaign specification files.
//!
//! A spec is a UTF-8 JSON document:
//!
//! ```json
//! {
//!   "campaign": "gs-exploration",
//!   "owner": "alice",
//!   "sweep_groups": [
//!     {
//!       "name": "coarse-grid",
//!       "researcher": "bob",
//!       "parameters": { "F": [0.01, 0.02], "k": ["0.05"] }
//!     }
//!   ]
//! }
//! ```
//!
//! Parameter order inside `parameters` is meaningful (it fixes sweep ids and
//! enumeration order), so objects are read in document order. Values may be
//! JSON strings, numbers, or booleans; they are stored as strings verbatim
//! (numbers via their canonical JSON rendering). Unknown fields are ignored.

use std::fs;
use std::path::Path;

use ckn_core::{CampaignSpec, SweepGroupSpec};
use serde_json::Value;

use crate::error::{Error, Result};

pub fn read_spec(path: &Path) -> Result<CampaignSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spec(&text, path)
}

pub fn parse_spec(text: &str, path: &Path) -> Result<CampaignSpec> {
    let bad = |message: String| Error::format(path, message);
    let root: Value =
        serde_json::from_str(text).map_err(|e| bad(format!("invalid JSON: {e}")))?;
    let root = root.as_object().ok_or_else(|| bad("top level must be an object".into()))?;

    let campaign = string_field(root, "campaign").map_err(&bad)?;
    let owner = string_field(root, "owner").map_err(&bad)?;
    let groups = root
        .get("sweep_groups")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("missing array field \"sweep_groups\"".into()))?;

    let mut sweep_groups = Vec::new();
    for (index, group) in groups.iter().enumerate() {
        let group = group
            .as_object()
            .ok_or_else(|| bad(format!("sweep_groups[{index}] must be an object")))?;
        let name = string_field(group, "name")
            .map_err(|m| bad(format!("sweep_groups[{index}]: {m}")))?;
        let researcher = string_field(group, "researcher")
            .map_err(|m| bad(format!("sweep_groups[{index}]: {m}")))?;
        let parameters = group
            .get("parameters")
            .and_then(Value::as_object)
            .ok_or_else(|| bad(format!("sweep_groups[{index}]: missing object field \"parameters\"")))?;

        let mut ordered = Vec::new();
        for (param, values) in parameters {
            let values = values.as_array().ok_or_else(|| {
                bad(format!("parameter {param:?} in group {name:?} must list its values"))
            })?;
            let mut rendered = Vec::new();
            for value in values {
                rendered.push(scalar_to_string(value).ok_or_else(|| {
                    bad(format!("parameter {param:?} in group {name:?} has a non-scalar value"))
                })?);
            }
            ordered.push((param.clone(), rendered));
        }
        sweep_groups.push(SweepGroupSpec { name, researcher, parameters: ordered });
    }

    Ok(CampaignSpec { name: campaign, owner, sweep_groups })
}

/// Render a campaign spec back to its JSON file form, preserving parameter
/// order. Inverse of [`parse_spec`] up to value formatting (all values are
/// written as strings).
pub fn spec_to_json(spec: &CampaignSpec) -> String {
    let mut root = serde_json::Map::new();
    root.insert("campaign".into(), Value::String(spec.name.clone()));
    root.insert("owner".into(), Value::String(spec.owner.clone()));
    let groups: Vec<Value> = spec
        .sweep_groups
        .iter()
        .map(|group| {
            let mut g = serde_json::Map::new();
            g.insert("name".into(), Value::String(group.name.clone()));
            g.insert("researcher".into(), Value::String(group.researcher.clone()));
            let mut params = serde_json::Map::new();
            for (name, values) in &group.parameters {
                params.insert(
                    name.clone(),
                    Value::Array(values.iter().cloned().map(Value::String).collect()),
                );
            }
            g.insert("parameters".into(), Value::Object(params));
            Value::Object(g)
        })
        .collect();
    root.insert("sweep_groups".into(), Value::Array(groups));
    let mut text = serde_json::to_string_pretty(&Value::Object(root)).expect("spec serializes");
    text.push('\n');
    text
}

fn string_field(
    object: &serde_json::Map<String, Value>,
    key: &str,
) -> std::result::Result<String, String> {
    object
        .get(key)
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| format!("missing string field {key:?}"))
}

fn scalar_to_string(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}
