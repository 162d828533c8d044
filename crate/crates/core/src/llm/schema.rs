// SPDX-License-Identifier: Apache-2.0

//! Reply extraction and per-stage document shapes.

use serde_json::Value;

pub const SCHEMAS: &[&str] = &["module_spec.v1", "items.v1", "assertions.v1"];

/// The JSON inside the reply's single fenced block. Anything but
/// whitespace outside the fence is rejected.
pub fn extract_fenced_json(text: &str) -> Result<Value, String> {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else { return Err("reply is not a fenced block".into()) };
    let Some(body) = rest.strip_suffix("```") else { return Err("unterminated fenced block".into()) };
    let (info, body) = body.split_once('\n').unwrap_or(("", body));
    if !matches!(info.trim(), "" | "json") {
        return Err(format!("fence language `{}` is not json", info.trim()));
    }
    if body.contains("```") {
        return Err("more than one fenced block".into());
    }
    serde_json::from_str(body).map_err(|e| format!("invalid JSON: {e}"))
}

fn field<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Value, String> {
    v.get(key).ok_or_else(|| format!("missing `{path}{key}`"))
}

fn string(v: &Value, key: &str, path: &str, non_empty: bool) -> Result<(), String> {
    match field(v, key, path)?.as_str() {
        Some(s) if non_empty && s.trim().is_empty() => Err(format!("`{path}{key}` is empty")),
        Some(_) => Ok(()),
        None => Err(format!("`{path}{key}` must be a string")),
    }
}

fn array<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Vec<Value>, String> {
    field(v, key, path)?.as_array().ok_or_else(|| format!("`{path}{key}` must be an array"))
}

fn strings(v: &Value, key: &str, path: &str) -> Result<(), String> {
    for (i, s) in array(v, key, path)?.iter().enumerate() {
        if !s.is_string() {
            return Err(format!("`{path}{key}[{i}]` must be a string"));
        }
    }
    Ok(())
}

/// Structural check of `v` against schema `id`.
pub fn check_schema(id: &str, v: &Value) -> Result<(), String> {
    if !v.is_object() {
        return Err("top level must be an object".into());
    }
    string(v, "module", "", true)?;
    match id {
        "module_spec.v1" => {
            string(v, "overview", "", true)?;
            for (i, p) in array(v, "port_behaviors", "")?.iter().enumerate() {
                let path = format!("port_behaviors[{i}].");
                string(p, "port", &path, true)?;
                string(p, "behavior", &path, true)?;
            }
            strings(v, "assumptions", "")?;
        }
        "items.v1" => {
            for (i, it) in array(v, "items", "")?.iter().enumerate() {
                let path = format!("items[{i}].");
                string(it, "condition", &path, true)?;
                string(it, "expected", &path, true)?;
                strings(it, "referenced_signals", &path)?;
            }
        }
        "assertions.v1" => {
            for (i, a) in array(v, "assertions", "")?.iter().enumerate() {
                let path = format!("assertions[{i}].");
                strings(a, "item_ids", &path)?;
                string(a, "sva", &path, true)?;
            }
        }
        other => return Err(format!("unknown schema `{other}`")),
    }
    Ok(())
}
