//! Structural check of metric report documents.

use serde_json::Value;

use crate::ingest::{Severity, ValidationIssue, FORMAT_VERSION};
use crate::json::parse_real;
use crate::metrics::TASKWISE;
use crate::model::MetricParams;

fn error(path: impl Into<String>, message: impl Into<String>) -> ValidationIssue {
    ValidationIssue {
        severity: Severity::Error,
        path: path.into(),
        message: message.into(),
    }
}

fn exact_keys(
    obj: &serde_json::Map<String, Value>,
    path: &str,
    required: &[&str],
    optional: &[&str],
) -> Vec<ValidationIssue> {
    let mut out: Vec<_> = required
        .iter()
        .filter(|k| !obj.contains_key(**k))
        .map(|k| error(format!("{path}/{k}"), "missing"))
        .collect();
    out.extend(
        obj.keys()
            .filter(|k| !required.contains(&k.as_str()) && !optional.contains(&k.as_str()))
            .map(|k| error(format!("{path}/{k}"), "unexpected key")),
    );
    out
}

fn is_metric_value(v: &Value) -> bool {
    matches!(v, Value::Null | Value::Bool(_)) || parse_real(v).is_some()
}

/// Checks a report document against the output schema: every catalogue
/// metric present with its unit and taxonomy code, effective parameters
/// echoed, and well-formed stepwise series. An empty result means valid.
pub fn validate_report(document: &[u8]) -> Vec<ValidationIssue> {
    let doc: Value = match serde_json::from_slice(document) {
        Ok(v) => v,
        Err(e) => return vec![error("", format!("malformed document: {e}"))],
    };
    let Some(obj) = doc.as_object() else {
        return vec![error("", "document must be an object")];
    };
    let mut out = exact_keys(
        obj,
        "",
        &["format_version", "episode_id", "params", "metrics"],
        &["stepwise"],
    );
    if obj
        .get("format_version")
        .is_some_and(|v| v != FORMAT_VERSION)
    {
        out.push(error(
            "/format_version",
            format!("expected \"{FORMAT_VERSION}\""),
        ));
    }
    if obj.get("episode_id").is_some_and(|v| !v.is_string()) {
        out.push(error("/episode_id", "must be a string"));
    }
    if let Some(p) = obj.get("params") {
        if let Err(e) = serde_json::from_value::<MetricParams>(p.clone()) {
            out.push(error("/params", e.to_string()));
        }
    }
    match obj.get("metrics").map(Value::as_object) {
        Some(Some(metrics)) => {
            for spec in &TASKWISE {
                if !metrics.contains_key(spec.key) {
                    out.push(error(format!("/metrics/{}", spec.key), "missing"));
                }
            }
            for (name, m) in metrics {
                let path = format!("/metrics/{name}");
                let Some(spec) = TASKWISE.iter().find(|s| s.key == name) else {
                    out.push(error(path, "unknown metric"));
                    continue;
                };
                let Some(m) = m.as_object() else {
                    out.push(error(path, "must be an object"));
                    continue;
                };
                out.extend(exact_keys(
                    m,
                    &path,
                    &["value", "unit", "code", "params_used"],
                    &[],
                ));
                if m.get("value").is_some_and(|v| !is_metric_value(v)) {
                    out.push(error(format!("{path}/value"), "not a metric value"));
                }
                if m.get("unit").is_some_and(|v| v != spec.unit) {
                    out.push(error(
                        format!("{path}/unit"),
                        format!("expected \"{}\"", spec.unit),
                    ));
                }
                let code = spec.code.to_string();
                if m.get("code").is_some_and(|v| *v != *code) {
                    out.push(error(
                        format!("{path}/code"),
                        format!("expected \"{code}\""),
                    ));
                }
                if m.get("params_used").is_some_and(|v| !v.is_object()) {
                    out.push(error(format!("{path}/params_used"), "must be an object"));
                }
            }
        }
        Some(None) => out.push(error("/metrics", "must be an object")),
        None => {}
    }
    if let Some(step) = obj.get("stepwise") {
        let Some(step) = step.as_object() else {
            out.push(error("/stepwise", "must be an object"));
            return out;
        };
        for (name, s) in step {
            let path = format!("/stepwise/{name}");
            let series = |k: &str| {
                s.get(k)
                    .and_then(Value::as_array)
                    .filter(|a| a.iter().all(|x| parse_real(x).is_some()))
                    .map(Vec::len)
            };
            match (series("t"), series("v")) {
                (Some(a), Some(b)) if a == b => {}
                (Some(_), Some(_)) => out.push(error(path, "t and v lengths differ")),
                _ => out.push(error(path, "t and v must be arrays of numbers")),
            }
        }
    }
    out
}
