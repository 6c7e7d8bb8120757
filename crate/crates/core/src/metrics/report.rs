//! Metric report types and their canonical output representation.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use super::taxonomy::TaxonomyCode;
use super::{catalogue, MetricError};
use crate::ingest::FORMAT_VERSION;
use crate::json::{parse_real, real, to_canonical_bytes};
use crate::model::MetricParams;

/// A metric value: boolean, count, real (possibly infinite) or undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    Real(f64),
    Null,
}

impl Scalar {
    /// Numeric view used for aggregation; booleans map to 0/1.
    pub fn as_f64(self) -> Option<f64> {
        match self {
            Scalar::Bool(b) => Some(if b { 1.0 } else { 0.0 }),
            Scalar::Int(i) => Some(i as f64),
            Scalar::Real(r) => Some(r),
            Scalar::Null => None,
        }
    }

    pub fn is_null(self) -> bool {
        matches!(self, Scalar::Null)
    }

    fn to_value(self) -> Value {
        match self {
            Scalar::Bool(b) => Value::Bool(b),
            Scalar::Int(i) => Value::from(i),
            Scalar::Real(r) => real(r),
            Scalar::Null => Value::Null,
        }
    }

    fn from_value(v: &Value) -> Option<Scalar> {
        match v {
            Value::Null => Some(Scalar::Null),
            Value::Bool(b) => Some(Scalar::Bool(*b)),
            Value::Number(n) if n.is_i64() => n.as_i64().map(Scalar::Int),
            other => parse_real(other).map(Scalar::Real),
        }
    }
}

impl From<bool> for Scalar {
    fn from(b: bool) -> Self {
        Scalar::Bool(b)
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Real(v)
    }
}

impl From<Option<f64>> for Scalar {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Scalar::Null, Scalar::Real)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricValue {
    pub name: String,
    pub value: Scalar,
    pub unit: String,
    pub code: TaxonomyCode,
    /// Parameters the value depends on, echoed for reporting.
    pub params_used: BTreeMap<String, Value>,
}

/// Per-timestep metric values.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSeries {
    pub name: String,
    pub unit: String,
    pub timeline: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub episode_id: String,
    pub params: MetricParams,
    pub taskwise: BTreeMap<String, MetricValue>,
    pub stepwise: Option<BTreeMap<String, StepSeries>>,
}

impl MetricReport {
    pub fn get(&self, name: &str) -> Option<Scalar> {
        self.taskwise.get(name).map(|m| m.value)
    }

    pub fn to_value(&self) -> Value {
        let metrics: Map<String, Value> = self
            .taskwise
            .iter()
            .map(|(k, m)| {
                (
                    k.clone(),
                    json!({
                        "value": m.value.to_value(),
                        "unit": m.unit,
                        "code": m.code.to_string(),
                        "params_used": Value::Object(m.params_used.clone().into_iter().collect()),
                    }),
                )
            })
            .collect();
        let stepwise: Map<String, Value> = self
            .stepwise
            .iter()
            .flatten()
            .map(|(k, s)| {
                (
                    k.clone(),
                    json!({
                        "t": s.timeline.iter().map(|&t| real(t)).collect::<Vec<_>>(),
                        "v": s.values.iter().map(|&v| real(v)).collect::<Vec<_>>(),
                    }),
                )
            })
            .collect();
        let mut doc = Map::new();
        doc.insert("format_version".into(), FORMAT_VERSION.into());
        doc.insert("episode_id".into(), self.episode_id.clone().into());
        doc.insert(
            "params".into(),
            serde_json::to_value(&self.params).expect("params serialize"),
        );
        doc.insert("metrics".into(), Value::Object(metrics));
        if self.stepwise.is_some() {
            doc.insert("stepwise".into(), Value::Object(stepwise));
        }
        Value::Object(doc)
    }

    /// Canonical output bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        to_canonical_bytes(&self.to_value())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, MetricError> {
        let v: Value =
            serde_json::from_slice(bytes).map_err(|e| MetricError::BadReport(e.to_string()))?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self, MetricError> {
        let bad = |m: &str| MetricError::BadReport(m.to_string());
        let episode_id = v
            .get("episode_id")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("missing episode_id"))?
            .to_string();
        let params: MetricParams = serde_json::from_value(
            v.get("params")
                .cloned()
                .ok_or_else(|| bad("missing params"))?,
        )
        .map_err(|e| MetricError::BadReport(format!("params: {e}")))?;
        let metrics = v
            .get("metrics")
            .and_then(Value::as_object)
            .ok_or_else(|| bad("missing metrics"))?;
        let mut taskwise = BTreeMap::new();
        for (name, m) in metrics {
            let value = m
                .get("value")
                .and_then(Scalar::from_value)
                .ok_or_else(|| MetricError::BadReport(format!("metric {name}: bad value")))?;
            let unit = m
                .get("unit")
                .and_then(Value::as_str)
                .ok_or_else(|| MetricError::BadReport(format!("metric {name}: missing unit")))?
                .to_string();
            let code = m
                .get("code")
                .and_then(Value::as_str)
                .ok_or_else(|| MetricError::BadReport(format!("metric {name}: missing code")))?
                .parse::<TaxonomyCode>()
                .map_err(|e| MetricError::BadReport(e.to_string()))?;
            let params_used = m
                .get("params_used")
                .and_then(Value::as_object)
                .map(|o| o.clone().into_iter().collect())
                .unwrap_or_default();
            taskwise.insert(
                name.clone(),
                MetricValue {
                    name: name.clone(),
                    value,
                    unit,
                    code,
                    params_used,
                },
            );
        }
        let stepwise = match v.get("stepwise").and_then(Value::as_object) {
            None => None,
            Some(obj) => {
                let mut out = BTreeMap::new();
                for (name, s) in obj {
                    let series = |key: &str| -> Result<Vec<f64>, MetricError> {
                        s.get(key)
                            .and_then(Value::as_array)
                            .ok_or_else(|| {
                                MetricError::BadReport(format!("stepwise {name}: missing {key}"))
                            })?
                            .iter()
                            .map(|x| {
                                parse_real(x).ok_or_else(|| {
                                    MetricError::BadReport(format!("stepwise {name}: bad number"))
                                })
                            })
                            .collect()
                    };
                    let timeline = series("t")?;
                    let values = series("v")?;
                    if timeline.len() != values.len() {
                        return Err(MetricError::BadReport(format!(
                            "stepwise {name}: t and v lengths differ"
                        )));
                    }
                    out.insert(
                        name.clone(),
                        StepSeries {
                            name: name.clone(),
                            unit: catalogue::step_unit(name).to_string(),
                            timeline,
                            values,
                        },
                    );
                }
                Some(out)
            }
        };
        Ok(MetricReport {
            episode_id,
            params,
            taskwise,
            stepwise,
        })
    }
}
