//! Corpus summaries and policy comparison tables.
//!
//! Summaries are computed from the sorted finite values of each metric, so
//! they do not depend on report order. Null and infinite values never enter
//! the moments or the histogram; they are counted in the overflow buckets.

mod schema;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::ingest::FORMAT_VERSION;
use crate::json::to_canonical_bytes;
use crate::metrics::{MetricReport, Scalar};
use crate::model::MetricParams;

pub use schema::validate_report;

pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("no reports to summarize")]
    EmptyCorpus,
    #[error("bin count must be at least 1")]
    NoBins,
    #[error("report `{0}` was computed with different metric parameters")]
    MixedParams(String),
    #[error("malformed summary: {0}")]
    BadSummary(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` edges; the last bin is closed on the right.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Moments and histogram of the finite values of one metric. The statistics
/// are null when no value is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub mean: Option<f64>,
    /// Sample standard deviation; 0 for a single value.
    pub std: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub median: Option<f64>,
    pub histogram: Histogram,
    pub n: u64,
    pub n_excluded: u64,
}

/// Values left out of a distribution, by kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Overflow {
    pub null: u64,
    #[serde(rename = "+inf")]
    pub pos_inf: u64,
    #[serde(rename = "-inf")]
    pub neg_inf: u64,
}

impl Overflow {
    pub fn total(&self) -> u64 {
        self.null + self.pos_inf + self.neg_inf
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub unit: String,
    pub code: String,
    pub params_used: BTreeMap<String, Value>,
    pub distribution: Distribution,
    pub overflow: Overflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub format_version: String,
    pub n_reports: u64,
    pub params: MetricParams,
    /// Mean of `S` over reports where it is defined.
    pub success_rate: Option<f64>,
    /// Mean of `C` over reports where it is defined.
    pub collision_rate: Option<f64>,
    pub metrics: BTreeMap<String, MetricSummary>,
}

impl CorpusSummary {
    pub fn to_bytes(&self) -> Vec<u8> {
        to_canonical_bytes(&serde_json::to_value(self).expect("summary serializes"))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ReportError> {
        serde_json::from_slice(bytes).map_err(|e| ReportError::BadSummary(e.to_string()))
    }
}

/// Statistics of `values`, which may hold nulls and infinities.
pub fn distribution(
    values: &[Option<f64>],
    bins: usize,
) -> Result<(Distribution, Overflow), ReportError> {
    if bins == 0 {
        return Err(ReportError::NoBins);
    }
    let mut overflow = Overflow::default();
    let mut finite = Vec::with_capacity(values.len());
    for v in values {
        match v {
            None => overflow.null += 1,
            Some(x) if x.is_nan() => overflow.null += 1,
            Some(x) if *x == f64::INFINITY => overflow.pos_inf += 1,
            Some(x) if *x == f64::NEG_INFINITY => overflow.neg_inf += 1,
            Some(x) => finite.push(*x),
        }
    }
    finite.sort_by(f64::total_cmp);
    let n = finite.len();
    let empty = Distribution {
        mean: None,
        std: None,
        min: None,
        max: None,
        median: None,
        histogram: Histogram {
            edges: Vec::new(),
            counts: Vec::new(),
        },
        n: 0,
        n_excluded: overflow.total(),
    };
    if n == 0 {
        return Ok((empty, overflow));
    }
    let mean = finite.iter().sum::<f64>() / n as f64;
    let std = if n < 2 {
        0.0
    } else {
        (finite.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    let (lo, hi) = (finite[0], finite[n - 1]);
    let median = if n % 2 == 1 {
        finite[n / 2]
    } else {
        0.5 * (finite[n / 2 - 1] + finite[n / 2])
    };
    Ok((
        Distribution {
            mean: Some(mean),
            std: Some(std),
            min: Some(lo),
            max: Some(hi),
            median: Some(median),
            histogram: histogram(&finite, lo, hi, bins),
            n: n as u64,
            n_excluded: overflow.total(),
        },
        overflow,
    ))
}

/// Equal-width bins over `[lo, hi]`; a single bin when the range is empty.
fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Histogram {
    let width = hi - lo;
    if !(width > 0.0) || !width.is_finite() {
        return Histogram {
            edges: vec![lo, hi],
            counts: vec![values.len() as u64],
        };
    }
    let mut edges: Vec<f64> = (0..bins)
        .map(|i| lo + width * i as f64 / bins as f64)
        .collect();
    edges.push(hi);
    let mut counts = vec![0u64; bins];
    for &x in values {
        let i = (((x - lo) / width) * bins as f64).floor() as usize;
        counts[i.min(bins - 1)] += 1;
    }
    Histogram { edges, counts }
}

fn scalar_value(s: Scalar) -> Option<f64> {
    s.as_f64()
}

/// Summarizes the taskwise metrics of `reports`. All reports must share the
/// same metric parameters.
pub fn summarize(reports: &[MetricReport], bins: usize) -> Result<CorpusSummary, ReportError> {
    let first = reports.first().ok_or(ReportError::EmptyCorpus)?;
    if bins == 0 {
        return Err(ReportError::NoBins);
    }
    if let Some(r) = reports.iter().find(|r| r.params != first.params) {
        return Err(ReportError::MixedParams(r.episode_id.clone()));
    }
    let keys: BTreeSet<&str> = reports
        .iter()
        .flat_map(|r| r.taskwise.keys().map(String::as_str))
        .collect();
    let keys: Vec<&str> = keys.into_iter().collect();
    let metrics = keys
        .par_iter()
        .map(|&key| {
            let values: Vec<Option<f64>> = reports
                .iter()
                .map(|r| r.get(key).and_then(scalar_value))
                .collect();
            let template = reports
                .iter()
                .find_map(|r| r.taskwise.get(key))
                .expect("key comes from some report");
            let (distribution, overflow) = distribution(&values, bins)?;
            Ok((
                key.to_string(),
                MetricSummary {
                    unit: template.unit.clone(),
                    code: template.code.to_string(),
                    params_used: template.params_used.clone(),
                    distribution,
                    overflow,
                },
            ))
        })
        .collect::<Result<BTreeMap<_, _>, ReportError>>()?;
    let rate = |key: &str| {
        metrics
            .get(key)
            .and_then(|m: &MetricSummary| m.distribution.mean)
    };
    Ok(CorpusSummary {
        format_version: FORMAT_VERSION.into(),
        n_reports: reports.len() as u64,
        params: first.params.clone(),
        success_rate: rate("S"),
        collision_rate: rate("C"),
        metrics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n: u64,
    pub n_excluded: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRow {
    pub n_reports: u64,
    pub success_rate: Option<f64>,
    pub collision_rate: Option<f64>,
    pub metrics: BTreeMap<String, Cell>,
}

/// `policy`'s mean lies outside `reference`'s mean plus or minus one std.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub metric: String,
    pub policy: String,
    pub reference: String,
    pub mean: f64,
    pub reference_mean: f64,
    pub reference_std: f64,
}

pub const COMPARISON_NOTE: &str =
    "descriptive comparison only: a flag means one policy's mean lies outside another's mean +/- 1 std; no statistical test was performed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub format_version: String,
    pub note: String,
    pub metrics: Vec<String>,
    pub policies: BTreeMap<String, PolicyRow>,
    pub flags: Vec<Flag>,
}

impl ComparisonTable {
    pub fn to_bytes(&self) -> Vec<u8> {
        to_canonical_bytes(&serde_json::to_value(self).expect("table serializes"))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ReportError> {
        serde_json::from_slice(bytes).map_err(|e| ReportError::BadSummary(e.to_string()))
    }

    pub fn mean(&self, policy: &str, metric: &str) -> Option<f64> {
        self.policies.get(policy)?.metrics.get(metric)?.mean
    }
}

/// Side-by-side table of the summaries, keyed by policy name.
pub fn compare(summaries: &BTreeMap<String, CorpusSummary>) -> ComparisonTable {
    let metrics: BTreeSet<&String> = summaries.values().flat_map(|s| s.metrics.keys()).collect();
    let policies: BTreeMap<String, PolicyRow> = summaries
        .iter()
        .map(|(name, s)| {
            let cells = s
                .metrics
                .iter()
                .map(|(k, m)| {
                    let d = &m.distribution;
                    (
                        k.clone(),
                        Cell {
                            mean: d.mean,
                            std: d.std,
                            n: d.n,
                            n_excluded: d.n_excluded,
                        },
                    )
                })
                .collect();
            (
                name.clone(),
                PolicyRow {
                    n_reports: s.n_reports,
                    success_rate: s.success_rate,
                    collision_rate: s.collision_rate,
                    metrics: cells,
                },
            )
        })
        .collect();
    let mut flags = Vec::new();
    for metric in &metrics {
        for (p, prow) in &policies {
            for (r, rrow) in &policies {
                if p == r {
                    continue;
                }
                let (Some(pc), Some(rc)) = (prow.metrics.get(*metric), rrow.metrics.get(*metric))
                else {
                    continue;
                };
                let (Some(mean), Some(rmean), Some(rstd)) = (pc.mean, rc.mean, rc.std) else {
                    continue;
                };
                if (mean - rmean).abs() > rstd {
                    flags.push(Flag {
                        metric: (*metric).clone(),
                        policy: p.clone(),
                        reference: r.clone(),
                        mean,
                        reference_mean: rmean,
                        reference_std: rstd,
                    });
                }
            }
        }
    }
    ComparisonTable {
        format_version: FORMAT_VERSION.into(),
        note: COMPARISON_NOTE.into(),
        metrics: metrics.into_iter().cloned().collect(),
        policies,
        flags,
    }
}
