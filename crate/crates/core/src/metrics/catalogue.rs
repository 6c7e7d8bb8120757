//! Names, units and taxonomy codes of every taskwise metric in the suite.

use super::taxonomy::TaxonomyCode;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSpec {
    pub key: &'static str,
    pub unit: &'static str,
    pub code: TaxonomyCode,
}

const fn nht(key: &'static str, unit: &'static str) -> MetricSpec {
    MetricSpec {
        key,
        unit,
        code: TaxonomyCode::NHT,
    }
}

const fn sht(key: &'static str, unit: &'static str) -> MetricSpec {
    MetricSpec {
        key,
        unit,
        code: TaxonomyCode::SHT,
    }
}

/// The full taskwise suite, in table order.
pub const TASKWISE: [MetricSpec; 26] = [
    nht("S", "boolean"),
    nht("C", "collision"),
    nht("WC", "collision"),
    nht("AC", "collision"),
    nht("HC", "collision"),
    nht("TO", "boolean"),
    nht("FP", "failure"),
    nht("ST", "s"),
    nht("T", "s"),
    nht("PL", "m"),
    nht("SPL", "success"),
    sht("V_min", "m/s"),
    sht("V_avg", "m/s"),
    sht("V_max", "m/s"),
    sht("A_min", "m/s^2"),
    sht("A_avg", "m/s^2"),
    sht("A_max", "m/s^2"),
    sht("J_min", "m/s^3"),
    sht("J_avg", "m/s^3"),
    sht("J_max", "m/s^3"),
    sht("CD_min", "m"),
    sht("CD_avg", "m"),
    sht("SC", "ratio"),
    sht("DH_min", "m"),
    sht("TTC", "s"),
    sht("AT", "s"),
];

pub fn spec(key: &str) -> Option<&'static MetricSpec> {
    TASKWISE.iter().find(|m| m.key == key)
}

/// Unit of a stepwise series by name.
pub fn step_unit(name: &str) -> &'static str {
    match name {
        "V" => "m/s",
        "A" => "m/s^2",
        "J" => "m/s^3",
        "CD" | "DH" | "DG" => "m",
        "TTC" => "s",
        "SC" => "ratio",
        "PZ" => "zone",
        _ => "",
    }
}
