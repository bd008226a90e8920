//! Standalone REF computation from a metrics file: named designs with
//! linear-unit metrics, compared against one baseline under a benefit/cost
//! partition.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;
use serde::Deserialize;
use trihybrid::ref_metric::{DesignPoint, RefReport, RefSpec, DEFAULT_EPSILON};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsFile {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub spec: SpecSection,
    pub baseline: DesignSection,
    pub designs: Vec<DesignSection>,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecSection {
    pub benefits: BTreeMap<String, f64>,
    pub costs: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    pub name: String,
    pub metrics: BTreeMap<String, f64>,
}

fn to_design(d: &DesignSection) -> DesignPoint {
    let mut point = DesignPoint::new(&d.name);
    for (k, &v) in &d.metrics {
        point = point.with_metric(k, v, "linear");
    }
    point
}

pub fn report_from_file(path: &Path) -> anyhow::Result<RefReport> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read metrics file {}", path.display()))?;
    let parsed: MetricsFile = toml::from_str(&text).map_err(|e| anyhow::anyhow!("{e}"))?;
    let spec = RefSpec::new(
        parsed.spec.benefits.clone(),
        parsed.spec.costs.clone(),
        parsed.epsilon,
    )?;
    let baseline = to_design(&parsed.baseline);
    let designs: Vec<DesignPoint> = parsed.designs.iter().map(to_design).collect();
    Ok(RefReport::compare(&spec, &baseline, &designs)?)
}

pub fn report_to_json(report: &RefReport) -> anyhow::Result<String> {
    use serde_json::{json, Value};
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| {
            let deltas: BTreeMap<String, Value> = r
                .deltas
                .iter()
                .map(|(k, v, tag)| (k.clone(), json!({ "delta": v, "tag": tag })))
                .collect();
            json!({
                "design": r.design,
                "deltas": deltas,
                "upsilon": r.outcome.upsilon(),
                "upsilon_db": r.outcome.upsilon_db(),
                "cost_neutral": r.outcome.is_cost_neutral(),
            })
        })
        .collect();
    let doc = json!({ "baseline": report.baseline, "rows": rows });
    Ok(serde_json::to_string_pretty(&doc)?)
}
