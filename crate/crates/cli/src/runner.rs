//! Sweep driver: materializes scenario sweep points, fans realizations out
//! over a thread pool, and serializes rows and summaries deterministically.
//!
//! Determinism contract: per-task seeds derive from the root seed and the
//! (point, realization) indices, rows are sorted before writing, and floats
//! print with the shortest round-trip formatting, so the same scenario and
//! seed produce byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::experiments::build_experiment;
use crate::scenario::Scenario;

/// One sweep-axis value; rendered identically in CSV and JSON.
#[derive(Debug, Clone, PartialEq)]
pub enum AxisValue {
    Int(i64),
    Num(f64),
    Text(String),
}

impl std::fmt::Display for AxisValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxisValue::Int(v) => write!(f, "{v}"),
            AxisValue::Num(v) => write!(f, "{v}"),
            AxisValue::Text(v) => write!(f, "{v}"),
        }
    }
}

/// A materialized sweep point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub axes: Vec<AxisValue>,
}

/// Metrics produced by one realization at one sweep point.
#[derive(Debug, Clone)]
pub struct RowData {
    pub se_bits_per_hz: f64,
    pub p_radiated_w: f64,
    pub p_consumed_w: f64,
    pub extras: Vec<f64>,
}

/// Scenario-kind behavior behind the generic driver.
pub trait Experiment: Sync {
    fn axis_names(&self) -> Vec<&'static str>;
    fn extra_names(&self) -> Vec<&'static str>;
    fn points(&self) -> Vec<SweepPoint>;
    /// Realization count, normally from the scenario; deterministic kinds
    /// may force 1.
    fn realizations(&self) -> usize;
    fn run_point(&self, point_idx: usize, realization: usize) -> anyhow::Result<RowData>;
    /// REF comparison over per-point mean metrics, when the kind defines one.
    fn ref_table(&self, means: &[PointMeans]) -> Option<Vec<RefRow>> {
        let _ = means;
        None
    }
    /// Extra artifacts (filename, CSV body) written after the sweep. The
    /// runner prepends the provenance header and serializes the writes.
    fn artifacts(&self) -> anyhow::Result<Vec<(String, String)>> {
        Ok(Vec::new())
    }
}

/// Per-point aggregate handed to REF builders.
#[derive(Debug, Clone)]
pub struct PointMeans {
    pub point: SweepPoint,
    pub se_mean: f64,
    pub p_radiated_mean: f64,
    pub p_consumed_mean: f64,
    pub extras_mean: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefRow {
    pub design: String,
    pub deltas: BTreeMap<String, f64>,
    pub upsilon: Option<f64>,
    pub upsilon_db: Option<f64>,
    pub cost_neutral: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub axes: BTreeMap<String, String>,
    pub realizations: usize,
    pub se_mean: f64,
    pub se_stderr: f64,
    pub p_radiated_mean: f64,
    pub p_consumed_mean: f64,
    pub extras_mean: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub scenario_id: String,
    pub scenario_sha256: String,
    pub seed: u64,
    pub module_versions: BTreeMap<String, String>,
    pub groups: Vec<GroupSummary>,
    pub ref_table: Option<Vec<RefRow>>,
}

impl Summary {
    /// Group whose axes match the given (name, rendered value) pairs.
    pub fn group(&self, matches: &[(&str, &str)]) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| {
            matches
                .iter()
                .all(|(k, v)| g.axes.get(*k).map(String::as_str) == Some(*v))
        })
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub results_path: PathBuf,
    pub summary_path: PathBuf,
    pub artifacts: Vec<PathBuf>,
    pub summary: Summary,
}

fn module_versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("trihybrid".to_string(), trihybrid_version()),
        (
            "trihybrid-cli".to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        ),
    ])
}

fn trihybrid_version() -> String {
    // the library crate tracks the workspace version
    env!("CARGO_PKG_VERSION").to_string()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Load, validate, and run a scenario file.
pub fn run_scenario_file(
    path: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
    jobs: Option<usize>,
) -> anyhow::Result<RunOutput> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario {}", path.display()))?;
    let mut scenario = Scenario::parse(&text).map_err(|e| anyhow::anyhow!("{e}"))?;
    let diags = scenario.validate();
    if !diags.is_empty() {
        let joined: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        bail!("scenario validation failed:\n  {}", joined.join("\n  "));
    }
    if let Some(seed) = seed_override {
        scenario.seed = seed;
    }
    let sha = sha256_hex(text.as_bytes());
    run_parsed(&scenario, &sha, out_dir, jobs)
}

/// Run an already-validated scenario.
pub fn run_parsed(
    scenario: &Scenario,
    scenario_sha: &str,
    out_dir: &Path,
    jobs: Option<usize>,
) -> anyhow::Result<RunOutput> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let experiment = build_experiment(scenario)?;
    let points = experiment.points();
    let realizations = experiment.realizations();

    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..realizations).map(move |r| (p, r)))
        .collect();

    let run_all = || -> anyhow::Result<Vec<(usize, usize, RowData)>> {
        use rayon::prelude::*;
        tasks
            .par_iter()
            .map(|&(p, r)| {
                let data = experiment.run_point(p, r).with_context(|| {
                    format!("scenario '{}' point {p} realization {r}", scenario.id)
                })?;
                Ok((p, r, data))
            })
            .collect()
    };
    let mut rows = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("thread pool")?
            .install(run_all),
        None => run_all(),
    }?;
    rows.sort_by_key(|&(p, r, _)| (p, r));

    // results CSV: provenance header, one row per sweep point per realization
    let results_path = out_dir.join(&scenario.output.results);
    let axis_names = experiment.axis_names();
    let extra_names = experiment.extra_names();
    let mut csv = String::new();
    let _ = writeln!(csv, "# scenario_id: {}", scenario.id);
    let _ = writeln!(csv, "# scenario_sha256: {scenario_sha}");
    let _ = writeln!(csv, "# seed: {}", scenario.seed);
    let versions = module_versions();
    let version_list: Vec<String> = versions.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let _ = writeln!(csv, "# module_versions: {}", version_list.join(","));
    let mut header = vec!["scenario_id".to_string()];
    header.extend(axis_names.iter().map(|s| s.to_string()));
    header.push("realization".into());
    header.push("se_bits_per_hz".into());
    header.push("p_radiated_w".into());
    header.push("p_consumed_w".into());
    header.extend(extra_names.iter().map(|s| s.to_string()));
    let _ = writeln!(csv, "{}", header.join(","));
    for (p, r, data) in &rows {
        let mut fields = vec![scenario.id.clone()];
        fields.extend(points[*p].axes.iter().map(|a| a.to_string()));
        fields.push(r.to_string());
        fields.push(format!("{}", data.se_bits_per_hz));
        fields.push(format!("{}", data.p_radiated_w));
        fields.push(format!("{}", data.p_consumed_w));
        fields.extend(data.extras.iter().map(|x| format!("{x}")));
        let _ = writeln!(csv, "{}", fields.join(","));
    }
    std::fs::write(&results_path, csv)
        .with_context(|| format!("cannot write {}", results_path.display()))?;

    // per-point aggregates
    let mut groups = Vec::with_capacity(points.len());
    let mut means = Vec::with_capacity(points.len());
    for (p, point) in points.iter().enumerate() {
        let point_rows: Vec<&RowData> = rows
            .iter()
            .filter(|(pi, _, _)| *pi == p)
            .map(|(_, _, d)| d)
            .collect();
        if point_rows.is_empty() {
            continue;
        }
        let n = point_rows.len() as f64;
        let se_mean = point_rows.iter().map(|d| d.se_bits_per_hz).sum::<f64>() / n;
        let se_var = point_rows
            .iter()
            .map(|d| (d.se_bits_per_hz - se_mean).powi(2))
            .sum::<f64>()
            / n.max(1.0);
        let se_stderr = if point_rows.len() > 1 {
            (se_var / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let p_rad = point_rows.iter().map(|d| d.p_radiated_w).sum::<f64>() / n;
        let p_cons = point_rows.iter().map(|d| d.p_consumed_w).sum::<f64>() / n;
        let extras_mean: Vec<f64> = (0..extra_names.len())
            .map(|i| point_rows.iter().map(|d| d.extras[i]).sum::<f64>() / n)
            .collect();

        let axes: BTreeMap<String, String> = axis_names
            .iter()
            .zip(&point.axes)
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        groups.push(GroupSummary {
            axes,
            realizations: point_rows.len(),
            se_mean,
            se_stderr,
            p_radiated_mean: p_rad,
            p_consumed_mean: p_cons,
            extras_mean: extra_names
                .iter()
                .zip(&extras_mean)
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        });
        means.push(PointMeans {
            point: point.clone(),
            se_mean,
            p_radiated_mean: p_rad,
            p_consumed_mean: p_cons,
            extras_mean,
        });
    }

    let ref_table = experiment.ref_table(&means);
    let summary = Summary {
        scenario_id: scenario.id.clone(),
        scenario_sha256: scenario_sha.to_string(),
        seed: scenario.seed,
        module_versions: versions,
        groups,
        ref_table,
    };
    let summary_path = out_dir.join(&scenario.output.summary);
    let json = serde_json::to_string_pretty(&summary).context("summary serialization")?;
    std::fs::write(&summary_path, json + "\n")
        .with_context(|| format!("cannot write {}", summary_path.display()))?;

    let mut artifacts = Vec::new();
    for (name, body) in experiment.artifacts()? {
        let path = out_dir.join(&name);
        let mut stamped = String::new();
        let _ = writeln!(stamped, "# scenario_id: {}", scenario.id);
        let _ = writeln!(stamped, "# scenario_sha256: {scenario_sha}");
        let _ = writeln!(stamped, "# seed: {}", scenario.seed);
        let _ = writeln!(stamped, "# module_versions: {}", version_list.join(","));
        stamped.push_str(&body);
        std::fs::write(&path, stamped)
            .with_context(|| format!("cannot write {}", path.display()))?;
        artifacts.push(path);
    }
    Ok(RunOutput {
        results_path,
        summary_path,
        artifacts,
        summary,
    })
}
