//! Reconfigurability efficiency factor: a weighted ratio of relative metric
//! improvements to relative metric penalties between a reconfigurable design
//! and a static reference.
//!
//! All inputs are linear physical units (Watts, bps/Hz, m², element counts).
//! Logarithmic quantities must be converted before entering a comparison;
//! decibels appear only in output formatting. A near-zero cost denominator is
//! reported as a cost-neutral outcome instead of an unstable ratio.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Canonical metric names used by the presets and the experiment runner.
pub const METRIC_SE: &str = "spectral_efficiency";
pub const METRIC_POWER: &str = "power";
pub const METRIC_APERTURE: &str = "aperture";
pub const METRIC_COMPLEXITY: &str = "complexity";

/// One metric sample: linear-unit value plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricValue {
    pub value: f64,
    pub unit: String,
    pub is_logarithmic: bool,
}

impl MetricValue {
    pub fn linear(value: f64, unit: &str) -> Self {
        Self {
            value,
            unit: unit.to_string(),
            is_logarithmic: false,
        }
    }
}

/// Named bundle of metrics for one design.
#[derive(Debug, Clone)]
pub struct DesignPoint {
    pub name: String,
    pub metrics: BTreeMap<String, MetricValue>,
}

impl DesignPoint {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn with_metric(mut self, key: &str, value: f64, unit: &str) -> Self {
        self.metrics.insert(key.to_string(), MetricValue::linear(value, unit));
        self
    }
}

/// Normalized relative change |q - q_ref| / |q_ref| between linear metrics.
pub fn relative_change(q: &MetricValue, q_ref: &MetricValue) -> Result<f64> {
    if q.is_logarithmic || q_ref.is_logarithmic {
        return Err(Error::LinearityViolation(format!(
            "{} vs {}",
            q.unit, q_ref.unit
        )));
    }
    if q_ref.value == 0.0 {
        return Err(Error::UndefinedBaseline(q_ref.unit.clone()));
    }
    Ok((q.value - q_ref.value).abs() / q_ref.value.abs())
}

/// Relative changes for every metric the design shares with the baseline.
pub fn relative_changes(
    design: &DesignPoint,
    baseline: &DesignPoint,
) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (key, q) in &design.metrics {
        if let Some(q_ref) = baseline.metrics.get(key) {
            let delta = relative_change(q, q_ref).map_err(|e| match e {
                Error::UndefinedBaseline(_) => Error::UndefinedBaseline(key.clone()),
                Error::LinearityViolation(_) => Error::LinearityViolation(key.clone()),
                other => other,
            })?;
            out.insert(key.clone(), delta);
        }
    }
    Ok(out)
}

/// Default cost-regularization threshold: an engineering tolerance on the
/// minimum detectable relative change.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Benefit/cost partition with weights and the regularization threshold.
#[derive(Debug, Clone)]
pub struct RefSpec {
    benefits: BTreeMap<String, f64>,
    costs: BTreeMap<String, f64>,
    pub constraints: BTreeSet<String>,
    pub epsilon: f64,
}

impl RefSpec {
    /// Weights are normalized to sum to one over benefits and costs.
    pub fn new(
        benefits: BTreeMap<String, f64>,
        costs: BTreeMap<String, f64>,
        epsilon: f64,
    ) -> Result<Self> {
        if benefits.is_empty() || costs.is_empty() {
            return Err(Error::Specification(
                "benefit and cost sets must both be nonempty".into(),
            ));
        }
        if let Some(shared) = benefits.keys().find(|k| costs.contains_key(*k)) {
            return Err(Error::Specification(format!(
                "metric '{shared}' appears in both the benefit and cost sets"
            )));
        }
        if benefits.values().chain(costs.values()).any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::Specification("weights must be finite and >= 0".into()));
        }
        let total: f64 = benefits.values().chain(costs.values()).sum();
        if total <= 0.0 {
            return Err(Error::Specification("weights must not all be zero".into()));
        }
        if epsilon < 0.0 {
            return Err(Error::Specification("epsilon must be >= 0".into()));
        }
        let benefits = benefits.into_iter().map(|(k, w)| (k, w / total)).collect();
        let costs = costs.into_iter().map(|(k, w)| (k, w / total)).collect();
        Ok(Self {
            benefits,
            costs,
            constraints: BTreeSet::new(),
            epsilon,
        })
    }

    pub fn single(benefit: &str, cost: &str, epsilon: f64) -> Result<Self> {
        Self::new(
            BTreeMap::from([(benefit.to_string(), 1.0)]),
            BTreeMap::from([(cost.to_string(), 1.0)]),
            epsilon,
        )
    }

    pub fn benefits(&self) -> &BTreeMap<String, f64> {
        &self.benefits
    }

    pub fn costs(&self) -> &BTreeMap<String, f64> {
        &self.costs
    }
}

/// REF evaluation outcome: a ratio, or a cost-neutral report when the cost
/// denominator is below the detectability threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefOutcome {
    Ratio { upsilon: f64 },
    CostNeutral { benefit_sum: f64 },
}

impl RefOutcome {
    pub fn upsilon(&self) -> Option<f64> {
        match self {
            RefOutcome::Ratio { upsilon } => Some(*upsilon),
            RefOutcome::CostNeutral { .. } => None,
        }
    }

    /// dB bridging at the formatting layer only: 10 log10(Υ).
    pub fn upsilon_db(&self) -> Option<f64> {
        self.upsilon().map(|u| 10.0 * u.log10())
    }

    pub fn is_cost_neutral(&self) -> bool {
        matches!(self, RefOutcome::CostNeutral { .. })
    }
}

/// The reconfigurability efficiency factor
/// Υ = Σ_G w Δ / max(Σ_B w Δ, ε), cost-neutral when the cost change falls
/// below the detectability threshold (or vanishes with ε = 0). The guard
/// compares the weight-averaged cost against ε so it reduces to
/// max(Δ(Q_cost), ε) in the single-cost form regardless of normalization.
pub fn ref_value(spec: &RefSpec, deltas: &BTreeMap<String, f64>) -> Result<RefOutcome> {
    let lookup = |set: &BTreeMap<String, f64>| -> Result<f64> {
        let mut acc = 0.0;
        for (key, w) in set {
            let delta = deltas.get(key).ok_or_else(|| {
                Error::Specification(format!("no relative change supplied for metric '{key}'"))
            })?;
            if *delta < 0.0 || !delta.is_finite() {
                return Err(Error::Specification(format!(
                    "relative change for '{key}' must be finite and >= 0"
                )));
            }
            acc += w * delta;
        }
        Ok(acc)
    };
    let benefit_sum = lookup(&spec.benefits)?;
    let cost_sum = lookup(&spec.costs)?;
    let cost_weight: f64 = spec.costs.values().sum();
    let guard = cost_sum / cost_weight;
    if guard < spec.epsilon || cost_sum == 0.0 {
        return Ok(RefOutcome::CostNeutral { benefit_sum });
    }
    Ok(RefOutcome::Ratio {
        upsilon: benefit_sum / cost_sum,
    })
}

/// Named single-benefit, single-cost regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Performance-limited: spectral efficiency gain vs hardware complexity.
    Performance,
    /// Resource-limited: power saving vs spectral-efficiency loss.
    Save,
    /// Form-factor limited: power saving vs physical aperture growth.
    Area,
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perf" | "performance" => Ok(Regime::Performance),
            "save" | "resource" => Ok(Regime::Save),
            "area" | "form-factor" => Ok(Regime::Area),
            other => Err(Error::InvalidParameter(format!(
                "unknown regime preset '{other}' (expected perf, save, or area)"
            ))),
        }
    }
}

pub fn regime_preset(regime: Regime) -> RefSpec {
    let (benefit, cost) = match regime {
        Regime::Performance => (METRIC_SE, METRIC_COMPLEXITY),
        Regime::Save => (METRIC_POWER, METRIC_SE),
        Regime::Area => (METRIC_POWER, METRIC_APERTURE),
    };
    RefSpec::single(benefit, cost, DEFAULT_EPSILON).expect("preset construction cannot fail")
}

/// Component power model: amplifier, oscillator, per-chain RF, per-element
/// bias DACs, and resolution-dependent signal DACs.
#[derive(Debug, Clone)]
pub struct PowerConsumptionModel {
    /// Transmit power (W); the amplifier draws p_tx / eta_pa.
    pub p_tx_w: f64,
    /// Power amplifier efficiency in (0, 1].
    pub eta_pa: f64,
    /// Local oscillator power (W).
    pub p_lo_w: f64,
    /// Per-RF-chain power, excluding the signal DAC (W).
    pub p_rf_w: f64,
    /// Per-element bias-DAC power (W).
    pub bias_dac_w: f64,
    /// Signal-DAC energy per conversion step (J): P_DAC = c 2^b f_s.
    pub c_dac_j: f64,
    /// Sampling rate (Hz).
    pub f_s_hz: f64,
}

impl PowerConsumptionModel {
    /// Documented defaults in the style of published mmWave component
    /// surveys. These are inputs to the comparison, not ground truth.
    pub fn ribeiro_style() -> Self {
        Self {
            p_tx_w: 1.0,
            eta_pa: 0.27,
            p_lo_w: 22.5e-3,
            p_rf_w: 40.0e-3,
            bias_dac_w: 0.65e-3,
            c_dac_j: 494e-15,
            f_s_hz: 200e6,
        }
    }

    pub fn p_pa_w(&self) -> f64 {
        self.p_tx_w / self.eta_pa
    }

    /// Signal-DAC power at b bits: c 2^b f_s.
    pub fn p_dac_w(&self, bits: u32) -> f64 {
        self.c_dac_j * 2f64.powi(bits as i32) * self.f_s_hz
    }
}

/// Architecture variant of the consumption account.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerVariant {
    /// One RF chain per antenna.
    Static,
    /// Two chains per antenna (dual-polarized feeds).
    DualPolarized,
    /// Reconfigurable elements drawing chi RF-chain-equivalents per antenna.
    Reconfigurable { chi: f64 },
}

/// Total consumed power: amplifier + oscillator + chains (variant-scaled) +
/// bias DACs + per-chain signal DACs.
pub fn power_consumption(
    model: &PowerConsumptionModel,
    n_rf: usize,
    n_dac_bits: Option<u32>,
    n_bias_elements: usize,
    variant: PowerVariant,
) -> Result<f64> {
    if !(model.eta_pa > 0.0 && model.eta_pa <= 1.0) {
        return Err(Error::InvalidParameter("PA efficiency must be in (0, 1]".into()));
    }
    let chain_factor = match variant {
        PowerVariant::Static => 1.0,
        PowerVariant::DualPolarized => 2.0,
        PowerVariant::Reconfigurable { chi } => {
            if chi < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "reconfiguration power fraction chi = {chi} must be >= 0"
                )));
            }
            1.0 + chi
        }
    };
    let mut total = model.p_pa_w() + model.p_lo_w + chain_factor * n_rf as f64 * model.p_rf_w;
    total += n_bias_elements as f64 * model.bias_dac_w;
    if let Some(bits) = n_dac_bits {
        if bits == 0 {
            return Err(Error::InvalidParameter("DAC resolution must be >= 1 bit".into()));
        }
        total += n_rf as f64 * model.p_dac_w(bits);
    }
    Ok(total)
}

/// One row of a REF comparison report.
#[derive(Debug, Clone)]
pub struct RefReportRow {
    pub design: String,
    /// (metric, delta, tag) with tag one of "benefit", "cost", "other".
    pub deltas: Vec<(String, f64, &'static str)>,
    pub outcome: RefOutcome,
}

/// REF table for several designs against one baseline.
#[derive(Debug, Clone)]
pub struct RefReport {
    pub baseline: String,
    pub rows: Vec<RefReportRow>,
}

impl RefReport {
    /// REF table from design points sharing metrics with the baseline.
    pub fn compare(
        spec: &RefSpec,
        baseline: &DesignPoint,
        designs: &[DesignPoint],
    ) -> Result<Self> {
        let mut rows = Vec::with_capacity(designs.len());
        for d in designs {
            let deltas = relative_changes(d, baseline)?;
            let outcome = ref_value(spec, &deltas)?;
            let tagged = deltas
                .into_iter()
                .map(|(k, v)| {
                    let tag = if spec.benefits.contains_key(&k) {
                        "benefit"
                    } else if spec.costs.contains_key(&k) {
                        "cost"
                    } else {
                        "other"
                    };
                    (k, v, tag)
                })
                .collect();
            rows.push(RefReportRow {
                design: d.name.clone(),
                deltas: tagged,
                outcome,
            });
        }
        Ok(Self {
            baseline: baseline.name.clone(),
            rows,
        })
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "design,metric,delta,tag,upsilon,upsilon_db,cost_neutral")?;
        for row in &self.rows {
            let (u, udb, neutral) = match row.outcome {
                RefOutcome::Ratio { upsilon } => (
                    format!("{upsilon}"),
                    format!("{}", 10.0 * upsilon.log10()),
                    "false",
                ),
                RefOutcome::CostNeutral { .. } => (String::new(), String::new(), "true"),
            };
            for (metric, delta, tag) in &row.deltas {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    row.design, metric, delta, tag, u, udb, neutral
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn delta_map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn relative_change_cases() {
        let base = MetricValue::linear(20.0, "W");
        assert_relative_eq!(
            relative_change(&MetricValue::linear(20.0, "W"), &base).unwrap(),
            0.0
        );
        // aperture 3A vs A
        let a = MetricValue::linear(3.0, "m2");
        let a_ref = MetricValue::linear(1.0, "m2");
        assert_relative_eq!(relative_change(&a, &a_ref).unwrap(), 2.0);
        // power 12 mW vs 20 mW
        let p = MetricValue::linear(12e-3, "W");
        let p_ref = MetricValue::linear(20e-3, "W");
        assert_relative_eq!(relative_change(&p, &p_ref).unwrap(), 0.4, epsilon = 1e-14);

        // zero baseline
        assert!(matches!(
            relative_change(&a, &MetricValue::linear(0.0, "m2")),
            Err(Error::UndefinedBaseline(_))
        ));
        // logarithmic input
        let db = MetricValue {
            value: 13.0,
            unit: "dBm".into(),
            is_logarithmic: true,
        };
        assert!(matches!(
            relative_change(&db, &p_ref),
            Err(Error::LinearityViolation(_))
        ));
    }

    #[test]
    fn ref_tabulated_parasitic_designs() {
        let spec = regime_preset(Regime::Area);
        let d1 = delta_map(&[(METRIC_POWER, 0.4), (METRIC_APERTURE, 2.0)]);
        assert_relative_eq!(
            ref_value(&spec, &d1).unwrap().upsilon().unwrap(),
            0.2,
            epsilon = 1e-15
        );
        let d2 = delta_map(&[(METRIC_POWER, 0.465), (METRIC_APERTURE, 4.0)]);
        let u2 = ref_value(&spec, &d2).unwrap().upsilon().unwrap();
        assert_relative_eq!(u2, 0.11625, epsilon = 1e-12);
        assert!((u2 - 0.12).abs() < 0.01);
    }

    #[test]
    fn ref_sim_peak_in_db() {
        let spec = RefSpec::single(METRIC_SE, METRIC_POWER, DEFAULT_EPSILON).unwrap();
        let deltas = delta_map(&[(METRIC_SE, 3.9), (METRIC_POWER, 0.021)]);
        let outcome = ref_value(&spec, &deltas).unwrap();
        assert_relative_eq!(outcome.upsilon().unwrap(), 3.9 / 0.021, epsilon = 1e-12);
        let db = outcome.upsilon_db().unwrap();
        assert!((db - 22.7).abs() < 0.05, "got {db} dB");
    }

    #[test]
    fn regime_presets_reproduce_worked_numbers() {
        let perf = regime_preset(Regime::Performance);
        let u = ref_value(
            &perf,
            &delta_map(&[(METRIC_SE, 0.5), (METRIC_COMPLEXITY, 0.25)]),
        )
        .unwrap();
        assert_relative_eq!(u.upsilon().unwrap(), 2.0, epsilon = 1e-15);

        let save = regime_preset(Regime::Save);
        let u = ref_value(&save, &delta_map(&[(METRIC_POWER, 0.8), (METRIC_SE, 0.1)])).unwrap();
        assert_relative_eq!(u.upsilon().unwrap(), 8.0, epsilon = 1e-15);

        let area = regime_preset(Regime::Area);
        let u = ref_value(&area, &delta_map(&[(METRIC_POWER, 0.4), (METRIC_APERTURE, 0.2)]))
            .unwrap();
        assert_relative_eq!(u.upsilon().unwrap(), 2.0, epsilon = 1e-15);

        assert!("nonsense".parse::<Regime>().is_err());
        assert_eq!("perf".parse::<Regime>().unwrap(), Regime::Performance);
    }

    #[test]
    fn scale_invariance() {
        let spec = RefSpec::single(METRIC_SE, METRIC_POWER, 0.0).unwrap();
        let base = DesignPoint::new("base")
            .with_metric(METRIC_SE, 4.0, "bps/Hz")
            .with_metric(METRIC_POWER, 2.0, "W");
        let alt = DesignPoint::new("alt")
            .with_metric(METRIC_SE, 6.0, "bps/Hz")
            .with_metric(METRIC_POWER, 2.5, "W");
        let u1 = ref_value(&spec, &relative_changes(&alt, &base).unwrap()).unwrap();

        let scale = 7.3;
        let scale_point = |d: &DesignPoint| {
            let mut out = d.clone();
            for v in out.metrics.values_mut() {
                v.value *= scale;
            }
            out
        };
        let u2 = ref_value(
            &spec,
            &relative_changes(&scale_point(&alt), &scale_point(&base)).unwrap(),
        )
        .unwrap();
        assert!((u1.upsilon().unwrap() - u2.upsilon().unwrap()).abs() < 1e-14);
    }

    #[test]
    fn weight_homogeneity() {
        let deltas = delta_map(&[
            (METRIC_SE, 1.2),
            (METRIC_POWER, 0.3),
            (METRIC_APERTURE, 0.9),
        ]);
        let spec1 = RefSpec::new(
            BTreeMap::from([(METRIC_SE.to_string(), 0.3), (METRIC_POWER.to_string(), 0.2)]),
            BTreeMap::from([(METRIC_APERTURE.to_string(), 0.5)]),
            0.0,
        )
        .unwrap();
        let spec2 = RefSpec::new(
            BTreeMap::from([(METRIC_SE.to_string(), 3.0), (METRIC_POWER.to_string(), 2.0)]),
            BTreeMap::from([(METRIC_APERTURE.to_string(), 5.0)]),
            0.0,
        )
        .unwrap();
        let u1 = ref_value(&spec1, &deltas).unwrap().upsilon().unwrap();
        let u2 = ref_value(&spec2, &deltas).unwrap().upsilon().unwrap();
        assert_relative_eq!(u1, u2, epsilon = 1e-14);
    }

    #[test]
    fn cost_neutral_guard() {
        let spec = RefSpec::single(METRIC_SE, METRIC_POWER, 1e-3).unwrap();
        let outcome = ref_value(&spec, &delta_map(&[(METRIC_SE, 0.7), (METRIC_POWER, 1e-5)]))
            .unwrap();
        assert!(outcome.is_cost_neutral());
        assert_eq!(outcome.upsilon(), None);

        // epsilon = 0 with an exactly zero denominator is also cost-neutral
        let spec0 = RefSpec::single(METRIC_SE, METRIC_POWER, 0.0).unwrap();
        let outcome = ref_value(&spec0, &delta_map(&[(METRIC_SE, 0.7), (METRIC_POWER, 0.0)]))
            .unwrap();
        assert!(outcome.is_cost_neutral());
    }

    #[test]
    fn spec_validation() {
        // overlapping sets
        assert!(RefSpec::new(
            BTreeMap::from([(METRIC_SE.to_string(), 1.0)]),
            BTreeMap::from([(METRIC_SE.to_string(), 1.0)]),
            0.0
        )
        .is_err());
        // empty side
        assert!(RefSpec::new(BTreeMap::new(), BTreeMap::from([(METRIC_SE.to_string(), 1.0)]), 0.0).is_err());
        // missing delta
        let spec = RefSpec::single(METRIC_SE, METRIC_POWER, 0.0).unwrap();
        assert!(matches!(
            ref_value(&spec, &delta_map(&[(METRIC_SE, 0.4)])),
            Err(Error::Specification(_))
        ));
    }

    #[test]
    fn db_bridging_exact() {
        let outcome = RefOutcome::Ratio { upsilon: 185.7 };
        assert_eq!(outcome.upsilon_db().unwrap(), 10.0 * 185.7f64.log10());
    }

    #[test]
    fn power_consumption_variants() {
        let model = PowerConsumptionModel::ribeiro_style();
        let n = 4;
        let stat = power_consumption(&model, n, None, 0, PowerVariant::Static).unwrap();
        let dual = power_consumption(&model, n, None, 0, PowerVariant::DualPolarized).unwrap();
        let chi0 =
            power_consumption(&model, n, None, 0, PowerVariant::Reconfigurable { chi: 0.0 })
                .unwrap();
        let chi1 =
            power_consumption(&model, n, None, 0, PowerVariant::Reconfigurable { chi: 1.0 })
                .unwrap();
        assert_relative_eq!(chi0, stat, epsilon = 1e-15);
        assert_relative_eq!(chi1, dual, epsilon = 1e-15);
        assert!(dual > stat);

        // one extra bit doubles the signal-DAC term
        let b3 = power_consumption(&model, n, Some(3), 0, PowerVariant::Static).unwrap();
        let b4 = power_consumption(&model, n, Some(4), 0, PowerVariant::Static).unwrap();
        assert_relative_eq!(b4 - stat, 2.0 * (b3 - stat), epsilon = 1e-12);

        // bias elements add linearly
        let with_bias = power_consumption(&model, n, None, 100, PowerVariant::Static).unwrap();
        assert_relative_eq!(with_bias - stat, 100.0 * model.bias_dac_w, epsilon = 1e-12);

        assert!(power_consumption(&model, n, None, 0, PowerVariant::Reconfigurable { chi: -0.1 })
            .is_err());
        assert!(power_consumption(&model, n, Some(0), 0, PowerVariant::Static).is_err());
    }

    #[test]
    fn report_csv_shape() {
        let spec = regime_preset(Regime::Area);
        let base = DesignPoint::new("baseline")
            .with_metric(METRIC_POWER, 20e-3, "W")
            .with_metric(METRIC_APERTURE, 1.0, "m2");
        let d1 = DesignPoint::new("design1")
            .with_metric(METRIC_POWER, 12e-3, "W")
            .with_metric(METRIC_APERTURE, 3.0, "m2");
        let report = RefReport::compare(&spec, &base, &[d1]).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("design,metric,delta,tag,upsilon,upsilon_db,cost_neutral"));
        assert!(text.contains("design1,aperture,2,cost,0.2"));
    }
}
