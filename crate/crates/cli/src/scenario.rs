//! Declarative experiment scenarios: one TOML file describes the
//! architecture, channel statistics, optimizer budgets, sweep axes, and
//! output paths. Parsing is strict (unknown fields are errors) so typos are
//! caught with a field-addressed message before anything runs.

use std::path::Path;

use serde::Deserialize;
use trihybrid::ref_metric::PowerConsumptionModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Generic link-level SE/power run for one architecture.
    Link,
    /// Equal-SE transmit-power matching across parasitic designs.
    ParasiticPowerMatch,
    /// Metasurface-slot sizing study over (n_x, n_y).
    DmaRef,
    /// Stacked-metasurface depth vs DAC resolution study.
    SimRef,
    /// Polarization reconfiguration vs static and dual-polarized arrays.
    PolRef,
    /// Near-field SNR maps of the loaded wire.
    WireField,
}

fn default_realizations() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub kind: ScenarioKind,
    pub seed: u64,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    pub channel: Option<ChannelSpec>,
    #[serde(default)]
    pub power: PowerSpec,
    pub output: OutputSpec,
    pub link: Option<LinkSpec>,
    pub parasitic: Option<ParasiticSpec>,
    pub dma: Option<DmaSpec>,
    pub sim: Option<SimSpec>,
    pub polarization: Option<PolSpec>,
    pub wire: Option<WireSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub num_subcarriers: usize,
    pub num_paths: usize,
    pub rx_antennas: usize,
}

impl ChannelSpec {
    pub fn wavelength_m(&self) -> f64 {
        299_792_458.0 / self.carrier_freq_hz
    }
}

/// Component power constants; defaults follow the documented survey-style
/// preset in the library.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerSpec {
    pub p_tx_w: f64,
    pub eta_pa: f64,
    pub p_lo_w: f64,
    pub p_rf_w: f64,
    pub bias_dac_w: f64,
    pub c_dac_j: f64,
    pub f_s_hz: f64,
}

impl Default for PowerSpec {
    fn default() -> Self {
        let m = PowerConsumptionModel::ribeiro_style();
        Self {
            p_tx_w: m.p_tx_w,
            eta_pa: m.eta_pa,
            p_lo_w: m.p_lo_w,
            p_rf_w: m.p_rf_w,
            bias_dac_w: m.bias_dac_w,
            c_dac_j: m.c_dac_j,
            f_s_hz: m.f_s_hz,
        }
    }
}

impl PowerSpec {
    pub fn model(&self) -> PowerConsumptionModel {
        PowerConsumptionModel {
            p_tx_w: self.p_tx_w,
            eta_pa: self.eta_pa,
            p_lo_w: self.p_lo_w,
            p_rf_w: self.p_rf_w,
            bias_dac_w: self.bias_dac_w,
            c_dac_j: self.c_dac_j,
            f_s_hz: self.f_s_hz,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub results: String,
    pub summary: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkArchitecture {
    Phased,
    Pixel,
    Pass,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub architecture: LinkArchitecture,
    pub p_max_values: Vec<f64>,
    pub noise_w: f64,
    pub phased: Option<PhasedSpec>,
    pub pixel: Option<PixelLinkSpec>,
    pub pass: Option<PassLinkSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhasedSpec {
    pub tx_antennas: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PixelLinkSpec {
    pub feeds: usize,
    pub states: usize,
    pub elements_per_feed: usize,
    #[serde(default = "default_eta_min")]
    pub eta_min: f64,
    #[serde(default = "default_eta_max")]
    pub eta_max: f64,
    /// Calibrated dictionary table; synthesized binary patterns otherwise.
    pub dictionary_file: Option<String>,
    /// Explicit admissible index lists per feed (interconnection limits).
    pub admissible: Option<Vec<Vec<usize>>>,
}

fn default_eta_min() -> f64 {
    0.6
}

fn default_eta_max() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassLinkSpec {
    pub num_guides: usize,
    pub pinches_per_guide: usize,
    pub spacing_m: f64,
    /// Proportional power model: common coupling coefficient.
    pub delta: Option<f64>,
    /// Equal power model: uniform radiated amplitude.
    pub equal_power_alpha: Option<f64>,
    #[serde(default)]
    pub align_broadside: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParasiticSpec {
    pub active: usize,
    pub designs: Vec<ParasiticDesign>,
    pub target_se: f64,
    pub noise_w: f64,
    pub p_min_w: f64,
    pub p_max_w: f64,
    #[serde(default = "default_load_candidates")]
    pub load_candidates: usize,
    /// Baseline aperture is 1.0 by definition.
    #[serde(default = "default_baseline_name")]
    pub baseline_name: String,
}

fn default_load_candidates() -> usize {
    64
}

fn default_baseline_name() -> String {
    "baseline".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParasiticDesign {
    pub name: String,
    pub parasitic: usize,
    pub aperture_rel: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmaSpec {
    pub n_x_values: Vec<usize>,
    pub n_y_values: Vec<usize>,
    pub baseline_n_x: usize,
    pub baseline_n_y: usize,
    pub dac_bits: u32,
    pub noise_w: f64,
    pub p_max_w: f64,
    #[serde(default = "default_target_residual")]
    pub target_residual: f64,
    #[serde(default = "default_coupling_floor")]
    pub coupling_floor: f64,
    #[serde(default = "default_max_elements")]
    pub max_elements: usize,
    /// Waveguides sharing one RF chain through phase shifters.
    #[serde(default = "default_waveguides_per_rf")]
    pub waveguides_per_rf: usize,
    #[serde(default = "default_ga_generations")]
    pub ga_generations: usize,
    #[serde(default = "default_ga_population")]
    pub ga_population: usize,
}

fn default_target_residual() -> f64 {
    trihybrid::dma::DEFAULT_TARGET_RESIDUAL
}

fn default_coupling_floor() -> f64 {
    trihybrid::dma::DEFAULT_COUPLING_FLOOR
}

fn default_max_elements() -> usize {
    32
}

fn default_waveguides_per_rf() -> usize {
    2
}

fn default_ga_generations() -> usize {
    30
}

fn default_ga_population() -> usize {
    24
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub num_antennas: usize,
    pub atoms: usize,
    pub grid_cols: usize,
    pub layer_values: Vec<usize>,
    pub dac_bits_values: Vec<u32>,
    pub noise_w: f64,
    pub p_max_w: f64,
    pub layer_spacing_m: f64,
    pub atom_area_m2: f64,
    /// Antenna-to-first-layer distance; defaults to the layer spacing.
    pub feed_distance_m: Option<f64>,
    #[serde(default = "default_ascent_cycles")]
    pub ascent_cycles: usize,
}

fn default_ascent_cycles() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolSpec {
    pub tx_antennas: usize,
    pub chi_values: Vec<f64>,
    pub xpd_linear: f64,
    pub noise_w: f64,
    pub p_max_w: f64,
    #[serde(default = "default_pol_grid")]
    pub grid: usize,
    #[serde(default = "default_recon_efficiency")]
    pub recon_efficiency: f64,
}

fn default_pol_grid() -> usize {
    16
}

fn default_recon_efficiency() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireSpec {
    pub wavelength_m: f64,
    pub radius_over_lambda: f64,
    pub spacing_over_lambda: f64,
    pub num_ports: usize,
    /// Excited-port index sets, one sweep branch per set.
    pub excitations: Vec<Vec<usize>>,
    pub load_ohm_values: Vec<f64>,
    #[serde(default = "default_source_ohm")]
    pub source_ohm: f64,
    pub noise_w: f64,
    pub grid_z_min: f64,
    pub grid_z_max: f64,
    pub grid_n_z: usize,
    pub grid_r: f64,
    #[serde(default = "default_null_threshold_db")]
    pub null_threshold_db: f64,
    #[serde(default = "default_field_prefix")]
    pub field_map_prefix: String,
}

fn default_source_ohm() -> f64 {
    50.0
}

fn default_null_threshold_db() -> f64 {
    -3.0
}

fn default_field_prefix() -> String {
    "field".into()
}

/// One validation finding, addressed to the field that caused it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl Scenario {
    /// Parse a scenario document. TOML errors carry line/column/field info.
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    /// Full schema and cross-reference check without running anything.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut push = |path: &str, message: String| {
            out.push(Diagnostic {
                path: path.to_string(),
                message,
            })
        };

        if self.realizations == 0 {
            push("realizations", "must be >= 1".into());
        }

        let needs_channel = !matches!(self.kind, ScenarioKind::WireField);
        if needs_channel && self.channel.is_none() {
            push("channel", "this scenario kind needs a [channel] table".into());
        }
        if let Some(ch) = &self.channel {
            if ch.num_subcarriers == 0 {
                push("channel.num_subcarriers", "must be >= 1".into());
            }
            if ch.num_paths == 0 {
                push("channel.num_paths", "must be >= 1".into());
            }
            if ch.rx_antennas == 0 {
                push("channel.rx_antennas", "must be >= 1".into());
            }
            if !(ch.carrier_freq_hz > 0.0) || !(ch.bandwidth_hz > 0.0) {
                push("channel", "carrier frequency and bandwidth must be > 0".into());
            }
        }

        if !(self.power.eta_pa > 0.0 && self.power.eta_pa <= 1.0) {
            push("power.eta_pa", "PA efficiency must lie in (0, 1]".into());
        }

        match self.kind {
            ScenarioKind::Link => match &self.link {
                None => push("link", "kind = \"link\" needs a [link] table".into()),
                Some(link) => {
                    if !(link.noise_w > 0.0) {
                        push("link.noise_w", "must be > 0".into());
                    }
                    match link.architecture {
                        LinkArchitecture::Phased => {
                            if link.phased.is_none() {
                                push("link.phased", "phased architecture needs [link.phased]".into());
                            }
                        }
                        LinkArchitecture::Pixel => match &link.pixel {
                            None => push("link.pixel", "pixel architecture needs [link.pixel]".into()),
                            Some(px) => {
                                if px.feeds == 0 || px.states == 0 || px.elements_per_feed == 0 {
                                    push("link.pixel", "feeds, states, elements_per_feed must be >= 1".into());
                                }
                                if !(px.eta_min > 0.0 && px.eta_max <= 1.0 && px.eta_min <= px.eta_max) {
                                    push("link.pixel.eta_min", "efficiencies must satisfy 0 < eta_min <= eta_max <= 1".into());
                                }
                                if let Some(f) = &px.dictionary_file {
                                    if !Path::new(f).exists() {
                                        push("link.pixel.dictionary_file", format!("file '{f}' not found"));
                                    }
                                }
                                if let Some(adm) = &px.admissible {
                                    if adm.len() != px.feeds {
                                        push("link.pixel.admissible", format!("{} lists for {} feeds", adm.len(), px.feeds));
                                    }
                                    for (p, set) in adm.iter().enumerate() {
                                        if set.is_empty() || set.iter().any(|&n| n >= px.states) {
                                            push("link.pixel.admissible", format!("feed {p}: indices must be a nonempty subset of 0..{}", px.states));
                                        }
                                    }
                                }
                            }
                        },
                        LinkArchitecture::Pass => match &link.pass {
                            None => push("link.pass", "pass architecture needs [link.pass]".into()),
                            Some(ps) => {
                                if ps.num_guides == 0 || ps.pinches_per_guide == 0 {
                                    push("link.pass", "num_guides and pinches_per_guide must be >= 1".into());
                                }
                                match (ps.delta, ps.equal_power_alpha) {
                                    (None, None) => push(
                                        "link.pass",
                                        "set either delta (proportional model) or equal_power_alpha".into(),
                                    ),
                                    (Some(d), _) if !(d > 0.0 && d < 1.0) => {
                                        push("link.pass.delta", format!("coupling {d} outside (0, 1)"))
                                    }
                                    (_, Some(a)) => {
                                        let m = ps.pinches_per_guide as f64;
                                        if a * a * m > 1.0 {
                                            push(
                                                "link.pass.equal_power_alpha",
                                                format!(
                                                    "infeasible: M alpha^2 = {:.4} > 1 for M = {}",
                                                    a * a * m,
                                                    ps.pinches_per_guide
                                                ),
                                            );
                                        } else if (m - 1.0) * a * a >= 1.0 {
                                            push(
                                                "link.pass.equal_power_alpha",
                                                format!("infeasible: (M-1) alpha^2 = {:.4} >= 1", (m - 1.0) * a * a),
                                            );
                                        }
                                    }
                                    _ => {}
                                }
                            }
                        },
                    }
                }
            },
            ScenarioKind::ParasiticPowerMatch => match &self.parasitic {
                None => push("parasitic", "kind = \"parasitic_power_match\" needs a [parasitic] table".into()),
                Some(p) => {
                    if p.active == 0 {
                        push("parasitic.active", "must be >= 1".into());
                    }
                    if p.designs.is_empty() {
                        push("parasitic.designs", "need at least one design".into());
                    }
                    for (i, d) in p.designs.iter().enumerate() {
                        if !(d.aperture_rel > 0.0) {
                            push("parasitic.designs", format!("design {i}: aperture_rel must be > 0"));
                        }
                    }
                    if !(p.p_min_w > 0.0 && p.p_max_w > p.p_min_w) {
                        push("parasitic.p_min_w", "need 0 < p_min_w < p_max_w".into());
                    }
                    if !(p.noise_w > 0.0) {
                        push("parasitic.noise_w", "must be > 0".into());
                    }
                }
            },
            ScenarioKind::DmaRef => match &self.dma {
                None => push("dma", "kind = \"dma_ref\" needs a [dma] table".into()),
                Some(d) => {
                    if !(1..=8).contains(&d.dac_bits) {
                        push("dma.dac_bits", format!("{} outside the studied 1..=8 range", d.dac_bits));
                    }
                    if d.n_x_values.is_empty() || d.n_y_values.is_empty() {
                        push("dma.n_x_values", "sweep axes must be nonempty".into());
                    }
                    if !(d.target_residual > 0.0 && d.target_residual <= 1.0) {
                        push("dma.target_residual", "must lie in (0, 1]".into());
                    }
                    if d.waveguides_per_rf == 0 {
                        push("dma.waveguides_per_rf", "must be >= 1".into());
                    }
                    if !(d.noise_w > 0.0) || !(d.p_max_w > 0.0) {
                        push("dma.noise_w", "noise and power budget must be > 0".into());
                    }
                    if d.baseline_n_x.checked_mul(d.baseline_n_y).map_or(true, |n| n > d.max_elements) {
                        push("dma.baseline_n_x", format!(
                            "baseline {}x{} exceeds max_elements = {}",
                            d.baseline_n_x, d.baseline_n_y, d.max_elements
                        ));
                    }
                }
            },
            ScenarioKind::SimRef => match &self.sim {
                None => push("sim", "kind = \"sim_ref\" needs a [sim] table".into()),
                Some(s) => {
                    if s.num_antennas == 0 || s.atoms == 0 {
                        push("sim.num_antennas", "antennas and atoms must be >= 1".into());
                    }
                    if s.grid_cols == 0 || s.atoms % s.grid_cols != 0 {
                        push("sim.grid_cols", format!("must divide atoms = {}", s.atoms));
                    }
                    if s.dac_bits_values.iter().any(|b| !(1..=8).contains(b)) {
                        push("sim.dac_bits_values", "bits must lie in 1..=8".into());
                    }
                    if s.layer_values.is_empty() || s.dac_bits_values.is_empty() {
                        push("sim.layer_values", "sweep axes must be nonempty".into());
                    }
                    if !(s.layer_spacing_m > 0.0) || !(s.atom_area_m2 > 0.0) {
                        push("sim.layer_spacing_m", "geometry lengths must be > 0".into());
                    }
                }
            },
            ScenarioKind::PolRef => match &self.polarization {
                None => push("polarization", "kind = \"pol_ref\" needs a [polarization] table".into()),
                Some(p) => {
                    if p.tx_antennas == 0 {
                        push("polarization.tx_antennas", "must be >= 1".into());
                    }
                    if p.chi_values.iter().any(|&c| c < 0.0) {
                        push("polarization.chi_values", "chi must be >= 0".into());
                    }
                    if !(p.xpd_linear > 0.0) {
                        push("polarization.xpd_linear", "must be > 0 (linear units)".into());
                    }
                    if !(0.0..=1.0).contains(&p.recon_efficiency) {
                        push("polarization.recon_efficiency", "must lie in [0, 1]".into());
                    }
                    if p.grid < 2 {
                        push("polarization.grid", "grid must be >= 2".into());
                    }
                }
            },
            ScenarioKind::WireField => match &self.wire {
                None => push("wire", "kind = \"wire_field\" needs a [wire] table".into()),
                Some(w) => {
                    if w.num_ports == 0 {
                        push("wire.num_ports", "must be >= 1".into());
                    }
                    for (i, set) in w.excitations.iter().enumerate() {
                        if set.is_empty() || set.iter().any(|&p| p >= w.num_ports) {
                            push(
                                "wire.excitations",
                                format!("set {i}: indices must be a nonempty subset of 0..{}", w.num_ports),
                            );
                        }
                    }
                    if w.excitations.is_empty() {
                        push("wire.excitations", "need at least one excitation set".into());
                    }
                    if w.load_ohm_values.is_empty() {
                        push("wire.load_ohm_values", "need at least one load value".into());
                    }
                    if !(w.radius_over_lambda > 0.0 && w.spacing_over_lambda > 0.0 && w.wavelength_m > 0.0) {
                        push("wire.radius_over_lambda", "geometry lengths must be > 0".into());
                    }
                    if w.grid_n_z < 2 {
                        push("wire.grid_n_z", "need at least 2 grid points".into());
                    }
                    if !(w.noise_w > 0.0) {
                        push("wire.noise_w", "must be > 0".into());
                    }
                }
            },
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_LINK: &str = r#"
id = "smoke"
kind = "link"
seed = 1

[channel]
carrier_freq_hz = 3e9
bandwidth_hz = 1e8
num_subcarriers = 4
num_paths = 3
rx_antennas = 2

[output]
results = "r.csv"
summary = "s.json"

[link]
architecture = "phased"
p_max_values = [1.0]
noise_w = 1e-3

[link.phased]
tx_antennas = 4
"#;

    #[test]
    fn minimal_scenario_parses_and_validates() {
        let s = Scenario::parse(MINIMAL_LINK).unwrap();
        assert_eq!(s.kind, ScenarioKind::Link);
        assert!(s.validate().is_empty());
    }

    #[test]
    fn unknown_architecture_is_a_field_error() {
        let text = MINIMAL_LINK.replace("architecture = \"phased\"", "architecture = \"warp\"");
        let err = Scenario::parse(&text).unwrap_err();
        assert!(err.contains("architecture"), "error was: {err}");
        assert!(err.contains("warp") || err.contains("unknown variant"), "error was: {err}");
    }

    #[test]
    fn unknown_field_is_addressed() {
        let text = format!("{MINIMAL_LINK}\nnot_a_field = 3\n");
        let err = Scenario::parse(&text).unwrap_err();
        assert!(err.contains("not_a_field"), "error was: {err}");
    }

    #[test]
    fn infeasible_pass_alpha_diagnosed() {
        let text = r#"
id = "pass-bad"
kind = "link"
seed = 1

[channel]
carrier_freq_hz = 3e9
bandwidth_hz = 1e8
num_subcarriers = 4
num_paths = 3
rx_antennas = 2

[output]
results = "r.csv"
summary = "s.json"

[link]
architecture = "pass"
p_max_values = [1.0]
noise_w = 1e-3

[link.pass]
num_guides = 2
pinches_per_guide = 5
spacing_m = 0.01
equal_power_alpha = 0.5
"#;
        let s = Scenario::parse(text).unwrap();
        let diags = s.validate();
        assert!(
            diags.iter().any(|d| d.path == "link.pass.equal_power_alpha"),
            "diagnostics: {diags:?}"
        );
    }

    #[test]
    fn zero_realizations_rejected() {
        let text = MINIMAL_LINK.replace("seed = 1", "seed = 1\nrealizations = 0");
        let s = Scenario::parse(&text).unwrap();
        assert!(s.validate().iter().any(|d| d.path == "realizations"));
    }
}
