//! Dynamic metasurface antennas: waveguide-fed slots whose resonances are
//! tuned per element.
//!
//! Each slot weight follows the Lorentzian constraint — a circle through the
//! origin in the complex plane — and is additionally attenuated by the
//! forward scattering of every upstream slot on the same waveguide. Power not
//! scattered out by the slots is absorbed in the matched termination and does
//! not radiate.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{block_diag_cols, frob_norm_sq, CMat, CVec, J};
use crate::model::{ChannelTensor, FrontEnd};

/// Waveguide-fed slot array layout.
#[derive(Debug, Clone)]
pub struct DmaGeometry {
    /// Slots per waveguide (N_sub).
    pub elements_per_waveguide: usize,
    /// Waveguides per RF chain (N_ps).
    pub waveguides_per_rf: usize,
    /// RF chains (N_rf).
    pub num_rf_chains: usize,
    /// Element x-positions along their waveguide, stacked by subarray.
    pub x_positions_m: Vec<f64>,
    /// Waveguide phase propagation constant (rad/m).
    pub beta_g_rad_per_m: f64,
    /// Maximum scattering strength nu in (0, 1].
    pub coupling: f64,
}

impl DmaGeometry {
    /// Half-wavelength element spacing along every waveguide.
    pub fn half_wavelength(
        elements_per_waveguide: usize,
        waveguides_per_rf: usize,
        num_rf_chains: usize,
        wavelength_m: f64,
        beta_g_rad_per_m: f64,
        coupling: f64,
    ) -> Result<Self> {
        let n_guides = waveguides_per_rf * num_rf_chains;
        let mut x = Vec::with_capacity(n_guides * elements_per_waveguide);
        for _ in 0..n_guides {
            for n in 0..elements_per_waveguide {
                x.push(n as f64 * wavelength_m / 2.0);
            }
        }
        let g = Self {
            elements_per_waveguide,
            waveguides_per_rf,
            num_rf_chains,
            x_positions_m: x,
            beta_g_rad_per_m,
            coupling,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn num_waveguides(&self) -> usize {
        self.waveguides_per_rf * self.num_rf_chains
    }

    pub fn num_elements(&self) -> usize {
        self.elements_per_waveguide * self.num_waveguides()
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements_per_waveguide == 0 || self.num_waveguides() == 0 {
            return Err(Error::InvalidGeometry("empty DMA geometry".into()));
        }
        if !(self.coupling > 0.0 && self.coupling <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "coupling strength {} outside (0, 1]",
                self.coupling
            )));
        }
        if self.x_positions_m.len() != self.num_elements() {
            return Err(Error::DimensionMismatch(format!(
                "{} positions for {} elements",
                self.x_positions_m.len(),
                self.num_elements()
            )));
        }
        for p in 0..self.num_waveguides() {
            let s = &self.x_positions_m
                [p * self.elements_per_waveguide..(p + 1) * self.elements_per_waveguide];
            if s.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidGeometry(format!(
                    "positions along waveguide {p} must be strictly increasing"
                )));
            }
        }
        Ok(())
    }
}

/// Varactor tuning phases, one per slot, each in [-pi, pi).
#[derive(Debug, Clone, PartialEq)]
pub struct DmaConfig {
    pub phases: Vec<f64>,
}

impl DmaConfig {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases
            .iter()
            .any(|&z| !(-std::f64::consts::PI..std::f64::consts::PI).contains(&z) && z != std::f64::consts::PI)
        {
            return Err(Error::InvalidParameter(
                "tuning phases must lie in [-pi, pi)".into(),
            ));
        }
        Ok(Self { phases })
    }

    pub fn all_off(n: usize) -> Self {
        Self {
            phases: vec![-std::f64::consts::PI; n],
        }
    }

    pub fn all_on(n: usize) -> Self {
        Self { phases: vec![0.0; n] }
    }
}

/// Resonance factor (1 + e^{jz}). The off state z = ±pi is snapped to an
/// exact zero: the representable pi is the canonical off value and the true
/// factor there vanishes identically.
fn resonance_factor(z: f64) -> Complex64 {
    if z == std::f64::consts::PI || z == -std::f64::consts::PI {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(1.0 + z.cos(), z.sin())
    }
}

/// Radiating Lorentzian weight -(j/2)(1 + e^{jz}), before scattering decay.
pub fn lorentzian_weight(z: f64) -> Complex64 {
    -J / 2.0 * resonance_factor(z)
}

/// Forward-scattering decay factor 1 - (nu/2)(1 + e^{jz}) of one slot.
pub fn decay_factor(z: f64, coupling: f64) -> Complex64 {
    Complex64::new(1.0, 0.0) - resonance_factor(z) * (coupling / 2.0)
}

/// Block-diagonal DMA precoder: element m of subarray p radiates its
/// Lorentzian weight attenuated by all upstream slots of the same waveguide.
pub fn dma_weights(geom: &DmaGeometry, config: &DmaConfig) -> Result<CMat> {
    geom.validate()?;
    if config.phases.len() != geom.num_elements() {
        return Err(Error::DimensionMismatch(format!(
            "{} phases for {} elements",
            config.phases.len(),
            geom.num_elements()
        )));
    }
    let n_sub = geom.elements_per_waveguide;
    let mut columns = Vec::with_capacity(geom.num_waveguides());
    for p in 0..geom.num_waveguides() {
        let mut col = CVec::zeros(n_sub);
        let mut upstream = Complex64::new(1.0, 0.0);
        for n in 0..n_sub {
            let z = config.phases[p * n_sub + n];
            col[n] = lorentzian_weight(z) * upstream;
            upstream *= decay_factor(z, geom.coupling);
        }
        columns.push(col);
    }
    Ok(block_diag_cols(&columns))
}

/// Waveguide phase-advance matrix Q = 1_{N_R} q with q_m = e^{-j beta_g x_m},
/// combined with the propagation channel as H_k ⊙ Q.
pub fn phase_advance(geom: &DmaGeometry, n_rx: usize) -> CMat {
    let q: Vec<Complex64> = geom
        .x_positions_m
        .iter()
        .map(|&x| Complex64::from_polar(1.0, -geom.beta_g_rad_per_m * x))
        .collect();
    CMat::from_fn(n_rx, q.len(), |_, c| q[c])
}

/// Apply the waveguide phase advance to every subcarrier matrix.
pub fn apply_phase_advance(channel: &ChannelTensor, geom: &DmaGeometry) -> Result<ChannelTensor> {
    if channel.ncols() != geom.num_elements() {
        return Err(Error::DimensionMismatch(format!(
            "channel has {} columns, geometry {} elements",
            channel.ncols(),
            geom.num_elements()
        )));
    }
    let q = phase_advance(geom, channel.nrows());
    channel.map_matrices(|_, h| h.component_mul(&q))
}

/// Forward field surviving past the last slot of subarray p.
pub fn residual_transmission(geom: &DmaGeometry, config: &DmaConfig, p: usize) -> Result<Complex64> {
    if p >= geom.num_waveguides() {
        return Err(Error::InvalidParameter(format!(
            "subarray index {p} out of range ({} waveguides)",
            geom.num_waveguides()
        )));
    }
    if config.phases.len() != geom.num_elements() {
        return Err(Error::DimensionMismatch(format!(
            "{} phases for {} elements",
            config.phases.len(),
            geom.num_elements()
        )));
    }
    let n_sub = geom.elements_per_waveguide;
    let mut s12 = Complex64::new(1.0, 0.0);
    for n in 0..n_sub {
        s12 *= decay_factor(config.phases[p * n_sub + n], geom.coupling);
    }
    Ok(s12)
}

/// Radiated power: per subarray, the input power minus the residual carried
/// into the matched termination.
pub fn radiated_power(
    geom: &DmaGeometry,
    config: &DmaConfig,
    f_ana: &CMat,
    f_dig: &CMat,
) -> Result<f64> {
    let p_in = frob_norm_sq(&(f_ana * f_dig));
    let mut total = 0.0;
    for p in 0..geom.num_waveguides() {
        let s12 = residual_transmission(geom, config, p)?;
        total += p_in * (1.0 - s12.norm_sqr());
    }
    if total < -1e-12 {
        return Err(Error::NegativePower {
            value: total,
            context: "DMA radiated power".into(),
        });
    }
    Ok(total.max(0.0))
}

/// Coupling strength giving a target residual power fraction at the end of
/// the waveguide in the all-on reference state, clamped below by the
/// element-geometry floor: nu = max(floor, 1 - target^{1/(2 N_sub)}).
pub fn calibrate_coupling(n_sub: usize, target_residual: f64, floor: f64) -> Result<f64> {
    if !(target_residual > 0.0 && target_residual <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target residual {target_residual} outside (0, 1]"
        )));
    }
    if n_sub == 0 {
        return Err(Error::InvalidParameter("n_sub must be >= 1".into()));
    }
    let root = 1.0 - target_residual.powf(1.0 / (2.0 * n_sub as f64));
    Ok(root.max(floor))
}

/// Default calibration values used by the sizing studies.
pub const DEFAULT_TARGET_RESIDUAL: f64 = 0.1;
pub const DEFAULT_COUPLING_FLOOR: f64 = 0.2;

/// DMA front end: propagation channel with the waveguide phase advance
/// folded in, times the block-diagonal slot weights.
#[derive(Debug, Clone)]
pub struct DmaFrontEnd {
    pub geometry: DmaGeometry,
    channel_with_advance: ChannelTensor,
}

impl DmaFrontEnd {
    pub fn new(geometry: DmaGeometry, channel: ChannelTensor) -> Result<Self> {
        let channel_with_advance = apply_phase_advance(&channel, &geometry)?;
        Ok(Self {
            geometry,
            channel_with_advance,
        })
    }

    pub fn combined_channel(&self) -> &ChannelTensor {
        &self.channel_with_advance
    }
}

impl FrontEnd for DmaFrontEnd {
    type Config = DmaConfig;

    fn num_subcarriers(&self) -> usize {
        self.channel_with_advance.num_subcarriers()
    }

    fn effective_channel(&self, config: &DmaConfig, k: usize) -> Result<CMat> {
        let f_ra = dma_weights(&self.geometry, config)?;
        Ok(self.channel_with_advance.matrix(k) * f_ra)
    }

    fn ra_precoder(&self, config: &DmaConfig, _k: usize) -> Result<CMat> {
        dma_weights(&self.geometry, config)
    }

    fn radiated_power(
        &self,
        config: &DmaConfig,
        _k: usize,
        f_ana: &CMat,
        f_dig: &CMat,
    ) -> Result<f64> {
        radiated_power(&self.geometry, config, f_ana, f_dig)
    }

    fn is_feasible(&self, config: &DmaConfig) -> bool {
        config.phases.len() == self.geometry.num_elements()
            && config
                .phases
                .iter()
                .all(|&z| (-std::f64::consts::PI..=std::f64::consts::PI).contains(&z))
    }
}
