//! Polarization-reconfigurable arrays over unpolarized 2x2 block channels.
//!
//! Every antenna carries a two-component gain vector parameterized by a
//! polarization angle, a phase offset, and a reconfiguration efficiency. The
//! propagation channel keeps both polarizations per antenna pair; precoder
//! and combiner collapse it to the effective per-antenna channel.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{block_diag_cols, frob_norm_sq, sample_cn, CMat, CVec};
use crate::model::{steering_vector, ArrayDescriptor, ChannelTensor, FrontEnd, MultipathParams};

/// One antenna's polarization configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    /// Polarization angle theta in [0, 2pi).
    pub theta_rad: f64,
    /// Vertical-minus-horizontal phase offset psi in [0, 2pi).
    pub psi_rad: f64,
    /// Reconfiguration efficiency gamma in [0, 1].
    pub efficiency: f64,
}

impl PolarizationState {
    pub fn new(theta_rad: f64, psi_rad: f64, efficiency: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(Error::InvalidParameter(format!(
                "reconfiguration efficiency {efficiency} outside [0, 1]"
            )));
        }
        let tau = 2.0 * std::f64::consts::PI;
        Ok(Self {
            theta_rad: theta_rad.rem_euclid(tau),
            psi_rad: psi_rad.rem_euclid(tau),
            efficiency,
        })
    }

    pub fn vertical() -> Self {
        Self::new(std::f64::consts::FRAC_PI_2, 0.0, 1.0).unwrap()
    }

    pub fn horizontal() -> Self {
        Self::new(0.0, 0.0, 1.0).unwrap()
    }

    pub fn rhcp() -> Self {
        Self::new(std::f64::consts::FRAC_PI_4, -std::f64::consts::FRAC_PI_2, 1.0).unwrap()
    }

    pub fn lhcp() -> Self {
        Self::new(std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2, 1.0).unwrap()
    }
}

/// Reconfigurable polarization vector p = sqrt(gamma) [cos θ, sin θ e^{jψ}]^T.
/// Its squared norm equals the reconfiguration efficiency.
pub fn polarization_vector(state: &PolarizationState) -> CVec {
    let root = state.efficiency.sqrt();
    CVec::from_vec(vec![
        Complex64::new(root * state.theta_rad.cos(), 0.0),
        Complex64::from_polar(root * state.theta_rad.sin(), state.psi_rad),
    ])
}

/// Block-diagonal 2N x N polarization precoder (or combiner).
pub fn build_precoder(states: &[PolarizationState]) -> Result<CMat> {
    if states.is_empty() {
        return Err(Error::EmptyInput("polarization state list".into()));
    }
    let cols: Vec<CVec> = states.iter().map(polarization_vector).collect();
    Ok(block_diag_cols(&cols))
}

/// Effective channel W_ra* H_up F_ra: entrywise p_R* H_block p_T per pair.
pub fn effective_channel(h_up: &CMat, w_ra: &CMat, f_ra: &CMat) -> Result<CMat> {
    if w_ra.nrows() != h_up.nrows() || f_ra.nrows() != h_up.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "combiner {}x{}, channel {}x{}, precoder {}x{}",
            w_ra.nrows(),
            w_ra.ncols(),
            h_up.nrows(),
            h_up.ncols(),
            f_ra.nrows(),
            f_ra.ncols()
        )));
    }
    Ok(w_ra.adjoint() * h_up * f_ra)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolPowerMode {
    /// Per-antenna diagonal efficiency matrix.
    PerAntenna,
    /// Common efficiency shared by all antennas (states must agree).
    Uniform,
}

/// Transmit power Tr(F_dig* F_ana* Γ F_ana F_dig) with Γ = diag(γ_n), or its
/// scalar-efficiency simplification.
pub fn radiated_power(
    states: &[PolarizationState],
    f_ana: &CMat,
    f_dig: &CMat,
    mode: PolPowerMode,
) -> Result<f64> {
    if states.is_empty() {
        return Err(Error::EmptyInput("polarization state list".into()));
    }
    if states.iter().any(|s| !(0.0..=1.0).contains(&s.efficiency)) {
        return Err(Error::InvalidParameter(
            "reconfiguration efficiency outside [0, 1]".into(),
        ));
    }
    if f_ana.nrows() != states.len() {
        return Err(Error::DimensionMismatch(format!(
            "analog precoder has {} rows, expected {} antennas",
            f_ana.nrows(),
            states.len()
        )));
    }
    let combined = f_ana * f_dig;
    match mode {
        PolPowerMode::PerAntenna => {
            let mut p = 0.0;
            for (n, s) in states.iter().enumerate() {
                let row: f64 = combined.row(n).iter().map(|z| z.norm_sqr()).sum();
                p += s.efficiency * row;
            }
            Ok(p)
        }
        PolPowerMode::Uniform => {
            let gamma = states[0].efficiency;
            if states.iter().any(|s| (s.efficiency - gamma).abs() > 1e-12) {
                return Err(Error::InvalidParameter(
                    "uniform power mode requires identical efficiencies".into(),
                ));
            }
            Ok(gamma * frob_norm_sq(&combined))
        }
    }
}

/// Per-antenna transmit polarization search on a (theta, psi) grid:
/// maximizes |p_R* H_block p_T| for each antenna pair against the given
/// receive state. Default grid is 32 x 32.
pub const DEFAULT_POL_GRID: usize = 32;

pub fn best_transmit_state(
    h_block: &CMat,
    rx_state: &PolarizationState,
    grid: usize,
    efficiency: f64,
) -> Result<PolarizationState> {
    if h_block.nrows() != 2 || h_block.ncols() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "polarization block must be 2x2, got {}x{}",
            h_block.nrows(),
            h_block.ncols()
        )));
    }
    let p_r = polarization_vector(rx_state);
    let tau = 2.0 * std::f64::consts::PI;
    let mut best = (PolarizationState::vertical(), f64::NEG_INFINITY);
    for it in 0..grid {
        for ip in 0..grid {
            let state = PolarizationState::new(
                it as f64 * tau / grid as f64,
                ip as f64 * tau / grid as f64,
                efficiency,
            )?;
            let p_t = polarization_vector(&state);
            let gain = (p_r.adjoint() * h_block * p_t)[(0, 0)].norm();
            if gain > best.1 {
                best = (state, gain);
            }
        }
    }
    Ok(best.0)
}

/// Unpolarized 2N_R x 2N_T channel: geometric paths with per-path 2x2
/// polarization mixing. Cross-polar coefficients carry 1/xpd of the co-polar
/// power (xpd in linear units, >= 1 for physical channels).
pub fn generate_unpolarized_channel(
    params: &MultipathParams,
    tx: &ArrayDescriptor,
    rx: &ArrayDescriptor,
    xpd_linear: f64,
    seed: u64,
) -> Result<ChannelTensor> {
    params.validate()?;
    if !(xpd_linear > 0.0) {
        return Err(Error::InvalidParameter("xpd must be > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_random = params.paths.iter().filter(|p| p.gain.is_none()).count();
    let gain_scale = if n_random > 0 {
        1.0 / (n_random as f64).sqrt()
    } else {
        1.0
    };
    let cross = (1.0 / xpd_linear).sqrt();

    struct PathTerm {
        outer: CMat,
        mix: CMat,
        gain: Complex64,
        delay_s: f64,
    }
    let mut terms = Vec::with_capacity(params.paths.len());
    for p in &params.paths {
        let a_rx = steering_vector(rx, p.aoa_az_rad, p.aoa_el_rad)?;
        let a_tx = steering_vector(tx, p.aod_az_rad, p.aod_el_rad)?;
        let gain = p.gain.unwrap_or_else(|| sample_cn(&mut rng) * gain_scale);
        let mix = CMat::from_fn(2, 2, |i, j| {
            let w = if i == j { 1.0 } else { cross };
            sample_cn(&mut rng) * w
        });
        terms.push(PathTerm {
            outer: &a_rx * a_tx.adjoint(),
            mix,
            gain,
            delay_s: p.delay_s,
        });
    }

    let freqs = params.subcarrier_frequencies();
    let mut mats = Vec::with_capacity(freqs.len());
    for &f_k in &freqs {
        let mut h = CMat::zeros(2 * rx.len(), 2 * tx.len());
        for t in &terms {
            let phase = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f_k * t.delay_s);
            h += t.outer.kronecker(&t.mix) * (t.gain * phase);
        }
        mats.push(h);
    }
    ChannelTensor::new(mats, freqs)
}

/// Polarization-reconfigurable front end: fixed receive states, transmit
/// states as the configuration.
#[derive(Debug, Clone)]
pub struct PolarizationFrontEnd {
    pub h_up: ChannelTensor,
    pub rx_states: Vec<PolarizationState>,
}

impl PolarizationFrontEnd {
    pub fn new(h_up: ChannelTensor, rx_states: Vec<PolarizationState>) -> Result<Self> {
        if h_up.nrows() != 2 * rx_states.len() {
            return Err(Error::DimensionMismatch(format!(
                "unpolarized channel has {} rows, expected 2 x {} receive antennas",
                h_up.nrows(),
                rx_states.len()
            )));
        }
        if h_up.ncols() % 2 != 0 {
            return Err(Error::DimensionMismatch(
                "unpolarized channel must have an even column count".into(),
            ));
        }
        Ok(Self { h_up, rx_states })
    }

    pub fn num_tx_antennas(&self) -> usize {
        self.h_up.ncols() / 2
    }
}

impl FrontEnd for PolarizationFrontEnd {
    type Config = Vec<PolarizationState>;

    fn num_subcarriers(&self) -> usize {
        self.h_up.num_subcarriers()
    }

    fn effective_channel(&self, config: &Vec<PolarizationState>, k: usize) -> Result<CMat> {
        let w_ra = build_precoder(&self.rx_states)?;
        let f_ra = build_precoder(config)?;
        effective_channel(self.h_up.matrix(k), &w_ra, &f_ra)
    }

    fn ra_precoder(&self, config: &Vec<PolarizationState>, _k: usize) -> Result<CMat> {
        build_precoder(config)
    }

    fn radiated_power(
        &self,
        config: &Vec<PolarizationState>,
        _k: usize,
        f_ana: &CMat,
        f_dig: &CMat,
    ) -> Result<f64> {
        radiated_power(config, f_ana, f_dig, PolPowerMode::PerAntenna)
    }

    fn is_feasible(&self, config: &Vec<PolarizationState>) -> bool {
        config.len() == self.num_tx_antennas()
            && config.iter().all(|s| (0.0..=1.0).contains(&s.efficiency))
    }
}
