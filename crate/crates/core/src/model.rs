//! Generic transmit signal model: geometric multipath channels, the
//! mutual-information and precoder-matching objectives, the transmit power
//! budget, and the front-end contract every antenna architecture satisfies.
//!
//! The architecture stacks three precoding layers. A digital precoder and an
//! analog precoder act per subcarrier; a reconfigurable antenna layer shapes
//! the effective channel itself. Each architecture module provides its own
//! effective-channel and radiated-power maps behind the [`FrontEnd`] trait.

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, frob_norm_sq, hermitian_part, sample_cn, CMat, CVec};

/// One propagation path of a geometric multipath channel.
///
/// `gain` of `None` means the complex gain is drawn per realization from a
/// circularly-symmetric normal with the random paths sharing unit total
/// variance.
#[derive(Debug, Clone)]
pub struct PathComponent {
    pub gain: Option<Complex64>,
    pub delay_s: f64,
    pub aod_az_rad: f64,
    pub aod_el_rad: f64,
    pub aoa_az_rad: f64,
    pub aoa_el_rad: f64,
}

impl PathComponent {
    pub fn fixed(gain: Complex64, delay_s: f64, aod_az: f64, aoa_az: f64) -> Self {
        Self {
            gain: Some(gain),
            delay_s,
            aod_az_rad: aod_az,
            aod_el_rad: 0.0,
            aoa_az_rad: aoa_az,
            aoa_el_rad: 0.0,
        }
    }
}

/// Small-scale fading description: path set plus the OFDM grid.
#[derive(Debug, Clone)]
pub struct MultipathParams {
    pub paths: Vec<PathComponent>,
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub num_subcarriers: usize,
}

impl MultipathParams {
    pub fn validate(&self) -> Result<()> {
        if self.paths.is_empty() {
            return Err(Error::EmptyInput("multipath path list".into()));
        }
        if self.num_subcarriers == 0 {
            return Err(Error::InvalidParameter("num_subcarriers must be >= 1".into()));
        }
        if self.paths.iter().any(|p| p.delay_s < 0.0) {
            return Err(Error::InvalidParameter("path delays must be >= 0".into()));
        }
        Ok(())
    }

    /// Uniform subcarrier grid f_k = f_c + (k - K/2) B / K.
    pub fn subcarrier_frequencies(&self) -> Vec<f64> {
        let k_total = self.num_subcarriers as f64;
        (0..self.num_subcarriers)
            .map(|k| {
                self.carrier_freq_hz + (k as f64 - k_total / 2.0) * self.bandwidth_hz / k_total
            })
            .collect()
    }

    /// Paths with random gains at angles drawn uniformly in azimuth/elevation.
    pub fn random_geometric(
        num_paths: usize,
        carrier_freq_hz: f64,
        bandwidth_hz: f64,
        num_subcarriers: usize,
        seed: u64,
    ) -> Self {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let max_delay = 1.0 / bandwidth_hz * num_subcarriers as f64 / 4.0;
        let paths = (0..num_paths)
            .map(|_| PathComponent {
                gain: None,
                delay_s: rng.gen::<f64>() * max_delay,
                aod_az_rad: rng.gen_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2),
                aod_el_rad: rng.gen_range(-0.5..0.5),
                aoa_az_rad: rng.gen_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2),
                aoa_el_rad: rng.gen_range(-0.5..0.5),
            })
            .collect();
        Self {
            paths,
            carrier_freq_hz,
            bandwidth_hz,
            num_subcarriers,
        }
    }
}

/// Antenna array geometry: element positions in meters plus the wavelength.
#[derive(Debug, Clone)]
pub struct ArrayDescriptor {
    pub positions_m: Vec<Vector3<f64>>,
    pub wavelength_m: f64,
}

impl ArrayDescriptor {
    pub fn new(positions_m: Vec<Vector3<f64>>, wavelength_m: f64) -> Result<Self> {
        let array = Self {
            positions_m,
            wavelength_m,
        };
        array.validate()?;
        Ok(array)
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions_m.is_empty() {
            return Err(Error::EmptyInput("array element positions".into()));
        }
        if !(self.wavelength_m > 0.0) {
            return Err(Error::InvalidGeometry("wavelength must be > 0".into()));
        }
        if self.positions_m.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidGeometry("non-finite element position".into()));
        }
        Ok(())
    }

    /// Uniform line array along the y axis.
    pub fn line_array(n: usize, spacing_m: f64, wavelength_m: f64) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|i| Vector3::new(0.0, i as f64 * spacing_m, 0.0))
                .collect(),
            wavelength_m,
        )
    }

    /// Uniform planar array in the x-y plane, row-major over (x, y).
    pub fn planar_array(nx: usize, ny: usize, dx_m: f64, dy_m: f64, wavelength_m: f64) -> Result<Self> {
        let mut positions = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                positions.push(Vector3::new(ix as f64 * dx_m, iy as f64 * dy_m, 0.0));
            }
        }
        Self::new(positions, wavelength_m)
    }

    pub fn len(&self) -> usize {
        self.positions_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions_m.is_empty()
    }
}

/// Per-subcarrier complex channel matrices on a common dimension.
#[derive(Debug, Clone)]
pub struct ChannelTensor {
    matrices: Vec<CMat>,
    frequencies_hz: Vec<f64>,
}

impl ChannelTensor {
    pub fn new(matrices: Vec<CMat>, frequencies_hz: Vec<f64>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::EmptyInput("channel tensor".into()));
        }
        if matrices.len() != frequencies_hz.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} matrices vs {} frequencies",
                matrices.len(),
                frequencies_hz.len()
            )));
        }
        let (r, c) = (matrices[0].nrows(), matrices[0].ncols());
        for (k, m) in matrices.iter().enumerate() {
            if m.nrows() != r || m.ncols() != c {
                return Err(Error::DimensionMismatch(format!(
                    "subcarrier {k} has shape {}x{}, expected {r}x{c}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if !all_finite(m) {
                return Err(Error::NonFinite(format!("channel matrix at subcarrier {k}")));
            }
        }
        Ok(Self {
            matrices,
            frequencies_hz,
        })
    }

    pub fn num_subcarriers(&self) -> usize {
        self.matrices.len()
    }

    pub fn nrows(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrices[0].ncols()
    }

    pub fn matrix(&self, k: usize) -> &CMat {
        &self.matrices[k]
    }

    pub fn matrices(&self) -> &[CMat] {
        &self.matrices
    }

    pub fn frequencies_hz(&self) -> &[f64] {
        &self.frequencies_hz
    }

    pub fn map_matrices(&self, f: impl Fn(usize, &CMat) -> CMat) -> Result<Self> {
        Self::new(
            self.matrices.iter().enumerate().map(|(k, m)| f(k, m)).collect(),
            self.frequencies_hz.clone(),
        )
    }
}

/// Receiver noise: variance in Watts per complex dimension.
#[derive(Debug, Clone, Copy)]
pub struct NoiseModel {
    pub variance_w: f64,
}

impl NoiseModel {
    pub fn new(variance_w: f64) -> Result<Self> {
        if !(variance_w > 0.0) {
            return Err(Error::InvalidParameter("noise variance must be > 0".into()));
        }
        Ok(Self { variance_w })
    }
}

/// Digital and analog precoders per subcarrier plus one antenna configuration.
#[derive(Debug, Clone)]
pub struct PrecoderSet<C> {
    pub digital: Vec<CMat>,
    pub analog: Vec<CMat>,
    pub antenna_config: C,
}

impl<C> PrecoderSet<C> {
    pub fn new(digital: Vec<CMat>, analog: Vec<CMat>, antenna_config: C) -> Result<Self> {
        if digital.is_empty() || digital.len() != analog.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} digital vs {} analog precoders",
                digital.len(),
                analog.len()
            )));
        }
        let n_s = digital[0].ncols();
        for k in 0..digital.len() {
            if digital[k].ncols() != n_s {
                return Err(Error::DimensionMismatch(format!(
                    "stream count changes at subcarrier {k}"
                )));
            }
            if analog[k].ncols() != digital[k].nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "analog ({}x{}) and digital ({}x{}) precoders do not chain at subcarrier {k}",
                    analog[k].nrows(),
                    analog[k].ncols(),
                    digital[k].nrows(),
                    digital[k].ncols()
                )));
            }
        }
        Ok(Self {
            digital,
            analog,
            antenna_config,
        })
    }

    pub fn num_subcarriers(&self) -> usize {
        self.digital.len()
    }

    pub fn num_streams(&self) -> usize {
        self.digital[0].ncols()
    }

    /// Combined analog-digital precoder at subcarrier k.
    pub fn combined(&self, k: usize) -> CMat {
        &self.analog[k] * &self.digital[k]
    }
}

/// Behavioral contract an antenna architecture exposes to the optimizer and
/// the experiment runner: an effective channel, an explicit reconfigurable
/// precoder, a radiated-power map, and a feasibility test.
pub trait FrontEnd {
    type Config;

    fn num_subcarriers(&self) -> usize;

    /// Effective channel at subcarrier k for the given configuration.
    fn effective_channel(&self, config: &Self::Config, k: usize) -> Result<CMat>;

    /// The reconfigurable-antenna precoding matrix itself.
    fn ra_precoder(&self, config: &Self::Config, k: usize) -> Result<CMat>;

    /// Radiated power in Watts at subcarrier k.
    fn radiated_power(&self, config: &Self::Config, k: usize, f_ana: &CMat, f_dig: &CMat)
        -> Result<f64>;

    /// Feasible-set membership for the configuration.
    fn is_feasible(&self, config: &Self::Config) -> bool;

    /// All effective channel matrices collected into a tensor.
    fn effective_channel_tensor(&self, config: &Self::Config, frequencies_hz: &[f64]) -> Result<ChannelTensor> {
        let mats = (0..self.num_subcarriers())
            .map(|k| self.effective_channel(config, k))
            .collect::<Result<Vec<_>>>()?;
        ChannelTensor::new(mats, frequencies_hz.to_vec())
    }

    /// Total radiated power across subcarriers.
    fn total_radiated_power(&self, config: &Self::Config, precoders: &PrecoderSet<Self::Config>) -> Result<f64> {
        (0..self.num_subcarriers())
            .map(|k| self.radiated_power(config, k, &precoders.analog[k], &precoders.digital[k]))
            .sum()
    }
}

/// Conventional (non-reconfigurable) front end: the effective channel is the
/// propagation channel itself and the radiated power is the squared norm of
/// the hybrid precoder.
#[derive(Debug, Clone)]
pub struct ConventionalFrontEnd {
    pub channel: ChannelTensor,
}

impl FrontEnd for ConventionalFrontEnd {
    type Config = ();

    fn num_subcarriers(&self) -> usize {
        self.channel.num_subcarriers()
    }

    fn effective_channel(&self, _config: &(), k: usize) -> Result<CMat> {
        Ok(self.channel.matrix(k).clone())
    }

    fn ra_precoder(&self, _config: &(), _k: usize) -> Result<CMat> {
        Ok(CMat::identity(self.channel.ncols(), self.channel.ncols()))
    }

    fn radiated_power(&self, _config: &(), _k: usize, f_ana: &CMat, f_dig: &CMat) -> Result<f64> {
        Ok(frob_norm_sq(&(f_ana * f_dig)))
    }

    fn is_feasible(&self, _config: &()) -> bool {
        true
    }
}

/// Unit propagation direction for azimuth/elevation angles.
pub fn unit_direction(az_rad: f64, el_rad: f64) -> Vector3<f64> {
    Vector3::new(
        el_rad.cos() * az_rad.cos(),
        el_rad.cos() * az_rad.sin(),
        el_rad.sin(),
    )
}

/// Array steering vector: entry n is exp(-j 2π/λ <p_n, u(az, el)>).
pub fn steering_vector(array: &ArrayDescriptor, az_rad: f64, el_rad: f64) -> Result<CVec> {
    array.validate()?;
    let u = unit_direction(az_rad, el_rad);
    let k_wave = 2.0 * std::f64::consts::PI / array.wavelength_m;
    Ok(CVec::from_iterator(
        array.len(),
        array
            .positions_m
            .iter()
            .map(|p| Complex64::from_polar(1.0, -k_wave * p.dot(&u))),
    ))
}

/// Geometric multipath channel: H_k = Σ_p g_p a_rx(p) a_tx(p)* e^{-j2π f_k τ_p}.
///
/// Paths without a fixed gain draw from CN(0, 1/P_rand) using the seed, so a
/// given seed is bit-reproducible.
pub fn generate_channel(
    params: &MultipathParams,
    tx: &ArrayDescriptor,
    rx: &ArrayDescriptor,
    seed: u64,
) -> Result<ChannelTensor> {
    params.validate()?;
    tx.validate()?;
    rx.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_random = params.paths.iter().filter(|p| p.gain.is_none()).count();
    let scale = if n_random > 0 {
        1.0 / (n_random as f64).sqrt()
    } else {
        1.0
    };
    let gains: Vec<Complex64> = params
        .paths
        .iter()
        .map(|p| p.gain.unwrap_or_else(|| sample_cn(&mut rng) * scale))
        .collect();

    let freqs = params.subcarrier_frequencies();
    let mut mats = Vec::with_capacity(params.num_subcarriers);
    let rank_one: Vec<CMat> = params
        .paths
        .iter()
        .map(|p| {
            let a_rx = steering_vector(rx, p.aoa_az_rad, p.aoa_el_rad)?;
            let a_tx = steering_vector(tx, p.aod_az_rad, p.aod_el_rad)?;
            Ok(&a_rx * a_tx.adjoint())
        })
        .collect::<Result<Vec<_>>>()?;
    for &f_k in &freqs {
        let mut h = CMat::zeros(rx.len(), tx.len());
        for (idx, p) in params.paths.iter().enumerate() {
            let phase = -2.0 * std::f64::consts::PI * f_k * p.delay_s;
            h += &rank_one[idx] * (gains[idx] * Complex64::from_polar(1.0, phase));
        }
        mats.push(h);
    }
    ChannelTensor::new(mats, freqs)
}

/// Average mutual information over subcarriers in bits/s/Hz:
/// (1/K) Σ_k log2 det(I + (1/σ²) H_k F_ana F_dig F_dig* F_ana* H_k*).
pub fn mutual_information<C>(
    h_eff: &ChannelTensor,
    precoders: &PrecoderSet<C>,
    noise: &NoiseModel,
) -> Result<f64> {
    if h_eff.num_subcarriers() != precoders.num_subcarriers() {
        return Err(Error::DimensionMismatch(format!(
            "channel has {} subcarriers, precoders {}",
            h_eff.num_subcarriers(),
            precoders.num_subcarriers()
        )));
    }
    let k_total = h_eff.num_subcarriers();
    let inv_noise = Complex64::new(1.0 / noise.variance_w, 0.0);
    let mut acc = 0.0;
    for k in 0..k_total {
        let h = h_eff.matrix(k);
        if h.ncols() != precoders.analog[k].nrows() {
            return Err(Error::DimensionMismatch(format!(
                "channel ({}x{}) and analog precoder ({}x{}) at subcarrier {k}",
                h.nrows(),
                h.ncols(),
                precoders.analog[k].nrows(),
                precoders.analog[k].ncols()
            )));
        }
        let a = h * precoders.combined(k);
        let n_r = a.nrows();
        let gram = &a * a.adjoint() * inv_noise;
        let m = hermitian_part(&(CMat::identity(n_r, n_r) + gram));
        if !all_finite(&m) {
            return Err(Error::NonFinite(format!("Gram matrix at subcarrier {k}")));
        }
        let chol = nalgebra::Cholesky::new(m)
            .ok_or_else(|| Error::NonFinite(format!("determinant factorization failed at subcarrier {k}")))?;
        let log2det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.re.log2()).sum::<f64>();
        acc += log2det;
    }
    Ok(acc / k_total as f64)
}

/// Precoder-matching objective: Σ_k ||F_opt_k - F_ra_k F_ana_k F_dig_k||_F².
pub fn frobenius_matching<F: FrontEnd>(
    f_opt: &ChannelTensor,
    precoders: &PrecoderSet<F::Config>,
    front_end: &F,
) -> Result<f64> {
    if f_opt.num_subcarriers() != precoders.num_subcarriers() {
        return Err(Error::DimensionMismatch(format!(
            "target has {} subcarriers, precoders {}",
            f_opt.num_subcarriers(),
            precoders.num_subcarriers()
        )));
    }
    let mut acc = 0.0;
    for k in 0..f_opt.num_subcarriers() {
        let f_ra = front_end.ra_precoder(&precoders.antenna_config, k)?;
        if f_ra.ncols() != precoders.analog[k].nrows() {
            return Err(Error::DimensionMismatch(format!(
                "ra precoder ({}x{}) and analog precoder ({}x{}) at subcarrier {k}",
                f_ra.nrows(),
                f_ra.ncols(),
                precoders.analog[k].nrows(),
                precoders.analog[k].ncols()
            )));
        }
        let product = f_ra * precoders.combined(k);
        if product.shape() != f_opt.matrix(k).shape() {
            return Err(Error::DimensionMismatch(format!(
                "product {:?} vs target {:?} at subcarrier {k}",
                product.shape(),
                f_opt.matrix(k).shape()
            )));
        }
        acc += frob_norm_sq(&(f_opt.matrix(k) - product));
    }
    Ok(acc)
}

/// Scale the digital precoders so the totaled radiated power meets the
/// budget with equality. Valid for every front end here: radiated power is
/// quadratic in the digital precoder.
pub fn scale_to_power_budget<F: FrontEnd>(
    front_end: &F,
    precoders: &mut PrecoderSet<F::Config>,
    p_max_w: f64,
) -> Result<f64> {
    if !(p_max_w > 0.0) {
        return Err(Error::InvalidParameter("power budget must be > 0".into()));
    }
    let current = front_end.total_radiated_power(&precoders.antenna_config, precoders)?;
    if current <= 0.0 {
        return Err(Error::InvalidParameter(
            "cannot scale a zero-power precoder to a budget".into(),
        ));
    }
    let scale = (p_max_w / current).sqrt();
    for f in &mut precoders.digital {
        *f = f.scale(scale);
    }
    Ok(front_end.total_radiated_power(&precoders.antenna_config, precoders)?)
}

/// Transmit power budget: true iff Σ_k P_k <= p_max. Negative per-subcarrier
/// power signals a model bug upstream and is rejected.
pub fn check_power_budget(powers: &[f64], p_max_w: f64) -> Result<bool> {
    for (k, &p) in powers.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::NonFinite(format!("power at subcarrier {k}")));
        }
        if p < 0.0 {
            return Err(Error::NegativePower {
                value: p,
                context: format!("subcarrier {k} in power budget"),
            });
        }
    }
    Ok(powers.iter().sum::<f64>() <= p_max_w)
}
