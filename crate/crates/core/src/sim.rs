//! Stacked intelligent metasurfaces modeled with transfer scattering
//! parameters.
//!
//! Each layer is a diagonal two-port-per-atom network; propagation between
//! layers is a dense transmission block with zero inter-port reflection.
//! Cascading is plain matrix multiplication of the per-layer and propagation
//! T-matrices; the end-to-end transmission response is the inverse of the
//! 22 block. One response matrix is shared by every subcarrier: the tuning
//! states do not vary with frequency, so the API only ever produces a single
//! response per stack.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{frob_norm_sq, guarded_inverse, CMat, COND_CEILING, ONE};
use crate::model::{ChannelTensor, FrontEnd};

/// One metasurface layer: ideal unit-modulus phase shifts, or per-atom
/// transmission/reflection coefficients.
#[derive(Debug, Clone)]
pub enum MetaLayer {
    Ideal { phases: Vec<f64> },
    Scattering {
        transmission: Vec<Complex64>,
        reflection: Vec<Complex64>,
    },
}

impl MetaLayer {
    pub fn num_atoms(&self) -> usize {
        match self {
            MetaLayer::Ideal { phases } => phases.len(),
            MetaLayer::Scattering { transmission, .. } => transmission.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MetaLayer::Ideal { phases } => {
                if phases.is_empty() {
                    return Err(Error::EmptyInput("ideal layer phases".into()));
                }
                if phases.iter().any(|p| !p.is_finite()) {
                    return Err(Error::NonFinite("layer phase".into()));
                }
            }
            MetaLayer::Scattering {
                transmission,
                reflection,
            } => {
                if transmission.len() != reflection.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} transmission vs {} reflection coefficients",
                        transmission.len(),
                        reflection.len()
                    )));
                }
                if transmission.is_empty() {
                    return Err(Error::EmptyInput("scattering layer".into()));
                }
                if transmission.iter().any(|t| t.norm() > 1.0 + 1e-12) {
                    return Err(Error::InvalidParameter(
                        "lossy layer requires |T| <= 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn coefficients(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        match self {
            MetaLayer::Ideal { phases } => (
                phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect(),
                vec![Complex64::new(0.0, 0.0); phases.len()],
            ),
            MetaLayer::Scattering {
                transmission,
                reflection,
            } => (transmission.clone(), reflection.clone()),
        }
    }
}

/// Per-layer T-parameter matrix: 2N x 2N with diagonal blocks
/// G11 = T - R²/T, G12 = R/T, G21 = -R/T, G22 = 1/T per atom.
pub fn layer_tparam(layer: &MetaLayer) -> Result<CMat> {
    layer.validate()?;
    let (t, r) = layer.coefficients();
    let n = t.len();
    let mut g = CMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        if t[i].norm() == 0.0 {
            return Err(Error::SingularConfiguration(format!(
                "opaque atom {i}: zero transmission coefficient"
            )));
        }
        let ratio = r[i] / t[i];
        g[(i, i)] = t[i] - r[i] * ratio;
        g[(i, n + i)] = ratio;
        g[(n + i, i)] = -ratio;
        g[(n + i, n + i)] = ONE / t[i];
    }
    Ok(g)
}

/// Interlayer propagation geometry for the Rayleigh-Sommerfeld kernel.
#[derive(Debug, Clone)]
pub struct SimGeometry {
    pub layer_spacing_m: f64,
    pub atom_area_m2: f64,
    pub wavelength_m: f64,
    /// Atoms per row of the square-grid layer.
    pub grid_cols: usize,
}

impl SimGeometry {
    /// Atom center positions in a layer plane, centered on the axis.
    pub fn atom_positions(&self, n_atoms: usize) -> Vec<(f64, f64)> {
        let pitch = self.atom_area_m2.sqrt();
        let cols = self.grid_cols.max(1);
        let rows = n_atoms.div_ceil(cols);
        let x0 = -(cols as f64 - 1.0) / 2.0 * pitch;
        let y0 = -(rows as f64 - 1.0) / 2.0 * pitch;
        (0..n_atoms)
            .map(|n| {
                let (r, c) = (n / cols, n % cols);
                (x0 + c as f64 * pitch, y0 + r as f64 * pitch)
            })
            .collect()
    }

    /// RS transmission coefficient between two points separated by the layer
    /// spacing axially and `(dx, dy)` transversally:
    /// w = (A cos χ / d)(1/(2πd) - j/λ) e^{j2πd/λ}.
    pub fn rs_coefficient(&self, dx: f64, dy: f64) -> Complex64 {
        let d = (dx * dx + dy * dy + self.layer_spacing_m * self.layer_spacing_m).sqrt();
        let cos_chi = self.layer_spacing_m / d;
        let amp = self.atom_area_m2 * cos_chi / d;
        let radial = Complex64::new(
            1.0 / (2.0 * std::f64::consts::PI * d),
            -1.0 / self.wavelength_m,
        );
        let phase = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * d / self.wavelength_m);
        amp * radial * phase
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMode {
    /// Identity transmission; conservation testing and reduced models.
    Ideal,
    /// Rayleigh-Sommerfeld diffraction between layer planes.
    Rs,
}

/// Interlayer propagation T-matrix: the transmission block W embedded with
/// zero inter-port reflection, i.e. blkdiag(W, W^{-1}).
pub fn rs_propagation(geometry: &SimGeometry, n_atoms: usize, mode: PropagationMode) -> Result<CMat> {
    if !(geometry.layer_spacing_m > 0.0) {
        return Err(Error::InvalidGeometry("layer spacing must be > 0".into()));
    }
    let w = match mode {
        PropagationMode::Ideal => CMat::identity(n_atoms, n_atoms),
        PropagationMode::Rs => {
            let pos = geometry.atom_positions(n_atoms);
            CMat::from_fn(n_atoms, n_atoms, |i, j| {
                geometry.rs_coefficient(pos[i].0 - pos[j].0, pos[i].1 - pos[j].1)
            })
        }
    };
    propagation_from_transmission(&w)
}

/// Embed an arbitrary invertible transmission matrix as a reflectionless
/// propagation T-matrix blkdiag(W, W^{-1}).
pub fn propagation_from_transmission(w: &CMat) -> Result<CMat> {
    let n = w.nrows();
    if w.ncols() != n {
        return Err(Error::DimensionMismatch(
            "transmission block must be square".into(),
        ));
    }
    let w_inv = guarded_inverse(w, COND_CEILING, "interlayer transmission")?;
    let mut p = CMat::zeros(2 * n, 2 * n);
    p.view_mut((0, 0), (n, n)).copy_from(w);
    p.view_mut((n, n), (n, n)).copy_from(&w_inv);
    Ok(p)
}

/// Feed channel from M antennas to the first layer via the RS kernel.
/// Antennas sit on a centered half-wavelength line `feed_distance_m` behind
/// the first layer; larger distances make the feed columns more alike and
/// the channel harder to invert.
pub fn rs_feed_channel(
    geometry: &SimGeometry,
    n_atoms: usize,
    num_antennas: usize,
    feed_distance_m: f64,
) -> CMat {
    let atoms = geometry.atom_positions(n_atoms);
    let pitch = geometry.wavelength_m / 2.0;
    let x0 = -(num_antennas as f64 - 1.0) / 2.0 * pitch;
    let feed_geom = SimGeometry {
        layer_spacing_m: feed_distance_m,
        ..geometry.clone()
    };
    CMat::from_fn(n_atoms, num_antennas, |i, j| {
        let ax = x0 + j as f64 * pitch;
        feed_geom.rs_coefficient(atoms[i].0 - ax, atoms[i].1)
    })
}

/// A stack: L layers, L-1 interlayer propagation matrices, feed channel.
#[derive(Debug, Clone)]
pub struct SimStack {
    pub layers: Vec<MetaLayer>,
    pub propagation: Vec<CMat>,
    pub h_it: CMat,
}

impl SimStack {
    pub fn new(layers: Vec<MetaLayer>, propagation: Vec<CMat>, h_it: CMat) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::EmptyInput("metasurface stack".into()));
        }
        let n = layers[0].num_atoms();
        for l in &layers {
            l.validate()?;
            if l.num_atoms() != n {
                return Err(Error::DimensionMismatch(
                    "all layers must have the same atom count".into(),
                ));
            }
        }
        if propagation.len() + 1 != layers.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} propagation sections for {} layers",
                propagation.len(),
                layers.len()
            )));
        }
        for p in &propagation {
            if p.nrows() != 2 * n || p.ncols() != 2 * n {
                return Err(Error::DimensionMismatch(format!(
                    "propagation matrix must be {0}x{0}",
                    2 * n
                )));
            }
        }
        if h_it.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "feed channel has {} rows, expected {n} atoms",
                h_it.nrows()
            )));
        }
        Ok(Self {
            layers,
            propagation,
            h_it,
        })
    }

    /// Ideal-phase stack with a common propagation matrix between layers.
    pub fn ideal(phases: Vec<Vec<f64>>, propagation: CMat, h_it: CMat) -> Result<Self> {
        let n_layers = phases.len();
        let layers = phases
            .into_iter()
            .map(|p| MetaLayer::Ideal { phases: p })
            .collect();
        Self::new(layers, vec![propagation; n_layers.saturating_sub(1)], h_it)
    }

    pub fn num_atoms(&self) -> usize {
        self.layers[0].num_atoms()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Replace ideal-layer phases, keeping propagation and feed.
    pub fn with_phases(&self, phases: &[Vec<f64>]) -> Result<Self> {
        if phases.len() != self.num_layers() {
            return Err(Error::DimensionMismatch(format!(
                "{} phase vectors for {} layers",
                phases.len(),
                self.num_layers()
            )));
        }
        let layers = phases
            .iter()
            .map(|p| MetaLayer::Ideal { phases: p.clone() })
            .collect();
        Self::new(layers, self.propagation.clone(), self.h_it.clone())
    }
}

/// End-to-end transmission response: cascade the layer and propagation
/// T-matrices and invert the 22 block.
pub fn cascade(stack: &SimStack) -> Result<CMat> {
    let n = stack.num_atoms();
    let mut t = layer_tparam(&stack.layers[0])?;
    for (p, layer) in stack.propagation.iter().zip(&stack.layers[1..]) {
        t = t * p * layer_tparam(layer)?;
    }
    let t22 = t.view((n, n), (n, n)).into_owned();
    guarded_inverse(&t22, COND_CEILING, "stack 22 block").map_err(|_| {
        Error::SingularConfiguration("non-transmissive stack: 22 block not invertible".into())
    })
}

/// Direct forward product Θ_L W_{L-1} ... W_1 Θ_1 for reflectionless stacks.
/// Fast path used by the optimizers; cascade() is the general route and the
/// two agree for reflectionless stacks.
pub fn forward_response(stack: &SimStack) -> Result<CMat> {
    let n = stack.num_atoms();
    let mut psi: Option<CMat> = None;
    for (idx, layer) in stack.layers.iter().enumerate() {
        let (t, r) = layer.coefficients();
        if r.iter().any(|z| z.norm() > 0.0) {
            return Err(Error::InvalidParameter(
                "forward response requires reflectionless layers".into(),
            ));
        }
        let theta = CMat::from_fn(n, n, |i, j| {
            if i == j {
                t[i]
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        psi = Some(match psi {
            None => theta,
            Some(acc) => {
                let w = stack.propagation[idx - 1].view((0, 0), (n, n)).into_owned();
                theta * w * acc
            }
        });
    }
    Ok(psi.expect("stack validated nonempty"))
}

/// Effective channel H_RI,k Ψ H_IT.
pub fn effective_channel(h_ri_k: &CMat, psi: &CMat, h_it: &CMat) -> Result<CMat> {
    if h_ri_k.ncols() != psi.nrows() || psi.ncols() != h_it.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "chain {}x{} * {}x{} * {}x{}",
            h_ri_k.nrows(),
            h_ri_k.ncols(),
            psi.nrows(),
            psi.ncols(),
            h_it.nrows(),
            h_it.ncols()
        )));
    }
    Ok(h_ri_k * psi * h_it)
}

/// Radiated power ||Ψ H_IT F_ana F_dig||_F².
pub fn radiated_power(psi: &CMat, h_it: &CMat, f_ana: &CMat, f_dig: &CMat) -> Result<f64> {
    if psi.ncols() != h_it.nrows() || h_it.ncols() != f_ana.nrows() || f_ana.ncols() != f_dig.nrows()
    {
        return Err(Error::DimensionMismatch(
            "radiated power chain does not conform".into(),
        ));
    }
    Ok(frob_norm_sq(&(psi * h_it * f_ana * f_dig)))
}

/// Front end: frequency-flat stack response embedded between the feed
/// channel and the per-subcarrier receive-side channel.
#[derive(Debug, Clone)]
pub struct SimFrontEnd {
    template: SimStack,
    h_ri: ChannelTensor,
}

impl SimFrontEnd {
    pub fn new(template: SimStack, h_ri: ChannelTensor) -> Result<Self> {
        if h_ri.ncols() != template.num_atoms() {
            return Err(Error::DimensionMismatch(format!(
                "receive channel has {} columns, stack {} atoms",
                h_ri.ncols(),
                template.num_atoms()
            )));
        }
        Ok(Self { template, h_ri })
    }

    pub fn stack(&self) -> &SimStack {
        &self.template
    }

    pub fn response(&self, config: &Vec<Vec<f64>>) -> Result<CMat> {
        cascade(&self.template.with_phases(config)?)
    }
}

impl FrontEnd for SimFrontEnd {
    type Config = Vec<Vec<f64>>;

    fn num_subcarriers(&self) -> usize {
        self.h_ri.num_subcarriers()
    }

    fn effective_channel(&self, config: &Vec<Vec<f64>>, k: usize) -> Result<CMat> {
        let psi = self.response(config)?;
        effective_channel(self.h_ri.matrix(k), &psi, &self.template.h_it)
    }

    fn ra_precoder(&self, config: &Vec<Vec<f64>>, _k: usize) -> Result<CMat> {
        self.response(config)
    }

    fn radiated_power(
        &self,
        config: &Vec<Vec<f64>>,
        _k: usize,
        f_ana: &CMat,
        f_dig: &CMat,
    ) -> Result<f64> {
        let psi = self.response(config)?;
        radiated_power(&psi, &self.template.h_it, f_ana, f_dig)
    }

    fn is_feasible(&self, config: &Vec<Vec<f64>>) -> bool {
        config.len() == self.template.num_layers()
            && config.iter().all(|p| {
                p.len() == self.template.num_atoms() && p.iter().all(|z| z.is_finite())
            })
    }
}
