//! Non-radiating wires: a connected line of dipoles with periodic feed
//! points, reconfigured through the loads terminating the non-excited ports.
//!
//! The port impedance comes from a spatial-harmonic admittance kernel Φ(α)
//! integrated over one Floquet period. Feed points have a finite gap width
//! (default: the wire radius); the gap profile weights the harmonics and
//! keeps the kernel series absolutely convergent, which the ideal delta-gap
//! feed is not. Both the harmonic truncation and the quadrature node count
//! are doubled until their relative change passes the acceptance tolerance.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{guarded_inverse, hermitian_part, CMat, CVec, COND_CEILING, J};
use crate::model::{ChannelTensor, FrontEnd};
use crate::special::{i0k0, j0, y0};

/// Periodically fed thin-wire geometry.
#[derive(Debug, Clone)]
pub struct WireGeometry {
    /// Wire radius a (m).
    pub radius_m: f64,
    /// Port spacing Δ (m).
    pub spacing_m: f64,
    /// Free-space wavenumber k0 (rad/m).
    pub wavenumber_rad_per_m: f64,
    /// Intrinsic impedance Z0 (Ohm).
    pub intrinsic_impedance_ohm: f64,
    /// Number of ports.
    pub num_ports: usize,
    /// Indices of actively excited ports; the rest are load-terminated.
    pub excited_ports: Vec<usize>,
    /// Feed gap width (m); regularizes the harmonic series.
    pub feed_gap_m: f64,
}

impl WireGeometry {
    pub fn new(
        radius_m: f64,
        spacing_m: f64,
        wavenumber_rad_per_m: f64,
        intrinsic_impedance_ohm: f64,
        num_ports: usize,
        excited_ports: Vec<usize>,
    ) -> Result<Self> {
        let g = Self {
            radius_m,
            spacing_m,
            wavenumber_rad_per_m,
            intrinsic_impedance_ohm,
            num_ports,
            excited_ports,
            feed_gap_m: radius_m,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius_m > 0.0) || !(self.spacing_m > 0.0) || !(self.feed_gap_m > 0.0) {
            return Err(Error::InvalidGeometry(
                "wire radius, spacing, and feed gap must be > 0".into(),
            ));
        }
        if !(self.wavenumber_rad_per_m > 0.0) || !(self.intrinsic_impedance_ohm > 0.0) {
            return Err(Error::InvalidParameter("k0 and Z0 must be > 0".into()));
        }
        if self.num_ports == 0 {
            return Err(Error::EmptyInput("wire ports".into()));
        }
        if self.excited_ports.iter().any(|&p| p >= self.num_ports) {
            return Err(Error::InvalidParameter("excited port index out of range".into()));
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavenumber_rad_per_m
    }

    /// Longitudinal position of port n.
    pub fn port_z_m(&self, n: usize) -> f64 {
        n as f64 * self.spacing_m
    }

    /// Per-port termination: `load` at non-excited ports, `source` at
    /// excited ports.
    pub fn uniform_loads(&self, load_ohm: Complex64, source_ohm: Complex64) -> Vec<Complex64> {
        (0..self.num_ports)
            .map(|n| {
                if self.excited_ports.contains(&n) {
                    source_ohm
                } else {
                    load_ohm
                }
            })
            .collect()
    }

    /// Excitation voltage vector: unit drive at excited ports.
    pub fn excitation(&self) -> CVec {
        CVec::from_fn(self.num_ports, |n, _| {
            if self.excited_ports.contains(&n) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

const KERNEL_TOL: f64 = 1e-6;
const KERNEL_L_START: usize = 8;
const KERNEL_L_MAX: usize = 1 << 16;
const QUAD_TOL: f64 = 1e-6;
const QUAD_TOL_HARD: f64 = 1e-4;
const QUAD_NODES_START: usize = 64;
const QUAD_NODES_MAX: usize = 1 << 14;
const GRAZE_EPS_FRAC: f64 = 1e-9;

/// One term of the harmonic sum at harmonic index l. Grazing harmonics
/// (β = 0) are singular and reported as errors.
fn kernel_term(alpha: f64, geom: &WireGeometry, l: i64) -> Result<Complex64> {
    let period = 2.0 * std::f64::consts::PI / geom.spacing_m;
    let alpha_l = alpha - l as f64 * period;
    let k0 = geom.wavenumber_rad_per_m;
    let beta_sq = k0 * k0 - alpha_l * alpha_l;
    if beta_sq.abs() < (GRAZE_EPS_FRAC * k0 * k0).max(f64::MIN_POSITIVE) {
        return Err(Error::SingularHarmonic(l));
    }
    let gap_weight = (-(alpha_l * geom.feed_gap_m).powi(2) / 4.0).exp();
    let product = if beta_sq > 0.0 {
        // propagating: J0(βa) H0^(2)(βa), branch β > 0
        let ba = beta_sq.sqrt() * geom.radius_m;
        let h02 = Complex64::new(j0(ba), -y0(ba));
        Complex64::new(j0(ba), 0.0) * h02
    } else {
        // evanescent, Im(β) <= 0: J0 H0^(2) at -jτ is I0(τ) K0(τ) (2j/π)
        let tau = (-beta_sq).sqrt() * geom.radius_m;
        J * (2.0 / std::f64::consts::PI) * i0k0(tau)
    };
    Ok(Complex64::new(gap_weight / beta_sq, 0.0) / product)
}

/// Harmonic kernel Φ(α) truncated at |l| <= l_trunc.
pub fn phi_kernel(alpha: f64, geom: &WireGeometry, l_trunc: usize) -> Result<Complex64> {
    geom.validate()?;
    if l_trunc < 1 {
        return Err(Error::InvalidParameter("l_trunc must be >= 1".into()));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for l in -(l_trunc as i64)..=(l_trunc as i64) {
        sum += kernel_term(alpha, geom, l)?;
    }
    Ok(sum)
}

/// Kernel with the truncation chosen by a doubling tolerance loop.
/// Returns the converged value and the truncation order used.
pub fn phi_kernel_converged(alpha: f64, geom: &WireGeometry) -> Result<(Complex64, usize)> {
    let mut l = KERNEL_L_START;
    let mut prev = phi_kernel(alpha, geom, l)?;
    while l < KERNEL_L_MAX {
        let cur = phi_kernel(alpha, geom, 2 * l)?;
        if (cur - prev).norm() < KERNEL_TOL * cur.norm() {
            return Ok((cur, 2 * l));
        }
        prev = cur;
        l *= 2;
    }
    Err(Error::Convergence(format!(
        "harmonic kernel did not reach {KERNEL_TOL:.0e} by L = {KERNEL_L_MAX}"
    )))
}

/// Table of port impedances `z[mΔ]` for m = 0..max_m, sharing one kernel grid
/// across all separations.
#[derive(Debug, Clone)]
pub struct PortImpedanceTable {
    pub values: Vec<Complex64>,
    pub quadrature_nodes: usize,
}

impl PortImpedanceTable {
    pub fn build(geom: &WireGeometry, max_m: usize) -> Result<Self> {
        geom.validate()?;
        let period = 2.0 * std::f64::consts::PI / geom.spacing_m;
        let k0 = geom.wavenumber_rad_per_m;
        let eps = GRAZE_EPS_FRAC * period;
        // grazing points inside the periodic interval
        let mut grazes = vec![k0 % period, (period - k0 % period) % period];
        grazes.retain(|g| g.is_finite());

        let shift_off_graze = |alpha: f64| -> f64 {
            let mut a = alpha;
            for &g in &grazes {
                if (a - g).abs() < eps {
                    a = g + 2.0 * eps;
                }
            }
            a
        };

        let prefactor = geom.intrinsic_impedance_ohm * geom.spacing_m.powi(2)
            / (8.0 * std::f64::consts::PI * k0);

        let integrate = |alphas: &[f64], inv_phi: &[Complex64]| -> Vec<Complex64> {
            let h = period / alphas.len() as f64;
            (0..=max_m)
                .map(|m| {
                    let sep = m as f64 * geom.spacing_m;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (&a, &y) in alphas.iter().zip(inv_phi) {
                        acc += y * Complex64::from_polar(1.0, a * sep);
                    }
                    acc * h * prefactor
                })
                .collect()
        };

        let eval_nodes = |alphas: &[f64]| -> Result<Vec<Complex64>> {
            alphas
                .iter()
                .map(|&a| {
                    let (phi, _) = phi_kernel_converged(a, geom)?;
                    Ok(Complex64::new(1.0, 0.0) / phi)
                })
                .collect()
        };

        let mut n = QUAD_NODES_START;
        let mut alphas: Vec<f64> = (0..n)
            .map(|q| shift_off_graze(q as f64 * period / n as f64))
            .collect();
        let mut inv_phi = eval_nodes(&alphas)?;
        let mut prev = integrate(&alphas, &inv_phi);

        while n < QUAD_NODES_MAX {
            // interleave midpoints; previous nodes keep their kernel values
            let n2 = 2 * n;
            let mut alphas2 = Vec::with_capacity(n2);
            let mut inv2 = Vec::with_capacity(n2);
            for q in 0..n {
                alphas2.push(alphas[q]);
                inv2.push(inv_phi[q]);
                let mid = shift_off_graze((2 * q + 1) as f64 * period / n2 as f64);
                alphas2.push(mid);
                inv2.push(Complex64::new(0.0, 0.0)); // filled below
            }
            for q in 0..n {
                let (phi, _) = phi_kernel_converged(alphas2[2 * q + 1], geom)?;
                inv2[2 * q + 1] = Complex64::new(1.0, 0.0) / phi;
            }
            let cur = integrate(&alphas2, &inv2);
            let rel = relative_change(&prev, &cur);
            alphas = alphas2;
            inv_phi = inv2;
            n = n2;
            if rel < QUAD_TOL {
                return Ok(Self {
                    values: cur,
                    quadrature_nodes: n,
                });
            }
            prev = cur;
        }
        // node cap reached: accept only within the hard tolerance
        let alphas2: Vec<f64> = alphas.clone();
        let cur = integrate(&alphas2, &inv_phi);
        let rel = relative_change(&prev, &cur);
        if rel > QUAD_TOL_HARD {
            return Err(Error::Convergence(format!(
                "port-impedance quadrature stuck at relative change {rel:.2e} with {n} nodes"
            )));
        }
        Ok(Self {
            values: cur,
            quadrature_nodes: n,
        })
    }

    /// Symmetric Toeplitz port-impedance matrix `[Z]_ij = z[|i-j|Δ]`.
    pub fn matrix(&self, num_ports: usize) -> Result<CMat> {
        if num_ports > self.values.len() {
            return Err(Error::DimensionMismatch(format!(
                "table holds {} separations, matrix needs {num_ports}",
                self.values.len()
            )));
        }
        Ok(CMat::from_fn(num_ports, num_ports, |i, j| {
            self.values[i.abs_diff(j)]
        }))
    }
}

// Largest change across the table, relative to the dominant (self-impedance)
// scale: far-port entries are orders of magnitude below z[0] and would never
// meet a per-entry relative bound that z[0] itself satisfies easily.
fn relative_change(prev: &[Complex64], cur: &[Complex64]) -> f64 {
    let scale = cur
        .iter()
        .map(|c| c.norm())
        .fold(f64::MIN_POSITIVE, f64::max);
    prev.iter()
        .zip(cur)
        .map(|(p, c)| (p - c).norm() / scale)
        .fold(0.0, f64::max)
}

/// Impedance `z[mΔ]` between two ports m spacings apart.
pub fn port_impedance(geom: &WireGeometry, m: usize) -> Result<Complex64> {
    Ok(PortImpedanceTable::build(geom, m)?.values[m])
}

/// Full symmetric Toeplitz impedance matrix of the wire.
pub fn impedance_matrix(geom: &WireGeometry) -> Result<CMat> {
    PortImpedanceTable::build(geom, geom.num_ports.saturating_sub(1))?.matrix(geom.num_ports)
}

/// Load-based precoder F_ra = (Z_ra + diag(z_load))^{-1}.
pub fn wire_precoder(z_ra: &CMat, loads: &[Complex64]) -> Result<CMat> {
    if z_ra.nrows() != loads.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} loads for {} ports",
            loads.len(),
            z_ra.nrows()
        )));
    }
    let mut sum = z_ra.clone();
    for (i, &z) in loads.iter().enumerate() {
        sum[(i, i)] += z;
    }
    guarded_inverse(&sum, COND_CEILING, "wire precoder")
}

/// Average radiated power Tr(F_dig* F_ana* Re{Z_ra^{-1}} F_ana F_dig), the
/// real part taken on the Hermitian part of the inverse.
pub fn radiated_power(z_ra: &CMat, f_ana: &CMat, f_dig: &CMat) -> Result<f64> {
    let inv = guarded_inverse(z_ra, COND_CEILING, "wire admittance")?;
    let re_y = hermitian_part(&inv).map(|z| Complex64::new(z.re, 0.0));
    if f_ana.nrows() != re_y.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "analog precoder has {} rows, expected {}",
            f_ana.nrows(),
            re_y.ncols()
        )));
    }
    Ok((f_dig.adjoint() * f_ana.adjoint() * re_y * f_ana * f_dig)
        .trace()
        .re)
}

/// Observation grid for the near-field map, in wavelengths.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    pub z_over_lambda: Vec<f64>,
    pub r_over_lambda: Vec<f64>,
}

impl FieldGrid {
    /// Uniform line scan at fixed radial distance.
    pub fn line(z_min: f64, z_max: f64, n_z: usize, r: f64) -> Self {
        let step = if n_z > 1 {
            (z_max - z_min) / (n_z - 1) as f64
        } else {
            0.0
        };
        Self {
            z_over_lambda: (0..n_z).map(|i| z_min + i as f64 * step).collect(),
            r_over_lambda: vec![r],
        }
    }
}

/// SNR samples over the observation grid. Points coincident with a port are
/// masked as NaN.
#[derive(Debug, Clone)]
pub struct FieldMap {
    pub rows: Vec<FieldSample>,
    pub grid: FieldGrid,
}

#[derive(Debug, Clone, Copy)]
pub struct FieldSample {
    pub z_over_lambda: f64,
    pub r_over_lambda: f64,
    pub snr_db: f64,
}

impl FieldMap {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "z_over_lambda,r_over_lambda,snr_db")?;
        for s in &self.rows {
            writeln!(w, "{},{},{}", s.z_over_lambda, s.r_over_lambda, s.snr_db)?;
        }
        Ok(())
    }

    /// SNR profile along z at the given radial index.
    pub fn z_profile(&self, r_index: usize) -> Vec<f64> {
        let r = self.grid.r_over_lambda[r_index];
        self.rows
            .iter()
            .filter(|s| s.r_over_lambda == r)
            .map(|s| s.snr_db)
            .collect()
    }

    /// Index of the deepest SNR minimum along z within [lo, hi] (inclusive,
    /// in z/λ units), NaN samples skipped.
    pub fn null_argmin_z(&self, r_index: usize, lo: f64, hi: f64) -> Option<usize> {
        let profile = self.z_profile(r_index);
        let zs = &self.grid.z_over_lambda;
        profile
            .iter()
            .enumerate()
            .filter(|(i, v)| zs[*i] >= lo && zs[*i] <= hi && v.is_finite())
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
    }
}

/// Near-field SNR map: per observation point, the channel row is built from
/// the scalar free-space Green's function to every port, and
/// SNR = |h F_ra v|² / σ² for the configured excitation.
pub fn snr_field_map(
    geom: &WireGeometry,
    z_ra: &CMat,
    loads: &[Complex64],
    grid: &FieldGrid,
    noise_variance_w: f64,
) -> Result<FieldMap> {
    if grid.z_over_lambda.is_empty() || grid.r_over_lambda.is_empty() {
        return Err(Error::EmptyInput("field grid".into()));
    }
    if !(noise_variance_w > 0.0) {
        return Err(Error::InvalidParameter("noise variance must be > 0".into()));
    }
    let f_ra = wire_precoder(z_ra, loads)?;
    let v = geom.excitation();
    let drive = &f_ra * &v;
    let lambda = geom.wavelength_m();
    let k0 = geom.wavenumber_rad_per_m;

    let mut rows = Vec::with_capacity(grid.z_over_lambda.len() * grid.r_over_lambda.len());
    for &r_l in &grid.r_over_lambda {
        for &z_l in &grid.z_over_lambda {
            let (z, r) = (z_l * lambda, r_l * lambda);
            let mut field = Complex64::new(0.0, 0.0);
            let mut masked = false;
            for n in 0..geom.num_ports {
                let dz = z - geom.port_z_m(n);
                let d = (dz * dz + r * r).sqrt();
                if d == 0.0 {
                    masked = true;
                    break;
                }
                let green = Complex64::from_polar(1.0 / (4.0 * std::f64::consts::PI * d), -k0 * d);
                field += green * drive[n];
            }
            let snr_db = if masked {
                f64::NAN
            } else {
                10.0 * (field.norm_sqr() / noise_variance_w).log10()
            };
            rows.push(FieldSample {
                z_over_lambda: z_l,
                r_over_lambda: r_l,
                snr_db,
            });
        }
    }
    Ok(FieldMap {
        rows,
        grid: grid.clone(),
    })
}

/// Wire front end: fixed port-impedance matrix, loads as the configuration.
#[derive(Debug, Clone)]
pub struct WireFrontEnd {
    pub geometry: WireGeometry,
    pub z_ra: CMat,
    pub channel: ChannelTensor,
}

impl WireFrontEnd {
    pub fn new(geometry: WireGeometry, channel: ChannelTensor) -> Result<Self> {
        let z_ra = impedance_matrix(&geometry)?;
        if channel.ncols() != geometry.num_ports {
            return Err(Error::DimensionMismatch(format!(
                "channel has {} columns, wire {} ports",
                channel.ncols(),
                geometry.num_ports
            )));
        }
        Ok(Self {
            geometry,
            z_ra,
            channel,
        })
    }
}

impl FrontEnd for WireFrontEnd {
    type Config = Vec<Complex64>;

    fn num_subcarriers(&self) -> usize {
        self.channel.num_subcarriers()
    }

    fn effective_channel(&self, config: &Vec<Complex64>, k: usize) -> Result<CMat> {
        let f_ra = wire_precoder(&self.z_ra, config)?;
        Ok(self.channel.matrix(k) * f_ra)
    }

    fn ra_precoder(&self, config: &Vec<Complex64>, _k: usize) -> Result<CMat> {
        wire_precoder(&self.z_ra, config)
    }

    fn radiated_power(
        &self,
        _config: &Vec<Complex64>,
        _k: usize,
        f_ana: &CMat,
        f_dig: &CMat,
    ) -> Result<f64> {
        radiated_power(&self.z_ra, f_ana, f_dig)
    }

    fn is_feasible(&self, config: &Vec<Complex64>) -> bool {
        config.len() == self.geometry.num_ports
            && config.iter().all(|z| z.re >= 0.0 && z.norm().is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_geometry() -> WireGeometry {
        let lambda = 0.1;
        WireGeometry::new(
            lambda / 200.0,
            lambda / 4.0,
            2.0 * std::f64::consts::PI / lambda,
            376.730313668,
            4,
            vec![0],
        )
        .unwrap()
    }

    #[test]
    fn kernel_tolerance_loop_converges() {
        let geom = reference_geometry();
        let period = 2.0 * std::f64::consts::PI / geom.spacing_m;
        let (phi, l_used) = phi_kernel_converged(0.31 * period, &geom).unwrap();
        assert!(phi.norm() > 0.0);
        // self-convergence: doubling the chosen truncation moves the value
        // by less than the tolerance
        let again = phi_kernel(0.31 * period, &geom, 2 * l_used).unwrap();
        assert!((phi - again).norm() < 1e-6 * again.norm());
    }

    #[test]
    fn kernel_reflection_symmetry() {
        let geom = reference_geometry();
        let period = 2.0 * std::f64::consts::PI / geom.spacing_m;
        for frac in [0.13, 0.31, 0.42] {
            let (a, _) = phi_kernel_converged(frac * period, &geom).unwrap();
            let (b, _) = phi_kernel_converged((1.0 - frac) * period, &geom).unwrap();
            assert!(
                (a - b).norm() < 1e-5 * a.norm(),
                "phi not symmetric at frac {frac}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn kernel_termwise_decay_audit() {
        // k0 a << 1: term magnitudes fall off with |β_l| in the small-τ regime
        let geom = reference_geometry();
        let period = 2.0 * std::f64::consts::PI / geom.spacing_m;
        let alpha = 0.31 * period;
        let mut prev = f64::INFINITY;
        for l in 2..20 {
            let t = kernel_term(alpha, &geom, l).unwrap().norm();
            assert!(t < prev, "term magnitude grew at l = {l}");
            prev = t;
        }
    }

    #[test]
    fn grazing_harmonic_is_an_error() {
        let geom = reference_geometry();
        // alpha = k0 puts harmonic l = 0 exactly at grazing
        let res = phi_kernel(geom.wavenumber_rad_per_m, &geom, 4);
        assert!(matches!(res, Err(Error::SingularHarmonic(0))));
    }

    #[test]
    fn impedance_table_and_matrix_properties() {
        let geom = reference_geometry();
        let table = PortImpedanceTable::build(&geom, 3).unwrap();
        assert_eq!(table.values.len(), 4);
        // Ohm-scale self impedance, finite everywhere
        assert!(table.values[0].norm() > 1.0 && table.values[0].norm() < 1e4);

        let z = table.matrix(4).unwrap();
        // exact symmetric Toeplitz by construction
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(z[(i, j)], table.values[i.abs_diff(j)]);
                assert_eq!(z[(i, j)], z[(j, i)]);
            }
        }
    }

    #[test]
    fn impedance_scales_linearly_in_z0() {
        let geom = reference_geometry();
        let mut geom2 = geom.clone();
        geom2.intrinsic_impedance_ohm *= 2.0;
        let t1 = PortImpedanceTable::build(&geom, 1).unwrap();
        let t2 = PortImpedanceTable::build(&geom2, 1).unwrap();
        for (a, b) in t1.values.iter().zip(&t2.values) {
            assert!((b - a * Complex64::new(2.0, 0.0)).norm() < 1e-9 * b.norm());
        }
    }

    #[test]
    fn precoder_diagonal_and_multiply_back() {
        let z = CMat::from_fn(2, 2, |i, j| {
            if i == j {
                Complex64::new(10.0, 2.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let loads = vec![Complex64::new(40.0, -2.0); 2];
        let f = wire_precoder(&z, &loads).unwrap();
        assert_relative_eq!(f[(0, 0)].re, 0.02, epsilon = 1e-14);
        assert_relative_eq!(f[(0, 0)].im, 0.0, epsilon = 1e-14);

        let mut sum = z.clone();
        for i in 0..2 {
            sum[(i, i)] += loads[i];
        }
        let product = sum * &f;
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(product[(i, j)].re, expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn different_terminations_give_different_precoders() {
        let z = CMat::from_fn(3, 3, |i, j| {
            let m = i.abs_diff(j) as f64;
            Complex64::new(80.0 / (1.0 + m), -12.0 * m)
        });
        let free_space = wire_precoder(&z, &vec![Complex64::new(377.0, 0.0); 3]).unwrap();
        let matched = wire_precoder(&z, &vec![Complex64::new(50.0, 0.0); 3]).unwrap();
        let diff: f64 = (&free_space - &matched).iter().map(|x| x.norm_sqr()).sum();
        assert!(diff > 1e-12, "termination change left the precoder unchanged");
    }

    #[test]
    fn power_resistive_identity_and_zero() {
        let r = 50.0;
        let z = CMat::identity(3, 3).scale(r);
        let f_ana = CMat::identity(3, 3);
        let mut f_dig = CMat::zeros(3, 2);
        f_dig[(0, 0)] = Complex64::new(1.0, 1.0);
        f_dig[(2, 1)] = Complex64::new(0.0, -2.0);
        let p = radiated_power(&z, &f_ana, &f_dig).unwrap();
        let norm_sq: f64 = f_dig.iter().map(|x| x.norm_sqr()).sum();
        assert_relative_eq!(p, norm_sq / r, epsilon = 1e-12);
        assert_relative_eq!(
            radiated_power(&z, &f_ana, &CMat::zeros(3, 2)).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn field_map_scaling_and_mask() {
        let geom = reference_geometry();
        // small synthetic Toeplitz impedance avoids the full kernel build here
        let z = CMat::from_fn(4, 4, |i, j| {
            let m = i.abs_diff(j) as f64;
            Complex64::new(50.0 / (1.0 + m), -5.0 * m)
        });
        let loads = geom.uniform_loads(Complex64::new(377.0, 0.0), Complex64::new(50.0, 0.0));
        let grid = FieldGrid::line(-0.5, 1.5, 41, 0.05);
        let map1 = snr_field_map(&geom, &z, &loads, &grid, 1e-6).unwrap();
        let map2 = snr_field_map(&geom, &z, &loads, &grid, 2e-6).unwrap();
        for (a, b) in map1.rows.iter().zip(&map2.rows) {
            if a.snr_db.is_finite() {
                // doubling σ² halves linear SNR: -10 log10(2) dB
                assert_relative_eq!(a.snr_db - b.snr_db, 10.0 * 2f64.log10(), epsilon = 1e-9);
            }
        }

        // observation point exactly on port 0 is masked
        let on_port = FieldGrid {
            z_over_lambda: vec![0.0],
            r_over_lambda: vec![0.0],
        };
        let m = snr_field_map(&geom, &z, &loads, &on_port, 1e-6).unwrap();
        assert!(m.rows[0].snr_db.is_nan());
    }

    #[test]
    fn field_map_mirror_symmetry() {
        // symmetric excitation and loads on a symmetric geometry: the map is
        // symmetric in z about the array center
        let lambda = 0.1;
        let geom = WireGeometry::new(
            lambda / 200.0,
            lambda / 4.0,
            2.0 * std::f64::consts::PI / lambda,
            376.73,
            5,
            vec![0, 4],
        )
        .unwrap();
        let z = CMat::from_fn(5, 5, |i, j| {
            let m = i.abs_diff(j) as f64;
            Complex64::new(60.0 / (1.0 + m * m), -8.0 * m)
        });
        let loads = geom.uniform_loads(Complex64::new(377.0, 0.0), Complex64::new(50.0, 0.0));
        let center = geom.port_z_m(2) / lambda;
        let n = 81;
        let grid = FieldGrid::line(center - 1.0, center + 1.0, n, 0.03);
        let map = snr_field_map(&geom, &z, &loads, &grid, 1e-6).unwrap();
        let profile = map.z_profile(0);
        for i in 0..n {
            let a = profile[i];
            let b = profile[n - 1 - i];
            if a.is_finite() && b.is_finite() {
                assert!((a - b).abs() < 1e-10, "asymmetry at index {i}: {a} vs {b}");
            }
        }
    }
}
