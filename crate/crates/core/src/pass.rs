//! Pinching antenna systems: movable dielectric couplers extract guided-wave
//! energy at reconfigurable positions along waveguides.
//!
//! Coupling is sequential: each pinch radiates a fraction of whatever field
//! survives the pinches before it, so the per-element amplitudes are tied
//! together. Positions enter only through the guided-wave phase, which makes
//! the radiated power invariant to pinch placement.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{block_diag_cols, CMat, CVec};
use crate::model::{ChannelTensor, FrontEnd};

/// Pinch positions and coupling coefficients for one waveguide.
#[derive(Debug, Clone)]
pub struct PinchedGuide {
    /// Pinch positions along the guide, strictly increasing (meters).
    pub positions_m: Vec<f64>,
    /// Amplitude coupling coefficients, each in (0, 1).
    pub couplings: Vec<f64>,
}

/// Multi-waveguide pinching layout.
#[derive(Debug, Clone)]
pub struct WaveguideLayout {
    pub guides: Vec<PinchedGuide>,
    pub beta_g_rad_per_m: f64,
}

impl WaveguideLayout {
    pub fn validate(&self) -> Result<()> {
        if self.guides.is_empty() {
            return Err(Error::EmptyInput("waveguide list".into()));
        }
        for (p, g) in self.guides.iter().enumerate() {
            if g.positions_m.len() != g.couplings.len() {
                return Err(Error::DimensionMismatch(format!(
                    "guide {p}: {} positions vs {} couplings",
                    g.positions_m.len(),
                    g.couplings.len()
                )));
            }
            if g.positions_m.is_empty() {
                return Err(Error::EmptyInput(format!("guide {p} has no pinches")));
            }
            if g.positions_m.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidGeometry(format!(
                    "guide {p}: pinch positions must be strictly increasing"
                )));
            }
            if g.couplings.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
                return Err(Error::InvalidParameter(format!(
                    "guide {p}: coupling coefficients must lie in (0, 1)"
                )));
            }
        }
        Ok(())
    }

    pub fn num_guides(&self) -> usize {
        self.guides.len()
    }

    pub fn total_pinches(&self) -> usize {
        self.guides.iter().map(|g| g.positions_m.len()).sum()
    }

    /// Uniform-coupling guides with pinches spaced `spacing_m` apart.
    pub fn uniform(
        num_guides: usize,
        pinches_per_guide: usize,
        spacing_m: f64,
        delta: f64,
        beta_g_rad_per_m: f64,
    ) -> Result<Self> {
        let layout = Self {
            guides: (0..num_guides)
                .map(|_| PinchedGuide {
                    positions_m: (0..pinches_per_guide).map(|m| m as f64 * spacing_m).collect(),
                    couplings: vec![delta; pinches_per_guide],
                })
                .collect(),
            beta_g_rad_per_m,
        };
        layout.validate()?;
        Ok(layout)
    }
}

/// Radiated field amplitudes under sequential coupling:
/// α_m = δ_m Π_{i<m} sqrt(1 - δ_i²).
pub fn amplitudes(deltas: &[f64]) -> Result<Vec<f64>> {
    if deltas.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
        return Err(Error::InvalidParameter(
            "coupling coefficients must lie in (0, 1)".into(),
        ));
    }
    let mut residual = 1.0;
    let mut out = Vec::with_capacity(deltas.len());
    for &d in deltas {
        out.push(d * residual);
        residual *= (1.0 - d * d).sqrt();
    }
    Ok(out)
}

/// Complex pinch weights of guide p: `[f_p]_m = α_m e^{-j β_g x_{p,m}}`.
pub fn pinch_weights(layout: &WaveguideLayout, p: usize) -> Result<CVec> {
    layout.validate()?;
    if p >= layout.num_guides() {
        return Err(Error::InvalidParameter(format!(
            "guide index {p} out of range ({} guides)",
            layout.num_guides()
        )));
    }
    let guide = &layout.guides[p];
    let alpha = amplitudes(&guide.couplings)?;
    Ok(CVec::from_iterator(
        alpha.len(),
        alpha
            .iter()
            .zip(&guide.positions_m)
            .map(|(&a, &x)| Complex64::from_polar(a, -layout.beta_g_rad_per_m * x)),
    ))
}

/// Fraction of input power radiated by a guide:
/// η = Σ α_m² = 1 - Π (1 - δ_m²).
pub fn guide_efficiency(deltas: &[f64]) -> Result<f64> {
    if deltas.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
        return Err(Error::InvalidParameter(
            "coupling coefficients must lie in (0, 1)".into(),
        ));
    }
    Ok(1.0 - deltas.iter().map(|&d| 1.0 - d * d).product::<f64>())
}

/// Block-diagonal pinching precoder, one weight column per guide.
pub fn pass_precoder(layout: &WaveguideLayout) -> Result<CMat> {
    let cols = (0..layout.num_guides())
        .map(|p| pinch_weights(layout, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(block_diag_cols(&cols))
}

/// Radiated power Tr(F_dig* F_ana* Γ F_ana F_dig) with Γ = diag(η_p).
/// Positions do not appear: radiation efficiency depends only on couplings.
pub fn radiated_power(layout: &WaveguideLayout, f_ana: &CMat, f_dig: &CMat) -> Result<f64> {
    layout.validate()?;
    if f_ana.nrows() != layout.num_guides() {
        return Err(Error::DimensionMismatch(format!(
            "analog precoder has {} rows, expected {} guides",
            f_ana.nrows(),
            layout.num_guides()
        )));
    }
    let combined = f_ana * f_dig;
    let mut total = 0.0;
    for (p, guide) in layout.guides.iter().enumerate() {
        let eta = guide_efficiency(&guide.couplings)?;
        let row: f64 = combined.row(p).iter().map(|z| z.norm_sqr()).sum();
        total += eta * row;
    }
    Ok(total)
}

/// Clamp applied to the last coupling when the equal-power recursion demands
/// δ = 1 exactly: the open-interval domain excludes 1.
pub const DELTA_CLAMP: f64 = 1.0 - 1e-12;

/// Couplings that radiate a uniform amplitude α from every pinch:
/// δ_m = α / sqrt(1 - (m-1) α²).
pub fn equal_power_deltas(num_pinches: usize, alpha: f64) -> Result<Vec<f64>> {
    if num_pinches == 0 {
        return Err(Error::EmptyInput("pinch count".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter("amplitude must be > 0".into()));
    }
    let m = num_pinches as f64;
    if (m - 1.0) * alpha * alpha >= 1.0 {
        return Err(Error::Infeasible(format!(
            "(M-1) α² = {} >= 1: uniform amplitude {alpha} infeasible for {num_pinches} pinches",
            (m - 1.0) * alpha * alpha
        )));
    }
    if m * alpha * alpha > 1.0 + 1e-12 {
        return Err(Error::Infeasible(format!(
            "M α² = {} > 1: total radiated fraction exceeds unity",
            m * alpha * alpha
        )));
    }
    let mut deltas = Vec::with_capacity(num_pinches);
    for idx in 0..num_pinches {
        let denom = 1.0 - idx as f64 * alpha * alpha;
        let d = alpha / denom.sqrt();
        deltas.push(if d >= 1.0 { DELTA_CLAMP } else { d });
    }
    Ok(deltas)
}

/// Pinching front end over a propagation channel with one column per pinch.
#[derive(Debug, Clone)]
pub struct PassFrontEnd {
    pub channel: ChannelTensor,
}

impl FrontEnd for PassFrontEnd {
    type Config = WaveguideLayout;

    fn num_subcarriers(&self) -> usize {
        self.channel.num_subcarriers()
    }

    fn effective_channel(&self, config: &WaveguideLayout, k: usize) -> Result<CMat> {
        let f_ra = pass_precoder(config)?;
        if self.channel.ncols() != f_ra.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "channel has {} columns, layout {} pinches",
                self.channel.ncols(),
                f_ra.nrows()
            )));
        }
        Ok(self.channel.matrix(k) * f_ra)
    }

    fn ra_precoder(&self, config: &WaveguideLayout, _k: usize) -> Result<CMat> {
        pass_precoder(config)
    }

    fn radiated_power(
        &self,
        config: &WaveguideLayout,
        _k: usize,
        f_ana: &CMat,
        f_dig: &CMat,
    ) -> Result<f64> {
        radiated_power(config, f_ana, f_dig)
    }

    fn is_feasible(&self, config: &WaveguideLayout) -> bool {
        config.validate().is_ok() && config.total_pinches() == self.channel.ncols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frob_norm_sq, random_cn_matrix};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn single_pinch_amplitude_is_linear() {
        for d in [0.1, 0.35, 0.82] {
            let a = amplitudes(&[d]).unwrap();
            assert_relative_eq!(a[0], d, epsilon = 1e-15);
        }
    }

    #[test]
    fn two_step_product_example() {
        // δ = (1/√2, 1⁻): α = (1/√2, 1/√2) up to the clamp.
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let a = amplitudes(&[r, DELTA_CLAMP]).unwrap();
        assert_relative_eq!(a[0], r, epsilon = 1e-12);
        assert_relative_eq!(a[1], r, epsilon = 1e-9);
    }

    #[test]
    fn telescoping_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..500 {
            let n = rng.gen_range(1..8);
            let deltas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
            let a = amplitudes(&deltas).unwrap();
            let sum_sq: f64 = a.iter().map(|x| x * x).sum();
            let residual: f64 = deltas.iter().map(|d| 1.0 - d * d).product();
            assert!((sum_sq + residual - 1.0).abs() < 1e-14);
            assert_relative_eq!(guide_efficiency(&deltas).unwrap(), sum_sq, epsilon = 1e-13);
        }
    }

    #[test]
    fn amplitudes_reject_out_of_range() {
        assert!(amplitudes(&[0.5, 1.0]).is_err());
        assert!(amplitudes(&[0.0]).is_err());
        assert!(amplitudes(&[-0.2]).is_err());
    }

    fn layout_one_guide(positions: Vec<f64>, deltas: Vec<f64>, beta: f64) -> WaveguideLayout {
        WaveguideLayout {
            guides: vec![PinchedGuide {
                positions_m: positions,
                couplings: deltas,
            }],
            beta_g_rad_per_m: beta,
        }
    }

    #[test]
    fn weights_phase_cases() {
        // β = 0: purely real amplitudes
        let l = layout_one_guide(vec![0.0, 0.01, 0.02], vec![0.3, 0.4, 0.5], 0.0);
        let w = pinch_weights(&l, 0).unwrap();
        let a = amplitudes(&[0.3, 0.4, 0.5]).unwrap();
        for (i, z) in w.iter().enumerate() {
            assert_relative_eq!(z.re, a[i], epsilon = 1e-15);
            assert_relative_eq!(z.im, 0.0, epsilon = 1e-15);
        }

        // shifting by a full guided wavelength leaves weights unchanged
        let lambda_g = 0.012;
        let beta = 2.0 * PI / lambda_g;
        let l1 = layout_one_guide(vec![0.0, 0.005], vec![0.3, 0.4], beta);
        let l2 = layout_one_guide(vec![lambda_g, 0.005 + lambda_g], vec![0.3, 0.4], beta);
        let w1 = pinch_weights(&l1, 0).unwrap();
        let w2 = pinch_weights(&l2, 0).unwrap();
        for i in 0..2 {
            assert!((w1[i] - w2[i]).norm() < 1e-12);
        }

        // quarter-wavelength offset: relative phase -π/2
        let l3 = layout_one_guide(vec![0.0, lambda_g / 4.0], vec![0.5, 0.5], beta);
        let w3 = pinch_weights(&l3, 0).unwrap();
        let rel = w3[1] / w3[0];
        assert_relative_eq!(rel.arg(), -PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn efficiency_cases() {
        assert_relative_eq!(guide_efficiency(&[0.6]).unwrap(), 0.36, epsilon = 1e-15);
        assert!(guide_efficiency(&[DELTA_CLAMP]).unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn power_diagonal_expansion_and_unit_efficiency() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        // near-unit efficiency guides: power approaches the Frobenius norm
        let full = equal_power_deltas(4, 0.5).unwrap();
        let layout = WaveguideLayout {
            guides: (0..2)
                .map(|_| PinchedGuide {
                    positions_m: vec![0.0, 0.01, 0.02, 0.03],
                    couplings: full.clone(),
                })
                .collect(),
            beta_g_rad_per_m: 100.0,
        };
        let f_ana = random_cn_matrix(&mut rng, 2, 2);
        let f_dig = random_cn_matrix(&mut rng, 2, 2);
        let p = radiated_power(&layout, &f_ana, &f_dig).unwrap();
        assert_relative_eq!(p, frob_norm_sq(&(&f_ana * &f_dig)), epsilon = 1e-9);

        // mixed efficiencies: diagonal expansion oracle
        let layout2 = WaveguideLayout {
            guides: vec![
                PinchedGuide {
                    positions_m: vec![0.0, 0.01],
                    couplings: vec![0.3, 0.6],
                },
                PinchedGuide {
                    positions_m: vec![0.0],
                    couplings: vec![0.8],
                },
            ],
            beta_g_rad_per_m: 50.0,
        };
        let combined = &f_ana * &f_dig;
        let eta0 = guide_efficiency(&[0.3, 0.6]).unwrap();
        let eta1 = guide_efficiency(&[0.8]).unwrap();
        let expect = eta0 * combined.row(0).iter().map(|z| z.norm_sqr()).sum::<f64>()
            + eta1 * combined.row(1).iter().map(|z| z.norm_sqr()).sum::<f64>();
        assert_relative_eq!(
            radiated_power(&layout2, &f_ana, &f_dig).unwrap(),
            expect,
            epsilon = 1e-12
        );
    }

    #[test]
    fn power_invariant_to_positions_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let deltas = vec![0.4, 0.25, 0.7];
        let f_ana = random_cn_matrix(&mut rng, 1, 1);
        let f_dig = random_cn_matrix(&mut rng, 1, 2);
        let l1 = layout_one_guide(vec![0.0, 0.01, 0.02], deltas.clone(), 120.0);
        let l2 = layout_one_guide(vec![0.003, 0.017, 0.19], deltas, 120.0);
        let p1 = radiated_power(&l1, &f_ana, &f_dig).unwrap();
        let p2 = radiated_power(&l2, &f_ana, &f_dig).unwrap();
        assert_eq!(p1.to_bits(), p2.to_bits());
    }

    #[test]
    fn equal_power_examples() {
        // M = 4, alpha = 1/2
        let d = equal_power_deltas(4, 0.5).unwrap();
        assert_relative_eq!(d[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(d[1], 0.5 / 0.75f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(d[2], 0.5 / 0.5f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(d[3], DELTA_CLAMP, epsilon = 1e-15);
        let a = amplitudes(&d).unwrap();
        for &x in &a {
            assert!((x - 0.5).abs() < 1e-12);
        }

        // alpha = 1/sqrt(M): δ_m = 1/sqrt(M - m + 1), η -> 1
        let m = 6;
        let alpha = 1.0 / (m as f64).sqrt();
        let d = equal_power_deltas(m, alpha).unwrap();
        for (i, &di) in d.iter().enumerate() {
            let expect = (1.0 / (m - i) as f64).sqrt();
            assert!((di - expect.min(DELTA_CLAMP)).abs() < 1e-9);
        }
        assert!(guide_efficiency(&d).unwrap() > 1.0 - 1e-9);

        // M = 1
        assert_relative_eq!(equal_power_deltas(1, 0.3).unwrap()[0], 0.3, epsilon = 1e-15);

        // infeasible
        assert!(matches!(
            equal_power_deltas(5, 0.5),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn proportional_model_amplitude_decay_and_interior_peak() {
        // uniform δ: amplitudes strictly decreasing from the first element
        let a = amplitudes(&vec![0.45; 6]).unwrap();
        for w in a.windows(2) {
            assert!(w[1] < w[0]);
        }

        // for m > 1 there is an interior maximizer of α_m over δ at 1/sqrt(m)
        for m in [2usize, 3, 5] {
            let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
            let mut best = (0usize, f64::MIN);
            for (gi, &d) in grid.iter().enumerate() {
                let a = amplitudes(&vec![d; m]).unwrap();
                if a[m - 1] > best.1 {
                    best = (gi, a[m - 1]);
                }
            }
            assert!(best.0 > 0 && best.0 < grid.len() - 1, "peak not interior");
            assert!((grid[best.0] - 1.0 / (m as f64).sqrt()).abs() < 0.02);
        }
    }
}
