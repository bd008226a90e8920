//! Complex matrix helpers shared by the channel models and front ends.
//!
//! All matrices are dense `nalgebra` matrices over `Complex<f64>`. The helpers
//! here cover the handful of operations the front-end models keep reaching
//! for: block-diagonal assembly, Hermitian symmetrization, guarded inversion,
//! and seeded random matrix generation for synthesis and tests.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const J: Complex64 = Complex64::new(0.0, 1.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Squared Frobenius norm.
pub fn frob_norm_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Hermitian part (M + M*)/2.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// True if every entry is finite.
pub fn all_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Block-diagonal matrix from rectangular blocks.
pub fn block_diag(blocks: &[CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// Block-diagonal matrix whose blocks are column vectors.
pub fn block_diag_cols(cols: &[CVec]) -> CMat {
    let blocks: Vec<CMat> = cols
        .iter()
        .map(|v| CMat::from_column_slice(v.len(), 1, v.as_slice()))
        .collect();
    block_diag(&blocks)
}

/// 2-norm condition number via SVD. Infinite when the smallest singular
/// value underflows to zero. An empty matrix is perfectly conditioned.
pub fn condition_number(m: &CMat) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if smin <= 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Inverse guarded by a condition-number ceiling. Ill-conditioned inputs
/// return a singular-configuration error instead of amplified round-off.
pub fn guarded_inverse(m: &CMat, cond_ceiling: f64, context: &str) -> Result<CMat> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{context}: cannot invert {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.is_empty() {
        return Ok(m.clone());
    }
    let cond = condition_number(m);
    if !cond.is_finite() || cond > cond_ceiling {
        return Err(Error::SingularConfiguration(format!(
            "{context}: condition number {cond:.3e} exceeds {cond_ceiling:.1e}"
        )));
    }
    m.clone().lu().try_inverse().ok_or_else(|| {
        Error::SingularConfiguration(format!("{context}: LU inversion failed"))
    })
}

/// Default ceiling used by the load-based front ends.
pub const COND_CEILING: f64 = 1e12;

/// Standard complex normal sample, CN(0, 1).
pub fn sample_cn<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) / 2f64.sqrt()
}

/// Matrix with i.i.d. CN(0, 1) entries.
pub fn random_cn_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| sample_cn(rng))
}

/// Random unitary matrix from the QR factorization of a Gaussian matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> CMat {
    let g = random_cn_matrix(rng, n, n);
    let qr = g.qr();
    qr.q()
}

/// Unitary DFT matrix, symmetric by construction.
pub fn dft_matrix(n: usize) -> CMat {
    let scale = 1.0 / (n as f64).sqrt();
    CMat::from_fn(n, n, |r, c| {
        let phase = -2.0 * std::f64::consts::PI * (r * c) as f64 / n as f64;
        Complex64::from_polar(scale, phase)
    })
}

/// Splitmix64 step, used to derive independent per-task seeds from a root
/// seed without coupling the streams.
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    let mut z = root
        .wrapping_add(0x9e3779b97f4a7c15)
        .wrapping_add(stream.wrapping_mul(0xbf58476d1ce4e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn block_diag_places_blocks() {
        let a = CMat::from_element(2, 1, ONE);
        let b = CMat::from_element(1, 2, 2.0 * ONE);
        let m = block_diag(&[a, b]);
        assert_eq!(m.nrows(), 3);
        assert_eq!(m.ncols(), 3);
        assert_eq!(m[(0, 0)], ONE);
        assert_eq!(m[(1, 0)], ONE);
        assert_eq!(m[(2, 1)], 2.0 * ONE);
        assert_eq!(m[(2, 2)], 2.0 * ONE);
        assert_eq!(m[(0, 1)], ZERO);
    }

    #[test]
    fn dft_is_unitary_and_symmetric() {
        let w = dft_matrix(5);
        let should_be_eye = &w * w.adjoint();
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(should_be_eye[(i, j)].re, expect, epsilon = 1e-12);
                assert_relative_eq!(should_be_eye[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
        assert!((w.clone() - w.transpose()).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn guarded_inverse_rejects_singular() {
        let m = CMat::zeros(2, 2);
        assert!(guarded_inverse(&m, COND_CEILING, "test").is_err());
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_unitary(&mut rng, 4);
        let g = &u * u.adjoint();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(g[(i, j)].re, expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn derive_seed_differs_per_stream() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(1, 3), derive_seed(1, 3));
    }
}
