//! Dense matrix helpers shared by the propagator, noise and oracle modules.

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};

/// Matrix exponential `exp(a * t)`.
///
/// Backed by nalgebra's Padé scaling-and-squaring routine. A non-finite
/// result is reported as [`Error::ExpNonConvergence`].
pub fn expm_scaled(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if t == 0.0 {
        return Ok(DMatrix::identity(a.nrows(), a.ncols()));
    }
    let scaled = a * t;
    let e = scaled.exp();
    if e.iter().all(|x| x.is_finite()) {
        Ok(e)
    } else {
        Err(Error::ExpNonConvergence(format!(
            "non-finite entries in exp(C t) for t = {t}, |C|_1 = {:.3e}",
            a.abs().column_sum().max()
        )))
    }
}

/// `Z(L) = ∫_0^L exp(C τ) Y exp(C τ)^T dτ` together with `exp(C L)`.
///
/// The block exponential `exp([[-C, Y], [0, C^T]] h)` yields `Z(h)` for a step
/// small enough that `exp(-C h)` stays well conditioned; the full length is then
/// reached by doubling, `Z(2h) = Z(h) + Φ(h) Z(h) Φ(h)^T`. Only forward flows
/// are multiplied during doubling, so stiff decaying modes do not cancel.
pub fn gramian_integral(
    c: &DMatrix<f64>,
    y: &DMatrix<f64>,
    length: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = c.nrows();
    if length <= 0.0 {
        return Ok((DMatrix::zeros(n, n), DMatrix::identity(n, n)));
    }
    let norm = c.abs().column_sum().max().max(f64::MIN_POSITIVE);
    let doublings = (length * norm / 0.5).log2().ceil().max(0.0) as u32;
    let h = length / f64::from(2u32.pow(doublings));

    let mut block = DMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&(-c));
    block.view_mut((0, n), (n, n)).copy_from(y);
    block.view_mut((n, n), (n, n)).copy_from(&c.transpose());
    let e = expm_scaled(&block, h)?;
    let mut phi = e.view((n, n), (n, n)).transpose();
    let mut z = &phi * e.view((0, n), (n, n));
    for _ in 0..doublings {
        z = &z + &phi * &z * phi.transpose();
        phi = &phi * &phi;
    }
    Ok((z, phi))
}

/// Smallest eigenvalue of a symmetric 2×2 matrix.
pub fn min_eigenvalue_sym2(m: &Matrix2<f64>) -> f64 {
    let mean = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let half_diff = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    mean - half_diff.hypot(off)
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}
