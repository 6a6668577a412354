//! Variances of the inferred observables, the collective uncertainty and its
//! lower bound.

use nalgebra::{Matrix2, Matrix2x4, Matrix4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::GaussianMoments;

/// One sample of the uncertainty curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UncertaintyPoint {
    pub t: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub var_inferred_x: f64,
    pub var_inferred_p: f64,
    pub u_sq: f64,
    pub bound: f64,
    pub xi1_sq: f64,
    pub xi2_sq: f64,
    pub det_a: f64,
}

impl UncertaintyPoint {
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        t: f64,
        moments: &GaussianMoments,
        sigma1_sq: f64,
        sigma2_sq: f64,
        xi1_sq: f64,
        xi2_sq: f64,
        det_a: f64,
    ) -> Self {
        let (var_inferred_x, var_inferred_p) =
            inferred_variances(moments, sigma1_sq, sigma2_sq, xi1_sq, xi2_sq);
        Self {
            t,
            sigma1_sq,
            sigma2_sq,
            var_inferred_x,
            var_inferred_p,
            u_sq: collective_uncertainty(var_inferred_x, var_inferred_p),
            bound: lower_bound(moments, sigma1_sq.sqrt(), sigma2_sq.sqrt(), xi1_sq, xi2_sq),
            xi1_sq,
            xi2_sq,
            det_a,
        }
    }

    /// `U² − bound`.
    pub fn gap(&self) -> f64 {
        self.u_sq - self.bound
    }
}

/// `σ_k² = v_k cov_J v_kᵀ` with `(v₁; v₂) = A⁻¹ B`.
pub fn pointer_contributions(
    a: &Matrix2<f64>,
    b: &Matrix2x4<f64>,
    cov_j: &Matrix4<f64>,
    t: f64,
) -> Result<(f64, f64)> {
    let det = a.determinant();
    let inv = a.try_inverse().ok_or(Error::SingularInference { t, det })?;
    let v = inv * b;
    let s = v * cov_j * v.transpose();
    Ok((s[(0, 0)].max(0.0), s[(1, 1)].max(0.0)))
}

/// Initial system variance plus pointer and noise contributions.
pub fn inferred_variances(
    m: &GaussianMoments,
    sigma1_sq: f64,
    sigma2_sq: f64,
    xi1_sq: f64,
    xi2_sq: f64,
) -> (f64, f64) {
    (
        m.var_xs0 + sigma1_sq + xi1_sq,
        m.var_ps0 + sigma2_sq + xi2_sq,
    )
}

pub fn collective_uncertainty(var_x: f64, var_p: f64) -> f64 {
    var_x * var_p
}

/// `1 + Ξ₁²Ξ₂² + (Ξ₂²/2)(ΔX_S + σ₁)² + (Ξ₁²/2)(ΔP_S + σ₂)²`, with standard
/// deviations `σ_k`.
pub fn lower_bound(m: &GaussianMoments, sigma1: f64, sigma2: f64, xi1_sq: f64, xi2_sq: f64) -> f64 {
    let x = m.sd_xs0() + sigma1;
    let p = m.sd_ps0() + sigma2;
    1.0 + xi1_sq * xi2_sq + 0.5 * xi2_sq * x * x + 0.5 * xi1_sq * p * p
}

/// `U²` written as the sum of five non-negative terms.
pub fn expanded_uncertainty(
    m: &GaussianMoments,
    sigma1_sq: f64,
    sigma2_sq: f64,
    xi1_sq: f64,
    xi2_sq: f64,
) -> f64 {
    let (dx, dp) = (m.sd_xs0(), m.sd_ps0());
    let (s1, s2) = (sigma1_sq.sqrt(), sigma2_sq.sqrt());
    let cross = dx * s2 - dp * s1;
    let product = dx * dp + s1 * s2;
    cross * cross
        + 0.5 * xi2_sq * ((dx + s1).powi(2) + (dx - s1).powi(2))
        + xi1_sq * xi2_sq
        + product * product
        + 0.5 * xi1_sq * ((dp + s2).powi(2) + (dp - s2).powi(2))
}

/// Both branches of `f = −1 ± 2√U²_min`.
pub fn wodkiewicz_f(u_sq_min: f64) -> (f64, f64) {
    let r = 2.0 * u_sq_min.sqrt();
    (-1.0 - r, -1.0 + r)
}

/// `(σ₁ − ΔX_S(0), σ₂ − ΔP_S(0))`; zero when the pointer contributions match
/// the initial system spreads.
pub fn matching_distance(m: &GaussianMoments, sigma1_sq: f64, sigma2_sq: f64) -> (f64, f64) {
    (sigma1_sq.sqrt() - m.sd_xs0(), sigma2_sq.sqrt() - m.sd_ps0())
}
