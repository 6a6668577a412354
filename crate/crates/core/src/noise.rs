//! Covariance of the accumulated pointer noise `Λ(t) = ∫₀ᵗ G(t−s) ξ(s) ds`.
//!
//! With `u = s₁ − s₂` the double integral becomes
//! `λ(t) = ∫₀ᵗ ν(u) [T(u) + T(u)ᵀ] du`, where
//! `T(u) = P ∫₀^{t−u} Φ(τ) W Wᵀ Φ(u)ᵀ Φ(τ)ᵀ dτ P ᵀ`, `Φ` is the flow of the
//! augmented generator, `W` injects the pointer forces and `P` picks the
//! pointer positions. The inner integral is a Gramian evaluated in closed form,
//! which leaves a single integral over `u` carrying the logarithmic singularity
//! of `ν` at `u = 0`.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::Autocorrelation;
use crate::linalg::{expm_scaled, gramian_integral, min_eigenvalue_sym2};
use crate::model::NumericalSettings;
use crate::propagator::AugmentedGenerator;
use crate::quadrature::GaussLegendre;

/// Graded Gauss–Legendre rule on `[0, t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseQuadrature {
    pub panels: usize,
    pub order: usize,
    pub grading: f64,
    pub min_panel: f64,
}

/// Fraction of `[0, t]` covered by the geometrically graded panels.
const GRADED_FRACTION: f64 = 0.05;

impl NoiseQuadrature {
    pub fn from_settings(n: &NumericalSettings) -> Self {
        Self {
            panels: n.noise_panels,
            order: n.noise_order,
            grading: n.noise_grading,
            min_panel: n.noise_min_panel,
        }
    }

    /// Twice the uniform panels and twice the graded panels.
    pub fn doubled(&self) -> Self {
        Self {
            panels: 2 * self.panels,
            grading: self.grading.sqrt(),
            ..*self
        }
    }

    /// Panel edges: geometric towards `u = 0`, uniform beyond `0.05 t`.
    pub fn edges(&self, t: f64) -> Vec<f64> {
        let graded_end = GRADED_FRACTION * t;
        let mut graded = vec![graded_end];
        let floor = self.min_panel * t;
        loop {
            let next = graded[graded.len() - 1] * self.grading;
            if next <= floor {
                break;
            }
            graded.push(next);
        }
        let mut edges = vec![0.0];
        edges.extend(graded.iter().rev());
        let h = (t - graded_end) / self.panels as f64;
        edges.extend((1..=self.panels).map(|i| {
            if i == self.panels {
                t
            } else {
                graded_end + h * i as f64
            }
        }));
        edges
    }

    pub fn nodes(&self, t: f64) -> Vec<(f64, f64)> {
        let rule = GaussLegendre::new(self.order);
        self.edges(t)
            .windows(2)
            .flat_map(|w| rule.mapped(w[0], w[1]).collect::<Vec<_>>())
            .collect()
    }
}

/// Symmetrised noise covariance and its image under the inference map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseCovariance {
    pub t: f64,
    pub lambda_cov: Matrix2<f64>,
    pub xi_sq: Matrix2<f64>,
}

impl NoiseCovariance {
    pub fn xi1_sq(&self) -> f64 {
        self.xi_sq[(0, 0)]
    }

    pub fn xi2_sq(&self) -> f64 {
        self.xi_sq[(1, 1)]
    }
}

/// `⟨Λ_a Λ_b + Λ_b Λ_a⟩ / 2` for the two pointer positions.
///
/// Fails with [`Error::NegativeEigenvalue`] when the result is not positive
/// semidefinite within `psd_tol · trace`.
pub fn lambda_covariance<K: Autocorrelation + ?Sized>(
    generator: &AugmentedGenerator,
    kernel: &K,
    t: f64,
    quad: &NoiseQuadrature,
    psd_tol: f64,
) -> Result<Matrix2<f64>> {
    if t <= 0.0 || !generator.has_memory() {
        return Ok(Matrix2::zeros());
    }
    let c = &generator.generator;
    let w = generator.pointer_noise_map();
    let wwt = &w * w.transpose();
    let contributions = quad
        .nodes(t)
        .par_iter()
        .map(|&(u, weight)| -> Result<Matrix2<f64>> {
            let nu = kernel.value(u)?;
            let phi_u = expm_scaled(c, u)?;
            let y: DMatrix<f64> = &wwt * phi_u.transpose();
            let (z, _) = gramian_integral(c, &y, t - u)?;
            let tm = Matrix2::new(z[(1, 1)], z[(1, 2)], z[(2, 1)], z[(2, 2)]);
            Ok((tm + tm.transpose()) * (weight * nu))
        })
        .collect::<Result<Vec<_>>>()?;
    // fixed summation order keeps results bit-reproducible
    let lambda = contributions
        .iter()
        .fold(Matrix2::zeros(), |acc, m| acc + m);
    check_psd(&lambda, psd_tol)?;
    Ok(lambda)
}

fn check_psd(m: &Matrix2<f64>, psd_tol: f64) -> Result<()> {
    let min = min_eigenvalue_sym2(m);
    let tolerance = psd_tol * m.trace().abs();
    if min < -tolerance {
        return Err(Error::NegativeEigenvalue {
            eigenvalue: min,
            tolerance,
        });
    }
    Ok(())
}

/// `Ξ² = A⁻¹ λ A⁻ᵀ`.
pub fn xi_matrix(
    a: &Matrix2<f64>,
    lambda: &Matrix2<f64>,
    t: f64,
    singular_tol: f64,
) -> Result<Matrix2<f64>> {
    let det = a.determinant();
    let scale = a.norm_squared();
    if !(det.abs() > singular_tol * scale) {
        return Err(Error::SingularInference { t, det });
    }
    let inv = a.try_inverse().ok_or(Error::SingularInference { t, det })?;
    let xi = inv * lambda * inv.transpose();
    Ok(0.5 * (xi + xi.transpose()))
}

pub fn noise_covariance<K: Autocorrelation + ?Sized>(
    generator: &AugmentedGenerator,
    kernel: &K,
    a: &Matrix2<f64>,
    t: f64,
    quad: &NoiseQuadrature,
    settings: &NumericalSettings,
) -> Result<NoiseCovariance> {
    let lambda_cov = lambda_covariance(generator, kernel, t, quad, settings.psd_tol)?;
    let xi_sq = xi_matrix(a, &lambda_cov, t, settings.singular_tol)?;
    Ok(NoiseCovariance {
        t,
        lambda_cov,
        xi_sq,
    })
}

/// Smallest eigenvalue of a symmetric matrix, for diagnostics.
pub fn min_eigenvalue(m: &Matrix2<f64>) -> f64 {
    SymmetricEigen::new(*m).eigenvalues.min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{BathKernel, KernelMethod};
    use crate::model::MeasurementConfig;
    use crate::propagator::DynamicsMode;

    fn quad() -> NoiseQuadrature {
        NoiseQuadrature::from_settings(&NumericalSettings::default())
    }

    #[test]
    fn edges_are_sorted_and_cover_interval() {
        let e = quad().edges(2.0);
        assert_eq!(e[0], 0.0);
        assert_eq!(*e.last().unwrap(), 2.0);
        assert!(e.windows(2).all(|w| w[1] > w[0]));
        assert!(e[1] < 1e-11);
        let d = quad().doubled().edges(2.0);
        assert!(d.len() > 2 * e.len() - 4);
    }

    #[test]
    fn closed_measurement_has_no_noise() {
        let cfg = MeasurementConfig::default().with_eta(0.0);
        let g = AugmentedGenerator::new(&cfg, DynamicsMode::Renormalized).unwrap();
        let k = BathKernel::new(&cfg, KernelMethod::Series);
        let l = lambda_covariance(&g, &k, 1.0, &quad(), 1e-10).unwrap();
        assert_eq!(l, Matrix2::zeros());
        let xi = xi_matrix(&Matrix2::new(2.0, 1.0, 0.0, 2.0), &l, 1.0, 1e-12).unwrap();
        assert_eq!(xi, Matrix2::zeros());
    }

    #[test]
    fn xi_with_identity_inference() {
        let xi = xi_matrix(
            &Matrix2::identity(),
            &Matrix2::new(1.0, 0.0, 0.0, 2.0),
            1.0,
            1e-12,
        )
        .unwrap();
        assert_eq!(xi, Matrix2::new(1.0, 0.0, 0.0, 2.0));
    }

    #[test]
    fn singular_inference_rejected() {
        let a = Matrix2::new(1.0, 2.0, 2.0, 4.0);
        assert!(matches!(
            xi_matrix(&a, &Matrix2::identity(), 0.3, 1e-12),
            Err(Error::SingularInference { .. })
        ));
    }

    #[test]
    fn negative_covariance_is_reported() {
        assert!(check_psd(&Matrix2::new(1.0, 0.0, 0.0, -0.5), 1e-10).is_err());
        assert!(check_psd(&Matrix2::new(1.0, 0.0, 0.0, 0.0), 1e-10).is_ok());
    }

    /// Colored noise with `ν(u) = c e^{-γ|u|}` is an Ornstein–Uhlenbeck
    /// process, so the pointer covariance also follows from the Lyapunov
    /// equation of the system extended by two stationary OU variables.
    fn lyapunov_oracle(g: &AugmentedGenerator, c0: f64, gamma: f64, t: f64) -> Matrix2<f64> {
        let n = g.dim();
        let w = g.pointer_noise_map();
        let mut a = DMatrix::zeros(n + 2, n + 2);
        a.view_mut((0, 0), (n, n)).copy_from(&g.generator);
        a.view_mut((0, n), (n, 2)).copy_from(&w);
        a[(n, n)] = -gamma;
        a[(n + 1, n + 1)] = -gamma;
        let mut q = DMatrix::zeros(n + 2, n + 2);
        q[(n, n)] = 2.0 * gamma * c0;
        q[(n + 1, n + 1)] = 2.0 * gamma * c0;
        let mut s = DMatrix::zeros(n + 2, n + 2);
        s[(n, n)] = c0;
        s[(n + 1, n + 1)] = c0;
        let rhs = |s: &DMatrix<f64>| &a * s + s * a.transpose() + &q;
        let steps = 40_000;
        let h = t / steps as f64;
        for _ in 0..steps {
            let k1 = rhs(&s);
            let k2 = rhs(&(&s + &k1 * (0.5 * h)));
            let k3 = rhs(&(&s + &k2 * (0.5 * h)));
            let k4 = rhs(&(&s + &k3 * h));
            s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        Matrix2::new(s[(1, 1)], s[(1, 2)], s[(2, 1)], s[(2, 2)])
    }

    #[test]
    fn exponential_kernel_matches_lyapunov_oracle() {
        let cfg = MeasurementConfig::default();
        let g = AugmentedGenerator::new(&cfg, DynamicsMode::Renormalized).unwrap();
        let (c0, gamma) = (3.0, 7.0);
        let kernel = move |u: f64| c0 * (-gamma * u.abs()).exp();
        for &t in &[0.3, 1.2] {
            let l = lambda_covariance(&g, &kernel, t, &quad(), 1e-10).unwrap();
            let o = lyapunov_oracle(&g, c0, gamma, t);
            let err = (l - o).abs().max() / o.abs().max();
            assert!(err < 1e-8, "t={t}: {l} vs {o}");
        }
    }

    #[test]
    fn short_time_covariance_is_small() {
        let cfg = MeasurementConfig::default();
        let g = AugmentedGenerator::new(&cfg, DynamicsMode::Renormalized).unwrap();
        let k = BathKernel::new(&cfg, KernelMethod::Series);
        for &t in &[1e-3, 1e-2] {
            let l = lambda_covariance(&g, &k, t, &quad(), 1e-10).unwrap();
            let envelope = t * t * (1.0 / t).ln();
            assert!(l.abs().max() < envelope, "t={t}: {l}");
        }
    }

    #[test]
    fn hotter_bath_gives_larger_noise() {
        let cfg = MeasurementConfig::default();
        let g = AugmentedGenerator::new(&cfg, DynamicsMode::Renormalized).unwrap();
        let a = g.propagate(1.0).unwrap().response().a;
        let settings = NumericalSettings::default();
        let xi = |inv_beta: f64| {
            let k = BathKernel::new(&cfg.with_inv_beta(inv_beta), KernelMethod::Series);
            noise_covariance(&g, &k, &a, 1.0, &quad(), &settings).unwrap()
        };
        let (cold, hot) = (xi(1.0), xi(2.0));
        for i in 0..2 {
            assert!(hot.lambda_cov[(i, i)] > cold.lambda_cov[(i, i)]);
            assert!(hot.xi_sq[(i, i)] > cold.xi_sq[(i, i)]);
        }
    }

    #[test]
    fn doubling_resolution_is_converged() {
        let cfg = MeasurementConfig::default();
        let g = AugmentedGenerator::new(&cfg, DynamicsMode::Renormalized).unwrap();
        let k = BathKernel::new(&cfg, KernelMethod::Series);
        for &t in &[0.1, 1.0, 3.0] {
            let a = quad();
            let l1 = lambda_covariance(&g, &k, t, &a, 1e-10).unwrap();
            let l2 = lambda_covariance(&g, &k, t, &a.doubled(), 1e-10).unwrap();
            for i in 0..2 {
                let rel = (l1[(i, i)] - l2[(i, i)]).abs() / l2[(i, i)].abs();
                assert!(rel < 1e-6, "t={t}: {rel}");
            }
        }
    }
}
