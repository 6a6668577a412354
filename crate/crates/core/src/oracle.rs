//! Reference solutions: a finite oscillator bath evolved exactly, and the
//! polynomial propagators of the closed measurement.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Matrix3, Matrix6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{BathKernel, KernelMethod};
use crate::linalg::expm_scaled;
use crate::model::{GaussianMoments, MeasurementConfig};
use crate::noise::{lambda_covariance, NoiseQuadrature};
use crate::propagator::{AugmentedGenerator, DynamicsMode, Propagators};

/// Placement of the bath frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BathGrid {
    /// Midpoints of `ω = ω_c tan θ` on an equal `θ` grid over `(0, π/2)`.
    /// Every mode carries the same share `ηω_c/N` of `∫ I(ω)/ω dω`.
    Tangent,
    /// Midpoints of an equal grid on `(0, ω_max)`.
    Linear { omega_max: f64 },
}

/// Window and tolerance of the kernel check in [`discretize_bath`].
pub const VALIDATION_WINDOW: f64 = 2.0;
pub const VALIDATION_TOL: f64 = 0.01;

/// `N` oscillators of unit mass standing in for one continuous bath.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBath {
    pub frequencies: Vec<f64>,
    /// `c_j = g_j² / ω_j`, the weight of mode `j` in `I(ω)`.
    pub weights: Vec<f64>,
    pub eta: f64,
    pub omega_c: f64,
    pub inv_beta: f64,
}

impl DiscreteBath {
    pub fn build(cfg: &MeasurementConfig, n: usize, grid: BathGrid) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput(
                "a discrete bath needs at least one mode".into(),
            ));
        }
        let kernel = BathKernel::new(cfg, KernelMethod::Series);
        let (frequencies, widths): (Vec<f64>, Vec<f64>) = match grid {
            BathGrid::Tangent => {
                let dtheta = 0.5 * PI / n as f64;
                (0..n)
                    .map(|j| {
                        let theta = (j as f64 + 0.5) * dtheta;
                        let c = theta.cos();
                        (cfg.omega_c * theta.tan(), cfg.omega_c * dtheta / (c * c))
                    })
                    .unzip()
            }
            BathGrid::Linear { omega_max } => {
                if !(omega_max > cfg.omega_c) {
                    return Err(Error::InvalidInput(format!(
                        "omega_max = {omega_max} must exceed the cutoff {}",
                        cfg.omega_c
                    )));
                }
                let dw = omega_max / n as f64;
                (0..n).map(|j| ((j as f64 + 0.5) * dw, dw)).unzip()
            }
        };
        let weights = frequencies
            .iter()
            .zip(&widths)
            .map(|(w, dw)| kernel.spectral_density_scalar(*w) * dw)
            .collect();
        Ok(Self {
            frequencies,
            weights,
            eta: cfg.eta,
            omega_c: cfg.omega_c,
            inv_beta: cfg.inv_beta,
        })
    }

    pub fn modes(&self) -> usize {
        self.frequencies.len()
    }

    /// `g_j` for unit bath mass.
    pub fn couplings(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.frequencies)
            .map(|(c, w)| (c * w).sqrt())
            .collect()
    }

    /// `μ_N(t) = Σ c_j sin(ω_j t)`.
    pub fn dissipation_kernel(&self, t: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.frequencies)
            .map(|(c, w)| c * (w * t).sin())
            .sum()
    }

    /// `∫₀ᵗ μ_N = Σ c_j (1 − cos ω_j t)/ω_j`.
    pub fn integrated_kernel(&self, t: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.frequencies)
            .map(|(c, w)| c * (1.0 - (w * t).cos()) / w)
            .sum()
    }

    /// `∫₀ᵗ∫₀ˢ μ_N = Σ c_j (t − sin(ω_j t)/ω_j)/ω_j`. The single integral
    /// does not converge pointwise in `N` (the top modes dephase at any `t`),
    /// this one does.
    pub fn doubly_integrated_kernel(&self, t: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.frequencies)
            .map(|(c, w)| c * (t - (w * t).sin() / w) / w)
            .sum()
    }

    /// Largest deviation of [`Self::doubly_integrated_kernel`] from its
    /// continuum value on `(0, window]`, relative to `ηω_c t`.
    pub fn kernel_deviation(&self, window: f64) -> f64 {
        let scale = self.eta * self.omega_c;
        if scale == 0.0 {
            return 0.0;
        }
        let wc = self.omega_c;
        let samples = 2000;
        (1..=samples)
            .map(|i| {
                let t = window * i as f64 / samples as f64;
                let exact = scale * (t - (-(wc * t)).exp_m1().abs() / wc);
                (self.doubly_integrated_kernel(t) - exact).abs() / (scale * t)
            })
            .fold(0.0, f64::max)
    }

    /// `2π / min Δω`, a lower bound on the first recurrence.
    pub fn recurrence_time(&self) -> f64 {
        let mut f = self.frequencies.clone();
        f.sort_by(f64::total_cmp);
        let min_gap = f
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f.first().copied().unwrap_or(f64::INFINITY) * 2.0, f64::min);
        2.0 * PI / min_gap
    }

    /// Thermal second moments `⟨a²⟩ = ⟨b²⟩ = coth(βω/2)/2` in the
    /// frequency-weighted mode variables `a = √ω q`, `b = k/√ω`.
    pub fn thermal_variances(&self) -> Vec<f64> {
        self.frequencies
            .iter()
            .map(|w| 0.5 / (0.5 * w / self.inv_beta).tanh())
            .collect()
    }
}

/// Builds the bath and checks the integrated kernel on
/// [`VALIDATION_WINDOW`] against [`VALIDATION_TOL`].
pub fn discretize_bath(cfg: &MeasurementConfig, n: usize, grid: BathGrid) -> Result<DiscreteBath> {
    let bath = DiscreteBath::build(cfg, n, grid)?;
    let deviation = bath.kernel_deviation(VALIDATION_WINDOW);
    if deviation > VALIDATION_TOL {
        return Err(Error::InsufficientModes {
            modes: n,
            deviation,
            tolerance: VALIDATION_TOL,
        });
    }
    Ok(bath)
}

/// System, two pointers and two disjoint copies of the bath, each coupled
/// to one pointer position. Phase-space order: `X (3), P (3)`, then
/// `(a_j, b_j)` of bath 1 and of bath 2.
#[derive(Debug, Clone)]
pub struct DiscreteModel {
    pub bath: DiscreteBath,
    /// `ż = A z` for the quadratic Hamiltonian.
    pub flow_generator: DMatrix<f64>,
}

impl DiscreteModel {
    pub fn new(cfg: &MeasurementConfig, bath: DiscreteBath) -> Self {
        let (k1, k2, m0) = (cfg.kappa1, cfg.kappa2, cfg.mass_ratio);
        let n = bath.modes();
        let dim = 6 + 4 * n;
        let mut a = DMatrix::zeros(dim, dim);
        a[(0, 3)] = 1.0;
        a[(0, 5)] = k2 / m0;
        a[(1, 4)] = 1.0 / m0;
        a[(1, 0)] = k1 / m0;
        a[(2, 5)] = 1.0 / m0;
        a[(2, 3)] = k2 / m0;
        a[(3, 4)] = -k1 / m0;
        for b in 0..2 {
            let pointer_x = 1 + b;
            let pointer_p = 4 + b;
            for (j, (w, c)) in bath.frequencies.iter().zip(&bath.weights).enumerate() {
                let ia = 6 + 2 * (b * n + j);
                let ib = ia + 1;
                let s = c.sqrt();
                a[(ia, ib)] = *w;
                a[(ib, ia)] = -w;
                a[(ib, pointer_x)] = -s;
                a[(pointer_p, ia)] = -s;
            }
        }
        Self {
            bath,
            flow_generator: a,
        }
    }

    pub fn dim(&self) -> usize {
        self.flow_generator.nrows()
    }

    /// Product state: Gaussian system and pointers, thermal baths.
    pub fn initial_covariance(&self, moments: &GaussianMoments) -> DMatrix<f64> {
        let dim = self.dim();
        let mut s = DMatrix::zeros(dim, dim);
        s[(0, 0)] = moments.var_xs0;
        s[(3, 3)] = moments.var_ps0;
        // cov_j is ordered (X1, X2, P1, P2)
        let slots = [1usize, 2, 4, 5];
        for (i, si) in slots.iter().enumerate() {
            for (j, sj) in slots.iter().enumerate() {
                s[(*si, *sj)] = moments.cov_j[(i, j)];
            }
        }
        let thermal = self.bath.thermal_variances();
        let n = self.bath.modes();
        for b in 0..2 {
            for (j, v) in thermal.iter().enumerate() {
                let ia = 6 + 2 * (b * n + j);
                s[(ia, ia)] = *v;
                s[(ia + 1, ia + 1)] = *v;
            }
        }
        s
    }

    /// Canonical form with `(X, P)` and `(a_j, b_j)` pairs.
    pub fn symplectic_form(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut j = DMatrix::zeros(dim, dim);
        for i in 0..3 {
            j[(i, i + 3)] = 1.0;
            j[(i + 3, i)] = -1.0;
        }
        let mut k = 6;
        while k < dim {
            j[(k, k + 1)] = 1.0;
            j[(k + 1, k)] = -1.0;
            k += 2;
        }
        j
    }

    pub fn flow(&self, t: f64) -> Result<DMatrix<f64>> {
        expm_scaled(&self.flow_generator, t)
    }
}

/// `Σ(t) = S(t) Σ(0) S(t)ᵀ`.
pub fn symplectic_covariance_evolution(
    model: &DiscreteModel,
    initial: &DMatrix<f64>,
    t: f64,
) -> Result<DMatrix<f64>> {
    if t == 0.0 {
        return Ok(initial.clone());
    }
    let s = model.flow(t)?;
    Ok(&s * initial * s.transpose())
}

/// Pointer-position covariance at `t = h, 2h, …, steps·h`, propagating only
/// the two needed rows of the flow.
pub fn pointer_covariance_series(
    model: &DiscreteModel,
    initial: &DMatrix<f64>,
    h: f64,
    steps: usize,
) -> Result<Vec<(f64, Matrix2<f64>)>> {
    let step = model.flow(h)?;
    let dim = model.dim();
    let mut rows = DMatrix::zeros(2, dim);
    rows[(0, 1)] = 1.0;
    rows[(1, 2)] = 1.0;
    let mut out = Vec::with_capacity(steps);
    for k in 1..=steps {
        rows = &rows * &step;
        let c = &rows * initial * rows.transpose();
        out.push((
            h * k as f64,
            Matrix2::new(c[(0, 0)], c[(0, 1)], c[(1, 0)], c[(1, 1)]),
        ));
    }
    Ok(out)
}

/// Continuum counterpart of [`pointer_covariance_series`]: deterministic part
/// from `K`, `G` plus the accumulated noise, in the given dynamics mode.
pub fn continuum_pointer_covariance(
    cfg: &MeasurementConfig,
    moments: &GaussianMoments,
    mode: DynamicsMode,
    t: f64,
) -> Result<Matrix2<f64>> {
    let generator = AugmentedGenerator::new(cfg, mode)?;
    let p = generator.propagate(t)?;
    let mut s0 = Matrix6::zeros();
    s0[(0, 0)] = moments.var_xs0;
    s0[(3, 3)] = moments.var_ps0;
    let slots = [1usize, 2, 4, 5];
    for (i, si) in slots.iter().enumerate() {
        for (j, sj) in slots.iter().enumerate() {
            s0[(*si, *sj)] = moments.cov_j[(i, j)];
        }
    }
    let mut r = nalgebra::Matrix2x6::zeros();
    for i in 0..2 {
        for j in 0..3 {
            r[(i, j)] = p.k[(i + 1, j)];
            r[(i, j + 3)] = p.g[(i + 1, j)];
        }
    }
    let kernel = BathKernel::new(cfg, KernelMethod::Series);
    let quad = NoiseQuadrature::from_settings(&cfg.numerical);
    let lambda = lambda_covariance(&generator, &kernel, t, &quad, cfg.numerical.psd_tol)?;
    Ok(r * s0 * r.transpose() + lambda)
}

/// Propagators of the closed measurement, integrated by hand.
pub fn closed_form_eta0(cfg: &MeasurementConfig, t: f64) -> Result<Propagators> {
    if cfg.eta != 0.0 {
        return Err(Error::InvalidInput(format!(
            "closed-form propagators need eta = 0, got {}",
            cfg.eta
        )));
    }
    let (k1, k2, m) = (cfg.kappa1, cfg.kappa2, cfg.mass_ratio);
    let t2 = t * t;
    let t3 = t2 * t;
    #[rustfmt::skip]
    let k = Matrix3::new(
        1.0,        0.0, 0.0,
        k1 * t / m, 1.0, 0.0,
        0.0,        0.0, 1.0,
    );
    #[rustfmt::skip]
    let g = Matrix3::new(
        t,                     -k1 * t2 / (2.0 * m),                        k2 * t / m,
        k1 * t2 / (2.0 * m),   t / m - k1 * k1 * t3 / (6.0 * m * m),        k1 * k2 * t2 / (2.0 * m * m),
        k2 * t / m,            -k1 * k2 * t2 / (2.0 * m * m),               t / m,
    );
    #[rustfmt::skip]
    let g_dot = Matrix3::new(
        1.0,          -k1 * t / m,                         k2 / m,
        k1 * t / m,   1.0 / m - k1 * k1 * t2 / (2.0 * m * m), k1 * k2 * t / (m * m),
        k2 / m,       -k1 * k2 * t / (m * m),              1.0 / m,
    );
    Ok(Propagators { t, k, g, g_dot })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn closed_form_matches_generator() {
        let cfg = MeasurementConfig {
            kappa1: 1.7,
            kappa2: 0.4,
            mass_ratio: 1.9,
            ..MeasurementConfig::default().with_eta(0.0)
        };
        let g = AugmentedGenerator::new(&cfg, DynamicsMode::Renormalized).unwrap();
        for i in 0..=30 {
            let t = 0.1 * i as f64;
            let a = g.propagate(t).unwrap();
            let b = closed_form_eta0(&cfg, t).unwrap();
            for (x, y) in [(a.k, b.k), (a.g, b.g), (a.g_dot, b.g_dot)] {
                assert!((x - y).abs().max() < 1e-10, "t={t}");
            }
            let det = b.response().det_a;
            let expected = cfg.kappa1 * cfg.kappa2 * t * t / (cfg.mass_ratio * cfg.mass_ratio);
            assert!((det - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_needs_closed_config() {
        assert!(closed_form_eta0(&MeasurementConfig::default(), 1.0).is_err());
    }

    #[test]
    fn reference_coefficient_table() {
        let p = closed_form_eta0(&MeasurementConfig::default().with_eta(0.0), 1.5).unwrap();
        // pointer 1 on (X_S, P_S, P_1) for κ₁ = κ₂ = 2, M₀ = 1
        assert_eq!(p.k[(1, 0)], 3.0);
        assert_eq!(p.g[(1, 0)], 2.25);
        assert!((p.g[(1, 1)] - (1.5 - 4.0 * 1.5f64.powi(3) / 6.0)).abs() < 1e-15);
    }

    #[test]
    fn closed_bath_has_no_couplings() {
        let cfg = MeasurementConfig::default().with_eta(0.0);
        let b = DiscreteBath::build(&cfg, 20, BathGrid::Tangent).unwrap();
        assert!(b.weights.iter().all(|c| *c == 0.0));
        assert_eq!(b.kernel_deviation(2.0), 0.0);
    }

    #[test]
    fn tangent_grid_reproduces_potential_shift() {
        let b = DiscreteBath::build(&MeasurementConfig::default(), 400, BathGrid::Tangent).unwrap();
        let shift: f64 = b
            .weights
            .iter()
            .zip(&b.frequencies)
            .map(|(c, w)| c / w)
            .sum();
        assert!((shift - 5.0).abs() < 1e-12);
        assert!(b.kernel_deviation(2.0) < 1e-3);
        assert!(b.recurrence_time() > 2.0 * VALIDATION_WINDOW);
    }

    #[test]
    fn truncated_linear_grid_misses_the_tail() {
        let cfg = MeasurementConfig::default();
        let grid = BathGrid::Linear {
            omega_max: 10.0 * cfg.omega_c,
        };
        assert!(matches!(
            discretize_bath(&cfg, 400, grid),
            Err(Error::InsufficientModes { .. })
        ));
        assert!(discretize_bath(&cfg, 400, BathGrid::Tangent).is_ok());
    }

    #[test]
    fn thermal_modes_respect_heisenberg() {
        let cfg = MeasurementConfig::default();
        let b = DiscreteBath::build(&cfg, 50, BathGrid::Tangent).unwrap();
        assert!(b.thermal_variances().iter().all(|v| v * v >= 0.25));
        let cold = DiscreteBath::build(&cfg.with_inv_beta(1e-3), 50, BathGrid::Tangent).unwrap();
        assert!(cold
            .thermal_variances()
            .iter()
            .all(|v| (v * v - 0.25).abs() < 1e-12));
    }

    #[test]
    fn flow_is_symplectic() {
        let cfg = MeasurementConfig::default();
        let m = DiscreteModel::new(
            &cfg,
            DiscreteBath::build(&cfg, 12, BathGrid::Tangent).unwrap(),
        );
        let j = m.symplectic_form();
        let s = m.flow(0.7).unwrap();
        assert!(max_abs(&(s.transpose() * &j * &s - &j)) < 1e-9);
        let s0 = m.initial_covariance(&GaussianMoments::default());
        assert_eq!(symplectic_covariance_evolution(&m, &s0, 0.0).unwrap(), s0);
    }

    #[test]
    fn row_propagation_matches_full_evolution() {
        let cfg = MeasurementConfig::default();
        let m = DiscreteModel::new(
            &cfg,
            DiscreteBath::build(&cfg, 16, BathGrid::Tangent).unwrap(),
        );
        let s0 = m.initial_covariance(&GaussianMoments::default());
        let series = pointer_covariance_series(&m, &s0, 0.25, 4).unwrap();
        let full = symplectic_covariance_evolution(&m, &s0, 1.0).unwrap();
        let (t, c) = series[3];
        assert_eq!(t, 1.0);
        let expected = Matrix2::new(full[(1, 1)], full[(1, 2)], full[(2, 1)], full[(2, 2)]);
        assert!((c - expected).abs().max() < 1e-9 * expected.abs().max());
    }
}
