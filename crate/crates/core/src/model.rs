//! Rescaled model parameters, coupling matrices and Gaussian initial states.

use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and discretisation knobs shared by the numerical modules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericalSettings {
    /// Absolute stopping tolerance for oscillatory kernel quadrature.
    pub kernel_abs_tol: f64,
    /// Relative stopping tolerance for oscillatory kernel quadrature.
    pub kernel_rel_tol: f64,
    /// Distance of `βω_c/2π` from an integer below which the series is refused.
    pub resonance_tol: f64,
    /// Uniform Gauss–Legendre panels of the noise quadrature.
    pub noise_panels: usize,
    /// Gauss–Legendre order per noise panel.
    pub noise_order: usize,
    /// Ratio between consecutive graded panels next to the kernel singularity.
    pub noise_grading: f64,
    /// Smallest graded panel, relative to the interaction time.
    pub noise_min_panel: f64,
    /// Relative threshold on `|det A|` against `‖A‖²`.
    pub singular_tol: f64,
    /// Allowed negative eigenvalue of the noise covariance, relative to its trace.
    pub psd_tol: f64,
}

impl Default for NumericalSettings {
    fn default() -> Self {
        Self {
            kernel_abs_tol: 1e-10,
            kernel_rel_tol: 1e-8,
            resonance_tol: 1e-6,
            noise_panels: 16,
            noise_order: 10,
            noise_grading: 0.2,
            noise_min_panel: 1e-13,
            singular_tol: 1e-12,
            psd_tol: 1e-10,
        }
    }
}

/// Rescaled model parameters. Defaults are the reference configuration
/// `κ₁ = κ₂ = 2, M₀ = 1, η = 0.25, ω_c = 20, β⁻¹ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementConfig {
    pub kappa1: f64,
    pub kappa2: f64,
    #[serde(rename = "mass_ratio_m0")]
    pub mass_ratio: f64,
    pub eta: f64,
    pub omega_c: f64,
    pub inv_beta: f64,
    pub numerical: NumericalSettings,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self {
            kappa1: 2.0,
            kappa2: 2.0,
            mass_ratio: 1.0,
            eta: 0.25,
            omega_c: 20.0,
            inv_beta: 1.0,
            numerical: NumericalSettings::default(),
        }
    }
}

impl MeasurementConfig {
    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_inv_beta(mut self, inv_beta: f64) -> Self {
        self.inv_beta = inv_beta;
        self
    }

    /// `true` when the bath is switched off.
    pub fn is_closed(&self) -> bool {
        self.eta == 0.0
    }

    /// Warning text when `ω_c t_max` is too small for the high-cutoff picture.
    pub fn cutoff_warning(&self, t_max: f64) -> Option<String> {
        let product = self.omega_c * t_max;
        (self.eta > 0.0 && product < 10.0).then(|| {
            format!("omega_c * t_max = {product:.3} is not large; the renormalised dynamics assume a high cutoff")
        })
    }
}

/// Checks the parameter invariants and returns the configuration unchanged.
pub fn validate_config(cfg: MeasurementConfig) -> Result<MeasurementConfig> {
    let named = [
        ("kappa1", cfg.kappa1),
        ("kappa2", cfg.kappa2),
        ("mass_ratio_m0", cfg.mass_ratio),
        ("eta", cfg.eta),
        ("omega_c", cfg.omega_c),
        ("inv_beta", cfg.inv_beta),
    ];
    if let Some((name, v)) = named.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{name} is not finite ({v})")));
    }
    for (name, v) in [
        ("mass_ratio_m0", cfg.mass_ratio),
        ("omega_c", cfg.omega_c),
        ("inv_beta", cfg.inv_beta),
    ] {
        if v <= 0.0 {
            return Err(Error::NonPositive { name, value: v });
        }
    }
    if cfg.eta < 0.0 {
        return Err(Error::NegativeViscosity(cfg.eta));
    }
    let k2sq = cfg.kappa2 * cfg.kappa2;
    if (k2sq - cfg.mass_ratio).abs() <= 1e-12 * cfg.mass_ratio.max(k2sq) {
        return Err(Error::SingularLagrangian {
            kappa2_sq: k2sq,
            mass_ratio: cfg.mass_ratio,
        });
    }
    let n = &cfg.numerical;
    let positive = [
        ("numerical.kernel_abs_tol", n.kernel_abs_tol),
        ("numerical.kernel_rel_tol", n.kernel_rel_tol),
        ("numerical.resonance_tol", n.resonance_tol),
        ("numerical.noise_grading", n.noise_grading),
        ("numerical.noise_min_panel", n.noise_min_panel),
        ("numerical.singular_tol", n.singular_tol),
        ("numerical.psd_tol", n.psd_tol),
    ];
    for (name, v) in positive {
        if !(v > 0.0) {
            return Err(Error::NonPositive { name, value: v });
        }
    }
    if n.noise_grading >= 1.0 || n.noise_min_panel >= 1.0 {
        return Err(Error::InvalidInput(
            "noise grading ratio and minimal panel must lie in (0, 1)".into(),
        ));
    }
    if n.noise_panels == 0 || n.noise_order == 0 {
        return Err(Error::InvalidInput(
            "noise quadrature needs at least one panel of positive order".into(),
        ));
    }
    Ok(cfg)
}

/// Mass matrix `M`, antisymmetric-coupling matrix `D` and the potential
/// matrix `Q` of the linear equations of motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingMatrices {
    pub a: f64,
    pub mass: Matrix3<f64>,
    pub damping: Matrix3<f64>,
    pub potential: Matrix3<f64>,
}

impl CouplingMatrices {
    pub fn new(cfg: &MeasurementConfig) -> Self {
        let (k1, k2, m0) = (cfg.kappa1, cfg.kappa2, cfg.mass_ratio);
        let a = m0 / (k2 * k2 - m0);
        #[rustfmt::skip]
        let mass = Matrix3::new(
            -a,      0.0, a * k2,
            0.0,     m0,  0.0,
            a * k2,  0.0, -a * m0,
        );
        let mut damping = Matrix3::zeros();
        damping[(1, 0)] = k1;
        let mut potential = Matrix3::zeros();
        potential[(0, 0)] = k1 * k1 / m0;
        Self {
            a,
            mass,
            damping,
            potential,
        }
    }

    pub fn det_mass(&self) -> f64 {
        self.mass.determinant()
    }

    pub fn mass_inverse(&self) -> Result<Matrix3<f64>> {
        self.mass.try_inverse().ok_or(Error::SingularMass)
    }

    /// `P = M Ẋ − D X`.
    pub fn momenta(&self, x: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
        self.mass * v - self.damping * x
    }

    /// `Ẋ = M⁻¹ (P + D X)`.
    pub fn velocities(&self, x: &Vector3<f64>, p: &Vector3<f64>) -> Result<Vector3<f64>> {
        Ok(self.mass_inverse()? * (p + self.damping * x))
    }
}

pub fn build_coupling_matrices(cfg: &MeasurementConfig) -> CouplingMatrices {
    CouplingMatrices::new(cfg)
}

/// Second moments of a single-mode Gaussian state with zero mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianState {
    pub var_x: f64,
    pub var_p: f64,
    /// Symmetrised covariance `⟨XP + PX⟩/2`.
    #[serde(default)]
    pub corr: f64,
}

impl GaussianState {
    /// Pure state with a real wave function: `ΔP² = 1/(4ΔX²)`, no correlation.
    pub fn real_pure(var_x: f64) -> Self {
        Self {
            var_x,
            var_p: 0.25 / var_x,
            corr: 0.0,
        }
    }

    pub fn validate(&self, label: &str) -> Result<()> {
        if !(self.var_x > 0.0) || !(self.var_p > 0.0) || !self.corr.is_finite() {
            return Err(Error::UncertaintyViolation(format!(
                "{label}: variances must be positive, got ({}, {})",
                self.var_x, self.var_p
            )));
        }
        let lhs = self.var_x * self.var_p;
        let rhs = 0.25 + self.corr * self.corr;
        if lhs < rhs * (1.0 - 1e-12) {
            return Err(Error::UncertaintyViolation(format!(
                "{label}: dX^2 dP^2 = {lhs} < 1/4 + c^2 = {rhs}"
            )));
        }
        Ok(())
    }
}

impl Default for GaussianState {
    fn default() -> Self {
        Self::real_pure(1.0)
    }
}

/// Initial moments entering the inference formulas. `cov_j` is ordered as
/// `(X₁, X₂, P₁, P₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMoments {
    pub mean_j: Vector4<f64>,
    pub cov_j: Matrix4<f64>,
    pub var_xs0: f64,
    pub var_ps0: f64,
}

impl GaussianMoments {
    pub fn new(
        mean_j: Vector4<f64>,
        cov_j: Matrix4<f64>,
        var_xs0: f64,
        var_ps0: f64,
    ) -> Result<Self> {
        if mean_j.iter().any(|m| *m != 0.0) {
            return Err(Error::NonzeroMean([
                mean_j[0], mean_j[1], mean_j[2], mean_j[3],
            ]));
        }
        if (cov_j - cov_j.transpose()).abs().max() > 1e-12 * cov_j.abs().max().max(1.0) {
            return Err(Error::InvalidInput(
                "pointer covariance is not symmetric".into(),
            ));
        }
        let min_eig = SymmetricEigen::new(cov_j).eigenvalues.min();
        if min_eig < -1e-12 {
            return Err(Error::UncertaintyViolation(format!(
                "pointer covariance has negative eigenvalue {min_eig}"
            )));
        }
        for k in 0..2 {
            GaussianState {
                var_x: cov_j[(k, k)],
                var_p: cov_j[(k + 2, k + 2)],
                corr: cov_j[(k, k + 2)],
            }
            .validate(if k == 0 { "pointer 1" } else { "pointer 2" })?;
        }
        GaussianState {
            var_x: var_xs0,
            var_p: var_ps0,
            corr: 0.0,
        }
        .validate("system")?;
        Ok(Self {
            mean_j,
            cov_j,
            var_xs0,
            var_ps0,
        })
    }

    pub fn sd_xs0(&self) -> f64 {
        self.var_xs0.sqrt()
    }

    pub fn sd_ps0(&self) -> f64 {
        self.var_ps0.sqrt()
    }
}

impl Default for GaussianMoments {
    fn default() -> Self {
        let s = GaussianState::default();
        gaussian_state_moments(s, [s, s]).expect("reference state is valid")
    }
}

/// Moments of uncorrelated system and pointer Gaussians.
pub fn gaussian_state_moments(
    system: GaussianState,
    pointers: [GaussianState; 2],
) -> Result<GaussianMoments> {
    system.validate("system")?;
    if system.corr != 0.0 {
        return Err(Error::InvalidInput(
            "system position-momentum correlation is not supported by the inference formulas"
                .into(),
        ));
    }
    let mut cov = Matrix4::zeros();
    for (k, p) in pointers.iter().enumerate() {
        p.validate(if k == 0 { "pointer 1" } else { "pointer 2" })?;
        cov[(k, k)] = p.var_x;
        cov[(k + 2, k + 2)] = p.var_p;
        cov[(k, k + 2)] = p.corr;
        cov[(k + 2, k)] = p.corr;
    }
    GaussianMoments::new(Vector4::zeros(), cov, system.var_x, system.var_p)
}

/// Dimensionful inputs of the unit conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParameters {
    pub hbar: f64,
    pub system_mass: f64,
    pub pointer_mass: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Viscosity in units of mass per time.
    pub eta: f64,
    pub omega_c: f64,
    pub inv_beta: f64,
    pub var_xs0: f64,
    pub var_ps0: f64,
}

/// Characteristic time `T` and length `λ` of a rescaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    pub time: f64,
    pub length: f64,
    pub hbar: f64,
}

/// Result of [`rescale_physical`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rescaled {
    pub config: MeasurementConfig,
    pub scales: Scales,
    /// Rescaled initial system variances.
    pub var_xs0: f64,
    pub var_ps0: f64,
}

pub fn rescale_physical(p: &PhysicalParameters) -> Result<Rescaled> {
    for (name, v) in [
        ("hbar", p.hbar),
        ("system_mass", p.system_mass),
        ("pointer_mass", p.pointer_mass),
        ("omega_c", p.omega_c),
        ("inv_beta", p.inv_beta),
        ("var_xs0", p.var_xs0),
        ("var_ps0", p.var_ps0),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositive { name, value: v });
        }
    }
    if p.eta < 0.0 {
        return Err(Error::NegativeViscosity(p.eta));
    }
    let (dx, dp) = (p.var_xs0.sqrt(), p.var_ps0.sqrt());
    let time = dx * p.system_mass / dp;
    let length = (time * p.hbar / p.system_mass).sqrt();
    let config = MeasurementConfig {
        kappa1: p.kappa1 * time * p.pointer_mass / p.system_mass,
        kappa2: p.kappa2 * p.pointer_mass,
        mass_ratio: p.pointer_mass / p.system_mass,
        eta: p.eta * time / p.system_mass,
        omega_c: p.omega_c * time,
        inv_beta: p.inv_beta * time / p.hbar,
        numerical: NumericalSettings::default(),
    };
    Ok(Rescaled {
        config,
        scales: Scales {
            time,
            length,
            hbar: p.hbar,
        },
        var_xs0: p.var_xs0 / (length * length),
        var_ps0: p.var_ps0 * length * length / (p.hbar * p.hbar),
    })
}

impl Rescaled {
    /// Inverse of [`rescale_physical`].
    pub fn to_physical(&self) -> PhysicalParameters {
        let Scales { time, length, hbar } = self.scales;
        let c = &self.config;
        let system_mass = time * hbar / (length * length);
        let pointer_mass = c.mass_ratio * system_mass;
        PhysicalParameters {
            hbar,
            system_mass,
            pointer_mass,
            kappa1: c.kappa1 * system_mass / (time * pointer_mass),
            kappa2: c.kappa2 / pointer_mass,
            eta: c.eta * system_mass / time,
            omega_c: c.omega_c / time,
            inv_beta: c.inv_beta * hbar / time,
            var_xs0: self.var_xs0 * length * length,
            var_ps0: self.var_ps0 * hbar * hbar / (length * length),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_is_valid() {
        assert!(validate_config(MeasurementConfig::default()).is_ok());
        assert!(validate_config(MeasurementConfig::default().with_eta(0.0)).is_ok());
    }

    #[test]
    fn singular_lagrangian_rejected() {
        let cfg = MeasurementConfig {
            kappa2: 1.0,
            ..Default::default()
        };
        assert!(matches!(
            validate_config(cfg),
            Err(Error::SingularLagrangian { .. })
        ));
    }

    #[test]
    fn nonpositive_and_negative_inputs_rejected() {
        let base = MeasurementConfig::default();
        assert!(matches!(
            validate_config(MeasurementConfig {
                omega_c: 0.0,
                ..base
            }),
            Err(Error::NonPositive {
                name: "omega_c",
                ..
            })
        ));
        assert!(matches!(
            validate_config(MeasurementConfig {
                inv_beta: -1.0,
                ..base
            }),
            Err(Error::NonPositive {
                name: "inv_beta",
                ..
            })
        ));
        assert!(matches!(
            validate_config(base.with_eta(-0.1)),
            Err(Error::NegativeViscosity(_))
        ));
    }

    #[test]
    fn coupling_matrices_for_reference() {
        let c = CouplingMatrices::new(&MeasurementConfig::default());
        assert!((c.a - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.det_mass() + 1.0 / 3.0).abs() < 1e-14);
        assert_eq!(c.mass, c.mass.transpose());
        let nonzero: Vec<_> = c.damping.iter().filter(|v| **v != 0.0).collect();
        assert_eq!(nonzero, vec![&2.0]);
        assert_eq!(c.damping[(1, 0)], 2.0);
        let inv = c.mass_inverse().unwrap();
        assert!((c.mass * inv - Matrix3::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn momentum_relations_round_trip() {
        let cfg = MeasurementConfig {
            kappa1: 1.3,
            kappa2: 0.7,
            mass_ratio: 2.1,
            ..Default::default()
        };
        let c = CouplingMatrices::new(&cfg);
        let x = Vector3::new(0.3, -1.2, 0.8);
        let v = Vector3::new(-0.4, 0.9, 2.2);
        let p = c.momenta(&x, &v);
        let (a, k1, k2, m0) = (c.a, cfg.kappa1, cfg.kappa2, cfg.mass_ratio);
        assert!((p[0] - (-a * v[0] + a * k2 * v[2])).abs() < 1e-14);
        assert!((p[1] - (m0 * v[1] - k1 * x[0])).abs() < 1e-14);
        assert!((p[2] - (-a * m0 * v[2] + a * k2 * v[0])).abs() < 1e-14);
        let back = c.velocities(&x, &p).unwrap();
        assert!((back - v).abs().max() < 1e-13);
    }

    #[test]
    fn real_gaussian_has_quarter_momentum_variance() {
        let s = GaussianState::real_pure(1.0);
        assert_eq!(s.var_p, 0.25);
        let m = GaussianMoments::default();
        assert_eq!(m.cov_j.diagonal(), Vector4::new(1.0, 1.0, 0.25, 0.25));
        assert!((m.sd_xs0() * m.sd_ps0() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uncertainty_violation_rejected() {
        let bad = GaussianState {
            var_x: 1.0,
            var_p: 0.1,
            corr: 0.0,
        };
        let good = GaussianState::default();
        assert!(matches!(
            gaussian_state_moments(good, [bad, good]),
            Err(Error::UncertaintyViolation(_))
        ));
        let correlated = GaussianState {
            var_x: 1.0,
            var_p: 0.25,
            corr: 0.1,
        };
        assert!(gaussian_state_moments(good, [good, correlated]).is_err());
    }

    #[test]
    fn nonzero_mean_rejected() {
        let m = GaussianMoments::default();
        let r = GaussianMoments::new(Vector4::new(0.0, 0.1, 0.0, 0.0), m.cov_j, 1.0, 0.25);
        assert!(matches!(r, Err(Error::NonzeroMean(_))));
    }

    fn physical() -> PhysicalParameters {
        PhysicalParameters {
            hbar: 1.054_571_817e-34,
            system_mass: 9.1e-31,
            pointer_mass: 2.3e-30,
            kappa1: 4.0e13,
            kappa2: 1.1e30,
            eta: 3.0e-18,
            omega_c: 2.0e14,
            inv_beta: 4.1e-21,
            var_xs0: 1e-18,
            var_ps0: 4e-50,
        }
    }

    #[test]
    fn rescaling_identity_when_units_match() {
        let p = PhysicalParameters {
            hbar: 1.0,
            system_mass: 1.0,
            pointer_mass: 1.0,
            kappa1: 2.0,
            kappa2: 2.0,
            eta: 0.25,
            omega_c: 20.0,
            inv_beta: 1.0,
            var_xs0: 0.5,
            var_ps0: 0.5,
        };
        let r = rescale_physical(&p).unwrap();
        assert!((r.scales.time - 1.0).abs() < 1e-15);
        assert!((r.scales.length - 1.0).abs() < 1e-15);
        assert_eq!(r.config.kappa1, 2.0);
        assert_eq!(r.config.omega_c, 20.0);
    }

    #[test]
    fn doubling_system_mass_doubles_time_scale() {
        let p = physical();
        let t1 = rescale_physical(&p).unwrap().scales.time;
        let t2 = rescale_physical(&PhysicalParameters {
            system_mass: 2.0 * p.system_mass,
            ..p
        })
        .unwrap()
        .scales
        .time;
        assert!((t2 / t1 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rescaling_round_trip() {
        let p = physical();
        let back = rescale_physical(&p).unwrap().to_physical();
        let pairs = [
            (p.hbar, back.hbar),
            (p.system_mass, back.system_mass),
            (p.pointer_mass, back.pointer_mass),
            (p.kappa1, back.kappa1),
            (p.kappa2, back.kappa2),
            (p.eta, back.eta),
            (p.omega_c, back.omega_c),
            (p.inv_beta, back.inv_beta),
            (p.var_xs0, back.var_xs0),
            (p.var_ps0, back.var_ps0),
        ];
        for (a, b) in pairs {
            assert!(((a - b) / a).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn rescaling_rejects_bad_mass() {
        let p = PhysicalParameters {
            system_mass: 0.0,
            ..physical()
        };
        assert!(matches!(
            rescale_physical(&p),
            Err(Error::NonPositive {
                name: "system_mass",
                ..
            })
        ));
    }
}
