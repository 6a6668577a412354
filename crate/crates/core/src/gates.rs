//! Self-checks against independent references. Each gate reports the
//! measured error next to its tolerance.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{BathKernel, KernelMethod};
use crate::model::{GaussianMoments, MeasurementConfig};
use crate::oracle::{
    closed_form_eta0, continuum_pointer_covariance, discretize_bath, pointer_covariance_series,
    BathGrid, DiscreteModel,
};
use crate::pipeline::Evaluator;
use crate::propagator::{AugmentedGenerator, DynamicsMode};
use crate::quadrature::FourierOptions;
use crate::uncertainty::{lower_bound, UncertaintyPoint};

pub const CLOSED_LIMIT_TOL: f64 = 1e-10;
pub const HEISENBERG_TOL: f64 = 1e-8;
pub const DISCRETE_BATH_TOL: f64 = 0.02;
pub const KERNEL_REL_TOL: f64 = 1e-8;
pub const CLASSICAL_LIMIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateReport {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl GateReport {
    fn below(name: &str, measured: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed: measured <= tolerance,
            measured,
            tolerance,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: measured {:e}, tolerance {:e}{}{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance,
            if self.detail.is_empty() { "" } else { "; " },
            self.detail
        )
    }
}

/// Signature of [`lower_bound`], replaceable for mutation checks.
pub type BoundFn = fn(&GaussianMoments, f64, f64, f64, f64) -> f64;

/// Times `0, step, …, t_max`.
fn uniform(step: f64, t_max: f64) -> Vec<f64> {
    let n = (t_max / step).round() as usize;
    (0..=n).map(|i| step * i as f64).collect()
}

/// Pipeline propagators with `η = 0` against the hand-integrated
/// polynomials on `[0, 3]`, plus `U² ≥ 1` on `(0, 3]`.
pub fn closed_limit_gate(cfg: &MeasurementConfig, moments: &GaussianMoments) -> Result<GateReport> {
    let cfg = cfg.with_eta(0.0);
    let generator = AugmentedGenerator::new(&cfg, DynamicsMode::Renormalized)?;
    let mut err = 0.0f64;
    for t in uniform(0.01, 3.0) {
        let a = generator.propagate(t)?;
        let b = closed_form_eta0(&cfg, t)?;
        err = err
            .max((a.k - b.k).abs().max())
            .max((a.g - b.g).abs().max())
            .max((a.g_dot - b.g_dot).abs().max())
            .max((a.response().det_a - b.response().det_a).abs());
    }
    let ev = Evaluator::new(cfg, *moments, DynamicsMode::Renormalized)?;
    let times: Vec<f64> = uniform(0.01, 3.0).into_iter().skip(1).collect();
    let min_u = ev
        .curve(&times)?
        .iter()
        .map(|p| p.u_sq)
        .fold(f64::INFINITY, f64::min);
    let mut r = GateReport::below(
        "closed-limit propagators",
        err,
        CLOSED_LIMIT_TOL,
        format!("min U^2 = {min_u}"),
    );
    r.passed &= min_u >= 1.0 - HEISENBERG_TOL;
    Ok(r)
}

/// Largest entrywise deviation of the discrete-bath pointer covariance from
/// the raw continuum one, relative to the largest entry, over
/// `t = 0.1, 0.2, …, t_max`.
pub fn discrete_bath_error(
    cfg: &MeasurementConfig,
    moments: &GaussianMoments,
    modes: usize,
    grid: BathGrid,
    t_max: f64,
) -> Result<f64> {
    let h = 0.1;
    let steps = (t_max / h).round() as usize;
    let bath = discretize_bath(cfg, modes, grid)?;
    if bath.recurrence_time() <= t_max {
        return Err(Error::InsufficientModes {
            modes,
            deviation: bath.recurrence_time(),
            tolerance: t_max,
        });
    }
    let model = DiscreteModel::new(cfg, bath);
    let s0 = model.initial_covariance(moments);
    let series = pointer_covariance_series(&model, &s0, h, steps)?;
    let errs = series
        .par_iter()
        .map(|(t, c)| -> Result<f64> {
            let cc = continuum_pointer_covariance(cfg, moments, DynamicsMode::Raw, *t)?;
            Ok((c - cc).abs().max() / cc.abs().max())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

pub fn discrete_bath_gate(
    cfg: &MeasurementConfig,
    moments: &GaussianMoments,
    modes: usize,
    grid: BathGrid,
) -> Result<GateReport> {
    let name = format!("discrete bath, {modes} modes");
    match discrete_bath_error(cfg, moments, modes, grid, 2.0) {
        Ok(e) => Ok(GateReport::below(
            &name,
            e,
            DISCRETE_BATH_TOL,
            String::new(),
        )),
        Err(Error::InsufficientModes { deviation, .. }) => Ok(GateReport {
            name,
            passed: false,
            measured: deviation,
            tolerance: DISCRETE_BATH_TOL,
            detail: "bath discretisation rejected".into(),
        }),
        Err(e) => Err(e),
    }
}

/// Thermal energies and times at which the Matsubara series is compared
/// with direct quadrature.
pub fn kernel_sample_points() -> Vec<(f64, f64)> {
    let mut v = Vec::new();
    for &inv_beta in &[0.3, 0.5, 1.0, 2.0, 7.0] {
        for &t in &[0.02, 0.1, 0.3, 0.5] {
            v.push((inv_beta, t));
        }
    }
    v
}

pub fn series_quadrature_gate(cfg: &MeasurementConfig) -> Result<GateReport> {
    let points = kernel_sample_points();
    let errs = points
        .par_iter()
        .map(|&(inv_beta, t)| -> Result<f64> {
            let k = BathKernel::new(&cfg.with_inv_beta(inv_beta), KernelMethod::Series)
                .with_oracle_tolerances();
            let s = k.nu_series(t)?;
            let q = k.nu_quadrature(t)?;
            Ok(((s - q) / s).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GateReport::below(
        "autocorrelation series vs quadrature",
        errs.into_iter().fold(0.0, f64::max),
        KERNEL_REL_TOL,
        format!("{} points", points.len()),
    ))
}

/// Relative deviation of `ν` from `ηω_c β⁻¹ e^{-ω_c t}` at the given values
/// of `βω_c`, for `t` in `{0.05, 0.3, 1}`.
pub fn classical_limit_gate(cfg: &MeasurementConfig, beta_omega_c: &[f64]) -> Result<GateReport> {
    let mut worst = 0.0f64;
    for &bw in beta_omega_c {
        let k = BathKernel::new(&cfg.with_inv_beta(cfg.omega_c / bw), KernelMethod::Series);
        for &t in &[0.05, 0.3, 1.0] {
            let cl = k.classical_limit(t);
            worst = worst.max(((k.noise_autocorrelation(t)? - cl) / cl).abs());
        }
    }
    Ok(GateReport::below(
        "classical limit",
        worst,
        CLASSICAL_LIMIT_TOL,
        format!("beta*omega_c in {beta_omega_c:?}"),
    ))
}

/// `μ(t)` rebuilt from `I(ω)` by a sine transform. Windows are chosen where
/// `μ` is not exponentially small: `ω_c = 5` on `[0.05, 2]` and `ω_c = 20` on
/// `[0.05, 0.5]`.
pub fn sine_transform_gate(cfg: &MeasurementConfig) -> Result<GateReport> {
    let cases: Vec<(f64, f64)> = (0..10)
        .map(|i| (5.0, 0.05 + 1.95 * i as f64 / 9.0))
        .chain((0..10).map(|i| (20.0, 0.05 + 0.45 * i as f64 / 9.0)))
        .collect();
    let errs = cases
        .par_iter()
        .map(|&(omega_c, t)| -> Result<f64> {
            let c = MeasurementConfig { omega_c, ..*cfg };
            let k = BathKernel::new(&c, KernelMethod::Series);
            let v = k.dissipation_from_spectral_density(t, FourierOptions::default())?;
            let exact = k.dissipation_scalar(t);
            Ok(((v - exact) / exact).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GateReport::below(
        "dissipation kernel from spectral density",
        errs.into_iter().fold(0.0, f64::max),
        KERNEL_REL_TOL,
        String::new(),
    ))
}

/// Smallest of `U² − bound` and `bound − 1` along each curve, with the bound
/// recomputed through `bound`.
pub fn chain_margin(points: &[UncertaintyPoint], moments: &GaussianMoments, bound: BoundFn) -> f64 {
    points
        .iter()
        .map(|p| {
            let b = bound(
                moments,
                p.sigma1_sq.sqrt(),
                p.sigma2_sq.sqrt(),
                p.xi1_sq,
                p.xi2_sq,
            );
            (p.u_sq - b).min(b - 1.0)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `U² ≥ bound ≥ 1` on 200 points of `(0.02, 3]` for each thermal energy.
pub fn inequality_gate(
    cfg: &MeasurementConfig,
    moments: &GaussianMoments,
    mode: DynamicsMode,
    inv_betas: &[f64],
    bound: BoundFn,
) -> Result<GateReport> {
    let times: Vec<f64> = (1..=200).map(|i| 0.02 + 2.98 * i as f64 / 200.0).collect();
    let margins = inv_betas
        .par_iter()
        .map(|&ib| -> Result<f64> {
            let ev = Evaluator::new(cfg.with_inv_beta(ib), *moments, mode)?;
            let pts = times
                .par_iter()
                .map(|&t| ev.point(t))
                .collect::<Result<Vec<_>>>()?;
            Ok(chain_margin(&pts, moments, bound))
        })
        .collect::<Result<Vec<_>>>()?;
    let margin = margins.into_iter().fold(f64::INFINITY, f64::min);
    Ok(GateReport {
        name: "inequality chain".into(),
        passed: margin >= -HEISENBERG_TOL,
        measured: margin,
        tolerance: -HEISENBERG_TOL,
        detail: format!("smallest margin, inv_beta in {inv_betas:?}"),
    })
}

/// Options of the full suite.
#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub discrete_modes: usize,
    pub discrete_grid: BathGrid,
    pub bound: BoundFn,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            discrete_modes: 400,
            discrete_grid: BathGrid::Tangent,
            bound: lower_bound,
        }
    }
}

/// Everything the `validate` command runs.
pub fn run_suite(
    cfg: &MeasurementConfig,
    moments: &GaussianMoments,
    opts: &SuiteOptions,
) -> Result<Vec<GateReport>> {
    Ok(vec![
        closed_limit_gate(cfg, moments)?,
        discrete_bath_gate(cfg, moments, opts.discrete_modes, opts.discrete_grid)?,
        series_quadrature_gate(cfg)?,
        classical_limit_gate(cfg, &[0.003, 0.001])?,
        sine_transform_gate(cfg)?,
        inequality_gate(
            cfg,
            moments,
            DynamicsMode::Renormalized,
            &[1.0, 2.0],
            opts.bound,
        )?,
    ])
}
