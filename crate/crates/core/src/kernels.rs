//! Ohmic bath with algebraic cutoff: spectral density, dissipation kernel and
//! the symmetrised noise autocorrelation.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MeasurementConfig;
use crate::quadrature::{fourier_integral, FourierOptions, Tolerance, Trig};
use crate::special::polylog_exp;

/// How `ν(t)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelMethod {
    /// Matsubara exponential series, falling back to quadrature at resonance.
    #[default]
    Series,
    /// Direct oscillatory quadrature of the frequency integral.
    Quadrature,
}

/// Anything that can serve as the scalar noise autocorrelation of the pointers.
pub trait Autocorrelation: Sync {
    fn value(&self, t: f64) -> Result<f64>;
}

impl<F: Fn(f64) -> f64 + Sync> Autocorrelation for F {
    fn value(&self, t: f64) -> Result<f64> {
        Ok(self(t))
    }
}

/// `diag(0, 1, 1)`: the bath acts on both pointers and not on the system.
pub fn pointer_projector() -> Matrix3<f64> {
    Matrix3::from_diagonal(&nalgebra::Vector3::new(0.0, 1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathKernel {
    pub eta: f64,
    pub omega_c: f64,
    pub inv_beta: f64,
    pub method: KernelMethod,
    pub resonance_tol: f64,
    pub fourier: FourierOptions,
}

impl BathKernel {
    pub fn new(cfg: &MeasurementConfig, method: KernelMethod) -> Self {
        let n = &cfg.numerical;
        Self {
            eta: cfg.eta,
            omega_c: cfg.omega_c,
            inv_beta: cfg.inv_beta,
            method,
            resonance_tol: n.resonance_tol,
            fourier: FourierOptions {
                panel: Tolerance {
                    abs: 1e-15,
                    rel: 1e-14,
                    max_intervals: 200,
                },
                abs_tol: n.kernel_abs_tol,
                rel_tol: n.kernel_rel_tol,
                max_panels: 50_000,
            },
        }
    }

    /// Tightens the quadrature stopping rule so that the quadrature path can
    /// serve as a reference for the series.
    pub fn with_oracle_tolerances(mut self) -> Self {
        self.fourier.abs_tol = 1e-18;
        self.fourier.rel_tol = 1e-12;
        self
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.inv_beta
    }

    /// Scalar part of `I(ω)`.
    pub fn spectral_density_scalar(&self, omega: f64) -> f64 {
        let r = omega / self.omega_c;
        2.0 * self.eta / PI * omega / (r * r + 1.0)
    }

    pub fn spectral_density(&self, omega: f64) -> Matrix3<f64> {
        pointer_projector() * self.spectral_density_scalar(omega)
    }

    /// Scalar part of `μ(t)` for `t >= 0`.
    pub fn dissipation_scalar(&self, t: f64) -> f64 {
        self.eta * self.omega_c * self.omega_c * (-self.omega_c * t).exp()
    }

    pub fn dissipation_kernel(&self, t: f64) -> Matrix3<f64> {
        pointer_projector() * self.dissipation_scalar(t)
    }

    /// `μ(t)` recomputed as the sine transform of `I(ω)`.
    pub fn dissipation_from_spectral_density(&self, t: f64, opts: FourierOptions) -> Result<f64> {
        if self.eta == 0.0 {
            return Ok(0.0);
        }
        fourier_integral(
            |w| self.spectral_density_scalar(w),
            t,
            Trig::Sin,
            10.0 * self.omega_c,
            opts,
        )
    }

    /// High-temperature form `η ω_c β⁻¹ e^{-ω_c |t|}`.
    pub fn classical_limit(&self, t: f64) -> f64 {
        self.eta * self.omega_c * self.inv_beta * (-self.omega_c * t.abs()).exp()
    }

    /// `ν(t)` with the configured method. A resonant series falls back to
    /// quadrature.
    pub fn noise_autocorrelation(&self, t: f64) -> Result<f64> {
        match self.method {
            KernelMethod::Quadrature => self.nu_quadrature(t),
            KernelMethod::Series => match self.nu_series(t) {
                Err(Error::SeriesResonance { index, .. }) => {
                    log::debug!("Matsubara resonance at n = {index}; using quadrature");
                    self.nu_quadrature(t)
                }
                other => other,
            },
        }
    }

    /// Index of the Matsubara frequency that `ω_c` sits on, if any.
    pub fn resonance(&self) -> Option<u64> {
        let z = self.omega_c * self.beta() / (2.0 * PI);
        let n = z.round();
        (n >= 1.0 && (z - n).abs() < self.resonance_tol).then_some(n as u64)
    }

    /// Matsubara series. With `x = e^{-2πt/β}` and `z = βω_c/2π`,
    /// `ν = (ηω_c²/2) cot(πz) e^{-ω_c t} + (ηω_c²/π) [−ln(1−x) + Σ_n xⁿ z²/(n(n²−z²))]`.
    pub fn nu_series(&self, t: f64) -> Result<f64> {
        let t = t.abs();
        if t == 0.0 {
            return Err(Error::EvaluationAtZero);
        }
        if self.eta == 0.0 {
            return Ok(0.0);
        }
        if let Some(index) = self.resonance() {
            return Err(Error::SeriesResonance {
                omega_c: self.omega_c,
                index,
            });
        }
        let beta = self.beta();
        let z = self.omega_c * beta / (2.0 * PI);
        let a = 2.0 * PI * t / beta;
        let pref = self.eta * self.omega_c * self.omega_c;
        let pole = 0.5 * pref / (PI * z).tan() * (-self.omega_c * t).exp();
        let bracket = -(-(-a).exp_m1()).ln() + matsubara_sum(a, z);
        Ok(pole + pref / PI * bracket)
    }

    /// Oscillatory quadrature of `(ηω_c²/π) ∫ ω coth(βω/2) cos(ωt) / (ω²+ω_c²) dω`.
    pub fn nu_quadrature(&self, t: f64) -> Result<f64> {
        let t = t.abs();
        if t == 0.0 {
            return Err(Error::EvaluationAtZero);
        }
        if self.eta == 0.0 {
            return Ok(0.0);
        }
        let beta = self.beta();
        let wc2 = self.omega_c * self.omega_c;
        let f = |w: f64| {
            let x = 0.5 * beta * w;
            let w_coth = if x < 1e-8 { 2.0 / beta } else { w / x.tanh() };
            w_coth / (w * w + wc2)
        };
        let smooth_from = 5.0 * self.omega_c.max(2.0 / beta);
        let v = fourier_integral(f, t, Trig::Cos, smooth_from, self.fourier)?;
        Ok(self.eta * wc2 / PI * v)
    }
}

impl Autocorrelation for BathKernel {
    fn value(&self, t: f64) -> Result<f64> {
        self.noise_autocorrelation(t)
    }
}

/// `Σ_{n≥1} xⁿ z² / (n (n² − z²))` with `x = e^{-a}`.
///
/// For `x` well below one the terms are summed directly. Close to one, terms
/// up to `n₀ ≈ 3z` are summed directly and the geometric expansion in `z²/n²`
/// beyond is resummed with polylogarithms, leaving a remainder that decays
/// like `n⁻⁹`.
fn matsubara_sum(a: f64, z: f64) -> f64 {
    let x = (-a).exp();
    let z2 = z * z;
    if a >= 0.02 {
        let mut sum = 0.0;
        let mut xn = 1.0;
        for n in 1..10_000_000u32 {
            xn *= x;
            let nf = f64::from(n);
            let term = xn * z2 / (nf * (nf * nf - z2));
            sum += term;
            if nf > 2.0 * z && term.abs() < 1e-18 * sum.abs().max(1e-3) {
                break;
            }
        }
        return sum;
    }
    let n0 = (3.0 * z).ceil().max(8.0) as u32;
    let mut sum = 0.0;
    let mut xn = 1.0;
    let mut partial = [0.0; 3]; // Σ_{n≤n₀} xⁿ/n^s for s = 3, 5, 7
    for n in 1..=n0 {
        xn *= x;
        let nf = f64::from(n);
        sum += xn * z2 / (nf * (nf * nf - z2));
        let n3 = nf * nf * nf;
        partial[0] += xn / n3;
        partial[1] += xn / (n3 * nf * nf);
        partial[2] += xn / (n3 * n3 * nf);
    }
    let tails = [
        polylog_exp(3, a) - partial[0],
        polylog_exp(5, a) - partial[1],
        polylog_exp(7, a) - partial[2],
    ];
    sum += z2 * tails[0] + z2 * z2 * tails[1] + z2 * z2 * z2 * tails[2];
    let z8 = z2 * z2 * z2 * z2;
    let mut n = n0;
    loop {
        n += 1;
        xn *= x;
        let nf = f64::from(n);
        let term = xn * z8 / (nf.powi(7) * (nf * nf - z2));
        sum += term;
        if term * nf < 1e-18 * sum.abs().max(1e-3) || n > 10_000_000 {
            break;
        }
    }
    sum
}
