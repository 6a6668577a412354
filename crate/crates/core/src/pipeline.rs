//! Configuration → uncertainty curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{BathKernel, KernelMethod};
use crate::model::{validate_config, GaussianMoments, MeasurementConfig};
use crate::noise::{noise_covariance, NoiseQuadrature};
use crate::propagator::{AugmentedGenerator, DynamicsMode};
use crate::uncertainty::{pointer_contributions, UncertaintyPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Explicit sampling of the interaction time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            start: 0.02,
            stop: 3.0,
            count: 200,
            spacing: Spacing::Linear,
        }
    }
}

impl TimeGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.start > 0.0) || !(self.stop >= self.start) || self.count == 0 {
            return Err(Error::InvalidInput(format!(
                "time grid needs 0 < start <= stop and count >= 1, got {self:?}"
            )));
        }
        if self.count == 1 {
            return Ok(vec![self.start]);
        }
        let n = (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|i| {
                let f = i as f64 / n;
                match self.spacing {
                    Spacing::Linear => self.start + (self.stop - self.start) * f,
                    Spacing::Log => self.start * (self.stop / self.start).powf(f),
                }
            })
            .collect())
    }
}

/// Evaluates uncertainty points for one configuration.
#[derive(Debug, Clone)]
pub struct Evaluator {
    pub cfg: MeasurementConfig,
    pub moments: GaussianMoments,
    pub generator: AugmentedGenerator,
    pub kernel: BathKernel,
    pub quadrature: NoiseQuadrature,
}

impl Evaluator {
    pub fn new(
        cfg: MeasurementConfig,
        moments: GaussianMoments,
        mode: DynamicsMode,
    ) -> Result<Self> {
        let cfg = validate_config(cfg)?;
        Ok(Self {
            generator: AugmentedGenerator::new(&cfg, mode)?,
            kernel: BathKernel::new(&cfg, KernelMethod::Series),
            quadrature: NoiseQuadrature::from_settings(&cfg.numerical),
            cfg,
            moments,
        })
    }

    /// Reference configuration and states in renormalised mode.
    pub fn reference(cfg: MeasurementConfig) -> Result<Self> {
        Self::new(cfg, GaussianMoments::default(), DynamicsMode::Renormalized)
    }

    pub fn with_quadrature(mut self, quadrature: NoiseQuadrature) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn with_kernel_method(mut self, method: KernelMethod) -> Self {
        self.kernel.method = method;
        self
    }

    pub fn point(&self, t: f64) -> Result<UncertaintyPoint> {
        if !(t > 0.0) {
            return Err(Error::InvalidInput(format!(
                "interaction time must be positive, got {t}"
            )));
        }
        let resp = self.generator.propagate(t)?.response();
        let scale = resp.a.norm_squared();
        if !(resp.det_a.abs() > self.cfg.numerical.singular_tol * scale) {
            return Err(Error::SingularInference { t, det: resp.det_a });
        }
        let (s1, s2) = pointer_contributions(&resp.a, &resp.b, &self.moments.cov_j, t)?;
        let noise = noise_covariance(
            &self.generator,
            &self.kernel,
            &resp.a,
            t,
            &self.quadrature,
            &self.cfg.numerical,
        )?;
        Ok(UncertaintyPoint::assemble(
            t,
            &self.moments,
            s1,
            s2,
            noise.xi1_sq(),
            noise.xi2_sq(),
            resp.det_a,
        ))
    }

    pub fn u_sq(&self, t: f64) -> Result<f64> {
        Ok(self.point(t)?.u_sq)
    }

    pub fn curve(&self, times: &[f64]) -> Result<Vec<UncertaintyPoint>> {
        times.iter().map(|&t| self.point(t)).collect()
    }
}
