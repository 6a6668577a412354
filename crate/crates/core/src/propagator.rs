//! Linear equations of motion as a first-order system with auxiliary memory
//! variables, and the propagators extracted from its flow.
//!
//! State layout: positions `X = (X_S, X₁, X₂)`, velocities `Ẋ`, then one
//! memory variable per pointer when the bath is switched on.

use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2, Matrix2x4, Matrix3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::expm_scaled;
use crate::model::{CouplingMatrices, MeasurementConfig};

/// Which form of the bath-induced force is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DynamicsMode {
    /// Velocity-coupled memory only; potential shift and slip removed.
    #[default]
    Renormalized,
    /// Position convolution with `μ(t)`, potential shift and slip retained.
    Raw,
}

impl FromStr for DynamicsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "renormalized" | "renormalised" => Ok(Self::Renormalized),
            "raw" => Ok(Self::Raw),
            other => Err(Error::InvalidInput(format!(
                "unknown dynamics mode `{other}` (expected raw or renormalized)"
            ))),
        }
    }
}

impl std::fmt::Display for DynamicsMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Renormalized => "renormalized",
            Self::Raw => "raw",
        })
    }
}

const POS: usize = 0;
const VEL: usize = 3;
const MEM: usize = 6;

/// `C` of `ṡ = C s + W ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedGenerator {
    pub mode: DynamicsMode,
    pub generator: DMatrix<f64>,
    /// Maps the three force components into the velocity slots through `M⁻¹`.
    pub noise_injection: DMatrix<f64>,
    pub couplings: CouplingMatrices,
    pub mass_inverse: Matrix3<f64>,
}

fn pointer_embedding() -> nalgebra::Matrix3x2<f64> {
    nalgebra::Matrix3x2::new(0.0, 0.0, 1.0, 0.0, 0.0, 1.0)
}

pub fn build_generator(cfg: &MeasurementConfig, mode: DynamicsMode) -> Result<AugmentedGenerator> {
    AugmentedGenerator::new(cfg, mode)
}

impl AugmentedGenerator {
    pub fn new(cfg: &MeasurementConfig, mode: DynamicsMode) -> Result<Self> {
        let couplings = CouplingMatrices::new(cfg);
        let minv = couplings.mass_inverse()?;
        let memory = cfg.eta > 0.0;
        let n = if memory { 8 } else { 6 };
        let mut c = DMatrix::zeros(n, n);
        c.view_mut((POS, VEL), (3, 3)).fill_with_identity();
        c.view_mut((VEL, POS), (3, 3))
            .copy_from(&(minv * couplings.potential));
        let antisym = couplings.damping.transpose() - couplings.damping;
        c.view_mut((VEL, VEL), (3, 3)).copy_from(&(-minv * antisym));
        if memory {
            let e = pointer_embedding();
            let (eta, wc) = (cfg.eta, cfg.omega_c);
            c.view_mut((MEM, MEM), (2, 2))
                .copy_from(&(Matrix2::identity() * -wc));
            match mode {
                DynamicsMode::Renormalized => {
                    // ẏ = -ω_c y + η ω_c Ẋ_k, force -y
                    c.view_mut((VEL, MEM), (3, 2)).copy_from(&(-minv * e));
                    c.view_mut((MEM, VEL), (2, 3))
                        .copy_from(&(e.transpose() * (eta * wc)));
                }
                DynamicsMode::Raw => {
                    // ż = -ω_c z + η ω_c² X_k, force +z
                    c.view_mut((VEL, MEM), (3, 2)).copy_from(&(minv * e));
                    c.view_mut((MEM, POS), (2, 3))
                        .copy_from(&(e.transpose() * (eta * wc * wc)));
                }
            }
        }
        let mut w = DMatrix::zeros(n, 3);
        w.view_mut((VEL, 0), (3, 3)).copy_from(&minv);
        Ok(Self {
            mode,
            generator: c,
            noise_injection: w,
            couplings,
            mass_inverse: minv,
        })
    }

    /// Raw dynamics with the static potential shift cancelled. Combined with
    /// an initial momentum kick `η X_k(0)` this approximates the renormalised
    /// dynamics for a high cutoff.
    pub fn raw_with_shift_compensation(cfg: &MeasurementConfig) -> Result<Self> {
        let mut g = Self::new(cfg, DynamicsMode::Raw)?;
        if cfg.eta > 0.0 {
            let e = pointer_embedding();
            let shift = g.mass_inverse * e * e.transpose() * (cfg.eta * cfg.omega_c);
            let mut block = g.generator.view_mut((VEL, POS), (3, 3));
            block -= shift;
        }
        Ok(g)
    }

    /// Raw propagators with both counter-terms added back: the potential
    /// shift is cancelled in the generator and the slip force is cancelled by
    /// starting the memory variables at `z_k(0) = η ω_c X_k(0)`.
    pub fn raw_with_counter_terms(cfg: &MeasurementConfig, t: f64) -> Result<Propagators> {
        let g = Self::raw_with_shift_compensation(cfg)?;
        let flow = g.flow(t)?;
        let mut p = g.extract(t, &flow);
        if g.has_memory() {
            let e = pointer_embedding();
            let slip = flow.fixed_view::<3, 2>(POS, MEM).into_owned()
                * e.transpose()
                * (cfg.eta * cfg.omega_c);
            p.k += slip;
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.generator.nrows()
    }

    pub fn has_memory(&self) -> bool {
        self.dim() > 6
    }

    /// Noise map restricted to the two pointer force components.
    pub fn pointer_noise_map(&self) -> DMatrix<f64> {
        self.noise_injection.columns(1, 2).into_owned()
    }

    /// `exp(C t)`.
    pub fn flow(&self, t: f64) -> Result<DMatrix<f64>> {
        if t < 0.0 {
            return Err(Error::InvalidInput(format!("negative time {t}")));
        }
        expm_scaled(&self.generator, t)
    }

    pub fn propagate(&self, t: f64) -> Result<Propagators> {
        let flow = self.flow(t)?;
        Ok(self.extract(t, &flow))
    }

    /// Block extraction from a precomputed flow matrix.
    pub fn extract(&self, t: f64, flow: &DMatrix<f64>) -> Propagators {
        let block =
            |r: usize, c: usize| -> Matrix3<f64> { flow.fixed_view::<3, 3>(r, c).into_owned() };
        let g = block(POS, VEL) * self.mass_inverse;
        let k = block(POS, POS) + g * self.couplings.damping;
        let g_dot = block(VEL, VEL) * self.mass_inverse;
        Propagators { t, k, g, g_dot }
    }

    /// `∫₀ᵗ G(t−s) γ(s) ds` with `γ(s) = η ω_c e^{-ω_c s} diag(0,1,1)`, the
    /// memory contribution to the position response of the renormalised
    /// dynamics.
    pub fn memory_response(&self, cfg: &MeasurementConfig, t: f64) -> Result<Matrix3<f64>> {
        if !self.has_memory() {
            return Ok(Matrix3::zeros());
        }
        let n = self.dim();
        let e = pointer_embedding();
        let mut big = DMatrix::zeros(n + 2, n + 2);
        big.view_mut((0, 0), (n, n)).copy_from(&self.generator);
        big.view_mut((VEL, n), (3, 2))
            .copy_from(&(self.mass_inverse * e));
        big.view_mut((n, n), (2, 2))
            .copy_from(&(Matrix2::identity() * -cfg.omega_c));
        let f = expm_scaled(&big, t)?;
        let conv = f.fixed_view::<3, 2>(POS, n).into_owned() * (cfg.eta * cfg.omega_c);
        let mut out = Matrix3::zeros();
        out.fixed_view_mut::<3, 2>(0, 1).copy_from(&conv);
        Ok(out)
    }
}

/// `X(t) = K(t) X(0) + G(t) P(0) + Λ(t)`, and `Ġ = dG/dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagators {
    pub t: f64,
    pub k: Matrix3<f64>,
    pub g: Matrix3<f64>,
    pub g_dot: Matrix3<f64>,
}

/// Pointer positions in terms of the system's initial state (`A`) and the
/// pointers' initial state (`B`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseMatrices {
    pub a: Matrix2<f64>,
    pub b: Matrix2x4<f64>,
    pub det_a: f64,
}

impl Propagators {
    pub fn response(&self) -> ResponseMatrices {
        let (k, g) = (&self.k, &self.g);
        let a = Matrix2::new(k[(1, 0)], g[(1, 0)], k[(2, 0)], g[(2, 0)]);
        #[rustfmt::skip]
        let b = Matrix2x4::new(
            k[(1, 1)], k[(1, 2)], g[(1, 1)], g[(1, 2)],
            k[(2, 1)], k[(2, 2)], g[(2, 1)], g[(2, 2)],
        );
        ResponseMatrices {
            a,
            b,
            det_a: a.determinant(),
        }
    }

    /// `Ġ M + G Dᵀ`.
    pub fn k_from_relation(&self, c: &CouplingMatrices) -> Matrix3<f64> {
        self.g_dot * c.mass + self.g * c.damping.transpose()
    }
}

pub fn response_matrices(p: &Propagators) -> ResponseMatrices {
    p.response()
}

/// Propagators cached on an explicit time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorSet {
    pub entries: Vec<Propagators>,
}

impl PropagatorSet {
    pub fn on_grid(generator: &AugmentedGenerator, times: &[f64]) -> Result<Self> {
        let entries = times
            .par_iter()
            .map(|&t| generator.propagate(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { entries })
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|p| p.t)
    }
}
