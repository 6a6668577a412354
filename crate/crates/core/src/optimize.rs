//! Optimal interaction times and thermal sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GaussianMoments, MeasurementConfig};
use crate::pipeline::Evaluator;
use crate::propagator::DynamicsMode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchOptions {
    pub lower: f64,
    pub upper: f64,
    /// Log-spaced points of the coarse scan.
    pub coarse_points: usize,
    /// Relative width in `t` at which golden-section refinement stops.
    pub rel_tol: f64,
    /// Relative distance in `U²` below which two local minima count as degenerate.
    pub degeneracy: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            lower: 0.02,
            upper: 3.0,
            coarse_points: 60,
            rel_tol: 1e-5,
            degeneracy: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Optimum {
    pub t_opt: f64,
    pub u_sq_min: f64,
    /// Other coarse-grid local minima within the degeneracy threshold.
    pub competing_minima: Vec<(f64, f64)>,
    pub evaluations: usize,
}

impl Optimum {
    pub fn multiple_minima(&self) -> bool {
        !self.competing_minima.is_empty()
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Coarse log-spaced scan followed by golden-section refinement around the
/// lowest grid point.
pub fn find_optimal_time<F>(f: F, opts: &SearchOptions) -> Result<Optimum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(opts.lower > 0.0) || !(opts.upper > opts.lower) || opts.coarse_points < 3 {
        return Err(Error::InvalidInput(format!(
            "search needs 0 < lower < upper and at least 3 coarse points, got {opts:?}"
        )));
    }
    let n = opts.coarse_points;
    let ratio = opts.upper / opts.lower;
    let grid: Vec<f64> = (0..n)
        .map(|i| {
            if i == n - 1 {
                opts.upper
            } else {
                opts.lower * ratio.powf(i as f64 / (n - 1) as f64)
            }
        })
        .collect();
    let values = grid.par_iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
    let best = (0..n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    if best == 0 || best == n - 1 {
        return Err(Error::BoundaryMinimum {
            t: grid[best],
            value: values[best],
        });
    }
    let v_min = values[best];
    let competing_minima = (1..n - 1)
        .filter(|&j| j != best && values[j] < values[j - 1] && values[j] <= values[j + 1])
        .filter(|&j| (values[j] - v_min) <= opts.degeneracy * v_min.abs())
        .map(|j| (grid[j], values[j]))
        .collect();

    let (mut a, mut b) = (grid[best - 1], grid[best + 1]);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut evaluations = n + 2;
    while (b - a) > opts.rel_tol * 0.5 * (a + b) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        evaluations += 1;
    }
    let (mut t_opt, mut u_sq_min) = if fc < fd { (c, fc) } else { (d, fd) };
    if v_min < u_sq_min {
        t_opt = grid[best];
        u_sq_min = v_min;
    }
    Ok(Optimum {
        t_opt,
        u_sq_min,
        competing_minima,
        evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub inv_beta: f64,
    pub t_opt: f64,
    pub u_sq_min: f64,
    pub boundary: bool,
    pub multiple_minima: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub search: SearchOptions,
}

/// `linspace(0.5, 5, 10)`, which contains the reference values 1 and 2.
pub fn default_sweep_grid() -> Vec<f64> {
    (1..=10).map(|i| 0.5 * i as f64).collect()
}

/// One optimisation per thermal energy. A minimum on the search boundary is
/// returned as a flagged point rather than an error.
pub fn thermal_sweep(
    cfg: &MeasurementConfig,
    moments: &GaussianMoments,
    mode: DynamicsMode,
    inv_betas: &[f64],
    opts: &SearchOptions,
) -> Result<SweepResult> {
    if inv_betas.is_empty() {
        return Err(Error::InvalidInput("empty thermal-energy grid".into()));
    }
    if inv_betas.iter().any(|b| !(*b > 0.0)) || inv_betas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "thermal energies must be positive and strictly ascending".into(),
        ));
    }
    let points = inv_betas
        .par_iter()
        .map(|&inv_beta| -> Result<SweepPoint> {
            let ev = Evaluator::new(cfg.with_inv_beta(inv_beta), *moments, mode)?;
            match find_optimal_time(|t| ev.u_sq(t), opts) {
                Ok(o) => Ok(SweepPoint {
                    inv_beta,
                    t_opt: o.t_opt,
                    u_sq_min: o.u_sq_min,
                    boundary: false,
                    multiple_minima: o.multiple_minima(),
                }),
                Err(Error::BoundaryMinimum { t, value }) => Ok(SweepPoint {
                    inv_beta,
                    t_opt: t,
                    u_sq_min: value,
                    boundary: true,
                    multiple_minima: false,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        points,
        search: *opts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_minimum_is_located() {
        let o =
            find_optimal_time(|t| Ok(2.0 + (t - 0.87).powi(2)), &SearchOptions::default()).unwrap();
        assert!((o.t_opt - 0.87).abs() < 1e-5);
        assert!((o.u_sq_min - 2.0).abs() < 1e-9);
        assert!(!o.multiple_minima());
    }

    #[test]
    fn monotone_function_hits_boundary() {
        let opts = SearchOptions {
            lower: 0.1,
            upper: 2.0,
            ..Default::default()
        };
        let r = find_optimal_time(|t| Ok(1.0 / t), &opts);
        assert!(matches!(r, Err(Error::BoundaryMinimum { t, .. }) if t == 2.0));
    }

    #[test]
    fn degenerate_wells_are_reported() {
        let f = |t: f64| Ok(1.0 + (t - 0.5).powi(2).min((t - 2.0).powi(2) + 0.005));
        let o = find_optimal_time(f, &SearchOptions::default()).unwrap();
        assert!((o.t_opt - 0.5).abs() < 1e-4);
        assert!(o.multiple_minima());
        assert!((o.competing_minima[0].0 - 2.0).abs() < 0.2);
    }

    #[test]
    fn invalid_search_rejected() {
        let opts = SearchOptions {
            lower: 0.0,
            ..Default::default()
        };
        assert!(find_optimal_time(Ok, &opts).is_err());
    }

    #[test]
    fn sweep_grid_contains_reference_temperatures() {
        let g = default_sweep_grid();
        assert_eq!(g.len(), 10);
        assert!(g.contains(&1.0) && g.contains(&2.0));
        assert_eq!((g[0], g[9]), (0.5, 5.0));
    }

    #[test]
    fn sweep_rejects_unsorted_grid() {
        let r = thermal_sweep(
            &MeasurementConfig::default(),
            &GaussianMoments::default(),
            DynamicsMode::Renormalized,
            &[2.0, 1.0],
            &SearchOptions::default(),
        );
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }
}
