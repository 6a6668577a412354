//! One-dimensional quadrature: Gauss–Legendre rules, adaptive Gauss–Kronrod,
//! Wynn's epsilon extrapolation and half-period summation of Fourier integrals.

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
#[allow(clippy::excessive_precision)]
const XGK21: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WGK21: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
#[allow(clippy::excessive_precision)]
const WG10: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = WGK21[10] * fc;
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK21[j];
        let s = f(mid - dx) + f(mid + dx);
        kronrod += WGK21[j] * s;
        if j % 2 == 1 {
            gauss += WG10[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Tolerances for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-13,
            rel: 1e-12,
            max_intervals: 2000,
        }
    }
}

/// Globally adaptive Gauss–Kronrod (G10/K21) quadrature on [a, b].
///
/// Returns the estimate and its error bound.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (v, e) = kronrod21(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while err > tol.abs.max(tol.rel * total.abs()) {
        if intervals.len() >= tol.max_intervals {
            return Err(Error::QuadratureNonConvergence(format!(
                "adaptive quadrature on [{a}, {b}] hit {} intervals with error {err:.3e}",
                tol.max_intervals
            )));
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::QuadratureNonConvergence(format!(
                "interval [{lo}, {hi}] cannot be bisected further"
            )));
        }
        let (v1, e1) = kronrod21(&f, lo, mid);
        let (v2, e2) = kronrod21(&f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
        total = intervals.iter().map(|x| x.2).sum();
        err = intervals.iter().map(|x| x.3).sum();
    }
    Ok((total, err))
}

/// Wynn's epsilon algorithm over a growing sequence of partial sums.
#[derive(Debug, Default, Clone)]
pub struct WynnEpsilon {
    // previous anti-diagonal of the epsilon table, eps_{-1} row dropped
    diag: Vec<f64>,
    best: Option<f64>,
    previous_best: Option<f64>,
}

impl WynnEpsilon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds the next partial sum and returns the current extrapolated limit.
    pub fn push(&mut self, s: f64) -> f64 {
        let mut new_diag = Vec::with_capacity(self.diag.len() + 1);
        new_diag.push(s);
        let mut below = 0.0; // eps_{-1} column
        for (k, &old) in self.diag.iter().enumerate() {
            let diff = new_diag[k] - old;
            let next = if diff == 0.0 || !diff.is_finite() {
                f64::INFINITY
            } else {
                below + 1.0 / diff
            };
            below = old;
            if !next.is_finite() {
                break;
            }
            new_diag.push(next);
        }
        self.diag = new_diag;
        // even columns hold the extrapolants; take the deepest one
        let deepest_even = (self.diag.len() - 1) & !1;
        let estimate = self.diag[deepest_even];
        self.previous_best = self.best;
        self.best = Some(estimate);
        estimate
    }

    pub fn change(&self) -> f64 {
        match (self.best, self.previous_best) {
            (Some(a), Some(b)) => (a - b).abs(),
            _ => f64::INFINITY,
        }
    }
}

/// Kind of Fourier kernel in [`fourier_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Cos,
    Sin,
}

/// Options for half-period summation of Fourier integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierOptions {
    pub panel: Tolerance,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for FourierOptions {
    fn default() -> Self {
        Self {
            panel: Tolerance {
                abs: 1e-15,
                rel: 1e-14,
                max_intervals: 200,
            },
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_panels: 20_000,
        }
    }
}

/// `∫_0^∞ f(ω) cos(ωt) dω` or the sine analogue, for `f` that decays
/// monotonically beyond `smooth_from`.
///
/// The range is split at the zeros of the trigonometric factor; each
/// half-period is integrated adaptively and the alternating partial sums past
/// `smooth_from` are extrapolated with Wynn's epsilon algorithm.
pub fn fourier_integral<F: Fn(f64) -> f64>(
    f: F,
    t: f64,
    trig: Trig,
    smooth_from: f64,
    opts: FourierOptions,
) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "Fourier integral needs t > 0, got {t}"
        )));
    }
    let half_period = std::f64::consts::PI / t;
    let offset = match trig {
        Trig::Cos => 0.5,
        Trig::Sin => 1.0,
    };
    let g = |w: f64| match trig {
        Trig::Cos => f(w) * (w * t).cos(),
        Trig::Sin => f(w) * (w * t).sin(),
    };
    let mut lo = 0.0;
    let mut k = 0usize;
    let mut partial = 0.0;
    let mut wynn = WynnEpsilon::new();
    let mut accelerated = 0usize;
    let mut stable = 0usize;
    while k < opts.max_panels {
        let hi = (k as f64 + offset) * half_period;
        let (v, _) = adaptive(g, lo, hi, opts.panel)?;
        partial += v;
        lo = hi;
        k += 1;
        if hi < smooth_from {
            continue;
        }
        let est = wynn.push(partial);
        accelerated += 1;
        if accelerated >= 6 && wynn.change() <= opts.abs_tol.max(opts.rel_tol * est.abs()) {
            stable += 1;
            if stable >= 3 {
                return Ok(est);
            }
        } else {
            stable = 0;
        }
        // restart the table periodically so old, less accurate partial sums
        // stop dominating the extrapolation
        if accelerated.is_multiple_of(60) {
            wynn = WynnEpsilon::new();
            wynn.push(partial);
        }
    }
    Err(Error::QuadratureNonConvergence(format!(
        "Fourier integral at t = {t} did not settle within {} half-periods",
        opts.max_panels
    )))
}
