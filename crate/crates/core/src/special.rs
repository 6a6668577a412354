//! Polylogarithms of integer order on (0, 1), used by the Matsubara tail sums.

use std::f64::consts::PI;

fn zeta_even(two_j: u32) -> f64 {
    match two_j {
        2 => PI * PI / 6.0,
        4 => PI.powi(4) / 90.0,
        6 => PI.powi(6) / 945.0,
        _ => {
            // converges fast enough for 2j >= 8
            let s = f64::from(two_j);
            (1..=60).map(|n| (n as f64).powf(-s)).sum()
        }
    }
}

/// Riemann zeta at the integer `k != 1` (only the values the polylog
/// expansion needs).
pub fn zeta_int(k: i32) -> f64 {
    match k {
        3 => 1.202_056_903_159_594_3,
        5 => 1.036_927_755_143_37,
        7 => 1.008_349_277_381_922_8,
        0 => -0.5,
        k if k >= 2 && k % 2 == 0 => zeta_even(k as u32),
        k if k < 0 && k % 2 == 0 => 0.0,
        k if k < 0 => {
            // ζ(1-2j) = (-1)^j 2 (2j-1)! ζ(2j) / (2π)^{2j}
            let j = (1 - k) / 2;
            let mut fact = 1.0;
            for i in 1..(2 * j) {
                fact *= f64::from(i);
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * 2.0 * fact * zeta_even((2 * j) as u32) / (2.0 * PI).powi(2 * j)
        }
        k => {
            let s = f64::from(k);
            (1..=200_000).map(|n| (n as f64).powf(-s)).sum()
        }
    }
}

/// `Li_s(e^{-a})` for integer order `s >= 2` and `a > 0`.
pub fn polylog_exp(s: u32, a: f64) -> f64 {
    debug_assert!(s >= 2 && a > 0.0);
    if a >= 2.0 {
        let x = (-a).exp();
        let mut sum = 0.0;
        let mut xn = 1.0;
        for n in 1..=2000u32 {
            xn *= x;
            let term = xn / f64::from(n).powi(s as i32);
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        return sum;
    }
    // Li_s(e^μ) = Σ_{k≠s-1} ζ(s-k) μ^k/k! + μ^{s-1}/(s-1)! [H_{s-1} - ln(-μ)]
    let mu = -a;
    let mut sum = 0.0;
    let mut pow_over_fact = 1.0; // μ^k / k!
    for k in 0..80u32 {
        if k > 0 {
            pow_over_fact *= mu / f64::from(k);
        }
        if k == s - 1 {
            let harmonic: f64 = (1..s).map(|i| 1.0 / f64::from(i)).sum();
            sum += pow_over_fact * (harmonic - a.ln());
            continue;
        }
        let term = zeta_int(s as i32 - k as i32) * pow_over_fact;
        sum += term;
        if k > s + 4 && term != 0.0 && term.abs() < 1e-19 {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_zeta_values() {
        assert!((zeta_int(-1) + 1.0 / 12.0).abs() < 1e-15);
        assert!((zeta_int(-3) - 1.0 / 120.0).abs() < 1e-15);
        assert!((zeta_int(-5) + 1.0 / 252.0).abs() < 1e-15);
        assert_eq!(zeta_int(-4), 0.0);
    }

    #[test]
    fn polylog_matches_reference_values() {
        // 25-digit reference evaluations
        let a = [1e-3, 0.05, 0.1, 0.9, 1.9, 2.1, 5.0];
        let table: [(u32, [f64; 7]); 3] = [
            (
                3,
                [
                    1.2004161730537155,
                    1.125440260124584,
                    1.056659408062426,
                    0.43026523580490694,
                    0.15249736597923116,
                    0.12440263741024883,
                    0.006743633352338416,
                ],
            ),
            (
                5,
                [
                    1.0358460326643293,
                    0.9842812191006465,
                    0.9344498768212838,
                    0.41204277377277665,
                    0.15028198947072216,
                    0.12293282570693267,
                    0.006739367007765133,
                ],
            ),
            (
                7,
                [
                    1.0073324526034788,
                    0.958756044446154,
                    0.9116241008568797,
                    0.4078936155508786,
                    0.14974495235705867,
                    0.1225744349322746,
                    0.006738301826035749,
                ],
            ),
        ];
        for (s, values) in table {
            for (ai, expected) in a.iter().zip(values) {
                let v = polylog_exp(s, *ai);
                assert!(
                    (v - expected).abs() < 4e-16 * expected.max(1.0) * 4.0,
                    "s={s} a={ai}: {v} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn polylog_at_one_is_zeta() {
        assert!((polylog_exp(3, 1e-14) - 1.202_056_903_159_594_3).abs() < 1e-12);
    }
}
