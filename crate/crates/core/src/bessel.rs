//! Integer-order Bessel functions of the first kind, used as the analytic
//! reference for coherent transport on an infinite homogeneous chain.
//! Independent of every ODE engine in the crate.

/// Below this |x| the power series is summed directly.
const SERIES_LIMIT: f64 = 12.0;

/// J_n(x) for integer n and real x.
pub fn bessel_j(order: i64, x: f64) -> f64 {
    let n = order.unsigned_abs() as usize;
    // J_{-n}(x) = (-1)^n J_n(x)
    let sign = if order < 0 && n % 2 == 1 { -1.0 } else { 1.0 };
    let value = if x.abs() <= SERIES_LIMIT {
        series(n, x)
    } else {
        miller(n, x)
    };
    sign * value
}

fn series(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    // first term (x/2)^n / n!
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    if term == 0.0 {
        return 0.0;
    }
    let q = -half * half;
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Downward recurrence J_{k−1} = (2k/x) J_k − J_{k+1}, normalized with
/// J_0 + 2 Σ J_{2k} = 1.
fn miller(n: usize, x: f64) -> f64 {
    let ax = x.abs();
    let start = {
        let m = n.max(ax.ceil() as usize) + 30 + (10.0 * ax.sqrt()) as usize;
        m + (m % 2)
    };
    let mut above = 0.0f64;
    let mut current = 1e-30f64;
    let mut norm = 0.0f64;
    let mut wanted = 0.0f64;
    for k in (1..=start).rev() {
        if k == n {
            wanted = current;
        }
        if k % 2 == 0 {
            norm += 2.0 * current;
        }
        let below = 2.0 * k as f64 / ax * current - above;
        above = current;
        current = below;
        if current.abs() > 1e250 {
            above *= 1e-250;
            current *= 1e-250;
            norm *= 1e-250;
            wanted *= 1e-250;
        }
    }
    // `current` now holds the unnormalized J_0
    if n == 0 {
        wanted = current;
    }
    norm += current;
    let value = wanted / norm;
    if x < 0.0 && n % 2 == 1 {
        -value
    } else {
        value
    }
}

/// Population at distance `site_offset` from the initially excited site of
/// an infinite homogeneous chain with nearest-neighbour coupling `v` and no
/// dephasing: J_k(2vt)².
pub fn chain_bessel_populations(v: f64, site_offset: i64, t: f64) -> f64 {
    bessel_j(site_offset, 2.0 * v * t).powi(2)
}

/// Amplitude c_k(t) = (−i)^k J_k(2vt) on the infinite chain (ħ = 1).
pub fn chain_bessel_amplitude(v: f64, site_offset: i64, t: f64) -> num_complex::Complex64 {
    let j = bessel_j(site_offset, 2.0 * v * t);
    let phase = match site_offset.rem_euclid(4) {
        0 => num_complex::Complex64::new(1.0, 0.0),
        1 => num_complex::Complex64::new(0.0, -1.0),
        2 => num_complex::Complex64::new(-1.0, 0.0),
        _ => num_complex::Complex64::new(0.0, 1.0),
    };
    phase * j
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values from an arbitrary-precision library
    const REFERENCE: &[(i64, f64, f64)] = &[
        (0, 1.0, 0.765_197_686_557_966_55),
        (1, 2.5, 0.497_094_102_464_274_04),
        (5, 10.0, -0.234_061_528_186_793_64),
        (0, 12.0, 0.047_689_310_796_833_537),
        (3, 12.5, 0.110_008_136_314_349_27),
        (0, 20.0, 0.167_024_664_340_583_15),
        (7, 20.0, -0.184_221_397_720_594_43),
        (14, 12.0, 0.065_040_230_269_017_762),
        (2, 30.0, 0.078_451_246_073_265_349),
        (20, 15.0, 0.007_360_234_079_223_485_6),
    ];

    #[test]
    fn matches_reference_values() {
        for &(n, x, want) in REFERENCE {
            let got = bessel_j(n, x);
            assert!((got - want).abs() < 1e-12, "J_{n}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn series_and_recurrence_agree_at_switchover() {
        for n in 0..20 {
            for &x in &[8.0, 11.0, 12.0] {
                assert!((series(n, x) - miller(n, x)).abs() < 1e-11, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn symmetry_relations() {
        for n in 0..6i64 {
            for &x in &[0.7, 5.0, 13.0] {
                let s = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert!((bessel_j(-n, x) - s * bessel_j(n, x)).abs() < 1e-14);
                assert!((bessel_j(n, -x) - s * bessel_j(n, x)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn chain_populations_at_origin_and_first_zero() {
        assert_eq!(chain_bessel_populations(1.0, 0, 0.0), 1.0);
        assert_eq!(chain_bessel_populations(1.0, 3, 0.0), 0.0);
        let first_zero = 2.404_825_557_695_773;
        assert!(chain_bessel_populations(1.0, 0, first_zero / 2.0) < 1e-28);
    }

    #[test]
    fn populations_sum_to_one() {
        // Σ_k J_k(x)² = 1
        for &t in &[0.5, 3.0, 7.0] {
            let total: f64 = (-60..=60).map(|k| chain_bessel_populations(1.0, k, t)).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
