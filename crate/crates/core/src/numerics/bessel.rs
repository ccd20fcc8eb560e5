//! Modified Bessel functions of the first kind, orders 0 and 1.
//!
//! The exponentially scaled forms `exp(-x)·I_n(x)` are the primitives; the
//! fading model only ever needs the scaled values, which stay O(1/√x) where
//! the unscaled ones overflow.

use std::f64::consts::PI;

/// Below this argument the ascending power series is summed; above it the
/// large-argument asymptotic expansion is used. Both are accurate to a few ulps
/// at the crossover.
const SERIES_LIMIT: f64 = 25.0;

/// `exp(-|x|)·I0(x)`.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= SERIES_LIMIT {
        series(0, ax) * (-ax).exp()
    } else {
        asymptotic(0, ax)
    }
}

/// `exp(-|x|)·I1(x)`.
pub fn bessel_i1_scaled(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= SERIES_LIMIT {
        series(1, ax) * (-ax).exp()
    } else {
        asymptotic(1, ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

pub fn bessel_i0(x: f64) -> f64 {
    bessel_i0_scaled(x) * x.abs().exp()
}

pub fn bessel_i1(x: f64) -> f64 {
    bessel_i1_scaled(x) * x.abs().exp()
}

/// Σ_k (x/2)^(2k+n) / (k!·(k+n)!) for x ≥ 0. All terms are positive, so the
/// sum carries no cancellation.
fn series(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let mut term = if order == 0 { 1.0 } else { half };
    let mut sum = term;
    let mut k = 1.0;
    while term > f64::EPSILON * 1e-2 * sum {
        term *= q / (k * (k + f64::from(order)));
        sum += term;
        k += 1.0;
        if k > 500.0 {
            break;
        }
    }
    sum
}

/// exp(-x)·I_n(x) ≈ (2πx)^(-1/2) Σ_k (-1)^k a_k(n) / x^k, truncated at the
/// smallest term.
fn asymptotic(order: u32, x: f64) -> f64 {
    let mu = 4.0 * f64::from(order * order);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0_f64;
    loop {
        let odd = 2.0 * k - 1.0;
        let next = -term * (mu - odd * odd) / (k * 8.0 * x);
        if next.abs() >= term.abs() || next.abs() < f64::EPSILON * 1e-2 {
            if next.abs() < term.abs() {
                sum += next;
            }
            break;
        }
        sum += next;
        term = next;
        k += 1.0;
    }
    sum / (2.0 * PI * x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// I_n(x) = (1/π) ∫_0^π exp(x cos θ) cos(nθ) dθ. The integrand is smooth and
    /// periodic, so the trapezoid rule converges geometrically.
    fn integral_oracle_scaled(order: u32, x: f64) -> f64 {
        let panels = 4000;
        let h = PI / panels as f64;
        let g = |t: f64| ((x * (t.cos() - 1.0)).exp()) * (f64::from(order) * t).cos();
        let mut s = 0.5 * (g(0.0) + g(PI));
        for i in 1..panels {
            s += g(i as f64 * h);
        }
        s * h / PI
    }

    #[test]
    fn reference_values_at_four() {
        // Tabulated: I0(4) = 11.301921952136330, I1(4) = 9.759465153704450.
        assert!((bessel_i0(4.0) - 11.301_921_952_136_33).abs() < 1e-12);
        assert!((bessel_i1(4.0) - 9.759_465_153_704_45).abs() < 1e-12);
    }

    #[test]
    fn small_arguments() {
        assert_eq!(bessel_i0(0.0), 1.0);
        assert_eq!(bessel_i1(0.0), 0.0);
        assert!((bessel_i1(-2.0) + bessel_i1(2.0)).abs() < 1e-15);
        assert!((bessel_i0(-2.0) - bessel_i0(2.0)).abs() < 1e-15);
    }

    #[test]
    fn agrees_with_integral_representation() {
        for &x in &[0.1, 0.5, 1.0, 2.5, 4.0, 8.0, 16.0, 24.0, 26.0, 40.0, 80.0, 200.0] {
            for order in 0..=1 {
                let got = if order == 0 {
                    bessel_i0_scaled(x)
                } else {
                    bessel_i1_scaled(x)
                };
                let want = integral_oracle_scaled(order, x);
                assert!(
                    ((got - want) / want).abs() < 1e-12,
                    "order {order} x {x}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn branches_agree_at_crossover() {
        for &x in &[SERIES_LIMIT * 0.999, SERIES_LIMIT, SERIES_LIMIT * 1.001] {
            let s0 = series(0, x) * (-x).exp();
            let a0 = asymptotic(0, x);
            let s1 = series(1, x) * (-x).exp();
            let a1 = asymptotic(1, x);
            assert!(((s0 - a0) / s0).abs() < 1e-13);
            assert!(((s1 - a1) / s1).abs() < 1e-13);
        }
    }
}
