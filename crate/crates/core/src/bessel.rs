//! Integer-order Bessel functions of the first kind, `Jₙ(x)` for `x ≥ 0`.
//!
//! Small arguments use the ascending power series. Everything else goes
//! through Miller's downward recurrence, normalised with the completeness
//! sum `J₀² + 2 Σₖ Jₖ² = 1`. The recurrence is started far enough above
//! `max(order, x)` that the neglected tail is below double precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arguments at or below this use the power series in [`bessel_j`].
pub const SERIES_CUTOFF: f64 = 12.0;

/// Fixed part of the number of orders the downward recurrence starts above
/// `max(order, x)`.
pub const GUARD_ORDERS: usize = 40;

const RESCALE_ABOVE: f64 = 1e100;
const RESCALE_BY: f64 = 1e-100;

/// `J₀(x) … J_max(x)` at a single argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesselRow {
    pub argument: f64,
    pub max_order: usize,
    pub values: Vec<f64>,
}

impl BesselRow {
    /// `Jₘ(x)` for any integer `m`, using `J₋ₘ = (−1)ᵐ Jₘ`.
    ///
    /// Panics if `|m|` exceeds `max_order`.
    pub fn get(&self, order: i64) -> f64 {
        let n = order.unsigned_abs() as usize;
        let v = self.values[n];
        if order < 0 && n % 2 == 1 {
            -v
        } else {
            v
        }
    }

    /// `J₀² + 2 Σ_{k≥1} Jₖ²` over the stored orders.
    pub fn completeness(&self) -> f64 {
        let tail: f64 = self.values.iter().skip(1).map(|v| v * v).sum();
        self.values[0] * self.values[0] + 2.0 * tail
    }
}

fn check_argument(x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("Bessel argument must be finite, got {x}")));
    }
    if x < 0.0 {
        return Err(Error::Domain(format!("Bessel argument must be non-negative, got {x}")));
    }
    Ok(())
}

/// `Jₙ(x)` for integer `n` (negative orders allowed) and finite `x ≥ 0`.
pub fn bessel_j(order: i64, x: f64) -> Result<f64> {
    check_argument(x)?;
    let n = order.unsigned_abs() as usize;
    let value = if x == 0.0 {
        if n == 0 {
            1.0
        } else {
            0.0
        }
    } else if x <= SERIES_CUTOFF {
        power_series(n, x)
    } else {
        miller(n, x)[n]
    };
    Ok(if order < 0 && n % 2 == 1 { -value } else { value })
}

/// All orders `0..=max_order` at once, in one downward sweep.
pub fn bessel_row(max_order: usize, x: f64) -> Result<BesselRow> {
    check_argument(x)?;
    let values = if x == 0.0 {
        let mut v = vec![0.0; max_order + 1];
        v[0] = 1.0;
        v
    } else {
        miller(max_order, x)
    };
    Ok(BesselRow {
        argument: x,
        max_order,
        values,
    })
}

/// Order at which the downward recurrence is seeded.
///
/// `Jₘ(x)` leaves the oscillatory region at `m ≈ x` and decays like an Airy
/// tail of width `~x^{1/3}`, so the guard grows with that width on top of
/// the fixed [`GUARD_ORDERS`].
pub fn recurrence_start(max_order: usize, x: f64) -> usize {
    let turning = x.ceil() as usize;
    let airy_width = (6.0 * x.cbrt()).ceil() as usize;
    max_order.max(turning) + GUARD_ORDERS + airy_width
}

fn power_series(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    // (x/2)^n / n!, built incrementally so it underflows instead of overflowing.
    let mut lead = 1.0;
    for k in 1..=n {
        lead *= half / k as f64;
        if lead == 0.0 {
            return 0.0;
        }
    }
    let q = -half * half;
    let mut term = lead;
    let mut sum = lead;
    for m in 1..400 {
        term *= q / (m as f64 * (m + n) as f64);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs().max(lead) && m as f64 > half {
            break;
        }
    }
    sum
}

/// Normalised downward recurrence; returns orders `0..=max_order`. `x > 0`.
fn miller(max_order: usize, x: f64) -> Vec<f64> {
    let start = recurrence_start(max_order, x);
    let mut values = vec![0.0; max_order + 1];
    let two_over_x = 2.0 / x;

    let mut above = 0.0_f64; // f_{k+1}
    let mut current = 1.0_f64; // f_k, seeded at k = start
    let mut sum_sq_tail = 0.0_f64; // Σ_{j≥max(k,1)} f_j²
    let mut even_sum = 0.0_f64; // Σ_{j even, j≥2} f_j, for the sign
    let mut k = start;
    loop {
        if k <= max_order {
            values[k] = current;
        }
        if k == 0 {
            break;
        }
        sum_sq_tail += current * current;
        if k.is_multiple_of(2) {
            even_sum += current;
        }
        let below = (k as f64) * two_over_x * current - above;
        above = current;
        current = below;
        k -= 1;

        if current.abs() > RESCALE_ABOVE {
            current *= RESCALE_BY;
            above *= RESCALE_BY;
            sum_sq_tail *= RESCALE_BY * RESCALE_BY;
            even_sum *= RESCALE_BY;
            for v in values.iter_mut().skip(k + 1) {
                *v *= RESCALE_BY;
            }
        }
    }
    // current now holds f_0 (also stored in values[0]).
    let norm = (current * current + 2.0 * sum_sq_tail).sqrt();
    let sign = if current + 2.0 * even_sum >= 0.0 { 1.0 } else { -1.0 };
    let scale = sign / norm;
    for v in values.iter_mut() {
        *v *= scale;
    }
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Σ (−1)^m (x/2)^{2m+n} / (m! (m+n)!) with a fixed term count.
    fn series_oracle(n: u32, x: f64, terms: u32) -> f64 {
        let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
        (0..terms)
            .map(|m| {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                sign * (x / 2.0).powi((2 * m + n) as i32) / (fact(m) * fact(m + n))
            })
            .sum()
    }

    /// Trapezoid rule on the periodic integrand of
    /// `Jₙ(x) = (1/2π) ∫₀^{2π} cos(nθ − x sin θ) dθ`, exponentially accurate
    /// once the node count exceeds `|n| + x` comfortably.
    pub(crate) fn integral_oracle(n: i64, x: f64) -> f64 {
        let nodes = 2 * (n.unsigned_abs() as usize + x.ceil() as usize) + 200;
        let h = std::f64::consts::TAU / nodes as f64;
        let s: f64 = (0..nodes)
            .map(|j| {
                let th = j as f64 * h;
                (n as f64 * th - x * th.sin()).cos()
            })
            .sum();
        s / nodes as f64
    }

    #[test]
    fn trivial_values() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j(-7, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn j0_of_one_matches_series() {
        let oracle = series_oracle(0, 1.0, 30);
        assert!((oracle - 0.7651976866).abs() < 1e-10);
        assert!((bessel_j(0, 1.0).unwrap() - oracle).abs() < 1e-15);
    }

    #[test]
    fn negative_order_parity() {
        let j3 = bessel_j(3, 2.0).unwrap();
        assert_eq!(bessel_j(-3, 2.0).unwrap(), -j3);
        assert_eq!(bessel_j(-4, 2.0).unwrap(), bessel_j(4, 2.0).unwrap());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(bessel_j(0, f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(bessel_j(0, f64::INFINITY), Err(Error::Domain(_))));
        assert!(matches!(bessel_j(0, -1.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_row(3, f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn row_at_zero() {
        assert_eq!(bessel_row(5, 0.0).unwrap().values, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn row_small_argument_matches_series() {
        let row = bessel_row(2, 1.0).unwrap();
        let expected = [0.7651976866, 0.4400505857, 0.1149034849];
        for (k, e) in expected.iter().enumerate() {
            let oracle = series_oracle(k as u32, 1.0, 30);
            assert!((oracle - e).abs() < 1e-10);
            assert!((row.values[k] - oracle).abs() < 1e-12, "order {k}");
        }
    }

    #[test]
    fn row_completeness_at_100() {
        let row = bessel_row(140, 100.0).unwrap();
        assert!((row.completeness() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn against_integral_oracle() {
        let cases: &[(i64, f64)] = &[
            (0, 10.0),
            (1, 12.5),
            (5, 30.0),
            (100, 100.0),
            (100, 10.0),
            (250, 240.0),
            (37, 500.0),
            (0, 1000.0),
            (999, 1000.0),
            (1500, 1000.0),
        ];
        for &(n, x) in cases {
            let got = bessel_j(n, x).unwrap();
            let want = integral_oracle(n, x);
            assert!((got - want).abs() < 1e-12, "J_{n}({x}): {got} vs {want}");
        }
    }

    #[test]
    fn large_argument_and_order() {
        // The quadrature oracle itself carries ~x·ε phase error here.
        for &(n, x) in &[(0_i64, 1e4), (10_000, 1e4), (9_950, 1e4), (3, 7777.7)] {
            let got = bessel_j(n, x).unwrap();
            let want = integral_oracle(n, x);
            assert!((got - want).abs() < 5e-12, "J_{n}({x}): {got} vs {want}");
        }
        let row = bessel_row(10_000, 1e4).unwrap();
        assert!(row.values.iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn high_order_small_argument_underflows_cleanly() {
        let v = bessel_j(10_000, 1.0).unwrap();
        assert_eq!(v, 0.0);
        let row = bessel_row(10_000, 3.0).unwrap();
        assert!((row.values[0] - bessel_j(0, 3.0).unwrap()).abs() < 1e-14);
        assert!(row.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn series_and_recurrence_agree_at_cutoff() {
        for n in 0..60 {
            for &x in &[0.01, 0.5, 3.0, 7.5, 11.99, 12.0] {
                let row = bessel_row(60, x).unwrap();
                let direct = bessel_j(n, x).unwrap();
                assert!((row.values[n as usize] - direct).abs() < 1e-12, "J_{n}({x})");
            }
        }
    }

    proptest! {
        #[test]
        fn three_term_recurrence(x in 0.5f64..2000.0, frac in 0.0f64..1.0) {
            let n = 1 + ((x + 19.0) * frac) as i64;
            let lhs = bessel_j(n - 1, x).unwrap() + bessel_j(n + 1, x).unwrap();
            let rhs = 2.0 * n as f64 / x * bessel_j(n, x).unwrap();
            let scale = lhs.abs().max(rhs.abs()).max(1e-300);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * scale.max(1e-3),
                "n={} x={} lhs={} rhs={}", n, x, lhs, rhs);
        }

        #[test]
        fn row_matches_pointwise(x in 0.0f64..800.0, extra in 0usize..60) {
            let max_order = x as usize + extra;
            let row = bessel_row(max_order, x).unwrap();
            for k in (0..=max_order).step_by(7) {
                let d = (row.values[k] - bessel_j(k as i64, x).unwrap()).abs();
                prop_assert!(d <= 1e-12, "k={} x={} d={}", k, x, d);
            }
        }

        #[test]
        fn completeness_identity(x in 0.0f64..3000.0) {
            let row = bessel_row(x as usize + 40 + (6.0 * x.cbrt()) as usize, x).unwrap();
            prop_assert!((row.completeness() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn negative_orders_mirror(n in 0i64..300, x in 0.0f64..300.0) {
            let s = if n % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert_eq!(bessel_j(-n, x).unwrap(), s * bessel_j(n, x).unwrap());
        }
    }
}
