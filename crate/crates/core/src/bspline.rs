//! Cardinal B-splines `Q_m`.
//!
//! `Q_1` is the indicator of `[0, 1)` and `Q_{m+1} = Q_m * Q_1`, so `Q_m` is a
//! piecewise polynomial of degree `m - 1` with integer knots and support
//! `[0, m]`. Values are computed two ways: the Cox–de Boor recurrence (the
//! production path) and the truncated-power sum, which is also the exact
//! rational route used to build symbol matrices.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Exact rational number (always in lowest terms, positive denominator).
pub type Rational = BigRational;

/// Largest supported spline order.
pub const MAX_ORDER: u32 = 30;

/// Order `m` of the B-spline `Q_m`; support is `[0, m]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SplineOrder(u32);

impl SplineOrder {
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 || m > MAX_ORDER {
            return Err(Error::InvalidOrder { m, max: MAX_ORDER });
        }
        Ok(Self(m))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Order `m - k`, the spline that carries the `k`-th derivative.
    fn lowered(self, k: u32) -> Self {
        Self(self.0 - k)
    }
}

impl std::fmt::Display for SplineOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Q_{}", self.0)
    }
}

/// Evaluates `Q_m(t)` with the Cox–de Boor recurrence on integer knots.
pub fn eval_q(m: SplineOrder, t: f64) -> f64 {
    let m = m.get() as usize;
    if !(t >= 0.0 && t < m as f64) {
        return 0.0;
    }
    // b[i] = Q_k(t - i) for the current order k
    let mut b = [0.0f64; MAX_ORDER as usize + 2];
    b[t.floor() as usize] = 1.0;
    for k in 2..=m {
        let kf = k as f64;
        for i in 0..=(m - k) {
            let x = t - i as f64;
            b[i] = (x * b[i] + (kf - x) * b[i + 1]) / (kf - 1.0);
        }
    }
    b[0]
}

/// Evaluates `Q_m(t)` from the truncated-power sum
/// `1/(m-1)! * sum_j (-1)^j C(m, j) (t - j)_+^(m-1)`.
///
/// Kept as an independent oracle for [`eval_q`]; it loses accuracy for large
/// `m` through cancellation.
pub fn eval_q_truncated_power(m: SplineOrder, t: f64) -> f64 {
    let m = m.get();
    if m == 1 {
        return if (0.0..1.0).contains(&t) { 1.0 } else { 0.0 };
    }
    if !(t > 0.0 && t < m as f64) {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut fact = 1.0;
    for j in 1..m {
        fact *= j as f64;
    }
    for j in 0..=m {
        let x = t - j as f64;
        if x <= 0.0 {
            break;
        }
        let c = binomial(m as u64, j as u64) as f64;
        let term = c * x.powi(m as i32 - 1);
        if j % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    sum / fact
}

/// Exact value of `Q_m(t)` at a rational point.
pub fn eval_q_exact(m: SplineOrder, t: &Rational) -> Rational {
    let m = m.get();
    let zero = Rational::zero();
    if m == 1 {
        let one = Rational::one();
        return if *t >= zero && *t < one { one } else { zero };
    }
    let upper = Rational::from_integer(BigInt::from(m));
    if *t <= zero || *t >= upper {
        return zero;
    }
    let mut sum = Rational::zero();
    for j in 0..=m {
        let x = t - Rational::from_integer(BigInt::from(j));
        if !x.is_positive() {
            break;
        }
        let c = Rational::from_integer(BigInt::from(binomial(m as u64, j as u64)));
        let term = c * num_traits::pow(x, (m - 1) as usize);
        if j % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let mut fact = BigInt::one();
    for j in 2..m {
        fact *= j;
    }
    sum / Rational::from_integer(fact)
}

fn check_derivative(m: SplineOrder, k: u32) -> Result<()> {
    if k > 0 && k + 2 > m.get() {
        return Err(Error::DerivativeOrder { m: m.get(), k });
    }
    Ok(())
}

/// `k`-th derivative of `Q_m` at `t` via
/// `Q_m^(k)(t) = sum_r (-1)^r C(k, r) Q_{m-k}(t - r)`.
///
/// Only continuous derivatives (`k <= m - 2`) are accepted.
pub fn eval_q_deriv(m: SplineOrder, k: u32, t: f64) -> Result<f64> {
    check_derivative(m, k)?;
    if k == 0 {
        return Ok(eval_q(m, t));
    }
    let low = m.lowered(k);
    let mut sum = 0.0;
    for r in 0..=k {
        let c = binomial(k as u64, r as u64) as f64;
        let v = eval_q(low, t - r as f64);
        if r % 2 == 0 {
            sum += c * v;
        } else {
            sum -= c * v;
        }
    }
    Ok(sum)
}

/// Exact counterpart of [`eval_q_deriv`].
pub fn eval_q_deriv_exact(m: SplineOrder, k: u32, t: &Rational) -> Result<Rational> {
    check_derivative(m, k)?;
    if k == 0 {
        return Ok(eval_q_exact(m, t));
    }
    let low = m.lowered(k);
    let mut sum = Rational::zero();
    for r in 0..=k {
        let c = Rational::from_integer(BigInt::from(binomial(k as u64, r as u64)));
        let v = eval_q_exact(low, &(t - Rational::from_integer(BigInt::from(r))));
        if r % 2 == 0 {
            sum += c * v;
        } else {
            sum -= c * v;
        }
    }
    Ok(sum)
}

/// `I_k(x) = int_0^1 s^k e^{-x s} ds` for complex `x`.
fn moment_integral(k: u32, x: Complex64) -> Complex64 {
    if x.norm() < 1.0 {
        // Taylor series; avoids the cancellation in (1 - e^{-x}) / x near 0
        let mut sum = Complex64::zero();
        let mut power = Complex64::one();
        let mut fact = 1.0;
        for n in 0..40u32 {
            if n > 0 {
                power *= -x;
                fact *= n as f64;
            }
            let term = power / (fact * (n + k + 1) as f64);
            sum += term;
            if term.norm() < 1e-18 * sum.norm().max(1e-300) {
                break;
            }
        }
        return sum;
    }
    let e = (-x).exp();
    let mut value = (Complex64::one() - e) / x;
    for j in 1..=k {
        value = (value * j as f64 - e) / x;
    }
    value
}

/// `g^(k)(xi)` for `g(xi) = (1 - e^{-2 pi i xi}) / (2 pi i xi)`, so that
/// `Q_m^(xi) = g(xi)^m`.
fn unit_box_transform(k: u32, xi: f64) -> Complex64 {
    let a = Complex64::new(0.0, 2.0 * PI);
    (-a).powu(k) * moment_integral(k, a * xi)
}

/// Fourier transform `Q_m^(xi) = ((1 - e^{-2 pi i xi}) / (2 pi i xi))^m`.
pub fn fourier_q(m: SplineOrder, xi: f64) -> Complex64 {
    unit_box_transform(0, xi).powu(m.get())
}

/// `r`-th derivative of `Q_m^` at `xi`, for `r <= 3`.
pub fn fourier_q_deriv(m: SplineOrder, r: u32, xi: f64) -> Result<Complex64> {
    let mf = m.get() as f64;
    let g0 = unit_box_transform(0, xi);
    let pow = |coef: f64, e: i64| -> Complex64 {
        if coef == 0.0 {
            Complex64::zero()
        } else {
            g0.powi(e as i32) * coef
        }
    };
    let mi = m.get() as i64;
    let value = match r {
        0 => g0.powu(m.get()),
        1 => pow(mf, mi - 1) * unit_box_transform(1, xi),
        2 => {
            let g1 = unit_box_transform(1, xi);
            let g2 = unit_box_transform(2, xi);
            pow(mf * (mf - 1.0), mi - 2) * g1 * g1 + pow(mf, mi - 1) * g2
        }
        3 => {
            let g1 = unit_box_transform(1, xi);
            let g2 = unit_box_transform(2, xi);
            let g3 = unit_box_transform(3, xi);
            pow(mf * (mf - 1.0) * (mf - 2.0), mi - 3) * g1 * g1 * g1
                + pow(3.0 * mf * (mf - 1.0), mi - 2) * g1 * g2
                + pow(mf, mi - 1) * g3
        }
        _ => return Err(Error::UnsupportedFourierDerivative(r)),
    };
    Ok(value)
}

/// Krein–Favard constant
/// `K_m = 4/pi * sum_{nu >= 0} (-1)^{nu (m+1)} / (2 nu + 1)^{m+1}`.
///
/// Odd `m` gives a positive series, summed directly with an Euler–Maclaurin
/// tail whose remainder bound is below `tol`. Even `m` gives an alternating
/// series of moments of a positive measure, summed with the
/// Cohen–Rodriguez Villegas–Zagier acceleration, whose error is at most
/// `2 a_0 / (3 + sqrt 8)^n`.
pub fn krein_favard(m: u32, tol: f64) -> f64 {
    let s = m as i32 + 1;
    let series = if m.is_multiple_of(2) {
        alternating_series(s, tol)
    } else {
        positive_series(s, tol)
    };
    4.0 / PI * series
}

fn alternating_series(s: i32, tol: f64) -> f64 {
    let base = 3.0 + 8f64.sqrt();
    // |error| <= 2 a_0 / base^n with a_0 = 1; the 4/pi factor is < 2
    let n = ((2.0 * 2.0 / tol).ln() / base.ln()).ceil().max(1.0) as usize;
    let mut d = base.powi(n as i32);
    d = (d + 1.0 / d) / 2.0;
    let mut b = -1.0;
    let mut c = -d;
    let mut sum = 0.0;
    for k in 0..n {
        c = b - c;
        sum += c / ((2 * k + 1) as f64).powi(s);
        let kf = k as f64;
        let nf = n as f64;
        b *= (kf + nf) * (kf - nf) / ((kf + 0.5) * (kf + 1.0));
    }
    sum / d
}

fn positive_series(s: i32, tol: f64) -> f64 {
    // Bernoulli numbers B_2, B_4, B_6, B_8
    const BERNOULLI: [f64; 4] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0];
    let sf = s as f64;
    // k-th derivative of (2x + 1)^{-s}
    let deriv = |k: u32, x: f64| -> f64 {
        let mut rising = 1.0;
        for j in 0..k {
            rising *= sf + j as f64;
        }
        (-2.0f64).powi(k as i32) * rising * (2.0 * x + 1.0).powf(-sf - k as f64)
    };
    let p = BERNOULLI.len() as u32;
    let mut fact = [1.0f64; 9];
    for i in 1..9 {
        fact[i] = fact[i - 1] * i as f64;
    }
    let mut n = 8usize;
    loop {
        let remainder =
            BERNOULLI[p as usize - 1].abs() / fact[2 * p as usize] * deriv(2 * p - 1, n as f64).abs();
        if remainder < tol / 2.0 || n > 1 << 20 {
            break;
        }
        n *= 2;
    }
    let head: f64 = (0..n).map(|nu| ((2 * nu + 1) as f64).powi(-s)).sum();
    let nf = n as f64;
    let mut tail = (2.0 * nf + 1.0).powf(1.0 - sf) / (2.0 * (sf - 1.0)) + deriv(0, nf) / 2.0;
    for k in 1..=p {
        tail -= BERNOULLI[k as usize - 1] / fact[2 * k as usize] * deriv(2 * k - 1, nf);
    }
    head + tail
}

/// Lower Riesz bound `2^{2m-1} K_{2m-1} / pi^{2m-1}` of the integer shifts of
/// `Q_m`; the upper bound is 1.
pub fn riesz_lower_bound(m: SplineOrder) -> f64 {
    let e = 2 * m.get() as i32 - 1;
    (2.0 / PI).powi(e) * krein_favard(e as u32, 1e-16)
}

/// Convenience conversion used by callers that hold exact knots.
pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(m: u32) -> SplineOrder {
        SplineOrder::new(m).unwrap()
    }

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(SplineOrder::new(0).is_err());
        assert!(SplineOrder::new(MAX_ORDER + 1).is_err());
    }

    #[test]
    fn known_values() {
        assert_eq!(eval_q(q(1), 0.5), 1.0);
        assert!((eval_q(q(3), 2.0) - 0.5).abs() < 1e-15);
        assert!((eval_q(q(4), 2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(eval_q_exact(q(2), &rat(1, 1)), rat(1, 1));
        assert_eq!(eval_q_exact(q(4), &rat(1, 1)), rat(1, 6));
        assert_eq!(eval_q_exact(q(4), &rat(1, 2)), rat(1, 48));
        assert_eq!(eval_q_exact(q(4), &rat(5, 2)), rat(23, 48));
    }

    #[test]
    fn support_endpoints_are_zero() {
        for m in 1..=9 {
            assert_eq!(eval_q(q(m), 0.0), if m == 1 { 1.0 } else { 0.0 });
            assert_eq!(eval_q(q(m), m as f64), 0.0);
            assert_eq!(eval_q(q(m), -1e-300), 0.0);
        }
        assert_eq!(eval_q(q(3), f64::NAN), 0.0);
    }

    #[test]
    fn exact_and_float_agree_at_midpoint_of_q9() {
        let t = rat(9, 2);
        let exact = eval_q_exact(q(9), &t).to_f64().unwrap();
        assert!((exact - eval_q(q(9), 4.5)).abs() < 1e-14);
    }

    #[test]
    fn derivative_values() {
        assert_eq!(eval_q_deriv(q(3), 1, 2.0).unwrap(), -1.0);
        assert_eq!(eval_q_deriv(q(4), 2, 2.0).unwrap(), -2.0);
        assert_eq!(eval_q_deriv(q(4), 1, 2.0).unwrap(), 0.0);
        assert_eq!(eval_q_deriv_exact(q(3), 1, &rat(2, 1)).unwrap(), rat(-1, 1));
        assert_eq!(eval_q_deriv_exact(q(4), 2, &rat(2, 1)).unwrap(), rat(-2, 1));
        assert_eq!(
            eval_q_deriv(q(3), 2, 1.0),
            Err(Error::DerivativeOrder { m: 3, k: 2 })
        );
        assert!(eval_q_deriv_exact(q(2), 1, &rat(1, 1)).is_err());
    }

    #[test]
    fn fourier_values() {
        assert!((fourier_q(q(3), 0.0) - Complex64::one()).norm() < 1e-15);
        assert!(fourier_q(q(3), 1.0).norm() < 1e-15);
        let d1 = fourier_q_deriv(q(3), 1, 0.0).unwrap();
        assert!((d1 - Complex64::new(0.0, -3.0 * PI)).norm() < 1e-12);
        let d2 = fourier_q_deriv(q(3), 2, 0.0).unwrap();
        assert!((d2 - Complex64::new(-10.0 * PI * PI, 0.0)).norm() < 1e-11);
        let d2 = fourier_q_deriv(q(4), 2, 0.0).unwrap();
        assert!((d2 - Complex64::new(-52.0 * PI * PI / 3.0, 0.0)).norm() < 1e-11);
        let d3 = fourier_q_deriv(q(4), 3, 0.0).unwrap();
        assert!((d3 - Complex64::new(0.0, 80.0 * PI.powi(3))).norm() < 1e-9);
        assert_eq!(
            fourier_q_deriv(q(4), 4, 0.0),
            Err(Error::UnsupportedFourierDerivative(4))
        );
    }

    /// Composite Gauss–Legendre quadrature of Q_m(t) e^{-2 pi i xi t} t^r (-2 pi i)^r.
    fn fourier_by_quadrature(m: SplineOrder, r: u32, xi: f64) -> Complex64 {
        let rule = crate::quadrature::GaussLegendre::new(30);
        let mut sum = Complex64::zero();
        for cell in 0..m.get() {
            sum += rule.integrate_complex(cell as f64, cell as f64 + 1.0, |t| {
                let phase = Complex64::new(0.0, -2.0 * PI * xi * t).exp();
                Complex64::new(0.0, -2.0 * PI * t).powu(r) * phase * eval_q(m, t)
            });
        }
        sum
    }

    #[test]
    fn fourier_matches_quadrature() {
        let v = fourier_q(q(4), 0.5);
        assert!((v - fourier_by_quadrature(q(4), 0, 0.5)).norm() < 1e-10);
        for &xi in &[-2.3, -0.7, 1e-5, 0.1, 0.16, 0.5, 1.9] {
            for m in [3, 4, 5] {
                for r in 0..=3 {
                    let a = fourier_q_deriv(q(m), r, xi).unwrap();
                    let b = fourier_by_quadrature(q(m), r, xi);
                    assert!((a - b).norm() < 1e-9, "m={m} r={r} xi={xi}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn strang_fix() {
        for m in [3u32, 4] {
            for r in 0..m.min(4) {
                for l in [-3i32, -2, -1, 1, 2, 3] {
                    let v = fourier_q_deriv(q(m), r, l as f64).unwrap();
                    assert!(v.norm() <= 1e-12, "m={m} r={r} l={l}: {v}");
                }
            }
        }
    }

    #[test]
    fn krein_favard_closed_forms() {
        assert!((krein_favard(1, 1e-14) - PI / 2.0).abs() < 1e-13);
        assert!((krein_favard(5, 1e-14) - PI.powi(5) / 240.0).abs() < 1e-13);
        assert!((krein_favard(0, 1e-14) - 1.0).abs() < 1e-13);
        // K_2 = pi^2 / 8, K_3 = pi^3 / 24
        assert!((krein_favard(2, 1e-14) - PI * PI / 8.0).abs() < 1e-13);
        assert!((krein_favard(3, 1e-14) - PI.powi(3) / 24.0).abs() < 1e-13);
    }

    #[test]
    fn riesz_bounds() {
        assert!((riesz_lower_bound(q(3)) - 2.0 / 15.0).abs() < 1e-14);
        assert!((riesz_lower_bound(q(1)) - 1.0).abs() < 1e-14);
        let b = riesz_lower_bound(q(4));
        assert!(b > 0.0 && b < 1.0);
    }

    proptest! {
        #[test]
        fn partition_of_unity(t in -10.0f64..10.0, m in 1u32..=9) {
            let sum: f64 = (-25..=25).map(|k| eval_q(q(m), t - k as f64)).sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn recurrence_matches_truncated_power(t in -1.0f64..10.0, m in 1u32..=9) {
            let a = eval_q(q(m), t);
            // every f64 is an exact rational, so the exact formula is a sharp oracle
            let exact = eval_q_exact(q(m), &Rational::from_float(t).unwrap()).to_f64().unwrap();
            prop_assert!((a - exact).abs() <= 1e-14, "{} vs {}", a, exact);
            // the float formula cancels badly for large m; only a loose check
            let b = eval_q_truncated_power(q(m), t);
            prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
        }

        #[test]
        fn exact_matches_float(n in -200i64..1200, d in 1i64..120, m in 1u32..=9) {
            let r = rat(n, d);
            let t = n as f64 / d as f64;
            let exact = eval_q_exact(q(m), &r).to_f64().unwrap();
            prop_assert!((exact - eval_q(q(m), t)).abs() <= 1e-14);
        }

        #[test]
        fn derivatives_match_finite_differences(t in -0.5f64..9.5, m in 3u32..=9, k in 1u32..=2) {
            prop_assume!(k + 2 <= m);
            // stay away from knots where the next derivative jumps
            prop_assume!((t - t.round()).abs() > 1e-2);
            let h = 1e-4;
            let f = |x: f64| eval_q_deriv(q(m), k - 1, x).unwrap();
            let fd = (f(t + h) - f(t - h)) / (2.0 * h);
            let exact = eval_q_deriv(q(m), k, t).unwrap();
            prop_assert!((fd - exact).abs() < 1e-6, "{} vs {}", fd, exact);
        }
    }
}
