//! Symbol matrices `Psi_kappa` and complete-interpolation verdicts.
//!
//! For `kappa = (m, a, rho)` the entry `(i, j)` of the symbol is the Laurent
//! polynomial `sum_k Q_m^(i)(a + rho k - j) z^k`. The sample set `a + rho Z`
//! with derivatives up to order `rho - 1` is a complete interpolation set
//! (CIS) for `V(Q_m)` exactly when `det Psi_kappa` has no zeros on `|z| = 1`.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::{binomial, Integer};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use std::fmt;

use crate::bspline::{eval_q_deriv_exact, eval_q_exact, Rational, SplineOrder};
use crate::error::{Error, Result};
use crate::laurent::{laurent_det, roots_unit_circle, CircleCertificate, LaurentPoly, Verdict};

/// Sampling configuration: spline order `m`, shift `a`, multiplicity `rho`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Kappa {
    m: SplineOrder,
    a: Rational,
    rho: u32,
}

impl Kappa {
    /// Validates `rho >= 1`, `m > rho` and `0 <= a < rho`.
    pub fn new(m: SplineOrder, a: Rational, rho: u32) -> Result<Self> {
        if rho == 0 {
            return Err(Error::InvalidKappa("rho must be at least 1".into()));
        }
        if m.get() <= rho {
            return Err(Error::InvalidKappa(format!(
                "need m > rho for continuous derivatives, got m={} rho={rho}",
                m.get()
            )));
        }
        let rho_r = Rational::from_integer(BigInt::from(rho));
        if a.is_negative() || a >= rho_r {
            return Err(Error::InvalidKappa(format!("shift a={a} must lie in [0, {rho})")));
        }
        Ok(Self { m, a, rho })
    }

    /// Shorthand for integer `m` and `a = a_num / a_den`.
    pub fn from_parts(m: u32, a_num: i64, a_den: i64, rho: u32) -> Result<Self> {
        if a_den == 0 {
            return Err(Error::InvalidKappa("zero denominator in shift".into()));
        }
        Self::new(SplineOrder::new(m)?, Rational::new(a_num.into(), a_den.into()), rho)
    }

    pub fn m(&self) -> SplineOrder {
        self.m
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn a_f64(&self) -> f64 {
        self.a.to_f64().unwrap_or(f64::NAN)
    }

    pub fn rho(&self) -> u32 {
        self.rho
    }
}

impl fmt::Display for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(Q_{},{},{})", self.m.get(), self.a, self.rho)
    }
}

/// Parses `"p/q"` or `"p"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("expected a rational like 1/2, got `{s}`"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// The `rho x rho` Laurent matrix `Psi_kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMatrix {
    pub kappa: Kappa,
    /// `entries[i][j]` is `Psi^{ij}`.
    pub entries: Vec<Vec<LaurentPoly>>,
}

impl SymbolMatrix {
    /// Numerical value of `Psi_kappa(t)`.
    pub fn eval(&self, t: f64) -> DMatrix<Complex64> {
        let n = self.entries.len();
        DMatrix::from_fn(n, n, |i, j| self.entries[i][j].eval_t(t))
    }
}

fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Assembles `Psi_kappa` with exact coefficients.
pub fn build_symbol(kappa: &Kappa) -> SymbolMatrix {
    let m = kappa.m;
    let rho = kappa.rho as i64;
    let rho_r = int(rho);
    let entries = (0..rho)
        .map(|i| {
            (0..rho)
                .map(|j| {
                    // Q_m^(i)(a + rho k - j) vanishes unless 0 < a + rho k - j < m
                    let lo = ((int(j) - &kappa.a) / &rho_r).ceil().to_integer();
                    let hi = ((int(j + m.get() as i64) - &kappa.a) / &rho_r).floor().to_integer();
                    let lo = lo.to_i64().expect("small index");
                    let hi = hi.to_i64().expect("small index");
                    let coeffs = (lo..=hi)
                        .map(|k| {
                            let t = &kappa.a + int(rho * k - j);
                            eval_q_deriv_exact(m, i as u32, &t).expect("i < rho < m keeps derivatives continuous")
                        })
                        .collect();
                    LaurentPoly::new(lo, coeffs)
                })
                .collect()
        })
        .collect();
    SymbolMatrix { kappa: kappa.clone(), entries }
}

/// Exact `det Psi_kappa`.
pub fn det_symbol(kappa: &Kappa) -> LaurentPoly {
    laurent_det(&build_symbol(kappa).entries)
}

fn factorial(n: u32) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// Strips the known prefactor and monomial from `det Psi_kappa` for
/// `rho = 2` and `a` in `{0, 1/2}`, returning the integer polynomial
///
/// * `a = 0`: `det = 2^{m-2} / ((m-1)! (m-2)!) z^2 P(z)`
/// * `a = 1/2`: `det = 6 / ((m-1)! (m-2)! 2^{2m-3}) z P(z)`
///
/// and reports an error when the quotient is not an integer polynomial.
pub fn table_polynomial(kappa: &Kappa) -> Result<LaurentPoly> {
    let m = kappa.m.get();
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    if kappa.rho != 2 || !(kappa.a.is_zero() || kappa.a == half) {
        return Err(Error::InvalidKappa(format!("table polynomials need rho = 2 and a in {{0, 1/2}}, got {kappa}")));
    }
    let denom = Rational::from_integer(factorial(m - 1) * factorial(m - 2));
    let (prefactor, shift) = if kappa.a.is_zero() {
        (Rational::from_integer(BigInt::one() << (m - 2)) / denom, 2)
    } else {
        (int(6) / (denom * Rational::from_integer(BigInt::one() << (2 * m - 3))), 1)
    };
    let quotient = det_symbol(kappa).scale(&(Rational::one() / prefactor)).shift(-shift);
    let fail = |detail: String| Error::TableRemainder { m, a: kappa.a.to_string(), detail };
    if quotient.low_degree() < 0 {
        return Err(fail(format!("negative powers remain: {quotient}")));
    }
    if let Some(c) = quotient.coeffs().iter().find(|c| !c.is_integer()) {
        return Err(fail(format!("non-integer coefficient {c}")));
    }
    Ok(quotient)
}

/// Outcome of the CIS test for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CisReport {
    pub kappa: Kappa,
    pub det: LaurentPoly,
    pub certificate: CircleCertificate,
    pub is_cis: bool,
}

impl CisReport {
    /// True when the certificate could not decide.
    pub fn inconclusive(&self) -> bool {
        self.certificate.verdict == Verdict::Inconclusive
    }
}

/// Decides whether `a + rho Z` is a CIS of order `rho - 1` for `V(Q_m)`.
pub fn check_cis(kappa: &Kappa, tol: f64) -> CisReport {
    let det = det_symbol(kappa);
    let certificate = roots_unit_circle(&det, tol);
    let is_cis = certificate.verdict == Verdict::Nonvanishing;
    CisReport { kappa: kappa.clone(), det, certificate, is_cis }
}

/// Conjectured CIS pattern: `m` even needs `a = frac((rho+1)/2)`, `m` odd
/// needs `a = frac(rho/2)`.
pub fn predicted_cis(m: u32, a: &Rational, rho: u32) -> bool {
    let frac = |num: u32| Rational::new(BigInt::from(num % 2), BigInt::from(2));
    if m.is_multiple_of(2) {
        *a == frac(rho + 1)
    } else {
        *a == frac(rho)
    }
}

/// One row of the conjecture scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub kappa: Kappa,
    pub verdict: Verdict,
    pub is_cis: bool,
    pub predicted: bool,
}

impl ScanRow {
    pub fn agrees(&self) -> bool {
        self.is_cis == self.predicted
    }
}

/// Checks the conjectured CIS pattern for `2 <= rho <= rho_max`,
/// `rho < m <= m_max`, `a` in `{0, 1/2}`. Disagreements are reported in the
/// rows, never raised.
pub fn scan_assumption1(m_max: u32, rho_max: u32, tol: f64) -> Result<Vec<ScanRow>> {
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let mut kappas = Vec::new();
    for rho in 2..=rho_max {
        for m in rho + 1..=m_max {
            for a in [Rational::zero(), half.clone()] {
                kappas.push(Kappa::new(SplineOrder::new(m)?, a, rho)?);
            }
        }
    }
    Ok(kappas
        .par_iter()
        .map(|kappa| {
            let report = check_cis(kappa, tol);
            ScanRow {
                kappa: kappa.clone(),
                verdict: report.certificate.verdict,
                is_cis: report.is_cis,
                predicted: predicted_cis(kappa.m.get(), &kappa.a, kappa.rho),
            }
        })
        .collect())
}

/// `A[i][j] = sum_r (-1)^r C(i, r) Q_{m-i}(m - 1 - j - r)` for `0 <= i, j <= m-2`.
pub fn pascal_matrix(m: SplineOrder) -> Vec<Vec<Rational>> {
    let mm = m.get() as i64;
    (0..mm - 1)
        .map(|i| {
            let low = SplineOrder::new((mm - i) as u32).expect("order between 2 and m");
            (0..mm - 1)
                .map(|j| {
                    (0..=i).fold(Rational::zero(), |acc, r| {
                        let c = int(binomial(i, r));
                        let v = eval_q_exact(low, &int(mm - 1 - j - r));
                        if r % 2 == 0 {
                            acc + c * v
                        } else {
                            acc - c * v
                        }
                    })
                })
                .collect()
        })
        .collect()
}

/// Exact check that the matrix of [`pascal_matrix`] has determinant 1.
pub fn pascal_det_check(m: SplineOrder) -> bool {
    if m.get() < 2 {
        return false;
    }
    let a: Vec<Vec<LaurentPoly>> = pascal_matrix(m)
        .into_iter()
        .map(|row| row.into_iter().map(LaurentPoly::constant).collect())
        .collect();
    laurent_det(&a) == LaurentPoly::one()
}

/// `sum_{r=0}^n (-1)^r C(n, r) (t - r)^l`; equals 0 for `l < n` and `n!` for `l = n`.
pub fn alternating_power_sum(n: u32, l: u32, t: &Rational) -> Rational {
    (0..=n).fold(Rational::zero(), |acc, r| {
        let c = int(binomial(n as i64, r as i64));
        let term = c * num_traits::pow(t - int(r as i64), l as usize);
        if r % 2 == 0 {
            acc + term
        } else {
            acc - term
        }
    })
}

fn binom_big(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || k > n {
        return BigInt::zero();
    }
    (0..k).fold(BigInt::one(), |acc, i| acc * (n - i) / (i + 1))
}

/// `sum_{r=0}^n (-1)^r C(n, r) C(k - r, l)`; for `k >= n` equals 0 when
/// `l < n` and 1 when `l = n`.
pub fn alternating_binomial_sum(n: u32, l: u32, k: u32) -> BigInt {
    (0..=n as i64).fold(BigInt::zero(), |acc, r| {
        let term = binom_big(n as i64, r) * binom_big(k as i64 - r, l as i64);
        if r.is_even() {
            acc + term
        } else {
            acc - term
        }
    })
}

/// `sum_{j=0}^{m-2} C(j, l) A[i][j]` with `A` from [`pascal_matrix`]; equals
/// 0 for `l < i` and 1 for `l = i`.
pub fn pascal_column_sum(m: SplineOrder, i: usize, l: usize) -> Rational {
    let a = pascal_matrix(m);
    a[i].iter()
        .enumerate()
        .fold(Rational::zero(), |acc, (j, v)| acc + Rational::from_integer(binom_big(j as i64, l as i64)) * v)
}

/// Verifies the three combinatorial identities behind `det A = 1` over
/// `n, l <= n_max`, `n <= k <= k_max` (at a few rational `t`) and
/// `2 <= m <= m_max`.
pub fn identity_lemma_check(n_max: u32, k_max: u32, m_max: u32) -> bool {
    let ts = [int(0), Rational::new(7.into(), 2.into()), Rational::new((-5).into(), 3.into()), int(11)];
    for n in 0..=n_max {
        let fact = Rational::from_integer(factorial(n));
        for l in 0..=n {
            let want = if l < n { Rational::zero() } else { fact.clone() };
            if ts.iter().any(|t| alternating_power_sum(n, l, t) != want) {
                return false;
            }
            let want = if l < n { BigInt::zero() } else { BigInt::one() };
            if (n..=k_max).any(|k| alternating_binomial_sum(n, l, k) != want) {
                return false;
            }
        }
    }
    for m in 2..=m_max {
        let order = match SplineOrder::new(m) {
            Ok(o) => o,
            Err(_) => return false,
        };
        let a = pascal_matrix(order);
        let size = a.len();
        for i in 0..size {
            for l in 0..=i {
                let s = a[i].iter().enumerate().fold(Rational::zero(), |acc, (j, v)| {
                    acc + Rational::from_integer(binom_big(j as i64, l as i64)) * v
                });
                let want = if l < i { Rational::zero() } else { Rational::one() };
                if s != want {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::eval_q_deriv;
    use crate::laurent::{dominant_coeff_test, DEFAULT_CIRCLE_TOL};
    use proptest::prelude::*;

    fn kappa(m: u32, num: i64, den: i64, rho: u32) -> Kappa {
        Kappa::from_parts(m, num, den, rho).unwrap()
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn lp(low: i64, c: &[i64]) -> LaurentPoly {
        LaurentPoly::from_ints(low, c)
    }

    #[test]
    fn kappa_validation() {
        assert!(Kappa::from_parts(3, 0, 1, 3).is_err());
        assert!(Kappa::from_parts(3, 2, 1, 2).is_err());
        assert!(Kappa::from_parts(3, -1, 2, 2).is_err());
        assert!(Kappa::from_parts(3, 0, 1, 0).is_err());
        assert_eq!(kappa(4, 1, 2, 2).to_string(), "(Q_4,1/2,2)");
    }

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_rational("1/2").unwrap(), r(1, 2));
        assert_eq!(parse_rational(" 3 ").unwrap(), r(3, 1));
        assert_eq!(parse_rational("2/4").unwrap(), r(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn q3_symbol() {
        let s = build_symbol(&kappa(3, 0, 1, 2));
        let z = |c: Rational| LaurentPoly::monomial(c, 1);
        assert_eq!(s.entries[0][0], z(r(1, 2)));
        assert_eq!(s.entries[0][1], z(r(1, 2)));
        assert_eq!(s.entries[1][0], z(r(-1, 1)));
        assert_eq!(s.entries[1][1], z(r(1, 1)));
        assert_eq!(det_symbol(&kappa(3, 0, 1, 2)), lp(2, &[1]));
    }

    #[test]
    fn q4_rho3_symbol() {
        let s = build_symbol(&kappa(4, 0, 1, 3));
        let want = [[r(1, 6), r(2, 3), r(1, 6)], [r(-1, 2), r(0, 1), r(1, 2)], [r(1, 1), r(-2, 1), r(1, 1)]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(s.entries[i][j], LaurentPoly::monomial(want[i][j].clone(), 1), "({i},{j})");
            }
        }
    }

    #[test]
    fn q4_half_symbol() {
        let k = kappa(4, 1, 2, 2);
        let s = build_symbol(&k);
        let poly = |low: i64, c: &[Rational]| LaurentPoly::new(low, c.to_vec());
        assert_eq!(s.entries[0][0], poly(0, &[r(1, 48), r(23, 48)]));
        assert_eq!(s.entries[0][1], poly(1, &[r(23, 48), r(1, 48)]));
        assert_eq!(s.entries[1][0], poly(0, &[r(1, 8), r(-5, 8)]));
        assert_eq!(s.entries[1][1], poly(1, &[r(5, 8), r(-1, 8)]));
        let det = poly(1, &[r(-3, 64), r(38, 64), r(-3, 64)]);
        assert_eq!(det_symbol(&k), det);
    }

    #[test]
    fn table_examples() {
        assert_eq!(table_polynomial(&kappa(6, 0, 1, 2)).unwrap(), lp(0, &[1, -39, 39, -1]));
        assert_eq!(table_polynomial(&kappa(3, 0, 1, 2)).unwrap(), LaurentPoly::one());
        // exact quotient is the negated published row
        assert_eq!(table_polynomial(&kappa(4, 1, 2, 2)).unwrap(), lp(0, &[-3, 38, -3]));
        assert_eq!(table_polynomial(&kappa(5, 0, 1, 2)).unwrap(), lp(0, &[1, -8, 1]));
        assert!(table_polynomial(&kappa(5, 0, 1, 3)).is_err());
    }

    #[test]
    fn det_for_m5() {
        let det = det_symbol(&kappa(5, 0, 1, 2));
        let want = lp(2, &[1, -8, 1]).scale(&r(8, 24 * 6));
        assert_eq!(det, want);
    }

    #[test]
    fn cis_examples() {
        for m in 2..=9 {
            let rep = check_cis(&kappa(m, 0, 1, m - 1), DEFAULT_CIRCLE_TOL);
            assert!(rep.is_cis, "m={m}");
            assert_eq!(rep.det, lp(m as i64 - 1, &[1]));
        }
        assert!(!check_cis(&kappa(4, 0, 1, 2), DEFAULT_CIRCLE_TOL).is_cis);
        assert!(!check_cis(&kappa(3, 1, 2, 2), DEFAULT_CIRCLE_TOL).is_cis);
        assert!(!check_cis(&kappa(5, 1, 2, 2), DEFAULT_CIRCLE_TOL).is_cis);
    }

    #[test]
    fn scan_small() {
        let rows = scan_assumption1(5, 2, DEFAULT_CIRCLE_TOL).unwrap();
        assert_eq!(rows.len(), 6);
        let find = |m: u32, a: Rational| rows.iter().find(|row| row.kappa.m().get() == m && row.kappa.a() == &a).unwrap();
        let row = find(4, r(1, 2));
        assert!(row.is_cis && row.predicted);
        let row = find(3, r(0, 1));
        assert!(row.is_cis && row.predicted);
        let row = find(5, r(0, 1));
        assert!(row.is_cis && row.predicted);
        assert!(rows.iter().all(ScanRow::agrees));
    }

    #[test]
    fn pascal_examples() {
        for m in [2, 3, 10] {
            assert!(pascal_det_check(SplineOrder::new(m).unwrap()), "m={m}");
        }
        let a = pascal_matrix(SplineOrder::new(2).unwrap());
        assert_eq!(a, vec![vec![r(1, 1)]]);
    }

    #[test]
    fn identity_examples() {
        assert_eq!(alternating_power_sum(3, 3, &r(7, 2)), r(6, 1));
        assert_eq!(alternating_binomial_sum(2, 1, 5), BigInt::zero());
        assert_eq!(pascal_column_sum(SplineOrder::new(5).unwrap(), 2, 2), r(1, 1));
        assert!(identity_lemma_check(6, 8, 6));
    }

    #[test]
    fn dominant_implies_nonvanishing() {
        for m in 3..=9 {
            for (num, den) in [(0, 1), (1, 2)] {
                let p = table_polynomial(&kappa(m, num, den, 2)).unwrap();
                if dominant_coeff_test(&p) {
                    let c = roots_unit_circle(&p, DEFAULT_CIRCLE_TOL);
                    assert_eq!(c.verdict, Verdict::Nonvanishing, "m={m} a={num}/{den}");
                }
            }
        }
    }

    #[test]
    fn palindromic_structure() {
        for m in 3..=9 {
            for (num, den) in [(0, 1), (1, 2)] {
                let p = table_polynomial(&kappa(m, num, den, 2)).unwrap();
                let c = p.coeffs();
                let d = c.len();
                let sym = (0..d).all(|i| c[i] == c[d - 1 - i]);
                let anti = (0..d).all(|i| c[i] == -c[d - 1 - i].clone());
                assert!(sym || anti, "m={m} a={num}/{den}: {p}");
            }
        }
    }

    proptest! {
        #[test]
        fn symbol_matches_direct_sum(t in 0.0f64..1.0, which in 0usize..3) {
            let k = [kappa(3, 0, 1, 2), kappa(4, 0, 1, 3), kappa(4, 1, 2, 2)][which].clone();
            let s = build_symbol(&k);
            let value = s.eval(t);
            let rho = k.rho() as i64;
            for i in 0..rho as usize {
                for j in 0..rho as usize {
                    let mut direct = Complex64::zero();
                    for kk in -10i64..=10 {
                        let x = k.a_f64() + (rho * kk) as f64 - j as f64;
                        let q = eval_q_deriv(k.m(), i as u32, x).unwrap();
                        direct += Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * kk as f64 * t) * q;
                    }
                    prop_assert!((direct - value[(i, j)]).norm() <= 1e-13);
                }
            }
        }
    }
}
