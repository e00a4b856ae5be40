//! Exact Laurent polynomials in `z = e^{2 pi i t}` over big rationals.
//!
//! Besides ring arithmetic this module computes determinants of small
//! Laurent matrices and decides whether a Laurent polynomial vanishes on the
//! unit circle.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::bspline::Rational;

/// Default tolerance on `| |root| - 1 |` used by [`roots_unit_circle`].
pub const DEFAULT_CIRCLE_TOL: f64 = 1e-9;

/// Number of uniform points used for the grid minimum of `|p|` on the circle.
pub const CIRCLE_GRID: usize = 4096;

/// `sum_k coeffs[k] z^(low + k)`, stored densely.
///
/// The first and last stored coefficients are nonzero; the zero polynomial
/// has no coefficients and `low = 0`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LaurentPoly {
    low: i64,
    coeffs: Vec<Rational>,
}

fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self { low: 0, coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial(c, 0)
    }

    /// `c z^k`.
    pub fn monomial(c: Rational, k: i64) -> Self {
        Self::new(k, vec![c])
    }

    /// Builds `sum_k coeffs[k] z^(low + k)` and normalizes it.
    pub fn new(low: i64, coeffs: Vec<Rational>) -> Self {
        let mut p = Self { low, coeffs };
        p.normalize();
        p
    }

    /// Integer-coefficient convenience constructor.
    pub fn from_ints(low: i64, coeffs: &[i64]) -> Self {
        Self::new(low, coeffs.iter().map(|&c| rat(c)).collect())
    }

    fn normalize(&mut self) {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.low += lead as i64;
        }
        if self.coeffs.is_empty() {
            self.low = 0;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Smallest exponent with a nonzero coefficient (0 for the zero polynomial).
    pub fn low_degree(&self) -> i64 {
        self.low
    }

    /// Largest exponent with a nonzero coefficient (`low - 1` for zero).
    pub fn high_degree(&self) -> i64 {
        self.low + self.coeffs.len() as i64 - 1
    }

    /// Coefficients from `low_degree` upward.
    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Coefficient of `z^k`.
    pub fn coeff(&self, k: i64) -> Rational {
        let idx = k - self.low;
        if idx < 0 || idx >= self.coeffs.len() as i64 {
            Rational::zero()
        } else {
            self.coeffs[idx as usize].clone()
        }
    }

    /// Multiplies every coefficient by `c`.
    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(self.low, self.coeffs.iter().map(|x| x * c).collect())
    }

    /// Multiplies by `z^k`.
    pub fn shift(&self, k: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Self { low: self.low + k, coeffs: self.coeffs.clone() }
    }

    /// Is this a single term `c z^k`?
    pub fn is_monomial(&self) -> bool {
        self.coeffs.len() == 1
    }

    /// Evaluates at a complex point (Horner in `z`, then the monomial factor).
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c.to_f64().unwrap_or(f64::NAN);
        }
        acc * z.powi(self.low as i32)
    }

    /// Evaluates at `z = e^{2 pi i t}`.
    pub fn eval_t(&self, t: f64) -> Complex64 {
        self.eval(Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t))
    }

    /// Exact division, `None` unless `divisor` divides `self` in the Laurent ring.
    pub fn div_exact(&self, divisor: &LaurentPoly) -> Option<LaurentPoly> {
        if divisor.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Self::zero());
        }
        let (q, r) = poly_divrem(&self.coeffs, &divisor.coeffs);
        if r.iter().any(|c| !c.is_zero()) {
            return None;
        }
        Some(Self::new(self.low - divisor.low, q))
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LaurentPoly({self})")
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = self.low + k as i64;
            let neg = c.is_negative();
            let abs = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            match e {
                0 => write!(f, "{abs}")?,
                _ => {
                    if !abs.is_one() {
                        write!(f, "{abs}*")?;
                    }
                    if e == 1 {
                        write!(f, "z")?;
                    } else {
                        write!(f, "z^{e}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let low = self.low.min(rhs.low);
        let high = self.high_degree().max(rhs.high_degree());
        let coeffs = (low..=high).map(|k| self.coeff(k) + rhs.coeff(k)).collect();
        LaurentPoly::new(low, coeffs)
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        LaurentPoly { low: self.low, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        self + &(-rhs)
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() || rhs.is_zero() {
            return LaurentPoly::zero();
        }
        let mut coeffs = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        LaurentPoly::new(self.low + rhs.low, coeffs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for LaurentPoly {
            type Output = LaurentPoly;
            fn $m(self, rhs: LaurentPoly) -> LaurentPoly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        -&self
    }
}

/// Ordinary polynomial long division over the rationals, coefficients
/// ascending. Returns `(quotient, remainder)`.
fn poly_divrem(num: &[Rational], den: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let den = trim(den.to_vec());
    let mut rem = trim(num.to_vec());
    let dd = den.len() - 1;
    if rem.len() < den.len() {
        return (Vec::new(), rem);
    }
    let lead = den[dd].clone();
    let mut quot = vec![Rational::zero(); rem.len() - dd];
    for k in (0..quot.len()).rev() {
        let c = &rem[k + dd] / &lead;
        if !c.is_zero() {
            for (j, d) in den.iter().enumerate() {
                rem[k + j] -= &c * d;
            }
        }
        quot[k] = c;
    }
    rem.truncate(dd);
    (quot, trim(rem))
}

fn trim(mut p: Vec<Rational>) -> Vec<Rational> {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

fn poly_eval_exact(p: &[Rational], x: &Rational) -> Rational {
    p.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
}

fn poly_gcd(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut a = trim(a.to_vec());
    let mut b = trim(b.to_vec());
    while !b.is_empty() {
        let (_, r) = poly_divrem(&a, &b);
        a = b;
        b = make_monic(r);
    }
    make_monic(a)
}

fn make_monic(p: Vec<Rational>) -> Vec<Rational> {
    match p.last() {
        None => p,
        Some(lead) => {
            let lead = lead.clone();
            p.into_iter().map(|c| c / &lead).collect()
        }
    }
}

/// Number of distinct roots of `p` on the unit circle, computed exactly.
///
/// Circle roots of a real polynomial are common roots with its reciprocal, so
/// they are the circle roots of `g = gcd(p, p*)`. After removing `z = +-1`,
/// `g` is palindromic of even degree `2n` and `z^{-n} g(z)` is a polynomial in
/// `x = cos(theta)`; its roots in `(-1, 1)` are counted with a Sturm sequence.
pub fn exact_circle_root_count(p: &LaurentPoly) -> usize {
    let coeffs = p.coeffs().to_vec();
    if coeffs.len() <= 1 {
        return 0;
    }
    let reversed: Vec<Rational> = coeffs.iter().rev().cloned().collect();
    let mut g = poly_gcd(&coeffs, &reversed);
    let mut count = 0;
    for s in [1i64, -1] {
        let root = rat(s);
        if g.len() > 1 && poly_eval_exact(&g, &root).is_zero() {
            count += 1;
            while g.len() > 1 && poly_eval_exact(&g, &root).is_zero() {
                g = poly_divrem(&g, &[rat(-s), rat(1)]).0;
            }
        }
    }
    if g.len() <= 1 {
        return count;
    }
    let deg = g.len() - 1;
    debug_assert!(deg.is_multiple_of(2), "self-reciprocal factor without +-1 roots has even degree");
    let n = deg / 2;
    // h(x) = c_n + sum_k c_{n+k} (z^k + z^{-k}) with z^k + z^{-k} = 2 T_k(x)
    let mut h = vec![g[n].clone()];
    let mut t_prev = vec![rat(1)];
    let mut t_cur = vec![rat(0), rat(1)];
    for k in 1..=n {
        let scale = &g[n + k] * rat(2);
        if h.len() < t_cur.len() {
            h.resize(t_cur.len(), Rational::zero());
        }
        for (i, c) in t_cur.iter().enumerate() {
            h[i] += c * &scale;
        }
        let mut t_next = vec![Rational::zero(); t_cur.len() + 1];
        for (i, c) in t_cur.iter().enumerate() {
            t_next[i + 1] += c * rat(2);
        }
        for (i, c) in t_prev.iter().enumerate() {
            t_next[i] -= c;
        }
        t_prev = t_cur;
        t_cur = t_next;
    }
    // each x in (-1, 1) accounts for the conjugate pair e^{+-i theta}
    count + 2 * sturm_count(&trim(h), &rat(-1), &rat(1))
}

/// Distinct real roots of `p` in `(lo, hi)`, assuming `p(lo), p(hi) != 0`.
fn sturm_count(p: &[Rational], lo: &Rational, hi: &Rational) -> usize {
    if p.len() <= 1 {
        return 0;
    }
    let deriv: Vec<Rational> = p.iter().enumerate().skip(1).map(|(i, c)| c * rat(i as i64)).collect();
    let mut seq = vec![p.to_vec(), trim(deriv)];
    loop {
        let n = seq.len();
        if seq[n - 1].is_empty() {
            seq.pop();
            break;
        }
        let (_, r) = poly_divrem(&seq[n - 2], &seq[n - 1]);
        if r.is_empty() {
            break;
        }
        // -r scaled by a positive constant keeps the Sturm sign pattern
        let scale = r.last().map(|c| c.abs()).unwrap_or_else(Rational::one);
        seq.push(r.into_iter().map(|c| -c / &scale).collect());
    }
    let changes = |x: &Rational| {
        let signs: Vec<bool> = seq
            .iter()
            .map(|q| poly_eval_exact(q, x))
            .filter(|v| !v.is_zero())
            .map(|v| v.is_positive())
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    };
    changes(lo).saturating_sub(changes(hi))
}

/// Determinant of a square Laurent matrix: cofactor expansion up to 4x4,
/// fraction-free (Bareiss) elimination beyond.
pub fn laurent_det(matrix: &[Vec<LaurentPoly>]) -> LaurentPoly {
    let n = matrix.len();
    assert!(matrix.iter().all(|row| row.len() == n), "matrix must be square");
    if n == 0 {
        return LaurentPoly::one();
    }
    if n <= 4 {
        cofactor_det(matrix)
    } else {
        bareiss_det(matrix)
    }
}

fn cofactor_det(m: &[Vec<LaurentPoly>]) -> LaurentPoly {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    if n == 2 {
        return &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0]);
    }
    let mut acc = LaurentPoly::zero();
    for col in 0..n {
        if m[0][col].is_zero() {
            continue;
        }
        let minor: Vec<Vec<LaurentPoly>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, v)| v.clone()).collect())
            .collect();
        let term = &m[0][col] * &cofactor_det(&minor);
        acc = if col % 2 == 0 { &acc + &term } else { &acc - &term };
    }
    acc
}

fn bareiss_det(matrix: &[Vec<LaurentPoly>]) -> LaurentPoly {
    let n = matrix.len();
    let mut a = matrix.to_vec();
    let mut sign = false;
    let mut prev = LaurentPoly::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = !sign;
                }
                None => return LaurentPoly::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &(&a[i][j] * &a[k][k]) - &(&a[i][k] * &a[k][j]);
                a[i][j] = num.div_exact(&prev).expect("Bareiss division is exact");
            }
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if sign {
        -det
    } else {
        det
    }
}

/// Outcome of a unit-circle test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Nonvanishing,
    Vanishing,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Nonvanishing => "nonvanishing",
            Verdict::Vanishing => "vanishing",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Evidence about the zeros of a Laurent polynomial on `|z| = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleCertificate {
    /// Minimum of `|p(e^{2 pi i t})|` over the uniform grid.
    pub min_modulus: f64,
    /// Grid point in `[0, 1)` attaining `min_modulus`.
    pub argmin_t: f64,
    /// Smallest `| |root| - 1 |` over all roots (infinite when there are none).
    pub root_margin: f64,
    /// Exact count of distinct roots on the circle.
    pub circle_roots: usize,
    pub verdict: Verdict,
}

/// Locates the roots of `p` relative to the unit circle.
///
/// The monomial factor is stripped, the remaining roots come from the
/// eigenvalues of the companion matrix, and the minimum of `|p|` is sampled on
/// [`CIRCLE_GRID`] points. The verdict is `vanishing` when the exact circle
/// root count is positive, `nonvanishing` when every float root is more than
/// `tol` from the circle, and `inconclusive` when some root sits within `tol`
/// of the circle without lying on it.
pub fn roots_unit_circle(p: &LaurentPoly, tol: f64) -> CircleCertificate {
    let mut min_modulus = f64::INFINITY;
    let mut argmin_t = 0.0;
    for k in 0..CIRCLE_GRID {
        let t = k as f64 / CIRCLE_GRID as f64;
        let v = p.eval_t(t).norm();
        if v < min_modulus {
            min_modulus = v;
            argmin_t = t;
        }
    }
    let root_margin = float_roots(p)
        .iter()
        .map(|r| (r.norm() - 1.0).abs())
        .fold(f64::INFINITY, f64::min);
    let circle_roots = if p.is_zero() { usize::MAX } else { exact_circle_root_count(p) };
    let verdict = if circle_roots > 0 {
        Verdict::Vanishing
    } else if root_margin > tol {
        Verdict::Nonvanishing
    } else {
        Verdict::Inconclusive
    };
    CircleCertificate { min_modulus, argmin_t, root_margin, circle_roots, verdict }
}

/// Roots of the ordinary polynomial left after stripping `z^low`.
pub fn float_roots(p: &LaurentPoly) -> Vec<Complex64> {
    let c = p.coeffs();
    if c.len() <= 1 {
        return Vec::new();
    }
    let scale = c.iter().map(|x| x.abs().to_f64().unwrap_or(0.0)).fold(0.0, f64::max);
    let cf: Vec<f64> = c.iter().map(|x| x.to_f64().unwrap_or(f64::NAN) / scale).collect();
    let d = cf.len() - 1;
    let lead = cf[d];
    let mut comp = DMatrix::<f64>::zeros(d, d);
    for i in 1..d {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..d {
        comp[(i, d - 1)] = -cf[i] / lead;
    }
    comp.complex_eigenvalues().iter().copied().collect()
}

/// Sufficient test for having no zeros on the unit circle: for
/// `a_0 + ... + a_{2n} z^{2n}` (after stripping the monomial factor), checks
/// `sum_{i != n} |a_i| < |a_n|`. Returns false for an even number of
/// coefficients.
pub fn dominant_coeff_test(p: &LaurentPoly) -> bool {
    let c = p.coeffs();
    if c.len().is_multiple_of(2) {
        return false;
    }
    let n = c.len() / 2;
    let others = c
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != n)
        .fold(Rational::zero(), |acc, (_, a)| acc + a.abs());
    others < c[n].abs()
}
