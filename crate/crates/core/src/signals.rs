//! Test signals with analytic derivatives, and random elements of `V(Q_m)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::bspline::{eval_q, eval_q_deriv, SplineOrder};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// `f(t) = sum_k c_k Q_m(t - k)` for `k = first, ..., first + coeffs.len() - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineElement {
    pub m: SplineOrder,
    pub first: i64,
    pub coeffs: Vec<f64>,
}

impl SplineElement {
    pub fn new(m: SplineOrder, first: i64, coeffs: Vec<f64>) -> Self {
        Self { m, first, coeffs }
    }

    /// Closed support `[first, first + len - 1 + m]`.
    pub fn support(&self) -> (f64, f64) {
        let last = self.first + self.coeffs.len() as i64 - 1;
        (self.first as f64, (last + self.m.get() as i64) as f64)
    }

    /// `i`-th derivative at `t`; needs `i <= m - 2` when `i > 0`.
    pub fn eval(&self, i: u32, t: f64) -> Result<f64> {
        let m = self.m.get() as i64;
        let hi = t.floor() as i64;
        let mut sum = 0.0;
        // Q_m(t - k) is nonzero only for t - m < k <= t
        for k in (hi - m)..=hi {
            let idx = k - self.first;
            if idx < 0 || idx >= self.coeffs.len() as i64 {
                continue;
            }
            let c = self.coeffs[idx as usize];
            if c != 0.0 {
                sum += c * eval_q_deriv(self.m, i, t - k as f64)?;
            }
        }
        Ok(sum)
    }

    /// Value at `t`.
    pub fn value(&self, t: f64) -> f64 {
        let m = self.m.get() as i64;
        let hi = t.floor() as i64;
        ((hi - m)..=hi)
            .filter_map(|k| {
                let idx = k - self.first;
                (idx >= 0 && idx < self.coeffs.len() as i64).then(|| self.coeffs[idx as usize] * eval_q(self.m, t - k as f64))
            })
            .sum()
    }

    /// `||f||_2`, integrating each knot interval with a Gauss–Legendre rule
    /// that is exact for the squared piecewise polynomial.
    pub fn l2_norm(&self) -> f64 {
        let rule = GaussLegendre::new(self.m.get() as usize);
        let (lo, hi) = self.support();
        let mut sum = 0.0;
        let mut x = lo;
        while x < hi {
            sum += rule.integrate(x, x + 1.0, |t| self.value(t).powi(2));
            x += 1.0;
        }
        sum.sqrt()
    }

    /// `sum c_k^2`.
    pub fn coeff_energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }
}

/// A random element with `support_len` coefficients drawn uniformly from
/// `[-1, 1]`, deterministic in `seed`.
pub fn random_spline(m: SplineOrder, support_len: usize, seed: u64) -> SplineElement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..support_len.max(1)).map(|_| rng.random_range(-1.0..=1.0)).collect();
    SplineElement::new(m, 0, coeffs)
}

/// Which one-sided limit to take at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// The functions behind a [`SignalSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum SignalKind {
    /// `e^{-t^2/4} sin(2 pi t)`.
    GaussSine,
    /// `sin^2(pi t)` on `|t| <= 3`, zero elsewhere.
    SineSquaredWindow,
    /// `-t^3/2 + 2` on `(-1.5, 3)`, zero elsewhere.
    CubicJump,
    /// `sum_k c_k t^k`.
    Polynomial(Vec<f64>),
    /// Tabulated values and derivatives, sampled at the nearest node.
    Tabulated { t: Vec<f64>, columns: Vec<Vec<f64>> },
    /// An element of `V(Q_m)`.
    Spline(SplineElement),
}

/// A signal with derivatives, its exceptional points and expected smoothness.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub id: String,
    pub kind: SignalKind,
    /// Interval outside which the signal is zero or negligible.
    pub support_hint: (f64, f64),
}

const F2_EDGE: f64 = 3.0;
const F3_LEFT: f64 = -1.5;
const F3_RIGHT: f64 = 3.0;

/// Physicists' Hermite polynomial `H_n(x)`.
fn hermite(n: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

fn binom(n: usize, k: usize) -> f64 {
    num_integer::binomial(n as u64, k as u64) as f64
}

fn gauss_sine(i: usize, t: f64) -> f64 {
    let g = (-t * t / 4.0).exp();
    (0..=i)
        .map(|j| {
            let gj = (-0.5f64).powi(j as i32) * hermite(j, t / 2.0) * g;
            let k = i - j;
            let sk = (2.0 * PI).powi(k as i32) * (2.0 * PI * t + k as f64 * PI / 2.0).sin();
            binom(i, j) * gj * sk
        })
        .sum()
}

fn sine_squared_inner(i: usize, t: f64) -> f64 {
    if i == 0 {
        (PI * t).sin().powi(2)
    } else {
        -0.5 * (2.0 * PI).powi(i as i32) * (2.0 * PI * t + i as f64 * PI / 2.0).cos()
    }
}

fn cubic_inner(i: usize, t: f64) -> f64 {
    match i {
        0 => -0.5 * t.powi(3) + 2.0,
        1 => -1.5 * t * t,
        2 => -3.0 * t,
        3 => -3.0,
        _ => 0.0,
    }
}

fn poly_deriv(c: &[f64], i: usize, t: f64) -> f64 {
    let mut acc = 0.0;
    for (k, &ck) in c.iter().enumerate().skip(i).rev() {
        // d^i/dt^i t^k = k!/(k-i)! t^(k-i)
        let falling: f64 = (k - i + 1..=k).map(|x| x as f64).product();
        acc = acc * t + ck * falling;
    }
    acc
}

impl SignalSpec {
    /// `e^{-t^2/4} sin(2 pi t)`: smooth and rapidly decaying.
    pub fn f1() -> Self {
        Self { id: "f1".into(), kind: SignalKind::GaussSine, support_hint: (-10.0, 10.0) }
    }

    /// `sin^2(pi t)` on `|t| <= 3`: `C^1`, second derivative jumps at `+-3`.
    pub fn f2() -> Self {
        Self { id: "f2".into(), kind: SignalKind::SineSquaredWindow, support_hint: (-F2_EDGE, F2_EDGE) }
    }

    /// `-t^3/2 + 2` on `(-1.5, 3)`: jumps at both ends.
    pub fn f3() -> Self {
        Self { id: "f3".into(), kind: SignalKind::CubicJump, support_hint: (F3_LEFT, F3_RIGHT) }
    }

    /// The constant function 1.
    pub fn one() -> Self {
        Self::polynomial(vec![1.0])
    }

    /// `sum_k coeffs[k] t^k`.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let id = if coeffs == [1.0] {
            "one".to_string()
        } else {
            let list: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
            format!("poly:{}", list.join(";"))
        };
        Self { id, kind: SignalKind::Polynomial(coeffs), support_hint: (f64::NEG_INFINITY, f64::INFINITY) }
    }

    /// Wraps a spline element.
    pub fn spline(id: impl Into<String>, element: SplineElement) -> Self {
        let support_hint = element.support();
        Self { id: id.into(), kind: SignalKind::Spline(element), support_hint }
    }

    /// Tabulated signal: `columns[i][n]` is the `i`-th derivative at `t[n]`.
    /// Evaluation uses the nearest node; nothing is interpolated.
    pub fn tabulated(id: impl Into<String>, t: Vec<f64>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if t.is_empty() || columns.is_empty() || columns.iter().any(|c| c.len() != t.len()) {
            return Err(Error::Parse("tabulated signal needs equal-length, non-empty columns".into()));
        }
        if t.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parse("tabulated abscissae must be strictly increasing".into()));
        }
        let support_hint = (t[0], t[t.len() - 1]);
        Ok(Self { id: id.into(), kind: SignalKind::Tabulated { t, columns }, support_hint })
    }

    /// The catalog used throughout the experiments.
    pub fn catalog() -> Vec<SignalSpec> {
        vec![
            Self::f1(),
            Self::f2(),
            Self::f3(),
            Self::one(),
            Self::polynomial(vec![0.0, 1.0]),
            Self::polynomial(vec![0.0, 0.0, 1.0]),
            Self::polynomial(vec![1.0, -2.0, 0.5, 0.25]),
        ]
    }

    /// Looks up a catalog signal by id; `poly:c0;c1;...` builds a polynomial.
    pub fn by_id(id: &str) -> Result<Self> {
        if let Some(list) = id.strip_prefix("poly:") {
            let coeffs = list
                .split(';')
                .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad polynomial coefficient `{s}`"))))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Self::polynomial(coeffs));
        }
        Self::catalog()
            .into_iter()
            .find(|s| s.id == id)
            .ok_or_else(|| Error::Parse(format!("unknown signal `{id}` (expected f1, f2, f3, one or poly:c0;c1;...)")))
    }

    /// Highest derivative order available.
    pub fn max_order(&self) -> usize {
        match &self.kind {
            SignalKind::Tabulated { columns, .. } => columns.len() - 1,
            SignalKind::Spline(e) => e.m.get().saturating_sub(2) as usize,
            _ => usize::MAX,
        }
    }

    /// Points where some derivative is discontinuous or undefined.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            SignalKind::SineSquaredWindow => vec![-F2_EDGE, F2_EDGE],
            SignalKind::CubicJump => vec![F3_LEFT, F3_RIGHT],
            _ => Vec::new(),
        }
    }

    /// Is the `i`-th derivative undefined at `t`?
    pub fn is_undefined(&self, i: usize, t: f64) -> bool {
        match &self.kind {
            SignalKind::SineSquaredWindow => i >= 2 && t.abs() == F2_EDGE,
            SignalKind::CubicJump => i >= 1 && (t == F3_LEFT || t == F3_RIGHT),
            _ => false,
        }
    }

    /// `i`-th derivative at `t`; errors at declared exceptional points.
    pub fn eval(&self, i: usize, t: f64) -> Result<f64> {
        if i > self.max_order() {
            return Err(Error::MissingDerivative { signal: self.id.clone(), order: i, max: self.max_order() });
        }
        if self.is_undefined(i, t) {
            return Err(Error::UndefinedPoint { signal: self.id.clone(), order: i, t });
        }
        Ok(match &self.kind {
            SignalKind::GaussSine => gauss_sine(i, t),
            SignalKind::SineSquaredWindow => {
                if t.abs() <= F2_EDGE {
                    sine_squared_inner(i, t)
                } else {
                    0.0
                }
            }
            SignalKind::CubicJump => {
                if t > F3_LEFT && t < F3_RIGHT {
                    cubic_inner(i, t)
                } else {
                    0.0
                }
            }
            SignalKind::Polynomial(c) => poly_deriv(c, i, t),
            SignalKind::Tabulated { t: nodes, columns } => {
                let idx = nodes.partition_point(|&x| x < t);
                let nearest = if idx == 0 {
                    0
                } else if idx == nodes.len() || (t - nodes[idx - 1]) <= (nodes[idx] - t) {
                    idx - 1
                } else {
                    idx
                };
                columns[i][nearest]
            }
            SignalKind::Spline(e) => e.eval(i as u32, t)?,
        })
    }

    /// Value of `f(t)`; signals are defined everywhere at order 0.
    pub fn value(&self, t: f64) -> f64 {
        self.eval(0, t).unwrap_or(f64::NAN)
    }

    /// One-sided limit of the `i`-th derivative at `t`.
    pub fn limit(&self, i: usize, t: f64, side: Side) -> Result<f64> {
        let inside = |lo: f64, hi: f64| match side {
            Side::Left => t > lo && t <= hi,
            Side::Right => t >= lo && t < hi,
        };
        match &self.kind {
            SignalKind::SineSquaredWindow => {
                Ok(if inside(-F2_EDGE, F2_EDGE) { sine_squared_inner(i, t) } else { 0.0 })
            }
            SignalKind::CubicJump => Ok(if inside(F3_LEFT, F3_RIGHT) { cubic_inner(i, t) } else { 0.0 }),
            _ => self.eval(i, t),
        }
    }

    /// Expected exponent `alpha` in `tau_r(f^(i); delta)_p = O(delta^alpha)`,
    /// when known.
    pub fn expected_tau_order(&self, deriv: usize, r: u32, p: f64) -> Option<f64> {
        let r = r as f64;
        match &self.kind {
            SignalKind::GaussSine => Some(r),
            SignalKind::SineSquaredWindow => Some(match deriv {
                0 if r <= 2.0 => r,
                0 => 2.0 + 1.0 / p,
                1 if r <= 1.0 => 1.0,
                1 => 1.0 + 1.0 / p,
                _ => 1.0 / p,
            }),
            SignalKind::CubicJump => Some(1.0 / p),
            _ => None,
        }
    }
}
