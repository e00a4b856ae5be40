//! Finite differences, local and averaged moduli of smoothness, and
//! log–log order fitting.

use num_integer::binomial;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::signals::{Side, SignalSpec};

/// Smallest admissible sup-search density.
pub const MIN_SEARCH_N: usize = 64;

/// Slack applied to the dilation inequality for `tau`.
pub const SCALING_SLACK: f64 = 1.05;

/// Window used for signals without compact support.
pub const UNBOUNDED_WINDOW: (f64, f64) = (-10.0, 10.0);

/// Forward difference `sum_j (-1)^(r-j) C(r,j) f(t + jh)`.
pub fn finite_diff(f: impl Fn(f64) -> Result<f64>, r: u32, h: f64, t: f64) -> Result<f64> {
    let mut acc = 0.0;
    for j in 0..=r {
        let c = binomial(r as u64, j as u64) as f64;
        let sign = if (r - j).is_multiple_of(2) { 1.0 } else { -1.0 };
        acc += sign * c * f(t + j as f64 * h)?;
    }
    Ok(acc)
}

/// `f^(deriv)(s)`, falling back to the right limit at declared exceptional points.
fn value_at(f: &SignalSpec, deriv: usize, s: f64) -> f64 {
    match f.eval(deriv, s) {
        Ok(v) => v,
        Err(_) => f.limit(deriv, s, Side::Right).unwrap_or(f64::NAN),
    }
}

fn check_order(f: &SignalSpec, deriv: usize) -> Result<()> {
    if deriv > f.max_order() {
        return Err(Error::MissingDerivative { signal: f.id.clone(), order: deriv, max: f.max_order() });
    }
    Ok(())
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n == 0 { 0.0 } else { (hi - lo) / n as f64 };
    (0..=n).map(move |k| if k == n { hi } else { lo + k as f64 * step })
}

/// Grid estimate of `omega_r(f^(deriv); x; delta)`.
///
/// Searches a `search_n x search_n` grid of `(t, h)` with `t, t + rh` in
/// `[x - r delta / 2, x + r delta / 2]`. Breakpoints of the signal inside the
/// window are added as candidates with both one-sided limits, so jumps are
/// never missed. The result never exceeds the true supremum.
pub fn local_modulus(f: &SignalSpec, deriv: usize, r: u32, x: f64, delta: f64, search_n: usize) -> Result<f64> {
    check_order(f, deriv)?;
    if delta <= 0.0 || r == 0 {
        return Ok(0.0);
    }
    let n = search_n.max(MIN_SEARCH_N);
    let half = r as f64 * delta / 2.0;
    let (lo, hi) = (x - half, x + half);
    let breaks: Vec<f64> = f.breakpoints().into_iter().filter(|&b| b >= lo && b <= hi).collect();

    if r == 1 {
        let mut vmin = f64::INFINITY;
        let mut vmax = f64::NEG_INFINITY;
        let mut push = |v: f64| {
            if v.is_finite() {
                vmin = vmin.min(v);
                vmax = vmax.max(v);
            }
        };
        for t in linspace(lo, hi, n) {
            push(value_at(f, deriv, t));
        }
        for &b in &breaks {
            if let Ok(v) = f.eval(deriv, b) {
                push(v);
            }
            if b > lo {
                push(f.limit(deriv, b, Side::Left)?);
            }
            if b < hi {
                push(f.limit(deriv, b, Side::Right)?);
            }
        }
        return Ok(if vmax >= vmin { vmax - vmin } else { 0.0 });
    }

    let coeff: Vec<f64> = (0..=r)
        .map(|j| {
            let c = binomial(r as u64, j as u64) as f64;
            if (r - j).is_multiple_of(2) {
                c
            } else {
                -c
            }
        })
        .collect();
    let mut best = 0.0f64;
    for k in 1..=n {
        let h = delta * k as f64 / n as f64;
        let t_hi = hi - r as f64 * h;
        for t in linspace(lo, t_hi.max(lo), n) {
            let d: f64 = (0..=r as usize).map(|j| coeff[j] * value_at(f, deriv, t + j as f64 * h)).sum();
            if d.is_finite() {
                best = best.max(d.abs());
            }
        }
        for &b in &breaks {
            for j in 0..=r as usize {
                let t = b - j as f64 * h;
                if t < lo || t + r as f64 * h > hi {
                    continue;
                }
                let rest: f64 = (0..=r as usize)
                    .filter(|&i| i != j)
                    .map(|i| coeff[i] * value_at(f, deriv, t + i as f64 * h))
                    .sum();
                for side in [Side::Left, Side::Right] {
                    let edge = (side == Side::Left && b > lo) || (side == Side::Right && b < hi);
                    if !edge {
                        continue;
                    }
                    let d = rest + coeff[j] * f.limit(deriv, b, side)?;
                    if d.is_finite() {
                        best = best.max(d.abs());
                    }
                }
            }
        }
    }
    Ok(best)
}

/// Discretization metadata of a `tau` estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauGrid {
    pub search_n: usize,
    pub quad_step: f64,
    pub domain: (f64, f64),
}

/// A computed `tau_r(f; delta)_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauEstimate {
    pub r: u32,
    pub p: f64,
    pub delta: f64,
    pub value: f64,
    pub grid: TauGrid,
}

/// Support of `f` widened by the window half-width `r delta / 2`, or
/// [`UNBOUNDED_WINDOW`] when the support is not compact.
pub fn default_domain(f: &SignalSpec, r: u32, delta: f64) -> (f64, f64) {
    let (lo, hi) = f.support_hint;
    if !lo.is_finite() || !hi.is_finite() {
        return UNBOUNDED_WINDOW;
    }
    let margin = r as f64 * delta;
    (lo - margin, hi + margin)
}

/// `||omega_r(f^(deriv); .; delta)||_{L^p(domain)}` by the composite midpoint
/// rule with step close to `grid.quad_step`.
pub fn tau_modulus(f: &SignalSpec, deriv: usize, r: u32, delta: f64, p: f64, grid: TauGrid) -> Result<TauEstimate> {
    check_order(f, deriv)?;
    if p.is_nan() || p < 1.0 || p.is_infinite() {
        return Err(Error::NonPositive(p));
    }
    let TauGrid { search_n, quad_step, domain } = grid;
    let (lo, hi) = domain;
    let grid = |step| TauGrid { search_n, quad_step: step, domain };
    if delta <= 0.0 || hi <= lo {
        return Ok(TauEstimate { r, p, delta, value: 0.0, grid: grid(quad_step) });
    }
    if quad_step.is_nan() || quad_step <= 0.0 {
        return Err(Error::NonPositive(quad_step));
    }
    let cells = ((hi - lo) / quad_step).ceil().max(1.0) as usize;
    let step = (hi - lo) / cells as f64;
    let omegas: Vec<f64> = (0..cells)
        .into_par_iter()
        .map(|k| local_modulus(f, deriv, r, lo + (k as f64 + 0.5) * step, delta, search_n))
        .collect::<Result<_>>()?;
    let sum: f64 = omegas.iter().map(|w| w.powf(p)).sum();
    Ok(TauEstimate { r, p, delta, value: (sum * step).powf(1.0 / p), grid: grid(step) })
}

/// `tau` with the default domain, step `delta / 8` and the minimum search density.
pub fn tau_default(f: &SignalSpec, deriv: usize, r: u32, delta: f64, p: f64) -> Result<TauEstimate> {
    let grid = TauGrid { search_n: MIN_SEARCH_N, quad_step: delta / 8.0, domain: default_domain(f, r, delta) };
    tau_modulus(f, deriv, r, delta, p, grid)
}

/// Least-squares slope of `log value` against `log scale`, with the `r^2` of
/// the fit. Errors need positive rates as `1/W`, not `W`.
pub fn fit_order(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    if pairs.len() < 4 {
        return Err(Error::TooFewPoints { need: 4, got: pairs.len() });
    }
    if let Some(&(s, v)) = pairs.iter().find(|(s, v)| !(*s > 0.0) || !(*v > 0.0)) {
        return Err(Error::NonPositive(if s > 0.0 { v } else { s }));
    }
    let xs: Vec<f64> = pairs.iter().map(|(s, _)| s.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Parse("fit_order needs distinct scales".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok((slope, r2))
}

/// Outcome of the dilation inequality `tau(lambda delta) <= (2(lambda+1))^(r+1) tau(delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks the dilation inequality for `tau` with slack [`SCALING_SLACK`].
pub fn tau_scaling_check(f: &SignalSpec, deriv: usize, r: u32, delta: f64, lambda: f64, p: f64) -> Result<ScalingCheck> {
    if !(lambda > 0.0) {
        return Err(Error::NonPositive(lambda));
    }
    let grid = TauGrid {
        search_n: MIN_SEARCH_N,
        quad_step: delta / 8.0,
        domain: default_domain(f, r, delta * lambda.max(1.0)),
    };
    let small = tau_modulus(f, deriv, r, delta, p, grid)?;
    let big = tau_modulus(f, deriv, r, lambda * delta, p, grid)?;
    let rhs = (2.0 * (lambda + 1.0)).powi(r as i32 + 1) * small.value;
    Ok(ScalingCheck { lhs: big.value, rhs, holds: big.value <= SCALING_SLACK * rhs })
}

/// `{ sum_j sum_{i<rho} |f^(i)(x_j)|^p Delta_j }^(1/p)` over finite sorted nodes;
/// the first node reuses the first spacing.
pub fn discrete_lp_rho_norm(f: &SignalSpec, nodes: &[f64], rho: usize, p: f64) -> Result<f64> {
    if nodes.len() < 2 {
        return Err(Error::TooFewPoints { need: 2, got: nodes.len() });
    }
    let mut sum = 0.0;
    for (j, &x) in nodes.iter().enumerate() {
        let dj = if j == 0 { nodes[1] - nodes[0] } else { x - nodes[j - 1] };
        for i in 0..rho {
            sum += f.eval(i, x)?.abs().powf(p) * dj;
        }
    }
    Ok(sum.powf(1.0 / p))
}

/// `||f^(i)||_{L^p}` over the (finite) support of `f`.
pub fn derivative_lp_norm(f: &SignalSpec, i: usize, p: f64) -> Result<f64> {
    check_order(f, i)?;
    let (lo, hi) = default_domain(f, 0, 0.0);
    let rule = GaussLegendre::new(16);
    let pieces = ((hi - lo) * 4.0).ceil().max(1.0) as usize;
    let width = (hi - lo) / pieces as f64;
    let sum: f64 = (0..pieces)
        .map(|k| {
            let a = lo + k as f64 * width;
            rule.integrate(a, a + width, |t| value_at(f, i, t).abs().powf(p))
        })
        .sum();
    Ok(sum.powf(1.0 / p))
}

/// Right-hand side `sum_{i<rho} (||f^(i)||_p + mesh ||f^(i+1)||_p)`.
pub fn lp_rho_bound(f: &SignalSpec, rho: usize, p: f64, mesh: f64) -> Result<f64> {
    let mut acc = 0.0;
    for i in 0..rho {
        acc += derivative_lp_norm(f, i, p)? + mesh * derivative_lp_norm(f, i + 1, p)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn deltas() -> [f64; 4] {
        [0.2, 0.1, 0.05, 0.025]
    }

    fn tau_slope(f: &SignalSpec, deriv: usize, r: u32) -> (f64, f64) {
        let pairs: Vec<(f64, f64)> =
            deltas().iter().map(|&d| (d, tau_default(f, deriv, r, d, 2.0).unwrap().value)).collect();
        fit_order(&pairs).unwrap()
    }

    #[test]
    fn finite_diff_basics() {
        let sq = |t: f64| Ok(t * t);
        assert_eq!(finite_diff(sq, 1, 0.5, 2.0).unwrap(), 2.25);
        for (t, h) in [(0.3, 0.1), (-2.0, 1.5), (7.0, 0.01)] {
            assert!((finite_diff(sq, 2, h, t).unwrap() - 2.0 * h * h).abs() < 1e-12);
            assert!(finite_diff(sq, 3, h, t).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn finite_diff_propagates_undefined() {
        let f3 = SignalSpec::f3();
        let err = finite_diff(|t| f3.eval(1, t), 1, 0.5, 2.5).unwrap_err();
        assert!(matches!(err, Error::UndefinedPoint { .. }));
    }

    #[test]
    fn zero_delta_gives_zero() {
        for f in SignalSpec::catalog() {
            for r in 1..=3 {
                assert_eq!(local_modulus(&f, 0, r, 0.7, 0.0, 64).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn linear_function_modulus() {
        let f = SignalSpec::polynomial(vec![0.0, 1.0]);
        for (x, d) in [(0.0, 0.1), (3.3, 0.5), (-1.0, 2.0)] {
            assert!((local_modulus(&f, 0, 1, x, d, 64).unwrap() - d).abs() < 1e-12);
        }
    }

    #[test]
    fn jump_is_captured() {
        let f3 = SignalSpec::f3();
        let w = local_modulus(&f3, 0, 1, 3.0, 0.1, 64).unwrap();
        assert!(w >= 11.5, "{w}");
        let w = local_modulus(&f3, 0, 2, 3.0, 0.1, 64).unwrap();
        assert!(w >= 11.5, "{w}");
        let w = local_modulus(&f3, 0, 2, -1.5, 0.05, 64).unwrap();
        assert!(w >= 3.6875 - 1e-12, "{w}");
    }

    #[test]
    fn modulus_monotone_in_delta() {
        for (f, deriv) in [(SignalSpec::f1(), 0), (SignalSpec::f2(), 1), (SignalSpec::f3(), 0)] {
            for r in 1..=3 {
                for x in [-1.5, 0.3, 2.9] {
                    let mut prev = 0.0;
                    for k in 1..=10 {
                        let w = local_modulus(&f, deriv, r, x, 0.02 * k as f64, 64).unwrap();
                        assert!(w + 1e-12 >= prev, "{} r={r} x={x} k={k}: {w} < {prev}", f.id);
                        prev = w;
                    }
                }
            }
        }
    }

    #[test]
    fn zero_signal_has_zero_tau() {
        let zero = SignalSpec::polynomial(vec![0.0]);
        let t = tau_default(&zero, 0, 2, 0.1, 2.0).unwrap();
        assert_eq!(t.value, 0.0);
        assert!(tau_scaling_check(&zero, 0, 2, 0.1, 2.0, 2.0).unwrap().holds);
    }

    #[test]
    fn fit_order_examples() {
        let pairs: Vec<(f64, f64)> = (0..5).map(|k| 0.5f64.powi(k)).map(|s| (s, s * s)).collect();
        let (slope, r2) = fit_order(&pairs).unwrap();
        assert!((slope - 2.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
        assert!(matches!(fit_order(&pairs[..3]), Err(Error::TooFewPoints { .. })));
        let mut bad = pairs.clone();
        bad[2].1 = 0.0;
        assert!(matches!(fit_order(&bad), Err(Error::NonPositive(_))));
    }

    #[test]
    fn tau_orders_of_jump_signals() {
        let (s, _) = tau_slope(&SignalSpec::f3(), 0, 1);
        assert!((s - 0.5).abs() <= 0.15, "{s}");
        let (s, _) = tau_slope(&SignalSpec::f3(), 1, 1);
        assert!((s - 0.5).abs() <= 0.15, "{s}");
    }

    #[test]
    fn tau_order_of_smooth_signal() {
        let (s, r2) = tau_slope(&SignalSpec::f1(), 0, 2);
        assert!((s - 2.0).abs() <= 0.3, "{s}");
        assert!(r2 > 0.99);
    }

    #[test]
    fn tau_of_kinked_derivative_is_preasymptotic() {
        // Kink term ~ delta^3 is dominated by the smooth term ~ delta^4 in tau^2
        // for delta above about 0.01, so the fitted slope sits between 1.5 and 2.
        let (s, _) = tau_slope(&SignalSpec::f2(), 1, 2);
        assert!(s > 1.5 && s < 2.0, "{s}");
    }

    #[test]
    fn scaling_inequality_examples() {
        assert!(tau_scaling_check(&SignalSpec::f1(), 0, 2, 0.1, 2.0, 2.0).unwrap().holds);
        assert!(tau_scaling_check(&SignalSpec::f3(), 0, 1, 0.05, 3.0, 2.0).unwrap().holds);
    }

    #[test]
    fn lp_rho_inequality_on_f1() {
        let f1 = SignalSpec::f1();
        for (rho, w) in [(2usize, 4.0), (3, 3.0), (2, 10.0)] {
            let mesh = rho as f64 / w;
            let nodes: Vec<f64> = (-(10.0 * w / rho as f64) as i64..=(10.0 * w / rho as f64) as i64)
                .map(|l| l as f64 * mesh)
                .collect();
            let lhs = discrete_lp_rho_norm(&f1, &nodes, rho, 2.0).unwrap();
            let rhs = lp_rho_bound(&f1, rho, 2.0, mesh).unwrap();
            assert!(lhs <= SCALING_SLACK * rhs, "rho={rho} W={w}: {lhs} > {rhs}");
        }
    }

    #[test]
    fn derivative_norm_of_window() {
        // ||sin^2(pi t)||_2^2 over [-3, 3] = 6 * 3/8.
        let n = derivative_lp_norm(&SignalSpec::f2(), 0, 2.0).unwrap();
        assert!((n * n - 2.25).abs() < 1e-10, "{n}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn differences_annihilate_low_degree(
            r in 1u32..=4,
            coeffs in proptest::collection::vec(-3.0f64..3.0, 4),
            t in -5.0f64..5.0,
            h in 0.01f64..1.0,
        ) {
            for deg in 0..r as usize {
                let c = &coeffs[..=deg];
                let p = |x: f64| Ok(c.iter().rev().fold(0.0, |acc, a| acc * x + a));
                let d = finite_diff(p, r, h, t).unwrap();
                prop_assert!(d.abs() < 1e-9, "r={} deg={} d={}", r, deg, d);
            }
        }
    }
}
