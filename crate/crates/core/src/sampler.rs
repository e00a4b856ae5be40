//! The derivative sampling operator
//!
//! `S_W f(t) = sum_l sum_i W^{-i} f^(i)((a + rho l) / W) Theta_i(W t - rho l)`,
//!
//! sample norms, and explicit frame bounds.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bspline::riesz_lower_bound;
use crate::error::{Error, Result};
use crate::kernel::KernelTable;
use crate::quadrature::GaussLegendre;
use crate::signals::{SignalSpec, SplineElement};
use crate::symbol::{build_symbol, Kappa};

/// Nodes `(a + rho l) / W` for `l` in `[l_lo, l_hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    pub kappa: Kappa,
    pub w: f64,
    pub l_lo: i64,
    pub l_hi: i64,
}

impl SampleGrid {
    pub fn new(kappa: Kappa, w: f64, l_lo: i64, l_hi: i64) -> Self {
        Self { kappa, w, l_lo, l_hi }
    }

    /// The smallest grid whose samples determine `S_W f` on `[t_lo, t_hi]`.
    pub fn covering(table: &KernelTable, w: f64, t_lo: f64, t_hi: f64) -> Self {
        let (lo, _) = needed_l(table, w, t_lo);
        let (_, hi) = needed_l(table, w, t_hi);
        Self::new(table.kappa.clone(), w, lo, hi)
    }

    pub fn node(&self, l: i64) -> f64 {
        (self.kappa.a_f64() + self.kappa.rho() as f64 * l as f64) / self.w
    }

    pub fn len(&self) -> usize {
        (self.l_hi - self.l_lo + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Reach of the kernels: `Theta_i(x) = 0` for `|x| > m + rho V + rho - 1`.
pub fn kernel_reach(table: &KernelTable) -> f64 {
    let rho = table.rho() as f64;
    table.kappa.m().get() as f64 + rho * table.radius as f64 + rho - 1.0
}

/// Range of `l` with `|W t - rho l| <= reach`.
fn needed_l(table: &KernelTable, w: f64, t: f64) -> (i64, i64) {
    let rho = table.rho() as f64;
    let reach = kernel_reach(table);
    (((w * t - reach) / rho).ceil() as i64, ((w * t + reach) / rho).floor() as i64)
}

/// Derivative samples `values[l - l_lo][i] = f^(i)(node(l))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub grid: SampleGrid,
    pub values: Vec<Vec<f64>>,
}

impl Samples {
    pub fn get(&self, l: i64, i: usize) -> f64 {
        self.values[(l - self.grid.l_lo) as usize][i]
    }
}

/// Samples `f, f', ..., f^(rho-1)` on the grid; `f(i, t)` returns the `i`-th
/// derivative.
pub fn take_samples_with(grid: &SampleGrid, f: impl Fn(usize, f64) -> Result<f64>) -> Result<Samples> {
    let rho = grid.kappa.rho() as usize;
    let values = (grid.l_lo..=grid.l_hi)
        .map(|l| {
            let t = grid.node(l);
            (0..rho).map(|i| f(i, t)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Samples { grid: grid.clone(), values })
}

/// Samples a catalog signal; fails on nodes where a needed derivative is
/// undefined.
pub fn take_samples(f: &SignalSpec, grid: &SampleGrid) -> Result<Samples> {
    take_samples_with(grid, |i, t| f.eval(i, t))
}

/// Samples a spline element.
pub fn take_samples_spline(f: &SplineElement, grid: &SampleGrid) -> Result<Samples> {
    take_samples_with(grid, |i, t| f.eval(i as u32, t))
}

/// `S_W f(t)` evaluated directly from the kernels.
pub fn apply_sw(samples: &Samples, table: &KernelTable, t: f64) -> Result<f64> {
    let w = samples.grid.w;
    let (lo, hi) = needed_l(table, w, t);
    if lo < samples.grid.l_lo || hi > samples.grid.l_hi {
        return Err(Error::InsufficientSamples {
            need_lo: lo,
            need_hi: hi,
            have_lo: samples.grid.l_lo,
            have_hi: samples.grid.l_hi,
        });
    }
    let rho = table.rho();
    let mut sum = 0.0;
    for l in lo..=hi {
        let x = w * t - (rho as i64 * l) as f64;
        let mut scale = 1.0;
        for i in 0..rho {
            let s = samples.get(l, i);
            if s != 0.0 {
                sum += scale * s * table.theta(i, x);
            }
            scale /= w;
        }
    }
    Ok(sum)
}

/// `S_W f` as a spline in the dilated variable: `S_W f(t) = g(W t)` with
/// `g(x) = sum_k d_k Q_m(x - k)`. Exact wherever the samples cover the
/// kernel reach.
pub fn synthesize(samples: &Samples, table: &KernelTable) -> SplineElement {
    let rho = table.rho() as i64;
    let w = samples.grid.w;
    let r = table.radius;
    let first = rho * (samples.grid.l_lo - r);
    let last = rho * (samples.grid.l_hi + r) + rho - 1;
    let mut d = vec![0.0; (last - first + 1) as usize];
    for l in samples.grid.l_lo..=samples.grid.l_hi {
        let mut weighted = vec![0.0; rho as usize];
        let mut scale = 1.0;
        for (i, slot) in weighted.iter_mut().enumerate() {
            *slot = scale * samples.get(l, i);
            scale /= w;
        }
        if weighted.iter().all(|&x| x == 0.0) {
            continue;
        }
        for v in -r..=r {
            for j in 0..rho as usize {
                let k = rho * (l + v) + j as i64;
                let mut acc = 0.0;
                for (i, s) in weighted.iter().enumerate() {
                    acc += s * table.coeff_re(j, i, v);
                }
                d[(k - first) as usize] += acc;
            }
        }
    }
    SplineElement::new(table.kappa.m(), first, d)
}

/// `(sum_l sum_i |f^(i)(node_l)|^p rho / W)^{1/p}`.
pub fn discrete_norm(samples: &Samples, p: f64) -> f64 {
    let rho = samples.grid.kappa.rho() as f64;
    let sum: f64 = samples.values.iter().flatten().map(|v| v.abs().powf(p)).sum();
    (sum * rho / samples.grid.w).powf(1.0 / p)
}

/// Explicit two-sided sampling bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    /// `inf_t lambda_min(Psi^* Psi(t))`.
    pub a_kappa: f64,
    /// `sup_t lambda_max(Psi^* Psi(t))`.
    pub b_kappa: f64,
    /// Lower Riesz bound of the B-spline basis.
    pub riesz_lower: f64,
    /// `b_kappa / riesz_lower`.
    pub upper_frame: f64,
    /// Largest deviation of the extreme eigenvalues from their value at `t = 0`.
    pub eigen_variation: f64,
}

/// Extreme eigenvalues of `Psi^* Psi(t)` over `grid_n` uniform points.
pub fn frame_bounds(kappa: &Kappa, grid_n: usize) -> BoundsReport {
    let symbol = build_symbol(kappa);
    let extremes = |t: f64| {
        let psi = symbol.eval(t);
        let gram: DMatrix<Complex64> = psi.adjoint() * psi;
        let eig = gram.symmetric_eigenvalues();
        let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (lo0, hi0) = extremes(0.0);
    let mut a = f64::INFINITY;
    let mut b = f64::NEG_INFINITY;
    let mut variation: f64 = 0.0;
    for k in 0..grid_n.max(1) {
        let (lo, hi) = extremes(k as f64 / grid_n.max(1) as f64);
        a = a.min(lo);
        b = b.max(hi);
        variation = variation.max((lo - lo0).abs()).max((hi - hi0).abs());
    }
    let riesz_lower = riesz_lower_bound(kappa.m());
    BoundsReport { a_kappa: a, b_kappa: b, riesz_lower, upper_frame: b / riesz_lower, eigen_variation: variation }
}

/// Energy of the integer-node samples `sum_i sum_l |f^(i)(a + rho l)|^2`.
pub fn sample_energy(f: &SplineElement, kappa: &Kappa) -> Result<f64> {
    let rho = kappa.rho() as f64;
    let a = kappa.a_f64();
    let (lo, hi) = f.support();
    let l_lo = ((lo - a) / rho).floor() as i64;
    let l_hi = ((hi - a) / rho).ceil() as i64;
    let mut sum = 0.0;
    for l in l_lo..=l_hi {
        let t = a + rho * l as f64;
        for i in 0..kappa.rho() {
            sum += f.eval(i, t)?.powi(2);
        }
    }
    Ok(sum)
}

/// Observed range of `sample_energy / ||f||_2^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub violations: usize,
    pub trials: usize,
}

/// Checks `A ||f||^2 <= sum |f^(i)(a + rho l)|^2 <= upper_frame ||f||^2` on
/// random elements with 30 coefficients uniform in `[-1, 1]`.
pub fn verify_sampling_inequality(
    kappa: &Kappa,
    bounds: &BoundsReport,
    n_trials: usize,
    seed: u64,
) -> Result<InequalityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = InequalityReport { min_ratio: f64::INFINITY, max_ratio: 0.0, violations: 0, trials: n_trials };
    for _ in 0..n_trials {
        let coeffs = (0..30).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let f = SplineElement::new(kappa.m(), 0, coeffs);
        let ratio = sample_energy(&f, kappa)? / f.l2_norm().powi(2);
        report.min_ratio = report.min_ratio.min(ratio);
        report.max_ratio = report.max_ratio.max(ratio);
        if ratio < bounds.a_kappa - 1e-9 || ratio > bounds.upper_frame + 1e-9 {
            report.violations += 1;
        }
    }
    Ok(report)
}

/// `(int_lo^hi |g(t)|^p dt)^{1/p}` for a function that is smooth between
/// consecutive `cuts`.
fn lp_norm_piecewise(g: impl Fn(f64) -> f64 + Sync, cuts: &[f64], p: f64) -> f64 {
    let rule = GaussLegendre::new(10);
    let pieces: Vec<f64> = cuts
        .par_windows(2)
        .map(|w| if w[1] > w[0] { rule.integrate(w[0], w[1], |t| g(t).abs().powf(p)) } else { 0.0 })
        .collect();
    pieces.iter().sum::<f64>().powf(1.0 / p)
}

/// Knots `k / W` in `[lo, hi]`, merged with extra breakpoints.
fn cut_points(lo: f64, hi: f64, w: f64, extra: &[f64]) -> Vec<f64> {
    let mut cuts = vec![lo, hi];
    let k_lo = (lo * w).ceil() as i64;
    let k_hi = (hi * w).floor() as i64;
    cuts.extend((k_lo..=k_hi).map(|k| k as f64 / w));
    cuts.extend(extra.iter().copied().filter(|&b| b > lo && b < hi));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

/// `||S_W f - f||_{L^p([lo, hi])}` using samples that fully cover the interval.
pub fn approx_error_on(table: &KernelTable, f: &SignalSpec, w: f64, p: f64, lo: f64, hi: f64) -> Result<f64> {
    let grid = SampleGrid::covering(table, w, lo, hi);
    let samples = take_samples(f, &grid)?;
    let g = synthesize(&samples, table);
    let cuts = cut_points(lo, hi, w, &f.breakpoints());
    Ok(lp_norm_piecewise(|t| g.value(w * t) - f.value(t), &cuts, p))
}

/// `||S_W f - f||_{L^p(R)}` for a signal negligible outside its support hint.
///
/// The integration window is the support widened by the kernel reach, beyond
/// which both `f` and `S_W f` vanish.
pub fn approx_error(table: &KernelTable, f: &SignalSpec, w: f64, p: f64) -> Result<f64> {
    let (s_lo, s_hi) = f.support_hint;
    if !(s_lo.is_finite() && s_hi.is_finite()) {
        return Err(Error::Parse(format!("signal `{}` has unbounded support; give an explicit window", f.id)));
    }
    let margin = kernel_reach(table) / w;
    approx_error_on(table, f, w, p, s_lo - margin, s_hi + margin)
}

/// `||S_W f||_p / ||f||_{l^p_rho(W)}` for each `W` (0 when `f` has no samples).
pub fn sw_boundedness_probe(table: &KernelTable, ws: &[f64], f: &SignalSpec, p: f64) -> Result<Vec<(f64, f64)>> {
    let (s_lo, s_hi) = f.support_hint;
    ws.iter()
        .map(|&w| {
            let margin = kernel_reach(table) / w;
            let (lo, hi) = (s_lo - margin, s_hi + margin);
            let grid = SampleGrid::covering(table, w, lo, hi);
            let samples = take_samples(f, &grid)?;
            let denom = discrete_norm(&samples, p);
            if denom == 0.0 {
                return Ok((w, 0.0));
            }
            let g = synthesize(&samples, table);
            let (g_lo, g_hi) = g.support();
            let cuts = cut_points(g_lo / w, g_hi / w, w, &[]);
            let num = lp_norm_piecewise(|t| g.value(w * t), &cuts, p);
            Ok((w, num / denom))
        })
        .collect()
}

/// Largest pointwise `|S_1 f - f|` for a spline element over `n_points`
/// uniform points of its support.
pub fn reconstruction_error(table: &KernelTable, f: &SplineElement, n_points: usize) -> Result<f64> {
    let (lo, hi) = f.support();
    let grid = SampleGrid::covering(table, 1.0, lo, hi);
    let samples = take_samples_spline(f, &grid)?;
    let errors = (0..n_points)
        .into_par_iter()
        .map(|k| {
            let t = lo + (hi - lo) * k as f64 / (n_points - 1).max(1) as f64;
            Ok((apply_sw(&samples, table, t)? - f.value(t)).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(errors.into_iter().fold(0.0, f64::max))
}
