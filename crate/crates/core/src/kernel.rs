//! Fourier coefficients of `Psi_kappa^{-1}` and the reconstruction kernels
//!
//! `Theta_i(t) = sum_v sum_j c^{ji}(v) Q_m(t - rho v - j)`,
//!
//! where `c^{ji}(v)` is the `v`-th Fourier coefficient of entry `(j, i)` of the
//! inverse symbol, `Psi^{-1}(t) = sum_v c(v) e^{2 pi i v t}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_integer::binomial;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::bspline::{eval_q, eval_q_deriv, fourier_q_deriv};
use crate::error::{Error, Result};
use crate::laurent::{float_roots, Verdict, DEFAULT_CIRCLE_TOL};
use crate::symbol::{build_symbol, check_cis, Kappa, SymbolMatrix};

/// Default accuracy target for the inverse symbol coefficients.
pub const DEFAULT_KERNEL_TOL: f64 = 1e-12;

/// Safety factor applied to the geometric tail estimate.
const TAIL_SAFETY: f64 = 10.0;

/// Largest grid tried when refining the coefficients.
const MAX_GRID: usize = 1 << 16;

/// Largest accepted imaginary part of a coefficient.
const IMAG_TOL: f64 = 1e-10;

/// Truncated Fourier coefficients of `Psi_kappa^{-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub kappa: Kappa,
    /// Truncation radius: coefficients are kept for `|v| <= radius`.
    pub radius: i64,
    /// `coeffs[v + radius][j][i]` is `c^{ji}(v)`.
    coeffs: Vec<Vec<Vec<Complex64>>>,
    /// Bound on `sum_{|v| > radius} |c^{ji}(v)|` over all entries.
    pub tail_bound: f64,
    /// Geometric decay ratio of the coefficients (0 for finite support).
    pub decay_ratio: f64,
    /// Largest imaginary part seen before it was discarded.
    pub max_imag: f64,
    /// Size of the final sampling grid.
    pub grid: usize,
}

fn invert_at(symbol: &SymbolMatrix, t: f64) -> Result<DMatrix<Complex64>> {
    symbol
        .eval(t)
        .try_inverse()
        .ok_or_else(|| Error::KernelConvergence(format!("symbol is singular at t = {t}")))
}

/// Coefficients `c(v)` for `v` in `-n/2 .. n/2`, from an `n`-point grid.
fn grid_coefficients(symbol: &SymbolMatrix, n: usize) -> Result<Vec<Vec<Vec<Complex64>>>> {
    let rho = symbol.entries.len();
    let mut series = vec![vec![vec![Complex64::new(0.0, 0.0); n]; rho]; rho];
    for s in 0..n {
        let inv = invert_at(symbol, s as f64 / n as f64)?;
        for j in 0..rho {
            for i in 0..rho {
                series[j][i][s] = inv[(j, i)];
            }
        }
    }
    let fft = FftPlanner::new().plan_fft_forward(n);
    for row in series.iter_mut() {
        for entry in row.iter_mut() {
            fft.process(entry);
            for c in entry.iter_mut() {
                *c /= n as f64;
            }
        }
    }
    // reorder to v = -n/2 .. n/2 - 1
    let half = n / 2;
    Ok((0..n)
        .map(|k| {
            let idx = (k + n - half) % n;
            (0..rho).map(|j| (0..rho).map(|i| series[j][i][idx]).collect()).collect()
        })
        .collect())
}

fn max_abs(c: &[Vec<Complex64>]) -> f64 {
    c.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Computes the inverse symbol coefficients to accuracy `tol`.
///
/// The symbol is inverted on a uniform grid and transformed with an FFT; the
/// grid is doubled until two successive refinements agree to `tol`. The
/// truncation radius is the smallest one whose geometric tail estimate
/// (decay ratio from the roots of `det Psi`, constant fitted to the computed
/// coefficients, times a safety factor of 10) is below `tol`.
pub fn inv_symbol_coeffs(kappa: &Kappa, tol: f64) -> Result<KernelTable> {
    let report = check_cis(kappa, DEFAULT_CIRCLE_TOL);
    match report.certificate.verdict {
        Verdict::Nonvanishing => {}
        Verdict::Vanishing => return Err(Error::NotCis(kappa.to_string())),
        Verdict::Inconclusive => return Err(Error::Inconclusive(kappa.to_string())),
    }
    let decay_ratio = float_roots(&report.det)
        .iter()
        .map(|r| r.norm().min(1.0 / r.norm()))
        .fold(0.0, f64::max);
    let symbol = build_symbol(kappa);

    let mut n = 64usize;
    let mut coarse = grid_coefficients(&symbol, n)?;
    let fine = loop {
        let fine = grid_coefficients(&symbol, 2 * n)?;
        let half_c = (n / 2) as i64;
        let half_f = n as i64;
        let diff = (-half_c..half_c)
            .map(|v| {
                let a = &coarse[(v + half_c) as usize];
                let b = &fine[(v + half_f) as usize];
                a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        n *= 2;
        if diff <= tol {
            break fine;
        }
        if n >= MAX_GRID {
            return Err(Error::KernelConvergence(format!(
                "refinements still differ by {diff:e} on a {n}-point grid"
            )));
        }
        coarse = fine;
    };
    let half = (n / 2) as i64;
    let at = |v: i64| &fine[(v + half) as usize];
    let peak = (-half..half).map(|v| max_abs(at(v))).fold(0.0, f64::max);

    let (radius, tail_bound) = if decay_ratio < 1e-300 || report.det.is_monomial() {
        // Laurent-polynomial inverse: keep every coefficient above roundoff
        let noise = 1e3 * f64::EPSILON * peak;
        let radius = (-half..half).filter(|&v| max_abs(at(v)) > noise).map(i64::abs).max().unwrap_or(0);
        (radius, 0.0)
    } else {
        let r = decay_ratio;
        let noise = 1e3 * f64::EPSILON * peak;
        let fit = (-half..half)
            .filter(|&v| max_abs(at(v)) > noise)
            .map(|v| max_abs(at(v)) / r.powi(v.abs() as i32))
            .fold(0.0, f64::max);
        let tail = |radius: i64| TAIL_SAFETY * 2.0 * fit * r.powi(radius as i32 + 1) / (1.0 - r);
        let mut radius = 0;
        while tail(radius) > tol {
            radius += 1;
            if radius >= half - 1 {
                return Err(Error::KernelConvergence(format!(
                    "decay ratio {r} needs more than {half} coefficients"
                )));
            }
        }
        (radius, tail(radius))
    };
    let coeffs: Vec<Vec<Vec<Complex64>>> = (-radius..=radius).map(|v| at(v).clone()).collect();
    let max_imag = coeffs.iter().flatten().flatten().map(|c| c.im.abs()).fold(0.0, f64::max);
    if max_imag > IMAG_TOL {
        return Err(Error::ComplexKernel(max_imag));
    }
    Ok(KernelTable { kappa: kappa.clone(), radius, coeffs, tail_bound, decay_ratio, max_imag, grid: n })
}

/// Residuals of the polynomial reproduction test.
#[derive(Debug, Clone, PartialEq)]
pub struct ReproducingReport {
    pub kappa: Kappa,
    /// Largest `r` with every residual up to degree `r` below the tolerance;
    /// -1 when even constants fail.
    pub order: i64,
    /// `residuals[n]` is the largest residual of the degree-`n` condition.
    pub residuals: Vec<f64>,
}

impl KernelTable {
    /// `c^{ji}(v)` (zero outside the truncation radius).
    pub fn coeff(&self, j: usize, i: usize, v: i64) -> Complex64 {
        if v.abs() > self.radius {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[(v + self.radius) as usize][j][i]
    }

    /// Real part of `c^{ji}(v)`.
    pub fn coeff_re(&self, j: usize, i: usize, v: i64) -> f64 {
        self.coeff(j, i, v).re
    }

    pub fn rho(&self) -> usize {
        self.kappa.rho() as usize
    }

    /// `Theta_i` vanishes outside `[support().0, support().1]`.
    pub fn support(&self) -> (f64, f64) {
        let rho = self.rho() as f64;
        let r = self.radius as f64;
        (-rho * r, rho * r + rho - 1.0 + self.kappa.m().get() as f64)
    }

    /// `sum_j sum_v |c^{ji}(v)|`.
    pub fn mass(&self, i: usize) -> f64 {
        (-self.radius..=self.radius)
            .map(|v| (0..self.rho()).map(|j| self.coeff(j, i, v).norm()).sum::<f64>())
            .sum()
    }

    /// `k`-th derivative of `Theta_i` at `t`.
    pub fn theta_deriv(&self, i: usize, k: u32, t: f64) -> Result<f64> {
        let m = self.kappa.m();
        let mf = m.get() as f64;
        let rho = self.rho() as f64;
        let mut sum = 0.0;
        for j in 0..self.rho() {
            // Q_m(t - rho v - j) needs 0 <= t - rho v - j < m
            let lo = (((t - j as f64 - mf) / rho).floor() as i64).max(-self.radius);
            let hi = (((t - j as f64) / rho).floor() as i64).min(self.radius);
            for v in lo..=hi {
                let c = self.coeff_re(j, i, v);
                if c != 0.0 {
                    sum += c * eval_q_deriv(m, k, t - rho * v as f64 - j as f64)?;
                }
            }
        }
        Ok(sum)
    }

    /// `Theta_i(t)`.
    pub fn theta(&self, i: usize, t: f64) -> f64 {
        let m = self.kappa.m();
        let mf = m.get() as f64;
        let rho = self.rho() as f64;
        let mut sum = 0.0;
        for j in 0..self.rho() {
            let lo = (((t - j as f64 - mf) / rho).floor() as i64).max(-self.radius);
            let hi = (((t - j as f64) / rho).floor() as i64).min(self.radius);
            for v in lo..=hi {
                sum += self.coeff_re(j, i, v) * eval_q(m, t - rho * v as f64 - j as f64);
            }
        }
        sum
    }

    /// Left side of the degree-`n` moment condition at `t`:
    /// `sum_i C(n, i) i! sum_l (a + rho l - t)^{n-i} Theta_i(t - rho l)`,
    /// which equals `delta_{n0}` when polynomials of degree `n` are reproduced.
    pub fn moment_time(&self, n: u32, t: f64) -> f64 {
        let rho = self.rho() as f64;
        let a = self.kappa.a_f64();
        let (s_lo, s_hi) = self.support();
        let l_lo = ((t - s_hi) / rho).floor() as i64;
        let l_hi = ((t - s_lo) / rho).ceil() as i64;
        let mut total = 0.0;
        for i in 0..self.rho().min(n as usize + 1) {
            let weight = binomial(n as u64, i as u64) as f64 * (1..=i).map(|x| x as f64).product::<f64>();
            let mut inner = 0.0;
            for l in l_lo..=l_hi {
                let x = a + rho * l as f64 - t;
                inner += x.powi((n as usize - i) as i32) * self.theta(i, t - rho * l as f64);
            }
            total += weight * inner;
        }
        total
    }

    /// Largest degree `r <= r_max` up to which the moment conditions hold
    /// within `tol`, checked at 64 points of one period `[0, rho)`.
    pub fn reproducing_order(&self, r_max: u32, tol: f64) -> ReproducingReport {
        let rho = self.rho() as f64;
        let residuals: Vec<f64> = (0..=r_max)
            .map(|n| {
                let target = if n == 0 { 1.0 } else { 0.0 };
                (0..64)
                    .map(|k| (self.moment_time(n, rho * k as f64 / 64.0) - target).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let order = residuals.iter().take_while(|&&r| r <= tol).count() as i64 - 1;
        ReproducingReport { kappa: self.kappa.clone(), order, residuals }
    }

    /// `q`-th derivative of `G_i(xi) = sum_{j,v} c^{ji}(v) e^{-2 pi i (rho v + j) xi}`.
    fn g_deriv(&self, i: usize, q: u32, xi: f64) -> Complex64 {
        let rho = self.rho() as f64;
        let mut sum = Complex64::new(0.0, 0.0);
        for v in -self.radius..=self.radius {
            for j in 0..self.rho() {
                let shift = rho * v as f64 + j as f64;
                let factor = Complex64::new(0.0, -2.0 * PI * shift);
                sum += self.coeff(j, i, v) * factor.powu(q) * Complex64::from_polar(1.0, -2.0 * PI * shift * xi);
            }
        }
        sum
    }

    /// `s`-th derivative of the Fourier transform of `Theta_i`, for `s <= 3`.
    pub fn theta_hat_deriv(&self, i: usize, s: u32, xi: f64) -> Result<Complex64> {
        let m = self.kappa.m();
        let mut sum = Complex64::new(0.0, 0.0);
        for u in 0..=s {
            let c = binomial(s as u64, u as u64) as f64;
            sum += fourier_q_deriv(m, u, xi)? * self.g_deriv(i, s - u, xi) * c;
        }
        Ok(sum)
    }

    /// Residual of the Fourier form of the degree-`n` moment condition at
    /// frequency `l / rho`, against `rho delta_{l0} delta_{n0}`.
    pub fn moment_check_fourier(&self, n: u32, l: i64) -> Result<Complex64> {
        if n > 3 {
            return Err(Error::UnsupportedFourierDerivative(n));
        }
        let rho = self.rho() as f64;
        let a = self.kappa.a_f64();
        let xi = l as f64 / rho;
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        let mut total = Complex64::new(0.0, 0.0);
        for i in 0..self.rho().min(n as usize + 1) {
            let weight = binomial(n as u64, i as u64) as f64 * (1..=i).map(|x| x as f64).product::<f64>();
            let rest = n as usize - i;
            for mm in 0..=rest {
                let c = binomial(rest as u64, mm as u64) as f64 * a.powi(mm as i32);
                let power = two_pi_i.powi(mm as i32 + i as i32 - n as i32);
                let d = self.theta_hat_deriv(i, (rest - mm) as u32, xi)?;
                total += power * d * (c * weight);
            }
        }
        let target = if n == 0 && l == 0 { rho } else { 0.0 };
        Ok(total - target)
    }

    /// CSV rows `j,i,v,re,im` in deterministic order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,i,v,re,im\n");
        for j in 0..self.rho() {
            for i in 0..self.rho() {
                for v in -self.radius..=self.radius {
                    let c = self.coeff(j, i, v);
                    let _ = writeln!(out, "{j},{i},{v},{:e},{:e}", c.re, c.im);
                }
            }
        }
        out
    }
}
