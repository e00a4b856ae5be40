//! Hermite-type derivative sampling in shift-invariant B-spline spaces.
//!
//! A configuration [`symbol::Kappa`] `(m, a, rho)` samples `f, f', ...,
//! f^(rho-1)` on `a + rho Z`. The symbol matrix decides whether those
//! samples determine every `f` in `V(Q_m)`; when they do, [`kernel`] builds
//! the reconstruction kernels and [`sampler`] applies the resulting
//! quasi-interpolant to arbitrary signals.

pub mod bspline;
pub mod error;
pub mod kernel;
pub mod laurent;
pub mod quadrature;
pub mod sampler;
pub mod signals;
pub mod smoothness;
pub mod symbol;

pub use bspline::{Rational, SplineOrder};
pub use error::{Error, Result};
pub use kernel::KernelTable;
pub use laurent::{CircleCertificate, LaurentPoly, Verdict};
pub use symbol::{Kappa, SymbolMatrix};
