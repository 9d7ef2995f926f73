//! Evaluation of the Riemann zeta function and of Dirichlet L-functions to
//! prime-power modulus by Taylor-weighted geometric-sum blocks.
//!
//! Every value comes with a certified bound on the truncation error of the
//! block expansion and on the tail of the Dirichlet series. The engines are
//! generic over the scalar type through [`Real`]; `f64` and the MPFR-backed
//! [`Mpf`] are provided, with the aliases below for the usual widths.
//!
//! ```
//! use zetablocks::{zeta, ComplexPoint, Context, EvalParams};
//!
//! let ctx = Context::<f64>::new();
//! let s = ComplexPoint::from_f64(2.0, 0.0).unwrap();
//! let r = zeta::zeta_theorem1(&s, &EvalParams::new(12, 120, 100_000, 6), &ctx).unwrap();
//! let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
//! assert!((r.value.re - pi2_6).abs() <= r.certified_bound() + 1e-12);
//! ```

// `!(x <= y)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bernoulli;
pub mod coefficients;
pub mod complex;
pub mod context;
pub mod dirichlet;
pub mod error;
pub mod geomsum;
pub mod real;
pub mod schedule;
pub mod verify;
pub mod zeta;

pub use context::{ComplexPoint, Context, PrecisionContext};
pub use error::{Error, Result};
pub use real::{Mpf, Real};
pub use schedule::{EvalParams, TailMode};
pub use zeta::{EvalResult, Method};

/// 128-bit MPFR scalar.
pub type Real128 = Mpf<128>;
/// 256-bit MPFR scalar.
pub type Real256 = Mpf<256>;
/// 512-bit MPFR scalar.
pub type Real512 = Mpf<512>;

/// Exact rationals, used for coefficient tables and reference values.
pub type Rational = num_rational::BigRational;
