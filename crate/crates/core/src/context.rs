//! Working precision, evaluation points, `n^{-s}` and the round-off model.

use num_complex::Complex;

use std::sync::OnceLock;

use crate::bernoulli::{float_cache, LAURENT_MAX_ORDER};
use crate::complex::{cmul, cone};
use crate::error::{Error, Result};
use crate::real::{convert_real, epsilon_for_bits, Real};

/// Default number of extra bits used when forming `t·log n`.
pub const DEFAULT_GUARD_BITS: u32 = 64;

/// Mantissa width plus the guard bits for phase computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecisionContext {
    mantissa_bits: u32,
    guard_bits: u32,
}

impl PrecisionContext {
    pub fn new(mantissa_bits: u32) -> Result<Self> {
        if mantissa_bits < 53 {
            return Err(Error::Parameter(format!(
                "mantissa_bits must be at least 53, got {mantissa_bits}"
            )));
        }
        Ok(PrecisionContext { mantissa_bits, guard_bits: DEFAULT_GUARD_BITS })
    }

    pub fn with_guard_bits(mut self, guard_bits: u32) -> Self {
        self.guard_bits = guard_bits;
        self
    }

    pub fn mantissa_bits(&self) -> u32 {
        self.mantissa_bits
    }

    pub fn guard_bits(&self) -> u32 {
        self.guard_bits
    }

    /// `2^(1 - mantissa_bits)`.
    pub fn epsilon_mach(&self) -> f64 {
        epsilon_for_bits(self.mantissa_bits)
    }
}

/// Precision context bound to a scalar type, with cached constants.
#[derive(Debug, Clone)]
pub struct Context<T: Real> {
    prec: PrecisionContext,
    threads: usize,
    pi: T,
    two_pi: T,
    b_fact: Vec<T>,
    b_index: Vec<T>,
    laurent: OnceLock<Vec<Vec<T>>>,
}

impl<T: Real> Default for Context<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Context<T> {
    pub fn new() -> Self {
        let prec = PrecisionContext::new(T::MANTISSA_BITS).expect("scalar narrower than f64");
        let pi = T::pi();
        let two_pi = pi.clone() * T::from_u64(2);
        let cache = float_cache();
        let b_fact = cache.over_factorial.iter().map(T::from_float).collect();
        let b_index = cache.over_index.iter().map(T::from_float).collect();
        Context { prec, threads: 1, pi, two_pi, b_fact, b_index, laurent: OnceLock::new() }
    }

    pub fn with_guard_bits(mut self, guard_bits: u32) -> Self {
        self.prec = self.prec.with_guard_bits(guard_bits);
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        self
    }

    pub fn precision(&self) -> PrecisionContext {
        self.prec
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    pub fn bits(&self) -> u32 {
        self.prec.mantissa_bits
    }

    pub fn eps(&self) -> f64 {
        self.prec.epsilon_mach()
    }

    pub fn pi(&self) -> &T {
        &self.pi
    }

    pub fn two_pi(&self) -> &T {
        &self.two_pi
    }

    /// `B_{2l} / (2l)!` at working precision.
    pub fn bernoulli_over_factorial(&self, l: usize) -> &T {
        &self.b_fact[l]
    }

    /// `B_{2l} / (2l)` at working precision, `l ≥ 1`.
    pub fn bernoulli_over_index(&self, l: usize) -> &T {
        &self.b_index[l]
    }

    /// `B_{2l}/(2l)/(2l-ℓ-1)!` indexed by `l`, for `ℓ ≤ LAURENT_MAX_ORDER`.
    pub fn laurent_coefficients(&self, ell: usize) -> Option<&[T]> {
        if ell > LAURENT_MAX_ORDER {
            return None;
        }
        let table = self.laurent.get_or_init(|| {
            float_cache()
                .laurent
                .iter()
                .map(|row| row.iter().map(T::from_float).collect())
                .collect()
        });
        Some(&table[ell])
    }

    /// Largest Euler–Maclaurin order tried for geometric sums.
    pub fn em_order_cap(&self) -> usize {
        if self.bits() <= 128 {
            60
        } else {
            (self.bits() / 2) as usize
        }
    }
}

/// `s = σ + it` with `σ > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoint<T: Real> {
    sigma: T,
    t: T,
    abs_s: f64,
}

impl<T: Real> ComplexPoint<T> {
    pub fn new(sigma: T, t: T) -> Result<Self> {
        if !sigma.is_finite() || !t.is_finite() {
            return Err(Error::Domain("s must be finite".into()));
        }
        if sigma <= T::zero() {
            return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
        }
        let abs_s = sigma.hypot(&t).to_f64();
        Ok(ComplexPoint { sigma, t, abs_s })
    }

    /// Parses decimal strings at the full precision of `T`.
    pub fn parse(sigma: &str, t: &str) -> Result<Self> {
        let sg = T::parse_decimal(sigma)
            .ok_or_else(|| Error::Parameter(format!("cannot parse sigma {sigma:?}")))?;
        let tt = T::parse_decimal(t)
            .ok_or_else(|| Error::Parameter(format!("cannot parse t {t:?}")))?;
        Self::new(sg, tt)
    }

    pub fn from_f64(sigma: f64, t: f64) -> Result<Self> {
        Self::new(T::from_f64(sigma), T::from_f64(t))
    }

    /// Re-expresses the point in another scalar type via its exact decimal form.
    pub fn convert<U: Real>(&self) -> ComplexPoint<U> {
        ComplexPoint::new(convert_real(&self.sigma), convert_real(&self.t)).expect("already validated")
    }

    pub fn sigma(&self) -> &T {
        &self.sigma
    }

    pub fn t(&self) -> &T {
        &self.t
    }

    pub fn s(&self) -> Complex<T> {
        Complex::new(self.sigma.clone(), self.t.clone())
    }

    pub fn sigma_f64(&self) -> f64 {
        self.sigma.to_f64()
    }

    pub fn t_f64(&self) -> f64 {
        self.t.to_f64()
    }

    pub fn abs_s(&self) -> f64 {
        self.abs_s
    }

    /// Analytic conductor `|s| + 3`.
    pub fn conductor_q(&self) -> f64 {
        self.abs_s + 3.0
    }

    /// The reflected point `σ - it`.
    pub fn conj(&self) -> Self {
        ComplexPoint { sigma: self.sigma.clone(), t: -self.t.clone(), abs_s: self.abs_s }
    }
}

/// `x` reduced modulo `2π` into `[-π, π]`.
pub fn reduce_mod_2pi<T: Real>(x: &T) -> Result<T> {
    if !x.is_finite() {
        return Err(Error::Domain("cannot reduce a non-finite value".into()));
    }
    Ok(x.reduce_mod_2pi())
}

/// `n^{-s} = e^{-σ log n} e^{-i (t log n mod 2π)}`.
pub fn complex_inv_power<T: Real>(n: u64, s: &ComplexPoint<T>, ctx: &Context<T>) -> Complex<T> {
    assert!(n >= 1, "n must be positive");
    if n == 1 {
        return cone();
    }
    let ln = T::ln_u64(n);
    let modulus = (-(s.sigma.clone() * &ln)).exp();
    let phase = -T::mul_ln_mod_2pi(&s.t, n, ctx.precision().guard_bits());
    let (sn, cs) = phase.sin_cos();
    Complex::new(cs * &modulus, sn * &modulus)
}

/// Smallest-prime-factor table for `0..n`.
fn spf_table(n: usize) -> Vec<u32> {
    let mut spf = vec![0u32; n.max(2)];
    for i in 2..n {
        if spf[i] == 0 {
            spf[i] = i as u32;
            let mut k = i.saturating_mul(i);
            while k < n {
                if spf[k] == 0 {
                    spf[k] = i as u32;
                }
                k += i;
            }
        }
    }
    spf
}

/// Calls `f(n, n^{-s})` for `1 ≤ n < end` in increasing order.
///
/// Composite powers are built multiplicatively from smaller ones, so only the
/// primes cost transcendental evaluations.
pub fn for_each_inv_power<T: Real, F: FnMut(u64, &Complex<T>)>(
    s: &ComplexPoint<T>,
    end: u64,
    ctx: &Context<T>,
    mut f: F,
) {
    if end <= 1 {
        return;
    }
    let n = end as usize;
    let spf = spf_table(n);
    let keep = n / 2 + 1;
    let mut stored: Vec<Complex<T>> = Vec::with_capacity(keep.min(n));
    stored.push(Complex::new(T::zero(), T::zero()));
    for k in 1..n {
        let val = if k == 1 {
            cone()
        } else if spf[k] as usize == k {
            complex_inv_power(k as u64, s, ctx)
        } else {
            let p = spf[k] as usize;
            cmul(&stored[p], &stored[k / p])
        };
        f(k as u64, &val);
        if k < keep {
            stored.push(val);
        }
    }
}

/// `Σ_{1 ≤ n < end} n^{-s}`.
pub fn power_sum<T: Real>(s: &ComplexPoint<T>, end: u64, ctx: &Context<T>) -> Complex<T> {
    let mut acc = Complex::new(T::zero(), T::zero());
    for_each_inv_power(s, end, ctx, |_, v| acc += v);
    acc
}

/// Below this length the round-off sum is evaluated term by term.
const DIRECT_SUM_LIMIT: u64 = 1_000_000;

fn log_square_sum(m: u64) -> f64 {
    if m > DIRECT_SUM_LIMIT {
        let l = (m as f64).ln();
        l * l * l / 3.0
    } else {
        (2..m).map(|n| {
            let l = (n as f64).ln();
            l * l / n as f64
        })
        .sum()
    }
}

/// Typical accumulated round-off `ε_mach |t| (Σ_{2≤n<M} (log n)²/n)^{1/2}`.
///
/// A statistical model, not a bound.
pub fn roundoff_estimate(t: f64, m: u64, mantissa_bits: u32) -> f64 {
    if t == 0.0 || m < 2 {
        return 0.0;
    }
    epsilon_for_bits(mantissa_bits) * t.abs() * log_square_sum(m).sqrt()
}

/// Smallest mantissa width whose modelled round-off is at most `target/10`.
pub fn required_mantissa_bits(t: f64, m: u64, target_eps: f64) -> u32 {
    assert!(target_eps > 0.0 && target_eps < 1.0, "target must lie in (0, 1)");
    let scale = t.abs() * log_square_sum(m.max(2)).sqrt();
    if scale == 0.0 {
        return 53;
    }
    // ε = 2^{1-b}; need 2^{1-b} scale ≤ target/10.
    let need = 1.0 + (10.0 * scale / target_eps).log2();
    let mut bits = need.ceil().max(53.0) as u32;
    while bits > 53 && roundoff_estimate(t, m, bits - 1) <= target_eps / 10.0 {
        bits -= 1;
    }
    while roundoff_estimate(t, m, bits) > target_eps / 10.0 {
        bits += 1;
    }
    bits
}

impl<T: Real> Context<T> {
    /// Bounds the rounding in a sum whose absolute terms add up to `mass`.
    pub fn rounding(&self, mass: f64, ops: usize) -> f64 {
        4.0 * self.eps() * mass * (ops as f64 + 2.0)
    }
}
