//! Scalar abstraction shared by every numerical routine.
//!
//! The engines are written once against [`Real`] and instantiated with
//! `f64` (53-bit mantissa) or [`Mpf<P>`], an MPFR-backed float carrying a
//! `P`-bit mantissa fixed at compile time. Exact quantities (Bernoulli
//! numbers, the Taylor-coefficient recursion) live in `num-bigint` /
//! `num-rational` types and are rounded into a `Real` only at the boundary.

use std::cmp::Ordering;
use std::fmt::{self, Debug, Display};
use std::ops::{
    Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign,
};

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{Num, One, Zero};
use rug::float::Constant;
use rug::integer::Order;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

/// A real scalar with a fixed mantissa width.
pub trait Real:
    Num
    + Clone
    + Debug
    + Display
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + RemAssign
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
    + for<'a> DivAssign<&'a Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
{
    /// Mantissa width in bits, including the implicit leading bit.
    const MANTISSA_BITS: u32;

    fn from_f64(x: f64) -> Self;
    fn from_u64(n: u64) -> Self;
    fn from_i64(n: i64) -> Self;
    fn from_bigint(n: &BigInt) -> Self;

    /// Rounds an MPFR value to this type.
    fn from_float(f: &Float) -> Self;

    /// Correctly rounded (or nearly so) conversion of an exact rational.
    fn from_ratio(q: &BigRational) -> Self {
        Self::from_bigint(q.numer()) / Self::from_bigint(q.denom())
    }

    /// Parses a decimal literal such as `"0.5"` or `"1e10"` at full precision.
    fn parse_decimal(s: &str) -> Option<Self>;

    fn to_f64(&self) -> f64;

    /// Decimal rendering that parses back to the identical value.
    fn to_decimal_string(&self) -> String;

    fn pi() -> Self;
    fn abs(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn exp_m1(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin_cos(&self) -> (Self, Self);
    fn atan2(&self, x: &Self) -> Self;
    fn round(&self) -> Self;
    fn floor(&self) -> Self;
    fn powi(&self, n: i32) -> Self;
    fn is_finite(&self) -> bool;

    /// `x - 2πk` for the integer `k` nearest `x/2π`, so the result lies in
    /// `[-π, π]`. The constant `2π` is carried at twice the working width.
    fn reduce_mod_2pi(&self) -> Self;

    /// `(t · ln n) mod 2π`, with the logarithm and product formed using
    /// `guard_bits` extra bits where the representation allows it.
    fn mul_ln_mod_2pi(t: &Self, n: u64, guard_bits: u32) -> Self;

    fn ln_u64(n: u64) -> Self {
        Self::from_u64(n).ln()
    }

    fn hypot(&self, other: &Self) -> Self {
        (self.clone() * self + other.clone() * other).sqrt()
    }

    /// `2^(1 - MANTISSA_BITS)`.
    fn epsilon() -> Self {
        Self::from_f64(epsilon_for_bits(Self::MANTISSA_BITS))
    }

    fn two_pi() -> Self {
        Self::pi() * Self::from_u64(2)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }
}

pub(crate) fn epsilon_for_bits(bits: u32) -> f64 {
    (2.0f64).powi(1 - bits as i32)
}

// 2π split into three doubles: TWO_PI_HI + TWO_PI_MID + TWO_PI_LO.
const TWO_PI_HI: f64 = std::f64::consts::TAU;
const TWO_PI_MID: f64 = 2.449_293_598_294_706_4e-16;
const TWO_PI_LO: f64 = -5.989_539_619_436_679e-33;

impl Real for f64 {
    const MANTISSA_BITS: u32 = 53;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_u64(n: u64) -> Self {
        n as f64
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn from_bigint(n: &BigInt) -> Self {
        num_traits::ToPrimitive::to_f64(n).unwrap_or(f64::NAN)
    }
    fn from_float(f: &Float) -> Self {
        f.to_f64()
    }
    fn from_ratio(q: &BigRational) -> Self {
        // A single rounding through MPFR avoids the overflow of num/den for
        // large Bernoulli numbers.
        Float::with_val(53, &to_rug_rational(q)).to_f64()
    }
    fn parse_decimal(s: &str) -> Option<Self> {
        s.trim().parse::<f64>().ok().filter(|x| x.is_finite())
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_decimal_string(&self) -> String {
        format!("{self:?}")
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn exp_m1(&self) -> Self {
        f64::exp_m1(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sin_cos(&self) -> (Self, Self) {
        f64::sin_cos(*self)
    }
    fn atan2(&self, x: &Self) -> Self {
        f64::atan2(*self, *x)
    }
    fn round(&self) -> Self {
        f64::round(*self)
    }
    fn floor(&self) -> Self {
        f64::floor(*self)
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn hypot(&self, other: &Self) -> Self {
        f64::hypot(*self, *other)
    }

    fn reduce_mod_2pi(&self) -> Self {
        let x = *self;
        let k = f64::round(x / TWO_PI_HI);
        if k == 0.0 {
            return x;
        }
        // x - k·2π with the leading product formed exactly by fma.
        let r = (-k).mul_add(TWO_PI_HI, x);
        let r = (-k).mul_add(TWO_PI_MID, r);
        let r = (-k).mul_add(TWO_PI_LO, r);
        if r > std::f64::consts::PI {
            r - TWO_PI_HI - TWO_PI_MID
        } else if r < -std::f64::consts::PI {
            r + TWO_PI_HI + TWO_PI_MID
        } else {
            r
        }
    }

    fn mul_ln_mod_2pi(t: &Self, n: u64, _guard_bits: u32) -> Self {
        (*t * (n as f64).ln()).reduce_mod_2pi()
    }
}

/// MPFR-backed float with a `P`-bit mantissa.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct Mpf<const P: u32>(pub Float);

impl<const P: u32> Mpf<P> {
    pub fn from_float(f: Float) -> Self {
        if f.prec() == P {
            Mpf(f)
        } else {
            Mpf(Float::with_val(P, f))
        }
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }
}

impl<const P: u32> Debug for Mpf<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mpf<{P}>({})", self.to_decimal_string())
    }
}

impl<const P: u32> Display for Mpf<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

macro_rules! mpf_binop {
    ($tr:ident, $method:ident, $atr:ident, $amethod:ident) => {
        impl<const P: u32> $tr for Mpf<P> {
            type Output = Mpf<P>;
            #[inline]
            fn $method(mut self, rhs: Mpf<P>) -> Mpf<P> {
                $atr::$amethod(&mut self.0, rhs.0);
                self
            }
        }
        impl<'a, const P: u32> $tr<&'a Mpf<P>> for Mpf<P> {
            type Output = Mpf<P>;
            #[inline]
            fn $method(mut self, rhs: &'a Mpf<P>) -> Mpf<P> {
                $atr::$amethod(&mut self.0, &rhs.0);
                self
            }
        }
        impl<const P: u32> $atr for Mpf<P> {
            #[inline]
            fn $amethod(&mut self, rhs: Mpf<P>) {
                $atr::$amethod(&mut self.0, rhs.0);
            }
        }
        impl<'a, const P: u32> $atr<&'a Mpf<P>> for Mpf<P> {
            #[inline]
            fn $amethod(&mut self, rhs: &'a Mpf<P>) {
                $atr::$amethod(&mut self.0, &rhs.0);
            }
        }
    };
}

mpf_binop!(Add, add, AddAssign, add_assign);
mpf_binop!(Sub, sub, SubAssign, sub_assign);
mpf_binop!(Mul, mul, MulAssign, mul_assign);
mpf_binop!(Div, div, DivAssign, div_assign);
mpf_binop!(Rem, rem, RemAssign, rem_assign);

impl<const P: u32> Neg for Mpf<P> {
    type Output = Mpf<P>;
    fn neg(self) -> Mpf<P> {
        Mpf(-self.0)
    }
}

impl<const P: u32> Zero for Mpf<P> {
    fn zero() -> Self {
        Mpf(Float::new(P))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl<const P: u32> One for Mpf<P> {
    fn one() -> Self {
        Mpf(Float::with_val(P, 1))
    }
}

impl<const P: u32> Num for Mpf<P> {
    type FromStrRadixErr = rug::float::ParseFloatError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        let parsed = Float::parse_radix(s, radix as i32)?;
        Ok(Mpf(Float::with_val(P, parsed)))
    }
}

pub(crate) fn to_rug_integer(n: &BigInt) -> Integer {
    let (sign, digits) = n.to_u64_digits();
    let mut out = Integer::from_digits(&digits, Order::Lsf);
    if sign == Sign::Minus {
        out = -out;
    }
    out
}

pub(crate) fn to_rug_rational(q: &BigRational) -> Rational {
    Rational::from((to_rug_integer(q.numer()), to_rug_integer(q.denom())))
}

impl<const P: u32> Real for Mpf<P> {
    const MANTISSA_BITS: u32 = P;

    fn from_f64(x: f64) -> Self {
        Mpf(Float::with_val(P, x))
    }
    fn from_u64(n: u64) -> Self {
        Mpf(Float::with_val(P, n))
    }
    fn from_i64(n: i64) -> Self {
        Mpf(Float::with_val(P, n))
    }
    fn from_bigint(n: &BigInt) -> Self {
        Mpf(Float::with_val(P, &to_rug_integer(n)))
    }
    fn from_float(f: &Float) -> Self {
        Mpf(Float::with_val(P, f))
    }
    fn from_ratio(q: &BigRational) -> Self {
        Mpf(Float::with_val(P, &to_rug_rational(q)))
    }
    fn parse_decimal(s: &str) -> Option<Self> {
        let parsed = Float::parse(s.trim()).ok()?;
        let f = Float::with_val(P, parsed);
        f.is_finite().then_some(Mpf(f))
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
    fn to_decimal_string(&self) -> String {
        self.0.to_string_radix(10, None)
    }
    fn pi() -> Self {
        Mpf(Float::with_val(P, Constant::Pi))
    }
    fn abs(&self) -> Self {
        Mpf(self.0.clone().abs())
    }
    fn sqrt(&self) -> Self {
        Mpf(self.0.clone().sqrt())
    }
    fn exp(&self) -> Self {
        Mpf(self.0.clone().exp())
    }
    fn exp_m1(&self) -> Self {
        Mpf(self.0.clone().exp_m1())
    }
    fn ln(&self) -> Self {
        Mpf(self.0.clone().ln())
    }
    fn sin_cos(&self) -> (Self, Self) {
        let (s, c) = self.0.clone().sin_cos(Float::new(P));
        (Mpf(s), Mpf(c))
    }
    fn atan2(&self, x: &Self) -> Self {
        Mpf(self.0.clone().atan2(&x.0))
    }
    fn round(&self) -> Self {
        Mpf(self.0.clone().round())
    }
    fn floor(&self) -> Self {
        Mpf(self.0.clone().floor())
    }
    fn powi(&self, n: i32) -> Self {
        Mpf(self.0.clone().pow(n))
    }
    fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
    fn hypot(&self, other: &Self) -> Self {
        Mpf(self.0.clone().hypot(&other.0))
    }
    fn ln_u64(n: u64) -> Self {
        Mpf(Float::with_val(P, n).ln())
    }

    fn reduce_mod_2pi(&self) -> Self {
        Mpf(Float::with_val(P, reduce_float(&self.0, 2 * P)))
    }

    fn mul_ln_mod_2pi(t: &Self, n: u64, guard_bits: u32) -> Self {
        let work = P + guard_bits;
        let ln = Float::with_val(work, n).ln();
        let theta = Float::with_val(work, &t.0 * &ln);
        Mpf(Float::with_val(P, reduce_float(&theta, 2 * work)))
    }
}

/// Reduction of `x` modulo 2π carried out at `work` bits.
fn reduce_float(x: &Float, work: u32) -> Float {
    let two_pi = Float::with_val(work, Constant::Pi) * 2u32;
    let k = Float::with_val(work, x / &two_pi).round();
    if k.is_zero() {
        return Float::with_val(work, x);
    }
    let mut r = Float::with_val(work, x);
    r -= Float::with_val(work, &k * &two_pi);
    r
}

/// Total order helper for partially ordered reals; NaN compares equal.
/// Converts between scalar types through a round-tripping decimal string.
pub fn convert_real<T: Real, U: Real>(x: &T) -> U {
    U::parse_decimal(&x.to_decimal_string()).expect("finite value")
}

pub fn cmp_real<T: Real>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_reduction_of_two_pi_is_zero() {
        let r = (2.0 * std::f64::consts::PI).reduce_mod_2pi();
        assert!(r.abs() < 4.0 * f64::EPSILON, "{r}");
        assert_eq!(0.0f64.reduce_mod_2pi(), 0.0);
    }

    #[test]
    fn mpf_round_trips_through_decimal() {
        let x = Mpf::<128>::parse_decimal("0.1").unwrap() / Mpf::<128>::from_u64(3);
        let back = Mpf::<128>::parse_decimal(&x.to_decimal_string()).unwrap();
        assert_eq!(x, back);
    }

    #[test]
    fn ratio_conversion_handles_huge_terms() {
        let big = BigInt::from(10u32).pow(400u32);
        let q = BigRational::new(big.clone() + 1u32, big * 3u32);
        assert!((f64::from_ratio(&q) - 1.0 / 3.0).abs() < 1e-16);
        let m = Mpf::<256>::from_ratio(&q).to_f64();
        assert!((m - 1.0 / 3.0).abs() < 1e-16);
    }
}
