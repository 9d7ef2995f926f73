//! Exact even-index Bernoulli numbers.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rug::ops::Pow;
use rug::Float;

use crate::real::to_rug_rational;

/// Largest `l` for which `B_{2l}` is tabulated.
pub const MAX_HALF_INDEX: usize = 300;

static EVEN: OnceLock<Vec<BigRational>> = OnceLock::new();

fn build_even(n: usize) -> Vec<BigRational> {
    // Tangent numbers T_1..T_n by the in-place recurrence of Brent and Harvey.
    let mut tan = vec![BigInt::zero(); n + 1];
    tan[1] = BigInt::one();
    for k in 2..=n {
        tan[k] = &tan[k - 1] * BigInt::from(k - 1);
    }
    for k in 2..=n {
        for j in k..=n {
            tan[j] = &tan[j - 1] * BigInt::from(j - k) + &tan[j] * BigInt::from(j - k + 2);
        }
    }
    let mut out = Vec::with_capacity(n + 1);
    out.push(BigRational::one());
    for (k, t) in tan.iter().enumerate().skip(1) {
        let four_k = BigInt::one() << (2 * k);
        let den = &four_k * (&four_k - 1u32);
        let mut num = t * BigInt::from(2 * k);
        if k % 2 == 0 {
            num = -num;
        }
        out.push(BigRational::new(num, den));
    }
    out
}

fn table() -> &'static [BigRational] {
    EVEN.get_or_init(|| build_even(MAX_HALF_INDEX))
}

/// `B_{2l}` for `0 ≤ l ≤ MAX_HALF_INDEX`.
pub fn bernoulli_even(l: usize) -> &'static BigRational {
    &table()[l]
}

/// `B_n` with the convention `B_1 = -1/2`.
pub fn bernoulli(n: usize) -> BigRational {
    match n {
        1 => BigRational::new(BigInt::from(-1), BigInt::from(2)),
        n if n % 2 == 1 => BigRational::zero(),
        n => bernoulli_even(n / 2).clone(),
    }
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `B_{2l} / (2l)!`.
pub fn bernoulli_over_factorial(l: usize) -> BigRational {
    bernoulli_even(l) / BigRational::from_integer(factorial(2 * l))
}

/// `B_{2l} / (2l)` for `l ≥ 1`.
pub fn bernoulli_over_index(l: usize) -> BigRational {
    assert!(l >= 1);
    bernoulli_even(l) / BigRational::from_integer(BigInt::from(2 * l))
}

/// Working precision of the cached floating-point Bernoulli constants.
pub const CACHE_BITS: u32 = 1088;

/// Highest derivative order with cached Laurent coefficients.
pub const LAURENT_MAX_ORDER: usize = 64;

/// Floating-point images of the exact constants, shared by every context.
pub(crate) struct FloatCache {
    pub over_factorial: Vec<Float>,
    pub over_index: Vec<Float>,
    /// `laurent[ℓ][l] = B_{2l} / (2l) / (2l-ℓ-1)!`, zero when `2l ≤ ℓ`.
    pub laurent: Vec<Vec<Float>>,
}

static FLOATS: OnceLock<FloatCache> = OnceLock::new();

pub(crate) fn float_cache() -> &'static FloatCache {
    FLOATS.get_or_init(|| {
        let conv = |q: &BigRational| Float::with_val(CACHE_BITS, &to_rug_rational(q));
        let over_factorial: Vec<Float> =
            (0..=MAX_HALF_INDEX).map(|l| conv(&bernoulli_over_factorial(l))).collect();
        let over_index: Vec<Float> = (0..=MAX_HALF_INDEX)
            .map(|l| if l == 0 { Float::new(CACHE_BITS) } else { conv(&bernoulli_over_index(l)) })
            .collect();
        // 1/k! for k < 2·MAX_HALF_INDEX
        let mut inv_fact = vec![Float::with_val(CACHE_BITS, 1)];
        for k in 1..2 * MAX_HALF_INDEX {
            let next = Float::with_val(CACHE_BITS, &inv_fact[k - 1] / k as u32);
            inv_fact.push(next);
        }
        let laurent = (0..=LAURENT_MAX_ORDER)
            .map(|ell| {
                (0..=MAX_HALF_INDEX)
                    .map(|l| {
                        if l == 0 || 2 * l <= ell {
                            Float::new(CACHE_BITS)
                        } else {
                            Float::with_val(CACHE_BITS, &over_index[l] * &inv_fact[2 * l - ell - 1])
                        }
                    })
                    .collect()
            })
            .collect();
        FloatCache { over_factorial, over_index, laurent }
    })
}

/// `ζ(2l)` for `l ≥ 1`, from `ζ(2l) = |B_{2l}| (2π)^{2l} / (2 (2l)!)`.
pub fn zeta_even(l: usize) -> f64 {
    assert!((1..=MAX_HALF_INDEX).contains(&l));
    let q = bernoulli_over_factorial(l).abs();
    let mut x = Float::with_val(128, &to_rug_rational(&q));
    let two_pi = Float::with_val(128, rug::float::Constant::Pi) * 2u32;
    x *= two_pi.pow(2 * l as u32) / 2u32;
    x.to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn first_values() {
        assert_eq!(bernoulli(0), q(1, 1));
        assert_eq!(bernoulli(1), q(-1, 2));
        assert_eq!(bernoulli(2), q(1, 6));
        assert_eq!(bernoulli(4), q(-1, 30));
        assert_eq!(bernoulli(6), q(1, 42));
        assert_eq!(bernoulli(8), q(-1, 30));
        assert_eq!(bernoulli(10), q(5, 66));
        assert_eq!(bernoulli(12), q(-691, 2730));
        assert_eq!(bernoulli(14), q(7, 6));
        assert_eq!(bernoulli(7), q(0, 1));
    }

    #[test]
    fn matches_recurrence() {
        // sum_{k<n} C(n+1,k) B_k = -(n+1) B_n ... i.e. sum_{k=0}^{n} C(n+1,k) B_k = 0
        for n in 1..40usize {
            let mut acc = BigRational::zero();
            let mut binom = BigInt::one();
            for k in 0..=n {
                acc += bernoulli(k) * BigRational::from_integer(binom.clone());
                binom = binom * BigInt::from(n + 1 - k) / BigInt::from(k + 1);
            }
            assert!(acc.is_zero(), "n={n}");
        }
    }

    #[test]
    fn zeta_even_values() {
        let pi = std::f64::consts::PI;
        assert!((zeta_even(1) - pi * pi / 6.0).abs() < 1e-15);
        assert!((zeta_even(2) - pi.powi(4) / 90.0).abs() < 1e-15);
        assert!((zeta_even(30) - 1.0).abs() < 1e-17);
    }
}
