//! Taylor coefficients `c_j(s) = f_s^{(j)}(0)/j!` of
//! `f_s(z) = exp(-s (log(1+z) - z))` and the truncation factor `ε_m(s, u)`.

use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::bernoulli::factorial;
use crate::complex::{cmul, czero};
use crate::context::ComplexPoint;
use crate::error::{Error, Result};
use crate::real::Real;

/// Exact integers `β_{j,l,η}` with `w_{j,l}(s) = Σ_η β_{j,l,η} s^η`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    m_max: usize,
    // rows[j][l][η], with l ≤ 2 m_max - j so that every stored row can be
    // rechecked against the one before it.
    rows: Vec<Vec<Vec<BigInt>>>,
    factorials: Vec<BigInt>,
}

fn eta_len(j: usize, l: usize) -> usize {
    (j + l) / 2 + 1
}

/// Runs the recursion `β_{j+1,l,η} = (l+1)β_{j,l+1,η} - Σ_{α=1}^{l} (-1)^α β_{j,l-α,η-1}`.
pub fn build_beta_table(m_max: usize) -> CoefficientTable {
    let width = 2 * m_max;
    let mut rows: Vec<Vec<Vec<BigInt>>> = Vec::with_capacity(m_max + 1);
    let mut row0: Vec<Vec<BigInt>> = (0..=width).map(|l| vec![BigInt::zero(); eta_len(0, l)]).collect();
    row0[0][0] = BigInt::one();
    rows.push(row0);
    for j in 0..m_max {
        let next = next_row(&rows[j], j, width - j - 1);
        rows.push(next);
    }
    let factorials = (0..=m_max).map(factorial).collect();
    CoefficientTable { m_max, rows, factorials }
}

fn next_row(prev: &[Vec<BigInt>], j: usize, l_top: usize) -> Vec<Vec<BigInt>> {
    let get = |l: usize, eta: usize| -> BigInt {
        prev.get(l).and_then(|r| r.get(eta)).cloned().unwrap_or_default()
    };
    (0..=l_top)
        .map(|l| {
            (0..eta_len(j + 1, l))
                .map(|eta| {
                    let mut acc = get(l + 1, eta) * BigInt::from(l + 1);
                    if eta > 0 {
                        for alpha in 1..=l {
                            let term = get(l - alpha, eta - 1);
                            if alpha % 2 == 1 {
                                acc += term;
                            } else {
                                acc -= term;
                            }
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

impl CoefficientTable {
    pub fn m_max(&self) -> usize {
        self.m_max
    }

    /// `β_{j,l,η}`, zero outside the stored range.
    pub fn beta(&self, j: usize, l: usize, eta: usize) -> BigInt {
        self.rows
            .get(j)
            .and_then(|r| r.get(l))
            .and_then(|r| r.get(eta))
            .cloned()
            .unwrap_or_default()
    }

    /// Largest `l` stored for row `j`.
    pub fn l_top(&self, j: usize) -> usize {
        self.rows[j].len() - 1
    }

    /// Coefficients of `w_{j,l}(s)` in increasing powers of `s`.
    pub fn w_poly(&self, j: usize, l: usize) -> Vec<BigInt> {
        let mut out: Vec<BigInt> = self.rows[j][l].clone();
        while out.len() > 1 && out.last().is_some_and(|c| c.is_zero()) {
            out.pop();
        }
        out
    }

    pub fn factorial(&self, j: usize) -> &BigInt {
        &self.factorials[j]
    }

    /// Recomputes entry `(j, l, η)` from row `j - 1` (or the initial row).
    pub fn recursion_value(&self, j: usize, l: usize, eta: usize) -> BigInt {
        if j == 0 {
            return if l == 0 && eta == 0 { BigInt::one() } else { BigInt::zero() };
        }
        let prev = &self.rows[j - 1];
        let get = |l: usize, eta: usize| -> BigInt {
            prev.get(l).and_then(|r| r.get(eta)).cloned().unwrap_or_default()
        };
        let mut acc = get(l + 1, eta) * BigInt::from(l + 1);
        if eta > 0 {
            for alpha in 1..=l {
                let term = get(l - alpha, eta - 1);
                if alpha % 2 == 1 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
        }
        acc
    }

    /// Iterates `(j, l, η, β)` over the part of the table with `l ≤ m_max`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, &BigInt)> + '_ {
        let m = self.m_max;
        self.rows.iter().enumerate().flat_map(move |(j, row)| {
            row.iter().enumerate().take(m + 1).flat_map(move |(l, etas)| {
                etas.iter().enumerate().map(move |(eta, b)| (j, l, eta, b))
            })
        })
    }

    /// Adds one to a stored entry. Used to exercise the verification suites.
    #[doc(hidden)]
    pub fn perturb(&mut self, j: usize, l: usize, eta: usize) -> Result<()> {
        let cell = self
            .rows
            .get_mut(j)
            .and_then(|r| r.get_mut(l))
            .and_then(|r| r.get_mut(eta))
            .ok_or_else(|| Error::Parameter(format!("no table entry ({j},{l},{eta})")))?;
        *cell += 1u32;
        Ok(())
    }

    /// Exact `β_{j,0,η} / j!` for every `η`.
    pub fn c_poly(&self, j: usize) -> Vec<BigRational> {
        self.w_poly(j, 0)
            .into_iter()
            .map(|b| BigRational::new(b, self.factorials[j].clone()))
            .collect()
    }
}

static SHARED: Mutex<Option<Arc<CoefficientTable>>> = Mutex::new(None);

/// Process-wide table covering at least `m_max`.
pub fn shared_table(m_max: usize) -> Arc<CoefficientTable> {
    let mut guard = SHARED.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(t) = guard.as_ref() {
        if t.m_max >= m_max {
            return Arc::clone(t);
        }
    }
    let built = Arc::new(build_beta_table(m_max.max(20)));
    *guard = Some(Arc::clone(&built));
    built
}

/// `c_0(s), ..., c_m(s)` with `c_j = Σ_η β_{j,0,η} s^η / j!`.
pub fn c_coeffs<T: Real>(
    s: &ComplexPoint<T>,
    m: usize,
    table: &CoefficientTable,
) -> Result<Vec<Complex<T>>> {
    if m > table.m_max {
        return Err(Error::Table { requested: m, available: table.m_max });
    }
    let sv = s.s();
    Ok((0..=m)
        .map(|j| {
            // Horner in s.
            let coeffs = table.c_poly(j);
            let mut acc = czero();
            for c in coeffs.iter().rev() {
                acc = cmul(&acc, &sv);
                acc.re += T::from_ratio(c);
            }
            acc
        })
        .collect())
}

/// `ln ε_m(s, u)`; see [`epsilon_m`].
pub fn ln_epsilon_m(abs_s: f64, u: u64, m: usize) -> f64 {
    assert!(u >= 1, "u must be positive");
    let mf = m as f64;
    let ln_u = (u as f64).ln();
    if mf <= abs_s / 4.0 {
        let n = mf + 1.0;
        3.5f64.ln() + 0.78 * n + 0.5 * n * abs_s.ln() - 0.5 * n * n.ln() - n * ln_u
    } else {
        mf * std::f64::consts::LN_2 + 0.194 * abs_s - mf * ln_u
    }
}

/// Truncation factor
/// `3.5 e^{0.78(m+1)} |s|^{(m+1)/2} / ((m+1)^{(m+1)/2} u^{m+1})` for `m ≤ |s|/4`,
/// else `2^m e^{0.194|s|} / u^m`.
///
/// Evaluated through the logarithm; an underflowing result is clamped to the
/// smallest normal `f64` so it stays an upper bound.
pub fn epsilon_m(abs_s: f64, u: u64, m: usize) -> f64 {
    let v = ln_epsilon_m(abs_s, u, m).exp();
    if v < f64::MIN_POSITIVE {
        f64::MIN_POSITIVE
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_closed_forms() {
        let t = build_beta_table(8);
        let ints = |v: &[i64]| v.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
        assert_eq!(t.w_poly(2, 0), ints(&[0, 1]));
        assert_eq!(t.w_poly(4, 0), ints(&[0, 6, 3]));
        assert_eq!(t.w_poly(8, 0), ints(&[0, 5040, 7308, 2380, 105]));
    }

    #[test]
    fn perturbation_is_visible() {
        let mut t = build_beta_table(4);
        t.perturb(3, 1, 1).unwrap();
        assert_ne!(t.beta(3, 1, 1), t.recursion_value(3, 1, 1));
        assert!(t.perturb(30, 0, 0).is_err());
    }

    #[test]
    fn epsilon_branches() {
        let e = epsilon_m(1e4, 200, 0);
        assert!((e - 3.5 * 0.78f64.exp() * 100.0 / 200.0).abs() < 1e-12);
        let e2 = epsilon_m(4.0, 10, 2);
        assert!((e2 - 4.0 * 0.776f64.exp() / 100.0).abs() < 1e-15);
    }
}
