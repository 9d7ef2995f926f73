//! Self-check suites: character linearisation, the twisted-sum decomposition,
//! the coefficient table, and agreement of the geometric-sum strategies.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bernoulli::factorial;
use crate::coefficients::CoefficientTable;
use crate::complex::{cabs_f64, expi};
use crate::context::Context;
use crate::dirichlet::{
    build_character, twisted_geom_sum, twisted_geom_sum_direct, CharacterTable,
    PrimePowerCharacter,
};
use crate::error::{Error, Result};
use crate::geomsum::{
    em_geom_deriv, geom_derivs_closed, geom_derivs_direct, geom_derivs_em, GeomDerivRequest,
    GeomDerivs,
};
use crate::real::Real;

/// Moduli `(p, a)` covered by default.
pub const DEFAULT_MODULI: [(u64, u32); 5] = [(3, 2), (3, 3), (2, 4), (5, 2), (7, 2)];

/// Closed forms of `w_{j,0}(s)`, coefficients in increasing powers of `s`.
pub const W_CLOSED_FORMS: [&[i64]; 9] = [
    &[1],
    &[0],
    &[0, 1],
    &[0, -2],
    &[0, 6, 3],
    &[0, -24, -20],
    &[0, 120, 130, 15],
    &[0, -720, -924, -210],
    &[0, 5040, 7308, 2380, 105],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Postnikov,
    Gkr,
    Beta,
    Regime,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Postnikov, Suite::Gkr, Suite::Beta, Suite::Regime];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Postnikov => "postnikov",
            Suite::Gkr => "gkr",
            Suite::Beta => "beta",
            Suite::Regime => "regime",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown suite '{s}'")))
    }
}

/// Outcome of one suite; `failure` describes the first failing case.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: usize,
    pub failure: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.failure {
            None => write!(f, "{}: ok ({} cases)", self.suite, self.cases),
            Some(msg) => write!(f, "{}: FAILED after {} cases: {msg}", self.suite, self.cases),
        }
    }
}

fn all_characters(p: u64, a: u32) -> Result<Vec<PrimePowerCharacter>> {
    let q = p.pow(a);
    let phi = q / p * (p - 1);
    (0..phi).map(|i| build_character(p, a, i)).collect()
}

/// `χ(1 + p^b x) = e^{2πi L x/p^{a-b}}` for every `x`, every character, to `1e-14`.
pub fn postnikov_suite(moduli: &[(u64, u32)]) -> SuiteReport {
    let ctx = Context::<f64>::new();
    let mut cases = 0;
    for &(p, a) in moduli {
        let chars = match all_characters(p, a) {
            Ok(c) => c,
            Err(e) => return fail(Suite::Postnikov, cases, format!("mod {p}^{a}: {e}")),
        };
        for chi in chars {
            let (pb, qs, l) = (chi.p_b(), chi.p_a_minus_b(), chi.postnikov_l());
            for x in 0..qs {
                cases += 1;
                let lhs = chi.value(1 + pb * x, &ctx);
                let rhs = expi(&(2.0 * PI * ((l * x) % qs) as f64 / qs as f64));
                let err = (lhs - rhs).norm();
                if err > 1e-14 {
                    return fail(
                        Suite::Postnikov,
                        cases,
                        format!("mod {p}^{a}, index {}, x = {x}: error {err:e}", chi.index()),
                    );
                }
            }
        }
    }
    SuiteReport { suite: Suite::Postnikov, cases, failure: None }
}

/// Relative discrepancy between the decomposition and direct summation of
/// `Σ_{k<K} χ(v+k)e^{kz}`, measured against `max(|direct|, 1)`.
pub fn gkr_discrepancy<T: Real>(
    z: &Complex<T>,
    chi: &CharacterTable<T>,
    v: u64,
    k: u64,
    ctx: &Context<T>,
) -> f64 {
    let direct = twisted_geom_sum_direct(z, chi, v, k);
    let dec = twisted_geom_sum(z, chi, v, k, ctx);
    cabs_f64(&(dec - &direct)) / cabs_f64(&direct).max(1.0)
}

/// Random `z` with `-1/(2p^b) ≤ Re z ≤ 0` and `|Im z| ≤ π`.
pub fn random_twisted_z(rng: &mut ChaCha8Rng, pb: u64) -> Complex<f64> {
    let re = -rng.gen::<f64>() * 0.5 / pb as f64;
    let im = (2.0 * rng.gen::<f64>() - 1.0) * PI;
    Complex::new(re, im)
}

/// Decomposition against direct summation: three `(v, K)` pairs per character,
/// 20 random `z` each, relative error at most `1e-12`.
pub fn gkr_suite<T: Real>(moduli: &[(u64, u32)], seed: u64, ctx: &Context<T>) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = 0;
    for &(p, a) in moduli {
        let chars = match all_characters(p, a) {
            Ok(c) => c,
            Err(e) => return fail(Suite::Gkr, cases, format!("mod {p}^{a}: {e}")),
        };
        for chi in chars {
            let pb = chi.p_b();
            let index = chi.index();
            let table = CharacterTable::new(chi, ctx);
            for _ in 0..3 {
                let v = rng.gen_range(1..=1000u64);
                let k = rng.gen_range(1..=500u64);
                for _ in 0..20 {
                    cases += 1;
                    let zf = random_twisted_z(&mut rng, pb);
                    let z = Complex::new(T::from_f64(zf.re), T::from_f64(zf.im));
                    let err = gkr_discrepancy(&z, &table, v, k, ctx);
                    if !(err <= 1e-12) {
                        return fail(
                            Suite::Gkr,
                            cases,
                            format!(
                                "mod {p}^{a}, index {index}, v = {v}, K = {k}, z = {zf}: relative error {err:e}"
                            ),
                        );
                    }
                }
            }
        }
    }
    SuiteReport { suite: Suite::Gkr, cases, failure: None }
}

/// `(j+l)! 2^{l+1} / l!`.
pub fn beta_magnitude_bound(j: usize, l: usize) -> BigInt {
    factorial(j + l) * (BigInt::from(1) << (l + 1)) / factorial(l)
}

/// Closed forms, a recomputation of every entry from the recursion, and the
/// bound `|β_{j,l,η}| ≤ (j+l)! 2^{l+1}/l!`.
pub fn beta_suite(table: &CoefficientTable) -> SuiteReport {
    let mut cases = 0;
    for (j, expect) in W_CLOSED_FORMS.iter().enumerate() {
        if j > table.m_max() {
            break;
        }
        cases += 1;
        let want: Vec<BigInt> = expect.iter().map(|&x| BigInt::from(x)).collect();
        let got = table.w_poly(j, 0);
        if got != want {
            let eta = (0..want.len().max(got.len()))
                .find(|&e| got.get(e) != want.get(e))
                .unwrap_or(0);
            return fail(
                Suite::Beta,
                cases,
                format!("closed form of w_{{{j},0}} differs at (j,l,η) = ({j},0,{eta})"),
            );
        }
    }
    for (j, l, eta, b) in table.entries() {
        cases += 1;
        if *b != table.recursion_value(j, l, eta) {
            return fail(Suite::Beta, cases, format!("recursion fails at (j,l,η) = ({j},{l},{eta})"));
        }
        if b.abs() > beta_magnitude_bound(j, l) {
            return fail(Suite::Beta, cases, format!("magnitude bound fails at (j,l,η) = ({j},{l},{eta})"));
        }
    }
    SuiteReport { suite: Suite::Beta, cases, failure: None }
}

/// One randomised admissible geometric-sum input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeCase {
    pub z: Complex<f64>,
    pub k: u64,
    pub j_max: usize,
}

/// `K ∈ [2, 2000]`, `j_max ≤ 8`, and `z` drawn so that roughly half the cases
/// fall in the small-`|z|` range handled by Euler–Maclaurin.
pub fn random_regime_case(rng: &mut ChaCha8Rng) -> RegimeCase {
    let k = rng.gen_range(2..=2000u64);
    let j_max = rng.gen_range(0..=8usize);
    let z = if rng.gen_bool(0.5) {
        let r = rng.gen::<f64>() * 10.0 * (j_max + 1) as f64 / (k - 1) as f64;
        let th = rng.gen::<f64>() * PI + PI / 2.0;
        let z = Complex::from_polar(r.min(0.5), th);
        Complex::new(z.re.max(-0.5), z.im)
    } else {
        Complex::new(-0.5 * rng.gen::<f64>(), (2.0 * rng.gen::<f64>() - 1.0) * PI)
    };
    RegimeCase { z, k, j_max }
}

/// Largest `|a_j - b_j| - (bound_a + bound_b)` over `j`; non-positive means agreement.
pub fn excess<T: Real>(a: &GeomDerivs<T>, b: &GeomDerivs<T>) -> f64 {
    (0..a.scaled.len())
        .map(|j| cabs_f64(&(a.scaled[j].clone() - &b.scaled[j])) - (a.bounds[j] + b.bounds[j]))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Outcome of the strategy comparison for one case.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeCheck {
    /// Worst excess of each pair over its combined bound: (direct, closed),
    /// (direct, EM), (closed, EM). `None` when the closed form is unavailable.
    pub excess: [Option<f64>; 3],
    /// Worst ratio of the observed EM remainder to `4(K-1)^{j+1}(2π)^{-2L}`
    /// over `L ≤ 4` and the `j` with `|z| + j/(K-1) ≤ 1`.
    pub nominal_ratio: Option<f64>,
}

pub fn check_regime_case<T: Real>(case: &RegimeCase, ctx: &Context<T>) -> Result<RegimeCheck> {
    let z = Complex::new(T::from_f64(case.z.re), T::from_f64(case.z.im));
    let req = GeomDerivRequest::new(z.clone(), case.k, case.j_max)?;
    let direct = geom_derivs_direct(&req, ctx);
    let em = geom_derivs_em(&req, None, ctx)?;
    let closed = geom_derivs_closed(&req, ctx).ok();
    let excess = [
        closed.as_ref().map(|c| excess(&direct, c)),
        Some(excess(&direct, &em)),
        closed.as_ref().map(|c| excess(c, &em)),
    ];
    let x = (case.k - 1) as f64;
    let az = case.z.norm();
    let mut nominal_ratio: Option<f64> = None;
    for j in 0..=case.j_max {
        if az + j as f64 / x > 1.0 {
            continue;
        }
        let exact = direct.unscaled(j);
        let slack = direct.unscaled_bound(j);
        for big_l in 1..=4 {
            let (v, nominal) = em_geom_deriv(&z, case.k, j, big_l, ctx)?;
            let observed = (cabs_f64(&(v - &exact)) - slack).max(0.0);
            let ratio = observed / nominal;
            nominal_ratio = Some(nominal_ratio.map_or(ratio, |r: f64| r.max(ratio)));
        }
    }
    Ok(RegimeCheck { excess, nominal_ratio })
}

/// Pairwise agreement of the three strategies within their bounds, and the
/// customary Euler–Maclaurin remainder bound where it applies.
pub fn regime_suite<T: Real>(n_cases: usize, seed: u64, ctx: &Context<T>) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n_cases {
        let case = random_regime_case(&mut rng);
        let check = match check_regime_case(&case, ctx) {
            Ok(c) => c,
            Err(e) => return fail(Suite::Regime, i + 1, format!("{case:?}: {e}")),
        };
        if let Some(bad) = check.excess.iter().flatten().find(|&&e| !(e <= 0.0)) {
            return fail(Suite::Regime, i + 1, format!("{case:?}: strategies disagree by {bad:e} beyond bounds"));
        }
        if let Some(r) = check.nominal_ratio.filter(|&r| !(r <= 1.0)) {
            return fail(Suite::Regime, i + 1, format!("{case:?}: EM remainder {r}x the nominal bound"));
        }
    }
    SuiteReport { suite: Suite::Regime, cases: n_cases, failure: None }
}

fn fail(suite: Suite, cases: usize, msg: String) -> SuiteReport {
    SuiteReport { suite, cases, failure: Some(msg) }
}

/// Options for [`run_suites`].
#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub suites: Vec<Suite>,
    pub moduli: Vec<(u64, u32)>,
    pub regime_cases: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            suites: Suite::ALL.to_vec(),
            moduli: DEFAULT_MODULI.to_vec(),
            regime_cases: 500,
            seed: 20,
        }
    }
}

/// Runs the selected suites in order against `table`.
pub fn run_suites<T: Real>(
    opts: &VerifyOptions,
    table: &CoefficientTable,
    ctx: &Context<T>,
) -> Vec<SuiteReport> {
    opts.suites
        .iter()
        .map(|s| match s {
            Suite::Postnikov => postnikov_suite(&opts.moduli),
            Suite::Gkr => gkr_suite(&opts.moduli, opts.seed, ctx),
            Suite::Beta => beta_suite(table),
            Suite::Regime => regime_suite(opts.regime_cases, opts.seed, ctx),
        })
        .collect()
}
