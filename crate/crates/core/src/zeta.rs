//! The Riemann zeta function by Taylor-weighted geometric-sum blocks, with
//! the Euler–Maclaurin formula as tail and as independent reference.

use std::fmt;
use std::f64::consts::PI;

use num_complex::Complex;

use crate::bernoulli::{zeta_even, MAX_HALF_INDEX};
use crate::coefficients::{c_coeffs, epsilon_m, ln_epsilon_m, shared_table};
use crate::complex::{cabs_f64, cdiv, cmul, cscale, czero};
use crate::context::{complex_inv_power, power_sum, roundoff_estimate, ComplexPoint, Context};
use crate::error::{Error, Result};
use crate::geomsum::{geom_sum_derivs, GeomDerivRequest, Regime};
use crate::real::Real;
use crate::schedule::{block_iter, build_schedule, validate_params, EvalParams};

/// Which formula produced a value and which bounds it carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Blocks plus the explicit tail bound.
    Theorem1Tail,
    /// Blocks plus Euler–Maclaurin corrections at `M`.
    EmTail,
    /// Plain Euler–Maclaurin summation.
    EmOnly,
    /// Plain partial sum plus the two extra terms.
    Direct,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Theorem1Tail => "theorem1-tail",
            Method::EmTail => "em-tail",
            Method::EmOnly => "em-only",
            Method::Direct => "direct",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Blocks handled by the direct, closed-form and Euler–Maclaurin regimes.
    pub regime_counts: [u64; 3],
    /// Largest rescaled Laurent magnitude met in closed-form blocks.
    pub max_laurent_magnitude: f64,
}

/// A value together with its certified bounds and the parameters used.
#[derive(Debug, Clone)]
pub struct EvalResult<T: Real> {
    pub value: Complex<T>,
    /// `ε_m · 𝓑_M`, zero for methods without blocks.
    pub truncation_bound: f64,
    /// Bound on everything beyond `M` (or `N`).
    pub tail_bound: f64,
    /// Modelled round-off; an estimate, not a bound.
    pub roundoff_estimate: f64,
    /// Bound on the error of the geometric-sum evaluations themselves.
    pub block_rounding: f64,
    pub params: Option<EvalParams>,
    pub r: i64,
    pub block_count: u64,
    pub terms_evaluated: u64,
    pub method: Method,
    pub precision_bits: u32,
    pub diagnostics: Diagnostics,
}

impl<T: Real> EvalResult<T> {
    /// `truncation_bound + tail_bound`.
    pub fn certified_bound(&self) -> f64 {
        self.truncation_bound + self.tail_bound
    }
}

/// `B_r` for one block together with a bound on its evaluation error.
#[derive(Debug, Clone)]
pub struct BlockValue<T: Real> {
    pub value: Complex<T>,
    pub bound: f64,
    pub regime: Regime,
    pub laurent_magnitude: Option<f64>,
}

/// `B_r(s, m) = Σ_{j≤m} c_j(s) g_K^{(j)}(-s/v) / v^j`, formed as
/// `Σ_j c_j (2(K-1)/v)^j · g_K^{(j)}/(2(K-1))^j`.
pub fn block_value<T: Real>(
    s: &ComplexPoint<T>,
    v: u64,
    k: u64,
    coeffs: &[Complex<T>],
    ctx: &Context<T>,
) -> Result<BlockValue<T>> {
    let m = coeffs.len() - 1;
    let vt = T::from_u64(v);
    let z = Complex::new(-(s.sigma().clone() / &vt), -(s.t().clone() / &vt));
    let req = GeomDerivRequest::new(z, k, m)?;
    let d = geom_sum_derivs(&req, ctx);
    let ratio = T::from_u64(2 * (k - 1)) / &vt;
    let ratio_f = (2 * (k - 1)) as f64 / v as f64;
    let mut factor = T::one();
    let mut factor_f = 1.0f64;
    let mut acc = czero::<T>();
    let mut bound = 0.0f64;
    for j in 0..=m {
        if j > 0 {
            factor *= &ratio;
            factor_f *= ratio_f;
        }
        let c = cscale(&coeffs[j], &factor);
        acc += cmul(&c, &d.scaled[j]);
        bound += cabs_f64(&coeffs[j]) * factor_f * d.bounds[j];
    }
    Ok(BlockValue { value: acc, bound, regime: d.regime, laurent_magnitude: d.laurent_magnitude })
}

/// `Σ_{n<v0} n^{-s} + Σ_r v_r^{-s} B_r(s, m)`.
struct MainSum<T: Real> {
    value: Complex<T>,
    rounding: f64,
    r: i64,
    blocks: u64,
    diagnostics: Diagnostics,
}

/// Evaluates `f` on every block, in parallel when the context asks for it,
/// and returns the results in block order.
pub(crate) fn map_blocks<T, R, F>(blocks: &[(u64, u64)], ctx: &Context<T>, f: F) -> Vec<R>
where
    T: Real,
    R: Send,
    F: Fn(u64, u64) -> R + Sync + Send,
{
    if ctx.threads() <= 1 || blocks.len() < 2 {
        return blocks.iter().map(|&(v, k)| f(v, k)).collect();
    }
    use rayon::prelude::*;
    match rayon::ThreadPoolBuilder::new().num_threads(ctx.threads()).build() {
        Ok(pool) => pool.install(|| blocks.par_iter().map(|&(v, k)| f(v, k)).collect()),
        Err(_) => blocks.iter().map(|&(v, k)| f(v, k)).collect(),
    }
}

fn main_sum<T: Real>(s: &ComplexPoint<T>, p: &EvalParams, ctx: &Context<T>) -> Result<MainSum<T>> {
    let table = shared_table(p.m);
    let coeffs = c_coeffs(s, p.m, &table)?;
    let schedule = build_schedule(p.u0, p.v0, p.cutoff)?;
    let blocks: Vec<(u64, u64)> = schedule.blocks().collect();
    let per_block = map_blocks(&blocks, ctx, |v, k| -> Result<(Complex<T>, BlockValue<T>)> {
        let b = block_value(s, v, k, &coeffs, ctx)?;
        let vs = complex_inv_power(v, s, ctx);
        Ok((cmul(&vs, &b.value), b))
    });
    let mut value = power_sum(s, p.v0, ctx);
    let mut rounding = 0.0f64;
    let mut diagnostics = Diagnostics::default();
    let sigma = s.sigma_f64();
    for (res, &(v, _)) in per_block.into_iter().zip(&blocks) {
        let (term, b) = res?;
        value += term;
        rounding += b.bound * (v as f64).powf(-sigma);
        diagnostics.regime_counts[b.regime.index()] += 1;
        if let Some(mag) = b.laurent_magnitude {
            diagnostics.max_laurent_magnitude = diagnostics.max_laurent_magnitude.max(mag);
        }
    }
    Ok(MainSum { value, rounding, r: schedule.r(), blocks: blocks.len() as u64, diagnostics })
}

/// `M^{-s}/2 + M^{1-s}/(s-1)`.
pub fn extra_terms<T: Real>(s: &ComplexPoint<T>, m: u64, ctx: &Context<T>) -> Complex<T> {
    let ms = complex_inv_power(m, s, ctx);
    let half = cscale(&ms, &T::from_f64(0.5));
    let mut sm1 = s.s();
    sm1.re -= T::one();
    half + cdiv(&cscale(&ms, &T::from_u64(m)), &sm1)
}

/// `𝔮(s) / (σ M^σ)`.
pub fn tail_bound_theorem1(abs_s: f64, sigma: f64, m: u64) -> f64 {
    ((abs_s + 3.0).ln() - sigma.ln() - sigma * (m as f64).ln()).exp()
}

/// `Σ_{r} v_r^{-σ} min{g_{K_r}(-σ/v_r), |csc(t/(2v_r))|}`.
///
/// Runs in `f64`; the cosecant branch is discarded when the sine is too close
/// to zero for its value to be trusted.
pub fn cal_b(sigma: f64, t: f64, u0: u64, v0: u64, cutoff: u64, bits: u32) -> Result<f64> {
    let floor = (2.0f64).powi(-(bits as i32) / 2).max(0.0);
    let mut acc = 0.0f64;
    for (v, k) in block_iter(u0, v0, cutoff)? {
        let vf = v as f64;
        let g = geom_bound(sigma / vf, k);
        let a = t / (2.0 * vf);
        acc += vf.powf(-sigma) * g.min(csc_bound(a, floor));
    }
    Ok(acc)
}

/// `g_K(-x) = Σ_{k<K} e^{-kx}` for `x ≥ 0`.
pub(crate) fn geom_bound(x: f64, k: u64) -> f64 {
    if x == 0.0 {
        return k as f64;
    }
    (-(k as f64) * x).exp_m1() / (-x).exp_m1()
}

/// Upper bound for `|csc a|`, infinite when `|sin a|` is below `floor` or
/// indistinguishable from zero.
pub(crate) fn csc_bound(a: f64, floor: f64) -> f64 {
    let sn = a.sin().abs();
    let slack = 4.0 * f64::EPSILON * (a.abs() + 1.0);
    if sn <= slack || sn < floor {
        f64::INFINITY
    } else {
        1.0 / (sn - slack)
    }
}

/// `v0^{-σ} + (M^{1-σ} - v0^{1-σ})/(1-σ)`, or `v0^{-σ} + log(M/v0)` at `σ = 1`.
pub fn cal_b_closed_bound(sigma: f64, v0: u64, cutoff: u64) -> f64 {
    let v = v0 as f64;
    let m = cutoff as f64;
    if (sigma - 1.0).abs() < 1e-15 {
        v.powf(-sigma) + (m / v).ln()
    } else {
        v.powf(-sigma) + (m.powf(1.0 - sigma) - v.powf(1.0 - sigma)) / (1.0 - sigma)
    }
}

/// `ε_m(s, u0) · 𝓑`, multiplied in log-space.
pub fn truncation_bound(abs_s: f64, u0: u64, m: usize, cal_b: f64) -> f64 {
    if cal_b <= 0.0 {
        return 0.0;
    }
    let v = (ln_epsilon_m(abs_s, u0, m) + cal_b.ln()).exp();
    if v == 0.0 {
        epsilon_m(abs_s, u0, m) * cal_b
    } else {
        v
    }
}

fn check_em_args(sigma: f64, n: u64, l1: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("Euler–Maclaurin needs N >= 2, got {n}")));
    }
    if !(1..=MAX_HALF_INDEX).contains(&l1) {
        return Err(Error::Domain(format!("L1 must lie in 1..={MAX_HALF_INDEX}, got {l1}")));
    }
    if sigma <= -((2 * l1 + 1) as f64) {
        return Err(Error::Domain("need sigma > -(2 L1 + 1)".into()));
    }
    Ok(())
}

/// `Σ_{ℓ=1}^{L1} B_{2ℓ}/(2ℓ)! · N^{-s} Π_{l=0}^{2ℓ-2} (s+l)/N`.
pub fn em_corrections<T: Real>(
    s: &ComplexPoint<T>,
    n: u64,
    l1: usize,
    ctx: &Context<T>,
) -> Complex<T> {
    let ns = complex_inv_power(n, s, ctx);
    let nt = T::from_u64(n);
    let inv_n2 = T::one() / (nt.clone() * &nt);
    let sv = s.s();
    let mut prod = cscale(&sv, &(T::one() / nt));
    let mut acc = czero::<T>();
    for ell in 1..=l1 {
        if ell > 1 {
            let mut a = sv.clone();
            a.re += T::from_u64(2 * ell as u64 - 3);
            let mut b = sv.clone();
            b.re += T::from_u64(2 * ell as u64 - 2);
            prod = cscale(&cmul(&prod, &cmul(&a, &b)), &inv_n2);
        }
        acc += cscale(&prod, ctx.bernoulli_over_factorial(ell));
    }
    cmul(&acc, &ns)
}

/// Remainder bound of the Euler–Maclaurin formula:
/// `ζ(2L1)/(π N^σ) · |s+2L1-1|/(σ+2L1-2) · Π_{l=0}^{2L1-2} |s+l|/(2πN)`.
pub fn em_tail_bound(sigma: f64, t: f64, n: u64, l1: usize) -> Result<f64> {
    check_em_args(sigma, n, l1)?;
    let denom = sigma + 2.0 * l1 as f64 - 2.0;
    if denom <= 0.0 {
        return Err(Error::Domain("sigma + 2 L1 - 2 must be positive".into()));
    }
    let nf = n as f64;
    let abs_shift = |l: f64| (sigma + l).hypot(t);
    let mut ln = zeta_even(l1).ln() - PI.ln() - sigma * nf.ln() + abs_shift(2.0 * l1 as f64 - 1.0).ln()
        - denom.ln();
    let ln_2pin = (2.0 * PI * nf).ln();
    for l in 0..=(2 * l1 - 2) {
        ln += abs_shift(l as f64).ln() - ln_2pin;
    }
    Ok(ln.exp())
}

/// `2πN ≥ e|s+2L1-1|` and `2L1-1 > log|s+2L1-1|/2 - log ε`, which together
/// force the remainder below `ε` for `σ ≥ 1/2`.
pub fn em_sufficient_condition(sigma: f64, t: f64, n: u64, l1: usize, target: f64) -> bool {
    let a = (sigma + 2.0 * l1 as f64 - 1.0).hypot(t);
    2.0 * PI * n as f64 >= std::f64::consts::E * a
        && (2 * l1) as f64 - 1.0 > 0.5 * a.ln() - target.ln()
}

fn base_result<T: Real>(value: Complex<T>, method: Method, ctx: &Context<T>) -> EvalResult<T> {
    EvalResult {
        value,
        truncation_bound: 0.0,
        tail_bound: 0.0,
        roundoff_estimate: 0.0,
        block_rounding: 0.0,
        params: None,
        r: -1,
        block_count: 0,
        terms_evaluated: 0,
        method,
        precision_bits: ctx.bits(),
        diagnostics: Diagnostics::default(),
    }
}

/// `ζ(s) ≈ Σ_{n<N} n^{-s} + N^{-s}/2 + N^{1-s}/(s-1) + Σ_{ℓ≤L1} T_{ℓ,N}(s)`.
pub fn zeta_euler_maclaurin<T: Real>(
    s: &ComplexPoint<T>,
    n: u64,
    l1: usize,
    ctx: &Context<T>,
) -> Result<EvalResult<T>> {
    let tail = em_tail_bound(s.sigma_f64(), s.t_f64(), n, l1)?;
    let value = power_sum(s, n, ctx) + extra_terms(s, n, ctx) + em_corrections(s, n, l1, ctx);
    let mut out = base_result(value, Method::EmOnly, ctx);
    out.tail_bound = tail;
    out.roundoff_estimate = roundoff_estimate(s.t_f64(), n, ctx.bits());
    out.terms_evaluated = n - 1 + l1 as u64;
    Ok(out)
}

/// `Σ_{n<M} n^{-s} + M^{-s}/2 + M^{1-s}/(s-1)` with the explicit tail bound.
pub fn zeta_direct<T: Real>(s: &ComplexPoint<T>, cutoff: u64, ctx: &Context<T>) -> Result<EvalResult<T>> {
    if cutoff < 1 {
        return Err(Error::Parameter("M must be positive".into()));
    }
    let value = power_sum(s, cutoff, ctx) + extra_terms(s, cutoff, ctx);
    let mut out = base_result(value, Method::Direct, ctx);
    out.tail_bound = tail_bound_theorem1(s.abs_s(), s.sigma_f64(), cutoff);
    out.roundoff_estimate = roundoff_estimate(s.t_f64(), cutoff, ctx.bits());
    out.terms_evaluated = cutoff - 1;
    Ok(out)
}

fn block_result<T: Real>(
    s: &ComplexPoint<T>,
    p: &EvalParams,
    ms: MainSum<T>,
    value: Complex<T>,
    method: Method,
    ctx: &Context<T>,
) -> Result<EvalResult<T>> {
    let cb = cal_b(s.sigma_f64(), s.t_f64(), p.u0, p.v0, p.cutoff, ctx.bits())?;
    let mut out = base_result(value, method, ctx);
    out.truncation_bound = truncation_bound(s.abs_s(), p.u0, p.m, cb);
    out.roundoff_estimate = roundoff_estimate(s.t_f64(), p.cutoff, ctx.bits());
    out.block_rounding = ms.rounding;
    out.params = Some(*p);
    out.r = ms.r;
    out.block_count = ms.blocks;
    out.terms_evaluated = p.v0 + (p.m as u64 + 1) * ms.blocks;
    out.diagnostics = ms.diagnostics;
    Ok(out)
}

/// Block formula with the explicit tail bound `𝔮(s)/(σ M^σ)`.
pub fn zeta_theorem1<T: Real>(
    s: &ComplexPoint<T>,
    p: &EvalParams,
    ctx: &Context<T>,
) -> Result<EvalResult<T>> {
    validate_params(s, p).into_result()?;
    let ms = main_sum(s, p, ctx)?;
    let value = ms.value.clone() + extra_terms(s, p.cutoff, ctx);
    let mut out = block_result(s, p, ms, value, Method::Theorem1Tail, ctx)?;
    out.tail_bound = tail_bound_theorem1(s.abs_s(), s.sigma_f64(), p.cutoff);
    Ok(out)
}

/// Block formula with Euler–Maclaurin corrections at `M` in place of the tail.
pub fn zeta_hybrid<T: Real>(
    s: &ComplexPoint<T>,
    p: &EvalParams,
    l1: usize,
    ctx: &Context<T>,
) -> Result<EvalResult<T>> {
    validate_params(s, p).into_result()?;
    let tail = em_tail_bound(s.sigma_f64(), s.t_f64(), p.cutoff, l1)?;
    let ms = main_sum(s, p, ctx)?;
    let value =
        ms.value.clone() + extra_terms(s, p.cutoff, ctx) + em_corrections(s, p.cutoff, l1, ctx);
    let mut out = block_result(s, p, ms, value, Method::EmTail, ctx)?;
    out.tail_bound = tail;
    out.terms_evaluated += l1 as u64;
    Ok(out)
}
