//! Geometric sums `g_K(z) = Σ_{k<K} e^{kz}` and their `z`-derivatives
//! `g_K^{(j)}(z) = Σ_{k<K} k^j e^{kz}`.
//!
//! Derivatives are returned scaled by `(2(K-1))^{-j}`, which keeps every entry
//! of moderate size. Three interchangeable strategies are provided, each with
//! an error bound: direct summation, the closed form through the Laurent
//! expansion of `y(z) = 1/(e^z - 1)`, and Euler–Maclaurin summation of
//! `x^j e^{zx}`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex;

use crate::bernoulli::{bernoulli_over_index, factorial, MAX_HALF_INDEX};
use crate::complex::{cabs_f64, cconj, cexp, cexpm1, cinv, cmul, cone, cpowers, cscale, czero};
use crate::context::{reduce_mod_2pi, Context};
use crate::error::{Error, Result};
use crate::real::Real;
use num_rational::BigRational;

/// Regime (b) is used when `|z| > CLOSED_FORM_FACTOR (j_max+1)/(K-1)`.
pub const CLOSED_FORM_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Direct,
    ClosedForm,
    EulerMaclaurin,
}

impl Regime {
    pub fn index(self) -> usize {
        match self {
            Regime::Direct => 0,
            Regime::ClosedForm => 1,
            Regime::EulerMaclaurin => 2,
        }
    }
}

/// A validated request: `-1/2 ≤ Re z ≤ 0`, `Im z` reduced into `[-π, π]`.
#[derive(Debug, Clone)]
pub struct GeomDerivRequest<T: Real> {
    z: Complex<T>,
    k: u64,
    j_max: usize,
}

impl<T: Real> GeomDerivRequest<T> {
    pub fn new(z: Complex<T>, k: u64, j_max: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Parameter("K must be at least 1".into()));
        }
        if !(z.re <= T::zero() && z.re >= T::from_f64(-0.5)) {
            return Err(Error::Domain(format!("Re z = {} outside [-1/2, 0]", z.re)));
        }
        let im = reduce_mod_2pi(&z.im)?;
        Ok(GeomDerivRequest { z: Complex::new(z.re, im), k, j_max })
    }

    pub fn z(&self) -> &Complex<T> {
        &self.z
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }
}

/// `g_K^{(j)}(z) / (2(K-1))^j` for `j ≤ j_max`, with absolute error bounds.
#[derive(Debug, Clone)]
pub struct GeomDerivs<T: Real> {
    pub regime: Regime,
    pub k: u64,
    pub scaled: Vec<Complex<T>>,
    pub bounds: Vec<f64>,
    /// Largest `|y^{(ℓ)}(z)| / (K-1)^ℓ` met in the closed form.
    pub laurent_magnitude: Option<f64>,
    /// Euler–Maclaurin order `L` when that regime ran.
    pub em_order: Option<usize>,
}

impl<T: Real> GeomDerivs<T> {
    /// `2(K-1)`.
    pub fn scale(&self) -> u64 {
        2 * (self.k - 1)
    }

    /// `g_K^{(j)}(z)` itself.
    pub fn unscaled(&self, j: usize) -> Complex<T> {
        if j == 0 {
            return self.scaled[0].clone();
        }
        let f = T::from_u64(self.scale()).powi(j as i32);
        cscale(&self.scaled[j], &f)
    }

    pub fn unscaled_bound(&self, j: usize) -> f64 {
        self.bounds[j] * (self.scale() as f64).powi(j as i32)
    }

    fn trivial(k: u64, j_max: usize) -> Self {
        let mut scaled = vec![czero(); j_max + 1];
        scaled[0] = cone();
        GeomDerivs {
            regime: Regime::Direct,
            k,
            scaled,
            bounds: vec![0.0; j_max + 1],
            laurent_magnitude: None,
            em_order: None,
        }
    }
}

fn ln_factorial(n: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let t = TABLE.get_or_init(|| {
        let mut v = vec![0.0; 4097];
        for k in 1..v.len() {
            v[k] = v[k - 1] + (k as f64).ln();
        }
        v
    });
    match t.get(n) {
        Some(&x) => x,
        None => {
            let x = n as f64;
            x * x.ln() - x + 0.5 * (2.0 * PI * x).ln() + 1.0 / (12.0 * x)
        }
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

fn kz<T: Real>(z: &Complex<T>, k: u64) -> Complex<T> {
    let kt = T::from_u64(k);
    Complex::new(z.re.clone() * &kt, (z.im.clone() * &kt).reduce_mod_2pi())
}

/// `g_K(z) = (e^{Kz} - 1)/(e^z - 1)`, summed directly when `e^z` is too close to 1.
pub fn geom_sum<T: Real>(z: &Complex<T>, k: u64, ctx: &Context<T>) -> Complex<T> {
    if k <= 1 {
        return if k == 1 { cone() } else { czero() };
    }
    let zr = Complex::new(z.re.clone(), z.im.reduce_mod_2pi());
    let den = cexpm1(&zr);
    let threshold = (2.0f64).powi(-(ctx.bits() as i32) / 2);
    if cabs_f64(&den) > threshold {
        let num = cexpm1(&kz(&zr, k));
        return cmul(&num, &cinv(&den));
    }
    if let Ok(req) = GeomDerivRequest::new(zr.clone(), k, 0) {
        return geom_sum_derivs(&req, ctx).scaled[0].clone();
    }
    let step = cexp(&zr);
    let mut e = cone();
    let mut acc = czero();
    for _ in 0..k {
        acc += &e;
        e = cmul(&e, &step);
    }
    acc
}

/// Regime dispatch: direct for `K ≤ 2π(j_max+1)`, closed form for
/// `|z| > 10(j_max+1)/(K-1)`, Euler–Maclaurin otherwise.
pub fn geom_sum_derivs<T: Real>(req: &GeomDerivRequest<T>, ctx: &Context<T>) -> GeomDerivs<T> {
    let (k, j_max) = (req.k, req.j_max);
    if k == 1 {
        return GeomDerivs::trivial(1, j_max);
    }
    let jp1 = (j_max + 1) as f64;
    if (k as f64) <= 2.0 * PI * jp1 {
        return geom_derivs_direct(req, ctx);
    }
    let az = cabs_f64(&req.z);
    if az > CLOSED_FORM_FACTOR * jp1 / (k - 1) as f64 {
        if let Ok(d) = geom_derivs_closed(req, ctx) {
            return d;
        }
    }
    geom_derivs_em(req, None, ctx).expect("K ≥ 2 and admissible z")
}

/// Strategy (a): `Σ_{k<K} (k/(2(K-1)))^j e^{kz}`.
pub fn geom_derivs_direct<T: Real>(req: &GeomDerivRequest<T>, ctx: &Context<T>) -> GeomDerivs<T> {
    let (k, j_max) = (req.k, req.j_max);
    if k == 1 {
        return GeomDerivs::trivial(1, j_max);
    }
    let two_x = 2 * (k - 1);
    let inv = T::one() / T::from_u64(two_x);
    let step = cexp(&req.z);
    let step_abs = req.z.re.to_f64().exp();
    let mut e: Complex<T> = cone();
    let mut e_abs = 1.0f64;
    let mut acc = vec![czero::<T>(); j_max + 1];
    let mut mass = vec![0.0f64; j_max + 1];
    for kk in 0..k {
        let u = T::from_u64(kk) * &inv;
        let uf = kk as f64 / two_x as f64;
        let mut p = T::one();
        let mut pf = 1.0f64;
        for j in 0..=j_max {
            if j > 0 {
                p *= &u;
                pf *= uf;
            }
            acc[j].re += e.re.clone() * &p;
            acc[j].im += e.im.clone() * &p;
            mass[j] += e_abs * pf;
        }
        e = cmul(&e, &step);
        e_abs *= step_abs;
    }
    let ops = (k as usize).saturating_add(j_max);
    GeomDerivs {
        regime: Regime::Direct,
        k,
        scaled: acc,
        bounds: mass.iter().map(|&m| ctx.rounding(m, ops)).collect(),
        laurent_magnitude: None,
        em_order: None,
    }
}

/// One derivative `y^{(ℓ)}(z)` from the Laurent series.
#[derive(Debug, Clone)]
pub struct LaurentDeriv<T: Real> {
    pub value: Complex<T>,
    /// Bound on the omitted terms.
    pub tail_bound: f64,
    /// Sum of the magnitudes of the included terms.
    pub mass: f64,
}

fn ln_laurent_term_bound(az: f64, ell: usize, l: usize) -> f64 {
    // 4 (2l-1)!/(2l-ℓ-1)! |z|^{2l-ℓ-1} / (2π)^{2l}
    let p = 2 * l - ell - 1;
    let mut v = 4f64.ln() + ln_factorial(2 * l - 1) - ln_factorial(p) - (2 * l) as f64 * (2.0 * PI).ln();
    if p > 0 {
        v += p as f64 * az.ln();
    }
    v
}

/// `⌈(ℓ+1)/2⌉`, the first Bernoulli index contributing to `y^{(ℓ)}`.
fn first_laurent_index(ell: usize) -> usize {
    (ell + 2) / 2
}

/// Bound on `Σ_{l > n} |B_{2l}/(2l)| |z|^{2l-ℓ-1}/(2l-ℓ-1)!`.
pub fn laurent_tail_bound(az: f64, ell: usize, n: usize) -> f64 {
    let mut l = (n + 1).max(first_laurent_index(ell));
    let ratio_base = az * az / (4.0 * PI * PI);
    let mut acc = 0.0f64;
    for _ in 0..4096 {
        let term = ln_laurent_term_bound(az, ell, l).exp();
        let lf = l as f64;
        let ell_f = ell as f64;
        let rho = (2.0 * lf + 1.0) * (2.0 * lf) / ((2.0 * lf + 1.0 - ell_f) * (2.0 * lf - ell_f)) * ratio_base;
        if rho < 0.9 {
            return acc + term / (1.0 - rho);
        }
        acc += term;
        l += 1;
    }
    f64::INFINITY
}

/// Smallest `n` with `laurent_tail_bound(az, ℓ, n) ≤ target`, capped at the table size.
pub fn laurent_terms_needed(az: f64, ell: usize, target: f64) -> usize {
    let mut n = first_laurent_index(ell) - 1;
    while n < MAX_HALF_INDEX && laurent_tail_bound(az, ell, n) > target {
        n += 1;
    }
    n
}

/// `y^{(ℓ)}(z)` for `ℓ ≤ l_max` with `y(z) = 1/(e^z - 1)`, summing the
/// Bernoulli series up to index `n_terms`.
pub fn y_laurent_derivs<T: Real>(
    z: &Complex<T>,
    l_max: usize,
    n_terms: usize,
    ctx: &Context<T>,
) -> Result<Vec<LaurentDeriv<T>>> {
    let az = cabs_f64(z);
    if az == 0.0 || az >= 2.0 * PI {
        return Err(Error::Domain(format!("Laurent series needs 0 < |z| < 2π, got |z| = {az}")));
    }
    let n = n_terms.min(MAX_HALF_INDEX);
    let powers = cpowers(z, 2 * n.max(1));
    let inv_z = cinv(z);
    let mut lead = inv_z.clone();
    let mut lead_abs = 1.0 / az;
    let mut out = Vec::with_capacity(l_max + 1);
    for ell in 0..=l_max {
        if ell > 0 {
            lead = cscale(&cmul(&lead, &inv_z), &T::from_i64(-(ell as i64)));
            lead_abs *= ell as f64 / az;
        }
        let mut value = lead.clone();
        let mut mass = lead_abs;
        if ell == 0 {
            value.re -= T::from_f64(0.5);
            mass += 0.5;
        }
        let l0 = first_laurent_index(ell);
        let owned;
        let coefs: &[T] = match ctx.laurent_coefficients(ell) {
            Some(c) => c,
            None => {
                owned = (0..=n)
                    .map(|l| {
                        if l < l0 {
                            T::zero()
                        } else {
                            T::from_ratio(
                                &(bernoulli_over_index(l)
                                    / BigRational::from_integer(factorial(2 * l - ell - 1))),
                            )
                        }
                    })
                    .collect::<Vec<T>>();
                &owned
            }
        };
        for l in l0..=n {
            let p = 2 * l - ell - 1;
            let c = &coefs[l];
            value.re += powers[p].re.clone() * c;
            value.im += powers[p].im.clone() * c;
            mass += c.to_f64().abs() * az.powi(p as i32);
        }
        out.push(LaurentDeriv { value, tail_bound: laurent_tail_bound(az, ell, n), mass });
    }
    Ok(out)
}

/// Strategy (b): `g_K^{(j)} = e^{Kz} Σ_ℓ C(j,ℓ) K^{j-ℓ} y^{(ℓ)} - y^{(j)}`, evaluated
/// in the rescaled form with `y^{(ℓ)}/(K-1)^ℓ`.
pub fn geom_derivs_closed<T: Real>(
    req: &GeomDerivRequest<T>,
    ctx: &Context<T>,
) -> Result<GeomDerivs<T>> {
    let (k, j_max) = (req.k, req.j_max);
    if k == 1 {
        return Ok(GeomDerivs::trivial(1, j_max));
    }
    let z = &req.z;
    let az = cabs_f64(z);
    if az == 0.0 {
        return Err(Error::Domain("closed form needs z != 0".into()));
    }
    let eps = ctx.eps();
    let mut n = 0;
    for ell in 0..=j_max {
        let lead = (ln_factorial(ell) - (ell as f64 + 1.0) * az.ln()).exp();
        n = n.max(laurent_terms_needed(az, ell, eps * lead / 8.0));
    }
    let ys = y_laurent_derivs(z, j_max, n, ctx)?;

    let x = k - 1;
    let xf = x as f64;
    let inv_x = T::one() / T::from_u64(x);
    let mut scale_t = T::one();
    let mut scale_f = 1.0f64;
    let mut yv = Vec::with_capacity(j_max + 1);
    let mut y_tail = Vec::with_capacity(j_max + 1);
    let mut y_mass = Vec::with_capacity(j_max + 1);
    let mut laurent_mag = 0.0f64;
    for (ell, y) in ys.iter().enumerate() {
        if ell > 0 {
            scale_t *= &inv_x;
            scale_f /= xf;
        }
        let v = cscale(&y.value, &scale_t);
        laurent_mag = laurent_mag.max(cabs_f64(&v));
        yv.push(v);
        y_tail.push(y.tail_bound * scale_f);
        y_mass.push(y.mass * scale_f);
    }

    let ekz = cexp(&kz(z, k));
    let ekz_abs = (k as f64 * z.re.to_f64()).exp();
    let r = T::from_u64(k) / T::from_u64(x);
    let rf = k as f64 / xf;
    let mut rp = vec![T::one()];
    for i in 1..=j_max {
        let next = rp[i - 1].clone() * &r;
        rp.push(next);
    }
    let mut scaled = Vec::with_capacity(j_max + 1);
    let mut bounds = Vec::with_capacity(j_max + 1);
    let mut half_pow = T::one();
    let half = T::from_f64(0.5);
    for j in 0..=j_max {
        if j > 0 {
            half_pow *= &half;
        }
        let mut sum = czero::<T>();
        let mut binom = T::one();
        let mut binom_f = 1.0f64;
        let mut tail = 0.0f64;
        let mut mass = 0.0f64;
        for ell in 0..=j {
            let w = binom.clone() * &rp[j - ell];
            sum.re += yv[ell].re.clone() * &w;
            sum.im += yv[ell].im.clone() * &w;
            let wf = binom_f * rf.powi((j - ell) as i32);
            tail += wf * y_tail[ell];
            mass += wf * y_mass[ell];
            if ell < j {
                binom = binom * T::from_u64((j - ell) as u64) / T::from_u64(ell as u64 + 1);
                binom_f = binom_f * (j - ell) as f64 / (ell + 1) as f64;
            }
        }
        let mut v = cmul(&ekz, &sum);
        v -= &yv[j];
        scaled.push(cscale(&v, &half_pow));
        let hp = 0.5f64.powi(j as i32);
        let phase = ekz_abs * mass * (k as f64) * az * eps * 2.0;
        let b = hp * (ekz_abs * tail + y_tail[j] + phase)
            + ctx.rounding(hp * (ekz_abs * mass + y_mass[j]), n + j + 8);
        bounds.push(b);
    }
    Ok(GeomDerivs {
        regime: Regime::ClosedForm,
        k,
        scaled,
        bounds,
        laurent_magnitude: Some(laurent_mag),
        em_order: None,
    })
}

/// `∫_0^1 u^j e^{wu} du` for `0 ≤ j ≤ j_max`.
///
/// Forward recursion while `j ≤ |w|`, backward recursion from a series start
/// value above that.
pub fn exp_moments<T: Real>(w: &Complex<T>, j_max: usize, ctx: &Context<T>) -> Vec<Complex<T>> {
    let a = cabs_f64(w);
    let mut out = vec![czero::<T>(); j_max + 1];
    if a == 0.0 {
        for (j, o) in out.iter_mut().enumerate() {
            *o = Complex::new(T::one() / T::from_u64(j as u64 + 1), T::zero());
        }
        return out;
    }
    let ew = cexp(w);
    let inv_w = cinv(w);
    let forward_top = if a > 1.0 { Some((a.floor() as usize).min(j_max)) } else { None };
    if let Some(top) = forward_top {
        out[0] = cmul(&cexpm1(w), &inv_w);
        for j in 1..=top {
            let mut v = ew.clone();
            v -= cscale(&out[j - 1], &T::from_u64(j as u64));
            out[j] = cmul(&v, &inv_w);
        }
        if top == j_max {
            return out;
        }
    }
    let start = j_max.max((2.0 * a).ceil() as usize) + 8;
    // I_start = e^w Σ_n (-w)^n / ((start+1)...(start+n+1))
    let neg_w = -w.clone();
    let mut term = Complex::new(T::one() / T::from_u64(start as u64 + 1), T::zero());
    let mut sum = term.clone();
    let eps = ctx.eps();
    let mut n = 0u64;
    loop {
        n += 1;
        term = cscale(&cmul(&term, &neg_w), &(T::one() / T::from_u64(start as u64 + n + 1)));
        sum += &term;
        if cabs_f64(&term) < eps * 1e-3 * cabs_f64(&sum) || n > 10_000 {
            break;
        }
    }
    let mut cur = cmul(&ew, &sum);
    let low = forward_top.map_or(0, |t| t + 1);
    for j in (low + 1..=start).rev() {
        // I_{j-1} = (e^w - w I_j)/j
        let mut v = ew.clone();
        v -= cmul(w, &cur);
        cur = cscale(&v, &(T::one() / T::from_u64(j as u64)));
        if j - 1 <= j_max {
            out[j - 1] = cur.clone();
        }
    }
    out
}

/// Remainder bound for the Euler–Maclaurin form of `g_K^{(j)}(z)`, divided by
/// `(K-1)^j`:
/// `4 (K-1) (2π)^{-2L} Σ_{l ≤ min(2L, j)} C(2L,l) j!/(j-l+1)! |z|^{2L-l} (K-1)^{-l}`.
pub fn em_remainder_bound(abs_z: f64, x: u64, j: usize, big_l: usize) -> f64 {
    let two_l = 2 * big_l;
    let lnx = (x as f64).ln();
    let base = 4f64.ln() + lnx - two_l as f64 * (2.0 * PI).ln();
    let mut terms = Vec::with_capacity(j.min(two_l) + 1);
    for l in 0..=j.min(two_l) {
        let p = two_l - l;
        if abs_z == 0.0 && p > 0 {
            continue;
        }
        let mut v = base + ln_factorial(two_l) - ln_factorial(l) - ln_factorial(p)
            + ln_factorial(j)
            - ln_factorial(j - l + 1)
            - l as f64 * lnx;
        if p > 0 {
            v += p as f64 * abs_z.ln();
        }
        terms.push(v);
    }
    log_sum_exp(&terms).exp()
}

/// `4 (K-1)^{j+1} (2π)^{-2L}`, the customary form of the remainder bound.
///
/// It dominates [`em_remainder_bound`] times `(K-1)^j` whenever
/// `|z| + j/(K-1) ≤ 1`.
pub fn em_nominal_bound(k: u64, j: usize, big_l: usize) -> f64 {
    let x = (k - 1) as f64;
    (4f64.ln() + (j as f64 + 1.0) * x.ln() - (2 * big_l) as f64 * (2.0 * PI).ln()).exp()
}

/// Smallest `L ≤ cap` whose remainder bound for all `j ≤ j_max` is below `target`.
pub fn em_order_for(abs_z: f64, x: u64, j_max: usize, target: f64, cap: usize) -> usize {
    for big_l in 1..=cap {
        if (0..=j_max).all(|j| em_remainder_bound(abs_z, x, j, big_l) <= target) {
            return big_l;
        }
    }
    cap
}

/// Normalised Euler–Maclaurin values `g_K^{(j)}(z)/(K-1)^j` for `Im z ≥ 0`,
/// with magnitudes for the rounding estimate.
fn em_core<T: Real>(
    z: &Complex<T>,
    x: u64,
    j_max: usize,
    big_l: usize,
    ctx: &Context<T>,
) -> (Vec<Complex<T>>, Vec<f64>) {
    let xt = T::from_u64(x);
    let xf = x as f64;
    let w = cscale(z, &xt);
    let aw = cabs_f64(&w);
    let az = cabs_f64(z);
    let ew = cexp(&w);
    let ew_abs = (w.re.to_f64()).exp();
    let moments = exp_moments(&w, j_max, ctx);
    let two_l = 2 * big_l;
    let zp = cpowers(z, two_l);
    let inv_x = T::one() / xt.clone();

    let mut g: Vec<Complex<T>> = Vec::with_capacity(j_max + 1);
    let mut mass = Vec::with_capacity(j_max + 1);
    let start = j_max.max((2.0 * aw).ceil() as usize) + 8;
    for (j, m) in moments.iter().enumerate() {
        let mut v = cscale(m, &xt);
        v += cscale(&ew, &T::from_f64(0.5));
        if j == 0 {
            v.re += T::from_f64(0.5);
        }
        g.push(v);
        mass.push(xf * (cabs_f64(m) + 1.0) * (start as f64 + 2.0) + 1.0);
    }

    // Column n of E_{j,n}, where h_j^{(n)}(X) = X^j e^{zX} E_{j,n}.
    let mut col: Vec<Complex<T>> = vec![cone(); j_max + 1];
    let mut col_abs: Vec<f64> = vec![1.0; j_max + 1];
    for n in 1..two_l {
        let mut next = Vec::with_capacity(j_max + 1);
        let mut next_abs = Vec::with_capacity(j_max + 1);
        for j in 0..=j_max {
            let mut v = cmul(z, &col[j]);
            let mut va = az * col_abs[j];
            if j > 0 {
                v += cscale(&col[j - 1], &(T::from_u64(j as u64) * &inv_x));
                va += j as f64 / xf * col_abs[j - 1];
            }
            next.push(v);
            next_abs.push(va);
        }
        col = next;
        col_abs = next_abs;
        if n % 2 == 1 {
            let ell = n.div_ceil(2);
            let b = ctx.bernoulli_over_factorial(ell);
            let bf = b.to_f64().abs();
            for j in 0..=j_max {
                let mut t = cmul(&ew, &col[j]);
                let mut ta = ew_abs * col_abs[j];
                if n >= j {
                    // h_j^{(n)}(0)/X^j = n!/(n-j)! z^{n-j} / X^j
                    let mut c = T::one();
                    let mut cf = 1.0f64;
                    for i in 0..j {
                        c = c * T::from_u64((n - i) as u64) * &inv_x;
                        cf *= (n - i) as f64 / xf;
                    }
                    t -= cscale(&zp[n - j], &c);
                    ta += cf * az.powi((n - j) as i32);
                }
                g[j] += cscale(&t, b);
                mass[j] += bf * ta;
            }
        }
    }
    (g, mass)
}

/// Strategy (c): Euler–Maclaurin summation of `x^j e^{zx}` over `0 ≤ x ≤ K-1`.
///
/// `order` fixes `L`; by default the smallest `L` meeting the working precision.
pub fn geom_derivs_em<T: Real>(
    req: &GeomDerivRequest<T>,
    order: Option<usize>,
    ctx: &Context<T>,
) -> Result<GeomDerivs<T>> {
    let (k, j_max) = (req.k, req.j_max);
    if k == 1 {
        return Ok(GeomDerivs::trivial(1, j_max));
    }
    if order == Some(0) {
        return Err(Error::Parameter("Euler–Maclaurin order L must be at least 1".into()));
    }
    let flip = req.z.im < T::zero();
    let z = if flip { cconj(&req.z) } else { req.z.clone() };
    let x = k - 1;
    let az = cabs_f64(&z);
    let big_l = order.unwrap_or_else(|| {
        em_order_for(az, x, j_max, ctx.eps() * x as f64, ctx.em_order_cap())
    });
    let (g, mass) = em_core(&z, x, j_max, big_l, ctx);
    let mut scaled = Vec::with_capacity(j_max + 1);
    let mut bounds = Vec::with_capacity(j_max + 1);
    let half = T::from_f64(0.5);
    let mut hp = T::one();
    for (j, v) in g.into_iter().enumerate() {
        if j > 0 {
            hp *= &half;
        }
        let v = cscale(&v, &hp);
        scaled.push(if flip { cconj(&v) } else { v });
        let hf = 0.5f64.powi(j as i32);
        bounds.push(hf * (em_remainder_bound(az, x, j, big_l) + ctx.rounding(mass[j], big_l + j_max + 8)));
    }
    Ok(GeomDerivs {
        regime: Regime::EulerMaclaurin,
        k,
        scaled,
        bounds,
        laurent_magnitude: None,
        em_order: Some(big_l),
    })
}

/// `g_K^{(j)}(z)` by Euler–Maclaurin with order `L`, together with the
/// customary bound `4(K-1)^{j+1}(2π)^{-2L}` (see [`em_nominal_bound`]).
pub fn em_geom_deriv<T: Real>(
    z: &Complex<T>,
    k: u64,
    j: usize,
    big_l: usize,
    ctx: &Context<T>,
) -> Result<(Complex<T>, f64)> {
    if big_l < 1 {
        return Err(Error::Parameter("Euler–Maclaurin order L must be at least 1".into()));
    }
    if k < 2 {
        return Err(Error::Parameter("Euler–Maclaurin form needs K >= 2".into()));
    }
    if z.re > T::zero() {
        return Err(Error::Domain("Re z must be <= 0".into()));
    }
    let im = reduce_mod_2pi(&z.im)?;
    let flip = im < T::zero();
    let zz = Complex::new(z.re.clone(), if flip { -im } else { im });
    let x = k - 1;
    let (g, _) = em_core(&zz, x, j, big_l, ctx);
    let v = cscale(&g[j], &T::from_u64(x).powi(j as i32));
    Ok((if flip { cconj(&v) } else { v }, em_nominal_bound(k, j, big_l)))
}

/// `∫_0^{K-1} x^j e^{zx} dx` by splitting `[0, K-1]` into `n_pieces` equal parts
/// and integrating the Taylor expansion of the exponential on each.
///
/// Returns the value and a bound on the series truncation plus rounding.
pub fn poly_exp_integral<T: Real>(
    z: &Complex<T>,
    j: usize,
    k: u64,
    n_pieces: usize,
    ctx: &Context<T>,
) -> Result<(Complex<T>, f64)> {
    if n_pieces < j + 1 {
        return Err(Error::Parameter(format!("need at least j+1 = {} pieces", j + 1)));
    }
    if k < 2 {
        return Ok((czero(), 0.0));
    }
    let x = k - 1;
    let xt = T::from_u64(x);
    let w = cscale(z, &xt);
    let aw = cabs_f64(&w);
    let eta = T::one() / T::from_u64(n_pieces as u64);
    let etaf = 1.0 / n_pieces as f64;
    let wh = cscale(&w, &eta);
    let awh = aw * etaf;
    let eps = ctx.eps();

    let mut total = czero::<T>();
    let mut tail_total = 0.0f64;
    let mut mass_total = 0.0f64;
    let mut terms_max = 0usize;
    for i in 0..n_pieces {
        let alpha = T::from_u64(i as u64) * &eta;
        let alphaf = i as f64 * etaf;
        let e0 = cexp(&cscale(&w, &alpha));
        let e0_abs = (w.re.to_f64() * alphaf).exp();
        // α^{j-k} η^k C(j,k)
        let mut poly = Vec::with_capacity(j + 1);
        for kk in 0..=j {
            let c = T::from_ratio(&BigRational::from_integer(binomial(j, kk)))
                * alpha.powi((j - kk) as i32)
                * eta.powi(kk as i32);
            poly.push(c);
        }
        let scale_f = (alphaf + etaf).powi(j as i32);
        let mut series = czero::<T>();
        let mut wpow = cone::<T>();
        let mut inv_fact = T::one();
        let mut mag = 1.0f64;
        let mut n = 0usize;
        loop {
            let mut q = T::zero();
            for (kk, c) in poly.iter().enumerate() {
                q += c.clone() / T::from_u64((kk + n + 1) as u64);
            }
            let coef = q * &inv_fact;
            series += cscale(&wpow, &coef);
            mass_total += e0_abs * etaf * mag * scale_f;
            n += 1;
            wpow = cmul(&wpow, &wh);
            inv_fact /= T::from_u64(n as u64);
            mag *= awh / n as f64;
            if awh / (n as f64 + 1.0) < 0.5 && mag * scale_f < eps * 1e-3 * cabs_f64(&series).max(f64::MIN_POSITIVE) {
                tail_total += e0_abs * etaf * 2.0 * mag * scale_f;
                break;
            }
            if n > 100_000 {
                tail_total = f64::INFINITY;
                break;
            }
        }
        terms_max = terms_max.max(n);
        total += cscale(&cmul(&e0, &series), &eta);
    }
    let xj1 = xt.powi(j as i32 + 1);
    let xj1f = (x as f64).powi(j as i32 + 1);
    let bound = xj1f * (tail_total + ctx.rounding(mass_total, terms_max + j + n_pieces));
    Ok((cscale(&total, &xj1), bound))
}

fn binomial(n: usize, k: usize) -> num_bigint::BigInt {
    factorial(n) / (factorial(k) * factorial(n - k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_cases() {
        let ctx = Context::<f64>::new();
        assert_eq!(geom_sum(&Complex::new(0.0, 0.0), 7, &ctx), Complex::new(7.0, 0.0));
        let g = geom_sum(&Complex::new(-(2f64.ln()), 0.0), 3, &ctx);
        assert!((g.re - 1.75).abs() < 1e-15 && g.im.abs() < 1e-15);
        let g = geom_sum(&Complex::new(0.0, PI), 4, &ctx);
        assert!(g.norm() < 1e-14);
    }

    #[test]
    fn moments_small_and_large() {
        let ctx = Context::<f64>::new();
        for w in [Complex::new(-0.3, 0.2), Complex::new(-2.0, 7.5), Complex::new(0.0, 30.0)] {
            let m = exp_moments(&w, 6, &ctx);
            // Simpson reference
            for (j, mj) in m.iter().enumerate() {
                let n = 20000;
                let mut acc = Complex::new(0.0, 0.0);
                for i in 0..=n {
                    let u = i as f64 / n as f64;
                    let wgt = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    acc += (w * u).exp() * u.powi(j as i32) * wgt;
                }
                acc /= 3.0 * n as f64;
                assert!((acc - mj).norm() < 1e-9, "w={w} j={j} {acc} {mj}");
            }
        }
    }

    #[test]
    fn nominal_bound_example() {
        let b = em_nominal_bound(100, 0, 5);
        assert!((b - 4.0 * 99.0 * (2.0 * PI).powi(-10)).abs() < 1e-18);
        assert!((b - 4.1295e-6).abs() < 1e-9);
    }
}
