//! Dirichlet characters to prime-power modulus and the block formula for
//! `L(s, χ)`.

use num_complex::Complex;
use num_integer::Integer;

use crate::coefficients::{c_coeffs, shared_table};
use crate::complex::{cabs_f64, cexp, cmul, cone, cscale, czero, expi};
use crate::context::{for_each_inv_power, complex_inv_power, roundoff_estimate, ComplexPoint, Context};
use crate::error::{Error, Result};
use crate::geomsum::{geom_sum, geom_sum_derivs, GeomDerivRequest};
use crate::real::Real;
use crate::schedule::{
    block_iter, build_schedule, cutoff_for_tail, validate_params, EvalParams, ValidationReport,
    Violation,
};
use crate::zeta::{
    csc_bound, geom_bound, map_blocks, truncation_bound, Diagnostics, EvalResult, Method,
};

/// Largest modulus accepted; characters are tabulated over all residues.
pub const MAX_MODULUS: u64 = 1 << 24;

/// A character mod `p^a`, stored as `χ(n) = e^{2πi k_n/φ(p^a)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimePowerCharacter {
    p: u64,
    a: u32,
    b: u32,
    index: u64,
    phi: u64,
    /// `k_n` for `n` coprime to `p`.
    exps: Vec<Option<u64>>,
    postnikov_l: u64,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn pow_mod(mut base: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = (acc as u128 * base as u128 % m as u128) as u64;
        }
        base = (base as u128 * base as u128 % m as u128) as u64;
        e >>= 1;
    }
    acc
}

/// Inverse of `x` modulo `m` by the extended Euclidean algorithm.
pub fn mod_inverse(x: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let e = (x as i128).extended_gcd(&(m as i128));
    if e.gcd != 1 {
        return None;
    }
    Some(e.x.rem_euclid(m as i128) as u64)
}

/// Smallest primitive root mod `q` for `q` with a cyclic unit group.
pub fn smallest_primitive_root(q: u64, phi: u64) -> Option<u64> {
    let factors = prime_factors(phi);
    (1..q.max(2)).find(|&g| {
        g.gcd(&q) == 1 && factors.iter().all(|&r| pow_mod(g, phi / r, q) != 1)
    })
}

/// Builds the character with the given index.
///
/// For odd `p` (and `p^a ∈ {2, 4}`) `χ(g^k) = e^{2πi·index·k/φ}` with `g` the
/// smallest primitive root. For `p = 2, a ≥ 3` the index is split as
/// `i1·2^{a-2} + i2` and `χ((-1)^{e1} 5^{e2}) = e^{2πi(e1 i1/2 + e2 i2/2^{a-2})}`.
pub fn build_character(p: u64, a: u32, index: u64) -> Result<PrimePowerCharacter> {
    if !is_prime(p) {
        return Err(Error::Parameter(format!("p = {p} is not prime")));
    }
    if a == 0 {
        return Err(Error::Parameter("a must be at least 1".into()));
    }
    let q = p
        .checked_pow(a)
        .filter(|&q| q <= MAX_MODULUS)
        .ok_or_else(|| Error::Parameter(format!("modulus {p}^{a} exceeds {MAX_MODULUS}")))?;
    let phi = q / p * (p - 1);
    if index >= phi {
        return Err(Error::Parameter(format!("index {index} outside [0, {phi})")));
    }
    let mut exps = vec![None; q as usize];
    if p == 2 && a >= 3 {
        let half = phi / 2;
        let (i1, i2) = (index / half, index % half);
        let mut five = 1u64;
        for e2 in 0..half {
            for e1 in 0..2u64 {
                let n = if e1 == 0 { five } else { q - five };
                let k = (e1 * i1 * half + 2 * e2 * i2) % phi;
                exps[n as usize] = Some(k);
            }
            five = five * 5 % q;
        }
    } else {
        let g = smallest_primitive_root(q, phi)
            .ok_or_else(|| Error::Consistency(format!("no primitive root mod {q}")))?;
        let mut pw = 1u64;
        for k in 0..phi {
            exps[pw as usize] = Some((index as u128 * k as u128 % phi as u128) as u64);
            pw = pw * g % q;
        }
    }
    let b = a.div_ceil(2);
    let mut chi = PrimePowerCharacter { p, a, b, index, phi, exps, postnikov_l: 0 };
    chi.postnikov_l = compute_postnikov(&chi)?;
    Ok(chi)
}

/// `L` with `χ(1 + p^b x) = e^{2πi L x/p^{a-b}}`, checked for every `x`.
fn compute_postnikov(chi: &PrimePowerCharacter) -> Result<u64> {
    let (q, pb, qs, phi) = (chi.modulus(), chi.p_b(), chi.p_a_minus_b(), chi.phi);
    let k1 = chi.exps[((1 + pb) % q) as usize]
        .ok_or_else(|| Error::Consistency("1 + p^b is not a unit".into()))?;
    // k1/φ = L/p^{a-b} mod 1.
    let num = k1 as u128 * qs as u128;
    if !num.is_multiple_of(phi as u128) {
        return Err(Error::Consistency(format!(
            "χ(1+p^b) is not a p^(a-b)-th root of unity (k = {k1}, φ = {phi})"
        )));
    }
    let l = (num / phi as u128 % qs as u128) as u64;
    let modulus = phi as u128 * qs as u128;
    for x in 0..qs {
        let n = ((1 + pb as u128 * x as u128) % q as u128) as usize;
        let k = chi.exps[n].ok_or_else(|| Error::Consistency("1 + p^b x is not a unit".into()))?;
        let lhs = k as u128 * qs as u128 % modulus;
        let rhs = l as u128 * x as u128 * phi as u128 % modulus;
        if lhs != rhs {
            return Err(Error::Consistency(format!("Postnikov relation fails at x = {x}")));
        }
    }
    Ok(l)
}

impl PrimePowerCharacter {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn a(&self) -> u32 {
        self.a
    }

    /// `⌈a/2⌉`.
    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn modulus(&self) -> u64 {
        self.p.pow(self.a)
    }

    pub fn p_b(&self) -> u64 {
        self.p.pow(self.b)
    }

    pub fn p_a_minus_b(&self) -> u64 {
        self.p.pow(self.a - self.b)
    }

    /// `φ(p^a)`.
    pub fn phi(&self) -> u64 {
        self.phi
    }

    pub fn is_principal(&self) -> bool {
        self.exps.iter().all(|e| matches!(e, None | Some(0)))
    }

    pub fn postnikov_l(&self) -> u64 {
        self.postnikov_l
    }

    /// `k_n` with `χ(n) = e^{2πi k_n/φ}`, `None` when `p | n`.
    pub fn exponent(&self, n: u64) -> Option<u64> {
        self.exps[(n % self.modulus()) as usize]
    }

    pub fn value<T: Real>(&self, n: u64, ctx: &Context<T>) -> Complex<T> {
        match self.exponent(n) {
            None => czero(),
            Some(0) => cone(),
            Some(k) => expi(&(ctx.two_pi().clone() * T::from_u64(k) / T::from_u64(self.phi))),
        }
    }

    /// All values `χ(0), ..., χ(p^a - 1)`.
    pub fn values<T: Real>(&self, ctx: &Context<T>) -> Vec<Complex<T>> {
        let mut cache: Vec<Option<Complex<T>>> = vec![None; self.phi as usize];
        (0..self.modulus())
            .map(|n| match self.exponent(n) {
                None => czero(),
                Some(k) => cache[k as usize]
                    .get_or_insert_with(|| self.value(n, ctx))
                    .clone(),
            })
            .collect()
    }

    /// `(v+d)^{-1} L mod p^{a-b}`, the numerator of `w_d/(2π)`.
    pub fn twist_numerator(&self, n: u64) -> Option<u64> {
        let qs = self.p_a_minus_b();
        if n.is_multiple_of(self.p) {
            return None;
        }
        let inv = mod_inverse(n % qs.max(1), qs)?;
        Some((inv as u128 * self.postnikov_l as u128 % qs as u128) as u64)
    }
}

/// A character together with its values at the working precision.
#[derive(Debug, Clone)]
pub struct CharacterTable<T: Real> {
    pub chi: PrimePowerCharacter,
    pub values: Vec<Complex<T>>,
}

impl<T: Real> CharacterTable<T> {
    pub fn new(chi: PrimePowerCharacter, ctx: &Context<T>) -> Self {
        let values = chi.values(ctx);
        CharacterTable { chi, values }
    }

    pub fn at(&self, n: u64) -> &Complex<T> {
        &self.values[(n % self.chi.modulus()) as usize]
    }

    /// `w_d = 2π (v+d)^{-1} L / p^{a-b}`, zero when `p | v+d`.
    pub fn twist(&self, n: u64, ctx: &Context<T>) -> T {
        match self.chi.twist_numerator(n) {
            None | Some(0) => T::zero(),
            Some(k) => ctx.two_pi().clone() * T::from_u64(k) / T::from_u64(self.chi.p_a_minus_b()),
        }
    }
}

/// `H_d = ⌈(K-d)/p^b⌉`, zero once `d ≥ K`.
pub fn inner_length(k: u64, d: u64, pb: u64) -> u64 {
    if d >= k {
        0
    } else {
        (k - d).div_ceil(pb)
    }
}

/// `Σ_{k<K} χ(v+k) e^{kz}` summed term by term.
pub fn twisted_geom_sum_direct<T: Real>(
    z: &Complex<T>,
    chi: &CharacterTable<T>,
    v: u64,
    k: u64,
) -> Complex<T> {
    let step = cexp(z);
    let mut e = cone::<T>();
    let mut acc = czero::<T>();
    for kk in 0..k {
        acc += cmul(chi.at(v + kk), &e);
        e = cmul(&e, &step);
    }
    acc
}

/// `g_K(z, χ, v) = Σ_{d<p^b} χ(v+d) e^{zd} g_{H_d}(p^b z + i w_d)`.
pub fn twisted_geom_sum<T: Real>(
    z: &Complex<T>,
    chi: &CharacterTable<T>,
    v: u64,
    k: u64,
    ctx: &Context<T>,
) -> Complex<T> {
    let pb = chi.chi.p_b();
    let pbt = T::from_u64(pb);
    let mut acc = czero::<T>();
    for d in 0..pb.min(k) {
        let c = chi.at(v + d);
        if c.re.is_zero() && c.im.is_zero() {
            continue;
        }
        let h = inner_length(k, d, pb);
        let inner = Complex::new(z.re.clone() * &pbt, z.im.clone() * &pbt + chi.twist(v + d, ctx));
        let g = geom_sum(&inner, h, ctx);
        acc += cmul(&cmul(c, &exp_scaled(z, d)), &g);
    }
    acc
}

fn exp_scaled<T: Real>(z: &Complex<T>, d: u64) -> Complex<T> {
    if d == 0 {
        return cone();
    }
    let dt = T::from_u64(d);
    cexp(&Complex::new(z.re.clone() * &dt, (z.im.clone() * &dt).reduce_mod_2pi()))
}

/// `g_K^{(j)}(z, χ, v) / (2(K-1))^j` for `j ≤ j_max`, with error bounds.
#[derive(Debug, Clone)]
pub struct TwistedDerivs<T: Real> {
    pub scaled: Vec<Complex<T>>,
    pub bounds: Vec<f64>,
    /// Number of non-empty inner geometric sums.
    pub inner_sums: u64,
    pub regimes: [u64; 3],
    pub max_laurent_magnitude: f64,
}

impl<T: Real> TwistedDerivs<T> {
    fn single(value: Complex<T>, j_max: usize) -> Self {
        let mut scaled = vec![czero(); j_max + 1];
        scaled[0] = value;
        TwistedDerivs {
            scaled,
            bounds: vec![0.0; j_max + 1],
            inner_sums: 1,
            regimes: [1, 0, 0],
            max_laurent_magnitude: 0.0,
        }
    }
}

/// Strategy (i): `Σ_{k<K} χ(v+k) (k/(2(K-1)))^j e^{kz}`.
pub fn twisted_derivs_direct<T: Real>(
    z: &Complex<T>,
    chi: &CharacterTable<T>,
    v: u64,
    k: u64,
    j_max: usize,
    ctx: &Context<T>,
) -> Result<TwistedDerivs<T>> {
    if k == 0 {
        return Err(Error::Parameter("K must be at least 1".into()));
    }
    if k == 1 {
        return Ok(TwistedDerivs::single(chi.at(v).clone(), j_max));
    }
    let two_x = 2 * (k - 1);
    let inv = T::one() / T::from_u64(two_x);
    let zr = Complex::new(z.re.clone(), z.im.reduce_mod_2pi());
    let step = cexp(&zr);
    let step_abs = zr.re.to_f64().exp();
    let mut e = cone::<T>();
    let mut e_abs = 1.0f64;
    let mut acc = vec![czero::<T>(); j_max + 1];
    let mut mass = vec![0.0f64; j_max + 1];
    for kk in 0..k {
        let c = chi.at(v + kk);
        if !(c.re.is_zero() && c.im.is_zero()) {
            let ce = cmul(c, &e);
            let u = T::from_u64(kk) * &inv;
            let uf = kk as f64 / two_x as f64;
            let mut p = T::one();
            let mut pf = 1.0f64;
            for j in 0..=j_max {
                if j > 0 {
                    p *= &u;
                    pf *= uf;
                }
                acc[j] += cscale(&ce, &p);
                mass[j] += e_abs * pf;
            }
        }
        e = cmul(&e, &step);
        e_abs *= step_abs;
    }
    let ops = (k as usize).saturating_add(j_max);
    Ok(TwistedDerivs {
        scaled: acc,
        bounds: mass.iter().map(|&m| ctx.rounding(m, ops)).collect(),
        inner_sums: k,
        regimes: [1, 0, 0],
        max_laurent_magnitude: 0.0,
    })
}

fn binomial_row<T: Real>(j: usize) -> Vec<T> {
    let mut row = vec![T::one()];
    for _ in 0..j {
        let mut next = vec![T::one(); row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1].clone() + &row[i];
        }
        row = next;
    }
    row
}

/// Strategy (ii): termwise derivatives of the `p^b`-term decomposition,
/// `g^{(j)} = Σ_d χ(v+d) e^{zd} Σ_ℓ C(j,ℓ) d^{j-ℓ} p^{bℓ} g_{H_d}^{(ℓ)}(p^b z + i w_d)`.
///
/// Needs `Re(p^b z) ≥ -1/2`.
pub fn twisted_derivs_decomposed<T: Real>(
    z: &Complex<T>,
    chi: &CharacterTable<T>,
    v: u64,
    k: u64,
    j_max: usize,
    ctx: &Context<T>,
) -> Result<TwistedDerivs<T>> {
    if k == 0 {
        return Err(Error::Parameter("K must be at least 1".into()));
    }
    if k == 1 {
        return Ok(TwistedDerivs::single(chi.at(v).clone(), j_max));
    }
    let pb = chi.chi.p_b();
    let pbt = T::from_u64(pb);
    let x = k - 1;
    let binom: Vec<Vec<T>> = (0..=j_max).map(binomial_row).collect();
    let binom_f: Vec<Vec<f64>> = (0..=j_max)
        .map(binomial_row::<f64>)
        .collect();
    let mut out = TwistedDerivs {
        scaled: vec![czero::<T>(); j_max + 1],
        bounds: vec![0.0; j_max + 1],
        inner_sums: 0,
        regimes: [0; 3],
        max_laurent_magnitude: 0.0,
    };
    for d in 0..pb.min(k) {
        let c = chi.at(v + d);
        if c.re.is_zero() && c.im.is_zero() {
            continue;
        }
        let h = inner_length(k, d, pb);
        let inner = Complex::new(z.re.clone() * &pbt, z.im.clone() * &pbt + chi.twist(v + d, ctx));
        let req = GeomDerivRequest::new(inner, h, j_max)?;
        let g = geom_sum_derivs(&req, ctx);
        out.inner_sums += 1;
        out.regimes[g.regime.index()] += 1;
        if let Some(mag) = g.laurent_magnitude {
            out.max_laurent_magnitude = out.max_laurent_magnitude.max(mag);
        }
        let weight = cmul(c, &exp_scaled(z, d));
        let weight_abs = cabs_f64(&weight);
        // d^{j-ℓ} p^{bℓ} (2(H-1))^ℓ / (2X)^j = (d/(2X))^{j-ℓ} (p^b (H-1)/X)^ℓ
        let f = T::from_u64(d) / T::from_u64(2 * x);
        let r = T::from_u64(pb * (h - 1)) / T::from_u64(x);
        let ff = d as f64 / (2 * x) as f64;
        let rf = (pb * (h - 1)) as f64 / x as f64;
        let fpow = crate::complex::cpowers(&Complex::new(f, T::zero()), j_max);
        let rpow = crate::complex::cpowers(&Complex::new(r, T::zero()), j_max);
        for j in 0..=j_max {
            let mut acc = czero::<T>();
            let mut bound = 0.0f64;
            for ell in 0..=j {
                let coef = binom[j][ell].clone() * &fpow[j - ell].re * &rpow[ell].re;
                if coef.is_zero() {
                    continue;
                }
                acc += cscale(&g.scaled[ell], &coef);
                bound += binom_f[j][ell] * ff.powi((j - ell) as i32) * rf.powi(ell as i32) * g.bounds[ell];
            }
            out.scaled[j] += cmul(&weight, &acc);
            out.bounds[j] += weight_abs * bound + ctx.rounding(weight_abs * cabs_f64(&acc), j + 4);
        }
    }
    Ok(out)
}

/// Direct summation when `K ≤ p^b`, the decomposition otherwise.
pub fn twisted_geom_derivs<T: Real>(
    z: &Complex<T>,
    chi: &CharacterTable<T>,
    v: u64,
    k: u64,
    j_max: usize,
    ctx: &Context<T>,
) -> Result<TwistedDerivs<T>> {
    if k <= chi.chi.p_b() {
        twisted_derivs_direct(z, chi, v, k, j_max, ctx)
    } else {
        twisted_derivs_decomposed(z, chi, v, k, j_max, ctx)
    }
}

/// `B_r(s, χ, m)` with an evaluation-error bound.
#[derive(Debug, Clone)]
pub struct TwistedBlockValue<T: Real> {
    pub value: Complex<T>,
    pub bound: f64,
    pub inner_sums: u64,
    pub regimes: [u64; 3],
    pub max_laurent_magnitude: f64,
}

/// `B_r(s,χ,m) = Σ_{j≤m} c_j(s) g_K^{(j)}(-s/v, χ, v)/v^j`.
pub fn block_value_chi<T: Real>(
    s: &ComplexPoint<T>,
    chi: &CharacterTable<T>,
    v: u64,
    k: u64,
    coeffs: &[Complex<T>],
    ctx: &Context<T>,
) -> Result<TwistedBlockValue<T>> {
    let m = coeffs.len() - 1;
    let vt = T::from_u64(v);
    let z = Complex::new(-(s.sigma().clone() / &vt), -(s.t().clone() / &vt));
    let d = twisted_geom_derivs(&z, chi, v, k, m, ctx)?;
    let two_x = 2 * k.saturating_sub(1);
    let ratio = T::from_u64(two_x) / &vt;
    let ratio_f = two_x as f64 / v as f64;
    let mut factor = T::one();
    let mut factor_f = 1.0f64;
    let mut acc = czero::<T>();
    let mut bound = 0.0f64;
    for j in 0..=m {
        if j > 0 {
            factor *= &ratio;
            factor_f *= ratio_f;
        }
        acc += cmul(&cscale(&coeffs[j], &factor), &d.scaled[j]);
        bound += cabs_f64(&coeffs[j]) * factor_f * d.bounds[j];
    }
    Ok(TwistedBlockValue {
        value: acc,
        bound,
        inner_sums: d.inner_sums,
        regimes: d.regimes,
        max_laurent_magnitude: d.max_laurent_magnitude,
    })
}

/// `𝓑_M(s,χ,u0,v0) = Σ_r Σ_{d<p^b, p∤v_r+d} v_r^{-σ}
/// min{e^{-σd/v_r} g_{H_{r,d}}(-p^bσ/v_r), |csc(w_{r,d}/2 - p^b t/(2v_r))|}`.
pub fn cal_b_chi(
    chi: &PrimePowerCharacter,
    sigma: f64,
    t: f64,
    u0: u64,
    v0: u64,
    cutoff: u64,
    bits: u32,
) -> Result<f64> {
    let floor = (2.0f64).powi(-(bits as i32) / 2);
    let pb = chi.p_b();
    let qs = chi.p_a_minus_b() as f64;
    let mut acc = 0.0f64;
    for (v, k) in block_iter(u0, v0, cutoff)? {
        let vf = v as f64;
        let mut inner = 0.0f64;
        for d in 0..pb {
            let Some(num) = chi.twist_numerator(v + d) else { continue };
            let h = inner_length(k, d, pb);
            if h == 0 {
                continue;
            }
            let g = (-sigma * d as f64 / vf).exp() * geom_bound(pb as f64 * sigma / vf, h);
            let w_half = std::f64::consts::PI * num as f64 / qs;
            let a = w_half - pb as f64 * t / (2.0 * vf);
            inner += g.min(csc_bound(a, floor));
        }
        acc += vf.powf(-sigma) * inner;
    }
    Ok(acc)
}

/// `𝔮(s, χ) = p^a (|s| + 3)`.
pub fn conductor_chi(chi: &PrimePowerCharacter, abs_s: f64) -> f64 {
    chi.modulus() as f64 * (abs_s + 3.0)
}

/// `2𝔮(s,χ)/(σ M^σ)`.
pub fn tail_bound_chi(chi: &PrimePowerCharacter, abs_s: f64, sigma: f64, cutoff: u64) -> f64 {
    ((2.0 * conductor_chi(chi, abs_s)).ln() - sigma.ln() - sigma * (cutoff as f64).ln()).exp()
}

/// The zeta hypotheses plus `v0 ≥ 2 p^b σ`, which keeps every inner argument
/// `p^b z` inside `Re ≥ -1/2`.
pub fn validate_params_chi<T: Real>(
    s: &ComplexPoint<T>,
    chi: &PrimePowerCharacter,
    p: &EvalParams,
) -> ValidationReport {
    let base = validate_params(s, p);
    if !base.passed() {
        return base;
    }
    if (p.v0 as f64) < 2.0 * chi.p_b() as f64 * s.sigma_f64() {
        return ValidationReport { violation: Some(Violation::V0BelowTwistedStrip) };
    }
    base
}

/// How the cutoff `M` is chosen for `L(s, χ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChiCutoff {
    /// `M = ⌈(2𝔮(s,χ)/(σε))^{1/σ}⌉`, capped at `2^53`.
    Target(f64),
    /// `M = factor · ⌈𝔮(s,χ)⌉`.
    Multiple(u64),
}

/// `u0 = 2 max{6, ⌈√𝔮(s)⌉, ⌈σ⌉}`, `v0 = p^b u0`.
pub fn default_params_chi<T: Real>(
    s: &ComplexPoint<T>,
    chi: &PrimePowerCharacter,
    m: usize,
    cutoff: ChiCutoff,
) -> EvalParams {
    let q = s.conductor_q();
    let u0 = 2 * 6u64.max(q.sqrt().ceil() as u64).max(s.sigma_f64().ceil() as u64);
    let v0 = chi.p_b() * u0;
    let qc = conductor_chi(chi, s.abs_s());
    let m_cut = match cutoff {
        ChiCutoff::Target(eps) => cutoff_for_tail(2.0 * qc, s.sigma_f64(), eps),
        ChiCutoff::Multiple(f) => f * qc.ceil() as u64,
    };
    EvalParams { u0, v0, cutoff: m_cut.max(v0), m }
}

/// `Σ_{1≤n<end} χ(n) n^{-s}`.
pub fn twisted_power_sum<T: Real>(
    s: &ComplexPoint<T>,
    chi: &CharacterTable<T>,
    end: u64,
    ctx: &Context<T>,
) -> Complex<T> {
    let mut acc = czero::<T>();
    for_each_inv_power(s, end, ctx, |n, val| {
        let c = chi.at(n);
        if !(c.re.is_zero() && c.im.is_zero()) {
            acc += cmul(c, val);
        }
    });
    acc
}

/// Plain truncated sum `Σ_{n<M} χ(n) n^{-s}` with the tail bound.
pub fn lfun_direct<T: Real>(
    s: &ComplexPoint<T>,
    chi: &CharacterTable<T>,
    cutoff: u64,
    ctx: &Context<T>,
) -> Result<EvalResult<T>> {
    if chi.chi.is_principal() {
        return Err(Error::Validation("principal character".into()));
    }
    let value = twisted_power_sum(s, chi, cutoff, ctx);
    Ok(EvalResult {
        value,
        truncation_bound: 0.0,
        tail_bound: tail_bound_chi(&chi.chi, s.abs_s(), s.sigma_f64(), cutoff),
        roundoff_estimate: roundoff_estimate(s.t_f64(), cutoff, ctx.bits()),
        block_rounding: 0.0,
        params: None,
        r: -1,
        block_count: 0,
        terms_evaluated: cutoff.saturating_sub(1),
        method: Method::Direct,
        precision_bits: ctx.bits(),
        diagnostics: Diagnostics::default(),
    })
}

/// `L(s,χ) ≈ Σ_{n<v0} χ(n)n^{-s} + Σ_r v_r^{-s} B_r(s,χ,m)` with
/// `|𝓣| ≤ ε_m 𝓑_M(s,χ)` and `|𝓡| ≤ 2𝔮(s,χ)/(σM^σ)`.
pub fn lfun_theorem2<T: Real>(
    s: &ComplexPoint<T>,
    chi: &CharacterTable<T>,
    p: &EvalParams,
    ctx: &Context<T>,
) -> Result<EvalResult<T>> {
    if chi.chi.is_principal() {
        return Err(Error::Validation("principal character".into()));
    }
    validate_params_chi(s, &chi.chi, p).into_result()?;
    let table = shared_table(p.m);
    let coeffs = c_coeffs(s, p.m, &table)?;
    let schedule = build_schedule(p.u0, p.v0, p.cutoff)?;
    let blocks: Vec<(u64, u64)> = schedule.blocks().collect();
    let per_block = map_blocks(&blocks, ctx, |v, k| -> Result<(Complex<T>, TwistedBlockValue<T>)> {
        let b = block_value_chi(s, chi, v, k, &coeffs, ctx)?;
        Ok((cmul(&complex_inv_power(v, s, ctx), &b.value), b))
    });
    let mut value = twisted_power_sum(s, chi, p.v0, ctx);
    let mut rounding = 0.0f64;
    let mut diagnostics = Diagnostics::default();
    let mut inner_sums = 0u64;
    let sigma = s.sigma_f64();
    for (res, &(v, _)) in per_block.into_iter().zip(&blocks) {
        let (term, b) = res?;
        value += term;
        rounding += b.bound * (v as f64).powf(-sigma);
        inner_sums += b.inner_sums;
        for (slot, n) in diagnostics.regime_counts.iter_mut().zip(b.regimes) {
            *slot += n;
        }
        diagnostics.max_laurent_magnitude = diagnostics.max_laurent_magnitude.max(b.max_laurent_magnitude);
    }
    let cb = cal_b_chi(&chi.chi, sigma, s.t_f64(), p.u0, p.v0, p.cutoff, ctx.bits())?;
    Ok(EvalResult {
        value,
        truncation_bound: truncation_bound(s.abs_s(), p.u0, p.m, cb),
        tail_bound: tail_bound_chi(&chi.chi, s.abs_s(), sigma, p.cutoff),
        roundoff_estimate: roundoff_estimate(s.t_f64(), p.cutoff, ctx.bits()),
        block_rounding: rounding,
        params: Some(*p),
        r: schedule.r(),
        block_count: blocks.len() as u64,
        terms_evaluated: p.v0 + (p.m as u64 + 1) * inner_sums,
        method: Method::Theorem1Tail,
        precision_bits: ctx.bits(),
        diagnostics,
    })
}
