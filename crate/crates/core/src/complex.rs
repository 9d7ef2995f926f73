//! Small helpers over `num_complex::Complex<T>` for a generic [`Real`].

use num_complex::Complex;

use crate::real::Real;

/// Converts both parts to another scalar type.
pub fn cconvert<T: Real, U: Real>(z: &Complex<T>) -> Complex<U> {
    Complex::new(crate::real::convert_real(&z.re), crate::real::convert_real(&z.im))
}

pub fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

pub fn cone<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

pub fn creal<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

pub fn cmul<T: Real>(a: &Complex<T>, b: &Complex<T>) -> Complex<T> {
    Complex::new(
        a.re.clone() * &b.re - a.im.clone() * &b.im,
        a.re.clone() * &b.im + a.im.clone() * &b.re,
    )
}

pub fn cscale<T: Real>(a: &Complex<T>, r: &T) -> Complex<T> {
    Complex::new(a.re.clone() * r, a.im.clone() * r)
}

/// `acc += a * b` without intermediate complex temporaries.
pub fn cfma<T: Real>(acc: &mut Complex<T>, a: &Complex<T>, b: &Complex<T>) {
    acc.re += a.re.clone() * &b.re - a.im.clone() * &b.im;
    acc.im += a.re.clone() * &b.im + a.im.clone() * &b.re;
}

pub fn cinv<T: Real>(a: &Complex<T>) -> Complex<T> {
    let d = a.re.clone() * &a.re + a.im.clone() * &a.im;
    Complex::new(a.re.clone() / &d, -(a.im.clone() / &d))
}

pub fn cdiv<T: Real>(a: &Complex<T>, b: &Complex<T>) -> Complex<T> {
    cmul(a, &cinv(b))
}

/// `e^{iθ}`.
pub fn expi<T: Real>(theta: &T) -> Complex<T> {
    let (s, c) = theta.sin_cos();
    Complex::new(c, s)
}

pub fn cexp<T: Real>(z: &Complex<T>) -> Complex<T> {
    let m = z.re.exp();
    let (s, c) = z.im.sin_cos();
    Complex::new(c * &m, s * &m)
}

/// `e^z - 1`, accurate near `z = 0`.
pub fn cexpm1<T: Real>(z: &Complex<T>) -> Complex<T> {
    let em1 = z.re.exp_m1();
    let (s, c) = z.im.sin_cos();
    let half = z.im.clone() / T::from_u64(2);
    let sh = half.sin_cos().0;
    // e^a cos b - 1 = expm1(a) cos b - 2 sin^2(b/2)
    let re = em1.clone() * &c - T::from_u64(2) * sh.clone() * &sh;
    let im = (em1 + T::one()) * &s;
    Complex::new(re, im)
}

pub fn cabs<T: Real>(z: &Complex<T>) -> T {
    z.re.hypot(&z.im)
}

pub fn cabs_f64<T: Real>(z: &Complex<T>) -> f64 {
    z.re.to_f64().hypot(z.im.to_f64())
}

pub fn cpowu<T: Real>(z: &Complex<T>, mut n: u64) -> Complex<T> {
    let mut base = z.clone();
    let mut acc = cone();
    while n > 0 {
        if n & 1 == 1 {
            acc = cmul(&acc, &base);
        }
        n >>= 1;
        if n > 0 {
            base = cmul(&base, &base);
        }
    }
    acc
}

/// Powers `z^0, ..., z^n`.
pub fn cpowers<T: Real>(z: &Complex<T>, n: usize) -> Vec<Complex<T>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(cone());
    for k in 1..=n {
        let next = cmul(&out[k - 1], z);
        out.push(next);
    }
    out
}

pub fn is_czero<T: Real>(z: &Complex<T>) -> bool {
    z.re.is_zero() && z.im.is_zero()
}

pub fn cconj<T: Real>(z: &Complex<T>) -> Complex<T> {
    Complex::new(z.re.clone(), -z.im.clone())
}

pub fn cis_one<T: Real>(z: &Complex<T>) -> bool {
    z.re.is_one() && z.im.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm1_near_zero() {
        let z = Complex::new(1e-12, -2e-12);
        let e = cexpm1(&z);
        assert!((e.re - (1e-12 - 1.5e-24)).abs() < 1e-27);
        assert!((e.im + 2e-12 + 2e-24).abs() < 1e-27);
    }

    #[test]
    fn powers_agree() {
        let z = Complex::new(0.3f64, -0.7);
        let p = cpowu(&z, 11);
        let q = cpowers(&z, 11)[11];
        assert!((p - q).norm() < 1e-15);
    }
}
