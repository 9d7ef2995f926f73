use rug::float::Constant;
use rug::Float;
use zetablocks::context::{
    complex_inv_power, reduce_mod_2pi, required_mantissa_bits, roundoff_estimate,
};
use zetablocks::{ComplexPoint, Context, Error, Mpf, PrecisionContext, Real, Real128, Real256};

/// `x - 2π round(x/2π)` with 1000-bit arithmetic.
fn reference_reduction(x: &str) -> Float {
    let x = Float::with_val(1000, Float::parse(x).unwrap());
    let two_pi = Float::with_val(1000, Constant::Pi) * 2u32;
    let k = Float::with_val(1000, &x / &two_pi).round();
    x - two_pi * k
}

#[test]
fn precision_context_floor_and_epsilon() {
    assert!(matches!(PrecisionContext::new(32), Err(Error::Parameter(_))));
    for bits in [53u32, 64, 113, 128, 256] {
        let p = PrecisionContext::new(bits).unwrap();
        assert_eq!(p.mantissa_bits(), bits);
        assert_eq!(p.epsilon_mach(), 2f64.powi(1 - bits as i32));
    }
    assert_eq!(Context::<Real128>::new().bits(), 128);
    assert_eq!(Context::<Real128>::new().with_guard_bits(16).precision().guard_bits(), 16);
}

#[test]
fn complex_point_invariants() {
    assert!(ComplexPoint::<f64>::from_f64(0.0, 1.0).is_err());
    assert!(ComplexPoint::<f64>::from_f64(-1.0, 1.0).is_err());
    assert!(ComplexPoint::<f64>::from_f64(f64::NAN, 1.0).is_err());
    let s = ComplexPoint::<f64>::from_f64(3.0, 4.0).unwrap();
    assert_eq!(s.abs_s(), 5.0);
    assert_eq!(s.conductor_q(), 8.0);
    let tiny = ComplexPoint::<f64>::from_f64(1e-9, 0.0).unwrap();
    assert!(tiny.conductor_q() >= 3.0 && tiny.conductor_q().ln() > 0.0);
}

#[test]
fn t_parsed_beyond_double_precision() {
    let s = ComplexPoint::<Real256>::parse("0.5", "100000000000000000000.000000000000000001").unwrap();
    let frac = s.t().0.clone() - Float::with_val(256, Float::parse("1e20").unwrap());
    assert!((frac.to_f64() - 1e-18).abs() < 1e-30);
}

#[test]
fn reduction_small_cases() {
    assert_eq!(reduce_mod_2pi(&0.0f64).unwrap(), 0.0);
    let two_pi = 2.0 * std::f64::consts::PI;
    assert!(reduce_mod_2pi(&two_pi).unwrap().abs() <= 4.0 * f64::EPSILON);
    let x = Real128::pi() * Real128::from_u64(2);
    let r = reduce_mod_2pi(&x).unwrap();
    assert!(r.abs().to_f64() <= 4.0 * 2f64.powi(-127) * 4.0);
    assert!(matches!(reduce_mod_2pi(&f64::INFINITY), Err(Error::Domain(_))));
    assert!(reduce_mod_2pi(&f64::NAN).is_err());
}

#[test]
fn reduction_of_ten_to_the_ten_matches_reference() {
    let want = reference_reduction("1e10");
    let got = reduce_mod_2pi(&Real128::from_u64(10_000_000_000)).unwrap();
    let err = (got.0.clone() - &want).abs().to_f64();
    assert!(err <= 4.0 * 2f64.powi(-127) * 4.0, "err = {err:e}");
    let got = reduce_mod_2pi(&1e10f64).unwrap();
    assert!((got - want.to_f64()).abs() <= 4.0 * f64::EPSILON * 4.0);
    let got = reduce_mod_2pi(&Real256::from_u64(10_000_000_000)).unwrap();
    assert!((got.0 - &want).abs().to_f64() <= 4.0 * 2f64.powi(-255) * 4.0);
}

#[test]
fn reduction_is_periodic() {
    let two_pi = Real128::pi() * Real128::from_u64(2);
    let x = Real128::parse_decimal("1.2345678901234567890123456789").unwrap();
    let base = reduce_mod_2pi(&x).unwrap();
    for k in [-1_000_000i64, -77, -1, 1, 3, 1000, 999_999] {
        let shifted = x.clone() + two_pi.clone() * Real128::from_i64(k);
        let r = reduce_mod_2pi(&shifted).unwrap();
        // The shifted argument itself carries one rounding at its own magnitude.
        let ulp = 2f64.powi(-127) * shifted.abs().to_f64().max(1.0);
        assert!((r - &base).abs().to_f64() <= 8.0 * ulp, "k = {k}");
    }
}

#[test]
fn inverse_power_small_cases() {
    let ctx = Context::<f64>::new();
    let s = ComplexPoint::<f64>::from_f64(0.7, -31.0).unwrap();
    assert_eq!(complex_inv_power(1, &s, &ctx), num_complex::Complex::new(1.0, 0.0));
    let two = ComplexPoint::<f64>::from_f64(2.0, 0.0).unwrap();
    let v = complex_inv_power(4, &two, &ctx);
    assert!((v.re - 0.0625).abs() < 1e-17 && v.im == 0.0);
}

#[test]
fn inverse_power_matches_high_precision_reference() {
    // 7^{-1/2 - 10^4 i} at 512 bits, written out independently of the library.
    let p = 512;
    let ln7 = Float::with_val(p, 7u32).ln();
    let modulus = (-Float::with_val(p, &ln7 / 2u32)).exp();
    let (sn, cs) = Float::with_val(p, -(ln7 * 10_000u32)).sin_cos(Float::new(p));
    let want_re = Float::with_val(p, &modulus * &cs);
    let want_im = Float::with_val(p, &modulus * &sn);

    let ctx = Context::<Real256>::new();
    let s = ComplexPoint::<Real256>::parse("0.5", "10000").unwrap();
    let v = complex_inv_power(7, &s, &ctx);
    assert!((v.re.0 - &want_re).abs().to_f64() < 1e-70);
    assert!((v.im.0 - &want_im).abs().to_f64() < 1e-70);

    let ctx = Context::<f64>::new();
    let s = ComplexPoint::<f64>::from_f64(0.5, 1e4).unwrap();
    let v = complex_inv_power(7, &s, &ctx);
    // In double precision the phase t·ln 7 carries an absolute error near eps·t·ln 7.
    let tol = 8.0 * f64::EPSILON * 1e4 * 7f64.ln() * 7f64.powf(-0.5);
    assert!((v.re - want_re.to_f64()).abs() < tol);
    assert!((v.im - want_im.to_f64()).abs() < tol);
}

fn modulus_check<T: Real>(sigma: f64, t: f64) {
    let ctx = Context::<T>::new();
    let eps = ctx.eps();
    let s = ComplexPoint::<T>::from_f64(sigma, t).unwrap();
    let sc = s.conj();
    for n in [2u64, 3, 10, 97, 1000, 123_457, 99_999_989] {
        let v = complex_inv_power(n, &s, &ctx);
        let want = (n as f64).powf(-sigma);
        let scale = (t.abs() * (n as f64).ln() * 2f64.powi(53 - ctx.bits() as i32)).max(1.0);
        let got = (v.re.to_f64().powi(2) + v.im.to_f64().powi(2)).sqrt();
        // The comparison itself runs in f64.
        let tol = (8.0 * eps * scale).max(4.0 * f64::EPSILON);
        assert!((got / want - 1.0).abs() <= tol, "n = {n}");
        let w = complex_inv_power(n, &sc, &ctx);
        let prod = zetablocks::complex::cmul(&v, &w);
        let pm = zetablocks::complex::cabs_f64(&prod);
        assert!((pm / (n as f64).powf(-2.0 * sigma) - 1.0).abs() <= (16.0 * eps).max(8.0 * f64::EPSILON));
    }
}

#[test]
fn inverse_power_modulus() {
    modulus_check::<f64>(0.5, 1e6);
    modulus_check::<Real128>(0.5, 1e10);
    modulus_check::<Mpf<64>>(1.5, -3e3);
}

#[test]
fn roundoff_model_examples() {
    assert_eq!(roundoff_estimate(0.0, 100, 53), 0.0);
    let ln = (1e11f64).ln();
    let model = f64::EPSILON * 1e10 * (ln * ln * ln / 3.0).sqrt();
    let got = roundoff_estimate(1e10, 100_000_000_000, 53);
    assert!((got / model - 1.0).abs() < 1e-12);
    assert!(got > 1e-5 && got < 1e-3);
    assert!(roundoff_estimate(1e4, 100_000, 113) < 1e-25);
    // Direct sum below the switch-over.
    let direct: f64 = (2..1000).map(|n| (n as f64).ln().powi(2) / n as f64).sum();
    let want = f64::EPSILON * 50.0 * direct.sqrt();
    assert!((roundoff_estimate(50.0, 1000, 53) / want - 1.0).abs() < 1e-12);
}

#[test]
fn roundoff_model_is_monotone() {
    let mut prev = 0.0;
    for m in [2u64, 10, 1000, 999_999, 1_000_000, 1_000_001, 10_000_000, 1 << 40] {
        let r = roundoff_estimate(1e3, m, 53);
        assert!(r >= prev, "M = {m}");
        prev = r;
    }
    let mut prev = 0.0;
    for t in [0.0, 1.0, 10.0, -100.0, 1e8] {
        let r = roundoff_estimate(t, 5000, 53);
        assert!(r >= prev);
        prev = r;
    }
}

#[test]
fn required_bits_inverts_the_model() {
    assert_eq!(required_mantissa_bits(0.0, 100, 1e-9), 53);
    assert_eq!(required_mantissa_bits(10.0, 100, 1e-6), 53);
    let (t, m, target) = (1e10, 100_000_000_000u64, 1e-10);
    let bits = required_mantissa_bits(t, m, target);
    assert!(roundoff_estimate(t, m, bits) <= target / 10.0);
    assert!(roundoff_estimate(t, m, bits - 1) > target / 10.0);
    // 2^{1-b} · 1e10 · ((ln 1e11)^3/3)^{1/2} ≤ 1e-11 first holds at b = 77.
    assert_eq!(bits, 77);
}
